import itertools
import math
import typing as t

import numpy as np
import pytest

from localqft import (
    ConfinementError,
    GeometryError,
    InvalidParameterError,
    ResolutionError,
    Tabulated1D,
    box_modes,
    check_orthonormality,
    overlap_matrix,
    quadratic_modes,
    separable_modes,
    solve_modes_fd,
    static_curved_modes_1d,
)
from localqft.spectrum import fd_operator, profile_table


parametrize = pytest.mark.parametrize


def well(points: int) -> Tabulated1D:
    grid = np.linspace(-5.0, 5.0, points)
    return Tabulated1D(grid, grid**2)


@pytest.fixture
def oscillator() -> Tabulated1D:
    grid = np.linspace(-10.0, 10.0, 1025)
    return Tabulated1D(grid, 0.5 * grid**2)


def test_box_modes_spectrum():
    """Test that box eigenfrequencies follow √(m² + (π/d)²|n|²) in sorted order."""
    basis = box_modes(1.0, 0.0, 3)
    assert len(basis) == 27
    assert basis[0].index == (1, 1, 1)
    assert basis[0].omega == pytest.approx(5.441398, abs=1e-6)
    assert np.all(np.diff(basis.omegas) >= 0)

    massive = box_modes(2.0, 1.5, 2)
    mode = massive.mode((1, 2, 1))
    assert mode.omega == pytest.approx(math.sqrt(1.5**2 + (math.pi / 2.0) ** 2 * 6))


def test_box_modes_ties_sorted_by_index():
    """Test that degenerate modes are ordered by index."""
    basis = box_modes(1.0, 0.0, 2)
    assert [mode.index for mode in basis.modes[1:4]] == [(1, 1, 2), (1, 2, 1), (2, 1, 1)]


def test_quadratic_modes_spectrum():
    """Test that the quadratic ground mode has ω = √3/ℓ and a Gaussian width ℓ."""
    basis = quadratic_modes(1.0, 0.0, 2)
    assert basis[0].omega == pytest.approx(math.sqrt(3.0))
    assert basis[0].gaussian_width == 1.0
    assert basis.mode((1, 0, 0)).gaussian_width is None
    assert basis.mode((0, 0, 1)).omega == pytest.approx(math.sqrt(5.0))


@parametrize(
    "basis",
    [
        box_modes(1.3, 0.0, 3, origin=(0.5, -1.0, 2.0)),
        box_modes(1.0, 2.0, 2),
        quadratic_modes(0.7, 0.0, 2, center=(0.3, 0.0, -0.2)),
    ],
)
def test_analytic_bases_orthonormal(basis):
    """Test that analytic bases are KG orthonormal."""
    report = check_orthonormality(basis)
    assert report.passed
    assert report.pairs == len(basis) * (len(basis) + 1) // 2


def test_overlap_matrix_is_read_only_and_memoized():
    """Test that overlap matrices are cached per basis content."""
    first = overlap_matrix(box_modes(1.0, 0.0, 1), box_modes(1.0, 0.0, 1))
    second = overlap_matrix(box_modes(1.0, 0.0, 1), box_modes(1.0, 0.0, 1))
    assert first is second
    assert first[0, 0] == pytest.approx(1.0 / (2.0 * math.pi * math.sqrt(3.0)))
    with pytest.raises(ValueError):
        first[0, 0] = 0.0


def test_solve_modes_fd_oscillator(oscillator: Tabulated1D):
    """Test that finite differences reproduce ω = √(2n + 1) for V = x²/2."""
    basis = solve_modes_fd(oscillator, 0.0, 5)
    expected = np.sqrt(2.0 * np.arange(5) + 1.0)
    assert np.allclose(basis.omegas, expected, rtol=1e-3)
    assert check_orthonormality(basis).passed

    operator = fd_operator(oscillator, 0.0)
    assert operator.residual(basis[0]) < 1e-6


def test_solve_modes_fd_converges_at_second_order():
    """Test that halving the grid spacing cuts the ground eigenvalue error by four."""
    errors = []
    for points in (257, 513, 1025):
        grid = np.linspace(-10.0, 10.0, points)
        basis = solve_modes_fd(Tabulated1D(grid, 0.5 * grid**2), 0.0, 1)
        errors.append(abs(basis[0].omega ** 2 - 1.0))

    assert errors[0] > errors[1] > errors[2] > 0
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.8 <= coarse / fine <= 4.2


def test_quadratic_spectrum_symmetric_under_axis_permutation():
    """Test that permuting (n_x, n_y, n_z) leaves the quadratic eigenfrequency unchanged."""
    basis = quadratic_modes(0.7, 0.0, 3, center=(0.3, 0.0, -0.2))
    for mode in basis:
        for permuted in itertools.permutations(mode.index):
            assert basis.mode(permuted).omega == pytest.approx(mode.omega, rel=1e-14)


def test_solve_modes_fd_resamples_nonuniform_grid():
    """Test that non-uniform tabulations are resampled before solving."""
    grid = np.sort(np.concatenate([np.linspace(-10.0, 10.0, 700), [0.013, 0.027]]))
    basis = solve_modes_fd(Tabulated1D(grid, 0.5 * grid**2), 0.0, 3)
    assert np.allclose(basis.omegas, [1.0, math.sqrt(3.0), math.sqrt(5.0)], rtol=1e-3)


def test_solve_modes_fd_mass_shift(oscillator: Tabulated1D):
    """Test that a mass shifts ω² by m²."""
    massless = solve_modes_fd(oscillator, 0.0, 3)
    massive = solve_modes_fd(oscillator, 2.0, 3)
    assert np.allclose(massive.omegas**2, massless.omegas**2 + 4.0, rtol=1e-12)


@parametrize(
    "potential, count, exc",
    [
        (Tabulated1D(np.linspace(0.0, 1.0, 128), np.ones(128)), 2, ConfinementError),
        (well(128), 17, ResolutionError),
        (well(32), 1, InvalidParameterError),
        (well(128), 0, InvalidParameterError),
    ],
)
def test_solve_modes_fd_errors(potential: Tabulated1D, count: int, exc: t.Type[Exception]):
    """Test that unconfined, under-resolved and malformed requests are rejected."""
    with pytest.raises(exc):
        solve_modes_fd(potential, 0.0, count)


def test_solve_modes_fd_walls():
    """Test that hard walls confine a flat potential."""
    grid = np.linspace(0.0, 1.0, 513)
    basis = solve_modes_fd(Tabulated1D(grid, np.ones_like(grid), walls=True), 0.0, 2)
    assert basis.omegas[0] == pytest.approx(math.sqrt(math.pi**2 + 2.0), rel=1e-4)


@parametrize(
    "grid, values",
    [
        ([0.0, 1.0, 0.5], [0.0, 0.0, 0.0]),
        ([0.0, 1.0], [0.0]),
        ([0.0, 1.0], [0.0, math.inf]),
    ],
)
def test_tabulated_validation(grid: list, values: list):
    """Test that malformed tabulations are rejected."""
    with pytest.raises(InvalidParameterError):
        Tabulated1D(np.array(grid), np.array(values))


def test_static_curved_unit_background_matches_flat(oscillator: Tabulated1D):
    """Test that unit lapse and metric reproduce the flat solver exactly."""
    flat = solve_modes_fd(oscillator, 0.5, 4)
    ones = np.ones_like(oscillator.grid)
    curved = static_curved_modes_1d(ones, ones, oscillator, 0.5, 4)
    assert np.array_equal(curved.omegas, flat.omegas)


def test_static_curved_constant_lapse_redshifts(oscillator: Tabulated1D):
    """Test that a constant lapse β scales every eigenfrequency by β."""
    flat = solve_modes_fd(oscillator, 0.0, 4)
    curved = static_curved_modes_1d(lambda x: np.full_like(x, 2.0), 1.0, oscillator, 0.0, 4)
    assert np.allclose(curved.omegas, 2.0 * flat.omegas, rtol=1e-12)
    assert curved.potential.lapse_at(0.3) == 2.0
    assert check_orthonormality(curved).passed


def test_static_curved_rejects_non_positive_lapse(oscillator: Tabulated1D):
    """Test that a lapse touching zero raises GeometryError."""
    lapse = np.ones_like(oscillator.grid)
    lapse[10] = 0.0
    with pytest.raises(GeometryError):
        static_curved_modes_1d(lapse, 1.0, oscillator, 0.0, 2)


def test_separable_modes_match_quadratic(oscillator: Tabulated1D):
    """Test that three oscillator axes combine into the 3D quadratic spectrum."""
    axis = solve_modes_fd(oscillator, 0.0, 3)
    basis = separable_modes([axis, axis, axis], 0.0, 2)
    analytic = quadratic_modes(1.0, 0.0, 1)
    assert len(basis) == 8
    assert np.allclose(basis.omegas, analytic.omegas, rtol=1e-3)
    assert check_orthonormality(basis).passed


def test_separable_modes_rejects_massive_axes(oscillator: Tabulated1D):
    """Test that axis bases must be massless."""
    axis = solve_modes_fd(oscillator, 1.0, 2)
    with pytest.raises(InvalidParameterError):
        separable_modes([axis, axis, axis], 0.0, 2)


def test_basis_lookup_and_summary():
    """Test index lookup, centroid and the JSON summary."""
    basis = box_modes(2.0, 0.0, 2, origin=(1.0, 1.0, 1.0))
    assert basis.mode([2, 1, 1]).index == (2, 1, 1)
    assert basis.centroid() == pytest.approx((2.0, 2.0, 2.0))
    with pytest.raises(InvalidParameterError):
        basis.mode((3, 1, 1))

    summary = basis.to_dict()
    assert summary["potential"] == "DirichletBox"
    assert summary["modes"][0] == {"index": [1, 1, 1], "omega": basis[0].omega}


def test_profile_table_columns():
    """Test that profile tables sample the lowest modes along x."""
    x, columns = profile_table(box_modes(1.0, 0.0, 2), count=2, samples=11)
    assert len(x) == 11
    assert list(columns) == ["phi_1_1_1", "phi_1_1_2"]
    assert columns["phi_1_1_1"][0] == 0.0
    assert np.argmax(columns["phi_1_1_1"]) == 5
