import math

import numpy as np
import pytest

from localqft import (
    CompactWindow,
    ConstantWindow,
    GaussianWindow,
    InvalidParameterError,
    Tabulated1D,
    box_modes,
    build_lambda,
    gaussian_window,
    quadratic_modes,
    static_curved_modes_1d,
    static_redshift,
)
from localqft.quadrature import gauss_legendre
from localqft.smearing import Smearing, Window, smearing_table, spatial_fourier


parametrize = pytest.mark.parametrize


@pytest.fixture
def window() -> GaussianWindow:
    return gaussian_window(1.5)


def test_gaussian_window_normalization(window: GaussianWindow):
    """Test that ζ(0) = 1 and ∫ζ² = T."""
    assert float(window(0.0)) == 1.0
    assert window.square_integral() == 1.5
    assert Window.square_integral(window) == pytest.approx(1.5, rel=1e-12)


def test_gaussian_window_fourier_matches_quadrature(window: GaussianWindow):
    """Test that the closed-form transform matches the generic quadrature."""
    nu = np.array([-6.0, -1.0, 0.0, 0.5, 3.0, 9.0])
    assert np.allclose(window.fourier(nu), Window.fourier(window, nu), atol=1e-12)


@parametrize("kappa", [0.0, -2.0, 4.5])
def test_gaussian_window_correlation_matches_quadrature(window: GaussianWindow, kappa: float):
    """Test that the closed-form lag correlation matches the generic quadrature."""
    s = np.array([-4.0, -1.0, 0.0, 0.3, 2.5])
    closed = window.correlation(s, kappa)
    numeric = Window.correlation(window, s, kappa)
    assert np.allclose(closed, numeric, atol=1e-12)


def test_gaussian_window_cutoff_frequency(window: GaussianWindow):
    """Test that the closed-form cutoff agrees with the generic spectral scan."""
    cutoff = window.cutoff_frequency()
    ratio = abs(window.fourier(np.array([cutoff]))[0] / window.fourier(np.array([0.0]))[0]) ** 2
    assert ratio == pytest.approx(1e-16, rel=1e-6)

    scanned = Window.cutoff_frequency(window)
    assert cutoff <= scanned <= 1.25 * cutoff


@parametrize("kappa", [0.0, 1.7])
def test_constant_window_correlation(kappa: float):
    """Test that the constant window's overlap formula matches quadrature."""
    window = ConstantWindow(4.0, center=1.0)
    s = np.array([-5.0, -3.9, -1.0, 0.0, 2.0, 4.5])
    numeric = Window.correlation(window, s, kappa)
    assert np.allclose(window.correlation(s, kappa), numeric, atol=1e-12)
    assert window.cutoff_frequency() == math.inf


def test_constant_window_fourier():
    """Test that the constant window transform is a shifted sinc."""
    window = ConstantWindow(2.0, center=0.5)
    nu = np.array([0.0, 1.0, math.pi])
    assert np.allclose(window.fourier(nu), Window.fourier(window, nu), atol=1e-12)


def test_compact_window_shape():
    """Test that the bump peaks at 1 in the middle and vanishes outside its interval."""
    window = CompactWindow(-1.0, 3.0)
    assert float(window(1.0)) == 1.0
    assert np.all(window(np.array([-2.0, -1.0, 3.0, 4.0])) == 0.0)
    assert window.duration == 4.0
    assert window.lag_cutoff() == 4.0
    assert window.square_integral() > 0


@parametrize(
    "factory",
    [
        lambda: GaussianWindow(0.0),
        lambda: CompactWindow(1.0, 1.0),
        lambda: ConstantWindow(-1.0),
    ],
)
def test_window_validation(factory):
    """Test that degenerate windows are rejected."""
    with pytest.raises(InvalidParameterError):
        factory()


def test_build_lambda_gap_and_center(window: GaussianWindow):
    """Test that the gap is γω_N unless overridden and that the centre is the mode centre."""
    mode = box_modes(2.0, 0.0, 1, origin=(1.0, 0.0, -1.0))[0]
    smearing = build_lambda(window, mode, redshift=0.5)
    assert smearing.gap == pytest.approx(0.5 * mode.omega)
    assert smearing.center == pytest.approx((2.0, 1.0, 0.0))
    assert smearing.length_scale == 2.0
    assert build_lambda(window, mode, gap=-3.0).gap == -3.0

    with pytest.raises(InvalidParameterError):
        build_lambda(window, mode, redshift=0.0)
    with pytest.raises(InvalidParameterError):
        build_lambda(window, mode, gap=math.nan)


def test_lambda_components(window: GaussianWindow):
    """Test that Λ± are conjugate and reassemble to Λ⁻ when γ = 1."""
    mode = box_modes(1.0, 0.0, 1)[0]
    smearing = build_lambda(window, mode)
    t = np.array([-0.7, 0.0, 1.3])
    x = np.array([[0.5, 0.5, 0.5], [0.2, 0.4, 0.9], [0.1, 0.5, 0.5]])
    minus = smearing.lambda_minus(t, x)
    assert np.allclose(smearing.lambda_plus(t, x), np.conj(minus))
    assert np.allclose(smearing.reassemble(t, x), minus)
    assert np.allclose(np.abs(minus), smearing.static(t, x))
    assert np.allclose(spatial_fourier(smearing, np.zeros((1, 3))), mode.fourier(np.zeros((1, 3))))


@pytest.fixture
def offset_smearing(window: GaussianWindow) -> Smearing:
    mode = quadratic_modes(0.5, 0.0, 2, center=(0.3, 0.0, -0.2)).mode((1, 0, 2))
    return build_lambda(window, mode)


def test_spatial_fourier_reality(offset_smearing: Smearing):
    """Test that a real profile has Φ̃(-k) = conj Φ̃(k)."""
    k = np.random.default_rng(3).normal(scale=3.0, size=(50, 3))
    forward = spatial_fourier(offset_smearing, k)
    assert np.max(np.abs(forward.imag)) > 1e-3
    assert np.allclose(spatial_fourier(offset_smearing, -k), np.conj(forward), rtol=1e-12)


def test_spatial_fourier_parseval(offset_smearing: Smearing):
    """Test that (2π)⁻³∫|Φ̃|²d³k equals ∫|Φ|²d³x = 1/(2ω)."""
    nodes, weights = gauss_legendre(80)
    k_axis, w_axis = 16.0 * nodes, 16.0 * weights
    grid = np.stack(np.meshgrid(k_axis, k_axis, k_axis, indexing="ij"), axis=-1)
    w = np.einsum("i,j,k->ijk", w_axis, w_axis, w_axis)
    momentum = np.sum(w * np.abs(spatial_fourier(offset_smearing, grid)) ** 2) / (2.0 * np.pi) ** 3
    assert momentum == pytest.approx(1.0 / (2.0 * offset_smearing.mode.omega), rel=1e-6)


def test_static_redshift():
    """Test that flat potentials give γ = 1 and a lapse β gives 1/β at the mode centre."""
    mode = box_modes(1.0, 0.0, 1)[0]
    assert static_redshift(None, mode) == 1.0

    grid = np.linspace(-10.0, 10.0, 513)
    basis = static_curved_modes_1d(
        np.full_like(grid, 2.0), 1.0, Tabulated1D(grid, 0.5 * grid**2), 0.0, 1
    )
    assert static_redshift(basis.potential, basis[0]) == pytest.approx(0.5)


def test_smearing_table(window: GaussianWindow):
    """Test that the smearing table samples ζ and Φ_N through the mode centre."""
    smearing = build_lambda(window, box_modes(1.0, 0.0, 1)[0])
    table = smearing_table(smearing, samples=21)
    assert list(table) == ["t", "zeta", "x", "phi"]
    assert table["zeta"][10] == 1.0
    assert table["phi"][10] == pytest.approx(float(smearing.mode.profile(np.full(3, 0.5))))
