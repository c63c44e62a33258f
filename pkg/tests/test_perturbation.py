import math

import numpy as np
import pytest

from localqft import (
    BoxField,
    ConsistencyError,
    CouplingConfig,
    DiscreteSmearedWightman,
    Excitation,
    FieldSpec,
    InvalidParameterError,
    QuadratureError,
    ReducedState,
    ResponsePoint,
    box_modes,
    build_lambda,
    coherence_02,
    excitation_probability,
    gaussian_window,
    quadratic_modes,
    reduced_state,
    response_curve,
    spurious_term_residual,
    spurious_term_scale,
    udw_reduced_state,
)


parametrize = pytest.mark.parametrize


class SkewedWightman(DiscreteSmearedWightman):
    """Mode sum whose momentum path is deliberately off by a factor."""

    def __init__(self, omegas, weights, factor):
        super().__init__(omegas, weights)
        self.factor = factor

    def spectral_response(self, window, gap, controls):
        value, error = super().spectral_response(window, gap, controls)
        return self.factor * value, error


class FailingWightman(DiscreteSmearedWightman):
    def spectral_response(self, window, gap, controls):
        raise QuadratureError("did not converge")


@pytest.fixture
def cfg() -> CouplingConfig:
    mode = quadratic_modes(0.5, 0.0, 0)[0]
    smearing = build_lambda(gaussian_window(1.0), mode)
    return CouplingConfig(0.1, smearing, FieldSpec(epsilon=1e-5))


@pytest.fixture
def box_cfg() -> CouplingConfig:
    inner = box_modes(1.0, 0.0, 2, origin=(0.5, 0.5, 0.5))
    smearing = build_lambda(gaussian_window(1.0), inner.mode((1, 1, 1)))
    return CouplingConfig(1.0, smearing, BoxField(2.0, n_cap=3))


def test_coupling_config_validation(cfg: CouplingConfig):
    """Test that non-finite couplings and small truncations are rejected."""
    with pytest.raises(InvalidParameterError):
        cfg.with_lambda(math.nan)
    with pytest.raises(InvalidParameterError):
        CouplingConfig(0.1, cfg.smearing, cfg.field, dim=2)


def test_excitation_paths_agree(cfg: CouplingConfig):
    """Test that the lag-space and momentum-space probabilities agree."""
    excitation = excitation_probability(cfg)
    assert excitation.value > 0
    assert excitation.consistent
    assert excitation.path_delta <= 1e-6 * excitation.value
    assert excitation.error < 1e-6 * excitation.value


def test_excitation_paths_agree_for_box_field(box_cfg: CouplingConfig):
    """Test path agreement for the discrete mode sum of a confined field."""
    excitation = excitation_probability(box_cfg)
    assert excitation.value > 0
    assert excitation.consistent


def test_excitation_scales_with_lambda_squared(cfg: CouplingConfig):
    """Test that doubling λ multiplies P by four."""
    small = excitation_probability(cfg).value
    large = excitation_probability(cfg.with_lambda(0.2)).value
    assert large / small == pytest.approx(4.0, rel=1e-12)


def test_zero_coupling_gives_vacuum(cfg: CouplingConfig):
    """Test that λ = 0 leaves the mode in its ground state."""
    state = reduced_state(cfg.with_lambda(0.0))
    expected = np.zeros((3, 3))
    expected[0, 0] = 1.0
    assert np.array_equal(state.rho, expected)
    assert excitation_probability(cfg.with_lambda(0.0)).value == 0.0


def test_reduced_state_structure(cfg: CouplingConfig):
    """Test unit trace, Hermiticity and the allowed negativity of the O(λ²) state."""
    state = reduced_state(cfg)
    assert state.order == "lambda^2"
    assert state.trace == pytest.approx(1.0, abs=1e-15)
    assert state.hermiticity_defect < 1e-15
    assert not state.flagged
    assert state.rho[1, 1].real == pytest.approx(excitation_probability(cfg).value)
    assert state.rho[2, 0] == pytest.approx(coherence_02(cfg))
    assert np.min(state.eigenvalues) >= -state.allowance


def test_coherence_mirror_is_conjugate(cfg: CouplingConfig):
    """Test that ρ₀₂ from its own integrand is the conjugate of ρ₂₀."""
    c20 = coherence_02(cfg)
    c02 = coherence_02(cfg, mirrored=True)
    assert c20 != 0
    assert c02 == pytest.approx(np.conj(c20), rel=1e-12)


def test_udw_state_matches_mode_state(cfg: CouplingConfig):
    """Test that the oscillator detector and the mode state agree at second order."""
    mode_state = reduced_state(cfg)
    detector_state = udw_reduced_state(cfg)
    excitation = excitation_probability(cfg)
    assert detector_state.trace == pytest.approx(1.0, abs=1e-14)
    assert mode_state.frobenius_distance(detector_state) <= 2.0 * excitation.threshold


def test_udw_state_larger_truncation(cfg: CouplingConfig):
    """Test that a larger Fock truncation only pads the second order state."""
    small = udw_reduced_state(cfg)
    large = udw_reduced_state(CouplingConfig(cfg.lam, cfg.smearing, cfg.field, dim=5))
    assert large.dim == 5
    assert small.frobenius_distance(large) < 1e-15


def test_response_curve_shape(cfg: CouplingConfig):
    """Test that de-excitation dominates and P falls off with the gap."""
    gaps = [-2.0, 1.0, 2.0, 4.0]
    points = response_curve(cfg, gaps, threads=2)
    assert [point.Omega for point in points] == gaps
    assert all(point.passed for point in points)
    values = [point.P for point in points]
    assert values[0] > values[1] > values[2] > values[3] > 0


@parametrize("gaps", [[2.0, 1.0], [1.0, math.inf]])
def test_response_curve_rejects_bad_gaps(cfg: CouplingConfig, gaps: list):
    """Test that unsorted or non-finite sweeps are rejected."""
    with pytest.raises(InvalidParameterError):
        response_curve(cfg, gaps)


def test_response_curve_marks_inconsistent_points(box_cfg: CouplingConfig):
    """Test that a path disagreement marks the point without stopping the sweep."""
    kernel = SkewedWightman(np.array([2.0, 3.0]), np.array([0.1, 0.2]), factor=2.0)
    skewed = CouplingConfig(1.0, box_cfg.smearing, box_cfg.field, kernel=kernel)
    points = response_curve(skewed, [1.0, 2.0])
    assert len(points) == 2
    assert not points[0].passed
    assert "path disagreement" in points[0].failure
    assert points[0].P > 0

    with pytest.raises(ConsistencyError) as info:
        excitation_probability(skewed)
    assert info.value.momentum == pytest.approx(2.0 * info.value.direct, rel=1e-9)


def test_response_curve_keeps_failed_points(box_cfg: CouplingConfig):
    """Test that solver failures become NaN rows with a reason."""
    kernel = FailingWightman(np.array([2.0]), np.array([0.1]))
    failing = CouplingConfig(1.0, box_cfg.smearing, box_cfg.field, kernel=kernel)
    (point,) = response_curve(failing, [1.0])
    assert not point.passed
    assert math.isnan(point.P)
    assert point.failure == "did not converge"
    assert point.to_row()["lambda"] == 1.0


def test_response_point_row(cfg: CouplingConfig):
    """Test the CSV row layout and the Cauchy-Schwarz scale."""
    point = cfg.response().at(cfg.lam)
    row = point.to_row()
    assert list(row) == [
        "Omega",
        "T",
        "ell",
        "lambda",
        "P",
        "err_P",
        "Re_C20",
        "Im_C20",
        "path_delta",
        "eps_sensitivity",
    ]
    assert row["ell"] == 0.5
    assert row["T"] == 1.0
    assert point.P00 == pytest.approx(1.0 - point.P)
    expected = math.sqrt(2.0 * point.P * (1.0 - point.P00))
    assert point.cauchy_schwarz_bound == pytest.approx(expected)
    assert point.cauchy_schwarz_bound > 0


def test_halving_epsilon_barely_moves_p(cfg: CouplingConfig):
    """Test that P changes by less than 1e-4 relative when ε halves from its default."""
    full = excitation_probability(cfg).value
    halved_cfg = CouplingConfig(cfg.lam, cfg.smearing, FieldSpec(epsilon=0.5 * cfg.field.epsilon))
    halved = excitation_probability(halved_cfg).value
    change = abs(halved - full) / full
    assert change < 1e-4

    point = cfg.response().at(cfg.lam)
    assert point.eps_sensitivity == pytest.approx(change, rel=1e-6, abs=1e-12)
    assert point.to_row()["eps_sensitivity"] == point.eps_sensitivity


def test_box_field_without_regulator_has_no_epsilon_sensitivity(box_cfg: CouplingConfig):
    """Test that an unregulated mode sum reports zero sensitivity."""
    (point,) = response_curve(box_cfg, [1.0])
    assert point.eps_sensitivity == 0.0


def test_crossing_symmetry(cfg: CouplingConfig):
    """Test that conjugating the smearing maps P(Ω) onto the de-excitation value P(-Ω)."""
    gap = cfg.smearing.gap
    conjugated, _ = cfg.response().term(-gap, gap, "full")
    deexcitation = excitation_probability(cfg.with_gap(-gap))
    assert deexcitation.value > excitation_probability(cfg).value
    assert cfg.lam**2 * conjugated.real == pytest.approx(deexcitation.direct, rel=1e-12)
    assert cfg.lam**2 * conjugated.real == pytest.approx(deexcitation.value, rel=1e-5)


def test_cauchy_schwarz_bound_clips_negative_probability():
    """Test that a negative P within its error gives a zero estimate."""
    point = ResponsePoint(Omega=1.0, P=-1e-15, err=1e-14, C20=0j, path_delta=0.0)
    assert point.cauchy_schwarz_bound == 0.0


def test_excitation_scaled_and_raise():
    """Test scaling and the consistency guard of Excitation."""
    excitation = Excitation(1.0, 0.1, 1.0, 1.05, 0.01)
    assert not excitation.consistent
    with pytest.raises(ConsistencyError):
        excitation.raise_for_consistency()

    scaled = excitation.scaled(4.0)
    assert scaled.value == 4.0
    assert scaled.threshold == 0.04
    assert scaled.path_delta == pytest.approx(0.2)


def test_reduced_state_symmetrizes_and_flags():
    """Test that input is symmetrized, its defect kept and negativity flagged."""
    rho = np.array([[1.1, 0.2], [0.0, -0.1]])
    state = ReducedState(rho, allowance=0.01)
    assert state.hermiticity_defect == pytest.approx(0.2)
    assert np.allclose(state.rho, state.rho.conj().T)
    assert state.flagged

    with pytest.raises(InvalidParameterError):
        ReducedState(np.zeros((2, 3)))


def test_reduced_state_helpers():
    """Test the two-level restriction, padded distance and summary."""
    rho = np.diag([0.7, 0.2, 0.1])
    state = ReducedState(rho)
    two_level = state.two_level()
    assert two_level.dim == 2
    assert state.frobenius_distance(two_level) == pytest.approx(0.1)

    summary = state.to_dict()
    assert summary["order"] == "lambda^2"
    assert summary["trace"] == pytest.approx(1.0)
    assert summary["real"][1][1] == 0.2
    assert summary["imag"] == [[0.0] * 3] * 3


def test_spurious_term_residual_vanishes(box_cfg: CouplingConfig):
    """Test that time-ordered traced-out terms cancel the unordered one."""
    inner = box_modes(1.0, 0.0, 2, origin=(0.5, 0.5, 0.5))
    others = [mode for mode in inner if mode.index != (1, 1, 1)]
    scale = spurious_term_scale(box_cfg, others, grid=80)
    residual = spurious_term_residual(box_cfg, others, grid=80)
    assert scale > 0
    assert residual <= 1e-6 * scale
    assert spurious_term_residual(box_cfg, others, symbolic=True) == 0.0


def test_spurious_term_rejects_accessible_mode(box_cfg: CouplingConfig):
    """Test that the accessible mode cannot be traced out."""
    with pytest.raises(InvalidParameterError):
        spurious_term_residual(box_cfg, [box_cfg.smearing.mode])
