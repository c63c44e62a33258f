import math

import numpy as np
import pytest

from localqft import GaussianState, InvalidParameterError, single_mode_fock, symplectic_form


parametrize = pytest.mark.parametrize


def test_symplectic_form():
    """Test that J is antisymmetric and squares to -I."""
    J = symplectic_form(3)
    assert J.shape == (6, 6)
    assert np.array_equal(J.T, -J)
    assert np.array_equal(J @ J, -np.eye(6))


def test_vacuum_state():
    """Test that the vacuum is pure and saturates the uncertainty relation."""
    vacuum = GaussianState.vacuum(2)
    assert vacuum.modes == 2
    assert vacuum.purity == pytest.approx(1.0)
    assert vacuum.uncertainty_min_eigenvalue() == pytest.approx(0.0, abs=1e-15)
    assert np.array_equal(vacuum.mode_block(1), 0.5 * np.eye(2))


def test_thermal_state_purity():
    """Test that a thermal mode with ν = 3 has purity 1/3."""
    state = GaussianState(1.5 * np.eye(2))
    assert state.purity == pytest.approx(1.0 / 3.0)
    assert state.uncertainty_min_eigenvalue() > 0


@parametrize(
    "covariance",
    [
        np.eye(3),
        np.array([[1.0, 0.1], [0.0, 1.0]]),
        np.array([[1.0, math.nan], [math.nan, 1.0]]),
    ],
)
def test_covariance_validation(covariance: np.ndarray):
    """Test that odd-sized, asymmetric and non-finite covariances are rejected."""
    with pytest.raises(InvalidParameterError):
        GaussianState(covariance)


def test_covariance_is_read_only():
    """Test that the stored covariance cannot be modified."""
    state = GaussianState.vacuum(1)
    with pytest.raises(ValueError):
        state.covariance[0, 0] = 1.0


def test_mode_block_range():
    """Test that out-of-range mode indices are rejected."""
    with pytest.raises(InvalidParameterError):
        GaussianState.vacuum(2).mode_block(2)


def test_transformed_and_energy():
    """Test that a symplectic map preserves purity and energy is tr(Hσ)/2."""
    r = 0.4
    squeezer = np.diag([math.exp(-r), math.exp(r)])
    state = GaussianState.vacuum(1).transformed(squeezer)
    assert state.purity == pytest.approx(1.0)
    assert state.covariance[0, 0] == pytest.approx(0.5 * math.exp(-2.0 * r))
    assert state.energy(np.eye(2)) == pytest.approx(0.5 * math.cosh(2.0 * r))


def test_single_mode_fock_vacuum():
    """Test that the vacuum block maps to |0⟩⟨0|."""
    rho, deficit = single_mode_fock(0.5 * np.eye(2))
    expected = np.zeros((3, 3))
    expected[0, 0] = 1.0
    assert np.allclose(rho, expected, atol=1e-14)
    assert deficit == pytest.approx(0.0, abs=1e-14)


def test_single_mode_fock_squeezed_vacuum():
    """Test the squeezed vacuum amplitudes ρ₀₀ = 1/cosh r and ρ₂₀ = -tanh r/(√2 cosh r)."""
    r = 0.3
    block = 0.5 * np.diag([math.exp(-2.0 * r), math.exp(2.0 * r)])
    rho, deficit = single_mode_fock(block)
    assert rho[0, 0].real == pytest.approx(1.0 / math.cosh(r), rel=1e-10)
    assert rho[2, 0] == pytest.approx(-math.tanh(r) / (math.sqrt(2.0) * math.cosh(r)), rel=1e-10)
    assert abs(rho[1, 1]) < 1e-14
    assert 0 < deficit < 1e-2


def test_single_mode_fock_thermal():
    """Test that a thermal block gives geometric populations n̄ⁿ/(1 + n̄)ⁿ⁺¹."""
    occupation = 0.25
    rho, deficit = single_mode_fock((occupation + 0.5) * np.eye(2))
    ratio = occupation / (1.0 + occupation)
    assert rho[1, 1].real == pytest.approx(occupation / (1.0 + occupation) ** 2, rel=1e-10)
    assert abs(rho[0, 1]) < 1e-15
    assert deficit == pytest.approx(ratio**3, rel=1e-8)


@parametrize("args", [{"dim": 0}, {"dim": 41}, {"block": np.eye(3)}])
def test_single_mode_fock_validation(args: dict):
    """Test that bad blocks and truncations are rejected."""
    kwargs = {"block": 0.5 * np.eye(2), **args}
    with pytest.raises(InvalidParameterError):
        single_mode_fock(**kwargs)
