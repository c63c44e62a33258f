"""Zero-mean Gaussian states of M bosonic modes.

Quadratures are ordered ``r = (q_1 .. q_M, p_1 .. p_M)`` with ``a = (q + ip)/√2`` and
``[q_j, p_k] = iδ_jk``, so the vacuum covariance is ``I/2``.
"""

import dataclasses
import logging
import math
import typing as t

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError


logger = logging.getLogger(__name__)

#: Largest asymmetry accepted in a covariance matrix.
SYMMETRY_TOL = 1e-12

#: Fock cutoff used when converting a single-mode covariance to a density matrix.
DEFAULT_CUTOFF = 40


def symplectic_form(modes: int) -> np.ndarray:
    """
    Return ``J = [[0, I], [-I, 0]]`` for `modes` modes.

    Example:

        >>> symplectic_form(1).tolist()
        [[0.0, 1.0], [-1.0, 0.0]]
    """
    eye = np.eye(modes)
    zero = np.zeros((modes, modes))
    return np.block([[zero, eye], [-eye, zero]])


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianState:
    """
    Gaussian state with zero mean, described by its symmetrized covariance matrix.

    Attributes:
        covariance: ``σ_ij = ⟨{r_i, r_j}⟩/2``, shape ``(2M, 2M)``.
    """

    covariance: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.covariance, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] % 2:
            raise InvalidParameterError("covariance must be a square matrix of even size")
        if not np.all(np.isfinite(sigma)):
            raise InvalidParameterError("covariance must be finite")
        asymmetry = float(np.max(np.abs(sigma - sigma.T))) if sigma.size else 0.0
        if asymmetry > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(sigma)))):
            raise InvalidParameterError(f"covariance is not symmetric (defect {asymmetry:.3e})")
        sigma = 0.5 * (sigma + sigma.T)
        sigma.setflags(write=False)
        object.__setattr__(self, "covariance", sigma)

    @classmethod
    def vacuum(cls, modes: int) -> "GaussianState":
        return cls(0.5 * np.eye(2 * modes))

    @property
    def modes(self) -> int:
        return self.covariance.shape[0] // 2

    @property
    def purity(self) -> float:
        """Return ``tr ρ² = 1/(2^M √det σ)``."""
        sign, logdet = np.linalg.slogdet(self.covariance)
        if sign <= 0:
            return math.nan
        return math.exp(-self.modes * math.log(2.0) - 0.5 * logdet)

    def mode_block(self, index: int) -> np.ndarray:
        """Return the ``2×2`` covariance ``[[σ_qq, σ_qp], [σ_pq, σ_pp]]`` of one mode."""
        if not 0 <= index < self.modes:
            raise InvalidParameterError(f"mode {index!r} out of range for {self.modes} modes")
        rows = [index, self.modes + index]
        return self.covariance[np.ix_(rows, rows)].copy()

    def uncertainty_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``σ + iJ/2``; non-negative for physical states."""
        matrix = self.covariance + 0.5j * symplectic_form(self.modes)
        return float(np.min(np.linalg.eigvalsh(matrix)))

    def energy(self, hamiltonian: np.ndarray) -> float:
        """Return ``⟨r^T H r⟩/2 = tr(Hσ)/2`` for a quadratic Hamiltonian matrix."""
        return 0.5 * float(np.trace(hamiltonian @ self.covariance))

    def transformed(self, symplectic: np.ndarray) -> "GaussianState":
        """Return the state after the linear map ``r → S r``."""
        sigma = symplectic @ self.covariance @ symplectic.T
        return GaussianState(0.5 * (sigma + sigma.T))


def single_mode_fock(
    block: np.ndarray, dim: int = 3, cutoff: int = DEFAULT_CUTOFF
) -> t.Tuple[np.ndarray, float]:
    """
    Convert a single-mode covariance block to a truncated Fock density matrix.

    A zero-mean single-mode Gaussian state is a squeezed thermal state ``S(ξ)ρ_th S(ξ)†``. The
    symplectic eigenvalue ``ν = 2√det σ`` fixes the thermal occupation ``(ν - 1)/2`` and
    ``⟨a²⟩ = (σ_qq - σ_pp)/2 + iσ_qp = -e^{iφ}(ν/2)sinh 2r`` fixes the squeezing ``ξ = re^{iφ}``.
    Both are built in a `cutoff`-level space and the leading ``dim × dim`` block returned.

    Returns:
        tuple: Density matrix and the trace it misses, ``1 - tr ρ``.
    """
    block = np.asarray(block, dtype=float)
    if block.shape != (2, 2):
        raise InvalidParameterError("block must be 2x2")
    if not 1 <= dim <= cutoff:
        raise InvalidParameterError(f"dim must lie in [1, {cutoff}], got {dim!r}")

    nu = 2.0 * math.sqrt(max(np.linalg.det(block), 0.0))
    occupation = max(0.5 * (nu - 1.0), 0.0)
    moment = 0.5 * (block[0, 0] - block[1, 1]) + 1j * 0.5 * (block[0, 1] + block[1, 0])
    squeeze = 0.5 * math.asinh(2.0 * abs(moment) / nu) if nu > 0 else 0.0
    xi = squeeze * np.exp(1j * np.angle(-moment))

    levels = np.arange(cutoff)
    if occupation > 0:
        ratio = occupation / (occupation + 1.0)
        thermal = np.diag((1.0 - ratio) * ratio**levels).astype(complex)
    else:
        thermal = np.zeros((cutoff, cutoff), dtype=complex)
        thermal[0, 0] = 1.0

    a = np.diag(np.sqrt(levels[1:].astype(float)), 1).astype(complex)
    a2 = a @ a
    generator = 0.5 * (np.conj(xi) * a2 - xi * a2.conj().T)
    squeezer = expm(generator)
    rho = squeezer @ thermal @ squeezer.conj().T
    rho = rho[:dim, :dim]
    deficit = 1.0 - float(np.trace(rho).real)
    return rho, deficit
