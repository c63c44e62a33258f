"""Second order reduced state of the accessible mode and of the equivalent oscillator detector.

Every O(λ²) quantity here is a double time integral of the form

    ∫∫dt dt' ζ(t)ζ(t')e^{-iαt}e^{-iβt'} W_Φ(±(t - t'))

restricted to the whole plane or to ``t > t'``. Changing to the lag ``s = t - t'`` turns the inner
integral into the window correlation ``∫ζ(t)ζ(t - s)e^{-i(α+β)t}dt`` and leaves a single lag
integral on a mirrored Gauss-Legendre rule, so the ordered halves add up to the full plane node by
node. Matrix elements are computed with the coupling stripped off and scaled by λ² afterwards.
"""

from concurrent.futures import ThreadPoolExecutor
import dataclasses
import functools
import logging
import math
import typing as t

import numpy as np

from .errors import ConsistencyError, InvalidParameterError, LocalQFTError
from .kernel import BoxField, FieldSpec, SmearedWightman, smeared_wightman
from .memoization import memoize
from .quadrature import QuadratureControls, gauss_legendre, panel_nodes
from .smearing import Smearing
from .spectrum import Mode


logger = logging.getLogger(__name__)

#: Excitation probability above which the perturbative regime guard warns.
PERTURBATIVE_LIMIT = 0.1

#: Relative change of P under ε → ε/2 above which a point is logged as regulator dependent.
EPS_SENSITIVITY_LIMIT = 1e-4

#: Default Fock truncation of reduced states.
DEFAULT_DIM = 3

T_FIELD = t.Union[FieldSpec, BoxField]


@dataclasses.dataclass(frozen=True, eq=False)
class CouplingConfig:
    """
    Everything a second order computation depends on.

    Attributes:
        lam: Coupling strength λ, in units of energy².
        smearing: Accessible mode smearing.
        field: Free field the mode couples to.
        quad: Quadrature controls.
        dim: Fock truncation of the returned states.
        kernel: Explicit smeared two-point function overriding the one derived from `field`.
    """

    lam: float
    smearing: Smearing
    field: T_FIELD
    quad: QuadratureControls = QuadratureControls()
    dim: int = DEFAULT_DIM
    kernel: t.Optional[SmearedWightman] = None

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise InvalidParameterError(f"coupling must be finite, got {self.lam!r}")
        if not isinstance(self.dim, int) or self.dim < DEFAULT_DIM:
            raise InvalidParameterError(f"dim must be an integer of at least 3, got {self.dim!r}")

    def with_lambda(self, lam: float) -> "CouplingConfig":
        return dataclasses.replace(self, lam=lam)

    def with_gap(self, gap: float) -> "CouplingConfig":
        return dataclasses.replace(self, smearing=dataclasses.replace(self.smearing, gap=gap))

    def response(self) -> "SecondOrderResponse":
        """Return the coupling-independent integrals of this configuration."""
        if self.kernel is not None:
            return SecondOrderResponse(self.smearing, self.kernel, self.quad)
        return _response(self.smearing, self.field, self.quad)


@memoize("responses")
def _response(
    smearing: Smearing, field: T_FIELD, quad: QuadratureControls
) -> "SecondOrderResponse":
    kernel = smeared_wightman(field, smearing.mode, smearing.window, smearing.gap)
    return SecondOrderResponse(smearing, kernel, quad)


@dataclasses.dataclass(frozen=True)
class Excitation:
    """
    Excitation probability from both evaluation paths.

    Attributes:
        value: Reported probability, from the momentum path.
        error: Combined error estimate of both paths.
        direct: Lag-space value.
        momentum: Momentum-space value.
        threshold: Largest path disagreement accepted.
    """

    value: float
    error: float
    direct: float
    momentum: float
    threshold: float

    @property
    def path_delta(self) -> float:
        return abs(self.direct - self.momentum)

    @property
    def consistent(self) -> bool:
        return self.path_delta <= self.threshold

    def scaled(self, factor: float) -> "Excitation":
        return Excitation(
            self.value * factor,
            self.error * abs(factor),
            self.direct * factor,
            self.momentum * factor,
            self.threshold * abs(factor),
        )

    def raise_for_consistency(self) -> None:
        if not self.consistent:
            raise ConsistencyError(
                f"direct P={self.direct!r} and momentum P={self.momentum!r} differ by"
                f" {self.path_delta:.3e} > {self.threshold:.3e}",
                direct=self.direct,
                momentum=self.momentum,
            )


@dataclasses.dataclass(frozen=True)
class ResponsePoint:
    """
    One sweep point.

    Attributes:
        Omega: Detector gap.
        P: Excitation probability.
        err: Quadrature error estimate of P.
        C20: Coherence ``ρ₂₀``.
        path_delta: Disagreement of the two P paths.
        eps_sensitivity: Relative change of P when the regulator ε halves.
        lam: Coupling.
        T: Window duration.
        ell: Mode length scale.
        failure: Reason the point failed, if it did.
    """

    Omega: float
    P: float
    err: float
    C20: complex
    path_delta: float
    eps_sensitivity: float = math.nan
    lam: float = math.nan
    T: float = math.nan
    ell: float = math.nan
    failure: t.Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    @property
    def P00(self) -> float:
        """Vacuum population ``ρ₀₀ = 1 - P``."""
        return 1.0 - self.P

    @property
    def cauchy_schwarz_bound(self) -> float:
        """Diagnostic estimate ``√(2P·(1 - ρ₀₀))`` that ``|C20|`` is compared against."""
        return math.sqrt(2.0 * max(self.P, 0.0) * max(1.0 - self.P00, 0.0))

    def to_row(self) -> t.Dict[str, t.Any]:
        return {
            "Omega": self.Omega,
            "T": self.T,
            "ell": self.ell,
            "lambda": self.lam,
            "P": self.P,
            "err_P": self.err,
            "Re_C20": self.C20.real,
            "Im_C20": self.C20.imag,
            "path_delta": self.path_delta,
            "eps_sensitivity": self.eps_sensitivity,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class ReducedState:
    """
    Truncated Fock density matrix of one mode.

    The stored matrix is Hermitian by construction: the input is symmetrized and its departure
    from Hermiticity kept in `hermiticity_defect`.

    Attributes:
        rho: Density matrix in the Fock basis.
        order: ``"lambda^2"`` for perturbative states, ``"exact"`` for oracle states.
        allowance: Largest accepted negative eigenvalue magnitude.
        hermiticity_defect: ``max |ρ - ρ†|`` before symmetrization.
        flagged: Whether an eigenvalue fell below ``-allowance``.
    """

    rho: np.ndarray
    order: str = "lambda^2"
    allowance: float = 0.0
    hermiticity_defect: float = dataclasses.field(init=False, default=0.0)
    flagged: bool = dataclasses.field(init=False, default=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidParameterError("density matrix must be square")
        defect = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
        rho = 0.5 * (rho + rho.conj().T)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "hermiticity_defect", defect)
        flagged = bool(np.min(np.linalg.eigvalsh(rho)) < -self.allowance)
        object.__setattr__(self, "flagged", flagged)
        if flagged:
            logger.warning("reduced state eigenvalue below -%.3e", self.allowance)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    def frobenius_distance(self, other: "ReducedState") -> float:
        """Return ``‖ρ - σ‖_F`` with the smaller matrix padded by zeros."""
        size = max(self.dim, other.dim)
        a = np.zeros((size, size), dtype=complex)
        b = np.zeros((size, size), dtype=complex)
        a[: self.dim, : self.dim] = self.rho
        b[: other.dim, : other.dim] = other.rho
        return float(np.linalg.norm(a - b))

    def two_level(self) -> "ReducedState":
        """Restrict to the ``{|0⟩, |1⟩}`` block, the two-level detector limit."""
        return ReducedState(self.rho[:2, :2], order=self.order, allowance=self.allowance)

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "order": self.order,
            "dim": self.dim,
            "trace": self.trace,
            "flagged": self.flagged,
            "hermiticity_defect": self.hermiticity_defect,
            "real": self.rho.real.tolist(),
            "imag": self.rho.imag.tolist(),
        }


class SecondOrderResponse:
    """
    Coupling-independent O(λ²) integrals of one smearing against one smeared two-point function.

    Args:
        smearing: Accessible mode smearing.
        kernel: Smeared two-point function ``W_Φ``.
        quad: Quadrature controls.
    """

    def __init__(self, smearing: Smearing, kernel: SmearedWightman, quad: QuadratureControls):
        self.smearing = smearing
        self.kernel = kernel
        self.quad = quad
        self._terms: t.Dict[tuple, t.Tuple[complex, float]] = {}

        reach = smearing.window.lag_cutoff()
        frequency = kernel.max_frequency + 3.0 * abs(smearing.gap)
        panels = max(quad.panels, int(np.ceil(reach * frequency / np.pi)))
        self._rules = {
            "fine": _mirrored_rule(reach, panels, quad.order),
            "coarse": _mirrored_rule(reach, max(1, panels // 2), quad.order),
        }
        self._kernel_values = {
            (name, reverse): kernel(-nodes if reverse else nodes)
            for name, (nodes, _) in self._rules.items()
            for reverse in (False, True)
        }

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(gap={self.smearing.gap!r}, kernel={self.kernel!r})"

    def term(
        self, alpha: float, beta: float, domain: str = "full", reverse: bool = False
    ) -> t.Tuple[complex, float]:
        """
        Return ``∫∫ζ(t)ζ(t')e^{-iαt}e^{-iβt'}W_Φ(±(t - t'))`` and an error estimate.

        Args:
            alpha: Frequency attached to t.
            beta: Frequency attached to t'.
            domain: ``"full"``, ``"forward"`` (``t > t'``) or ``"backward"`` (``t < t'``).
            reverse: Use ``W_Φ(t' - t)``, the two-point function with its arguments swapped.
        """
        key = (alpha, beta, domain, reverse)
        if key not in self._terms:
            fine = self._lag_sum("fine", alpha, beta, domain, reverse)
            coarse = self._lag_sum("coarse", alpha, beta, domain, reverse)
            self._terms[key] = (fine, abs(fine - coarse))
        return self._terms[key]

    def _lag_sum(self, rule: str, alpha: float, beta: float, domain: str, reverse: bool) -> complex:
        nodes, weights = self._rules[rule]
        if domain == "full":
            mask = np.ones_like(nodes, dtype=bool)
        elif domain == "forward":
            mask = nodes > 0
        elif domain == "backward":
            mask = nodes < 0
        else:
            raise InvalidParameterError(f"unknown domain {domain!r}")
        s = nodes[mask]
        kernel = self._kernel_values[(rule, reverse)][mask]
        inner = self.smearing.window.correlation(s, -(alpha + beta))
        return complex(np.sum(weights[mask] * kernel * np.exp(1j * beta * s) * inner))

    @functools.cached_property
    def excitation(self) -> Excitation:
        """λ-stripped excitation probability from both paths."""
        gap = self.smearing.gap
        direct, direct_error = self.term(gap, -gap, "full")
        momentum, momentum_error = self.kernel.spectral_response(
            self.smearing.window, gap, self.quad
        )
        error = direct_error + momentum_error + abs(direct.imag)
        threshold = max(
            10.0 * (error + self.quad.tolerance),
            self.quad.consistency_rtol * abs(momentum),
        )
        return Excitation(momentum, error, direct.real, momentum, threshold)

    @functools.cached_property
    def eps_sensitivity(self) -> float:
        """Relative change of the momentum-path P when the regulator ε halves."""
        value = self.excitation.value
        halved = self.kernel.with_epsilon(0.5 * self.kernel.epsilon)
        other, _ = halved.spectral_response(self.smearing.window, self.smearing.gap, self.quad)
        if value == 0:
            return 0.0 if other == 0 else math.inf
        return abs(other - value) / abs(value)

    @functools.cached_property
    def coherence(self) -> t.Tuple[complex, float]:
        """λ-stripped ``ρ₂₀`` from ``-√2∫∫θ(t - t')Λ⁺(x)Λ⁺(x')W(x, x')``."""
        gap = self.smearing.gap
        value, error = self.term(-gap, -gap, "forward")
        return -math.sqrt(2.0) * value, math.sqrt(2.0) * error

    @functools.cached_property
    def mirrored_coherence(self) -> t.Tuple[complex, float]:
        """λ-stripped ``ρ₀₂`` from ``-√2∫∫θ(t - t')Λ⁻(x)Λ⁻(x')W(x', x)``."""
        gap = self.smearing.gap
        value, error = self.term(gap, gap, "forward", reverse=True)
        return -math.sqrt(2.0) * value, math.sqrt(2.0) * error

    @property
    def tolerance(self) -> float:
        """Combined λ-stripped quadrature tolerance of the state matrix elements."""
        return self.quad.tolerance + self.excitation.error + self.coherence[1]

    def at(self, lam: float) -> ResponsePoint:
        """Scale the integrals to coupling `lam`."""
        factor = lam**2
        excitation = self.excitation.scaled(factor)
        if excitation.value > PERTURBATIVE_LIMIT:
            logger.warning(
                "P=%.3g at lambda=%g leaves the perturbative regime", excitation.value, lam
            )
        if self.eps_sensitivity > EPS_SENSITIVITY_LIMIT:
            logger.warning(
                "P at Omega=%g changes by %.2e when epsilon halves",
                self.smearing.gap,
                self.eps_sensitivity,
            )
        failure = None
        if not excitation.consistent:
            failure = (
                f"path disagreement {excitation.path_delta:.3e} > {excitation.threshold:.3e}"
            )
        return ResponsePoint(
            Omega=self.smearing.gap,
            P=excitation.value,
            err=excitation.error,
            C20=factor * self.coherence[0],
            path_delta=excitation.path_delta,
            eps_sensitivity=self.eps_sensitivity,
            lam=lam,
            T=self.smearing.window.duration,
            ell=self.smearing.length_scale,
            failure=failure,
        )

    def state(self, lam: float, dim: int = DEFAULT_DIM) -> ReducedState:
        """Assemble the O(λ²) reduced state from its matrix elements."""
        factor = lam**2
        p = factor * self.excitation.value
        c20 = factor * self.coherence[0]
        c02 = factor * self.mirrored_coherence[0]
        rho = np.zeros((dim, dim), dtype=complex)
        rho[1, 1] = p
        rho[2, 0] = c20
        rho[0, 2] = c02
        rho[0, 0] = 1.0 - p
        return ReducedState(rho, allowance=self._allowance(factor, p, c20))

    def operator_state(self, lam: float, dim: int = DEFAULT_DIM) -> ReducedState:
        """
        Evolve the oscillator detector with monopole ``M(t) = Λ(t)(e^{-iΩt}a + e^{iΩt}a†)``.

        The second order state ``U₁ρ₀U₁† + U₂ρ₀ + ρ₀U₂†`` is built from ladder operators on a
        ``dim``-level space; each of the three Dyson contributions expands into four operator
        orderings weighted by their own double integral.
        """
        gap = self.smearing.gap
        a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
        ops = {1: a, -1: a.conj().T}
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0

        second = np.zeros((dim, dim), dtype=complex)
        for sigma in (1, -1):
            for sigma_p in (1, -1):
                alpha, beta = sigma * gap, sigma_p * gap
                sandwich, _ = self.term(alpha, beta, "full", reverse=True)
                forward, _ = self.term(alpha, beta, "forward")
                backward, _ = self.term(alpha, beta, "forward", reverse=True)
                second += sandwich * ops[sigma] @ rho0 @ ops[sigma_p]
                second -= forward * ops[sigma] @ ops[sigma_p] @ rho0
                second -= backward * rho0 @ ops[sigma_p] @ ops[sigma]

        factor = lam**2
        rho = rho0 + factor * second
        p = float(rho[1, 1].real)
        return ReducedState(rho, allowance=self._allowance(factor, p, rho[2, 0]))

    def _allowance(self, factor: float, p: float, c20: complex) -> float:
        # The O(λ²) state carries a negative eigenvalue ≈ -|ρ₂₀|²/(1 - P) of order λ⁴.
        fourth_order = 2.0 * abs(c20) ** 2 / max(1.0 - p, np.finfo(float).eps)
        return 10.0 * factor * self.tolerance + fourth_order


def _mirrored_rule(reach: float, panels: int, order: int) -> t.Tuple[np.ndarray, np.ndarray]:
    half_nodes, half_weights = panel_nodes(0.0, reach, panels, order)
    nodes = np.concatenate([-half_nodes[::-1], half_nodes])
    weights = np.concatenate([half_weights[::-1], half_weights])
    return nodes, weights


def excitation_probability(cfg: CouplingConfig) -> Excitation:
    """
    Return P with its error estimate.

    Raises:
        ConsistencyError: When the lag-space and momentum-space paths disagree.
    """
    excitation = cfg.response().excitation.scaled(cfg.lam**2)
    excitation.raise_for_consistency()
    return excitation


def coherence_02(cfg: CouplingConfig, mirrored: bool = False) -> complex:
    """
    Return the coherence ``ρ₂₀``, or ``ρ₀₂`` from its own integrand when `mirrored` is set.
    """
    response = cfg.response()
    value = response.mirrored_coherence[0] if mirrored else response.coherence[0]
    return cfg.lam**2 * value


def reduced_state(cfg: CouplingConfig) -> ReducedState:
    """Return the O(λ²) reduced state of the accessible mode with unit trace."""
    return cfg.response().state(cfg.lam, cfg.dim)


def udw_reduced_state(cfg: CouplingConfig) -> ReducedState:
    """Return the oscillator detector state from its Dyson expansion."""
    return cfg.response().operator_state(cfg.lam, cfg.dim)


def response_curve(
    cfg: CouplingConfig, gaps: t.Sequence[float], threads: t.Optional[int] = None
) -> t.List[ResponsePoint]:
    """
    Return one :class:`ResponsePoint` per gap, in input order.

    Points are evaluated concurrently. A point that fails keeps its place in the result with
    ``failure`` set and NaN values; the sweep continues.
    """
    gaps = [float(gap) for gap in gaps]
    if not all(np.isfinite(gaps)):
        raise InvalidParameterError("gaps must be finite")
    if any(b < a for a, b in zip(gaps, gaps[1:])):
        raise InvalidParameterError("gaps must be sorted")

    def evaluate(gap: float) -> ResponsePoint:
        point_cfg = cfg.with_gap(gap)
        try:
            return point_cfg.response().at(cfg.lam)
        except LocalQFTError as exc:
            logger.warning("sweep point Omega=%g failed: %s", gap, exc)
            return ResponsePoint(
                Omega=gap,
                P=math.nan,
                err=math.nan,
                C20=complex(math.nan, math.nan),
                path_delta=math.nan,
                lam=cfg.lam,
                T=cfg.smearing.window.duration,
                ell=cfg.smearing.length_scale,
                failure=str(exc),
            )

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(evaluate, gaps))


def _spurious_terms(
    cfg: CouplingConfig, other_modes: t.Sequence[Mode], grid: int
) -> t.List[t.Tuple[complex, complex, complex]]:
    accessible = cfg.smearing.mode
    for mode in other_modes:
        if mode.index == accessible.index:
            raise InvalidParameterError(f"mode {mode.index!r} is the accessible mode")
    window = cfg.smearing.window
    a, b = window.support()
    nodes, weights = gauss_legendre(grid)
    times = a + 0.5 * (b - a) * (nodes + 1.0)
    weights = 0.5 * (b - a) * weights
    lags = times[:, None] - times[None, :]
    pair_weights = np.outer(weights * window(times), weights * window(times))
    theta = np.where(lags > 0, 1.0, np.where(lags < 0, 0.0, 0.5))

    terms = []
    for mode in other_modes:
        gap = cfg.smearing.redshift * mode.omega
        kernel = smeared_wightman(cfg.field, mode, window, gap)
        values = pair_weights * np.exp(-1j * gap * lags) * kernel(lags)
        full = complex(np.sum(values))
        forward = complex(np.sum(theta * values))
        backward = complex(np.sum(theta.T * values))
        terms.append((full, forward, backward))
    return terms


def spurious_term_residual(
    cfg: CouplingConfig, other_modes: t.Sequence[Mode], grid: int = 200, symbolic: bool = False
) -> float:
    """
    Return the traced-out modes' contribution ``λ²∫∫(1 - θ(t - t') - θ(t' - t))Λ⁻Λ⁺W``.

    With `symbolic` set the identity ``θ(u) + θ(-u) = 1`` is applied and the result is exactly
    zero. Otherwise the unordered term and both ordered terms are summed separately on a
    ``grid × grid`` Gauss-Legendre product rule whose diagonal carries θ = 1/2.
    """
    if symbolic:
        return 0.0
    terms = _spurious_terms(cfg, other_modes, grid)
    residual = sum(abs(full - forward - backward) for full, forward, backward in terms)
    return cfg.lam**2 * float(residual)


def spurious_term_scale(
    cfg: CouplingConfig, other_modes: t.Sequence[Mode], grid: int = 200
) -> float:
    """Return ``λ²Σ_n|∫∫Λ_n⁻Λ_n⁺W|``, the size the spurious residual is measured against."""
    terms = _spurious_terms(cfg, other_modes, grid)
    return cfg.lam**2 * float(sum(abs(full) for full, _, _ in terms))
