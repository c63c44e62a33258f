"""Exact evolution of a truncated toy universe of probe and field modes.

The probe field's modes and a box field's modes are coupled by ``λζ(t)∫φ_Dφ``, which in
quadratures reads

    H(t) = Σ_j ω_j(q_j² + p_j²)/2 + Σ_nk 2g_nk(t) q_n Q_k,    g_nk(t) = λζ(t)∫Φ_n φ_k d³x

The Hamiltonian is quadratic, so the vacuum stays Gaussian and its covariance is propagated exactly
by the symplectic matrix ``S' = JH(t)S``. Tracing out everything but the accessible mode and
comparing with the second order reduced state checks that the accessible mode behaves like an
oscillator detector up to O(λ⁴).
"""

from concurrent.futures import ThreadPoolExecutor
import dataclasses
import logging
import math
import typing as t

import numpy as np
from scipy.linalg import expm
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import EquivalenceError, GeometryError, IntegratorError, InvalidParameterError
from .gaussian import DEFAULT_CUTOFF, GaussianState, single_mode_fock, symplectic_form
from .kernel import BoxField, DiscreteSmearedWightman
from .perturbation import CouplingConfig, ReducedState
from .quadrature import QuadratureControls
from .smearing import GaussianWindow, Window, build_lambda
from .spectrum import ModeBasis, box_modes, overlap_matrix


logger = logging.getLogger(__name__)

#: Samples per shortest period the integrator must take.
STEPS_PER_PERIOD = 40

#: Drift allowed in the uncertainty relation before the integrator is declared failed.
UNCERTAINTY_DRIFT = 1e-8

#: Symplecticity defect tolerated over a whole evolution.
SYMPLECTIC_TOL = 1e-10

#: Trace a truncated Fock matrix may miss before a warning is logged.
TRUNCATION_TOL = 1e-6

#: Largest toy the dense Fock cross-check accepts.
MAX_FOCK_MODES = 4

#: Contract of the equivalence check.
MIN_EXPONENT = 3.5
MAX_DELTA = 1e-3

#: Largest gap allowed between the exponents of the full and the isolated toy.
EXPONENT_AGREEMENT = 0.25

#: Slack allowed when checking that the probe lies inside the field box.
_GEOMETRY_SLACK = 1e-12

_MAGNUS_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
_MAGNUS_COMMUTATOR = math.sqrt(3.0) / 12.0


@dataclasses.dataclass(frozen=True, eq=False)
class ToyUniverse:
    """
    Probe modes linearly coupled to the modes of a box field.

    Attributes:
        probe: Probe field basis; its mode `accessible` is the one kept.
        field: Box field the probe couples to.
        window: Switching function ζ.
        lam: Coupling λ.
        overlaps: ``O_nk = ∫Φ_n φ_k d³x``, probe modes by field modes.
        accessible: Position of the accessible mode in `probe`.
    """

    probe: ModeBasis
    field: BoxField
    window: Window
    lam: float
    overlaps: np.ndarray
    accessible: int

    def __post_init__(self):
        overlaps = np.asarray(self.overlaps, dtype=float)
        if overlaps.shape != (len(self.probe), len(self.field.basis)):
            raise InvalidParameterError("overlap matrix does not match the two bases")
        if not 0 <= self.accessible < len(self.probe):
            raise InvalidParameterError(f"accessible position {self.accessible!r} out of range")
        if np.any(self.omegas <= 0):
            raise InvalidParameterError("all mode frequencies must be positive")
        object.__setattr__(self, "overlaps", overlaps)

    @property
    def omegas(self) -> np.ndarray:
        return np.concatenate([self.probe.omegas, self.field.basis.omegas])

    @property
    def modes(self) -> int:
        return len(self.probe) + len(self.field.basis)

    def coupling(self, t: float) -> np.ndarray:
        """Return ``g(t) = λζ(t)O``."""
        return self.lam * float(self.window(t)) * self.overlaps

    def free_hamiltonian(self) -> np.ndarray:
        return np.diag(np.tile(self.omegas, 2))

    def hamiltonian(self, t: float) -> np.ndarray:
        """Return the symmetric ``2M × 2M`` matrix H with ``H(t) = r^T H r / 2``."""
        matrix = self.free_hamiltonian()
        probes = len(self.probe)
        g = self.coupling(t)
        matrix[:probes, probes : self.modes] = 2.0 * g
        matrix[probes : self.modes, :probes] = 2.0 * g.T
        return matrix

    def isolated(self) -> "ToyUniverse":
        """Return the toy with every probe mode except the accessible one decoupled."""
        overlaps = np.zeros_like(self.overlaps)
        overlaps[self.accessible] = self.overlaps[self.accessible]
        return dataclasses.replace(self, overlaps=overlaps)

    def perturbative_config(
        self, quad: QuadratureControls = QuadratureControls(), dim: int = 3
    ) -> CouplingConfig:
        """Return the second order configuration describing the same accessible mode."""
        mode = self.probe[self.accessible]
        kernel = DiscreteSmearedWightman(
            self.field.basis.omegas, self.overlaps[self.accessible] ** 2, self.field.epsilon
        )
        smearing = build_lambda(self.window, mode)
        return CouplingConfig(self.lam, smearing, self.field, quad, dim, kernel=kernel)


def build_toy(
    probe_basis: ModeBasis,
    box_d: float,
    field_m: float,
    field_cap: int,
    window: Window,
    lam: float,
    accessible: t.Any = None,
    field_origin: t.Tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> ToyUniverse:
    """
    Couple `probe_basis` to a box field of side `box_d` with `field_cap` modes per axis.

    Args:
        probe_basis: 3D probe modes, each strictly inside the field box.
        box_d: Field box side.
        field_m: Field mass.
        field_cap: Field modes per axis.
        window: Switching function.
        lam: Coupling.
        accessible: Index of the accessible probe mode; the lowest mode by default.
        field_origin: Lower corner of the field box.

    Raises:
        GeometryError: When a probe mode reaches outside the field box.
    """
    if not np.isfinite(lam):
        raise InvalidParameterError(f"coupling must be finite, got {lam!r}")
    if probe_basis.dim != 3:
        raise InvalidParameterError("the probe basis must be three-dimensional")
    field = BoxField(box_d, field_m, field_cap, 0.0, field_origin)
    low = np.asarray(field.origin)
    high = low + box_d
    for mode in probe_basis:
        for axis, factor in enumerate(mode.factors):
            a, b = factor.support()
            if a < low[axis] - _GEOMETRY_SLACK or b > high[axis] + _GEOMETRY_SLACK:
                raise GeometryError(
                    f"probe mode {mode.index!r} spans [{a!r}, {b!r}] on axis {axis},"
                    f" outside the field box [{low[axis]!r}, {high[axis]!r}]"
                )

    position = 0
    if accessible is not None:
        target = probe_basis.mode(accessible)
        position = probe_basis.modes.index(target)
    overlaps = overlap_matrix(probe_basis, field.basis)
    return ToyUniverse(probe_basis, field, window, lam, overlaps, position)


@dataclasses.dataclass(frozen=True)
class IntegratorReport:
    """
    Diagnostics of one exact evolution.

    Attributes:
        steps: Magnus steps taken.
        step_size: Step length.
        symplectic_defect: ``max |S^T J S - J|`` of the final propagator.
        purity_drift: Change of the global purity.
        uncertainty_min_eigenvalue: Smallest eigenvalue of ``σ + iJ/2`` at the end.
        energy_initial: ``⟨H(t_i)⟩``.
        energy_final: ``⟨H(t_f)⟩``.
    """

    steps: int
    step_size: float
    symplectic_defect: float
    purity_drift: float
    uncertainty_min_eigenvalue: float
    energy_initial: float
    energy_final: float

    @property
    def energy_drift(self) -> float:
        return abs(self.energy_final - self.energy_initial)

    @property
    def passed(self) -> bool:
        return (
            self.symplectic_defect < SYMPLECTIC_TOL
            and self.uncertainty_min_eigenvalue >= -UNCERTAINTY_DRIFT
        )

    def to_dict(self) -> t.Dict[str, t.Any]:
        data = dataclasses.asdict(self)
        data["energy_drift"] = self.energy_drift
        data["passed"] = self.passed
        return data


@dataclasses.dataclass(frozen=True, eq=False)
class Evolution:
    """
    Result of :func:`evolve_exact`.

    Attributes:
        state: Final state in the interaction picture of the free Hamiltonian.
        schrodinger: Final state in the Schrödinger picture.
        propagator: Interaction picture symplectic propagator.
        report: Integrator diagnostics.
    """

    state: GaussianState
    schrodinger: GaussianState
    propagator: np.ndarray
    report: IntegratorReport


def _check_steps(omegas: np.ndarray, t_span: t.Tuple[float, float], steps: int) -> float:
    t0, t1 = t_span
    if not (np.isfinite(t0) and np.isfinite(t1) and t1 > t0):
        raise InvalidParameterError(f"t_span must be an increasing pair, got {t_span!r}")
    span = t1 - t0
    needed = STEPS_PER_PERIOD * float(np.max(omegas)) * span / (2.0 * np.pi)
    if not isinstance(steps, int) or steps < needed:
        raise InvalidParameterError(
            f"{steps!r} steps cannot resolve the highest frequency; at least"
            f" {int(np.ceil(needed))} are needed"
        )
    return span / steps


def evolve_exact(
    toy: ToyUniverse,
    initial: t.Optional[GaussianState] = None,
    t_span: t.Tuple[float, float] = (-5.0, 5.0),
    steps: int = 4000,
) -> Evolution:
    """
    Propagate the covariance with a fourth order Magnus integrator.

    Each step uses ``exp(h(A₁ + A₂)/2 + (√3/12)h²[A₂, A₁])`` with ``A = JH`` sampled at the two
    Gauss-Legendre points of the step, which keeps the propagator symplectic to rounding.

    Raises:
        IntegratorError: When the final state violates the uncertainty relation beyond drift.
    """
    initial = GaussianState.vacuum(toy.modes) if initial is None else initial
    if initial.modes != toy.modes:
        raise InvalidParameterError("initial state does not match the toy universe")
    h = _check_steps(toy.omegas, t_span, steps)
    t0, t1 = t_span
    J = symplectic_form(toy.modes)

    S = np.eye(2 * toy.modes)
    for step in range(steps):
        start = t0 + step * h
        a1 = J @ toy.hamiltonian(start + _MAGNUS_NODES[0] * h)
        a2 = J @ toy.hamiltonian(start + _MAGNUS_NODES[1] * h)
        generator = 0.5 * h * (a1 + a2) + _MAGNUS_COMMUTATOR * h**2 * (a2 @ a1 - a1 @ a2)
        S = expm(generator) @ S

    free = J @ toy.free_hamiltonian()
    interaction = expm(-t1 * free) @ S @ expm(t0 * free)
    schrodinger = initial.transformed(S)
    state = initial.transformed(interaction)

    report = IntegratorReport(
        steps=steps,
        step_size=h,
        symplectic_defect=float(np.max(np.abs(S.T @ J @ S - J))),
        purity_drift=abs(schrodinger.purity - initial.purity),
        uncertainty_min_eigenvalue=schrodinger.uncertainty_min_eigenvalue(),
        energy_initial=initial.energy(toy.hamiltonian(t0)),
        energy_final=schrodinger.energy(toy.hamiltonian(t1)),
    )
    logger.info(
        "exact evolution: %d steps, symplectic defect %.2e, purity drift %.2e",
        steps,
        report.symplectic_defect,
        report.purity_drift,
    )
    if not np.isfinite(report.uncertainty_min_eigenvalue) or (
        report.uncertainty_min_eigenvalue < -UNCERTAINTY_DRIFT
    ):
        raise IntegratorError(
            "uncertainty relation violated: min eigenvalue"
            f" {report.uncertainty_min_eigenvalue:.3e}"
        )
    return Evolution(state, schrodinger, interaction, report)


def trace_to_mode(state: GaussianState, index: int, dim: int = 3) -> ReducedState:
    """
    Return the truncated Fock density matrix of mode `index`, tracing out every other mode.

    For Gaussian states the partial trace is the restriction of the covariance to the mode.
    """
    rho, deficit = single_mode_fock(state.mode_block(index), dim, DEFAULT_CUTOFF)
    if deficit > TRUNCATION_TOL:
        logger.warning("Fock truncation at dim=%d misses %.3e of the trace", dim, deficit)
    return ReducedState(rho, order="exact", allowance=TRUNCATION_TOL)


def evolve_fock(
    toy: ToyUniverse,
    t_span: t.Tuple[float, float] = (-5.0, 5.0),
    steps: int = 4000,
    cutoff: int = 4,
    dim: int = 3,
) -> ReducedState:
    """
    Evolve the vacuum as a state vector in a truncated Fock space.

    Every mode keeps ``cutoff + 1`` levels and the same fourth order Magnus step drives
    ``ψ' = -iH(t)ψ`` through sparse :func:`scipy.sparse.linalg.expm_multiply`. This path shares
    nothing with the covariance machinery and serves as its cross-check on toys of at most four
    modes.
    """
    if toy.modes > MAX_FOCK_MODES:
        raise InvalidParameterError(
            f"the Fock cross-check handles at most {MAX_FOCK_MODES} modes, got {toy.modes}"
        )
    if not isinstance(cutoff, int) or cutoff < dim - 1:
        raise InvalidParameterError(f"cutoff must be an integer of at least {dim - 1}")
    h = _check_steps(toy.omegas, t_span, steps)
    t0, t1 = t_span
    levels = cutoff + 1

    lowering = sp.diags(np.sqrt(np.arange(1, levels, dtype=float)), 1, format="csr")
    ladders = []
    for j in range(toy.modes):
        left = sp.identity(levels**j, format="csr")
        right = sp.identity(levels ** (toy.modes - j - 1), format="csr")
        ladders.append(sp.kron(sp.kron(left, lowering), right, format="csr"))
    positions = [(a + a.T) / math.sqrt(2.0) for a in ladders]

    omegas = toy.omegas
    free = sum(omega * (a.T @ a) for omega, a in zip(omegas, ladders))
    probes = len(toy.probe)
    couplings = {
        (n, probes + k): 2.0 * positions[n] @ positions[probes + k]
        for n in range(probes)
        for k in range(len(toy.field.basis))
        if toy.overlaps[n, k] != 0
    }

    def hamiltonian(time: float) -> sp.csr_matrix:
        g = toy.coupling(time)
        matrix = free.astype(complex)
        for (n, k), term in couplings.items():
            matrix = matrix + g[n, k - probes] * term
        return matrix

    psi = np.zeros(levels**toy.modes, dtype=complex)
    psi[0] = 1.0
    for step in range(steps):
        start = t0 + step * h
        a1 = -1j * hamiltonian(start + _MAGNUS_NODES[0] * h)
        a2 = -1j * hamiltonian(start + _MAGNUS_NODES[1] * h)
        generator = 0.5 * h * (a1 + a2) + _MAGNUS_COMMUTATOR * h**2 * (a2 @ a1 - a1 @ a2)
        psi = expm_multiply(generator, psi)

    # Back to the interaction picture; the vacuum is stationary under the free evolution.
    psi = np.exp(1j * t1 * free.diagonal()) * psi
    tensor = np.moveaxis(psi.reshape((levels,) * toy.modes), toy.accessible, 0)
    tensor = tensor.reshape(levels, -1)
    rho = (tensor @ tensor.conj().T)[:dim, :dim]
    return ReducedState(rho, order="exact", allowance=TRUNCATION_TOL)


def field_tail_bound(toy: ToyUniverse) -> float:
    """
    Bound the excitation probability carried by field modes beyond the truncation.

    Completeness of the box modes gives ``Σ_k 2ω_k c_k² = ∫Φ_N²`` over all modes, so the omitted
    modes hold at most ``∫Φ_N² - Σ_included 2ω_k c_k²`` of that sum. Each of them has
    ``ω_k ≥ ω_min``, the lowest omitted frequency, which turns the remainder into a bound on
    ``λ²Σ_omitted c_k²|ζ̃(ω_k + Ω)|²`` once ``|ζ̃|²`` is bounded beyond ``ω_min + Ω``.
    """
    mode = toy.probe[toy.accessible]
    field = toy.field
    c = toy.overlaps[toy.accessible]
    included = float(np.sum(2.0 * field.basis.omegas * c**2))
    remainder = max(1.0 / (2.0 * mode.omega) - included, 0.0)
    omega_min = math.sqrt(field.mass**2 + (np.pi / field.d) ** 2 * ((field.n_cap + 1) ** 2 + 2))
    nu_min = omega_min + mode.omega
    if isinstance(toy.window, GaussianWindow):
        spectrum = abs(complex(toy.window.fourier(np.array([nu_min]))[0])) ** 2
    else:
        reach = toy.window.cutoff_frequency()
        if not np.isfinite(reach):
            reach = 100.0 / toy.window.duration
        nu = np.linspace(nu_min, nu_min + reach, 512)
        spectrum = float(np.max(np.abs(toy.window.fourier(nu)) ** 2))
    return toy.lam**2 * spectrum * remainder / (2.0 * omega_min)


@dataclasses.dataclass(frozen=True)
class OracleScenario:
    """
    Geometry and integration settings of the equivalence check.

    Attributes:
        probe_box: Probe box side d.
        probe_cap: Probe modes per axis.
        field_box: Field box side D.
        field_cap: Field modes per axis.
        window: Switching function.
        accessible: Index of the accessible probe mode.
        field_mass: Field mass.
        probe_mass: Probe field mass.
        probe_origin: Lower corner of the probe box; centred in the field box when omitted.
        steps: Magnus steps.
        span: Evolution interval.
        quad: Quadrature controls of the perturbative side.
    """

    probe_box: float
    probe_cap: int
    field_box: float
    field_cap: int
    window: Window
    accessible: t.Tuple[int, int, int] = (1, 1, 1)
    field_mass: float = 0.0
    probe_mass: float = 0.0
    probe_origin: t.Optional[t.Tuple[float, float, float]] = None
    steps: int = 4000
    span: t.Tuple[float, float] = (-5.0, 5.0)
    quad: QuadratureControls = QuadratureControls()

    def __post_init__(self):
        if not (np.isfinite(self.field_box) and self.field_box > 0):
            raise InvalidParameterError(f"field box must be positive, got {self.field_box!r}")
        if self.probe_origin is None:
            corner = 0.5 * (self.field_box - self.probe_box)
            object.__setattr__(self, "probe_origin", (corner, corner, corner))
        object.__setattr__(self, "accessible", tuple(int(i) for i in self.accessible))
        object.__setattr__(self, "span", tuple(float(s) for s in self.span))

    def probe_basis(self) -> ModeBasis:
        return box_modes(self.probe_box, self.probe_mass, self.probe_cap, self.probe_origin)

    def build(self, lam: float) -> ToyUniverse:
        return build_toy(
            self.probe_basis(),
            self.field_box,
            self.field_mass,
            self.field_cap,
            self.window,
            lam,
            accessible=self.accessible,
        )


@dataclasses.dataclass(frozen=True)
class EquivalenceReport:
    """
    Distances between exact and second order states of the accessible mode.

    Attributes:
        lambdas: Couplings, in input order.
        deltas: ``‖ρ_exact - ρ_λ²‖_F`` per coupling.
        exponent: Fitted slope of ``log Δ`` against ``log λ``.
        p_exact: Exact ``ρ₁₁`` per coupling.
        p_perturbative: Second order P per coupling.
        tail_bound: :func:`field_tail_bound` at the largest coupling.
        integrator: Integrator diagnostics per coupling.
        isolated_deltas: Δ per coupling for the toy with the other probe modes decoupled.
        isolated_exponent: Fitted slope of the isolated Δ.
        udw_distances: ``‖ρ_λ² - ρ_UDW‖_F`` per coupling.
        udw_limits: Largest accepted udw distance per coupling.
    """

    lambdas: t.Tuple[float, ...]
    deltas: t.Tuple[float, ...]
    exponent: float
    p_exact: t.Tuple[float, ...]
    p_perturbative: t.Tuple[float, ...]
    tail_bound: float
    integrator: t.Tuple[IntegratorReport, ...]
    isolated_deltas: t.Tuple[float, ...]
    isolated_exponent: float
    udw_distances: t.Tuple[float, ...]
    udw_limits: t.Tuple[float, ...]

    @property
    def max_delta(self) -> float:
        """Δ at the largest coupling."""
        return self.deltas[int(np.argmax(np.abs(self.lambdas)))]

    @property
    def exponent_gap(self) -> float:
        """``|exponent - isolated_exponent|``."""
        return abs(self.exponent - self.isolated_exponent)

    @property
    def isolated_agrees(self) -> bool:
        return bool(
            np.isfinite(self.isolated_exponent)
            and self.isolated_exponent >= MIN_EXPONENT
            and self.exponent_gap <= EXPONENT_AGREEMENT
        )

    @property
    def udw_agrees(self) -> bool:
        return all(
            distance <= limit for distance, limit in zip(self.udw_distances, self.udw_limits)
        )

    @property
    def passed(self) -> bool:
        return bool(
            np.isfinite(self.exponent)
            and self.exponent >= MIN_EXPONENT
            and self.max_delta < MAX_DELTA
            and all(report.passed for report in self.integrator)
            and self.isolated_agrees
            and self.udw_agrees
        )

    def to_dict(self) -> t.Dict[str, t.Any]:
        columns = zip(
            self.lambdas,
            self.deltas,
            self.isolated_deltas,
            self.p_exact,
            self.p_perturbative,
            self.udw_distances,
            self.udw_limits,
            self.integrator,
        )
        return {
            "passed": self.passed,
            "exponent": self.exponent,
            "min_exponent": MIN_EXPONENT,
            "isolated_exponent": self.isolated_exponent,
            "exponent_agreement": EXPONENT_AGREEMENT,
            "isolated_agrees": self.isolated_agrees,
            "udw_agrees": self.udw_agrees,
            "max_delta": self.max_delta,
            "delta_limit": MAX_DELTA,
            "tail_bound": self.tail_bound,
            "points": [
                {
                    "lambda": lam,
                    "delta": delta,
                    "delta_isolated": isolated,
                    "P_exact": p_exact,
                    "P_perturbative": p_pert,
                    "udw_distance": distance,
                    "udw_limit": limit,
                    "integrator": report.to_dict(),
                }
                for lam, delta, isolated, p_exact, p_pert, distance, limit, report in columns
            ],
        }

    def raise_for_status(self) -> None:
        if not self.passed:
            raise EquivalenceError(
                f"equivalence check failed: exponent {self.exponent:.3f} (needs >= {MIN_EXPONENT}),"
                f" isolated exponent {self.isolated_exponent:.3f}"
                f" (needs within {EXPONENT_AGREEMENT}),"
                f" delta {self.max_delta:.3e} (needs < {MAX_DELTA}),"
                f" udw agreement {self.udw_agrees}",
                report=self,
            )


def fit_exponent(lambdas: t.Sequence[float], deltas: t.Sequence[float]) -> float:
    """
    Return the least squares slope of ``log Δ`` against ``log |λ|``.

    Points with ``λ = 0`` or ``Δ = 0`` carry no scaling information and are skipped; fewer than two
    usable points give NaN.
    """
    pairs = [(abs(lam), delta) for lam, delta in zip(lambdas, deltas) if lam != 0 and delta > 0]
    if len({lam for lam, _ in pairs}) < 2:
        return math.nan
    x, y = np.log(np.array(pairs)).T
    return float(np.polyfit(x, y, 1)[0])


def verify_equivalence(
    scenario: OracleScenario, lambdas: t.Sequence[float], threads: t.Optional[int] = None
) -> EquivalenceReport:
    """
    Compare the exact and second order accessible-mode states at each coupling.

    Couplings are evaluated concurrently; each evolution is deterministic. Every coupling also
    evolves the toy with the other probe modes decoupled, whose Δ must scale with the same
    exponent, and compares the second order state with the oscillator detector state built from
    its Dyson expansion.
    """
    lambdas = tuple(float(lam) for lam in lambdas)
    if len(lambdas) < 2:
        raise InvalidParameterError("at least two couplings are needed to fit a scaling exponent")

    def compare(lam: float) -> t.Tuple[float, float, float, float, float, float, IntegratorReport]:
        toy = scenario.build(lam)
        cfg = toy.perturbative_config(scenario.quad)
        response = cfg.response()
        perturbative = response.state(lam, cfg.dim)

        evolution = evolve_exact(toy, None, scenario.span, scenario.steps)
        exact = trace_to_mode(evolution.state, toy.accessible)
        delta = exact.frobenius_distance(perturbative)

        isolated = evolve_exact(toy.isolated(), None, scenario.span, scenario.steps)
        isolated_delta = trace_to_mode(isolated.state, toy.accessible).frobenius_distance(
            perturbative
        )

        udw_distance = perturbative.frobenius_distance(response.operator_state(lam, cfg.dim))
        udw_limit = (
            2.0 * response.excitation.scaled(lam**2).threshold
            + 10.0 * lam**2 * response.tolerance
        )
        logger.info(
            "lambda=%g: delta=%.3e isolated=%.3e udw=%.3e", lam, delta, isolated_delta, udw_distance
        )
        return (
            delta,
            isolated_delta,
            float(exact.rho[1, 1].real),
            float(perturbative.rho[1, 1].real),
            udw_distance,
            udw_limit,
            evolution.report,
        )

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(compare, lambdas))

    (
        deltas,
        isolated_deltas,
        p_exact,
        p_perturbative,
        udw_distances,
        udw_limits,
        reports,
    ) = (tuple(column) for column in zip(*results))
    largest = lambdas[int(np.argmax(np.abs(lambdas)))]
    report = EquivalenceReport(
        lambdas=lambdas,
        deltas=deltas,
        exponent=fit_exponent(lambdas, deltas),
        p_exact=p_exact,
        p_perturbative=p_perturbative,
        tail_bound=field_tail_bound(scenario.build(largest)),
        integrator=reports,
        isolated_deltas=isolated_deltas,
        isolated_exponent=fit_exponent(lambdas, isolated_deltas),
        udw_distances=udw_distances,
        udw_limits=udw_limits,
    )
    logger.info(
        "equivalence exponent %.3f, isolated %.3f", report.exponent, report.isolated_exponent
    )
    return report
