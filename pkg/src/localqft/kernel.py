"""Two-point functions of the free Klein-Gordon field.

Point-split functions follow the ``t → t - iε`` prescription on the first argument:

    W(a, b) = ∫d³k/((2π)³2ω_k) e^{-iω_k(Δt - iε) + ik·Δx}

Second order detector integrals only ever need the field smeared against one mode profile on both
arguments. Those smeared functions ``W_Φ(s)`` depend on the time lag only and come in three
representations sharing one interface: a closed form for Gaussian profiles of a massless field, a
tabulated spectral density for anything else in the continuum, and a finite mode sum for a field
confined to a box.
"""

import abc
import copy
import dataclasses
import logging
import math
import typing as t

import numpy as np
from scipy.special import wofz

from .errors import DomainError, InvalidParameterError, QuadratureError
from .memoization import memoize
from .profiles import overlap_1d
from .quadrature import (
    QuadratureControls,
    adaptive,
    composite_gauss_legendre,
    gauss_legendre,
    panel_nodes,
)
from .smearing import Window
from .spectrum import Mode, ModeBasis, box_modes


logger = logging.getLogger(__name__)

#: Largest ``ωε`` kept by the radial integral.
_RADIAL_CUTOFF = 40.0

#: Panel count above which the radial integral is refused.
_MAX_RADIAL_PANELS = 200_000

#: ``-ln`` of the relative size below which a Gaussian profile transform is dropped.
_PROFILE_TAIL = math.log(1e17)

#: Relative tolerance of the massive radial path.
_RADIAL_RTOL = 1e-8


@dataclasses.dataclass(frozen=True)
class FieldSpec:
    """
    Free field in its Minkowski vacuum.

    Attributes:
        mass: Field mass m.
        epsilon: Regulator time ε of the iε prescription.
        state: Field state; only ``"vacuum"`` is implemented.
    """

    mass: float = 0.0
    epsilon: float = 1e-5
    state: str = "vacuum"

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass >= 0):
            raise InvalidParameterError(f"field mass must be non-negative, got {self.mass!r}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.state != "vacuum":
            raise InvalidParameterError(f"unsupported field state {self.state!r}")

    def omega(self, k: np.ndarray) -> np.ndarray:
        return np.sqrt(np.asarray(k, dtype=float) ** 2 + self.mass**2)


@dataclasses.dataclass(frozen=True)
class Event:
    """Spacetime point ``(t, x)``."""

    t: float
    x: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        x = tuple(float(c) for c in self.x)
        if len(x) != 3:
            raise InvalidParameterError(f"event position must have 3 components, got {self.x!r}")
        if not (np.isfinite(self.t) and all(np.isfinite(x))):
            raise InvalidParameterError("event coordinates must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)


def _separation(a: Event, b: Event) -> t.Tuple[float, float]:
    return a.t - b.t, float(np.linalg.norm(np.subtract(a.x, b.x)))


def momentum_density(spec: FieldSpec, k: t.Union[float, np.ndarray]) -> t.Union[float, np.ndarray]:
    """
    Return the vacuum measure ``1/((2π)³·2ω_k)``.

    Example:

        >>> round(momentum_density(FieldSpec(mass=3.0), 4.0) * 10 * (2 * np.pi) ** 3, 12)
        1.0
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise InvalidParameterError("wavenumber must be non-negative")
    value = 1.0 / ((2.0 * np.pi) ** 3 * 2.0 * spec.omega(k_arr))
    return float(value) if np.ndim(value) == 0 else value


def wightman_vacuum(
    spec: FieldSpec,
    a: Event,
    b: Event,
    method: str = "auto",
    controls: t.Optional[QuadratureControls] = None,
) -> complex:
    """
    Return the vacuum Wightman function ``W(a, b)``.

    Args:
        spec: Field.
        a: First event, carrying the ``-iε`` shift.
        b: Second event.
        method: ``"closed"`` for the massless closed form, ``"radial"`` for the radial momentum
            integral, or ``"auto"`` to pick the closed form exactly when the field is massless.
        controls: Panel count floor of the radial integral.
    """
    if method == "auto":
        method = "closed" if spec.mass == 0 else "radial"
    dt, r = _separation(a, b)
    if method == "closed":
        if spec.mass != 0:
            raise InvalidParameterError("the closed form only holds for a massless field")
        z = dt - 1j * spec.epsilon
        return complex(1.0 / (4.0 * np.pi**2 * (r**2 - z**2)))
    if method == "radial":
        return _radial_wightman(spec, dt, r, controls or QuadratureControls())
    raise InvalidParameterError(f"unknown method {method!r}")


def _radial_wightman(spec: FieldSpec, dt: float, r: float, controls: QuadratureControls) -> complex:
    z = dt - 1j * spec.epsilon
    omega_max = _RADIAL_CUTOFF / spec.epsilon
    k_max = math.sqrt(max(omega_max**2 - spec.mass**2, 0.0))
    panels = max(controls.panels, int(np.ceil(k_max * (r + abs(dt)) / np.pi)) + 1)
    if panels > _MAX_RADIAL_PANELS:
        raise QuadratureError(
            f"radial integral needs {panels} panels; increase epsilon or shorten the separation"
        )

    def integrand(k):
        omega = spec.omega(k)
        if r > 0:
            radial = k * np.sin(k * r) / r
        else:
            radial = k**2
        return radial / omega * np.exp(-1j * omega * z)

    value, error = composite_gauss_legendre(integrand, 0.0, k_max, panels, controls.order)
    value = value / (4.0 * np.pi**2)
    error = error / (4.0 * np.pi**2)
    bound = _RADIAL_RTOL * max(abs(value), 1.0)
    if not error <= bound:
        raise QuadratureError(
            f"radial Wightman integral stopped at error {error:.3e} above tolerance {bound:.3e}"
        )
    logger.debug("radial Wightman: %d panels, k_max=%g, error %.3e", panels, k_max, error)
    return complex(value)


def commutator(spec: FieldSpec, a: Event, b: Event, method: str = "auto") -> complex:
    """Return ``[φ(a), φ(b)] = W(a, b) - W(b, a)``."""
    return wightman_vacuum(spec, a, b, method=method) - wightman_vacuum(spec, b, a, method=method)


def wightman_line(spec: FieldSpec, reference: Event, events: t.Sequence[Event]) -> np.ndarray:
    """Return ``W(e, reference)`` for each event `e`, for diagnostic dumps along a line."""
    return np.array([wightman_vacuum(spec, event, reference) for event in events])


@memoize("bases", maxsize=16)
def _box_basis(
    d: float, mass: float, n_cap: int, origin: t.Tuple[float, float, float]
) -> ModeBasis:
    return box_modes(d, mass, n_cap, origin)


@dataclasses.dataclass(frozen=True)
class BoxField:
    """
    Free field confined to a Dirichlet box, represented by its lowest modes.

    Attributes:
        d: Box side.
        mass: Field mass.
        n_cap: Modes per axis.
        epsilon: Regulator time; zero is allowed because every mode sum is finite.
        origin: Lower corner of the box.
    """

    d: float
    mass: float = 0.0
    n_cap: int = 3
    epsilon: float = 0.0
    origin: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise InvalidParameterError(f"epsilon must be non-negative, got {self.epsilon!r}")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        # Validates d, mass and n_cap.
        self.basis

    @property
    def basis(self) -> ModeBasis:
        return _box_basis(self.d, self.mass, self.n_cap, self.origin)

    def contains(self, x: t.Sequence[float]) -> bool:
        low = np.asarray(self.origin)
        return bool(np.all(np.asarray(x) >= low) and np.all(np.asarray(x) <= low + self.d))

    def wightman(self, a: Event, b: Event) -> complex:
        """Return the truncated mode sum ``Σ_n e^{-iω_n(Δt - iε)}Φ_n(x_a)Φ_n(x_b)``."""
        for event in (a, b):
            if not self.contains(event.x):
                raise DomainError(f"event {event!r} lies outside the box")
        basis = self.basis
        omegas = basis.omegas
        phi_a = np.array([mode.profile(np.asarray(a.x)) for mode in basis])
        phi_b = np.array([mode.profile(np.asarray(b.x)) for mode in basis])
        phases = np.exp(-1j * omegas * (a.t - b.t - 1j * self.epsilon))
        return complex(np.sum(phases * phi_a * phi_b))

    def tail(self) -> float:
        """Bound on the modes omitted by the truncation; see :func:`boxfield_wightman_tail`."""
        return boxfield_wightman_tail(self.d, self.mass, self.n_cap, self.epsilon)

    def overlaps(self, mode: Mode) -> np.ndarray:
        """Return ``c_k = ∫Φ_N φ_k d³x`` for every field mode k."""
        return _field_overlaps(self, mode)


@memoize("overlaps")
def _field_overlaps(field: BoxField, mode: Mode) -> np.ndarray:
    if mode.dim != 3:
        raise InvalidParameterError("field overlaps need a 3D mode")
    values = np.empty(len(field.basis))
    for k, field_mode in enumerate(field.basis):
        value = mode.amplitude * field_mode.amplitude
        for f, g in zip(mode.factors, field_mode.factors):
            value *= overlap_1d(f, g)
        values[k] = value
    values.setflags(write=False)
    return values


def boxfield_wightman(
    d: float, m: float, n_cap: int, a: Event, b: Event, epsilon: float = 0.0
) -> complex:
    """Return the Wightman function of the box field truncated at `n_cap` modes per axis."""
    return BoxField(d, m, n_cap, epsilon).wightman(a, b)


def boxfield_wightman_tail(d: float, m: float, n_cap: int, epsilon: float) -> float:
    """
    Bound the modes a truncated box mode sum omits.

    Every mode obeys ``|e^{-iω(Δt - iε)}Φ_n(a)Φ_n(b)| ≤ 4e^{-ωε}/(d³ω)``. Shells of indices with
    ``max n_i = j > n_cap`` hold ``j³ - (j - 1)³`` modes of frequency at least
    ``√(m² + (π/d)²(j² + 2))``; shells are summed until ``e^{-ωε}`` drops below ``e^{-40}``. The
    sum diverges without a regulator, so ``ε = 0`` gives infinity.
    """
    if epsilon <= 0:
        return math.inf
    j_max = n_cap + int(np.ceil(_RADIAL_CUTOFF * d / (np.pi * epsilon))) + 1
    j = np.arange(n_cap + 1, j_max + 1, dtype=float)
    count = j**3 - (j - 1.0) ** 3
    omega = np.sqrt(m**2 + (np.pi / d) ** 2 * (j**2 + 2.0))
    return float(np.sum(count * 4.0 * np.exp(-omega * epsilon) / (d**3 * omega)))


class SmearedWightman(abc.ABC):
    """
    ``W_Φ(s) = ∫∫Φ(x)Φ(x')W((s, x), (0, x'))d³x d³x'`` for one mode profile Φ.

    Attributes:
        epsilon: Regulator time carried by every evaluation.
    """

    epsilon: float

    @abc.abstractmethod
    def __call__(self, s: np.ndarray) -> np.ndarray:
        """Evaluate ``W_Φ`` at lags `s`."""

    @property
    @abc.abstractmethod
    def max_frequency(self) -> float:
        """Highest frequency present in ``W_Φ``, used to size lag quadrature."""

    @abc.abstractmethod
    def spectral_response(
        self, window: Window, gap: float, controls: QuadratureControls
    ) -> t.Tuple[float, float]:
        """
        Return ``∫dμ(ω)e^{-ωε}|ζ̃(ω + Ω)|²`` and its error, the momentum-space excitation
        integral without the ``λ²`` factor.
        """

    def with_epsilon(self, epsilon: float) -> "SmearedWightman":
        """Return a copy regulated by `epsilon`; tabulated measures are shared."""
        if not (np.isfinite(epsilon) and epsilon >= 0):
            raise InvalidParameterError(f"epsilon must be non-negative, got {epsilon!r}")
        other = copy.copy(self)
        other.epsilon = epsilon
        return other


class GaussianSmearedWightman(SmearedWightman):
    """
    Closed form for an isotropic Gaussian profile ``Φ ∝ e^{-|x - c|²/(2ℓ²)}`` and a massless field.

    With ``z = s - iε``, ``a = ℓ²`` and the Faddeeva function w,

        W_Φ(s) = ℓ³/(√π ω_N) · (1/(2a) - i√π z/(4a^{3/2}) w(-z/(2√a)))

    The Faddeeva argument lies in the upper half plane for every real lag.
    """

    def __init__(self, ell: float, omega: float, epsilon: float):
        self.ell = ell
        self.omega = omega
        self.epsilon = epsilon
        self.prefactor = ell**3 / (np.sqrt(np.pi) * omega)

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(ell={self.ell!r}, omega={self.omega!r},"
            f" epsilon={self.epsilon!r})"
        )

    def __call__(self, s):
        a = self.ell**2
        z = np.asarray(s, dtype=float) - 1j * self.epsilon
        faddeeva = wofz(-z / (2.0 * self.ell))
        value = 1.0 / (2.0 * a) - 1j * np.sqrt(np.pi) * z / (4.0 * a**1.5) * faddeeva
        return self.prefactor * value

    @property
    def max_frequency(self) -> float:
        return math.sqrt(_PROFILE_TAIL) / self.ell

    def spectral_response(self, window, gap, controls):
        k_max = self.max_frequency
        window_reach = window.cutoff_frequency() + abs(gap)
        if np.isfinite(window_reach):
            k_max = min(k_max, window_reach)

        def integrand(k):
            spectrum = abs(complex(window.fourier(np.array([k + gap]))[0])) ** 2
            return k * math.exp(-(self.ell**2) * k**2 - k * self.epsilon) * spectrum

        relative = dataclasses.replace(controls, epsabs=0.0)
        value, error = adaptive(integrand, 0.0, k_max, relative, complex_valued=False)
        return self.prefactor * value, self.prefactor * error


@memoize("spectral", maxsize=32)
def spectral_density(
    mode: Mode,
    mass: float,
    k_max: float,
    panels: int,
    order: int,
    angular: t.Tuple[int, int],
) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Tabulate the radial spectral measure of a smeared vacuum two-point function.

    Returns:
        tuple: Nodes ``k_j`` and weights ``w_j k_j² D(k_j)`` with ``D`` the angular integral of
        ``|Φ̃(k)|²/((2π)³2ω_k)``.
    """
    if mode.dim != 3:
        raise InvalidParameterError("smeared two-point functions need a 3D mode")
    k, w = panel_nodes(0.0, k_max, panels, order)
    n_theta, n_phi = angular
    cos_theta, w_theta = gauss_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    directions = np.stack(
        [
            np.outer(sin_theta, np.cos(phi)).ravel(),
            np.outer(sin_theta, np.sin(phi)).ravel(),
            np.repeat(cos_theta, n_phi),
        ],
        axis=-1,
    )
    direction_weights = np.repeat(w_theta, n_phi) * (2.0 * np.pi / n_phi)

    transform = mode.fourier(k[:, None, None] * directions[None, :, :])
    angular_integral = (np.abs(transform) ** 2) @ direction_weights
    omega = np.sqrt(k**2 + mass**2)
    weights = w * k**2 * angular_integral / ((2.0 * np.pi) ** 3 * 2.0 * omega)
    logger.debug(
        "tabulated spectral density: %d radial x %d angular nodes", len(k), len(direction_weights)
    )
    k.setflags(write=False)
    weights.setflags(write=False)
    return k, weights


class _MeasureSmearedWightman(SmearedWightman):
    """Shared evaluation of ``Σ_j c_j e^{-iω_j(s - iε)}`` over a discrete spectral measure."""

    omegas: np.ndarray
    weights: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        damped = self.weights * np.exp(-self.omegas * self.epsilon)
        return np.exp(-1j * np.multiply.outer(s, self.omegas)) @ damped

    @property
    def max_frequency(self) -> float:
        return float(np.max(self.omegas)) if len(self.omegas) else 0.0

    def _response(self, window: Window, gap: float) -> float:
        spectrum = np.abs(window.fourier(self.omegas + gap)) ** 2
        return float(np.sum(self.weights * np.exp(-self.omegas * self.epsilon) * spectrum))


class SpectralSmearedWightman(_MeasureSmearedWightman):
    """
    Generic continuum case from a tabulated radial spectral density.

    Frequencies above `k_max` are dropped; callers choose `k_max` so that the window spectrum
    suppresses them in every integral that uses the result.
    """

    def __init__(
        self,
        mode: Mode,
        mass: float,
        epsilon: float,
        k_max: float,
        panels: int = 32,
        order: int = 16,
        angular: t.Tuple[int, int] = (24, 48),
    ):
        self.mode = mode
        self.mass = mass
        self.epsilon = epsilon
        self.k_max = k_max
        self._coarse = (panels // 2, order, tuple(angular))
        k, self.weights = spectral_density(mode, mass, k_max, panels, order, tuple(angular))
        self.omegas = np.sqrt(k**2 + mass**2)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(mode={self.mode.index!r}, k_max={self.k_max!r})"

    def spectral_response(self, window, gap, controls):
        value = self._response(window, gap)
        panels, order, angular = self._coarse
        k, weights = spectral_density(self.mode, self.mass, self.k_max, panels, order, angular)
        coarse = DiscreteSmearedWightman(np.sqrt(k**2 + self.mass**2), weights, self.epsilon)
        return value, abs(value - coarse._response(window, gap))


class DiscreteSmearedWightman(_MeasureSmearedWightman):
    """Finite mode sum ``Σ_k c_k² e^{-iω_k(s - iε)}`` of a confined field."""

    def __init__(self, omegas: np.ndarray, weights: np.ndarray, epsilon: float = 0.0):
        self.omegas = np.asarray(omegas, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.epsilon = epsilon
        if self.omegas.shape != self.weights.shape:
            raise InvalidParameterError("omegas and weights must have the same shape")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(modes={len(self.omegas)}, epsilon={self.epsilon!r})"

    def spectral_response(self, window, gap, controls):
        return self._response(window, gap), 0.0


def smeared_wightman(
    field: t.Union[FieldSpec, BoxField], mode: Mode, window: Window, gap: float
) -> SmearedWightman:
    """
    Return the smeared two-point function of `field` for `mode`.

    A box field gives its mode sum. A massless continuum field with an isotropic Gaussian mode
    uses the closed form; any other continuum case tabulates the spectral density up to the
    window's cutoff frequency shifted by ``|Ω|``.
    """
    if isinstance(field, BoxField):
        return DiscreteSmearedWightman(field.basis.omegas, field.overlaps(mode) ** 2, field.epsilon)

    if mode.dim != 3:
        raise InvalidParameterError("smeared two-point functions need a 3D mode")
    if field.epsilon > window.duration / 100.0:
        raise InvalidParameterError(
            f"epsilon={field.epsilon!r} is not small against the window"
            f" duration {window.duration!r}"
        )
    width = mode.gaussian_width
    if field.mass == 0 and width is not None:
        return GaussianSmearedWightman(width, mode.omega, field.epsilon)

    k_max = window.cutoff_frequency() + abs(gap)
    if not np.isfinite(k_max):
        raise InvalidParameterError(f"{window!r} has no spectral cutoff for a tabulated density")
    return SpectralSmearedWightman(mode, field.mass, field.epsilon, k_max)
