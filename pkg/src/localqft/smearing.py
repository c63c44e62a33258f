"""Interaction windows and the spacetime smearings ``Λ⁻ = ζ(t)e^{-iω_N t}Φ_N(x)`` built from them.

Windows are dimensionless switching functions of time only; spatial localization of the effective
detector comes entirely from the accessible mode profile.
"""

import abc
import dataclasses
import logging
import math
import typing as t

import numpy as np

from .errors import InvalidParameterError
from .quadrature import panel_nodes
from .spectrum import Mode, StaticCurved1D, T_POTENTIAL


logger = logging.getLogger(__name__)

#: ``-ln`` of the relative size below which a window counts as switched off.
_TAIL = math.log(1e17)

#: ``-ln`` of the relative spectral weight below which window frequencies are dropped.
_SPECTRAL_TAIL = math.log(1e16)

#: Gauss-Legendre order used for numerical window transforms.
_ORDER = 16


class Window(abc.ABC):
    """Abstract dimensionless switching function ζ(t)."""

    @abc.abstractmethod
    def __call__(self, t: np.ndarray) -> np.ndarray:
        """Evaluate ζ."""

    @abc.abstractmethod
    def support(self) -> t.Tuple[float, float]:
        """Return the interval outside which ζ is negligible."""

    @property
    @abc.abstractmethod
    def duration(self) -> float:
        """Characteristic duration used as the unit of time."""

    def fourier(self, nu: np.ndarray) -> np.ndarray:
        """Return ``ζ̃(ν) = ∫ζ(t)e^{-iνt}dt``."""
        nu = np.asarray(nu, dtype=float)
        a, b = self.support()
        reach = float(np.max(np.abs(nu))) if nu.size else 0.0
        x, w = panel_nodes(a, b, 16 + int(np.ceil(reach * (b - a) / np.pi)), _ORDER)
        return np.exp(-1j * np.multiply.outer(nu, x)) @ (w * self(x))

    def square_integral(self) -> float:
        """Return ``∫ζ²dt``."""
        x, w = panel_nodes(*self.support(), 64, _ORDER)
        return float(np.sum(w * self(x) ** 2))

    def cutoff_frequency(self) -> float:
        """
        Return the frequency above which ``|ζ̃(ν)|²`` stays below ``1e-16·|ζ̃(0)|²``.

        The default scans the numerical transform on a geometric grid.
        """
        peak = abs(complex(self.fourier(np.array([0.0]))[0])) ** 2
        nu = 1.0 / self.duration
        while nu < 1e4 / self.duration:
            if abs(complex(self.fourier(np.array([nu]))[0])) ** 2 < np.exp(-_SPECTRAL_TAIL) * peak:
                return nu
            nu *= 1.25
        raise InvalidParameterError(f"{self!r} has no usable spectral cutoff")

    def lag_cutoff(self) -> float:
        """Return the lag beyond which ``ζ(t)ζ(t - s)`` vanishes for every t."""
        a, b = self.support()
        return b - a

    def correlation(self, s: np.ndarray, kappa: float = 0.0) -> np.ndarray:
        """
        Return ``∫ζ(t)ζ(t - s)e^{iκt}dt`` for each lag `s`.

        This is the inner time integral of every second order term once the outer variables are
        changed to the lag ``s = t - t'``.
        """
        s = np.asarray(s, dtype=float)
        a, b = self.support()
        lo = np.maximum(a, a + s)
        hi = np.minimum(b, b + s)
        width = np.maximum(hi - lo, 0.0)
        panels = 32 + int(np.ceil(abs(kappa) * (b - a) / np.pi))
        nodes, weights = panel_nodes(0.0, 1.0, panels, _ORDER)
        t_grid = lo[..., None] + width[..., None] * nodes
        integrand = self(t_grid) * self(t_grid - s[..., None]) * np.exp(1j * kappa * t_grid)
        return width * (integrand @ weights)


@dataclasses.dataclass(frozen=True)
class GaussianWindow(Window):
    """
    Gaussian switching ``ζ(t) = exp(-πt²/(2T²))`` normalized so that ``∫ζ² dt = T``.

    Example:

        >>> window = GaussianWindow(2.0)
        >>> float(window(0.0)), window.square_integral()
        (1.0, 2.0)
    """

    T: float

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise InvalidParameterError(f"window duration must be positive, got {self.T!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.pi * t**2 / (2.0 * self.T**2))

    def support(self):
        half = self.T * math.sqrt(2.0 * _TAIL / np.pi)
        return -half, half

    @property
    def duration(self) -> float:
        return self.T

    def fourier(self, nu):
        nu = np.asarray(nu, dtype=float)
        return math.sqrt(2.0) * self.T * np.exp(-(nu**2) * self.T**2 / (2.0 * np.pi)) + 0j

    def square_integral(self) -> float:
        return self.T

    def cutoff_frequency(self) -> float:
        return math.sqrt(np.pi * _SPECTRAL_TAIL) / self.T

    def correlation(self, s, kappa=0.0):
        s = np.asarray(s, dtype=float)
        envelope = self.T * math.exp(-(kappa**2) * self.T**2 / (4.0 * np.pi))
        return envelope * np.exp(-np.pi * s**2 / (4.0 * self.T**2) + 0.5j * kappa * s)


@dataclasses.dataclass(frozen=True)
class CompactWindow(Window):
    """Smooth bump ``exp(1 - 1/(1 - u²))`` on ``(t0, t1)`` with ``u`` rescaled to ``(-1, 1)``."""

    t0: float
    t1: float

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.t1) and self.t0 < self.t1):
            raise InvalidParameterError(f"switching interval must satisfy t0 < t1, got {self!r}")

    def __call__(self, t):
        u = (2.0 * np.asarray(t, dtype=float) - self.t0 - self.t1) / (self.t1 - self.t0)
        inside = np.abs(u) < 1.0
        safe = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

    def support(self):
        return self.t0, self.t1

    @property
    def duration(self) -> float:
        return self.t1 - self.t0


@dataclasses.dataclass(frozen=True)
class ConstantWindow(Window):
    """``ζ ≡ 1`` on a finite span centred at `center`; used for stationary checks."""

    span: float
    center: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.span) and self.span > 0):
            raise InvalidParameterError(f"span must be positive, got {self.span!r}")

    def __call__(self, t):
        a, b = self.support()
        t = np.asarray(t, dtype=float)
        return np.where((t >= a) & (t <= b), 1.0, 0.0)

    def support(self):
        return self.center - 0.5 * self.span, self.center + 0.5 * self.span

    @property
    def duration(self) -> float:
        return self.span

    def fourier(self, nu):
        nu = np.asarray(nu, dtype=float)
        return self.span * np.sinc(nu * self.span / (2.0 * np.pi)) * np.exp(-1j * nu * self.center)

    def square_integral(self) -> float:
        return self.span

    def cutoff_frequency(self) -> float:
        # |ζ̃|² only decays like ν⁻².
        return math.inf

    def correlation(self, s, kappa=0.0):
        s = np.asarray(s, dtype=float)
        a, b = self.support()
        lo = np.maximum(a, a + s)
        hi = np.minimum(b, b + s)
        width = np.maximum(hi - lo, 0.0)
        if kappa == 0:
            return width + 0j
        return np.where(
            width > 0, (np.exp(1j * kappa * hi) - np.exp(1j * kappa * lo)) / (1j * kappa), 0.0
        )


def gaussian_window(T: float) -> GaussianWindow:
    """Return the reference window ``ζ(t) = exp(-πt²/(2T²))``."""
    return GaussianWindow(T)


@dataclasses.dataclass(frozen=True, eq=False)
class Smearing:
    """
    Effective detector smearing of the accessible mode.

    Attributes:
        window: Switching function ζ.
        mode: Accessible mode N.
        gap: Detector gap ``Ω = γω_N``.
        redshift: γ.
        center: Mode centre x₀.
    """

    window: Window
    mode: Mode
    gap: float
    redshift: float = 1.0
    center: t.Tuple[float, ...] = ()

    def cache_token(self) -> tuple:
        return (self.window, self.mode, self.gap, self.redshift)

    def static(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Return the static part ``Λ(t, x) = ζ(t)Φ_N(x)``."""
        return self.window(t) * self.mode.profile(x)

    def lambda_minus(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Return ``Λ⁻(t, x) = ζ(t)e^{-iω_N t}Φ_N(x)``."""
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.mode.omega * t) * self.static(t, x)

    def lambda_plus(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Return ``Λ⁺ = (Λ⁻)*``."""
        return np.conj(self.lambda_minus(t, x))

    def reassemble(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Return ``e^{-iΩt}Λ(t, x)``, equal to Λ⁻ when γ = 1."""
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.gap * t) * self.static(t, x)

    @property
    def length_scale(self) -> float:
        """Spatial size of the mode: ℓ, the box side or the grid extent."""
        factor = self.mode.factors[0]
        for name in ("ell", "d"):
            if hasattr(factor, name):
                return float(getattr(factor, name))
        a, b = factor.support()
        return float(b - a)


def build_lambda(
    window: Window, mode: Mode, redshift: float = 1.0, gap: t.Optional[float] = None
) -> Smearing:
    """
    Return the smearing of `mode` switched by `window`.

    Args:
        window: Switching function.
        mode: Accessible mode.
        redshift: γ of a static observer; the gap is ``γω_N``.
        gap: Explicit gap overriding ``γω_N``, for sweeps and the de-excitation channel.
    """
    if not (np.isfinite(redshift) and redshift > 0):
        raise InvalidParameterError(f"redshift must be positive, got {redshift!r}")
    omega_gap = redshift * mode.omega if gap is None else float(gap)
    if not np.isfinite(omega_gap):
        raise InvalidParameterError(f"gap must be finite, got {gap!r}")
    return Smearing(window, mode, omega_gap, redshift, mode.center())


def spatial_fourier(smearing: Smearing, k: np.ndarray) -> np.ndarray:
    """Return ``Φ̃_N(k) = ∫Φ_N(x)e^{-ik·x}d³x`` of the smearing's mode."""
    return smearing.mode.fourier(k)


def static_redshift(potential: T_POTENTIAL, mode: Mode) -> float:
    """
    Return γ relating the proper gap of a static observer at the mode centre to ω_N.

    Flat potentials give 1; a static curved background gives ``1/β(x₀)``.
    """
    if isinstance(potential, StaticCurved1D):
        (x0,) = mode.center()
        gamma = 1.0 / potential.lapse_at(x0)
        logger.debug("static redshift at x0=%g: %g", x0, gamma)
        return gamma
    return 1.0


def smearing_table(smearing: Smearing, samples: int = 201) -> t.Dict[str, np.ndarray]:
    """Sample ζ(t) over the window support and Φ_N along x through the mode centre."""
    a, b = smearing.window.support()
    times = np.linspace(a, b, samples)
    low, high = smearing.mode.factors[0].support()
    xs = np.linspace(low, high, samples)
    points = np.zeros((samples, smearing.mode.dim))
    points[:] = smearing.center
    points[:, 0] = xs
    return {
        "t": times,
        "zeta": smearing.window(times),
        "x": xs,
        "phi": smearing.mode.profile(points),
    }
