"""One-dimensional, L²-normalized mode factors.

Every mode profile in localqft is a product of these factors, one per axis, times the
Klein-Gordon prefactor ``(2ω)^(-1/2)``. Each factor knows how to evaluate itself, its Fourier
transform ``∫f(x)e^{-ikx}dx``, its effective support and a quadrature rule that resolves it.
"""

import abc
import typing as t

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import panel_nodes


#: Rescaling threshold of the Hermite recurrence.
_HERMITE_RESCALE = 1e150

#: Order of the Gauss-Legendre panels used by analytic factors.
_PANEL_ORDER = 16

#: Largest batch of wavenumbers a grid factor transforms node by node.
_DIRECT_FOURIER_SIZE = 4096


class Profile1D(abc.ABC):
    """Abstract one-dimensional factor ``f`` with ``∫|f|²w dx = 1``."""

    @abc.abstractmethod
    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the factor."""

    @abc.abstractmethod
    def fourier(self, k: np.ndarray) -> np.ndarray:
        """Return ``∫f(x)e^{-ikx}dx``."""

    @abc.abstractmethod
    def support(self) -> t.Tuple[float, float]:
        """Return the interval outside which the factor is zero to double precision."""

    @abc.abstractmethod
    def quadrature(self) -> t.Tuple[np.ndarray, np.ndarray]:
        """Return nodes and weights that integrate products with this factor."""

    @property
    @abc.abstractmethod
    def resolution(self) -> int:
        """Number of oscillations across the support, used to size shared quadrature rules."""

    def center(self) -> float:
        """Return the ``|f|²``-weighted mean position."""
        x, w = self.quadrature()
        return float(np.sum(w * x * self(x) ** 2))


class SineProfile(Profile1D):
    """
    Dirichlet box factor ``√(2/d) sin(πn(x - origin)/d)`` on ``[origin, origin + d]``.

    Args:
        n: Quantum number, starting at 1.
        d: Box side.
        origin: Left wall.
    """

    def __init__(self, n: int, d: float, origin: float = 0.0):
        self.n = n
        self.d = d
        self.origin = origin
        self.q = np.pi * n / d

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(n={self.n}, d={self.d!r}, origin={self.origin!r})"

    def cache_token(self) -> tuple:
        return (self.n, self.d, self.origin)

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - self.origin
        inside = (u >= 0) & (u <= self.d)
        return np.where(inside, np.sqrt(2.0 / self.d) * np.sin(self.q * u), 0.0)

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        q, d = self.q, self.d
        # (-1)^n e^{-ikd} folds to e^{-iδd}, with δ the distance to the nearer pole k = ±q.
        delta = np.where(k >= 0, k - q, k + q)
        safe = np.where(delta == 0, 1.0, delta)
        ratio = np.where(delta == 0, 1j * d, -np.expm1(-1j * delta * d) / safe)
        value = np.where(k >= 0, -q * ratio / (q + k), q * ratio / (q - k))
        return np.sqrt(2.0 / d) * np.exp(-1j * k * self.origin) * value

    def support(self):
        return self.origin, self.origin + self.d

    @property
    def resolution(self) -> int:
        return self.n

    def quadrature(self):
        return panel_nodes(*self.support(), 4 + self.n, _PANEL_ORDER)

    def center(self) -> float:
        return self.origin + 0.5 * self.d


class HermiteProfile(Profile1D):
    """
    Harmonic factor ``ℓ^(-1/2) h_n((x - c)/ℓ)`` with ``h_n`` the normalized Hermite function.

    Args:
        n: Quantum number, starting at 0.
        ell: Length scale ℓ of the potential ``|x|²/(2ℓ⁴)``.
        center: Potential minimum.
    """

    def __init__(self, n: int, ell: float, center: float = 0.0):
        self.n = n
        self.ell = ell
        self.c = center

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(n={self.n}, ell={self.ell!r}, center={self.c!r})"

    def cache_token(self) -> tuple:
        return (self.n, self.ell, self.c)

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.c) / self.ell
        return hermite_functions(self.n, u)[self.n] / np.sqrt(self.ell)

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        h = hermite_functions(self.n, k * self.ell)[self.n]
        phase = (-1j) ** self.n * np.exp(-1j * k * self.c)
        return np.sqrt(2.0 * np.pi * self.ell) * phase * h

    def support(self):
        half = self.ell * (np.sqrt(2.0 * self.n + 1.0) + 8.0)
        return self.c - half, self.c + half

    @property
    def resolution(self) -> int:
        return self.n + 1

    def quadrature(self):
        return panel_nodes(*self.support(), 8 + self.n, _PANEL_ORDER)

    def center(self) -> float:
        return self.c


class GridProfile(Profile1D):
    """
    Tabulated factor from a finite difference eigenvector.

    Values are normalized so that the trapezoid rule with the optional `weight` gives
    ``Σ w_i f_i² = 1``. Off-grid evaluation uses a cubic spline and is zero outside the grid.

    Args:
        nodes: Uniform grid including both Dirichlet ends.
        values: Samples on `nodes`.
        weight: Volume weight per node (``√h/β`` for static curved grids).
    """

    def __init__(
        self, nodes: np.ndarray, values: np.ndarray, weight: t.Optional[np.ndarray] = None
    ):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        weight = np.ones_like(nodes) if weight is None else np.asarray(weight, dtype=float)
        trapezoid = np.full_like(nodes, nodes[1] - nodes[0])
        trapezoid[0] = trapezoid[-1] = 0.5 * trapezoid[0]

        self.nodes = nodes
        self.weights = trapezoid
        self.inner_weights = trapezoid * weight
        norm = np.sqrt(np.sum(self.inner_weights * values**2))
        # Fix the sign so the first significant lobe is positive.
        lead = values[np.argmax(np.abs(values) > 1e-3 * np.max(np.abs(values)))]
        self.values = np.sign(lead) * values / norm
        for array in (self.nodes, self.weights, self.inner_weights, self.values):
            array.setflags(write=False)
        self._spline = CubicSpline(nodes, self.values)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(points={len(self.nodes)})"

    def cache_token(self) -> tuple:
        return (self.nodes, self.values, self.inner_weights)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.nodes[0]) & (x <= self.nodes[-1])
        return np.where(inside, self._spline(np.clip(x, self.nodes[0], self.nodes[-1])), 0.0)

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        if k.size <= _DIRECT_FOURIER_SIZE or not np.any(k):
            return self._fourier_direct(k)
        # Large batches go through a spline of the transform sampled well below its period.
        extent = self.nodes[-1] - self.nodes[0]
        reach = float(np.max(np.abs(k)))
        count = 2 * int(np.ceil(reach * 64.0 * extent / np.pi)) + 2
        table_k = np.linspace(-reach, reach, count)
        table = self._fourier_direct(table_k)
        real = CubicSpline(table_k, table.real)(k)
        imag = CubicSpline(table_k, table.imag)(k)
        return real + 1j * imag

    def _fourier_direct(self, k: np.ndarray) -> np.ndarray:
        phases = np.exp(-1j * np.multiply.outer(k, self.nodes))
        return phases @ (self.weights * self.values)

    def support(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def resolution(self) -> int:
        return max(1, len(self.nodes) // 8)

    def quadrature(self):
        return self.nodes, self.inner_weights

    def center(self) -> float:
        return float(np.sum(self.inner_weights * self.nodes * self.values**2))


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """
    Evaluate the normalized Hermite functions ``h_0 .. h_{n_max}`` at `x`.

    Uses the three-term recurrence ``h_{n+1} = √(2/(n+1)) x h_n - √(n/(n+1)) h_{n-1}`` on the
    polynomial part with a running log-scale, so large orders neither overflow nor lose the
    Gaussian envelope to underflow early.

    Example:

        >>> h = hermite_functions(2, np.array([0.0]))
        >>> round(float(h[0, 0]), 10) == round(np.pi ** -0.25, 10)
        True
        >>> float(h[1, 0])
        0.0
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    log_scale = -0.5 * x**2
    previous = np.zeros_like(x)
    current = np.full_like(x, np.pi**-0.25)
    out[0] = current * np.exp(log_scale)

    for n in range(n_max):
        following = np.sqrt(2.0 / (n + 1)) * x * current - np.sqrt(n / (n + 1)) * previous
        previous, current = current, following
        large = np.abs(current) > _HERMITE_RESCALE
        if np.any(large):
            factor = np.where(large, np.abs(current), 1.0)
            current = current / factor
            previous = previous / factor
            log_scale = log_scale + np.log(factor)
        out[n + 1] = current * np.exp(log_scale)

    return out


def overlap_1d(f: Profile1D, g: Profile1D) -> float:
    """
    Return ``∫f g dx`` over the intersection of both supports.

    Two grid factors on the same grid use the discrete inner product of that grid, including its
    volume weight; every other pair uses a composite Gauss-Legendre rule sized by both factors.
    """
    if (
        isinstance(f, GridProfile)
        and isinstance(g, GridProfile)
        and f.nodes.shape == g.nodes.shape
        and np.array_equal(f.nodes, g.nodes)
    ):
        return float(np.sum(f.inner_weights * f.values * g.values))

    fa, fb = f.support()
    ga, gb = g.support()
    a, b = max(fa, ga), min(fb, gb)
    if b <= a:
        return 0.0
    panels = 8 + 2 * (f.resolution + g.resolution)
    x, w = panel_nodes(a, b, panels, _PANEL_ORDER)
    return float(np.sum(w * f(x) * g(x)))
