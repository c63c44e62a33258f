"""Fixed and adaptive quadrature rules shared by the numerical modules."""

import dataclasses
import logging
import typing as t
import warnings

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from .errors import InvalidParameterError, QuadratureError
from .memoization import memoize


logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclasses.dataclass(frozen=True)
class QuadratureControls:
    """
    Tolerances and rule sizes for every integral of a computation.

    Attributes:
        epsabs: Absolute tolerance of adaptive rules.
        epsrel: Relative tolerance of adaptive rules.
        limit: Maximum number of adaptive subintervals.
        panels: Panel count of fixed composite rules.
        order: Gauss-Legendre order per panel.
        consistency_rtol: Relative floor of the two-path agreement test.
    """

    epsabs: float = 1e-12
    epsrel: float = 1e-10
    limit: int = 500
    panels: int = 64
    order: int = 16
    consistency_rtol: float = 1e-6

    def __post_init__(self):
        if not self.epsabs >= 0 or not self.epsrel >= 0 or self.epsabs + self.epsrel == 0:
            raise InvalidParameterError("quadrature tolerances must be non-negative and not both 0")
        for name in ("limit", "panels", "order"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer")
            if value < 1:
                raise InvalidParameterError(f"{name} must be at least 1")
        if not self.consistency_rtol > 0:
            raise InvalidParameterError("consistency_rtol must be positive")

    @property
    def tolerance(self) -> float:
        """Scalar tolerance used for positivity and equivalence thresholds."""
        return self.epsabs

    def refined(self) -> "QuadratureControls":
        """Return controls with doubled panel count, for self-convergence checks."""
        return dataclasses.replace(self, panels=2 * self.panels)


@memoize("rules", maxsize=32)
def gauss_legendre(order: int) -> t.Tuple[np.ndarray, np.ndarray]:
    """Return read-only Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    nodes, weights = roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(a: float, b: float, panels: int, order: int) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Return nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``.

    Example:

        >>> x, w = panel_nodes(0.0, 2.0, 4, 3)
        >>> round(float(np.sum(w * x**2)), 12)
        2.666666666667
    """
    nodes, weights = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def composite_gauss_legendre(
    func: t.Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int, order: int
) -> t.Tuple[complex, float]:
    """
    Integrate a vectorized `func` over ``[a, b]`` with a fixed composite rule.

    Returns:
        tuple: The integral and an error estimate from the same rule with half the panels.
    """
    if b <= a:
        return 0.0, 0.0
    x, w = panel_nodes(a, b, panels, order)
    value = np.sum(w * func(x))
    coarse_panels = max(1, panels // 2)
    xc, wc = panel_nodes(a, b, coarse_panels, order)
    coarse = np.sum(wc * func(xc))
    return value, float(abs(value - coarse))


def adaptive(
    func: t.Callable[[float], complex],
    a: float,
    b: float,
    controls: QuadratureControls,
    points: t.Optional[t.Sequence[float]] = None,
    complex_valued: bool = True,
) -> t.Tuple[complex, float]:
    """
    Integrate a scalar `func` over ``[a, b]`` with ``scipy.integrate.quad``.

    Complex integrands are split into real and imaginary parts. A rule that stops with an error
    estimate more than a hundred times the requested tolerance raises :class:`.QuadratureError`.
    """
    if b <= a:
        return 0.0, 0.0

    parts = [lambda x: func(x).real, lambda x: func(x).imag] if complex_valued else [func]
    values = []
    errors = []
    for part in parts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, error = integrate.quad(
                part,
                a,
                b,
                epsabs=controls.epsabs,
                epsrel=controls.epsrel,
                limit=controls.limit,
                points=points,
            )
        bound = max(controls.epsabs, controls.epsrel * abs(value), _TINY)
        if error > bound:
            logger.warning("quad on [%g, %g] reached error %.3e only", a, b, error)
        if error > 100 * bound:
            raise QuadratureError(
                f"adaptive quadrature on [{a!r}, {b!r}] stopped at error {error:.3e}"
                f" above tolerance {bound:.3e}"
            )
        values.append(value)
        errors.append(error)

    logger.debug("quad on [%g, %g]: error %.3e", a, b, sum(errors))
    if complex_valued:
        return complex(values[0], values[1]), float(np.hypot(errors[0], errors[1]))
    return values[0], errors[0]
