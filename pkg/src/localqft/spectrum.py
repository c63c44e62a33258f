"""Klein-Gordon normalized mode bases of a scalar field confined by an external potential.

A confined field obeys ``(∂_t² + E²)φ = 0`` with ``E² = -∇² + m² + 2V``. Its modes are
``u_n = e^{-iω_n t}Φ_n(x)`` with ``∫Φ_n² d³x = 1/(2ω_n)``. Bases are built analytically for the
Dirichlet box and the quadratic potential, and by a finite difference eigensolve for tabulated and
static curved one-dimensional problems.
"""

import dataclasses
import itertools
import logging
import typing as t

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    ConfinementError,
    GeometryError,
    InvalidParameterError,
    ResolutionError,
)
from .memoization import memoize
from .profiles import GridProfile, HermiteProfile, Profile1D, SineProfile, overlap_1d


logger = logging.getLogger(__name__)

#: Mode index: a triple for separable 3D bases, an integer for 1D bases.
T_MODE_INDEX = t.Union[int, t.Tuple[int, int, int]]

#: Smallest accepted tabulation.
MIN_GRID_POINTS = 64

#: Relative spacing deviation above which a tabulation is resampled onto a uniform grid.
_UNIFORM_RTOL = 1e-9


@dataclasses.dataclass(frozen=True)
class DirichletBox:
    """Hard-walled cube ``[origin, origin + d]³`` with ``V = 0`` inside."""

    d: float
    origin: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.d) and self.d > 0):
            raise InvalidParameterError(f"box side must be positive, got {self.d!r}")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))


@dataclasses.dataclass(frozen=True)
class Quadratic:
    """Isotropic potential ``V = |x - center|²/(2ℓ⁴)``."""

    ell: float
    center: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise InvalidParameterError(f"ell must be positive, got {self.ell!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float) - np.asarray(self.center)
        return np.sum(x**2, axis=-1) / (2.0 * self.ell**4)


@dataclasses.dataclass(frozen=True, eq=False)
class Tabulated1D:
    """
    One-dimensional potential samples ``V(x_i)`` in units of energy².

    Attributes:
        grid: Strictly increasing abscissae.
        values: Samples of V, finite.
        walls: Whether the grid ends are hard walls. Without walls the tabulation must confine every
            requested eigenvalue by itself.
    """

    grid: np.ndarray
    values: np.ndarray
    walls: bool = False

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise InvalidParameterError("grid and values must be 1D arrays of equal length")
        if len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise InvalidParameterError("grid must be strictly increasing")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise InvalidParameterError("tabulated potential must be finite")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.grid, self.values)

    def uniform(self) -> "Tabulated1D":
        """Return this tabulation on a uniform grid with the same number of points."""
        spacing = np.diff(self.grid)
        if np.ptp(spacing) <= _UNIFORM_RTOL * spacing.mean():
            return self
        logger.debug("resampling %d-point tabulation onto a uniform grid", len(self.grid))
        grid = np.linspace(self.grid[0], self.grid[-1], len(self.grid))
        return Tabulated1D(grid, self(grid), walls=self.walls)


@dataclasses.dataclass(frozen=True, eq=False)
class StaticCurved1D:
    """
    Static one-dimensional background with lapse β and spatial metric h sampled on the potential's
    grid.
    """

    potential: Tabulated1D
    lapse: np.ndarray
    metric: np.ndarray

    def __post_init__(self):
        for name in ("lapse", "metric"):
            raw = getattr(self, name)
            samples = raw(self.potential.grid) if callable(raw) else raw
            samples = np.broadcast_to(np.asarray(samples, dtype=float), self.potential.grid.shape)
            if not np.all(np.isfinite(samples)) or np.any(samples <= 0):
                raise GeometryError(f"{name} samples must be positive everywhere on the grid")
            samples = np.array(samples)
            samples.setflags(write=False)
            object.__setattr__(self, name, samples)

    def lapse_at(self, x: float) -> float:
        return float(np.interp(x, self.potential.grid, self.lapse))


#: Any supported potential.
T_POTENTIAL = t.Union[DirichletBox, Quadratic, Tabulated1D, StaticCurved1D]


@dataclasses.dataclass(frozen=True, eq=False)
class Mode:
    """
    One KG-normalized eigenmode ``Φ_n = (2ω_n)^(-1/2) Π_i f_i(x_i)``.

    Attributes:
        index: Mode index.
        omega: Eigenfrequency ω_n.
        factors: One L²-normalized factor per spatial axis.
    """

    index: T_MODE_INDEX
    omega: float
    factors: t.Tuple[Profile1D, ...]

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def amplitude(self) -> float:
        """KG prefactor ``(2ω)^(-1/2)``."""
        return 1.0 / np.sqrt(2.0 * self.omega)

    def profile(self, x: np.ndarray) -> np.ndarray:
        """Evaluate Φ_n at points `x` of shape ``(..., dim)``."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        value = self.amplitude
        for axis, factor in enumerate(self.factors):
            value = value * factor(x[..., axis])
        return value

    def fourier(self, k: np.ndarray) -> np.ndarray:
        """Return ``Φ̃_n(k) = ∫Φ_n(x)e^{-ik·x}`` at wavevectors of shape ``(..., dim)``."""
        k = np.asarray(k, dtype=float)
        if self.dim == 1 and (k.ndim == 0 or k.shape[-1] != 1):
            k = k[..., None]
        value = self.amplitude + 0j
        for axis, factor in enumerate(self.factors):
            value = value * factor.fourier(k[..., axis])
        return value

    def center(self) -> t.Tuple[float, ...]:
        """Return the ``|Φ_n|²``-weighted mean position."""
        return tuple(factor.center() for factor in self.factors)

    @property
    def gaussian_width(self) -> t.Optional[float]:
        """ℓ when the profile is an isotropic Gaussian (quadratic ground mode), else ``None``."""
        if self.dim != 3 or not all(isinstance(f, HermiteProfile) for f in self.factors):
            return None
        widths = {f.ell for f in self.factors}  # type: ignore[attr-defined]
        if len(widths) != 1 or any(f.n for f in self.factors):  # type: ignore[attr-defined]
            return None
        return widths.pop()

    def cache_token(self) -> tuple:
        return (self.index, self.omega, self.factors)


@dataclasses.dataclass(frozen=True, eq=False)
class ModeBasis:
    """
    Ordered collection of modes of one potential.

    Attributes:
        potential: Source potential.
        mass: Field mass m.
        modes: Modes in non-decreasing ω, ties broken by index.
        truncation: Per-axis cap or mode count that produced the basis.
    """

    potential: T_POTENTIAL
    mass: float
    modes: t.Tuple[Mode, ...]
    truncation: int

    def __post_init__(self):
        modes = tuple(sorted(self.modes, key=lambda mode: (mode.omega, _index_key(mode.index))))
        indices = [mode.index for mode in modes]
        if len(set(indices)) != len(indices):
            raise InvalidParameterError("mode indices must be unique")
        object.__setattr__(self, "modes", modes)

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> t.Iterator[Mode]:
        return iter(self.modes)

    def __getitem__(self, position: int) -> Mode:
        return self.modes[position]

    @property
    def dim(self) -> int:
        return self.modes[0].dim if self.modes else 0

    @property
    def omegas(self) -> np.ndarray:
        return np.array([mode.omega for mode in self.modes])

    def mode(self, index: T_MODE_INDEX) -> Mode:
        """Return the mode with the given index."""
        if isinstance(index, (list, tuple)):
            index = tuple(int(i) for i in index)
        for mode in self.modes:
            if mode.index == index:
                return mode
        raise InvalidParameterError(f"mode {index!r} is not in the basis")

    def centroid(self) -> t.Tuple[float, ...]:
        """Return the mean of the mode centres."""
        centers = np.array([mode.center() for mode in self.modes])
        return tuple(float(c) for c in centers.mean(axis=0))

    def to_dict(self) -> t.Dict[str, t.Any]:
        """Return a JSON-ready summary of indices and eigenfrequencies."""
        return {
            "potential": type(self.potential).__name__,
            "mass": self.mass,
            "truncation": self.truncation,
            "dim": self.dim,
            "modes": [
                {"index": _jsonable_index(mode.index), "omega": mode.omega} for mode in self.modes
            ],
        }

    def cache_token(self) -> tuple:
        return (self.mass, self.modes)


def box_modes(
    d: float, m: float, n_max: int, origin: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)
) -> ModeBasis:
    """
    Return the Dirichlet box basis with ``ω_n = √(m² + (π/d)²|n|²)`` for ``1 ≤ n_i ≤ n_max``.

    Example:

        >>> basis = box_modes(1.0, 0.0, 1)
        >>> basis[0].index, round(basis[0].omega, 6)
        ((1, 1, 1), 5.441398)
    """
    _check_mass(m)
    _check_cap(n_max)
    box = DirichletBox(d, origin)
    factors = [[SineProfile(n, d, o) for n in range(1, n_max + 1)] for o in box.origin]
    modes = []
    for index in itertools.product(range(1, n_max + 1), repeat=3):
        omega = np.sqrt(m**2 + (np.pi / d) ** 2 * sum(n * n for n in index))
        mode_factors = tuple(factors[axis][n - 1] for axis, n in enumerate(index))
        modes.append(Mode(index, float(omega), mode_factors))
    return ModeBasis(box, m, tuple(modes), n_max)


def quadratic_modes(
    ell: float, m: float, n_max: int, center: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)
) -> ModeBasis:
    """
    Return the quadratic-potential basis with ``ω_n = √(m² + (2/ℓ²)(n_x + n_y + n_z + 3/2))``.

    Indices run ``0 ≤ n_i ≤ n_max``.
    """
    _check_mass(m)
    if not isinstance(n_max, int) or n_max < 0:
        raise InvalidParameterError(f"n_max must be a non-negative integer, got {n_max!r}")
    potential = Quadratic(ell, center)
    factors = [[HermiteProfile(n, ell, c) for n in range(n_max + 1)] for c in potential.center]
    modes = []
    for index in itertools.product(range(n_max + 1), repeat=3):
        omega = np.sqrt(m**2 + (2.0 / ell**2) * (sum(index) + 1.5))
        mode_factors = tuple(factors[axis][n] for axis, n in enumerate(index))
        modes.append(Mode(index, float(omega), mode_factors))
    return ModeBasis(potential, m, tuple(modes), n_max)


@dataclasses.dataclass(frozen=True, eq=False)
class FDOperator:
    """
    Symmetrized finite difference operator on the interior nodes of a uniform grid.

    The generalized problem ``-(pΦ')' + qΦ = ω²wΦ`` is stored as the symmetric tridiagonal matrix
    ``W^(-1/2) A W^(-1/2)`` acting on ``Ψ = W^(1/2)Φ``.
    """

    nodes: np.ndarray
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    weight: np.ndarray
    potential_edge: t.Tuple[float, float]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.diagonal * psi
        out[:-1] += self.off_diagonal * psi[1:]
        out[1:] += self.off_diagonal * psi[:-1]
        return out

    def residual(self, mode: Mode) -> float:
        """Return ``‖E²Φ - ω²Φ‖/‖Φ‖`` for a mode of this operator, measured on the grid."""
        psi = np.sqrt(self.weight) * mode.profile(self.nodes[1:-1])
        return float(np.linalg.norm(self.apply(psi) - mode.omega**2 * psi) / np.linalg.norm(psi))


def fd_operator(potential: t.Union[Tabulated1D, StaticCurved1D], m: float) -> FDOperator:
    """Discretize ``E²`` (or its static curved generalization) with central differences."""
    _check_mass(m)
    if isinstance(potential, StaticCurved1D):
        flat = potential.potential
        lapse, metric = potential.lapse, potential.metric
        if not np.array_equal(flat.uniform().grid, flat.grid):
            grid = flat.uniform().grid
            lapse = np.interp(grid, flat.grid, lapse)
            metric = np.interp(grid, flat.grid, metric)
        flat = flat.uniform()
    else:
        flat = potential.uniform()
        lapse = np.ones_like(flat.grid)
        metric = np.ones_like(flat.grid)

    x = flat.grid
    h = x[1] - x[0]
    stiffness = lapse / np.sqrt(metric)
    weight = np.sqrt(metric) / lapse
    local = lapse * np.sqrt(metric) * (m**2 + 2.0 * flat.values)

    mid = 0.5 * (stiffness[1:] + stiffness[:-1])
    w = weight[1:-1]
    diagonal = (mid[:-1] + mid[1:]) / h**2 + local[1:-1]
    off = -mid[1:-1] / h**2
    edge = lapse**2 * (m**2 + 2.0 * flat.values)

    return FDOperator(
        nodes=x,
        diagonal=diagonal / w,
        off_diagonal=off / np.sqrt(w[:-1] * w[1:]),
        weight=w,
        potential_edge=(float(edge[0]), float(edge[-1])),
    )


def solve_modes_fd(potential: Tabulated1D, m: float, count: int) -> ModeBasis:
    """
    Return the lowest `count` modes of ``-d²/dx² + m² + 2V`` with Dirichlet ends.

    Raises:
        ResolutionError: When ``count`` exceeds an eighth of the grid.
        ConfinementError: When the tabulation edges do not exceed the highest eigenvalue and the
            ends are not walls.
    """
    return _solve(potential, m, count, walls=potential.walls)


def static_curved_modes_1d(
    lapse: t.Union[np.ndarray, t.Callable[[np.ndarray], np.ndarray]],
    metric: t.Union[np.ndarray, t.Callable[[np.ndarray], np.ndarray]],
    potential: Tabulated1D,
    m: float,
    count: int,
) -> ModeBasis:
    """
    Return modes of ``(β/√h)∂_x(β√h h^{xx}∂_xΦ) + (ω² - β²(m² + 2V))Φ = 0``.

    Profiles are normalized with the induced volume element, ``∫(√h/β)Φ² dx = 1/(2ω)``. Constant
    unit lapse and metric reproduce :func:`solve_modes_fd` exactly.
    """
    background = StaticCurved1D(potential, lapse, metric)
    return _solve(background, m, count, walls=potential.walls)


def _solve(
    potential: t.Union[Tabulated1D, StaticCurved1D], m: float, count: int, walls: bool
) -> ModeBasis:
    grid = potential.potential.grid if isinstance(potential, StaticCurved1D) else potential.grid
    if not isinstance(count, int) or count < 1:
        raise InvalidParameterError(f"count must be a positive integer, got {count!r}")
    if len(grid) < MIN_GRID_POINTS:
        raise InvalidParameterError(
            f"grid needs at least {MIN_GRID_POINTS} points, got {len(grid)}"
        )
    if count > len(grid) // 8:
        raise ResolutionError(
            f"{count} modes requested but a {len(grid)}-point grid resolves"
            f" at most {len(grid) // 8}"
        )

    operator = fd_operator(potential, m)
    logger.debug("solving %d-point tridiagonal problem for %d modes", len(operator.nodes), count)
    eigenvalues, vectors = eigh_tridiagonal(
        operator.diagonal, operator.off_diagonal, select="i", select_range=(0, count - 1)
    )
    if eigenvalues[0] <= 0:
        raise ConfinementError(f"non-positive eigenvalue ω² = {eigenvalues[0]:.6g}")
    if not walls and min(operator.potential_edge) <= eigenvalues[-1]:
        raise ConfinementError(
            f"tabulation edges {operator.potential_edge} do not confine ω² = {eigenvalues[-1]:.6g}"
        )

    full_weight = np.concatenate(([operator.weight[0]], operator.weight, [operator.weight[-1]]))
    modes = []
    for n, (value, psi) in enumerate(zip(eigenvalues, vectors.T)):
        values = np.concatenate(([0.0], psi / np.sqrt(operator.weight), [0.0]))
        factor = GridProfile(operator.nodes, values, weight=full_weight)
        modes.append(Mode(n, float(np.sqrt(value)), (factor,)))

    return ModeBasis(potential, m, tuple(modes), count)


def separable_modes(axes: t.Sequence[ModeBasis], m: float, n_max: int) -> ModeBasis:
    """
    Combine three massless 1D bases into the 3D basis of ``V(x) + V(y) + V(z)``.

    The 3D eigenfrequency is ``√(m² + κ_x² + κ_y² + κ_z²)`` where κ are the 1D eigenfrequencies;
    indices run ``0 ≤ n_i < n_max`` limited by each axis basis.
    """
    _check_mass(m)
    _check_cap(n_max)
    if len(axes) != 3 or any(axis.dim != 1 for axis in axes):
        raise InvalidParameterError("separable_modes needs exactly three 1D bases")
    if any(axis.mass != 0 for axis in axes):
        raise InvalidParameterError("axis bases must be solved with zero mass")

    ranges = [range(min(n_max, len(axis))) for axis in axes]
    modes = []
    for index in itertools.product(*ranges):
        axis_modes = [axes[a].modes[n] for a, n in enumerate(index)]
        omega = np.sqrt(m**2 + sum(mode.omega**2 for mode in axis_modes))
        factors = tuple(mode.factors[0] for mode in axis_modes)
        modes.append(Mode(tuple(index), float(omega), factors))
    return ModeBasis(axes[0].potential, m, tuple(modes), n_max)


@memoize("overlaps")
def overlap_matrix(basis_a: ModeBasis, basis_b: ModeBasis) -> np.ndarray:
    """
    Return ``O[i, j] = ∫Φ_i^a Φ_j^b d³x`` for two separable bases of equal dimension.

    One-dimensional overlaps are computed once per distinct pair of factors.
    """
    if basis_a.dim != basis_b.dim:
        raise InvalidParameterError("bases must have the same spatial dimension")

    factor_overlaps: t.Dict[t.Tuple[int, int], float] = {}

    def factor_overlap(f: Profile1D, g: Profile1D) -> float:
        key = (id(f), id(g))
        if key not in factor_overlaps:
            factor_overlaps[key] = overlap_1d(f, g)
        return factor_overlaps[key]

    matrix = np.empty((len(basis_a), len(basis_b)))
    for i, mode_a in enumerate(basis_a):
        for j, mode_b in enumerate(basis_b):
            value = mode_a.amplitude * mode_b.amplitude
            for f, g in zip(mode_a.factors, mode_b.factors):
                value *= factor_overlap(f, g)
            matrix[i, j] = value
    matrix.setflags(write=False)
    return matrix


@dataclasses.dataclass(frozen=True)
class OrthonormalityReport:
    """
    Largest departures of a basis from KG orthonormality.

    Attributes:
        max_deviation: ``max |∫Φ_nΦ_m - δ_nm/(2ω_n)|``.
        max_normalization_residual: ``max |2ω_n∫Φ_n² - 1|``.
        max_orthogonality_residual: Largest off-diagonal ``|∫Φ_nΦ_m|`` scaled by ``2√(ω_nω_m)``.
        pairs: Number of pairs checked.
        tol: Tolerance applied to the normalization and orthogonality residuals.
    """

    max_deviation: float
    max_normalization_residual: float
    max_orthogonality_residual: float
    pairs: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_normalization_residual, self.max_orthogonality_residual) < self.tol


def check_orthonormality(basis: ModeBasis, tol: float = 1e-8) -> OrthonormalityReport:
    """Measure KG normalization and pairwise orthogonality of `basis`."""
    if len(basis) == 0:
        raise InvalidParameterError("basis is empty")
    gram = overlap_matrix(basis, basis)
    omegas = basis.omegas
    target = np.diag(1.0 / (2.0 * omegas))
    scale = 2.0 * np.sqrt(np.outer(omegas, omegas))
    scaled = np.abs(gram - target) * scale
    off = scaled - np.diag(np.diag(scaled))
    n = len(basis)
    return OrthonormalityReport(
        max_deviation=float(np.max(np.abs(gram - target))),
        max_normalization_residual=float(np.max(np.diag(scaled))),
        max_orthogonality_residual=float(np.max(off)) if n > 1 else 0.0,
        pairs=n * (n + 1) // 2,
        tol=tol,
    )


def profile_table(
    basis: ModeBasis, count: int = 5, samples: int = 201
) -> t.Tuple[np.ndarray, t.Dict[str, np.ndarray]]:
    """
    Sample the lowest `count` profiles along the x axis through the basis centroid.

    Returns:
        tuple: Abscissae and a mapping from a column label to samples.
    """
    modes = basis.modes[:count]
    lows, highs = zip(*(mode.factors[0].support() for mode in modes))
    x = np.linspace(min(lows), max(highs), samples)
    points = np.zeros((samples, basis.dim))
    points[:] = basis.centroid()
    points[:, 0] = x
    columns = {f"phi_{_label(mode.index)}": mode.profile(points) for mode in modes}
    return x, columns


def _label(index: T_MODE_INDEX) -> str:
    if isinstance(index, tuple):
        return "_".join(str(i) for i in index)
    return str(index)


def _index_key(index: T_MODE_INDEX) -> t.Tuple[int, ...]:
    return index if isinstance(index, tuple) else (index,)


def _jsonable_index(index: T_MODE_INDEX) -> t.Union[int, t.List[int]]:
    return list(index) if isinstance(index, tuple) else index


def _check_mass(m: float) -> None:
    if not (np.isfinite(m) and m >= 0):
        raise InvalidParameterError(f"mass must be non-negative, got {m!r}")


def _check_cap(n_max: int) -> None:
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
        raise InvalidParameterError(f"n_max must be a positive integer, got {n_max!r}")
