"""Localqft computes how a single mode of a confined quantum field responds to an external field."""

__version__ = "0.1.0"

from .cache import ResultCache, fingerprint
from .errors import (
    ConfinementError,
    ConsistencyError,
    DomainError,
    EquivalenceError,
    GeometryError,
    IntegratorError,
    InvalidParameterError,
    LocalQFTError,
    QuadratureError,
    ResolutionError,
    ScenarioError,
)
from .gaussian import GaussianState, single_mode_fock, symplectic_form
from .kernel import (
    BoxField,
    DiscreteSmearedWightman,
    Event,
    FieldSpec,
    GaussianSmearedWightman,
    SpectralSmearedWightman,
    boxfield_wightman,
    boxfield_wightman_tail,
    commutator,
    smeared_wightman,
    wightman_line,
    wightman_vacuum,
)
from .memoization import CacheRegistry, caches, memoize
from .oracle import (
    EquivalenceReport,
    OracleScenario,
    ToyUniverse,
    build_toy,
    evolve_exact,
    evolve_fock,
    field_tail_bound,
    trace_to_mode,
    verify_equivalence,
)
from .perturbation import (
    CouplingConfig,
    Excitation,
    ReducedState,
    ResponsePoint,
    coherence_02,
    excitation_probability,
    reduced_state,
    response_curve,
    spurious_term_residual,
    spurious_term_scale,
    udw_reduced_state,
)
from .quadrature import QuadratureControls
from .scenario import Scenario, load_scenario, parse_scenario
from .smearing import (
    CompactWindow,
    ConstantWindow,
    GaussianWindow,
    Smearing,
    build_lambda,
    gaussian_window,
    static_redshift,
)
from .spectrum import (
    DirichletBox,
    Mode,
    ModeBasis,
    Quadratic,
    StaticCurved1D,
    Tabulated1D,
    box_modes,
    check_orthonormality,
    overlap_matrix,
    quadratic_modes,
    separable_modes,
    solve_modes_fd,
    static_curved_modes_1d,
)
from .stats import CacheStats, CacheStatsTracker
