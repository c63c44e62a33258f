"""Scenario files.

A scenario is a YAML mapping. Every physical quantity is a plain number in units where the window
duration sets the time scale; lengths share that unit (c = 1) and masses, gaps and frequencies are
its inverse. Unknown keys are rejected at every level and each problem is reported with the dotted
path of the offending key.
"""

import dataclasses
import logging
import os
import typing as t

import yaml

from .artifacts import read_potential_csv
from .errors import LocalQFTError, ScenarioError
from .kernel import FieldSpec
from .oracle import OracleScenario
from .perturbation import CouplingConfig
from .quadrature import QuadratureControls
from .smearing import (
    CompactWindow,
    ConstantWindow,
    GaussianWindow,
    Smearing,
    Window,
    build_lambda,
    static_redshift,
)
from .spectrum import (
    ModeBasis,
    StaticCurved1D,
    T_MODE_INDEX,
    box_modes,
    quadratic_modes,
    separable_modes,
    solve_modes_fd,
    static_curved_modes_1d,
)


logger = logging.getLogger(__name__)

_MISSING = object()

_TOP_KEYS = {
    "potential",
    "field",
    "window",
    "mode",
    "redshift",
    "lambdas",
    "sweep",
    "quadrature",
    "oracle",
    "output",
}
_POTENTIAL_KEYS = {
    "box": {"kind", "d", "origin", "mass", "n_max"},
    "quadratic": {"kind", "ell", "center", "mass", "n_max"},
    "tabulated": {"kind", "csv", "walls", "separable", "mass", "n_max", "count"},
    "static_curved": {"kind", "csv", "walls", "mass", "count"},
}
_WINDOW_KEYS = {
    "gaussian": {"kind", "T"},
    "compact": {"kind", "t0", "t1"},
    "constant": {"kind", "span", "center"},
}
_FIELD_KEYS = {"mass", "epsilon"}
_SWEEP_KEYS = {"gaps", "from_spectrum"}
_QUADRATURE_KEYS = {"epsabs", "epsrel", "limit", "panels", "order", "consistency_rtol"}
_ORACLE_KEYS = {
    "probe_box",
    "probe_origin",
    "probe_cap",
    "field_box",
    "field_cap",
    "field_mass",
    "accessible",
    "steps",
    "span",
}


@dataclasses.dataclass(frozen=True)
class Scenario:
    """
    Validated scenario.

    Attributes:
        potential: Normalized potential section.
        field: External field.
        window: Switching function.
        mode: Accessible mode index, if any.
        redshift: Explicit γ; derived from the potential when omitted.
        lambdas: Couplings.
        gaps: Explicit sweep gaps.
        from_spectrum: Sweep over the lowest this many eigenfrequencies instead.
        quad: Quadrature controls.
        oracle: Equivalence check settings, if any.
        output: Output directory from the file.
        base_dir: Directory relative paths in the file resolve against.
    """

    potential: t.Dict[str, t.Any]
    field: FieldSpec = FieldSpec()
    window: Window = GaussianWindow(1.0)
    mode: t.Optional[T_MODE_INDEX] = None
    redshift: t.Optional[float] = None
    lambdas: t.Tuple[float, ...] = (1.0,)
    gaps: t.Tuple[float, ...] = ()
    from_spectrum: t.Optional[int] = None
    quad: QuadratureControls = QuadratureControls()
    oracle: t.Optional[OracleScenario] = None
    output: t.Optional[str] = None
    base_dir: str = "."

    def with_tolerance(self, tolerance: float) -> "Scenario":
        """Return a copy with ``quadrature.epsabs`` replaced."""
        try:
            quad = dataclasses.replace(self.quad, epsabs=tolerance)
        except LocalQFTError as exc:
            raise ScenarioError(f"--tolerance: {exc}") from exc
        oracle = self.oracle and dataclasses.replace(self.oracle, quad=quad)
        return dataclasses.replace(self, quad=quad, oracle=oracle)

    def basis(self) -> ModeBasis:
        """Build the mode basis the potential section describes."""
        spec = self.potential
        kind = spec["kind"]
        mass = spec["mass"]
        if kind == "box":
            return box_modes(spec["d"], mass, spec["n_max"], spec["origin"])
        if kind == "quadratic":
            return quadratic_modes(spec["ell"], mass, spec["n_max"], spec["center"])

        background = read_potential_csv(os.path.join(self.base_dir, spec["csv"]), spec["walls"])
        if kind == "static_curved":
            if not isinstance(background, StaticCurved1D):
                raise ScenarioError("potential.csv must have four columns (x, beta, h, V)")
            return static_curved_modes_1d(
                background.lapse, background.metric, background.potential, mass, spec["count"]
            )
        if isinstance(background, StaticCurved1D):
            raise ScenarioError("potential.csv must have two columns (x, V)")
        if spec["separable"]:
            axis = solve_modes_fd(background, 0.0, spec["count"])
            return separable_modes([axis, axis, axis], mass, spec["n_max"])
        return solve_modes_fd(background, mass, spec["count"])

    def smearing(self, basis: ModeBasis) -> Smearing:
        """Return the smearing of the accessible mode."""
        if self.mode is None:
            raise ScenarioError("mode is required for this command")
        mode = basis.mode(self.mode)
        redshift = self.redshift
        if redshift is None:
            redshift = static_redshift(basis.potential, mode)
        return build_lambda(self.window, mode, redshift)

    def sweep_gaps(self, basis: ModeBasis) -> t.Tuple[float, ...]:
        if self.from_spectrum is not None:
            return tuple(float(omega) for omega in basis.omegas[: self.from_spectrum])
        return self.gaps

    def coupling_config(self, lam: float, smearing: Smearing) -> CouplingConfig:
        return CouplingConfig(lam, smearing, self.field, self.quad)


def load_scenario(path: str) -> Scenario:
    """
    Read and validate a scenario file.

    Raises:
        ScenarioError: When the file cannot be read, is not valid YAML or fails validation.
    """
    try:
        with open(path, encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario {path!r} is not valid YAML: {exc}") from exc
    return parse_scenario(data, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_scenario(data: t.Any, base_dir: str = ".") -> Scenario:
    """Validate a decoded scenario mapping."""
    data = _mapping(data, "scenario", _TOP_KEYS)
    if "potential" not in data:
        raise ScenarioError("potential is required")

    potential = _potential(data["potential"])
    window = _window(data.get("window", {"kind": "gaussian", "T": 1.0}))
    quad = _quadrature(data.get("quadrature", {}))

    field_data = _mapping(data.get("field", {}), "field", _FIELD_KEYS)
    field = _build(
        "field",
        FieldSpec,
        mass=_number(field_data, "mass", "field", default=0.0),
        epsilon=_number(field_data, "epsilon", "field", default=1e-5 * window.duration),
    )

    mode = _mode_index(data["mode"], "mode") if data.get("mode") is not None else None
    redshift = None
    if data.get("redshift") is not None:
        redshift = _number(data, "redshift", "scenario", positive=True)

    lambdas = _number_list(data.get("lambdas", [1.0]), "lambdas")
    if not lambdas:
        raise ScenarioError("lambdas must not be empty")

    gaps: t.Tuple[float, ...] = ()
    from_spectrum = None
    if data.get("sweep") is not None:
        sweep = _mapping(data["sweep"], "sweep", _SWEEP_KEYS)
        if "gaps" in sweep and "from_spectrum" in sweep:
            raise ScenarioError("sweep takes either gaps or from_spectrum, not both")
        if "gaps" in sweep:
            gaps = _number_list(sweep["gaps"], "sweep.gaps")
            if list(gaps) != sorted(gaps):
                raise ScenarioError("sweep.gaps must be sorted")
        if "from_spectrum" in sweep:
            from_spectrum = _integer(sweep, "from_spectrum", "sweep", minimum=1)

    oracle = None
    if data.get("oracle") is not None:
        oracle = _oracle(data["oracle"], window, quad, potential["mass"])

    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ScenarioError("output must be a string")

    return Scenario(
        potential=potential,
        field=field,
        window=window,
        mode=mode,
        redshift=redshift,
        lambdas=lambdas,
        gaps=gaps,
        from_spectrum=from_spectrum,
        quad=quad,
        oracle=oracle,
        output=output,
        base_dir=base_dir,
    )


def _potential(data: t.Any) -> t.Dict[str, t.Any]:
    kind = _kind(data, "potential", _POTENTIAL_KEYS)
    data = _mapping(data, "potential", _POTENTIAL_KEYS[kind])
    spec: t.Dict[str, t.Any] = {
        "kind": kind,
        "mass": _number(data, "mass", "potential", default=0.0, non_negative=True),
    }
    if kind == "box":
        spec["d"] = _number(data, "d", "potential", positive=True)
        spec["origin"] = _triple(data.get("origin", [0.0, 0.0, 0.0]), "potential.origin")
        spec["n_max"] = _integer(data, "n_max", "potential", default=3, minimum=1)
    elif kind == "quadratic":
        spec["ell"] = _number(data, "ell", "potential", positive=True)
        spec["center"] = _triple(data.get("center", [0.0, 0.0, 0.0]), "potential.center")
        spec["n_max"] = _integer(data, "n_max", "potential", default=2, minimum=0)
    else:
        csv_path = data.get("csv")
        if not isinstance(csv_path, str):
            raise ScenarioError("potential.csv must be a path")
        spec["csv"] = csv_path
        spec["walls"] = _boolean(data, "walls", "potential", default=False)
        spec["count"] = _integer(data, "count", "potential", default=8, minimum=1)
        if kind == "tabulated":
            spec["separable"] = _boolean(data, "separable", "potential", default=False)
            spec["n_max"] = _integer(data, "n_max", "potential", default=3, minimum=1)
    return spec


def _window(data: t.Any) -> Window:
    kind = _kind(data, "window", _WINDOW_KEYS)
    data = _mapping(data, "window", _WINDOW_KEYS[kind])
    if kind == "gaussian":
        return _build("window", GaussianWindow, _number(data, "T", "window", positive=True))
    if kind == "compact":
        return _build(
            "window",
            CompactWindow,
            _number(data, "t0", "window"),
            _number(data, "t1", "window"),
        )
    return _build(
        "window",
        ConstantWindow,
        _number(data, "span", "window", positive=True),
        _number(data, "center", "window", default=0.0),
    )


def _quadrature(data: t.Any) -> QuadratureControls:
    data = _mapping(data, "quadrature", _QUADRATURE_KEYS)
    kwargs: t.Dict[str, t.Any] = {}
    for key in ("epsabs", "epsrel", "consistency_rtol"):
        if key in data:
            kwargs[key] = _number(data, key, "quadrature", non_negative=True)
    for key in ("limit", "panels", "order"):
        if key in data:
            kwargs[key] = _integer(data, key, "quadrature", minimum=1)
    return _build("quadrature", QuadratureControls, **kwargs)


def _oracle(
    data: t.Any, window: Window, quad: QuadratureControls, probe_mass: float
) -> OracleScenario:
    data = _mapping(data, "oracle", _ORACLE_KEYS)
    kwargs: t.Dict[str, t.Any] = {
        "probe_box": _number(data, "probe_box", "oracle", positive=True),
        "probe_cap": _integer(data, "probe_cap", "oracle", default=2, minimum=1),
        "field_box": _number(data, "field_box", "oracle", positive=True),
        "field_cap": _integer(data, "field_cap", "oracle", default=3, minimum=1),
        "field_mass": _number(data, "field_mass", "oracle", default=0.0, non_negative=True),
        "steps": _integer(data, "steps", "oracle", default=4000, minimum=1),
        "window": window,
        "quad": quad,
        "probe_mass": probe_mass,
    }
    if "accessible" in data:
        kwargs["accessible"] = _mode_index(data["accessible"], "oracle.accessible")
    if "probe_origin" in data:
        kwargs["probe_origin"] = _triple(data["probe_origin"], "oracle.probe_origin")
    if "span" in data:
        span = _number_list(data["span"], "oracle.span")
        if len(span) != 2 or span[1] <= span[0]:
            raise ScenarioError("oracle.span must be an increasing pair")
        kwargs["span"] = span
    return _build("oracle", OracleScenario, **kwargs)


def _build(path: str, factory: t.Callable[..., t.Any], *args: t.Any, **kwargs: t.Any) -> t.Any:
    try:
        return factory(*args, **kwargs)
    except (LocalQFTError, TypeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _mapping(data: t.Any, path: str, allowed: t.Set[str]) -> t.Dict[str, t.Any]:
    if not isinstance(data, dict):
        raise ScenarioError(f"{path} must be a mapping")
    unknown = sorted(str(key) for key in data if key not in allowed)
    if unknown:
        prefix = "" if path == "scenario" else f"{path}."
        raise ScenarioError(f"unknown key {prefix}{unknown[0]}")
    return data


def _kind(data: t.Any, path: str, kinds: t.Dict[str, t.Any]) -> str:
    if not isinstance(data, dict):
        raise ScenarioError(f"{path} must be a mapping")
    kind = data.get("kind")
    if kind not in kinds:
        raise ScenarioError(f"{path}.kind must be one of {', '.join(sorted(kinds))}")
    return kind


def _number(
    data: t.Dict[str, t.Any],
    key: t.Any,
    path: str,
    default: t.Any = _MISSING,
    positive: bool = False,
    non_negative: bool = False,
) -> float:
    value = data.get(key, default)
    where = f"{path}.{key}" if path != "scenario" else key
    if value is _MISSING:
        raise ScenarioError(f"{where} is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number")
    value = float(value)
    if value != value or value in (float("inf"), float("-inf")):
        raise ScenarioError(f"{where} must be finite")
    if positive and value <= 0:
        raise ScenarioError(f"{where} must be positive")
    if non_negative and value < 0:
        raise ScenarioError(f"{where} must be non-negative")
    return value


def _integer(
    data: t.Dict[str, t.Any], key: str, path: str, default: t.Any = _MISSING, minimum: int = 0
) -> int:
    value = data.get(key, default)
    where = f"{path}.{key}"
    if value is _MISSING:
        raise ScenarioError(f"{where} is required")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where} must be an integer")
    if value < minimum:
        raise ScenarioError(f"{where} must be at least {minimum}")
    return value


def _boolean(data: t.Dict[str, t.Any], key: str, path: str, default: bool) -> bool:
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise ScenarioError(f"{path}.{key} must be true or false")
    return value


def _number_list(value: t.Any, path: str) -> t.Tuple[float, ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{path} must be a list of numbers")
    return tuple(_number({i: item}, i, path) for i, item in enumerate(value))


def _triple(value: t.Any, path: str) -> t.Tuple[float, float, float]:
    numbers = _number_list(value, path)
    if len(numbers) != 3:
        raise ScenarioError(f"{path} must have three components")
    return numbers  # type: ignore[return-value]


def _mode_index(value: t.Any, path: str) -> T_MODE_INDEX:
    if isinstance(value, int) and not isinstance(value, bool) and value >= 0:
        return value
    if (
        isinstance(value, list)
        and len(value) == 3
        and all(isinstance(i, int) and not isinstance(i, bool) and i >= 0 for i in value)
    ):
        return tuple(value)  # type: ignore[return-value]
    raise ScenarioError(f"{path} must be a non-negative integer or a list of three")
