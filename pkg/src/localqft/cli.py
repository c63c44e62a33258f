"""Command line front end.

All quantities in a scenario are dimensionless numbers in units of the window duration T: times
and lengths in T, masses, gaps and frequencies in 1/T, couplings λ in 1/T².

Exit codes: 0 success, 2 solver error, 3 two-path consistency failure, 4 equivalence failure,
64 usage or scenario error.

Plotting recipe: every CSV has a header row, so ``pandas.read_csv(path)`` followed by
``df.plot(x="Omega", y="P", logy=True)`` reproduces a response curve from ``response.csv``.
"""

import argparse
import logging
import os
import sys
import typing as t

from . import __version__
from .artifacts import write_columns, write_csv, write_json
from .errors import LocalQFTError, ScenarioError
from .memoization import caches
from .oracle import verify_equivalence
from .perturbation import (
    excitation_probability,
    reduced_state,
    response_curve,
    udw_reduced_state,
)
from .scenario import Scenario, load_scenario
from .smearing import smearing_table
from .spectrum import check_orthonormality, profile_table


logger = logging.getLogger(__name__)

#: Environment variable naming the default output directory.
OUTPUT_ENV = "LOCALQFT_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONSISTENCY = 3
EXIT_EQUIVALENCE = 4
EXIT_USAGE = 64

#: Eigenfrequencies echoed by ``modes``.
SHOWN_MODES = 5


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that exits with the usage code instead of argparse's 2."""

    def error(self, message: str) -> t.NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario YAML file")
    common.add_argument(
        "--out", help=f"output directory (default: ${OUTPUT_ENV}, then the scenario's output)"
    )
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--tolerance", type=float, default=None, help="override quadrature epsabs")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging"
    )

    summary, *details = __doc__.split("\n\n")
    parser = ArgumentParser(
        prog="localqft",
        description=summary,
        epilog="\n\n".join(details),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    commands.required = True
    commands.add_parser("modes", parents=[common], help="mode spectrum and profiles")
    commands.add_parser("response", parents=[common], help="excitation probability sweep")
    commands.add_parser("state", parents=[common], help="second order reduced states")
    commands.add_parser("verify", parents=[common], help="exact versus perturbative equivalence")
    return parser


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        scenario = load_scenario(args.scenario)
        if args.tolerance is not None:
            scenario = scenario.with_tolerance(args.tolerance)
        if args.threads is not None and args.threads < 1:
            raise ScenarioError("--threads must be at least 1")
        out = args.out or os.environ.get(OUTPUT_ENV) or scenario.output or "output"
        return COMMANDS[args.command](scenario, out, args.threads)
    except LocalQFTError as exc:
        print(f"localqft: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    finally:
        for name, stats in caches.stats().items():
            logger.debug("cache %s: %s", name, stats.to_dict())


def cmd_modes(scenario: Scenario, out: str, threads: t.Optional[int] = None) -> int:
    """Write ``modes.json`` and ``profiles.csv`` and echo the lowest eigenfrequencies."""
    basis = scenario.basis()
    report = check_orthonormality(basis)
    summary = basis.to_dict()
    summary["orthonormality"] = {
        "max_deviation": report.max_deviation,
        "max_normalization_residual": report.max_normalization_residual,
        "max_orthogonality_residual": report.max_orthogonality_residual,
        "pairs": report.pairs,
        "passed": report.passed,
    }
    write_json(os.path.join(out, "modes.json"), summary)

    x, columns = profile_table(basis)
    write_columns(os.path.join(out, "profiles.csv"), {"x": x, **columns})
    if scenario.mode is not None and basis.dim == 3:
        write_columns(os.path.join(out, "smearing.csv"), smearing_table(scenario.smearing(basis)))

    for mode in basis.modes[:SHOWN_MODES]:
        print(f"{mode.index} {mode.omega:.6f}")
    return EXIT_OK


def cmd_response(scenario: Scenario, out: str, threads: t.Optional[int] = None) -> int:
    """Write ``response.csv``; fail with the consistency code if any point failed."""
    basis = scenario.basis()
    gaps = scenario.sweep_gaps(basis)
    if not gaps:
        raise ScenarioError("response needs a sweep (sweep.gaps or sweep.from_spectrum)")
    smearing = scenario.smearing(basis)

    rows = []
    failures = []
    for lam in scenario.lambdas:
        for point in response_curve(scenario.coupling_config(lam, smearing), gaps, threads):
            rows.append(point.to_row())
            if not point.passed:
                failures.append(point)
    write_csv(os.path.join(out, "response.csv"), rows)

    for point in failures:
        print(
            f"localqft: Omega={point.Omega!r} lambda={point.lam!r}: {point.failure}",
            file=sys.stderr,
        )
    return EXIT_CONSISTENCY if failures else EXIT_OK


def cmd_state(scenario: Scenario, out: str, threads: t.Optional[int] = None) -> int:
    """Write ``state.json`` with the mode and oscillator detector states per coupling."""
    basis = scenario.basis()
    smearing = scenario.smearing(basis)
    states = []
    for lam in scenario.lambdas:
        cfg = scenario.coupling_config(lam, smearing)
        excitation = excitation_probability(cfg)
        mode_state = reduced_state(cfg)
        detector_state = udw_reduced_state(cfg)
        states.append(
            {
                "lambda": lam,
                "Omega": smearing.gap,
                "P": excitation.value,
                "err_P": excitation.error,
                "reduced": mode_state.to_dict(),
                "udw": detector_state.to_dict(),
                "two_level": mode_state.two_level().to_dict(),
                "frobenius_distance": mode_state.frobenius_distance(detector_state),
            }
        )
    write_json(os.path.join(out, "state.json"), {"states": states})
    return EXIT_OK


def cmd_verify(scenario: Scenario, out: str, threads: t.Optional[int] = None) -> int:
    """Write ``verify.json``; fail with the equivalence code if the contract is not met."""
    if scenario.oracle is None:
        raise ScenarioError("verify needs an oracle section")
    if len(scenario.lambdas) < 2:
        raise ScenarioError("verify needs at least two lambdas")
    report = verify_equivalence(scenario.oracle, scenario.lambdas, threads)
    write_json(os.path.join(out, "verify.json"), report.to_dict())
    print(
        f"exponent {report.exponent:.4f}, isolated {report.isolated_exponent:.4f},"
        f" max delta {report.max_delta:.3e}, udw agreement {report.udw_agrees}"
    )
    return EXIT_OK if report.passed else EXIT_EQUIVALENCE


COMMANDS: t.Dict[str, t.Callable[[Scenario, str, t.Optional[int]], int]] = {
    "modes": cmd_modes,
    "response": cmd_response,
    "state": cmd_state,
    "verify": cmd_verify,
}
