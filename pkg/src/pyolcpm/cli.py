"""Provide the instance file format and the command-line front end."""

import argparse
import csv
import json
import logging
import re
import sys
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

from pyolcpm.errors import (
    BudgetExceededError,
    EnumerationInfeasibleError,
    InfeasibleParametersError,
    InstanceValidationError,
)
from pyolcpm.frugal import exact_utilities, run_frugal
from pyolcpm.grades import critical_values, perturbation_epsilon, perturbed_costs
from pyolcpm.matroid import MatroidOracle
from pyolcpm.model import INF, OlcpmInstance, UpmInstance, validate
from pyolcpm.sampler import SampleConfig
from pyolcpm.solver import (
    ContractSolution,
    balance_ratio,
    fpras_oracle,
    solve_exact,
    solve_fpras_balanced,
    solve_fpras_bounded_support,
    solve_via_upm,
    sweep,
    sweep_alphas,
)
from pyolcpm.upm import (
    ReductionParams,
    choose_reduction_params,
    olcpm_to_upm,
    upm_exact,
    upm_monte_carlo,
    upm_to_olcpm,
    upm_to_olcpm_bounded_support,
    upm_uniform_poly,
    upm_via_olcpm,
    upm_via_olcpm_approx,
)

logger = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"^-?\d+(/\d+)?$")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_CAP = 3

Instance = Union[OlcpmInstance, UpmInstance]


###############################################################################
# Rational text
###############################################################################


def parse_rational(text: Any, field: str = "value") -> Fraction:
    """Parse a rational given as an integer or a text like "-3/4".

    Args:
        text (Any): JSON integer or rational text
        field (str): Field name used in the error message

    Raises:
        ValueError: The text is not an exact rational.

    Returns:
        Fraction: Parsed rational
    """
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not RATIONAL_PATTERN.match(text.strip()):
        raise ValueError(
            f'Unexpected {field}: {text!r} / it must be an integer or "num/den"'
        )
    value = text.strip()
    if "/" in value and int(value.split("/")[1]) == 0:
        raise ValueError(f"Unexpected {field}: {text!r} / the denominator must be positive")
    return Fraction(value)


def format_rational(value: Fraction) -> str:
    """Format a rational as reduced "num/den", or "num" for integers."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_value(value: Any) -> Any:
    """Format a number for output; floats keep 17 significant digits."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if value is INF:
        return "inf"
    if isinstance(value, float):
        return format(value, ".17g")
    return value


###############################################################################
# Instance files
###############################################################################


def _olcpm_from_dict(data: Mapping[str, Any], violations: List[str]) -> Optional[OlcpmInstance]:
    try:
        matroid = MatroidOracle.create_from_dict(data["matroid"])
    except (KeyError, ValueError, TypeError) as e:
        violations.append(f"matroid: {e}")
        return None
    elements = []
    for i, element in enumerate(data.get("elements", [])):
        try:
            cost = parse_rational(element["cost"], "cost")
            outcomes = [
                (
                    parse_rational(o["value"], "value"),
                    parse_rational(o["prob"], "prob"),
                )
                for o in element["outcomes"]
            ]
        except (KeyError, TypeError) as e:
            violations.append(f"elements[{i}]: missing or malformed field {e}")
            continue
        except ValueError as e:
            violations.append(f"elements[{i}]: {e}")
            continue
        if not outcomes:
            violations.append(f"elements[{i}].outcomes: it must not be empty")
            continue
        elements.append((cost, outcomes))
    if violations:
        return None
    return OlcpmInstance(matroid, elements)


def _upm_from_dict(data: Mapping[str, Any], violations: List[str]) -> Optional[UpmInstance]:
    try:
        matroid = MatroidOracle.create_from_dict(data["matroid"])
    except (KeyError, ValueError, TypeError) as e:
        violations.append(f"matroid: {e}")
        return None
    special = data.get("special")
    if not isinstance(special, int) or isinstance(special, bool):
        violations.append(f"special: {special!r} / it must be an element index")
        return None
    probs: Dict[int, Fraction] = {}
    for key, text in dict(data.get("probs", {})).items():
        try:
            probs[int(key)] = parse_rational(text, "prob")
        except ValueError as e:
            violations.append(f"probs[{key}]: {e}")
    if violations:
        return None
    return UpmInstance(matroid, special, probs)


def load(data: Mapping[str, Any], source: Optional[str] = None) -> Instance:
    """Create an instance from a dictionary of the instance file format.

    Raises:
        InstanceValidationError: A field is malformed or an invariant fails.
    """
    violations: List[str] = []
    kind = data.get("kind") if isinstance(data, Mapping) else None
    inst: Optional[Instance] = None
    if kind == "olcpm":
        inst = _olcpm_from_dict(data, violations)
    elif kind == "upm":
        inst = _upm_from_dict(data, violations)
    else:
        violations.append(f'kind: {kind!r} / it must be "olcpm" or "upm"')
    if inst is not None:
        violations.extend(validate(inst))
    if violations or inst is None:
        raise InstanceValidationError(violations, source)
    return inst


def parse(path: str) -> Instance:
    """Read and validate an instance file.

    Args:
        path (str): Path to a JSON instance file

    Raises:
        InstanceValidationError: The file cannot be read, is not JSON
                                 or violates the model invariants.

    Returns:
        Instance: Validated OLCPM or UPM instance
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise InstanceValidationError([f"cannot read file: {e.strerror}"], path) from e
    except json.JSONDecodeError as e:
        raise InstanceValidationError(
            [f"line {e.lineno} column {e.colno}: {e.msg}"], path
        ) from e
    return load(data, path)


def serialize(inst: Instance) -> Dict[str, Any]:
    """Convert an instance to a dictionary of the instance file format."""
    if isinstance(inst, OlcpmInstance):
        return {
            "kind": "olcpm",
            "matroid": inst.matroid.to_dict(),
            "elements": [
                {
                    "cost": format_rational(cost),
                    "outcomes": [
                        {"value": format_rational(v), "prob": format_rational(p)}
                        for v, p in dist
                    ],
                }
                for cost, dist in zip(inst.costs, inst.dists)
            ],
        }
    return {
        "kind": "upm",
        "matroid": inst.matroid.to_dict(),
        "special": inst.special,
        "probs": {str(j): format_rational(p) for j, p in sorted(inst.probs.items())},
    }


def dumps(inst: Instance) -> str:
    """Convert an instance to the text of an instance file."""
    return json.dumps(serialize(inst), indent=2)


###############################################################################
# Commands
###############################################################################


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _rational_arg(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _emit(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def _cap(args: argparse.Namespace) -> Optional[int]:
    return sys.maxsize if args.allow_large else None


def _sample_config(args: argparse.Namespace) -> SampleConfig:
    return SampleConfig(args.seed, args.samples, args.mu, args.workers, args.allow_large)


def _olcpm(path: str) -> OlcpmInstance:
    inst = parse(path)
    if not isinstance(inst, OlcpmInstance):
        raise InstanceValidationError(['kind: "upm" / it must be "olcpm"'], path)
    return inst


def _upm(path: str) -> UpmInstance:
    inst = parse(path)
    if not isinstance(inst, UpmInstance):
        raise InstanceValidationError(['kind: "olcpm" / it must be "upm"'], path)
    return inst


def _solution_payload(solution: ContractSolution) -> Dict[str, Any]:
    return {
        "alpha": format_rational(solution.alpha_star),
        "utility": format_value(solution.utility),
        "method": solution.method,
        "candidates": [
            {"alpha": format_rational(alpha), "utility": format_value(utility)}
            for alpha, utility in solution.candidates
        ],
        "metadata": {k: format_value(v) for k, v in sorted(solution.metadata.items())},
    }


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        inst = parse(args.file)
    except InstanceValidationError as e:
        _emit({"valid": False, "violations": e.violations})
        return EXIT_VALIDATION
    kind = "olcpm" if isinstance(inst, OlcpmInstance) else "upm"
    _emit({"valid": True, "kind": kind, "n": inst.n})
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = _olcpm(args.file)
    if args.method == "exact":
        solution = solve_exact(inst, _cap(args))
    elif args.method == "balanced":
        omega = balance_ratio(inst) if args.omega is None else args.omega
        solution = solve_fpras_balanced(inst, args.epsilon, omega, _sample_config(args))
    elif args.method == "bounded-support":
        solution = solve_fpras_bounded_support(inst, args.epsilon, _sample_config(args))
    elif args.method == "uniform-poly":
        solution = solve_via_upm(inst, upm_uniform_poly, "uniform-poly")
    else:
        cfg = _sample_config(args)
        solution = solve_via_upm(inst, lambda u: upm_monte_carlo(u, cfg), "monte-carlo")
    _emit(_solution_payload(solution))
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    inst = _olcpm(args.file)
    report = exact_utilities(inst, args.alpha, _cap(args))
    _emit(
        {
            "alpha": format_rational(report.alpha),
            "epsilon": format_rational(report.epsilon),
            "u_principal": format_rational(report.u_principal),
            "u_agent": format_rational(report.u_agent),
            "u_agent_perturbed": format_rational(report.u_agent_perturbed),
            "expected_reward": format_rational(report.expected_reward),
            "expected_cost": format_rational(report.expected_cost),
            "acceptance": [[format_rational(r) for r in row] for row in report.acceptance],
        }
    )
    return EXIT_OK


def _cmd_critical_values(args: argparse.Namespace) -> int:
    values = [format_rational(a) for a in critical_values(_olcpm(args.file))]
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["alpha"])
        writer.writerows([v] for v in values)
    else:
        _emit(values)
    return EXIT_OK


def _cmd_trace(args: argparse.Namespace) -> int:
    inst = _olcpm(args.file)
    try:
        realization = tuple(int(k) for k in args.realization.split(","))
    except ValueError as e:
        raise ValueError(
            f"Unexpected realization: {args.realization!r} / "
            "it must be comma separated outcome indices"
        ) from e
    costs = perturbed_costs(inst, perturbation_epsilon(inst, args.alpha))
    trace = run_frugal(inst, args.alpha, realization, costs)
    _emit(
        {
            "alpha": format_rational(args.alpha),
            "realization": list(realization),
            "probe_order": trace.probe_order,
            "returned": sorted(trace.returned),
            "principal_reward": format_rational(trace.principal_reward),
            "agent_payment": format_rational(trace.agent_payment),
            "probing_cost": format_rational(trace.probing_cost),
            "agent_utility": format_rational(trace.agent_utility),
        }
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    inst = _olcpm(args.file)
    alphas = sweep_alphas(inst, args.grid)
    sampled = args.samples is not None or args.mu is not None
    rows = sweep(inst, alphas, _sample_config(args) if sampled else None, _cap(args))
    header = ["alpha", "u_principal", "u_agent", "expected_cost"]
    table = [[format_value(x) for x in row.astuple()] for row in rows]
    if args.format == "json":
        _emit([dict(zip(header, row)) for row in table])
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(table)
    return EXIT_OK


def _cmd_upm_solve(args: argparse.Namespace) -> int:
    inst = _upm(args.file)
    rho: Union[Fraction, float]
    if args.method == "exact":
        rho = upm_exact(inst, _cap(args))
    elif args.method == "uniform-poly":
        rho = upm_uniform_poly(inst)
    else:
        rho = upm_monte_carlo(inst, _sample_config(args))
    _emit({"rho": format_value(rho), "method": args.method})
    return EXIT_OK


def _cmd_upm_from_olcpm(args: argparse.Namespace) -> int:
    inst = _olcpm(args.file)
    upm, r = olcpm_to_upm(
        inst, args.alpha, args.element, args.outcome, lambda u: upm_exact(u, _cap(args))
    )
    _emit({"upm": None if upm is None else serialize(upm), "r": format_value(r)})
    return EXIT_OK


def _cmd_upm_to_olcpm(args: argparse.Namespace) -> int:
    inst = _upm(args.file)
    if args.delta is None or args.xi is None:
        chosen = choose_reduction_params(inst, args.beta, args.epsilon)
        delta = chosen.delta if args.delta is None else args.delta
        xi = chosen.xi if args.xi is None else args.xi
    else:
        delta, xi = args.delta, args.xi
    params = ReductionParams(args.beta, args.epsilon, delta, xi)
    build = upm_to_olcpm_bounded_support if args.bounded_support else upm_to_olcpm
    _emit(
        {
            "params": {
                "beta": format_rational(params.beta),
                "eps": format_rational(params.eps),
                "delta": format_rational(params.delta),
                "xi": format_rational(params.xi),
            },
            "instance": serialize(build(inst, params, args.relaxed)),
        }
    )
    return EXIT_OK


def _cmd_upm_via_olcpm(args: argparse.Namespace) -> int:
    inst = _upm(args.file)
    if args.method == "exact":
        cap = _cap(args)

        def oracle(olcpm: OlcpmInstance) -> ContractSolution:
            return solve_exact(olcpm, cap)

    else:
        oracle = fpras_oracle(_sample_config(args), args.epsilon, args.omega)
    if args.psi is None:
        rho = upm_via_olcpm(inst, oracle, args.relaxed)
    else:
        rho = upm_via_olcpm_approx(inst, args.psi, oracle, args.relaxed)
    _emit({"rho": format_rational(rho)})
    return EXIT_OK


def _add_sampling(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="seed of the random streams")
    parser.add_argument("--samples", type=int, help="number of replications")
    parser.add_argument("--mu", type=_rational_arg, help="accuracy defining replications")
    parser.add_argument("--workers", type=int, default=1, help="number of threads")


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser of the pyolcpm command."""
    parser = _ArgumentParser(prog="pyolcpm", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="log to stderr in detail")
    parser.add_argument(
        "--allow-large", action="store_true", help="lift budget and enumeration caps"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("validate", help="validate an instance file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = commands.add_parser("solve", help="find the optimal linear contract")
    p.add_argument("file")
    p.add_argument(
        "--method",
        choices=["exact", "balanced", "bounded-support", "monte-carlo", "uniform-poly"],
        default="exact",
    )
    p.add_argument("--epsilon", type=_rational_arg, default=Fraction(1, 10))
    p.add_argument("--omega", type=_rational_arg)
    _add_sampling(p)
    p.set_defaults(func=_cmd_solve)

    p = commands.add_parser("evaluate", help="evaluate utilities at one contract")
    p.add_argument("file")
    p.add_argument("--alpha", type=_rational_arg, required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = commands.add_parser("critical-values", help="list the critical values")
    p.add_argument("file")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_cmd_critical_values)

    p = commands.add_parser("trace", help="run the frugal policy on one realization")
    p.add_argument("file")
    p.add_argument("--alpha", type=_rational_arg, required=True)
    p.add_argument("--realization", required=True, help="outcome indices, e.g. 0,1")
    p.set_defaults(func=_cmd_trace)

    p = commands.add_parser("sweep", help="evaluate utilities over a grid of contracts")
    p.add_argument("file")
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    _add_sampling(p)
    p.set_defaults(func=_cmd_sweep)

    upm = commands.add_parser("upm", help="unreliability commands")
    upm_commands = upm.add_subparsers(dest="upm_command", required=True)

    p = upm_commands.add_parser("solve", help="compute the unreliability")
    p.add_argument("file")
    p.add_argument(
        "--method", choices=["exact", "uniform-poly", "monte-carlo"], default="exact"
    )
    _add_sampling(p)
    p.set_defaults(func=_cmd_upm_solve)

    p = upm_commands.add_parser("from-olcpm", help="build the acceptance instance")
    p.add_argument("file")
    p.add_argument("--alpha", type=_rational_arg, required=True)
    p.add_argument("--element", type=int, required=True)
    p.add_argument("--outcome", type=int, required=True)
    p.set_defaults(func=_cmd_upm_from_olcpm)

    p = upm_commands.add_parser("to-olcpm", help="build the contract instance")
    p.add_argument("file")
    p.add_argument("--beta", type=_rational_arg, required=True)
    p.add_argument("--epsilon", type=_rational_arg, default=Fraction(1, 4))
    p.add_argument("--delta", type=_rational_arg)
    p.add_argument("--xi", type=_rational_arg)
    p.add_argument("--bounded-support", action="store_true")
    p.add_argument("--relaxed", action="store_true", help="skip the delta conditions")
    p.set_defaults(func=_cmd_upm_to_olcpm)

    p = upm_commands.add_parser("via-olcpm", help="solve through a contract oracle")
    p.add_argument("file")
    p.add_argument("--method", choices=["exact", "balanced"], default="exact")
    p.add_argument("--psi", type=_rational_arg, help="approximation factor of the grid")
    p.add_argument("--epsilon", type=_rational_arg, default=Fraction(1, 10))
    p.add_argument("--omega", type=_rational_arg)
    p.add_argument("--relaxed", action="store_true", help="skip cleanup and delta")
    _add_sampling(p)
    p.set_defaults(func=_cmd_upm_via_olcpm)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the pyolcpm command.

    Args:
        argv (Optional[Sequence[str]]): Arguments; sys.argv[1:] if None

    Returns:
        int: Exit code (0 success, 1 validation, 2 infeasible parameters,
             3 budget or enumeration cap exceeded)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    level = logging.DEBUG if args.verbose else logging.WARNING
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("pyolcpm").setLevel(level)
    try:
        return args.func(args)
    except (EnumerationInfeasibleError, BudgetExceededError) as e:
        logger.error("%s", e)
        return EXIT_CAP
    except InfeasibleParametersError as e:
        logger.error("%s", e)
        return EXIT_INFEASIBLE
    except ValueError as e:
        logger.error("%s", e)
        return EXIT_VALIDATION
