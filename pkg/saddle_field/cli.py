# saddle_field/cli.py
"""Command-line entry point.

    eval    --config PATH [--what KIND] [--at SPEC] [--node LEVEL:INDEX]
    verify  --config PATH [--suite NAME] [--seed N] [--points N] [--tol X] [--c X]
            [--output PATH] [--summary] [--progress]

Results are printed as JSON on standard output; diagnostics go to standard
error and the log file. Exit codes: 0 success, 1 configuration error,
2 domain error, 3 solver error, 4 failed verification.
"""
import argparse
import json
import sys
from typing import Dict, List, Optional

import numpy as np

from saddle_field.aggregation.aggregate_utility import AggregateUtilityEvaluator, r_and_gradient, r_hessian
from saddle_field.config.problem_config import QUERY_KINDS, ProblemConfig, load_problem, parse_at
from saddle_field.conjugacy.points import DualPoint, PrimalEvaluator, PrimalPoint
from saddle_field.conjugacy.saddle_transform import (
    conjugate_point_from_dual,
    conjugate_point_from_primal,
    second_order_bundle,
)
from saddle_field.exceptions import DomainError, SaddleFieldError
from saddle_field.fields.scenario_field import (
    NodeFieldEvaluator,
    field_at,
    indifference_trade,
    invert_field,
    lemma19_matrix,
    marginal_prices,
    spectral_bound_check,
)
from saddle_field.fields.scenario_tree import NodeRef
from saddle_field.logging_config import get_logger, setup_logging
from saddle_field.settings import load_settings
from saddle_field.verification.reports import ReportStore, dumps_reports
from saddle_field.verification.suites import SUITES, run_suite

logger = get_logger(__name__)

EXIT_VERIFICATION_FAILED = 4

AT_HELP = ("point as 'key=values;...' with keys v, x, q (primal), u, y (dual) and dq (trade), "
           "values comma-separated, e.g. 'v=1,1;x=0;q=0.5'")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(payload):
    print(json.dumps(_jsonable(payload), sort_keys=True))


def _require(point: Dict[str, np.ndarray], *keys: str):
    missing = [key for key in keys if key not in point]
    if missing:
        raise DomainError(f"--at is missing {', '.join(missing)}")


def _scalar(point: Dict[str, np.ndarray], key: str) -> float:
    if point[key].size != 1:
        raise DomainError(f"'{key}' must be a single number")
    return float(point[key][0])


def _primal(problem: ProblemConfig, point: Dict[str, np.ndarray], with_q: bool = True) -> PrimalPoint:
    _require(point, "v", "x")
    q = point.get("q", np.zeros(problem.tree.J)) if with_q else ()
    if with_q and q.size != problem.tree.J:
        raise DomainError(f"expected {problem.tree.J} quantities q, got {q.size}")
    return PrimalPoint(point["v"], _scalar(point, "x"), q)


def _conjugate(problem: ProblemConfig, point: Dict[str, np.ndarray], node: Optional[NodeRef]) -> Dict:
    evaluator: PrimalEvaluator
    if node is not None:
        evaluator = NodeFieldEvaluator(problem.tree, problem.agents, node)
        q = point.get("q", np.zeros(problem.tree.J))
    else:
        evaluator = AggregateUtilityEvaluator(problem.agents)
        q = ()
    if "u" in point:
        y = _scalar(point, "y") if "y" in point else 1.0
        pair = conjugate_point_from_dual(evaluator, DualPoint(point["u"], y, q))
    else:
        _require(point, "v", "x")
        pair = conjugate_point_from_primal(evaluator, PrimalPoint(point["v"], _scalar(point, "x"), q))
    bundle = second_order_bundle(evaluator, pair)
    return {
        "g": pair.g_value,
        "f": pair.f_value,
        "v": pair.primal.v,
        "x": pair.primal.x,
        "u": pair.dual.u,
        "y": pair.dual.y,
        "iterations": pair.iterations,
        "residual": pair.residual,
        "B": bundle.B_mat,
        "E": bundle.E_mat,
        "H": bundle.H_mat,
    }


def evaluate(problem: ProblemConfig, what: str, at: str, node: Optional[NodeRef] = None) -> Dict:
    """Evaluate one query against a problem"""
    if what not in QUERY_KINDS:
        raise DomainError(f"unknown quantity '{what}'")
    point = parse_at(at)
    agents, tree = problem.agents, problem.tree
    target = node or tree.root.ref

    if what == "r":
        a = _primal(problem, point, with_q=False)
        d = r_and_gradient(agents, a.v, a.x)
        return {"value": d.value, "dr_dx": d.dr_dx, "dr_dv": d.dr_dv,
                "x_hat": d.allocation.x_hat, "lambda": d.allocation.lam}
    if what == "grad":
        a = _primal(problem, point, with_q=False)
        d = r_and_gradient(agents, a.v, a.x)
        return {"value": d.value, "gradient": np.concatenate([d.dr_dv, [d.dr_dx]])}
    if what == "hess":
        a = _primal(problem, point, with_q=False)
        d = AggregateUtilityEvaluator(agents).derivatives(a)
        second = r_hessian(agents, a.v, a.x)
        return {"value": d.value, "hessian": d.hessian, "A_matrix": second.A_matrix,
                "dxhat_dx": second.dxhat_dx, "dxhat_dv_scaled": second.dxhat_dv_scaled}
    if what == "conjugate":
        return _conjugate(problem, point, node)
    if what == "field":
        return field_at(tree, agents, _primal(problem, point), target).to_dict()
    if what == "invert":
        _require(point, "u")
        q = point.get("q", np.zeros(tree.J))
        X, V = invert_field(tree, agents, point["u"], q, target)
        return {"X": X, "V": V, "node": str(target)}
    if what == "lemma19":
        result = lemma19_matrix(tree, agents, _primal(problem, point), target)
        check = spectral_bound_check(result.matrix, agents.c_global)
        return {"matrix": result.matrix, "direct": result.direct, "deviation": result.deviation,
                "eigenvalues": check.eigenvalues, "within_bounds": check.passed,
                "c": agents.c_global, "R": result.data.R_process[target], "node": str(target)}
    if what == "price":
        return {"prices": marginal_prices(tree, agents, _primal(problem, point), target), "node": str(target)}
    # trade
    _require(point, "dq")
    return indifference_trade(tree, agents, _primal(problem, point), point["dq"], target).to_dict()


def cmd_eval(args) -> int:
    problem = load_problem(args.config)
    node = NodeRef.parse(args.node) if args.node else None
    if args.what:
        _emit(evaluate(problem, args.what, args.at or "", node))
        return 0
    if not problem.queries:
        raise DomainError("no --what given and the problem description has no queries")
    results = []
    for query in problem.queries:
        logger.info(f"Evaluating query {query.to_dict()}")
        results.append({"query": query.to_dict(),
                        "result": evaluate(problem, query.what, query.at, query.node_ref())})
    _emit(results)
    return 0


def cmd_verify(args) -> int:
    problem = load_problem(args.config)
    sweep = problem.sweep_or_default().with_overrides(
        seed=args.seed, n_points=args.points, tol=args.tol, c=args.c
    )
    reports = run_suite(args.suite, sweep, problem.agents, problem.tree, progress=args.progress)
    text = dumps_reports(reports)
    print(text)
    if args.output:
        ReportStore(args.output).save_reports(reports)
    if args.summary:
        frame = ReportStore.summary_frame(reports)
        print(frame.to_string(), file=sys.stderr)

    failures = ReportStore.get_failures(reports)
    if failures:
        for report in failures:
            logger.error(f"Check failed: {report.name} (max rel error {report.max_rel_error!r}, "
                         f"tolerance {report.tolerance!r})")
        return EXIT_VERIFICATION_FAILED
    logger.info(f"✅ All {len(reports)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddle-field",
        description="Aggregate utilities, saddle conjugates and scenario-tree fields",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate a quantity at a point")
    ev.add_argument("--config", required=True, help="problem description (JSON)")
    ev.add_argument("--what", choices=QUERY_KINDS,
                    help="quantity to evaluate; without it the config's queries are run")
    ev.add_argument("--at", help=AT_HELP)
    ev.add_argument("--node", help="tree node as LEVEL:INDEX (default: root)")
    ev.set_defaults(handler=cmd_eval)

    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("--config", required=True, help="problem description (JSON)")
    ver.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES + ('all',))}")
    ver.add_argument("--seed", type=int, help="override sweep.seed")
    ver.add_argument("--points", type=int, help="use this many points in every suite (overrides sweep.n_points and sweep.suite_points)")
    ver.add_argument("--tol", type=float, help="use this tolerance for every check")
    ver.add_argument("--c", type=float, help="override the bound constant c of the agent set")
    ver.add_argument("--output", help="also write the JSON report array to this file")
    ver.add_argument("--summary", action="store_true", help="print a summary table to stderr")
    ver.add_argument("--progress", action="store_true", help="show progress bars on stderr")
    ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = load_settings()
    log_file = setup_logging(settings, run_name=args.command)
    logger.info(f"saddle-field {args.command} (log file: {log_file})")

    try:
        return args.handler(args)
    except SaddleFieldError as e:
        logger.debug(f"{args.command} aborted", exc_info=True)
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
