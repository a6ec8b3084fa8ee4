"""Command line interface.

Subcommands cover the advisor surface: tune, pareto, baseline, route,
monitor replay, exhaustive check, LP export, benchmarking, and the HTTP
service. Results print as canonical JSON; --report writes delimited files
and rendered figures next to each other. Errors leave as machine-readable
JSON on stderr with exit status 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from typing import Optional

from . import baselines as baselinesmod
from . import bip as bipmod
from . import monitor as monitormod
from . import oracle as oraclemod
from . import recommender
from . import routing as routingmod
from . import solver as solvermod
from . import synth
from .model import (
    ConstraintSet,
    DivergentDesign,
    FailureLoadSkewConstraint,
    LoadSkewConstraint,
    MaterializationConstraint,
    QueryStatement,
    ROUTING_CARDINALITY_MODES,
    SolverControls,
    TuningRequest,
    UpdateCostBound,
    UpdateStatement,
    canonical_json,
    load_design,
    load_workload,
)


class CliError(Exception):
    def __init__(self, message: str, kind: str = "usage"):
        super().__init__(message)
        self.kind = kind


def _emit(payload: dict, out: Optional[str]) -> None:
    text = canonical_json(payload)
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path: str, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in columns})


def _constraints_from_args(args: argparse.Namespace) -> ConstraintSet:
    load_skew = None
    if args.load_skew is not None:
        load_skew = LoadSkewConstraint(tau=args.load_skew, mode=args.skew_mode)
    failure_skew = None
    if args.failure_skew is not None:
        failure_skew = FailureLoadSkewConstraint(tau=args.failure_skew)
    materialization = None
    if args.materialization_budget is not None:
        if args.current_design is None:
            raise CliError("--materialization-budget needs --current-design")
        materialization = MaterializationConstraint(
            budget=args.materialization_budget,
            current=load_design(args.current_design),
            target_replica_count=args.target_replicas,
            new_replica_deploy_cost=args.deploy_cost)
    update_bound = None
    if args.update_bound_fraction is not None:
        if args.update_bound_reference is None:
            raise CliError(
                "--update-bound-fraction needs --update-bound-reference")
        update_bound = UpdateCostBound(fraction=args.update_bound_fraction,
                                       reference_cost=args.update_bound_reference)
    return ConstraintSet(space_budget=args.space_budget,
                         load_skew=load_skew,
                         failure_load_skew=failure_skew,
                         materialization=materialization,
                         update_cost_bound=update_bound)


def _request_from_args(args: argparse.Namespace) -> TuningRequest:
    workload = load_workload(args.workload)
    return TuningRequest(
        workload=workload,
        replica_count=args.replicas,
        multiplicity=args.multiplicity,
        failure_prob=args.failure_prob,
        constraints=_constraints_from_args(args),
        solver_controls=SolverControls(gap_tolerance=args.gap,
                                       time_limit=args.time_limit),
        routing_cardinality_mode=args.routing_mode)


def _add_request_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help="workload JSON file")
    p.add_argument("--replicas", type=int, default=2)
    p.add_argument("--multiplicity", "-m", type=int, default=1)
    p.add_argument("--failure-prob", type=float, default=0.0)
    p.add_argument("--space-budget", type=float, default=None)
    p.add_argument("--load-skew", type=float, default=None,
                   help="skew factor ceiling")
    p.add_argument("--skew-mode", choices=("exact", "greedy"), default="exact")
    p.add_argument("--failure-skew", type=float, default=None)
    p.add_argument("--materialization-budget", type=float, default=None)
    p.add_argument("--current-design", default=None)
    p.add_argument("--target-replicas", type=int, default=None)
    p.add_argument("--deploy-cost", type=float, default=0.0)
    p.add_argument("--update-bound-fraction", type=float, default=None)
    p.add_argument("--update-bound-reference", type=float, default=None)
    p.add_argument("--gap", type=float, default=0.05)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--routing-mode", choices=ROUTING_CARDINALITY_MODES,
                   default="min")


def cmd_tune(args: argparse.Namespace) -> int:
    req = _request_from_args(args)
    result = recommender.tune(req)
    payload = result.to_dict()
    _emit(payload, args.out)
    if args.report:
        from . import plots
        os.makedirs(args.report, exist_ok=True)
        loads = result.breakdown.per_replica_load
        rows = [{"replica": i + 1, "load": v} for i, v in enumerate(loads)]
        _write_csv(os.path.join(args.report, "loads.csv"), rows,
                   ["replica", "load"])
        plots.save_load_profile(loads, os.path.join(args.report, "loads.png"))
        with open(os.path.join(args.report, "design.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(canonical_json(result.design.to_dict()))
    return 0


def cmd_pareto(args: argparse.Namespace) -> int:
    workload = load_workload(args.workload)
    replica_counts = [int(tok) for tok in args.replicas.split(",") if tok]
    fractions = (tuple(float(tok) for tok in args.fractions.split(","))
                 if args.fractions else recommender.DEFAULT_FRACTIONS)
    current = None
    if args.current_design:
        design = load_design(args.current_design)
        current = {design.replica_count: design}
    points = recommender.pareto(
        workload, replica_counts, multiplicity=args.multiplicity,
        space_budget=args.space_budget, current=current, fractions=fractions,
        controls=SolverControls(gap_tolerance=args.gap,
                                time_limit=args.time_limit))
    payload = {"points": [p.to_dict() for p in points]}
    _emit(payload, args.out)
    if args.report:
        from . import plots
        os.makedirs(args.report, exist_ok=True)
        rows = [p.to_dict() for p in points]
        _write_csv(os.path.join(args.report, "pareto.csv"), rows,
                   ["replica_count", "multiplicity", "fraction", "budget",
                    "cost", "status", "wall_time"])
        plots.save_pareto_curves(points,
                                 os.path.join(args.report, "pareto.png"))
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    workload = load_workload(args.workload)
    from . import costmodel
    if args.kind == "unif":
        design = baselinesmod.uniform_design(
            workload, args.replicas, args.multiplicity, args.space_budget)
        cost = costmodel.total_cost(design, workload, args.multiplicity)
        payload = {"kind": "unif", "design": design.to_dict(),
                   "total_cost": cost}
    else:
        result = baselinesmod.divergent_heuristic(
            workload, args.replicas, args.multiplicity, args.space_budget,
            seed=args.seed, restarts=args.restarts)
        payload = {"kind": "divg", "design": result.design.to_dict(),
                   "total_cost": result.total_cost,
                   "iterations": result.iterations,
                   "restarts": result.restarts}
    _emit(payload, args.out)
    return 0


def cmd_route(args: argparse.Namespace) -> int:
    workload = load_workload(args.workload)
    design = load_design(args.design)
    if args.query_file:
        with open(args.query_file, "r", encoding="utf-8") as fh:
            query = QueryStatement.from_dict(json.load(fh))
    else:
        if args.query is None:
            raise CliError("route needs --query or --query-file")
        query = workload.query_by_id(args.query)
        if query is None:
            raise CliError(f"query {args.query!r} not in the workload",
                           kind="not_found")
    known = design.routing.normal_map().get(query.id, ())
    if known:
        replicas, method = known, "designed"
    elif args.similarity:
        replicas = routingmod.route_by_similarity(query, design, workload,
                                                  args.multiplicity)
        method = "similarity"
    else:
        replicas = routingmod.route_top_m(query, design, args.multiplicity)
        method = "top_m"
    from . import costmodel
    payload = {
        "query": query.id,
        "replicas": list(replicas),
        "method": method,
        "costs": {str(r): costmodel.query_cost(query, design.config(r))
                  for r in range(1, design.replica_count + 1)},
    }
    _emit(payload, args.out)
    return 0


def cmd_monitor(args: argparse.Namespace) -> int:
    with open(args.stream, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = monitormod.MonitorConfig.from_dict(doc["config"])
    stream = []
    for item in doc["stream"]:
        if item.get("kind") == "update":
            stream.append(UpdateStatement.from_dict(item["statement"]))
        else:
            stream.append(QueryStatement.from_dict(item["statement"]))
    initial = (DivergentDesign.from_dict(doc["initial_design"])
               if doc.get("initial_design") else None)
    state = monitormod.replay(config, stream, initial)
    payload = {
        "series": [e.to_dict() for e in state.series],
        "redeploy_count": state.redeploy_count,
        "final_design": state.design.to_dict(),
    }
    _emit(payload, args.out)
    if args.report:
        from . import plots
        os.makedirs(args.report, exist_ok=True)
        rows = [e.to_dict() for e in state.series]
        _write_csv(os.path.join(args.report, "series.csv"), rows,
                   ["statement_index", "improvement", "solve_time", "status"])
        plots.save_improvement_series(
            state.series, os.path.join(args.report, "series.png"),
            threshold=config.improvement_threshold)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    req = _request_from_args(args)
    result = oraclemod.enumerate_optimal(req)
    payload = {
        "cost": result.cost,
        "objective_kind": result.objective_kind,
        "design": result.design.to_dict(),
        "explored": result.explored,
    }
    _emit(payload, args.out)
    return 0


def cmd_export_lp(args: argparse.Namespace) -> int:
    req = _request_from_args(args)
    greedy_opt = None
    if (req.constraints.load_skew is not None
            and req.constraints.load_skew.mode == "greedy"):
        greedy_opt = recommender._phase_one_total(req, None)
    bp = bipmod.build_program(req, greedy_opt_cost=greedy_opt)
    text = bipmod.to_lp_string(bp)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    os.makedirs(args.report, exist_ok=True)
    rows = []
    variants = ("plain", "budget", "failures", "skew_exact")
    for seed in range(args.seeds):
        for variant in variants:
            req = synth.tiny_instance(seed, variant=variant)
            bp = bipmod.build_program(req)
            t0 = time.monotonic()
            sol = solvermod.solve(bp)
            wall = time.monotonic() - t0
            rows.append({
                "label": variant,
                "seed": seed,
                "num_variables": bp.num_variables,
                "num_constraints": bp.num_constraints,
                "status": sol.status,
                "objective": (None if sol.assignment is None
                              else sol.objective),
                "nodes": sol.nodes_explored,
                "wall_time": wall,
            })
    _write_csv(os.path.join(args.report, "bench.csv"), rows,
               ["label", "seed", "num_variables", "num_constraints",
                "status", "objective", "nodes", "wall_time"])
    from . import plots
    plots.save_benchmark(rows, os.path.join(args.report, "bench.png"))
    _emit({"rows": len(rows), "report": args.report}, args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divtune",
        description="replication-aware divergent index design tuning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tune", help="solve one tuning request")
    _add_request_args(p)
    p.add_argument("--out", default="-")
    p.add_argument("--report", default=None,
                   help="directory for CSV and figure output")
    p.set_defaults(fn=cmd_tune)

    p = sub.add_parser("pareto", help="budget-cost frontier sweep")
    p.add_argument("--workload", required=True)
    p.add_argument("--replicas", default="2,3,4",
                   help="comma-separated replica counts")
    p.add_argument("--multiplicity", "-m", type=int, default=1)
    p.add_argument("--space-budget", type=float, default=None)
    p.add_argument("--current-design", default=None)
    p.add_argument("--fractions", default=None)
    p.add_argument("--gap", type=float, default=0.0)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_pareto)

    p = sub.add_parser("baseline", help="uniform or heuristic baseline")
    p.add_argument("--workload", required=True)
    p.add_argument("--kind", choices=("unif", "divg"), required=True)
    p.add_argument("--replicas", type=int, default=2)
    p.add_argument("--multiplicity", "-m", type=int, default=1)
    p.add_argument("--space-budget", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("route", help="advise a routing for one query")
    p.add_argument("--workload", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--query", default=None)
    p.add_argument("--query-file", default=None,
                   help="JSON file with an unseen query statement")
    p.add_argument("--multiplicity", "-m", type=int, default=1)
    p.add_argument("--similarity", action="store_true",
                   help="prefer similarity inheritance for unseen queries")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("monitor", help="replay a statement stream")
    p.add_argument("--stream", required=True,
                   help="JSON file with config and statement stream")
    p.add_argument("--out", default="-")
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_monitor)

    p = sub.add_parser("oracle", help="exhaustive check on a tiny request")
    _add_request_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("export-lp", help="write the program as LP text")
    _add_request_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_export_lp)

    p = sub.add_parser("bench", help="timing sweep over synthetic instances")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--report", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8642)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(fn=cmd_serve)

    return parser


_ERROR_KINDS = {
    "CliError": "usage",
    "ModelError": "validation",
    "BipError": "validation",
    "DecodeError": "internal",
    "SolverError": "solver",
    "RecommenderError": "validation",
    "OracleError": "validation",
    "OracleCapError": "too_large",
    "BaselineError": "validation",
    "RoutingError": "validation",
    "MonitorError": "validation",
    "FileNotFoundError": "not_found",
    "JSONDecodeError": "parse",
    "KeyError": "parse",
    "ValueError": "validation",
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # map everything to machine-readable stderr
        kind = getattr(exc, "kind", None)
        if kind is None:
            kind = _ERROR_KINDS.get(type(exc).__name__, "internal")
        sys.stderr.write(canonical_json({
            "error": {"type": kind, "message": str(exc)},
        }))
        return 2


if __name__ == "__main__":
    sys.exit(main())
