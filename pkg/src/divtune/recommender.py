"""High-level advisor entry points.

tune() runs the full pipeline: validate, assemble the program for every
constraint family on the request, solve, decode, and report. Greedy load
balancing is two-phase: an unconstrained solve supplies the reference
optimum for the per-replica caps, and an infeasible greedy program falls
back to the exact formulation rather than failing the request.

pareto() sweeps materialization budgets as fractions of the spend the
unconstrained optimum would need, chaining warm starts up the grid.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from . import bip as bipmod
from . import solver as solvermod
from .model import (
    ConstraintSet,
    CostBreakdown,
    DivergentDesign,
    MaterializationConstraint,
    RoutingFunctions,
    SolverControls,
    TuningRequest,
    Workload,
    validate_request,
)


class RecommenderError(ValueError):
    pass


DEFAULT_FRACTIONS = (0.0, 0.125, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class TuneResult:
    design: DivergentDesign
    breakdown: CostBreakdown
    status: str
    objective: float
    gap: float
    nodes_explored: int
    wall_time: float
    num_variables: int
    num_constraints: int
    dropped_replicas: tuple[int, ...] = ()
    used_greedy_balance: bool = False
    fell_back_to_exact: bool = False

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict(),
            "breakdown": self.breakdown.to_dict(),
            "status": self.status,
            "objective": self.objective,
            "gap": self.gap,
            "nodes_explored": self.nodes_explored,
            "wall_time": self.wall_time,
            "num_variables": self.num_variables,
            "num_constraints": self.num_constraints,
            "dropped_replicas": list(self.dropped_replicas),
            "used_greedy_balance": self.used_greedy_balance,
            "fell_back_to_exact": self.fell_back_to_exact,
        }


def _phase_one_total(req: TuningRequest,
                     should_stop: Optional[Callable[[], bool]]) -> float:
    """Unconstrained-balance optimum: same request without the skew family."""
    bare = replace(req, constraints=replace(req.constraints, load_skew=None))
    bp = bipmod.build_program(bare)
    sol = solvermod.solve(bp, should_stop=should_stop)
    if sol.assignment is None:
        raise RecommenderError(
            f"reference solve for greedy balancing ended {sol.status}")
    return sol.objective + bp.meta.dropped_constant


def tune(req: TuningRequest,
         should_stop: Optional[Callable[[], bool]] = None) -> TuneResult:
    problems = validate_request(req)
    if problems:
        raise RecommenderError(
            "invalid request: " + "; ".join(str(p) for p in problems))
    skew = req.constraints.load_skew
    used_greedy = skew is not None and skew.mode == "greedy"
    fell_back = False
    greedy_opt = _phase_one_total(req, should_stop) if used_greedy else None
    bp = bipmod.build_program(req, greedy_opt_cost=greedy_opt)
    sol = solvermod.solve(bp, should_stop=should_stop)
    if sol.assignment is None and used_greedy and sol.status == "infeasible":
        # caps from the balance theorem can be unattainable when single
        # statements are heavy; the exact rows stay faithful
        fell_back = True
        exact_req = replace(req, constraints=replace(
            req.constraints, load_skew=replace(skew, mode="exact")))
        bp = bipmod.build_program(exact_req)
        sol = solvermod.solve(bp, should_stop=should_stop)
    if sol.assignment is None:
        raise RecommenderError(f"no design found: solver ended {sol.status}")
    decoded = bipmod.decode(bp, sol.assignment, objective=sol.objective)
    return TuneResult(
        design=decoded.design,
        breakdown=decoded.breakdown,
        status=sol.status,
        objective=sol.objective,
        gap=sol.gap,
        nodes_explored=sol.nodes_explored,
        wall_time=sol.wall_time,
        num_variables=bp.num_variables,
        num_constraints=bp.num_constraints,
        dropped_replicas=decoded.dropped_replicas,
        used_greedy_balance=used_greedy,
        fell_back_to_exact=fell_back,
    )


@dataclass(frozen=True)
class ParetoPoint:
    replica_count: int
    multiplicity: int
    fraction: float
    budget: float
    cost: float
    status: str
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "replica_count": self.replica_count,
            "multiplicity": self.multiplicity,
            "fraction": self.fraction,
            "budget": self.budget,
            "cost": self.cost,
            "status": self.status,
            "wall_time": self.wall_time,
        }


def _transition_spend(design: DivergentDesign, current: DivergentDesign,
                      workload: Workload) -> float:
    spend = 0.0
    for r in range(1, design.replica_count + 1):
        target = design.config(r)
        have = current.config(r) if r <= current.replica_count else frozenset()
        for a in target - have:
            spend += workload.index_by_id(a).create_cost
        for a in have - target:
            spend += workload.index_by_id(a).drop_cost
    return spend


def pareto(workload: Workload,
           replica_counts: Sequence[int],
           multiplicity: int = 1,
           space_budget: Optional[float] = None,
           current: Optional[dict[int, DivergentDesign]] = None,
           fractions: Sequence[float] = DEFAULT_FRACTIONS,
           controls: Optional[SolverControls] = None,
           should_stop: Optional[Callable[[], bool]] = None
           ) -> list[ParetoPoint]:
    """Cost versus materialization-budget frontier, one curve per replica
    count. The 100% budget is what the unconstrained optimum would spend
    migrating from the current design (empty replicas by default)."""
    controls = controls or SolverControls(gap_tolerance=0.0)

    def stopped() -> bool:
        return should_stop is not None and should_stop()

    points: list[ParetoPoint] = []
    for n in sorted(set(int(v) for v in replica_counts)):
        if stopped():
            break
        base = TuningRequest(
            workload=workload, replica_count=n, multiplicity=multiplicity,
            failure_prob=0.0,
            constraints=ConstraintSet(space_budget=space_budget),
            solver_controls=controls)
        bp0 = bipmod.build_program(base)
        unbounded = solvermod.solve(bp0, should_stop=should_stop)
        if unbounded.assignment is None:
            if stopped():
                break
            raise RecommenderError(
                f"unbounded solve failed for {n} replicas: {unbounded.status}")
        free = bipmod.decode(bp0, unbounded.assignment,
                             objective=unbounded.objective)
        cur = None if current is None else current.get(n)
        if cur is None:
            cur = DivergentDesign(
                configs=tuple(frozenset() for _ in range(n)),
                routing=RoutingFunctions.make({}, None))
        full_spend = _transition_spend(free.design, cur, workload)
        previous = unbounded
        for fraction in sorted(set(float(f) for f in fractions)):
            if stopped():
                break
            budget = fraction * full_spend
            req = replace(base, constraints=replace(
                base.constraints,
                materialization=MaterializationConstraint(budget=budget,
                                                          current=cur)))
            bp = bipmod.build_program(req)
            t1 = time.monotonic()
            sol = solvermod.refine(previous, bp, controls=controls,
                                   should_stop=should_stop)
            wall = time.monotonic() - t1
            if sol.assignment is None:
                points.append(ParetoPoint(
                    replica_count=n, multiplicity=multiplicity,
                    fraction=fraction, budget=budget, cost=float("inf"),
                    status=sol.status, wall_time=wall))
                continue
            decoded = bipmod.decode(bp, sol.assignment, objective=sol.objective)
            points.append(ParetoPoint(
                replica_count=n, multiplicity=multiplicity, fraction=fraction,
                budget=budget, cost=decoded.breakdown.total,
                status=sol.status, wall_time=wall))
            previous = sol
    return points
