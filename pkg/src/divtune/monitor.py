"""Online workload monitor.

Feeds a sliding window of observed statements into a bare-bones re-solve
(space budget only, no failure scenarios) warm-started from the previous
window's solution. Duplicate statements in the window are aggregated by
summing weights, which is exact for every cost expression by linearity.
Each observation appends one entry to the improvement series; a timed-out
or infeasible re-solve keeps the previous design and reports improvement
relative to it as zero.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

from . import bip as bipmod
from . import costmodel
from . import routing as routingmod
from . import solver as solvermod
from .model import (
    CandidateIndex,
    ConstraintSet,
    DivergentDesign,
    QueryStatement,
    RoutingFunctions,
    SolverControls,
    Table,
    TuningRequest,
    UpdateStatement,
    Workload,
)

Statement = Union[QueryStatement, UpdateStatement]


class MonitorError(ValueError):
    pass


@dataclass(frozen=True)
class MonitorConfig:
    tables: tuple[Table, ...]
    indexes: tuple[CandidateIndex, ...]
    replica_count: int
    multiplicity: int = 1
    window_size: int = 60
    space_budget: Optional[float] = None
    time_limit: float = 2.0
    gap_tolerance: float = 0.0
    improvement_threshold: float = 0.2

    def to_dict(self) -> dict:
        return {
            "tables": [t.to_dict() for t in self.tables],
            "indexes": [i.to_dict() for i in self.indexes],
            "replica_count": self.replica_count,
            "multiplicity": self.multiplicity,
            "window_size": self.window_size,
            "space_budget": self.space_budget,
            "time_limit": self.time_limit,
            "gap_tolerance": self.gap_tolerance,
            "improvement_threshold": self.improvement_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonitorConfig":
        return cls(
            tables=tuple(Table.from_dict(t) for t in d["tables"]),
            indexes=tuple(CandidateIndex.from_dict(i) for i in d["indexes"]),
            replica_count=int(d["replica_count"]),
            multiplicity=int(d.get("multiplicity", 1)),
            window_size=int(d.get("window_size", 60)),
            space_budget=d.get("space_budget"),
            time_limit=float(d.get("time_limit", 2.0)),
            gap_tolerance=float(d.get("gap_tolerance", 0.0)),
            improvement_threshold=float(d.get("improvement_threshold", 0.2)),
        )


@dataclass(frozen=True)
class SeriesEntry:
    statement_index: int
    improvement: float
    solve_time: float
    status: str

    def to_dict(self) -> dict:
        return {
            "statement_index": self.statement_index,
            "improvement": self.improvement,
            "solve_time": self.solve_time,
            "status": self.status,
        }


@dataclass
class MonitorState:
    config: MonitorConfig
    window: deque = field(default_factory=deque)
    design: Optional[DivergentDesign] = None
    last_solution: Optional[solvermod.Solution] = None
    series: list[SeriesEntry] = field(default_factory=list)
    observed: int = 0
    redeploy_count: int = 0


def start(config: MonitorConfig,
          initial_design: Optional[DivergentDesign] = None) -> MonitorState:
    if config.window_size < 1:
        raise MonitorError("window size must be positive")
    if initial_design is not None and (
            initial_design.replica_count != config.replica_count):
        raise MonitorError("initial design replica count does not match")
    state = MonitorState(config=config)
    state.window = deque(maxlen=config.window_size)
    if initial_design is None:
        n = config.replica_count
        initial_design = DivergentDesign(
            configs=tuple(frozenset() for _ in range(n)),
            routing=RoutingFunctions.make({}, None))
    state.design = initial_design
    return state


def window_workload(state: MonitorState) -> Workload:
    """Aggregate the window into a workload; duplicate ids sum weights."""
    queries: dict[str, QueryStatement] = {}
    qweight: dict[str, float] = {}
    updates: dict[str, UpdateStatement] = {}
    uweight: dict[str, float] = {}
    for stmt in state.window:
        if isinstance(stmt, UpdateStatement):
            updates[stmt.id] = stmt
            uweight[stmt.id] = uweight.get(stmt.id, 0.0) + stmt.weight
        else:
            queries[stmt.id] = stmt
            qweight[stmt.id] = qweight.get(stmt.id, 0.0) + stmt.weight
    agg_q = tuple(
        QueryStatement(id=q.id, weight=qweight[q.id], templates=q.templates)
        for q in sorted(queries.values(), key=lambda s: s.id))
    agg_u = tuple(
        UpdateStatement(id=u.id, weight=uweight[u.id], query_shell=u.query_shell,
                        index_update_costs=u.index_update_costs,
                        base_cost=u.base_cost)
        for u in sorted(updates.values(), key=lambda s: s.id))
    return Workload(tables=state.config.tables, indexes=state.config.indexes,
                    queries=agg_q, updates=agg_u)


def _window_cost(design: DivergentDesign, w: Workload, m: int) -> float:
    """Window cost under a design whose routing may predate these queries."""
    total = 0.0
    known = design.routing.normal_map()
    for q in w.queries:
        routed = known.get(q.id, ())
        if not routed:
            routed = routingmod.route_top_m(q, design, m)
        for r in routed:
            total += (q.weight / m) * costmodel.query_cost(q, design.config(r))
    for u in w.updates:
        for r in range(1, design.replica_count + 1):
            total += u.weight * costmodel.update_cost(u, design.config(r))
    return total


def observe(state: MonitorState, stmt: Statement) -> SeriesEntry:
    """Add one statement, re-tune on the window, and score the candidate
    against the deployed design. The deployment only switches when the
    improvement clears the configured threshold."""
    state.window.append(stmt)
    state.observed += 1
    w = window_workload(state)
    cfg = state.config
    if not w.queries:
        entry = SeriesEntry(statement_index=state.observed, improvement=0.0,
                            solve_time=0.0, status="no_queries")
        state.series.append(entry)
        return entry
    req = TuningRequest(
        workload=w, replica_count=cfg.replica_count,
        multiplicity=cfg.multiplicity, failure_prob=0.0,
        constraints=ConstraintSet(space_budget=cfg.space_budget),
        solver_controls=SolverControls(gap_tolerance=cfg.gap_tolerance,
                                       time_limit=cfg.time_limit))
    bp = bipmod.build_program(req)
    if state.last_solution is not None:
        sol = solvermod.refine(state.last_solution, bp)
    else:
        sol = solvermod.solve(bp)
    if sol.assignment is None:
        entry = SeriesEntry(statement_index=state.observed, improvement=0.0,
                            solve_time=sol.wall_time, status=sol.status)
        state.series.append(entry)
        return entry
    decoded = bipmod.decode(bp, sol.assignment, objective=sol.objective)
    state.last_solution = sol
    current_cost = _window_cost(state.design, w, cfg.multiplicity)
    candidate_cost = decoded.breakdown.total
    if current_cost > 0:
        improvement = 1.0 - candidate_cost / current_cost
    else:
        improvement = 0.0
    if (sol.status != "timeout_best_known"
            and improvement > cfg.improvement_threshold):
        state.design = decoded.design
        state.redeploy_count += 1
    entry = SeriesEntry(statement_index=state.observed,
                        improvement=improvement,
                        solve_time=sol.wall_time, status=sol.status)
    state.series.append(entry)
    return entry


def replay(config: MonitorConfig, stream: list[Statement],
           initial_design: Optional[DivergentDesign] = None) -> MonitorState:
    state = start(config, initial_design)
    for stmt in stream:
        observe(state, stmt)
    return state
