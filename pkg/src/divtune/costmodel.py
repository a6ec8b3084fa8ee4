"""Workload cost evaluation over divergent designs.

Query costs follow the linear-composability contract: a query's cost under an
index configuration is the minimum over its template plans of the plan's
internal cost plus, per referenced table, the cheapest usable access method
available in the configuration (the table scan is always available). Update
costs add per-materialized-index maintenance and a fixed base cost on top of
the selection shell. Everything else here is bookkeeping over routing:
totals, per-replica loads, failure scenarios, and their alpha-weighted mix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    DivergentDesign,
    QueryStatement,
    UpdateStatement,
    Workload,
    failure_routing_cardinality,
    is_scan,
)


class CostModelError(ValueError):
    """Raised when a cost is undefined (no usable plan, missing routing)."""


@dataclass(frozen=True)
class ChosenPlan:
    """The instantiated plan backing a query cost: template id plus the
    access method picked for each table slot."""

    template_id: str
    accesses: tuple[tuple[str, str], ...]  # (table_id, access_id), sorted
    cost: float

    def used_indexes(self) -> frozenset[str]:
        return frozenset(a for _, a in self.accesses if not is_scan(a))


def _slot_choice(options, config: frozenset[str]):
    """Cheapest usable option available under ``config``; scan options are
    always available. Ties go to the lexicographically smallest access id."""
    best = None
    for opt in options:
        if not opt.usable:
            continue
        if not is_scan(opt.access) and opt.access not in config:
            continue
        if best is None or opt.cost < best.cost or (
                opt.cost == best.cost and opt.access < best.access):
            best = opt
    return best


def optimal_plan(query: QueryStatement, config: Iterable[str]) -> ChosenPlan:
    """Cost-minimizing instantiated plan for ``query`` under ``config``.

    Ties across templates resolve to the lowest template id; ties inside a
    slot to the lexicographically smallest access id.
    """
    cfg = frozenset(config)
    best: ChosenPlan | None = None
    for tp in sorted(query.templates, key=lambda t: t.id):
        cost = tp.internal_cost
        accesses = []
        usable = True
        for table, options in tp.slots:
            choice = _slot_choice(options, cfg)
            if choice is None:
                usable = False
                break
            cost += choice.cost
            accesses.append((table, choice.access))
        if not usable:
            continue
        if best is None or cost < best.cost:
            best = ChosenPlan(template_id=tp.id,
                              accesses=tuple(sorted(accesses)), cost=cost)
    if best is None:
        raise CostModelError(
            f"query {query.id!r} has no usable instantiated plan under "
            f"config {sorted(cfg)}")
    return best


def query_cost(query: QueryStatement, config: Iterable[str]) -> float:
    return optimal_plan(query, config).cost


def update_cost(update: UpdateStatement, config: Iterable[str]) -> float:
    """Shell cost plus maintenance for every materialized index plus the
    fixed base cost. Maintenance applies to all indexes in the config that
    the update touches, whatever tables its shell reads."""
    cfg = frozenset(config)
    maintenance = sum(c for a, c in update.index_update_costs if a in cfg)
    return query_cost(update.query_shell, cfg) + maintenance + update.base_cost


def total_cost(design: DivergentDesign, workload: Workload, m: int) -> float:
    """Normal-operation cost: each query spreads its weight over the m
    replicas it is routed to; updates run on every replica."""
    total = 0.0
    for q in workload.queries:
        replicas = design.routing.replicas_for(q.id)
        share = q.weight / m
        for r in replicas:
            total += share * query_cost(q, design.config(r))
    for u in workload.updates:
        for r in range(1, design.replica_count + 1):
            total += u.weight * update_cost(u, design.config(r))
    return total


def ftotal_cost(design: DivergentDesign, workload: Workload, m: int,
                failed: int, mode: str = "min") -> float:
    """Cost while replica ``failed`` is down: queries follow the failure
    routing with their weight spread over the failure cardinality; updates
    run on the survivors only."""
    n = design.replica_count
    if n < 2:
        raise CostModelError("failure scenarios need at least two replicas")
    if not (1 <= failed <= n):
        raise CostModelError(f"failed replica {failed} out of range 1..{n}")
    divisor = failure_routing_cardinality(m, n, mode)
    total = 0.0
    for q in workload.queries:
        replicas = design.routing.failure_replicas_for(q.id, failed)
        share = q.weight / divisor
        for r in replicas:
            if r == failed:
                raise CostModelError(
                    f"failure routing for {q.id!r} uses the failed replica")
            total += share * query_cost(q, design.config(r))
    for u in workload.updates:
        for r in range(1, n + 1):
            if r == failed:
                continue
            total += u.weight * update_cost(u, design.config(r))
    return total


def exp_total_cost(design: DivergentDesign, workload: Workload, m: int,
                   alpha: float = 0.0, mode: str = "min") -> float:
    """Failure-probability-weighted mix: (1-alpha) of the normal total plus
    alpha/N of each single-failure scenario."""
    if not (0.0 <= alpha <= 1.0):
        raise CostModelError("failure probability must lie in [0, 1]")
    normal = total_cost(design, workload, m)
    if alpha == 0.0:
        return normal
    n = design.replica_count
    if n < 2:
        raise CostModelError(
            "failure probability > 0 is undefined for a single replica")
    scenarios = sum(
        ftotal_cost(design, workload, m, j, mode) for j in range(1, n + 1))
    return (1.0 - alpha) * normal + (alpha / n) * scenarios


def replica_load(design: DivergentDesign, workload: Workload, m: int,
                 replica: int) -> float:
    """Normal-operation load on one replica: its share of the queries routed
    to it plus the full update stream."""
    cfg = design.config(replica)
    load = 0.0
    for q in workload.queries:
        if replica in design.routing.replicas_for(q.id):
            load += (q.weight / m) * query_cost(q, cfg)
    for u in workload.updates:
        load += u.weight * update_cost(u, cfg)
    return load


def replica_fload(design: DivergentDesign, workload: Workload, m: int,
                  replica: int, failed: int, mode: str = "min") -> float:
    """Load on a surviving replica while ``failed`` is down."""
    n = design.replica_count
    if replica == failed:
        raise CostModelError("a failed replica carries no load")
    divisor = failure_routing_cardinality(m, n, mode)
    cfg = design.config(replica)
    load = 0.0
    for q in workload.queries:
        if replica in design.routing.failure_replicas_for(q.id, failed):
            load += (q.weight / divisor) * query_cost(q, cfg)
    for u in workload.updates:
        load += u.weight * update_cost(u, cfg)
    return load


def all_replica_loads(design: DivergentDesign, workload: Workload,
                      m: int) -> tuple[float, ...]:
    return tuple(replica_load(design, workload, m, r)
                 for r in range(1, design.replica_count + 1))


def skew_factor(loads: Sequence[float]) -> float:
    """max/min - 1 over per-replica loads; undefined when any load is zero."""
    if not loads:
        raise CostModelError("skew factor needs at least one load")
    lo, hi = min(loads), max(loads)
    if lo <= 0.0:
        raise CostModelError("skew factor is undefined for zero loads")
    return hi / lo - 1.0


def satisfies_skew(loads: Sequence[float], tau: float,
                   tol: float = 1e-9) -> bool:
    """Pairwise form of the skew cap, well defined at zero loads:
    every load <= (1 + tau) * every other load."""
    hi, lo = max(loads), min(loads)
    return hi <= (1.0 + tau) * lo + tol


def improvement(candidate_cost: float, baseline_cost: float) -> float:
    """Relative gain of candidate over baseline: 1 - candidate/baseline."""
    if baseline_cost <= 0.0:
        raise CostModelError("improvement needs a positive baseline cost")
    return 1.0 - candidate_cost / baseline_cost
