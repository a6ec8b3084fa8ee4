"""Reference designers the tuner is measured against.

uniform_design replicates one greedily tuned configuration everywhere and
routes round-robin. divergent_heuristic is the classic iterate-to-fixpoint
partitioner: seed a random split, tune each part greedily, re-route every
query to its m cheapest replicas, repeat. Both share the same greedy
single-config subroutine, so with multiplicity equal to the replica count
the heuristic collapses to the uniform design exactly.

Greedy inputs weight each query at f/m (its per-replica share under the
cost model) and updates at full weight; that keeps the two baselines'
inputs identical when m = N.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from . import costmodel
from .model import (
    DivergentDesign,
    QueryStatement,
    RoutingFunctions,
    Workload,
)


class BaselineError(ValueError):
    pass


def greedy_config(weighted_queries: Sequence[tuple[QueryStatement, float]],
                  workload: Workload,
                  space_budget: Optional[float]) -> frozenset[str]:
    """Benefit-per-size greedy: repeatedly add the candidate with the best
    positive net benefit density until the budget or the benefits run out."""
    chosen: set[str] = set()
    remaining = float("inf") if space_budget is None else space_budget
    penalty = {a: 0.0 for a in workload.index_ids()}
    for u in workload.updates:
        for a, c in u.index_update_costs:
            penalty[a] += u.weight * c
    while True:
        best: Optional[tuple[float, str]] = None
        base_costs = {
            q.id: costmodel.query_cost(q, frozenset(chosen))
            for q, _ in weighted_queries
        }
        for a in workload.index_ids():
            if a in chosen:
                continue
            size = workload.index_by_id(a).size
            if size > remaining + 1e-12:
                continue
            gain = -penalty[a]
            trial = frozenset(chosen | {a})
            for q, share in weighted_queries:
                gain += share * (base_costs[q.id] - costmodel.query_cost(q, trial))
            if gain <= 1e-12:
                continue
            density = gain / size if size > 0 else float("inf")
            if best is None or density > best[0] + 1e-12 or (
                    abs(density - best[0]) <= 1e-12 and a < best[1]):
                best = (density, a)
        if best is None:
            return frozenset(chosen)
        chosen.add(best[1])
        remaining -= workload.index_by_id(best[1]).size


def _round_robin(workload: Workload, n: int, m: int
                 ) -> dict[str, tuple[int, ...]]:
    routing = {}
    for i, q in enumerate(workload.queries):
        routing[q.id] = tuple(sorted((i + k) % n + 1 for k in range(m)))
    return routing


def uniform_design(workload: Workload, replica_count: int, multiplicity: int,
                   space_budget: Optional[float]) -> DivergentDesign:
    """One config everywhere; queries spread round-robin across replicas."""
    if not 1 <= multiplicity <= replica_count:
        raise BaselineError("multiplicity out of range")
    weighted = [(q, q.weight / multiplicity) for q in workload.queries]
    config = greedy_config(weighted, workload, space_budget)
    return DivergentDesign(
        configs=tuple(config for _ in range(replica_count)),
        routing=RoutingFunctions.make(
            _round_robin(workload, replica_count, multiplicity), None))


@dataclass(frozen=True)
class HeuristicResult:
    design: DivergentDesign
    total_cost: float
    iterations: int
    restarts: int


def divergent_heuristic(workload: Workload, replica_count: int,
                        multiplicity: int, space_budget: Optional[float],
                        seed: int = 0, restarts: int = 3,
                        max_iterations: int = 20) -> HeuristicResult:
    """Random partition, per-part greedy tuning, cheapest-m re-routing,
    iterated to a fixpoint; the best restart wins."""
    n, m = replica_count, multiplicity
    if not 1 <= m <= n:
        raise BaselineError("multiplicity out of range")
    rng = random.Random(seed)
    best: Optional[tuple[float, DivergentDesign, int]] = None
    for _ in range(max(1, restarts)):
        routing = {
            q.id: tuple(sorted(rng.sample(range(1, n + 1), m)))
            for q in workload.queries
        }
        iterations = 0
        for _ in range(max_iterations):
            iterations += 1
            configs = []
            for r in range(1, n + 1):
                part = [(q, q.weight / m) for q in workload.queries
                        if r in routing[q.id]]
                configs.append(greedy_config(part, workload, space_budget))
            reassigned = {}
            for q in workload.queries:
                ranked = sorted(
                    range(1, n + 1),
                    key=lambda r: (costmodel.query_cost(q, configs[r - 1]), r))
                reassigned[q.id] = tuple(sorted(ranked[:m]))
            if reassigned == routing:
                routing = reassigned
                break
            routing = reassigned
        design = DivergentDesign(
            configs=tuple(configs),
            routing=RoutingFunctions.make(routing, None))
        cost = costmodel.total_cost(design, workload, m)
        if best is None or cost < best[0] - 1e-12:
            best = (cost, design, iterations)
    assert best is not None
    return HeuristicResult(design=best[1], total_cost=best[0],
                           iterations=best[2], restarts=max(1, restarts))
