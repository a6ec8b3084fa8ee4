"""Routing advisors: cost-ranked placement for known statements and a
similarity fallback for statements the tuner never saw.

The similarity route describes each query by the set of candidate indexes
its ideal plan would touch (ideal = every candidate available). An unseen
query inherits the normal routing of the most similar tuned query by cosine
over those indicator vectors; with no usable signal it falls back to the
cost ranking.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

from . import costmodel
from .model import (
    DivergentDesign,
    QueryStatement,
    RoutingFunctions,
    Workload,
    failure_routing_cardinality,
)


class RoutingError(ValueError):
    pass


def route_top_m(query: QueryStatement, design: DivergentDesign, m: int
                ) -> tuple[int, ...]:
    """The m replicas where the query runs cheapest; cost ties go to the
    lower replica id."""
    n = design.replica_count
    if not 1 <= m <= n:
        raise RoutingError(f"multiplicity {m} out of range for {n} replicas")
    ranked = sorted(range(1, n + 1),
                    key=lambda r: (costmodel.query_cost(query, design.config(r)), r))
    return tuple(sorted(ranked[:m]))


def plan_index_vector(query: QueryStatement, workload: Workload
                      ) -> tuple[int, ...]:
    """Indicator over the candidate universe of the indexes the query's
    ideal plan uses (all candidates materialized)."""
    universe = workload.index_ids()
    full = frozenset(universe)
    try:
        plan = costmodel.optimal_plan(query, full)
    except costmodel.CostModelError:
        return tuple(0 for _ in universe)
    used = plan.used_indexes()
    return tuple(1 if a in used else 0 for a in universe)


def _cosine(u: Sequence[int], v: Sequence[int]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def route_by_similarity(query: QueryStatement, design: DivergentDesign,
                        workload: Workload, m: int) -> tuple[int, ...]:
    """Inherit the routing of the most similar tuned query; break ties on
    the lower query id. A zero vector or all-zero similarities falls back
    to the cost ranking."""
    target = plan_index_vector(query, workload)
    if any(target):
        best: Optional[tuple[float, str]] = None
        for trained in workload.queries:
            if trained.id == query.id:
                continue
            sim = _cosine(target, plan_index_vector(trained, workload))
            if sim <= 0.0:
                continue
            if best is None or sim > best[0] + 1e-12 or (
                    abs(sim - best[0]) <= 1e-12 and trained.id < best[1]):
                best = (sim, trained.id)
        if best is not None:
            inherited = design.routing.normal_map().get(best[1], ())
            if inherited:
                return inherited
    return route_top_m(query, design, m)


def complete_failure_routing(design: DivergentDesign, workload: Workload,
                             m: int, mode: str = "min") -> DivergentDesign:
    """Fill in per-scenario failure routing by cost ranking over survivors."""
    n = design.replica_count
    if n < 2:
        raise RoutingError("failure routing needs at least two replicas")
    divisor = failure_routing_cardinality(m, n, mode)
    on_failure: dict[int, dict[str, tuple[int, ...]]] = {}
    for j in range(1, n + 1):
        survivors = [r for r in range(1, n + 1) if r != j]
        h: dict[str, tuple[int, ...]] = {}
        for q in workload.queries:
            ranked = sorted(
                survivors,
                key=lambda r: (costmodel.query_cost(q, design.config(r)), r))
            h[q.id] = tuple(sorted(ranked[:divisor]))
        on_failure[j] = h
    known = design.routing.normal_map()
    normal = {}
    for q in workload.queries:
        normal[q.id] = known.get(q.id, ()) or route_top_m(q, design, m)
    return DivergentDesign(
        configs=design.configs,
        routing=RoutingFunctions.make(normal, on_failure))
