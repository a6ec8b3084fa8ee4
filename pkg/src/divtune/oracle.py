"""Exhaustive reference solver for desk-scale tuning instances.

Enumerates every per-replica configuration assignment (and, for elastic
instances, every choice of surviving replicas), filters by the active
constraints evaluated with the plain cost model, and keeps the cheapest
design. Routing is enumerated jointly with configurations only when an
inter-replica constraint (load skew) makes per-query choices interact;
otherwise each query independently takes its cheapest replicas, which is
exact because the objective is separable per query once configs are fixed.

This module exists to check the binary-program pipeline, so it shares no
machinery with it beyond the domain types and the cost model.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from . import costmodel
from .model import (
    DivergentDesign,
    RoutingFunctions,
    TuningRequest,
    Workload,
    failure_routing_cardinality,
)


class OracleError(ValueError):
    pass


class OracleCapError(OracleError):
    """Instance too large for exhaustive enumeration under the given caps."""


@dataclass(frozen=True)
class OracleCaps:
    max_indexes: int = 4
    max_replicas: int = 3
    max_queries: int = 5
    max_updates: int = 2
    max_designs: int = 5_000_000


@dataclass(frozen=True)
class OracleResult:
    design: DivergentDesign
    cost: float
    objective_kind: str  # "expected_total" | "query_only"
    explored: int
    # Original replica ids that were decommissioned (shrink instances).
    dropped_replicas: tuple[int, ...] = ()


def _subsets_lex(ids: Sequence[str]) -> list[frozenset[str]]:
    """All subsets ordered by their sorted-tuple encoding, empty set first."""
    ordered = sorted(
        itertools.chain.from_iterable(
            itertools.combinations(sorted(ids), k) for k in range(len(ids) + 1)
        )
    )
    # sorted() puts () first, then ('a',), ('a','b'), ..., ('b',), ...
    return [frozenset(t) for t in ordered]


def _query_portion(design: DivergentDesign, w: Workload, m: int,
                   alpha: float, mode: str) -> float:
    """Query-evaluation share of the expected total (no update terms)."""
    normal = 0.0
    for q in w.queries:
        share = q.weight / m
        for r in design.routing.replicas_for(q.id):
            normal += share * costmodel.query_cost(q, design.config(r))
    if alpha == 0.0:
        return normal
    n = design.replica_count
    divisor = failure_routing_cardinality(m, n, mode)
    scenarios = 0.0
    for j in range(1, n + 1):
        for q in w.queries:
            share = q.weight / divisor
            for r in design.routing.failure_replicas_for(q.id, j):
                scenarios += share * costmodel.query_cost(q, design.config(r))
    return (1.0 - alpha) * normal + (alpha / n) * scenarios


def _normal_update_cost(design: DivergentDesign, w: Workload) -> float:
    return sum(
        u.weight * costmodel.update_cost(u, design.config(r))
        for u in w.updates
        for r in range(1, design.replica_count + 1)
    )


def _transition_cost(w: Workload, current: frozenset[str],
                     target: frozenset[str]) -> float:
    cost = 0.0
    for a in target - current:
        cost += w.index_by_id(a).create_cost
    for a in current - target:
        cost += w.index_by_id(a).drop_cost
    return cost


def _config_feasible(req: TuningRequest, cfg: frozenset[str],
                     current: Optional[frozenset[str]],
                     deploy_cost: float) -> bool:
    cs = req.constraints
    w = req.workload
    if cs.space_budget is not None:
        used = sum(w.index_by_id(a).size for a in cfg)
        if used > cs.space_budget + 1e-12:
            return False
    for limit in cs.index_limits:
        if len(cfg & limit.index_ids) > limit.max_per_replica:
            return False
    if cs.materialization is not None:
        base = current if current is not None else frozenset()
        cost = _transition_cost(w, base, cfg) + deploy_cost
        if cost > cs.materialization.budget + 1e-12:
            return False
    return True


def _greedy_normal_routing(configs: Sequence[frozenset[str]], w: Workload,
                           m: int) -> dict[str, tuple[int, ...]]:
    routing = {}
    for q in w.queries:
        ranked = sorted(
            range(1, len(configs) + 1),
            key=lambda r: (costmodel.query_cost(q, configs[r - 1]), r),
        )
        routing[q.id] = tuple(sorted(ranked[:m]))
    return routing


def _greedy_failure_routing(configs: Sequence[frozenset[str]], w: Workload,
                            divisor: int) -> dict[int, dict[str, tuple[int, ...]]]:
    n = len(configs)
    out: dict[int, dict[str, tuple[int, ...]]] = {}
    for j in range(1, n + 1):
        survivors = [r for r in range(1, n + 1) if r != j]
        h: dict[str, tuple[int, ...]] = {}
        for q in w.queries:
            ranked = sorted(
                survivors,
                key=lambda r: (costmodel.query_cost(q, configs[r - 1]), r),
            )
            h[q.id] = tuple(sorted(ranked[:divisor]))
        out[j] = h
    return out


def _iter_normal_routings(n: int, m: int, w: Workload
                          ) -> Iterator[dict[str, tuple[int, ...]]]:
    per_query = list(itertools.combinations(range(1, n + 1), m))
    for combo in itertools.product(per_query, repeat=len(w.queries)):
        yield {q.id: combo[i] for i, q in enumerate(w.queries)}


def _iter_failure_routings(n: int, divisor: int, w: Workload
                           ) -> Iterator[dict[int, dict[str, tuple[int, ...]]]]:
    scenario_choices = []
    for j in range(1, n + 1):
        survivors = [r for r in range(1, n + 1) if r != j]
        per_query = list(itertools.combinations(survivors, divisor))
        scenario_choices.append(
            [dict(zip((q.id for q in w.queries), combo))
             for combo in itertools.product(per_query, repeat=len(w.queries))]
        )
    for combo in itertools.product(*scenario_choices):
        yield {j + 1: combo[j] for j in range(n)}


def _design_feasible_inter(req: TuningRequest, design: DivergentDesign,
                           mode: str) -> bool:
    cs = req.constraints
    w = req.workload
    m = req.multiplicity
    if cs.load_skew is not None and cs.load_skew.mode == "exact":
        loads = costmodel.all_replica_loads(design, w, m)
        if not costmodel.satisfies_skew(loads, cs.load_skew.tau):
            return False
    if cs.failure_load_skew is not None:
        n = design.replica_count
        for j in range(1, n + 1):
            floads = [
                costmodel.replica_fload(design, w, m, r, j, mode)
                for r in range(1, n + 1) if r != j
            ]
            if not costmodel.satisfies_skew(floads, cs.failure_load_skew.tau):
                return False
    if cs.update_cost_bound is not None:
        cap = cs.update_cost_bound.fraction * cs.update_cost_bound.reference_cost
        if _normal_update_cost(design, w) > cap + 1e-9:
            return False
    return True


def enumerate_optimal(req: TuningRequest,
                      caps: OracleCaps = OracleCaps()) -> OracleResult:
    """Exhaustively minimize the request's objective; raises OracleCapError
    when the instance exceeds the enumeration caps and OracleError when no
    feasible design exists."""
    w = req.workload
    n = req.replica_count
    m = req.multiplicity
    alpha = req.failure_prob
    mode = req.routing_cardinality_mode
    cs = req.constraints

    if len(w.index_ids()) > caps.max_indexes:
        raise OracleCapError(f"more than {caps.max_indexes} candidate indexes")
    if len(w.queries) > caps.max_queries:
        raise OracleCapError(f"more than {caps.max_queries} queries")
    if len(w.updates) > caps.max_updates:
        raise OracleCapError(f"more than {caps.max_updates} updates")

    mat = cs.materialization
    target = n
    if mat is not None and mat.target_replica_count is not None:
        target = mat.target_replica_count
    if max(n, target) > caps.max_replicas:
        raise OracleCapError(f"more than {caps.max_replicas} replicas")
    if target != n and alpha > 0:
        raise OracleError("elastic redeployment requires failure_prob = 0")

    objective_kind = ("query_only" if cs.update_cost_bound is not None
                      else "expected_total")
    subsets = _subsets_lex(w.index_ids())

    # Which original replicas stay live, how many replicas the design has,
    # and what each live slot's current config / deploy surcharge is.
    scenarios: list[tuple[tuple[int, ...], int]] = []
    if target < n:
        for live in itertools.combinations(range(1, n + 1), target):
            scenarios.append((live, target))
    elif target > n:
        scenarios.append((tuple(range(1, n + 1)), target))
    else:
        scenarios.append((tuple(range(1, n + 1)), n))

    inter_constrained = (
        (cs.load_skew is not None and cs.load_skew.mode == "exact")
        or cs.failure_load_skew is not None
    )
    divisor = failure_routing_cardinality(m, target, mode)

    best: tuple[float, DivergentDesign, tuple[int, ...]] | None = None
    explored = 0

    for live, n_live in scenarios:
        dropped = tuple(r for r in range(1, n + 1) if r not in live)
        # Per live slot: feasible configs under the intra-replica filters.
        slot_choices: list[list[frozenset[str]]] = []
        for slot in range(n_live):
            if mat is not None:
                if slot < len(live):
                    current = mat.current.config(live[slot])
                    deploy = 0.0
                else:  # expansion slot: nothing installed yet
                    current = frozenset()
                    deploy = mat.new_replica_deploy_cost
            else:
                current, deploy = None, 0.0
            slot_choices.append(
                [c for c in subsets if _config_feasible(req, c, current, deploy)]
            )
        space = 1
        for choices in slot_choices:
            space *= len(choices)
        if space == 0:
            continue
        if space > caps.max_designs:
            raise OracleCapError("config space exceeds max_designs")

        for assignment in itertools.product(*slot_choices):
            explored += 1
            configs = tuple(assignment)
            if inter_constrained:
                routing_iter: Iterable[dict[str, tuple[int, ...]]] = (
                    _iter_normal_routings(n_live, m, w))
            else:
                routing_iter = [_greedy_normal_routing(configs, w, m)]
            for normal in routing_iter:
                if alpha > 0:
                    if cs.failure_load_skew is not None:
                        failure_iter: Iterable = _iter_failure_routings(
                            n_live, divisor, w)
                    else:
                        failure_iter = [
                            _greedy_failure_routing(configs, w, divisor)]
                else:
                    failure_iter = [None]
                for on_failure in failure_iter:
                    routing = RoutingFunctions.make(normal, on_failure)
                    design = DivergentDesign(configs=configs, routing=routing)
                    if not _design_feasible_inter(req, design, mode):
                        continue
                    if objective_kind == "query_only":
                        cost = _query_portion(design, w, m, alpha, mode)
                    else:
                        cost = costmodel.exp_total_cost(design, w, m, alpha, mode)
                    if best is None or cost < best[0]:
                        best = (cost, design, dropped)

    if best is None:
        raise OracleError("no feasible design under the given constraints")
    cost, design, dropped = best
    return OracleResult(design=design, cost=cost, objective_kind=objective_kind,
                        explored=explored, dropped_replicas=dropped)


def iter_feasible_designs(req: TuningRequest, caps: OracleCaps = OracleCaps()
                          ) -> Iterator[tuple[DivergentDesign, float]]:
    """Yield (design, expected cost) for every feasible config assignment
    with greedy routing; meant for embedding and cross-check fixtures on
    non-elastic instances."""
    w = req.workload
    n = req.replica_count
    m = req.multiplicity
    alpha = req.failure_prob
    mode = req.routing_cardinality_mode
    subsets = _subsets_lex(w.index_ids())
    if len(subsets) ** n > caps.max_designs:
        raise OracleCapError("config space exceeds max_designs")
    divisor = failure_routing_cardinality(m, n, mode)
    for assignment in itertools.product(subsets, repeat=n):
        configs = tuple(assignment)
        if not all(_config_feasible(req, c, None, 0.0) for c in configs):
            continue
        normal = _greedy_normal_routing(configs, w, m)
        on_failure = (_greedy_failure_routing(configs, w, divisor)
                      if alpha > 0 else None)
        design = DivergentDesign(
            configs=configs, routing=RoutingFunctions.make(normal, on_failure))
        if not _design_feasible_inter(req, design, mode):
            continue
        yield design, costmodel.exp_total_cost(design, w, m, alpha, mode)
