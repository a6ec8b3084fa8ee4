"""Synthetic workload generators.

tiny_instance() yields randomized instances small enough for the exhaustive
checker; the named builders construct specific regimes: disjoint index
affinity where divergence pays, failure-sensitive workloads, update-heavy
workloads for maintenance bounds, drifting statement streams for the
monitor, and a balanced workload for budget frontier sweeps.
"""
from __future__ import annotations

import random
from typing import Sequence

from .model import (
    CandidateIndex,
    ConstraintSet,
    DivergentDesign,
    FailureLoadSkewConstraint,
    IndexPropertyLimit,
    LoadSkewConstraint,
    MaterializationConstraint,
    QueryStatement,
    RoutingFunctions,
    SlotOption,
    SolverControls,
    Table,
    TemplatePlan,
    TuningRequest,
    UpdateCostBound,
    UpdateStatement,
    Workload,
    scan_id,
)

TINY_VARIANTS = (
    "plain", "budget", "multi", "failures", "limits", "skew_exact",
    "materialization", "shrink", "expand", "update_bound", "failure_skew",
)


def _simple_query(qid: str, table: str, weight: float, scan_cost: float,
                  index_costs: dict[str, float], internal: float = 0.0,
                  unusable: Sequence[str] = ()) -> QueryStatement:
    opts = [SlotOption(access=scan_id(table), cost=scan_cost, usable=True)]
    for a, c in sorted(index_costs.items()):
        opts.append(SlotOption(access=a, cost=c, usable=a not in unusable))
    tpl = TemplatePlan.make(id=f"{qid}.p", internal_cost=internal,
                            slots={table: opts})
    return QueryStatement(id=qid, weight=weight, templates=(tpl,))


def _simple_update(uid: str, table: str, weight: float, shell_cost: float,
                   ucosts: dict[str, float], base_cost: float = 0.0
                   ) -> UpdateStatement:
    shell = TemplatePlan.make(
        id=f"{uid}.p", internal_cost=0.0,
        slots={table: [SlotOption(access=scan_id(table), cost=shell_cost,
                                  usable=True)]})
    return UpdateStatement.make(
        id=uid, weight=weight,
        query_shell=QueryStatement(id=f"{uid}.q", weight=weight,
                                   templates=(shell,)),
        index_update_costs=ucosts, base_cost=base_cost)


def tiny_workload(seed: int, n_indexes: int = 3, n_queries: int = 3,
                  n_updates: int = 1, integer_costs: bool = False
                  ) -> Workload:
    """Randomized micro-workload sized for exhaustive enumeration."""
    rng = random.Random(seed)
    tables = (Table(id="T1", row_count=1000), Table(id="T2", row_count=400))
    idxs = []
    for i in range(n_indexes):
        t = tables[rng.randrange(len(tables))]
        idxs.append(CandidateIndex(
            id=f"I{i}", table_id=t.id, size=rng.randint(4, 20),
            create_cost=rng.randint(1, 9), drop_cost=rng.randint(1, 4)))
    queries = []
    for qn in range(n_queries):
        t = tables[rng.randrange(len(tables))]
        index_costs = {}
        unusable = []
        for ix in idxs:
            if ix.table_id == t.id and rng.random() < 0.8:
                index_costs[ix.id] = float(rng.randint(2, 30))
                if rng.random() < 0.1:
                    unusable.append(ix.id)
        weight = float(rng.randint(1, 5)) if integer_costs else (
            rng.randint(1, 5) * 0.5)
        queries.append(_simple_query(
            f"Q{qn}", t.id, weight, float(rng.randint(35, 80)),
            index_costs, internal=float(rng.randint(0, 5)),
            unusable=unusable))
    updates = []
    for un in range(n_updates):
        ucosts = {ix.id: float(rng.randint(1, 6)) for ix in idxs
                  if rng.random() < 0.9}
        updates.append(_simple_update(
            f"U{un}", "T1", float(rng.randint(1, 3)),
            float(rng.randint(4, 12)), ucosts,
            base_cost=float(rng.randint(0, 4))))
    return Workload(tables=tables, indexes=tuple(idxs),
                    queries=tuple(queries), updates=tuple(updates))


def tiny_instance(seed: int, variant: str = "plain") -> TuningRequest:
    """One solvable-and-enumerable request; the variant picks the active
    constraint family. Sizes respect the exhaustive checker's caps."""
    if variant not in TINY_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    rng = random.Random(seed * 977 + 13)
    small = variant in ("failure_skew",)
    w = tiny_workload(seed,
                      n_indexes=2 if small else 3,
                      n_queries=2 if small else 3,
                      n_updates=1)
    controls = SolverControls(gap_tolerance=0.0)
    n, m, alpha = 2, 1, 0.0
    cs = ConstraintSet()
    if variant == "plain":
        n = rng.choice((1, 2, 3))
    elif variant == "budget":
        cs = ConstraintSet(space_budget=float(rng.randint(12, 30)))
        n = rng.choice((2, 3))
    elif variant == "multi":
        n, m = 3, 2
        cs = ConstraintSet(space_budget=25.0)
    elif variant == "failures":
        n, alpha = rng.choice((2, 3)), rng.choice((0.1, 0.25, 0.4))
        cs = ConstraintSet(space_budget=25.0)
    elif variant == "limits":
        n = 2
        cs = ConstraintSet(space_budget=30.0, index_limits=(
            IndexPropertyLimit(name="grouped",
                               index_ids=frozenset(("I0", "I1")),
                               max_per_replica=1),))
    elif variant == "skew_exact":
        n = 2
        cs = ConstraintSet(space_budget=25.0,
                           load_skew=LoadSkewConstraint(
                               tau=rng.choice((0.5, 1.0, 2.0)), mode="exact"))
    elif variant == "materialization":
        n = rng.choice((2, 3))
        cur = DivergentDesign(
            configs=tuple(frozenset(["I0"]) if r == 0 else frozenset()
                          for r in range(n)),
            routing=RoutingFunctions.make({}, None))
        cs = ConstraintSet(space_budget=25.0,
                           materialization=MaterializationConstraint(
                               budget=float(rng.randint(6, 14)), current=cur))
    elif variant == "shrink":
        n = 3
        cur = DivergentDesign(
            configs=(frozenset(["I0"]), frozenset(), frozenset(["I1"])),
            routing=RoutingFunctions.make({}, None))
        cs = ConstraintSet(space_budget=25.0,
                           materialization=MaterializationConstraint(
                               budget=float(rng.randint(6, 14)), current=cur,
                               target_replica_count=2))
    elif variant == "expand":
        n = 2
        cur = DivergentDesign(
            configs=(frozenset(["I0"]), frozenset()),
            routing=RoutingFunctions.make({}, None))
        cs = ConstraintSet(space_budget=25.0,
                           materialization=MaterializationConstraint(
                               budget=float(rng.randint(10, 18)), current=cur,
                               target_replica_count=3,
                               new_replica_deploy_cost=2.0))
    elif variant == "update_bound":
        n = 2
        cs = ConstraintSet(space_budget=25.0,
                           update_cost_bound=UpdateCostBound(
                               fraction=0.9,
                               reference_cost=float(rng.randint(40, 90))))
    elif variant == "failure_skew":
        n, alpha = 3, 0.2
        cs = ConstraintSet(space_budget=25.0,
                           failure_load_skew=FailureLoadSkewConstraint(tau=2.0))
    return TuningRequest(workload=w, replica_count=n, multiplicity=m,
                         failure_prob=alpha, constraints=cs,
                         solver_controls=controls)


# ---------------------------------------------------------------------------
# Named regimes


def disjoint_affinity_workload() -> Workload:
    """Two query groups, each fast only under its own index pair; one
    replica's budget fits a single pair, so one shared configuration must
    leave a group on scans."""
    idxs = tuple(CandidateIndex(id=f"I{g}{k}", table_id="T1", size=10,
                                create_cost=2, drop_cost=1)
                 for g in ("A", "B") for k in (1, 2))
    queries = []
    for g in ("A", "B"):
        for k in (1, 2):
            queries.append(_simple_query(
                f"Q{g}{k}", "T1", 1.0, 55.0, {f"I{g}{k}": 4.0}))
    upd = _simple_update("U0", "T1", 1.0, 1.0,
                         {ix.id: 1.0 for ix in idxs})
    return Workload(tables=(Table(id="T1", row_count=2000),),
                    indexes=idxs, queries=tuple(queries), updates=(upd,))


def failure_sensitive_workload() -> Workload:
    """Each query depends on one index; space allows two indexes per
    replica, so a failure-aware design can keep every index on two
    replicas while the cheapest normal-operation design holds only one
    copy of each."""
    idxs = tuple(CandidateIndex(id=f"I{k}", table_id="T1", size=10,
                                create_cost=2, drop_cost=1)
                 for k in (1, 2, 3))
    queries = tuple(_simple_query(f"Q{k}", "T1", 1.0, 50.0,
                                  {f"I{k}": 2.0})
                    for k in (1, 2, 3))
    upd = _simple_update("U0", "T1", 1.0, 1.0,
                         {ix.id: 0.5 for ix in idxs})
    return Workload(tables=(Table(id="T1", row_count=1500),),
                    indexes=idxs, queries=queries, updates=(upd,))


def update_heavy_workload() -> Workload:
    """Six queries, each with a dedicated index; maintenance is expensive
    enough that a cap on update cost forces a sparse, spread-out design."""
    idxs = tuple(CandidateIndex(id=f"I{k}", table_id="T1", size=10,
                                create_cost=2, drop_cost=1)
                 for k in range(1, 7))
    queries = tuple(_simple_query(f"Q{k}", "T1", 1.0, 62.0,
                                  {f"I{k}": 12.0}, internal=2.0)
                    for k in range(1, 7))
    upd = _simple_update("U0", "T1", 1.0, 1.0,
                         {ix.id: 5.0 for ix in idxs})
    return Workload(tables=(Table(id="T1", row_count=5000),),
                    indexes=idxs, queries=queries, updates=(upd,))


def update_tradeoff_workload() -> Workload:
    """Two core indexes whose query benefit towers over their maintenance
    cost, plus four marginal indexes that fit per-replica space only if
    the cores are not all colocated; a uniform design under a 20-unit
    budget holds just the cores on every replica and pays their upkeep
    three times, so a maintenance cap at a fraction of that reference
    still leaves room to spread single copies around."""
    core = tuple(CandidateIndex(id=f"C{k}", table_id="T1", size=10,
                                create_cost=2, drop_cost=1)
                 for k in (1, 2))
    marginal = tuple(CandidateIndex(id=f"M{k}", table_id="T1", size=5,
                                    create_cost=1, drop_cost=1)
                     for k in (1, 2, 3, 4))
    queries = [_simple_query(f"QC{k}", "T1", 1.0, 110.0, {f"C{k}": 10.0})
               for k in (1, 2)]
    queries += [_simple_query(f"QM{k}", "T1", 1.0, 16.0, {f"M{k}": 10.0})
                for k in (1, 2, 3, 4)]
    ucosts = {ix.id: 20.0 for ix in core}
    ucosts.update({ix.id: 4.0 for ix in marginal})
    upd = _simple_update("U0", "T1", 1.0, 0.0, ucosts)
    return Workload(tables=(Table(id="T1", row_count=4000),),
                    indexes=core + marginal, queries=tuple(queries),
                    updates=(upd,))


def balanced_workload() -> Workload:
    """Eight light queries split across two indexes; loads divide finely,
    which keeps budgeted balance caps attainable."""
    idxs = (CandidateIndex(id="I0", table_id="T1", size=5, create_cost=2,
                           drop_cost=1),
            CandidateIndex(id="I1", table_id="T1", size=5, create_cost=2,
                           drop_cost=1),
            CandidateIndex(id="I2", table_id="T1", size=5, create_cost=3,
                           drop_cost=1))
    queries = []
    for qn in range(8):
        index_costs = {"I0": 4.0} if qn % 2 == 0 else {"I1": 5.0}
        if qn % 4 == 3:
            index_costs["I2"] = 3.0
        queries.append(_simple_query(f"Q{qn}", "T1", 1.0,
                                     20.0 + qn, index_costs, internal=1.0))
    upd = _simple_update("U0", "T1", 1.0, 2.0,
                         {"I0": 1.0, "I1": 1.0, "I2": 2.0}, base_cost=1.0)
    return Workload(tables=(Table(id="T1", row_count=3000),),
                    indexes=idxs, queries=tuple(queries), updates=(upd,))


def monitor_catalog() -> tuple[tuple[Table, ...], tuple[CandidateIndex, ...]]:
    tables = (Table(id="T1", row_count=2500),)
    idxs = tuple(CandidateIndex(id=f"I{p}{k}", table_id="T1", size=8,
                                create_cost=1, drop_cost=1)
                 for p in ("A", "B") for k in range(3))
    return tables, idxs


def phase_statement(pool: str, k: int, weight: float = 1.0) -> QueryStatement:
    return _simple_query(f"Q{pool}{k}", "T1", weight, 40.0,
                         {f"I{pool}{k}": 3.0})


def drift_stream(seed: int = 0, length: int = 600,
                 shifts: tuple[int, int] = (200, 400)) -> list:
    """Three-phase statement stream: pool A, then pool B, then pool A
    again; every tenth statement is an update touching both pools."""
    rng = random.Random(seed)
    tables, idxs = monitor_catalog()
    ucosts = {ix.id: 0.5 for ix in idxs}
    stream = []
    for i in range(length):
        pool = "A" if i < shifts[0] or i >= shifts[1] else "B"
        if i % 10 == 9:
            stream.append(_simple_update(f"U{pool}", "T1", 1.0, 2.0, ucosts))
        else:
            stream.append(phase_statement(pool, rng.randrange(3)))
    return stream


def embedding_instance(seed: int) -> TuningRequest:
    """Integer costs and dyadic weights so embedded assignments reproduce
    design costs without rounding."""
    rng = random.Random(seed * 131 + 7)
    tables = (Table(id="T1", row_count=800),)
    idxs = tuple(CandidateIndex(id=f"I{i}", table_id="T1",
                                size=rng.randint(4, 12),
                                create_cost=rng.randint(1, 5),
                                drop_cost=rng.randint(1, 3))
                 for i in range(rng.choice((2, 3))))
    queries = []
    for qn in range(rng.choice((2, 3))):
        index_costs = {ix.id: float(rng.randint(2, 20)) for ix in idxs
                       if rng.random() < 0.85}
        weight = rng.choice((0.25, 0.5, 1.0, 2.0))
        queries.append(_simple_query(f"Q{qn}", "T1", weight,
                                     float(rng.randint(30, 60)), index_costs,
                                     internal=float(rng.randint(0, 4))))
    upd = _simple_update("U0", "T1", rng.choice((0.5, 1.0)),
                         float(rng.randint(2, 8)),
                         {ix.id: float(rng.randint(1, 5)) for ix in idxs},
                         base_cost=float(rng.randint(0, 3)))
    w = Workload(tables=tables, indexes=idxs, queries=tuple(queries),
                 updates=(upd,))
    n = 2
    m = rng.choice((1, 2))
    alpha = rng.choice((0.0, 0.5))
    if alpha > 0 and m > 1:
        m = 1
    return TuningRequest(workload=w, replica_count=n, multiplicity=m,
                         failure_prob=alpha,
                         constraints=ConstraintSet(space_budget=30.0),
                         solver_controls=SolverControls(gap_tolerance=0.0))
