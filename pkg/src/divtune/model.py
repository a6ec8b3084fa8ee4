"""Domain types for divergent index-design tuning.

A tuning instance couples a workload (queries, updates, and the candidate
index universe they may touch) with a replicated deployment: N replicas, a
routing multiplicity m, a failure probability alpha, and a set of optional
constraints. Designs pair per-replica index configurations with routing
functions for normal operation and for each single-replica failure scenario.

All types are frozen dataclasses with JSON round-trip helpers; dict payloads
produced by ``to_dict`` feed the CLI/service external interfaces unchanged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional, Sequence

SCAN_PREFIX = "SCAN_"


def scan_id(table_id: str) -> str:
    """Sentinel access-method id for a full scan of ``table_id``."""
    return SCAN_PREFIX + table_id


def is_scan(access_id: str) -> bool:
    return access_id.startswith(SCAN_PREFIX)


class ModelError(ValueError):
    """Raised when a payload cannot be parsed into a valid domain object."""


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class Table:
    id: str
    row_count: float = 0.0

    def to_dict(self) -> dict:
        return {"id": self.id, "row_count": self.row_count}

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "Table":
        return Table(id=str(d["id"]), row_count=float(d.get("row_count", 0.0)))


@dataclass(frozen=True)
class CandidateIndex:
    """A candidate secondary index: lives on one table, costs space to hold,
    and carries one-off create/drop costs used by materialization budgets."""

    id: str
    table_id: str
    size: float
    create_cost: float = 0.0
    drop_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "table_id": self.table_id,
            "size": self.size,
            "create_cost": self.create_cost,
            "drop_cost": self.drop_cost,
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "CandidateIndex":
        return CandidateIndex(
            id=str(d["id"]),
            table_id=str(d["table_id"]),
            size=float(d.get("size", 0.0)),
            create_cost=float(d.get("create_cost", 0.0)),
            drop_cost=float(d.get("drop_cost", 0.0)),
        )


@dataclass(frozen=True)
class SlotOption:
    """One access method a template plan may plug into a table slot.

    ``access`` is a candidate-index id or the table's scan sentinel. An
    unusable option (sort-order mismatch with the plan shape) never enters a
    cost minimum; it is carried so payloads stay faithful to their source.
    """

    access: str
    cost: float
    usable: bool = True

    def to_dict(self) -> dict:
        return {"access": self.access, "cost": self.cost, "usable": self.usable}

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "SlotOption":
        return SlotOption(
            access=str(d["access"]),
            cost=float(d["cost"]),
            usable=bool(d.get("usable", True)),
        )


@dataclass(frozen=True)
class TemplatePlan:
    """A plan shape with a fixed internal cost plus one open slot per table."""

    id: str
    internal_cost: float
    # table_id -> options, stored as a tuple of (table_id, options) pairs
    # sorted by table_id so instances hash/compare deterministically.
    slots: tuple[tuple[str, tuple[SlotOption, ...]], ...]

    @staticmethod
    def make(id: str, internal_cost: float,
             slots: Mapping[str, Sequence[SlotOption]]) -> "TemplatePlan":
        packed = tuple(sorted((t, tuple(opts)) for t, opts in slots.items()))
        return TemplatePlan(id=id, internal_cost=internal_cost, slots=packed)

    def slot_map(self) -> dict[str, tuple[SlotOption, ...]]:
        return dict(self.slots)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "internal_cost": self.internal_cost,
            "slots": {t: [o.to_dict() for o in opts] for t, opts in self.slots},
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "TemplatePlan":
        slots = {
            str(t): [SlotOption.from_dict(o) for o in opts]
            for t, opts in dict(d.get("slots", {})).items()
        }
        return TemplatePlan.make(
            id=str(d["id"]),
            internal_cost=float(d["internal_cost"]),
            slots=slots,
        )


@dataclass(frozen=True)
class QueryStatement:
    id: str
    weight: float
    templates: tuple[TemplatePlan, ...]

    @property
    def referenced_tables(self) -> frozenset[str]:
        tables: set[str] = set()
        for tp in self.templates:
            tables.update(t for t, _ in tp.slots)
        return frozenset(tables)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "weight": self.weight,
            "templates": [t.to_dict() for t in self.templates],
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "QueryStatement":
        return QueryStatement(
            id=str(d["id"]),
            weight=float(d.get("weight", 1.0)),
            templates=tuple(TemplatePlan.from_dict(t) for t in d.get("templates", ())),
        )


@dataclass(frozen=True)
class UpdateStatement:
    """An update: a selection shell finding the affected rows, per-index
    maintenance costs, and a fixed base cost paid regardless of design."""

    id: str
    weight: float
    query_shell: QueryStatement
    index_update_costs: tuple[tuple[str, float], ...]
    base_cost: float = 0.0

    @staticmethod
    def make(id: str, weight: float, query_shell: QueryStatement,
             index_update_costs: Mapping[str, float],
             base_cost: float = 0.0) -> "UpdateStatement":
        return UpdateStatement(
            id=id,
            weight=weight,
            query_shell=query_shell,
            index_update_costs=tuple(sorted(index_update_costs.items())),
            base_cost=base_cost,
        )

    def ucost(self, index_id: str) -> float:
        for a, c in self.index_update_costs:
            if a == index_id:
                return c
        return 0.0

    def ucost_map(self) -> dict[str, float]:
        return dict(self.index_update_costs)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "weight": self.weight,
            "base_cost": self.base_cost,
            "index_update_costs": dict(self.index_update_costs),
            "query_shell": self.query_shell.to_dict(),
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "UpdateStatement":
        return UpdateStatement.make(
            id=str(d["id"]),
            weight=float(d.get("weight", 1.0)),
            query_shell=QueryStatement.from_dict(d["query_shell"]),
            index_update_costs={
                str(k): float(v)
                for k, v in dict(d.get("index_update_costs", {})).items()
            },
            base_cost=float(d.get("base_cost", 0.0)),
        )


@dataclass(frozen=True)
class Workload:
    tables: tuple[Table, ...]
    indexes: tuple[CandidateIndex, ...]
    queries: tuple[QueryStatement, ...]
    updates: tuple[UpdateStatement, ...] = ()

    def table_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.tables)

    def index_ids(self) -> tuple[str, ...]:
        """Candidate universe in sorted order; the canonical column order."""
        return tuple(sorted(i.id for i in self.indexes))

    def index_by_id(self, index_id: str) -> CandidateIndex:
        for i in self.indexes:
            if i.id == index_id:
                return i
        raise KeyError(index_id)

    def statements(self) -> tuple:
        return self.queries + self.updates

    def query_by_id(self, qid: str) -> QueryStatement:
        for q in self.queries:
            if q.id == qid:
                return q
        raise KeyError(qid)

    def to_dict(self) -> dict:
        return {
            "tables": [t.to_dict() for t in self.tables],
            "indexes": [i.to_dict() for i in self.indexes],
            "queries": [q.to_dict() for q in self.queries],
            "updates": [u.to_dict() for u in self.updates],
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "Workload":
        try:
            return Workload(
                tables=tuple(Table.from_dict(t) for t in d.get("tables", ())),
                indexes=tuple(CandidateIndex.from_dict(i) for i in d.get("indexes", ())),
                queries=tuple(QueryStatement.from_dict(q) for q in d.get("queries", ())),
                updates=tuple(UpdateStatement.from_dict(u) for u in d.get("updates", ())),
            )
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed workload payload: {exc}") from exc


@dataclass(frozen=True)
class RoutingFunctions:
    """h_0 plus one h_j per failure scenario, all keyed by query id."""

    normal: tuple[tuple[str, tuple[int, ...]], ...]
    on_failure: tuple[tuple[int, tuple[tuple[str, tuple[int, ...]], ...]], ...] = ()

    @staticmethod
    def make(normal: Mapping[str, Iterable[int]],
             on_failure: Mapping[int, Mapping[str, Iterable[int]]] | None = None
             ) -> "RoutingFunctions":
        def pack(m: Mapping[str, Iterable[int]]):
            return tuple(sorted((q, tuple(sorted(rs))) for q, rs in m.items()))

        fail = on_failure or {}
        return RoutingFunctions(
            normal=pack(normal),
            on_failure=tuple(sorted((j, pack(h)) for j, h in fail.items())),
        )

    def normal_map(self) -> dict[str, tuple[int, ...]]:
        return dict(self.normal)

    def failure_map(self) -> dict[int, dict[str, tuple[int, ...]]]:
        return {j: dict(h) for j, h in self.on_failure}

    def replicas_for(self, query_id: str) -> tuple[int, ...]:
        for q, rs in self.normal:
            if q == query_id:
                return rs
        raise KeyError(f"no routing entry for query {query_id!r}")

    def failure_replicas_for(self, query_id: str, failed: int) -> tuple[int, ...]:
        for j, h in self.on_failure:
            if j == failed:
                for q, rs in h:
                    if q == query_id:
                        return rs
                raise KeyError(f"no failure routing entry for query {query_id!r}")
        raise KeyError(f"no routing for failure scenario {failed}")

    def to_dict(self) -> dict:
        return {
            "normal": {q: list(rs) for q, rs in self.normal},
            "on_failure": {
                str(j): {q: list(rs) for q, rs in h} for j, h in self.on_failure
            },
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "RoutingFunctions":
        return RoutingFunctions.make(
            normal={str(q): [int(r) for r in rs]
                    for q, rs in dict(d.get("normal", {})).items()},
            on_failure={
                int(j): {str(q): [int(r) for r in rs] for q, rs in dict(h).items()}
                for j, h in dict(d.get("on_failure", {})).items()
            },
        )


@dataclass(frozen=True)
class DivergentDesign:
    """Per-replica index configurations plus the routing functions.

    Replica ids are 1-based; ``configs[r - 1]`` is replica r's index set.
    """

    configs: tuple[frozenset[str], ...]
    routing: RoutingFunctions

    @staticmethod
    def make(configs: Sequence[Iterable[str]],
             routing: RoutingFunctions) -> "DivergentDesign":
        return DivergentDesign(
            configs=tuple(frozenset(c) for c in configs),
            routing=routing,
        )

    @property
    def replica_count(self) -> int:
        return len(self.configs)

    def config(self, replica: int) -> frozenset[str]:
        return self.configs[replica - 1]

    def to_dict(self) -> dict:
        return {
            "replica_count": self.replica_count,
            "configs": [sorted(c) for c in self.configs],
            "routing": self.routing.to_dict(),
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "DivergentDesign":
        try:
            return DivergentDesign.make(
                configs=[list(c) for c in d["configs"]],
                routing=RoutingFunctions.from_dict(d.get("routing", {})),
            )
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed design payload: {exc}") from exc


@dataclass(frozen=True)
class LoadSkewConstraint:
    tau: float
    mode: str = "exact"  # "exact" | "greedy"

    def to_dict(self) -> dict:
        return {"tau": self.tau, "mode": self.mode}


@dataclass(frozen=True)
class FailureLoadSkewConstraint:
    tau: float

    def to_dict(self) -> dict:
        return {"tau": self.tau}


@dataclass(frozen=True)
class MaterializationConstraint:
    """Per-replica budget on transition cost from ``current``.

    ``target_replica_count`` different from the request's replica count asks
    for an elastic redeployment: fewer live replicas (shrink) or extra ones
    (expand, each paying ``new_replica_deploy_cost`` against the budget).
    """

    budget: float
    current: DivergentDesign
    target_replica_count: Optional[int] = None
    new_replica_deploy_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "current": self.current.to_dict(),
            "target_replica_count": self.target_replica_count,
            "new_replica_deploy_cost": self.new_replica_deploy_cost,
        }


@dataclass(frozen=True)
class UpdateCostBound:
    """Cap update cost at ``fraction * reference_cost`` while minimizing
    query cost only."""

    fraction: float
    reference_cost: float

    def to_dict(self) -> dict:
        return {"fraction": self.fraction, "reference_cost": self.reference_cost}


@dataclass(frozen=True)
class IndexPropertyLimit:
    name: str
    index_ids: frozenset[str]
    max_per_replica: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "index_ids": sorted(self.index_ids),
            "max_per_replica": self.max_per_replica,
        }


@dataclass(frozen=True)
class ConstraintSet:
    space_budget: Optional[float] = None
    load_skew: Optional[LoadSkewConstraint] = None
    failure_load_skew: Optional[FailureLoadSkewConstraint] = None
    materialization: Optional[MaterializationConstraint] = None
    update_cost_bound: Optional[UpdateCostBound] = None
    index_limits: tuple[IndexPropertyLimit, ...] = ()

    def to_dict(self) -> dict:
        return {
            "space_budget": self.space_budget,
            "load_skew": self.load_skew.to_dict() if self.load_skew else None,
            "failure_load_skew": (
                self.failure_load_skew.to_dict() if self.failure_load_skew else None
            ),
            "materialization": (
                self.materialization.to_dict() if self.materialization else None
            ),
            "update_cost_bound": (
                self.update_cost_bound.to_dict() if self.update_cost_bound else None
            ),
            "index_limits": [l.to_dict() for l in self.index_limits],
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "ConstraintSet":
        ls = d.get("load_skew")
        fls = d.get("failure_load_skew")
        mat = d.get("materialization")
        ub = d.get("update_cost_bound")
        return ConstraintSet(
            space_budget=(None if d.get("space_budget") is None
                          else float(d["space_budget"])),
            load_skew=(None if ls is None else LoadSkewConstraint(
                tau=float(ls["tau"]), mode=str(ls.get("mode", "exact")))),
            failure_load_skew=(None if fls is None
                               else FailureLoadSkewConstraint(tau=float(fls["tau"]))),
            materialization=(None if mat is None else MaterializationConstraint(
                budget=float(mat["budget"]),
                current=DivergentDesign.from_dict(mat["current"]),
                target_replica_count=(None if mat.get("target_replica_count") is None
                                      else int(mat["target_replica_count"])),
                new_replica_deploy_cost=float(mat.get("new_replica_deploy_cost", 0.0)),
            )),
            update_cost_bound=(None if ub is None else UpdateCostBound(
                fraction=float(ub["fraction"]),
                reference_cost=float(ub["reference_cost"]),
            )),
            index_limits=tuple(
                IndexPropertyLimit(
                    name=str(l["name"]),
                    index_ids=frozenset(str(i) for i in l["index_ids"]),
                    max_per_replica=int(l["max_per_replica"]),
                )
                for l in d.get("index_limits", ())
            ),
        )


@dataclass(frozen=True)
class SolverControls:
    gap_tolerance: float = 0.05
    time_limit: Optional[float] = None

    def to_dict(self) -> dict:
        return {"gap_tolerance": self.gap_tolerance, "time_limit": self.time_limit}

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "SolverControls":
        return SolverControls(
            gap_tolerance=float(d.get("gap_tolerance", 0.05)),
            time_limit=(None if d.get("time_limit") is None
                        else float(d["time_limit"])),
        )


ROUTING_CARDINALITY_MODES = ("min", "paper_literal")


@dataclass(frozen=True)
class TuningRequest:
    workload: Workload
    replica_count: int
    multiplicity: int
    failure_prob: float = 0.0
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    solver_controls: SolverControls = field(default_factory=SolverControls)
    # How many replicas serve a query while one replica is down:
    # "min" uses min(m, N-1); "paper_literal" uses max(m, N-1).
    routing_cardinality_mode: str = "min"

    def to_dict(self) -> dict:
        return {
            "workload": self.workload.to_dict(),
            "replica_count": self.replica_count,
            "multiplicity": self.multiplicity,
            "failure_prob": self.failure_prob,
            "constraints": self.constraints.to_dict(),
            "solver_controls": self.solver_controls.to_dict(),
            "routing_cardinality_mode": self.routing_cardinality_mode,
        }

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> "TuningRequest":
        try:
            return TuningRequest(
                workload=Workload.from_dict(d["workload"]),
                replica_count=int(d["replica_count"]),
                multiplicity=int(d["multiplicity"]),
                failure_prob=float(d.get("failure_prob", 0.0)),
                constraints=ConstraintSet.from_dict(d.get("constraints", {})),
                solver_controls=SolverControls.from_dict(d.get("solver_controls", {})),
                routing_cardinality_mode=str(d.get("routing_cardinality_mode", "min")),
            )
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed tuning request: {exc}") from exc


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    query_cost: float
    update_cost: float
    per_replica_load: tuple[float, ...]
    expected_total: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "query_cost": self.query_cost,
            "update_cost": self.update_cost,
            "per_replica_load": list(self.per_replica_load),
            "expected_total": self.expected_total,
        }


# ---------------------------------------------------------------------------
# Validation


def _validate_query(q: QueryStatement, prefix: str, table_ids: set[str],
                    index_table: dict[str, str], out: list[Violation]) -> None:
    if q.weight <= 0:
        out.append(Violation(f"{prefix}.weight", "statement weight must be > 0"))
    if not q.templates:
        out.append(Violation(f"{prefix}.templates", "at least one template plan required"))
        return
    seen_tpl: set[str] = set()
    referenced = q.referenced_tables
    fully_usable = False
    for tp in q.templates:
        tprefix = f"{prefix}.templates[{tp.id}]"
        if tp.id in seen_tpl:
            out.append(Violation(tprefix, "duplicate template id"))
        seen_tpl.add(tp.id)
        if tp.internal_cost < 0:
            out.append(Violation(f"{tprefix}.internal_cost", "must be >= 0"))
        slot_tables = {t for t, _ in tp.slots}
        if slot_tables != referenced:
            out.append(Violation(
                f"{tprefix}.slots",
                "every template must carry exactly one slot per referenced table"))
        scans_usable = bool(tp.slots)
        for table, opts in tp.slots:
            sprefix = f"{tprefix}.slots[{table}]"
            if table not in table_ids:
                out.append(Violation(sprefix, f"unknown table {table!r}"))
            has_scan = False
            seen_access: set[str] = set()
            scan_ok = False
            for opt in opts:
                oprefix = f"{sprefix}[{opt.access}]"
                if opt.access in seen_access:
                    out.append(Violation(oprefix, "duplicate access option"))
                seen_access.add(opt.access)
                if opt.cost < 0:
                    out.append(Violation(f"{oprefix}.cost", "must be >= 0"))
                if is_scan(opt.access):
                    has_scan = True
                    if opt.access != scan_id(table):
                        out.append(Violation(
                            oprefix, f"scan sentinel must be {scan_id(table)!r}"))
                    if opt.usable:
                        scan_ok = True
                else:
                    owner = index_table.get(opt.access)
                    if owner is None:
                        out.append(Violation(oprefix, "unknown candidate index"))
                    elif owner != table:
                        out.append(Violation(
                            oprefix, f"index {opt.access!r} lives on table {owner!r}"))
            if not has_scan:
                out.append(Violation(sprefix, "every slot must list its scan option"))
            scans_usable = scans_usable and scan_ok
        if scans_usable and slot_tables == referenced:
            fully_usable = True
    if not fully_usable:
        out.append(Violation(
            f"{prefix}.templates",
            "at least one template must be usable with scans alone"))


def validate_request(req: TuningRequest) -> list[Violation]:
    """Collect all contract violations; an empty list means the request is
    well formed enough to build and solve."""
    out: list[Violation] = []
    w = req.workload
    n = req.replica_count
    m = req.multiplicity

    if n < 1:
        out.append(Violation("replica_count", "must be >= 1"))
    if not (1 <= m <= max(n, 1)):
        out.append(Violation("multiplicity", "must satisfy 1 <= m <= replica_count"))
    if not (0.0 <= req.failure_prob <= 1.0):
        out.append(Violation("failure_prob", "must lie in [0, 1]"))
    if req.failure_prob >= 1.0 and n == 1:
        out.append(Violation(
            "failure_prob", "alpha = 1 with a single replica leaves no survivor"))
    if req.routing_cardinality_mode not in ROUTING_CARDINALITY_MODES:
        out.append(Violation(
            "routing_cardinality_mode",
            f"must be one of {ROUTING_CARDINALITY_MODES}"))

    table_ids: set[str] = set()
    for t in w.tables:
        if t.id in table_ids:
            out.append(Violation(f"tables[{t.id}]", "duplicate table id"))
        table_ids.add(t.id)
        if t.row_count < 0:
            out.append(Violation(f"tables[{t.id}].row_count", "must be >= 0"))

    index_table: dict[str, str] = {}
    for i in w.indexes:
        if i.id in index_table:
            out.append(Violation(f"indexes[{i.id}]", "duplicate index id"))
        if is_scan(i.id):
            out.append(Violation(f"indexes[{i.id}]", "index id collides with scan sentinel"))
        index_table[i.id] = i.table_id
        if i.table_id not in table_ids:
            out.append(Violation(f"indexes[{i.id}].table_id", f"unknown table {i.table_id!r}"))
        if i.size < 0:
            out.append(Violation(f"indexes[{i.id}].size", "must be >= 0"))
        if i.create_cost < 0 or i.drop_cost < 0:
            out.append(Violation(f"indexes[{i.id}]", "create/drop costs must be >= 0"))

    stmt_ids: set[str] = set()
    for q in w.queries:
        if q.id in stmt_ids:
            out.append(Violation(f"queries[{q.id}]", "duplicate statement id"))
        stmt_ids.add(q.id)
        _validate_query(q, f"queries[{q.id}]", table_ids, index_table, out)
    for u in w.updates:
        uprefix = f"updates[{u.id}]"
        if u.id in stmt_ids:
            out.append(Violation(uprefix, "duplicate statement id"))
        stmt_ids.add(u.id)
        if u.query_shell.id in stmt_ids:
            out.append(Violation(f"{uprefix}.query_shell", "duplicate statement id"))
        stmt_ids.add(u.query_shell.id)
        if u.weight <= 0:
            out.append(Violation(f"{uprefix}.weight", "statement weight must be > 0"))
        if u.base_cost < 0:
            out.append(Violation(f"{uprefix}.base_cost", "must be >= 0"))
        for a, c in u.index_update_costs:
            if a not in index_table:
                out.append(Violation(f"{uprefix}.index_update_costs[{a}]",
                                     "unknown candidate index"))
            if c < 0:
                out.append(Violation(f"{uprefix}.index_update_costs[{a}]",
                                     "must be >= 0"))
        _validate_query(u.query_shell, f"{uprefix}.query_shell",
                        table_ids, index_table, out)

    cs = req.constraints
    if cs.space_budget is not None and cs.space_budget < 0:
        out.append(Violation("constraints.space_budget", "must be >= 0"))
    if cs.load_skew is not None:
        if cs.load_skew.tau < 0:
            out.append(Violation("constraints.load_skew.tau", "must be >= 0"))
        if cs.load_skew.mode not in ("exact", "greedy"):
            out.append(Violation("constraints.load_skew.mode",
                                 "must be 'exact' or 'greedy'"))
    if cs.failure_load_skew is not None:
        if cs.failure_load_skew.tau < 0:
            out.append(Violation("constraints.failure_load_skew.tau", "must be >= 0"))
        if req.failure_prob <= 0:
            out.append(Violation("constraints.failure_load_skew",
                                 "requires failure_prob > 0"))
    if cs.materialization is not None:
        mat = cs.materialization
        if mat.budget < 0:
            out.append(Violation("constraints.materialization.budget", "must be >= 0"))
        if mat.new_replica_deploy_cost < 0:
            out.append(Violation("constraints.materialization.new_replica_deploy_cost",
                                 "must be >= 0"))
        if mat.current.replica_count != n:
            out.append(Violation(
                "constraints.materialization.current",
                "current design must cover exactly replica_count replicas"))
        target = mat.target_replica_count
        if target is not None and target != n:
            if target < 1:
                out.append(Violation(
                    "constraints.materialization.target_replica_count", "must be >= 1"))
            if req.failure_prob > 0:
                out.append(Violation(
                    "constraints.materialization.target_replica_count",
                    "elastic redeployment is only supported with failure_prob = 0"))
            if target < n and m > target:
                out.append(Violation(
                    "multiplicity",
                    "multiplicity cannot exceed the shrunken replica count"))
        for a in set().union(*mat.current.configs) if mat.current.configs else set():
            if a not in index_table:
                out.append(Violation(
                    "constraints.materialization.current",
                    f"current design references unknown index {a!r}"))
    if cs.update_cost_bound is not None:
        ub = cs.update_cost_bound
        if ub.fraction < 0:
            out.append(Violation("constraints.update_cost_bound.fraction",
                                 "must be >= 0"))
        if ub.reference_cost < 0:
            out.append(Violation("constraints.update_cost_bound.reference_cost",
                                 "must be >= 0"))
    for limit in cs.index_limits:
        lprefix = f"constraints.index_limits[{limit.name}]"
        if limit.max_per_replica < 0:
            out.append(Violation(f"{lprefix}.max_per_replica", "must be >= 0"))
        for a in limit.index_ids:
            if a not in index_table:
                out.append(Violation(lprefix, f"unknown candidate index {a!r}"))

    sc = req.solver_controls
    if sc.gap_tolerance < 0:
        out.append(Violation("solver_controls.gap_tolerance", "must be >= 0"))
    if sc.time_limit is not None and sc.time_limit <= 0:
        out.append(Violation("solver_controls.time_limit", "must be > 0"))

    return out


def validate_design(design: DivergentDesign, req: TuningRequest) -> list[Violation]:
    """Check a design against a request: replica ids in range, configs drawn
    from the candidate universe, routing cardinalities consistent."""
    out: list[Violation] = []
    n = design.replica_count
    universe = set(req.workload.index_ids())
    for r, cfg in enumerate(design.configs, start=1):
        for a in cfg:
            if a not in universe:
                out.append(Violation(f"configs[{r}]", f"unknown index {a!r}"))
    normal = design.routing.normal_map()
    for q in req.workload.queries:
        rs = normal.get(q.id)
        if rs is None:
            out.append(Violation(f"routing.normal[{q.id}]", "missing entry"))
            continue
        if len(set(rs)) != req.multiplicity:
            out.append(Violation(f"routing.normal[{q.id}]",
                                 f"must name exactly m={req.multiplicity} replicas"))
        if any(not (1 <= r <= n) for r in rs):
            out.append(Violation(f"routing.normal[{q.id}]", "replica id out of range"))
    if req.failure_prob > 0:
        want = failure_routing_cardinality(
            req.multiplicity, n, req.routing_cardinality_mode)
        fmap = design.routing.failure_map()
        for j in range(1, n + 1):
            h = fmap.get(j)
            if h is None:
                out.append(Violation(f"routing.on_failure[{j}]", "missing scenario"))
                continue
            for q in req.workload.queries:
                rs = h.get(q.id)
                if rs is None:
                    out.append(Violation(f"routing.on_failure[{j}][{q.id}]",
                                         "missing entry"))
                    continue
                if j in rs:
                    out.append(Violation(f"routing.on_failure[{j}][{q.id}]",
                                         "routes to the failed replica"))
                if len(set(rs)) != want:
                    out.append(Violation(
                        f"routing.on_failure[{j}][{q.id}]",
                        f"must name exactly {want} surviving replicas"))
    return out


def failure_routing_cardinality(m: int, n: int, mode: str = "min") -> int:
    """Replicas serving a query while one replica is down."""
    if mode not in ROUTING_CARDINALITY_MODES:
        raise ValueError(f"unknown routing cardinality mode {mode!r}")
    if n <= 1:
        return 0
    if mode == "paper_literal":
        return max(m, n - 1)
    return min(m, n - 1)


# ---------------------------------------------------------------------------
# JSON helpers


def canonical_json(payload: Any) -> str:
    """Stable serialization: same payload -> same bytes, CLI and service."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def load_workload(path: str) -> Workload:
    with open(path, "r", encoding="utf-8") as fh:
        return Workload.from_dict(json.load(fh))


def dump_workload(w: Workload, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(w.to_dict()))


def load_design(path: str) -> DivergentDesign:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    # accept a full tuning result document as written by tune --out
    if isinstance(doc, Mapping) and isinstance(doc.get("design"), Mapping):
        doc = doc["design"]
    return DivergentDesign.from_dict(doc)


def dump_design(d: DivergentDesign, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(d.to_dict()))
