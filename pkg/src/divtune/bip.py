"""Reduction of divergent-design tuning to a compact binary program.

Variable families (registry kinds):
  s   index a materialized on replica r
  t   query q routed to replica r
  y   template plan p evaluates q on replica r
  x   access method a fills p's slot for q on replica r
  tf/yf/xf  the same three under a failure scenario j
  z   replica r stays live (elastic shrink)
  yo/xo     replica-optimal plan choice, built for load-skew exactness
  u   per-template cheapest available access method, same machinery

The objective prices routed query evaluations, update shells, and index
maintenance; fixed per-update base costs are decision-free and stay out of
the program (decode re-adds them). Constraint rows carry labels so reports,
the LP export, and tests can name the binding family.

Cost exactness under load-skew constraints: a solver could otherwise inflate
a routed query's cost terms to fake a balanced load, so the skew builders add
a replica-optimal cost expression per statement (yo/xo with availability
links give an achievable cost; u rows force each template's expression down
to its cheapest available instantiation) and a single big-M-free row
cost_hat - cost_opt <= 0 per statement and replica. Routed statements then
price exactly at their true optimal cost, unrouted ones stay at zero.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from . import costmodel
from .model import (
    CostBreakdown,
    DivergentDesign,
    FailureLoadSkewConstraint,
    LoadSkewConstraint,
    QueryStatement,
    RoutingFunctions,
    TuningRequest,
    Workload,
    failure_routing_cardinality,
    is_scan,
    validate_request,
)


class BipError(ValueError):
    pass


class DecodeError(BipError):
    pass


@dataclass(frozen=True)
class VarKey:
    kind: str
    replica: int = 0
    stmt: str = ""
    template: str = ""
    access: str = ""
    failed: int = 0


@dataclass(frozen=True)
class Constraint:
    label: str
    coeffs: tuple[tuple[int, float], ...]
    rel: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class ProgramMeta:
    n_replicas: int
    live_target: int
    original_n: int
    alpha: float
    multiplicity: int
    fail_divisor: int
    routing_mode: str
    objective_kind: str  # "expected_total" | "query_only"
    dropped_constant: float  # update base costs missing from the objective
    load_constant: float  # per-replica update base-cost constant K
    has_failures: bool = False
    has_opt_machinery: bool = False
    has_shrink: bool = False
    greedy_beta: Optional[float] = None
    greedy_load_cap: Optional[float] = None


@dataclass(frozen=True)
class _Active:
    """Which families the assembler materializes on top of the core."""

    failures: bool = False
    space_budget: bool = False
    index_limits: bool = False
    materialization: bool = False
    load_skew_exact: bool = False
    load_skew_greedy: bool = False
    failure_load_skew: bool = False
    update_bound: bool = False
    greedy_opt_cost: Optional[float] = None


@dataclass(frozen=True)
class BinaryProgram:
    keys: tuple[VarKey, ...]
    objective: tuple[float, ...]
    constraints: tuple[Constraint, ...]
    request: TuningRequest
    meta: ProgramMeta
    active: _Active

    @property
    def num_variables(self) -> int:
        return len(self.keys)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def column(self, key: VarKey) -> int:
        idx = _index_of(self)
        try:
            return idx[key]
        except KeyError:
            raise KeyError(f"no variable {key}") from None

    def has_column(self, key: VarKey) -> bool:
        return key in _index_of(self)


# Column index keyed by the identity of the keys tuple; holding a strong
# reference keeps the id stable for as long as the entry lives.
_INDEX_CACHE: dict[int, tuple[tuple[VarKey, ...], dict[VarKey, int]]] = {}
_INDEX_CACHE_LIMIT = 8


def _index_of(bp: BinaryProgram) -> dict[VarKey, int]:
    entry = _INDEX_CACHE.get(id(bp.keys))
    if entry is not None and entry[0] is bp.keys:
        return entry[1]
    index = {k: i for i, k in enumerate(bp.keys)}
    if len(_INDEX_CACHE) >= _INDEX_CACHE_LIMIT:
        _INDEX_CACHE.pop(next(iter(_INDEX_CACHE)))
    _INDEX_CACHE[id(bp.keys)] = (bp.keys, index)
    return index


def _surrogate_cost(stmt: QueryStatement) -> float:
    """Strictly above any achievable plan cost; prices unusable options in
    the cheapest-available machinery so slot rows stay satisfiable."""
    worst = 0.0
    for tp in stmt.templates:
        cost = tp.internal_cost
        usable_everywhere = True
        for _, options in tp.slots:
            usable = [o.cost for o in options if o.usable]
            if not usable:
                usable_everywhere = False
                break
            cost += max(usable)
        if usable_everywhere:
            worst = max(worst, cost)
    return worst + 1.0


# ---------------------------------------------------------------------------
# Assembly


class _Assembler:
    def __init__(self, req: TuningRequest, active: _Active):
        problems = validate_request(req)
        if problems:
            raise BipError(
                "invalid tuning request: " + "; ".join(str(p) for p in problems))
        self.req = req
        self.active = active
        self.w = req.workload
        self.n = req.replica_count
        self.m = req.multiplicity
        self.alpha = req.failure_prob if active.failures else 0.0
        if active.failures and req.failure_prob > 0 and self.n < 2:
            raise BipError("failure scenarios need at least two replicas")
        self.mode = req.routing_cardinality_mode
        self.universe = self.w.index_ids()

        mat = req.constraints.materialization if active.materialization else None
        target = self.n
        if mat is not None and mat.target_replica_count is not None:
            target = mat.target_replica_count
        if target != self.n and self.alpha > 0:
            raise BipError("elastic redeployment requires failure_prob = 0")
        self.n_eff = max(self.n, target)
        self.live_target = min(self.n_eff, target)
        self.shrink = target < self.n

        self.divisor = failure_routing_cardinality(self.m, self.n_eff, self.mode)

        # statements: (query-shaped statement, weight, is_shell)
        self.statements: list[tuple[QueryStatement, float, bool]] = [
            (q, q.weight, False) for q in self.w.queries
        ]
        self.statements += [(u.query_shell, u.weight, True) for u in self.w.updates]

        # total maintenance weight per index: sum_u f(u) * ucost(u, a)
        self.maintenance: dict[str, float] = {a: 0.0 for a in self.universe}
        for u in self.w.updates:
            for a, c in u.index_update_costs:
                self.maintenance[a] += u.weight * c

        self.keys: list[VarKey] = []
        self.index: dict[VarKey, int] = {}
        self.obj_query: dict[int, float] = {}
        self.obj_update: dict[int, float] = {}
        self.rows: list[Constraint] = []

    # -- registry -----------------------------------------------------------

    def var(self, key: VarKey) -> int:
        col = self.index.get(key)
        if col is None:
            col = len(self.keys)
            self.keys.append(key)
            self.index[key] = col
        return col

    def row(self, label: str, coeffs: Mapping[int, float], rel: str,
            rhs: float) -> None:
        packed = tuple(sorted((c, v) for c, v in coeffs.items() if v != 0.0))
        self.rows.append(Constraint(label=label, coeffs=packed, rel=rel, rhs=rhs))

    @staticmethod
    def _merge(target: dict[int, float], coeffs: Mapping[int, float],
               scale: float) -> None:
        if scale == 0.0:
            return
        for c, v in coeffs.items():
            target[c] = target.get(c, 0.0) + scale * v

    # -- cost structure per statement/replica -------------------------------

    def _cost_cols(self, stmt: QueryStatement, r: int, failed: int
                   ) -> dict[int, float]:
        """Create the y/x family for (stmt, r[, failed]) with its linking
        rows and return the cost expression sum beta*y + sum gamma*x."""
        fail = failed != 0
        ykind, xkind = ("yf", "xf") if fail else ("y", "x")
        tkey = VarKey("tf" if fail else "t", replica=r, stmt=stmt.id, failed=failed)
        tcol = self.var(tkey)
        expr: dict[int, float] = {}
        link: dict[int, float] = {tcol: -1.0}
        tag = f"[{stmt.id}][r{r}]" + (f"[j{failed}]" if fail else "")
        for tp in sorted(stmt.templates, key=lambda t: t.id):
            ycol = self.var(VarKey(ykind, replica=r, stmt=stmt.id,
                                   template=tp.id, failed=failed))
            link[ycol] = 1.0
            expr[ycol] = expr.get(ycol, 0.0) + tp.internal_cost
            for table, options in tp.slots:
                slot: dict[int, float] = {ycol: -1.0}
                for opt in sorted(options, key=lambda o: o.access):
                    if not opt.usable:
                        continue
                    xcol = self.var(VarKey(xkind, replica=r, stmt=stmt.id,
                                           template=tp.id, access=opt.access,
                                           failed=failed))
                    slot[xcol] = 1.0
                    expr[xcol] = expr.get(xcol, 0.0) + opt.cost
                    if not is_scan(opt.access):
                        scol = self.var(VarKey("s", replica=r, access=opt.access))
                        self.row(f"avail{tag}[{tp.id}][{opt.access}]",
                                 {xcol: 1.0, scol: -1.0}, "<=", 0.0)
                self.row(f"slot{tag}[{tp.id}][{table}]", slot, "=", 0.0)
        self.row(f"tmpl{tag}", link, "=", 0.0)
        return expr

    # -- replica-optimal cost machinery --------------------------------------

    def _opt_cols(self, stmt: QueryStatement, r: int) -> dict[int, float]:
        """Replica-optimal cost expression for (stmt, r): always equals the
        true cost of stmt under replica r's config, routed or not."""
        tag = f"[{stmt.id}][r{r}]"
        big = _surrogate_cost(stmt)
        expr: dict[int, float] = {}
        pick: dict[int, float] = {}
        template_bounds: list[tuple[str, dict[int, float], float]] = []
        for tp in sorted(stmt.templates, key=lambda t: t.id):
            yocol = self.var(VarKey("yo", replica=r, stmt=stmt.id, template=tp.id))
            pick[yocol] = 1.0
            expr[yocol] = expr.get(yocol, 0.0) + tp.internal_cost
            bound: dict[int, float] = {}
            for table, options in tp.slots:
                slot: dict[int, float] = {yocol: -1.0}
                priced: list[tuple[float, str, int]] = []
                anchor_scan: Optional[float] = None
                for opt in sorted(options, key=lambda o: o.access):
                    if opt.usable:
                        xocol = self.var(VarKey("xo", replica=r, stmt=stmt.id,
                                                template=tp.id, access=opt.access))
                        slot[xocol] = 1.0
                        expr[xocol] = expr.get(xocol, 0.0) + opt.cost
                        if not is_scan(opt.access):
                            scol = self.var(VarKey("s", replica=r, access=opt.access))
                            self.row(f"oavail{tag}[{tp.id}][{opt.access}]",
                                     {xocol: 1.0, scol: -1.0}, "<=", 0.0)
                    priced_cost = opt.cost if opt.usable else big
                    ucol = self.var(VarKey("u", replica=r, stmt=stmt.id,
                                           template=tp.id, access=opt.access))
                    priced.append((priced_cost, opt.access, ucol))
                    bound[ucol] = bound.get(ucol, 0.0) - priced_cost
                    if not is_scan(opt.access):
                        scol = self.var(VarKey("s", replica=r, access=opt.access))
                        self.row(f"upick{tag}[{tp.id}][{opt.access}]",
                                 {ucol: 1.0, scol: -1.0}, "<=", 0.0)
                    if is_scan(opt.access):
                        anchor_scan = priced_cost
                self.row(f"oslot{tag}[{tp.id}][{table}]", slot, "=", 0.0)
                self.row(f"uslot{tag}[{tp.id}][{table}]",
                         {ucol: 1.0 for _, _, ucol in priced}, "=", 1.0)
                # The chosen option must cost no more than any available
                # index option and no more than the scan.
                for cost_a, access_a, _ in priced:
                    if is_scan(access_a):
                        continue
                    cheaper = {ucol: 1.0 for cost_b, _, ucol in priced
                               if cost_b <= cost_a}
                    scol = self.var(VarKey("s", replica=r, access=access_a))
                    cheaper[scol] = cheaper.get(scol, 0.0) - 1.0
                    self.row(f"uleast{tag}[{tp.id}][{table}][{access_a}]",
                             cheaper, ">=", 0.0)
                if anchor_scan is not None:
                    cheaper = {ucol: 1.0 for cost_b, _, ucol in priced
                               if cost_b <= anchor_scan}
                    self.row(f"uleast{tag}[{tp.id}][{table}][scan]",
                             cheaper, ">=", 1.0)
            template_bounds.append((tp.id, bound, tp.internal_cost))
        self.row(f"opick{tag}", pick, "=", 1.0)
        for tp_id, bound, internal in template_bounds:
            combined = dict(expr)
            self._merge(combined, bound, 1.0)
            self.row(f"optub{tag}[{tp_id}]", combined, "<=", internal)
        return expr

    # -- family builders ------------------------------------------------------

    def build(self) -> BinaryProgram:
        cs = self.req.constraints
        w = self.w
        alpha = self.alpha
        n_eff = self.n_eff

        # s registry first, replica-major, sorted index ids
        for r in range(1, n_eff + 1):
            for a in self.universe:
                self.var(VarKey("s", replica=r, access=a))

        # normal routing + cost structure; objective weights carry (1-alpha)
        normal_scale = 1.0 - alpha
        cost_exprs: dict[tuple[str, int], dict[int, float]] = {}
        for stmt, weight, is_shell in self.statements:
            tcols: dict[int, float] = {}
            for r in range(1, n_eff + 1):
                expr = self._cost_cols(stmt, r, failed=0)
                cost_exprs[(stmt.id, r)] = expr
                tcols[self.index[VarKey("t", replica=r, stmt=stmt.id)]] = 1.0
                obj = self.obj_update if is_shell else self.obj_query
                share = weight if is_shell else weight / self.m
                self._merge(obj, expr, normal_scale * share)
            if is_shell:
                self.row(f"route_shell[{stmt.id}]", tcols, "=",
                         float(self.live_target))
            else:
                self.row(f"route_query[{stmt.id}]", tcols, "=", float(self.m))

        # maintenance: s costs its updates on every live replica
        for r in range(1, n_eff + 1):
            for a in self.universe:
                coef = self.maintenance[a]
                if coef == 0.0:
                    continue
                col = self.index[VarKey("s", replica=r, access=a)]
                scale = normal_scale
                if alpha > 0:
                    scale += alpha * (self.n - 1) / self.n
                self.obj_update[col] = self.obj_update.get(col, 0.0) + scale * coef

        # failure scenarios
        fail_exprs: dict[tuple[str, int, int], dict[int, float]] = {}
        if alpha > 0:
            scen_scale = alpha / self.n
            for j in range(1, self.n + 1):
                for stmt, weight, is_shell in self.statements:
                    tcols = {}
                    for r in range(1, self.n + 1):
                        tfcol = self.var(VarKey("tf", replica=r, stmt=stmt.id,
                                                failed=j))
                        tcols[tfcol] = 1.0
                        if r == j:
                            self.row(f"no_route_failed[{stmt.id}][j{j}]",
                                     {tfcol: 1.0}, "=", 0.0)
                            continue
                        expr = self._cost_cols(stmt, r, failed=j)
                        fail_exprs[(stmt.id, r, j)] = expr
                        obj = self.obj_update if is_shell else self.obj_query
                        share = weight if is_shell else weight / self.divisor
                        self._merge(obj, expr, scen_scale * share)
                    cardinality = (self.n - 1) if is_shell else self.divisor
                    self.row(f"route_fail[{stmt.id}][j{j}]", tcols, "=",
                             float(cardinality))

        # space budget
        if self.active.space_budget and cs.space_budget is not None:
            for r in range(1, n_eff + 1):
                coeffs = {}
                for a in self.universe:
                    size = w.index_by_id(a).size
                    if size:
                        coeffs[self.index[VarKey("s", replica=r, access=a)]] = size
                self.row(f"space[r{r}]", coeffs, "<=", cs.space_budget)

        # per-replica caps on flagged index groups
        if self.active.index_limits:
            for limit in cs.index_limits:
                for r in range(1, n_eff + 1):
                    coeffs = {
                        self.index[VarKey("s", replica=r, access=a)]: 1.0
                        for a in sorted(limit.index_ids)
                    }
                    self.row(f"idxcap[{limit.name}][r{r}]", coeffs, "<=",
                             float(limit.max_per_replica))

        # materialization budget, with live-replica machinery when shrinking
        if self.active.materialization and cs.materialization is not None:
            mat = cs.materialization
            if self.shrink:
                zcols = {}
                for r in range(1, n_eff + 1):
                    zcol = self.var(VarKey("z", replica=r))
                    zcols[zcol] = 1.0
                    for stmt, _, _ in self.statements:
                        tcol = self.index[VarKey("t", replica=r, stmt=stmt.id)]
                        self.row(f"route_live[{stmt.id}][r{r}]",
                                 {tcol: 1.0, zcol: -1.0}, "<=", 0.0)
                    for a in self.universe:
                        scol = self.index[VarKey("s", replica=r, access=a)]
                        self.row(f"cfg_live[r{r}][{a}]",
                                 {scol: 1.0, zcol: -1.0}, "<=", 0.0)
                self.row("live_count", zcols, "=", float(self.live_target))
            for r in range(1, n_eff + 1):
                current = (mat.current.config(r) if r <= self.n else frozenset())
                deploy = 0.0 if r <= self.n else mat.new_replica_deploy_cost
                coeffs: dict[int, float] = {}
                drop_total = 0.0
                for a in self.universe:
                    scol = self.index[VarKey("s", replica=r, access=a)]
                    idx = w.index_by_id(a)
                    if a in current:
                        coeffs[scol] = coeffs.get(scol, 0.0) - idx.drop_cost
                        drop_total += idx.drop_cost
                    else:
                        coeffs[scol] = coeffs.get(scol, 0.0) + idx.create_cost
                if self.shrink:
                    # z = 1 restores the standard row; z = 0 empties the
                    # replica (cfg_live) and the row reduces to 0 <= budget.
                    zcol = self.index[VarKey("z", replica=r)]
                    coeffs[zcol] = coeffs.get(zcol, 0.0) + drop_total
                    self.row(f"mat[r{r}]", coeffs, "<=", mat.budget)
                else:
                    self.row(f"mat[r{r}]", coeffs, "<=",
                             mat.budget - drop_total - deploy)

        # statement-level true-cost machinery, shared by both skew families
        opt_exprs: dict[tuple[str, int], dict[int, float]] = {}
        need_opt = (self.active.load_skew_exact or self.active.failure_load_skew)
        if need_opt:
            for stmt, _, _ in self.statements:
                for r in range(1, n_eff + 1):
                    opt_exprs[(stmt.id, r)] = self._opt_cols(stmt, r)

        load_k = sum(u.weight * u.base_cost for u in w.updates)

        def load_upper_bound() -> float:
            # Structural cap on any replica's load: every statement at its
            # dearest plan plus full maintenance plus the base-cost constant.
            cap = load_k
            for stmt, weight, is_shell in self.statements:
                share = weight if is_shell else weight / self.m
                cap += share * (_surrogate_cost(stmt) - 1.0)
            cap += sum(self.maintenance.values())
            return cap

        def load_expr(r: int) -> dict[int, float]:
            expr: dict[int, float] = {}
            for stmt, weight, is_shell in self.statements:
                share = weight if is_shell else weight / self.m
                self._merge(expr, cost_exprs[(stmt.id, r)], share)
            for a in self.universe:
                coef = self.maintenance[a]
                if coef:
                    expr[self.index[VarKey("s", replica=r, access=a)]] = (
                        expr.get(self.index[VarKey("s", replica=r, access=a)], 0.0)
                        + coef)
            return expr

        greedy_beta = None
        greedy_cap = None
        if self.active.load_skew_exact and cs.load_skew is not None:
            tau = cs.load_skew.tau
            for (sid, r), expr in cost_exprs.items():
                pair: dict[int, float] = dict(expr)
                self._merge(pair, opt_exprs[(sid, r)], -1.0)
                self.row(f"cost_exact[{sid}][r{r}]", pair, "<=", 0.0)
            loads = [load_expr(r) for r in range(1, n_eff + 1)]
            if self.active.materialization:
                # replica identities are pinned by the current design, so
                # symmetry-breaking order rows would cut real optima; emit
                # the general pairwise form instead.
                slack = load_upper_bound() if self.shrink else 0.0
                for r in range(n_eff):
                    for j in range(n_eff):
                        if r == j:
                            continue
                        pairload: dict[int, float] = dict(loads[r])
                        self._merge(pairload, loads[j], -(1.0 + tau))
                        rhs = tau * load_k
                        if self.shrink:
                            # a decommissioned comparison replica has no
                            # load; let z_j = 0 switch the row off
                            zcol = self.index[VarKey("z", replica=j + 1)]
                            pairload[zcol] = pairload.get(zcol, 0.0) + slack
                            rhs += slack
                        self.row(f"load_skew[r{r + 1}][r{j + 1}]", pairload,
                                 "<=", rhs)
            else:
                for r in range(n_eff - 1):
                    ordered: dict[int, float] = dict(loads[r])
                    self._merge(ordered, loads[r + 1], -1.0)
                    self.row(f"load_order[r{r + 1}]", ordered, "<=", 0.0)
                last: dict[int, float] = dict(loads[n_eff - 1])
                self._merge(last, loads[0], -(1.0 + tau))
                self.row("load_skew", last, "<=", tau * load_k)

        if self.active.load_skew_greedy and cs.load_skew is not None:
            tau = cs.load_skew.tau
            opt_cost = self.active.greedy_opt_cost
            if opt_cost is None:
                raise BipError("greedy load skew needs the unconstrained optimum")
            n_live = self.live_target
            beta = (tau - 1.0) / (1.0 + (n_live - 1) * tau)
            cap = (1.0 + beta) * opt_cost / n_live
            greedy_beta, greedy_cap = beta, cap
            slack = load_upper_bound() if self.shrink else 0.0
            for r in range(1, n_eff + 1):
                expr = load_expr(r)
                rhs = cap - load_k
                if self.shrink:
                    zcol = self.index[VarKey("z", replica=r)]
                    expr[zcol] = expr.get(zcol, 0.0) + slack
                    rhs += slack
                self.row(f"load_greedy[r{r}]", expr, "<=", rhs)

        if self.active.failure_load_skew and cs.failure_load_skew is not None:
            tau = cs.failure_load_skew.tau
            if alpha <= 0:
                raise BipError("failure load skew requires failure scenarios")
            for (sid, r, j), expr in fail_exprs.items():
                pair = dict(expr)
                self._merge(pair, opt_exprs[(sid, r)], -1.0)
                self.row(f"fcost_exact[{sid}][r{r}][j{j}]", pair, "<=", 0.0)

            def fload_expr(r: int, j: int) -> dict[int, float]:
                expr: dict[int, float] = {}
                for stmt, weight, is_shell in self.statements:
                    share = weight if is_shell else weight / self.divisor
                    self._merge(expr, fail_exprs[(stmt.id, r, j)], share)
                for a in self.universe:
                    coef = self.maintenance[a]
                    if coef:
                        col = self.index[VarKey("s", replica=r, access=a)]
                        expr[col] = expr.get(col, 0.0) + coef
                return expr

            for j in range(1, self.n + 1):
                live = [r for r in range(1, self.n + 1) if r != j]
                floads = [fload_expr(r, j) for r in live]
                for i in range(len(live) - 1):
                    ordered = dict(floads[i])
                    self._merge(ordered, floads[i + 1], -1.0)
                    self.row(f"fload_order[j{j}][r{live[i]}]", ordered, "<=", 0.0)
                last = dict(floads[-1])
                self._merge(last, floads[0], -(1.0 + tau))
                self.row(f"fload_skew[j{j}]", last, "<=", tau * load_k)

        # update-cost bound: query-only objective plus a cap row
        objective_kind = "expected_total"
        if self.active.update_bound and cs.update_cost_bound is not None:
            objective_kind = "query_only"
            ub = cs.update_cost_bound
            bound: dict[int, float] = {}
            for stmt, weight, is_shell in self.statements:
                if not is_shell:
                    continue
                for r in range(1, n_eff + 1):
                    self._merge(bound, cost_exprs[(stmt.id, r)], weight)
            for r in range(1, n_eff + 1):
                for a in self.universe:
                    coef = self.maintenance[a]
                    if coef:
                        col = self.index[VarKey("s", replica=r, access=a)]
                        bound[col] = bound.get(col, 0.0) + coef
            rhs = ub.fraction * ub.reference_cost - load_k * self.live_target
            self.row("update_bound", bound, "<=", rhs)

        if objective_kind == "query_only":
            merged = dict(self.obj_query)
        else:
            merged = dict(self.obj_query)
            self._merge(merged, self.obj_update, 1.0)

        objective = [0.0] * len(self.keys)
        for col, coef in merged.items():
            objective[col] = coef

        if objective_kind == "query_only":
            dropped = 0.0
        else:
            dropped = normal_scale * self.live_target * load_k
            if alpha > 0:
                dropped += alpha * (self.n - 1) * load_k

        meta = ProgramMeta(
            n_replicas=n_eff,
            live_target=self.live_target,
            original_n=self.n,
            alpha=alpha,
            multiplicity=self.m,
            fail_divisor=self.divisor,
            routing_mode=self.mode,
            objective_kind=objective_kind,
            dropped_constant=dropped,
            load_constant=load_k,
            has_failures=alpha > 0,
            has_opt_machinery=need_opt,
            has_shrink=self.shrink,
            greedy_beta=greedy_beta,
            greedy_load_cap=greedy_cap,
        )
        return BinaryProgram(
            keys=tuple(self.keys),
            objective=tuple(objective),
            constraints=tuple(self.rows),
            request=self.req,
            meta=meta,
            active=self.active,
        )


def _assemble(req: TuningRequest, active: _Active) -> BinaryProgram:
    return _Assembler(req, active).build()


# ---------------------------------------------------------------------------
# Public builders: each returns a new program with one more family active.


def build_core(req: TuningRequest) -> BinaryProgram:
    """Routing, template choice, and slot atomicity for normal operation."""
    return _assemble(req, _Active())


def add_failures(bp: BinaryProgram) -> BinaryProgram:
    if bp.request.failure_prob <= 0:
        raise BipError("request has failure_prob = 0; nothing to add")
    return _assemble(bp.request, replace(bp.active, failures=True))


def add_space_budget(bp: BinaryProgram, budget: Optional[float] = None
                     ) -> BinaryProgram:
    req = bp.request
    if budget is not None:
        req = replace(req, constraints=replace(req.constraints,
                                               space_budget=budget))
    if req.constraints.space_budget is None:
        raise BipError("no space budget on the request")
    return _assemble(req, replace(bp.active, space_budget=True))


def add_index_limits(bp: BinaryProgram) -> BinaryProgram:
    if not bp.request.constraints.index_limits:
        raise BipError("no index property limits on the request")
    return _assemble(bp.request, replace(bp.active, index_limits=True))


def add_load_skew_exact(bp: BinaryProgram, tau: Optional[float] = None
                        ) -> BinaryProgram:
    req = bp.request
    if tau is not None:
        req = replace(req, constraints=replace(
            req.constraints, load_skew=LoadSkewConstraint(tau=tau, mode="exact")))
    if req.constraints.load_skew is None:
        raise BipError("no load-skew constraint on the request")
    return _assemble(req, replace(bp.active, load_skew_exact=True,
                                  load_skew_greedy=False))


def add_load_skew_greedy(bp: BinaryProgram, tau: Optional[float],
                         optimal_total_cost: float) -> BinaryProgram:
    req = bp.request
    if tau is not None:
        req = replace(req, constraints=replace(
            req.constraints, load_skew=LoadSkewConstraint(tau=tau, mode="greedy")))
    if req.constraints.load_skew is None:
        raise BipError("no load-skew constraint on the request")
    return _assemble(req, replace(bp.active, load_skew_greedy=True,
                                  load_skew_exact=False,
                                  greedy_opt_cost=optimal_total_cost))


def add_failure_load_skew(bp: BinaryProgram, tau: Optional[float] = None
                          ) -> BinaryProgram:
    req = bp.request
    if tau is not None:
        req = replace(req, constraints=replace(
            req.constraints, failure_load_skew=FailureLoadSkewConstraint(tau=tau)))
    if req.constraints.failure_load_skew is None:
        raise BipError("no failure load-skew constraint on the request")
    return _assemble(req, replace(bp.active, failures=True,
                                  failure_load_skew=True))


def add_materialization(bp: BinaryProgram) -> BinaryProgram:
    if bp.request.constraints.materialization is None:
        raise BipError("no materialization constraint on the request")
    return _assemble(bp.request, replace(bp.active, materialization=True))


def add_update_cost_bound(bp: BinaryProgram) -> BinaryProgram:
    if bp.request.constraints.update_cost_bound is None:
        raise BipError("no update-cost bound on the request")
    return _assemble(bp.request, replace(bp.active, update_bound=True))


def build_program(req: TuningRequest,
                  greedy_opt_cost: Optional[float] = None) -> BinaryProgram:
    """Assemble every family the request's constraints call for. Greedy load
    skew needs the phase-one optimum; callers run that solve first."""
    cs = req.constraints
    skew_exact = cs.load_skew is not None and cs.load_skew.mode == "exact"
    skew_greedy = cs.load_skew is not None and cs.load_skew.mode == "greedy"
    if skew_greedy and greedy_opt_cost is None:
        raise BipError("greedy load skew needs the unconstrained optimum; "
                       "solve without the skew constraint first")
    active = _Active(
        failures=req.failure_prob > 0,
        space_budget=cs.space_budget is not None,
        index_limits=bool(cs.index_limits),
        materialization=cs.materialization is not None,
        load_skew_exact=skew_exact,
        load_skew_greedy=skew_greedy,
        failure_load_skew=cs.failure_load_skew is not None,
        update_bound=cs.update_cost_bound is not None,
        greedy_opt_cost=greedy_opt_cost,
    )
    return _assemble(req, active)


# ---------------------------------------------------------------------------
# Assignment checking, decode, embedding


def violations(bp: BinaryProgram, assignment: Mapping[int, float] | Sequence[float],
               tol: float = 1e-6) -> list[str]:
    """Independent pass over every row; returns human-readable violations."""
    def val(col: int) -> float:
        if isinstance(assignment, Mapping):
            return float(assignment.get(col, 0.0))
        return float(assignment[col])

    out: list[str] = []
    for col in range(bp.num_variables):
        v = val(col)
        if min(abs(v), abs(v - 1.0)) > tol:
            out.append(f"binary[{col}]: value {v} is not 0/1")
    for row in bp.constraints:
        lhs = sum(coef * val(col) for col, coef in row.coeffs)
        if row.rel == "<=" and lhs > row.rhs + tol:
            out.append(f"{row.label}: {lhs} <= {row.rhs} violated")
        elif row.rel == ">=" and lhs < row.rhs - tol:
            out.append(f"{row.label}: {lhs} >= {row.rhs} violated")
        elif row.rel == "=" and abs(lhs - row.rhs) > tol:
            out.append(f"{row.label}: {lhs} = {row.rhs} violated")
    return out


def objective_value(bp: BinaryProgram,
                    assignment: Mapping[int, float] | Sequence[float]) -> float:
    if isinstance(assignment, Mapping):
        return sum(bp.objective[c] * v for c, v in assignment.items())
    return sum(c * v for c, v in zip(bp.objective, assignment))


@dataclass(frozen=True)
class DecodedSolution:
    design: DivergentDesign
    breakdown: CostBreakdown
    objective: float
    # Original replica ids decommissioned by an elastic shrink.
    dropped_replicas: tuple[int, ...] = ()
    cross_check_error: float = 0.0


def _query_portion(design: DivergentDesign, w: Workload, m: int, alpha: float,
                   mode: str) -> float:
    normal = 0.0
    for q in w.queries:
        share = q.weight / m
        for r in design.routing.replicas_for(q.id):
            normal += share * costmodel.query_cost(q, design.config(r))
    if alpha == 0:
        return normal
    n = design.replica_count
    divisor = failure_routing_cardinality(m, n, mode)
    scen = 0.0
    for j in range(1, n + 1):
        for q in w.queries:
            share = q.weight / divisor
            for r in design.routing.failure_replicas_for(q.id, j):
                scen += share * costmodel.query_cost(q, design.config(r))
    return (1 - alpha) * normal + (alpha / n) * scen


def decode(bp: BinaryProgram, assignment: Mapping[int, float] | Sequence[float],
           objective: Optional[float] = None,
           check_tol: float = 1e-6) -> DecodedSolution:
    """Turn a feasible assignment back into a design and cross-check its
    objective against the plain cost model."""
    bad = violations(bp, assignment, tol=check_tol)
    if bad:
        raise DecodeError("assignment violates the program: " + "; ".join(bad[:5]))

    def val(key: VarKey) -> float:
        col = _index_of(bp).get(key)
        if col is None:
            return 0.0
        if isinstance(assignment, Mapping):
            return float(assignment.get(col, 0.0))
        return float(assignment[col])

    meta = bp.meta
    w = bp.request.workload
    n_eff = meta.n_replicas

    if meta.has_shrink:
        live = [r for r in range(1, n_eff + 1)
                if val(VarKey("z", replica=r)) > 0.5]
        dropped = tuple(r for r in range(1, n_eff + 1) if r not in live)
    else:
        live = list(range(1, n_eff + 1))
        dropped = ()
    renumber = {orig: i + 1 for i, orig in enumerate(live)}

    configs = []
    for orig in live:
        configs.append(frozenset(
            a for a in w.index_ids()
            if val(VarKey("s", replica=orig, access=a)) > 0.5))

    normal = {}
    for q in w.queries:
        normal[q.id] = tuple(sorted(
            renumber[r] for r in live
            if val(VarKey("t", replica=r, stmt=q.id)) > 0.5))
    on_failure = None
    if meta.has_failures:
        on_failure = {}
        for j in live:
            h = {}
            for q in w.queries:
                h[q.id] = tuple(sorted(
                    renumber[r] for r in live if r != j
                    and val(VarKey("tf", replica=r, stmt=q.id, failed=j)) > 0.5))
            on_failure[renumber[j]] = h
    design = DivergentDesign(
        configs=tuple(configs),
        routing=RoutingFunctions.make(normal, on_failure))

    m = meta.multiplicity
    alpha = meta.alpha
    qc = _query_portion(design, w, m, 0.0, meta.routing_mode)
    uc = sum(u.weight * costmodel.update_cost(u, design.config(r))
             for u in w.updates for r in range(1, design.replica_count + 1))
    loads = costmodel.all_replica_loads(design, w, m)
    expected = costmodel.exp_total_cost(design, w, m, alpha, meta.routing_mode)
    breakdown = CostBreakdown(
        total=qc + uc, query_cost=qc, update_cost=uc,
        per_replica_load=loads, expected_total=expected)

    obj = objective if objective is not None else objective_value(bp, assignment)
    if meta.objective_kind == "query_only":
        reference = _query_portion(design, w, m, alpha, meta.routing_mode)
        err = abs(obj - reference)
    else:
        reference = expected
        err = abs(obj + meta.dropped_constant - reference)
    rel = err / max(1.0, abs(reference))
    if rel > 1e-6:
        raise DecodeError(
            f"objective {obj} does not reproduce the cost-model value "
            f"{reference} (relative error {rel:.3e})")
    return DecodedSolution(design=design, breakdown=breakdown, objective=obj,
                           dropped_replicas=dropped, cross_check_error=rel)


def embed_design(bp: BinaryProgram, design: DivergentDesign) -> dict[int, int]:
    """Feasibility embedding: map a concrete design (with routing) onto the
    program's variables, choosing cost-optimal templates and access methods
    for every routed statement. For a feasible design the result satisfies
    every row and prices at the design's cost."""
    meta = bp.meta
    w = bp.request.workload
    n_eff = meta.n_replicas
    if design.replica_count != n_eff:
        raise BipError(
            f"design covers {design.replica_count} replicas, program has {n_eff}")
    universe = set(w.index_ids())
    for r in range(1, n_eff + 1):
        extra = design.config(r) - universe
        if extra:
            raise BipError(
                f"design uses indexes outside the candidate universe: "
                f"{sorted(extra)}")
    idx = _index_of(bp)
    assignment: dict[int, int] = {}

    def put(key: VarKey, v: int = 1) -> None:
        col = idx.get(key)
        if col is None:
            raise BipError(f"program has no variable {key}")
        assignment[col] = v

    for r in range(1, n_eff + 1):
        cfg = design.config(r)
        for a in w.index_ids():
            put(VarKey("s", replica=r, access=a), 1 if a in cfg else 0)
        if meta.has_shrink:
            put(VarKey("z", replica=r), 1)

    shells = [(u.query_shell, True) for u in w.updates]
    stmts = [(q, False) for q in w.queries] + shells

    def fill_plan(stmt: QueryStatement, r: int, failed: int) -> None:
        ykind, xkind = ("yf", "xf") if failed else ("y", "x")
        plan = costmodel.optimal_plan(stmt, design.config(r))
        put(VarKey(ykind, replica=r, stmt=stmt.id, template=plan.template_id,
                   failed=failed), 1)
        for _, access in plan.accesses:
            put(VarKey(xkind, replica=r, stmt=stmt.id, template=plan.template_id,
                       access=access, failed=failed), 1)

    for stmt, is_shell in stmts:
        if is_shell:
            routed = tuple(range(1, n_eff + 1))
        else:
            routed = design.routing.replicas_for(stmt.id)
        for r in range(1, n_eff + 1):
            put(VarKey("t", replica=r, stmt=stmt.id), 1 if r in routed else 0)
        for r in routed:
            fill_plan(stmt, r, failed=0)

    if meta.has_failures:
        for j in range(1, n_eff + 1):
            for stmt, is_shell in stmts:
                if is_shell:
                    routed = tuple(r for r in range(1, n_eff + 1) if r != j)
                else:
                    routed = design.routing.failure_replicas_for(stmt.id, j)
                for r in range(1, n_eff + 1):
                    put(VarKey("tf", replica=r, stmt=stmt.id, failed=j),
                        1 if r in routed else 0)
                for r in routed:
                    fill_plan(stmt, r, failed=j)

    if meta.has_opt_machinery:
        for stmt, _ in stmts:
            for r in range(1, n_eff + 1):
                cfg = design.config(r)
                plan = costmodel.optimal_plan(stmt, cfg)
                put(VarKey("yo", replica=r, stmt=stmt.id,
                           template=plan.template_id), 1)
                for _, access in plan.accesses:
                    put(VarKey("xo", replica=r, stmt=stmt.id,
                               template=plan.template_id, access=access), 1)
                big = _surrogate_cost(stmt)
                for tp in stmt.templates:
                    for _, options in tp.slots:
                        best = None
                        for opt in sorted(options, key=lambda o: o.access):
                            if not is_scan(opt.access) and opt.access not in cfg:
                                continue
                            priced = opt.cost if opt.usable else big
                            if best is None or priced < best[0]:
                                best = (priced, opt.access)
                        if best is None:
                            raise BipError(
                                f"slot of {stmt.id!r} has no available option")
                        put(VarKey("u", replica=r, stmt=stmt.id, template=tp.id,
                                   access=best[1]), 1)
    return assignment


# ---------------------------------------------------------------------------
# LP text export


_SAN = re.compile(r"[^A-Za-z0-9]")


def _lp_names(bp: BinaryProgram) -> list[str]:
    names: list[str] = []
    seen: set[str] = set()
    for col, key in enumerate(bp.keys):
        parts = [key.kind, f"r{key.replica}"]
        if key.failed:
            parts.append(f"j{key.failed}")
        if key.stmt:
            parts.append(f"q{_SAN.sub('_', key.stmt)}")
        if key.template:
            parts.append(f"p{_SAN.sub('_', key.template)}")
        if key.access:
            parts.append(f"a{_SAN.sub('_', key.access)}")
        name = "_".join(parts)
        if name in seen:
            name = f"{name}_c{col}"
        seen.add(name)
        names.append(name)
    return names


def _lp_terms(coeffs: Iterable[tuple[int, float]], names: list[str]) -> str:
    parts: list[str] = []
    for col, coef in coeffs:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = f"{sign} {mag:.12g} {names[col]}"
        parts.append(term)
    if not parts:
        return "0 zero_pad"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_string(bp: BinaryProgram) -> str:
    """CPLEX-style LP text: objective, labeled rows, binary section."""
    names = _lp_names(bp)
    lines = ["\\ divergent-design tuning program", "Minimize"]
    obj = [(c, v) for c, v in enumerate(bp.objective) if v != 0.0]
    lines.append(" obj: " + _lp_terms(obj, names))
    lines.append("Subject To")
    rel_map = {"<=": "<=", ">=": ">=", "=": "="}
    for i, row in enumerate(bp.constraints):
        label = _SAN.sub("_", row.label)[:64]
        lines.append(
            f" c{i}_{label}: {_lp_terms(row.coeffs, names)} "
            f"{rel_map[row.rel]} {row.rhs:.12g}")
    lines.append("Binary")
    for start in range(0, len(names), 8):
        lines.append(" " + " ".join(names[start:start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(bp: BinaryProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_lp_string(bp))
