"""Branch-and-bound solver for the tuning binary programs.

Bounds come from linear relaxations (scipy's HiGHS interface); the search
itself is an in-repo best-first branch and bound with most-fractional
branching, a rounding-and-repair incumbent heuristic, and deterministic
tie-breaking. Warm starts enter as an initial incumbent mapped by variable
key, so a refined program can reuse the previous solve's assignment even
when columns were added or removed.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import bip as bipmod
from .bip import BinaryProgram, VarKey
from .model import SolverControls

STATUSES = ("optimal", "feasible_within_gap", "infeasible", "timeout_best_known")

_INT_TOL = 1e-6
_PROOF_TOL = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float
    assignment: Optional[tuple[int, ...]]
    gap: float
    nodes_explored: int
    wall_time: float
    keys: tuple[VarKey, ...] = ()

    def value(self, key: VarKey) -> int:
        if self.assignment is None:
            raise SolverError("no feasible assignment on this solution")
        try:
            col = self.keys.index(key)
        except ValueError:
            raise KeyError(f"no variable {key}") from None
        return self.assignment[col]

    def by_key(self) -> dict[VarKey, int]:
        if self.assignment is None:
            return {}
        return dict(zip(self.keys, self.assignment))


@dataclass
class _Matrices:
    c: np.ndarray
    a_ub: Optional[sparse.csr_matrix]
    b_ub: Optional[np.ndarray]
    a_eq: Optional[sparse.csr_matrix]
    b_eq: Optional[np.ndarray]


def _build_matrices(bp: BinaryProgram) -> _Matrices:
    n = bp.num_variables
    ub_rows: list[tuple[tuple[tuple[int, float], ...], float]] = []
    eq_rows: list[tuple[tuple[tuple[int, float], ...], float]] = []
    for row in bp.constraints:
        if row.rel == "<=":
            ub_rows.append((row.coeffs, row.rhs))
        elif row.rel == ">=":
            ub_rows.append((tuple((c, -v) for c, v in row.coeffs), -row.rhs))
        else:
            eq_rows.append((row.coeffs, row.rhs))

    def pack(rows):
        if not rows:
            return None, None
        data, ri, ci, rhs = [], [], [], []
        for i, (coeffs, b) in enumerate(rows):
            rhs.append(b)
            for col, coef in coeffs:
                ri.append(i)
                ci.append(col)
                data.append(coef)
        mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        return mat, np.asarray(rhs, dtype=float)

    a_ub, b_ub = pack(ub_rows)
    a_eq, b_eq = pack(eq_rows)
    return _Matrices(c=np.asarray(bp.objective, dtype=float),
                     a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq)


def _presolve_fixes(bp: BinaryProgram) -> Optional[dict[int, int]]:
    """Pin variables forced by singleton rows; None means proven infeasible."""
    fixed: dict[int, int] = {}

    def pin(col: int, v: int) -> bool:
        old = fixed.get(col)
        if old is not None and old != v:
            return False
        fixed[col] = v
        return True

    for row in bp.constraints:
        if len(row.coeffs) != 1:
            continue
        col, coef = row.coeffs[0]
        if coef == 0.0:
            continue
        bound = row.rhs / coef
        if row.rel == "=":
            iv = int(round(bound))
            if abs(bound - iv) > 1e-9 or iv not in (0, 1) or not pin(col, iv):
                return None
            continue
        # dividing by a negative coefficient flips the relation
        upper = (row.rel == "<=") == (coef > 0)
        if upper:  # x <= bound
            if bound < -1e-9:
                return None
            if bound < 1.0 - 1e-9 and not pin(col, 0):
                return None
        else:  # x >= bound
            if bound > 1.0 + 1e-9:
                return None
            if bound > 1e-9 and not pin(col, 1):
                return None
    return fixed


def _assignment_repair(bp: BinaryProgram, relaxed: np.ndarray) -> Optional[list[int]]:
    """Round an LP point and re-balance pure assignment rows by keeping the
    highest-valued columns; verified by the caller before acceptance."""
    values = [1 if v >= 0.5 else 0 for v in relaxed]
    for row in bp.constraints:
        if row.rel != "=" or not row.coeffs:
            continue
        if any(coef != 1.0 for _, coef in row.coeffs):
            continue
        want = int(round(row.rhs))
        if abs(row.rhs - want) > 1e-9 or want < 0:
            continue
        cols = [c for c, _ in row.coeffs]
        have = sum(values[c] for c in cols)
        if have == want:
            continue
        ranked = sorted(cols, key=lambda c: (-relaxed[c], c))
        chosen = set(ranked[:want])
        for c in cols:
            values[c] = 1 if c in chosen else 0
    return values


def solve(bp: BinaryProgram,
          controls: Optional[SolverControls] = None,
          should_stop: Optional[Callable[[], bool]] = None,
          initial: Optional[Mapping[VarKey, int]] = None,
          max_nodes: Optional[int] = None) -> Solution:
    """Minimize the program's objective over binary assignments."""
    controls = controls or bp.request.solver_controls or SolverControls()
    start = time.monotonic()
    n = bp.num_variables
    mats = _build_matrices(bp)

    def elapsed() -> float:
        return time.monotonic() - start

    def out_of_time() -> bool:
        if should_stop is not None and should_stop():
            return True
        return (controls.time_limit is not None
                and elapsed() >= controls.time_limit)

    root_fixes = _presolve_fixes(bp)
    if root_fixes is None:
        return Solution(status="infeasible", objective=float("inf"),
                        assignment=None, gap=float("inf"), nodes_explored=0,
                        wall_time=elapsed(), keys=bp.keys)

    incumbent: Optional[list[int]] = None
    inc_obj = float("inf")

    def try_incumbent(values: list[int]) -> None:
        nonlocal incumbent, inc_obj
        for col, v in root_fixes.items():
            if values[col] != v:
                return
        if bipmod.violations(bp, values, tol=1e-6):
            return
        obj = float(np.dot(mats.c, values))
        if obj < inc_obj - 1e-12:
            incumbent, inc_obj = list(values), obj

    if initial:
        idx = {k: i for i, k in enumerate(bp.keys)}
        values = [0] * n
        for key, v in initial.items():
            col = idx.get(key)
            if col is not None and v:
                values[col] = 1
        try_incumbent(values)

    def solve_lp(fixes: dict[int, int]):
        bounds = [(0.0, 1.0)] * n
        for col, v in fixes.items():
            bounds[col] = (float(v), float(v))
        res = linprog(mats.c, A_ub=mats.a_ub, b_ub=mats.b_ub,
                      A_eq=mats.a_eq, b_eq=mats.b_eq,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return None
        if res.status != 0 or res.x is None:
            raise SolverError(f"relaxation failed: {res.message}")
        return float(res.fun), np.clip(res.x, 0.0, 1.0)

    heap: list[tuple[float, int, dict[int, int]]] = []
    tick = 0
    nodes = 0
    root = solve_lp(root_fixes)
    if root is not None:
        heapq.heappush(heap, (root[0], tick, dict(root_fixes)))

    glb = root[0] if root is not None else float("inf")
    hit_limit = False
    proven = False
    early_gap = False
    first_pop = True
    while heap:
        if out_of_time() or (max_nodes is not None and nodes >= max_nodes):
            hit_limit = True
            break
        bound, _, fixes = heapq.heappop(heap)
        glb = bound  # best-first order makes the popped bound global
        tol = _PROOF_TOL * max(1.0, abs(inc_obj))
        if incumbent is not None and bound >= inc_obj - tol:
            proven = True
            heap.clear()
            break
        lp = root if first_pop else solve_lp(fixes)
        first_pop = False
        nodes += 1
        if lp is None:
            continue
        lp_obj, x = lp
        if incumbent is not None and lp_obj >= inc_obj - tol:
            continue
        frac_dev = np.minimum(x, 1.0 - x)
        branch_col = int(np.argmax(frac_dev))
        if frac_dev[branch_col] <= _INT_TOL:
            try_incumbent([int(round(v)) for v in x])
            continue
        repaired = _assignment_repair(bp, x)
        if repaired is not None:
            try_incumbent(repaired)
        if incumbent is not None and controls.gap_tolerance > 0:
            gap_now = (inc_obj - glb) / max(abs(inc_obj), 1e-9)
            if gap_now <= controls.gap_tolerance:
                early_gap = True
                heap.clear()
                break
        for v in (int(round(x[branch_col])), 1 - int(round(x[branch_col]))):
            child = dict(fixes)
            child[branch_col] = v
            tick += 1
            heapq.heappush(heap, (lp_obj, tick, child))

    wall = elapsed()
    if incumbent is None:
        if hit_limit:
            return Solution(status="timeout_best_known", objective=float("inf"),
                            assignment=None, gap=float("inf"),
                            nodes_explored=nodes, wall_time=wall, keys=bp.keys)
        return Solution(status="infeasible", objective=float("inf"),
                        assignment=None, gap=float("inf"),
                        nodes_explored=nodes, wall_time=wall, keys=bp.keys)

    if not heap and not hit_limit and not early_gap:
        proven = True  # search space exhausted
    if heap:
        glb = min([glb] + [b for b, _, _ in heap])
    if proven:
        status, gap = "optimal", 0.0
    else:
        gap = max(0.0, (inc_obj - glb) / max(abs(inc_obj), 1e-9))
        status = "timeout_best_known" if hit_limit else "feasible_within_gap"
    return Solution(status=status, objective=inc_obj,
                    assignment=tuple(incumbent), gap=gap,
                    nodes_explored=nodes, wall_time=wall, keys=bp.keys)


def refine(previous: Solution, bp: BinaryProgram,
           controls: Optional[SolverControls] = None,
           should_stop: Optional[Callable[[], bool]] = None,
           max_nodes: Optional[int] = None) -> Solution:
    """Re-solve a revised program, seeding the search with the previous
    solution mapped by variable key; unknown keys are dropped, new columns
    start at zero."""
    initial = previous.by_key() if previous.assignment is not None else None
    return solve(bp, controls=controls, should_stop=should_stop,
                 initial=initial, max_nodes=max_nodes)
