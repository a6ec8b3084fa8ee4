import pytest

from divtune import bip, costmodel, solver
from divtune.model import (
    ConstraintSet,
    DivergentDesign,
    LoadSkewConstraint,
    MaterializationConstraint,
    RoutingFunctions,
    SolverControls,
    TuningRequest,
    UpdateCostBound,
)
from divtune import synth

from util import two_index_workload, two_index_design


def _plain_request(alpha=0.0, n=2, m=1, constraints=None):
    return TuningRequest(
        workload=two_index_workload(), replica_count=n, multiplicity=m,
        failure_prob=alpha, constraints=constraints or ConstraintSet(),
        solver_controls=SolverControls(gap_tolerance=0.0))


def test_core_variable_kinds():
    bp = bip.build_program(_plain_request())
    kinds = {k.kind for k in bp.keys}
    assert kinds == {"s", "t", "y", "x"}
    assert bp.meta.n_replicas == 2
    assert not bp.meta.has_failures
    assert bp.num_variables == len(bp.keys) == len(bp.objective)


def test_failure_variables_appear_only_with_alpha():
    bp = bip.build_program(_plain_request(alpha=0.25))
    kinds = {k.kind for k in bp.keys}
    assert {"tf", "yf", "xf"} <= kinds
    assert bp.meta.has_failures
    # no failure routing variable targets the replica that is down
    for k in bp.keys:
        if k.kind in ("tf", "yf", "xf") and k.kind != "tf":
            assert k.replica != k.failed
    # routing to the replica that is down is pinned to zero
    pins = [c for c in bp.constraints if c.label.startswith("no_route_failed")]
    assert pins
    for row in pins:
        assert row.rel == "=" and row.rhs == 0.0


def test_constraint_families_present():
    bp = bip.build_program(_plain_request())
    labels = {c.label.split("[")[0] for c in bp.constraints}
    assert "route_query" in labels
    assert "tmpl" in labels
    assert "slot" in labels
    assert "avail" in labels


def test_space_budget_row():
    cs = ConstraintSet(space_budget=9.0)
    bp = bip.build_program(_plain_request(constraints=cs))
    rows = [c for c in bp.constraints if c.label.startswith("space")]
    assert len(rows) == 2  # one per replica
    for row in rows:
        assert row.rel == "<="
        assert row.rhs == 9.0
        # coefficients are the index sizes
        assert sorted(v for _, v in row.coeffs) == [5.0, 7.0]


def test_dropped_constant_bookkeeping():
    # base costs leave the objective and come back in the decode
    bp = bip.build_program(_plain_request())
    # one update, weight 1, base 0.5, on 2 live replicas at alpha=0
    assert bp.meta.dropped_constant == pytest.approx(1.0)


def test_embedded_design_satisfies_program():
    req = _plain_request()
    bp = bip.build_program(req)
    assignment = bip.embed_design(bp, two_index_design())
    assert bip.violations(bp, assignment) == []
    obj = bip.objective_value(bp, assignment)
    total = costmodel.total_cost(two_index_design(), req.workload, 1)
    assert obj + bp.meta.dropped_constant == pytest.approx(total)


def test_embedding_rejects_foreign_design():
    req = _plain_request()
    bp = bip.build_program(req)
    bad = DivergentDesign.make([{"I9"}, set()],
                               RoutingFunctions.make({"Q1": [1]}))
    with pytest.raises(bip.BipError):
        bip.embed_design(bp, bad)


def test_decode_reconstructs_design():
    req = _plain_request()
    bp = bip.build_program(req)
    sol = solver.solve(bp)
    assert sol.status == "optimal"
    dec = bip.decode(bp, sol.assignment, objective=sol.objective)
    assert dec.design.replica_count == 2
    assert dec.cross_check_error <= 1e-6
    assert dec.breakdown.total == pytest.approx(sol.objective +
                                                bp.meta.dropped_constant)
    # the decoded design is at least as good as the hand design
    hand = costmodel.total_cost(two_index_design(), req.workload, 1)
    assert dec.breakdown.total <= hand + 1e-9


def test_decode_cross_check_catches_corruption():
    req = _plain_request()
    bp = bip.build_program(req)
    sol = solver.solve(bp)
    # claim a wildly wrong objective for the same assignment
    with pytest.raises(bip.DecodeError):
        bip.decode(bp, sol.assignment, objective=sol.objective + 500.0)


def test_update_bound_switches_objective():
    cs = ConstraintSet(update_cost_bound=UpdateCostBound(
        fraction=0.5, reference_cost=40.0))
    bp = bip.build_program(_plain_request(constraints=cs))
    assert bp.meta.objective_kind == "query_only"
    labels = {c.label.split("[")[0] for c in bp.constraints}
    assert "update_bound" in labels


def test_materialization_row_uses_create_and_drop():
    current = DivergentDesign.make([{"I2"}, set()],
                                   RoutingFunctions.make({}))
    cs = ConstraintSet(materialization=MaterializationConstraint(
        budget=4.0, current=current))
    bp = bip.build_program(_plain_request(constraints=cs))
    rows = [c for c in bp.constraints if c.label.startswith("mat[")]
    assert len(rows) == 2
    # replica 1 currently holds I2: keeping it is free, dropping it costs
    row1 = next(r for r in rows if "[r1]" in r.label)
    coeffs = {bp.keys[i].access: v for i, v in row1.coeffs}
    assert coeffs["I1"] == 2.0          # create cost
    assert coeffs["I2"] == -1.0         # drop refunded when kept
    assert row1.rhs == pytest.approx(4.0 - 1.0)


def test_shrink_adds_live_variables():
    current = DivergentDesign.make(
        [{"I1"}, set(), {"I2"}], RoutingFunctions.make({}))
    cs = ConstraintSet(materialization=MaterializationConstraint(
        budget=10.0, current=current, target_replica_count=2))
    bp = bip.build_program(_plain_request(n=3, constraints=cs))
    assert bp.meta.has_shrink
    assert bp.meta.live_target == 2
    assert any(k.kind == "z" for k in bp.keys)
    labels = {c.label.split("[")[0] for c in bp.constraints}
    assert "live_count" in labels


def test_exact_skew_rows():
    cs = ConstraintSet(load_skew=LoadSkewConstraint(tau=1.0, mode="exact"))
    bp = bip.build_program(_plain_request(constraints=cs))
    assert bp.meta.has_opt_machinery
    labels = {c.label.split("[")[0] for c in bp.constraints}
    assert any(lbl.startswith("load") for lbl in labels)


def test_greedy_skew_needs_reference_cost():
    cs = ConstraintSet(load_skew=LoadSkewConstraint(tau=2.0, mode="greedy"))
    req = _plain_request(constraints=cs)
    with pytest.raises(bip.BipError):
        bip.build_program(req)
    bp = bip.build_program(req, greedy_opt_cost=20.0)
    assert bp.meta.greedy_beta == pytest.approx((2.0 - 1.0) / (1.0 + 1.0 * 2.0))


def test_greedy_beta_reference_value():
    # tau=2, N=3 gives beta = 1/5
    cs = ConstraintSet(load_skew=LoadSkewConstraint(tau=2.0, mode="greedy"))
    bp = bip.build_program(_plain_request(n=3, constraints=cs),
                           greedy_opt_cost=20.0)
    assert bp.meta.greedy_beta == pytest.approx(0.2)


def test_lp_export_shape():
    bp = bip.build_program(_plain_request())
    text = bip.to_lp_string(bp)
    lines = text.splitlines()
    assert lines[0].startswith("\\")  # comment header
    assert lines[1] == "Minimize"
    assert "Subject To" in lines
    assert "Binary" in lines
    assert lines[-1] == "End"
    n_rows = sum(1 for line in lines
                 if line.startswith(" c") and ":" in line)
    assert n_rows == bp.num_constraints
    # all variables are declared binary
    declared = []
    in_binary = False
    for line in lines:
        if line == "Binary":
            in_binary = True
            continue
        if line == "End":
            break
        if in_binary:
            declared.extend(line.split())
    assert len(declared) == bp.num_variables
    assert len(set(declared)) == bp.num_variables


def test_lp_export_round_trips_to_file(tmp_path):
    bp = bip.build_program(_plain_request())
    path = str(tmp_path / "prog.lp")
    bip.write_lp(bp, path)
    with open(path, "r", encoding="utf-8") as fh:
        assert fh.read() == bip.to_lp_string(bp)


def test_program_size_scales_linearly_without_failures():
    # variables and rows grow with N * statements * options, not N^2
    for seed in range(3):
        req = synth.tiny_instance(seed, variant="plain")
        bp = bip.build_program(req)
        n = bp.meta.n_replicas
        stmts = (len(req.workload.queries) + len(req.workload.updates))
        opts = len(req.workload.indexes) + 1
        assert bp.num_variables <= 16 * n * stmts * opts
        assert bp.num_constraints <= 16 * n * stmts * opts


def test_program_size_with_failures_quadratic():
    for seed in range(3):
        req = synth.tiny_instance(seed, variant="failures")
        bp = bip.build_program(req)
        n = bp.meta.n_replicas
        stmts = (len(req.workload.queries) + len(req.workload.updates))
        opts = len(req.workload.indexes) + 1
        assert bp.num_variables <= 16 * n * n * stmts * opts
        assert bp.num_constraints <= 16 * n * n * stmts * opts


def test_invalid_request_rejected():
    req = TuningRequest(workload=two_index_workload(), replica_count=0,
                        multiplicity=1)
    with pytest.raises(bip.BipError):
        bip.build_program(req)
