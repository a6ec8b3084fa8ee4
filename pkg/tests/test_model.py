import json

import pytest

from divtune.model import (
    CandidateIndex,
    ConstraintSet,
    DivergentDesign,
    LoadSkewConstraint,
    ModelError,
    QueryStatement,
    RoutingFunctions,
    SlotOption,
    SolverControls,
    Table,
    TemplatePlan,
    TuningRequest,
    UpdateStatement,
    Workload,
    canonical_json,
    failure_routing_cardinality,
    is_scan,
    load_design,
    load_workload,
    dump_workload,
    scan_id,
    validate_design,
    validate_request,
)

from util import two_index_workload, two_index_design


def test_scan_sentinel_round_trip():
    assert is_scan(scan_id("T1"))
    assert not is_scan("I1")


def test_workload_json_round_trip(tmp_path):
    w = two_index_workload()
    path = str(tmp_path / "w.json")
    dump_workload(w, path)
    assert load_workload(path) == w


def test_workload_dict_round_trip():
    w = two_index_workload()
    assert Workload.from_dict(w.to_dict()) == w


def test_design_dict_round_trip():
    d = two_index_design()
    assert DivergentDesign.from_dict(d.to_dict()) == d


def test_load_design_accepts_bare_and_result_documents(tmp_path):
    d = two_index_design()
    bare = str(tmp_path / "design.json")
    wrapped = str(tmp_path / "result.json")
    with open(bare, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(d.to_dict()))
    with open(wrapped, "w", encoding="utf-8") as fh:
        fh.write(canonical_json({"status": "optimal", "objective": 1.0,
                                 "design": d.to_dict()}))
    assert load_design(bare) == d
    assert load_design(wrapped) == d


def test_canonical_json_is_stable():
    a = canonical_json({"b": 1, "a": [2.0, None]})
    b = canonical_json({"a": [2.0, None], "b": 1})
    assert a == b
    json.loads(a)  # well formed


def test_index_ids_sorted():
    w = two_index_workload()
    assert w.index_ids() == ("I1", "I2")
    assert w.index_by_id("I2").size == 7.0
    with pytest.raises(KeyError):
        w.index_by_id("missing")


def test_template_slots_sorted_by_table():
    tp = TemplatePlan.make("P", 1.0, {
        "T2": [SlotOption(scan_id("T2"), 5.0)],
        "T1": [SlotOption(scan_id("T1"), 4.0)],
    })
    assert [t for t, _ in tp.slots] == ["T1", "T2"]


def test_routing_lookup_contract():
    r = RoutingFunctions.make({"Q1": [2, 1]}, {1: {"Q1": [2]}})
    # replicas come back sorted
    assert r.replicas_for("Q1") == (1, 2)
    assert r.failure_replicas_for("Q1", 1) == (2,)
    with pytest.raises(KeyError):
        r.replicas_for("Q9")
    with pytest.raises(KeyError):
        r.failure_replicas_for("Q1", 2)
    assert r.normal_map().get("Q9", ()) == ()


def test_failure_routing_cardinality_modes():
    assert failure_routing_cardinality(1, 3, "min") == 1
    assert failure_routing_cardinality(2, 3, "min") == 2
    assert failure_routing_cardinality(3, 3, "min") == 2
    # the alternative reading keeps every survivor busy
    assert failure_routing_cardinality(2, 3, "paper_literal") == 2
    assert failure_routing_cardinality(1, 3, "paper_literal") == 2
    with pytest.raises(ValueError):
        failure_routing_cardinality(1, 3, "bogus")


def test_malformed_workload_payload_raises():
    with pytest.raises(ModelError):
        Workload.from_dict({"queries": [{"weight": "not numeric"}]})


def test_validate_request_flags_bad_fields():
    w = two_index_workload()
    bad = TuningRequest(workload=w, replica_count=0, multiplicity=1)
    fields = {v.field for v in validate_request(bad)}
    assert "replica_count" in fields

    bad = TuningRequest(workload=w, replica_count=2, multiplicity=3)
    fields = {v.field for v in validate_request(bad)}
    assert "multiplicity" in fields

    bad = TuningRequest(workload=w, replica_count=2, multiplicity=1,
                        failure_prob=1.5)
    fields = {v.field for v in validate_request(bad)}
    assert "failure_prob" in fields

    good = TuningRequest(workload=w, replica_count=2, multiplicity=1,
                         failure_prob=0.2,
                         constraints=ConstraintSet(space_budget=20.0))
    assert validate_request(good) == []


def test_validate_request_rejects_negative_skew():
    w = two_index_workload()
    req = TuningRequest(workload=w, replica_count=2, multiplicity=1,
                        constraints=ConstraintSet(
                            load_skew=LoadSkewConstraint(tau=-1.0)))
    assert any(v.field == "constraints.load_skew.tau"
               for v in validate_request(req))


def test_validate_design_checks_shape():
    w = two_index_workload()
    req = TuningRequest(workload=w, replica_count=2, multiplicity=1)
    good = two_index_design()
    assert validate_design(good, req) == []

    unknown = DivergentDesign.make([{"I9"}, set()],
                                   RoutingFunctions.make({"Q1": [1]}))
    assert any(v.field.startswith("configs")
               for v in validate_design(unknown, req))

    overwide = DivergentDesign.make(
        [set(), set()], RoutingFunctions.make({"Q1": [1, 2]}))
    assert any(v.field.startswith("routing.normal")
               for v in validate_design(overwide, req))

    missing = DivergentDesign.make([set(), set()], RoutingFunctions.make({}))
    assert any(v.rule == "missing entry"
               for v in validate_design(missing, req))


def test_request_dict_round_trip():
    w = two_index_workload()
    req = TuningRequest(workload=w, replica_count=2, multiplicity=1,
                        failure_prob=0.2,
                        constraints=ConstraintSet(space_budget=12.0),
                        solver_controls=SolverControls(gap_tolerance=0.0),
                        routing_cardinality_mode="paper_literal")
    assert TuningRequest.from_dict(req.to_dict()) == req


def test_update_statement_helpers():
    w = two_index_workload()
    u = w.updates[0]
    assert u.ucost("I1") == 4.0
    assert u.ucost("missing") == 0.0
    assert u.ucost_map() == {"I1": 4.0, "I2": 6.0}


def test_table_defaults():
    t = Table.from_dict({"id": "T9"})
    assert t.row_count == 0.0
    i = CandidateIndex.from_dict({"id": "I9", "table_id": "T9", "size": 3})
    assert i.create_cost == 0.0 and i.drop_cost == 0.0
