import pytest

from divtune import routing
from divtune.model import (
    CandidateIndex,
    DivergentDesign,
    QueryStatement,
    RoutingFunctions,
    SlotOption,
    Table,
    TemplatePlan,
    Workload,
    scan_id,
)

from util import two_index_workload, two_index_design


def _query(qid, index_costs, scan_cost=30.0, weight=1.0):
    opts = [SlotOption(scan_id("T1"), scan_cost)]
    opts += [SlotOption(a, c) for a, c in sorted(index_costs.items())]
    tpl = TemplatePlan.make(f"{qid}.p", 0.0, {"T1": opts})
    return QueryStatement(id=qid, weight=weight, templates=(tpl,))


def _design(configs, normal=None):
    return DivergentDesign.make(configs, RoutingFunctions.make(normal or {}))


def test_route_top_m_prefers_cheapest():
    q = _query("Q", {"I1": 2.0, "I2": 8.0})
    d = _design([{"I2"}, {"I1"}, set()])
    assert routing.route_top_m(q, d, 1) == (2,)
    assert routing.route_top_m(q, d, 2) == (1, 2)


def test_route_top_m_breaks_ties_by_replica_id():
    q = _query("Q", {})
    d = _design([set(), set(), set()])
    assert routing.route_top_m(q, d, 2) == (1, 2)


def test_route_top_m_rejects_bad_multiplicity():
    q = _query("Q", {})
    d = _design([set(), set()])
    with pytest.raises(routing.RoutingError):
        routing.route_top_m(q, d, 3)


def test_plan_index_vector_marks_ideal_plan():
    w = two_index_workload()
    q = w.queries[0]
    vec = routing.plan_index_vector(q, w)
    # universe order is sorted: (I1, I2); the ideal plan uses I1
    assert vec == (1, 0)


def test_similarity_routing_inherits_from_twin():
    idxs = (CandidateIndex("I1", "T1", 4.0), CandidateIndex("I2", "T1", 4.0))
    seen = _query("Q1", {"I1": 2.0})
    twin = _query("Q2", {"I1": 2.5})
    stranger = _query("Q3", {"I2": 1.0})
    w = Workload(tables=(Table(id="T1"),), indexes=idxs,
                 queries=(seen, stranger), updates=())
    d = _design([{"I1"}, {"I2"}], normal={"Q1": [1], "Q3": [2]})
    got = routing.route_by_similarity(twin, d, w, 1)
    assert got == (1,)  # inherited from Q1, the matching neighbor


def test_similarity_falls_back_to_costs():
    idxs = (CandidateIndex("I1", "T1", 4.0),)
    orphan = _query("QX", {})
    w = Workload(tables=(Table(id="T1"),), indexes=idxs,
                 queries=(), updates=())
    d = _design([{"I1"}, set()], normal={})
    got = routing.route_by_similarity(orphan, d, w, 1)
    assert got == (1,)


def test_complete_failure_routing_covers_all_scenarios():
    w = two_index_workload()
    d = two_index_design()
    filled = routing.complete_failure_routing(d, w, 1)
    fmap = filled.routing.failure_map()
    assert set(fmap) == {1, 2}
    for j, h in fmap.items():
        for qid, rs in h.items():
            assert j not in rs
            assert len(rs) == 1


def test_complete_failure_routing_prefers_surviving_specialist():
    idxs = (CandidateIndex("I1", "T1", 4.0),)
    q = _query("Q1", {"I1": 1.0})
    w = Workload(tables=(Table(id="T1"),), indexes=idxs,
                 queries=(q,), updates=())
    d = _design([set(), {"I1"}, set()], normal={"Q1": [2]})
    filled = routing.complete_failure_routing(d, w, 1)
    fmap = filled.routing.failure_map()
    # replica 2 down: the best survivor is a scan, lowest id wins
    assert fmap[2]["Q1"] == (1,)
    # replica 3 down: the specialist survives and keeps the query
    assert fmap[3]["Q1"] == (2,)


def test_complete_failure_routing_paper_literal_widens():
    w = two_index_workload()
    routing_fns = RoutingFunctions.make({"Q1": [1]})
    d = DivergentDesign.make([{"I1"}, set(), set()], routing_fns)
    filled = routing.complete_failure_routing(d, w, 1, mode="paper_literal")
    fmap = filled.routing.failure_map()
    # with N=3 survivors must keep max(m, N-1) = 2 replicas busy
    assert all(len(rs) == 2 for h in fmap.values() for rs in h.values())
