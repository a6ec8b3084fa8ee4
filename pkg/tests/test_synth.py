import pytest

from divtune import synth
from divtune.model import UpdateStatement, validate_request


def test_tiny_workload_deterministic():
    assert synth.tiny_workload(5) == synth.tiny_workload(5)
    assert synth.tiny_workload(5) != synth.tiny_workload(6)


def test_tiny_instances_validate():
    for variant in synth.TINY_VARIANTS:
        for seed in range(3):
            req = synth.tiny_instance(seed, variant)
            assert validate_request(req) == [], variant


def test_tiny_instance_unknown_variant():
    with pytest.raises(ValueError):
        synth.tiny_instance(0, "nope")


def test_disjoint_affinity_shape():
    w = synth.disjoint_affinity_workload()
    assert len(w.indexes) == 4
    assert len(w.queries) == 4
    # each query is fast under exactly one index
    for q in w.queries:
        opts = q.templates[0].slot_map()["T1"]
        index_opts = [o for o in opts if not o.access.startswith("SCAN")]
        assert len(index_opts) == 1


def test_drift_stream_phases():
    stream = synth.drift_stream(seed=0, length=600, shifts=(200, 400))
    assert len(stream) == 600

    def pool(stmt):
        sid = stmt.id if not isinstance(stmt, UpdateStatement) else stmt.id
        return "A" if "A" in sid else "B"

    assert {pool(s) for s in stream[:200]} == {"A"}
    assert {pool(s) for s in stream[200:400]} == {"B"}
    assert {pool(s) for s in stream[400:]} == {"A"}
    updates = [s for s in stream if isinstance(s, UpdateStatement)]
    assert len(updates) == 60  # every tenth statement


def test_drift_stream_deterministic():
    a = synth.drift_stream(seed=1, length=50)
    b = synth.drift_stream(seed=1, length=50)
    assert [s.id for s in a] == [s.id for s in b]


def test_monitor_catalog_pools():
    tables, idxs = synth.monitor_catalog()
    assert len(tables) == 1
    assert sorted(i.id for i in idxs) == \
           ["IA0", "IA1", "IA2", "IB0", "IB1", "IB2"]


def test_embedding_instances_have_clean_arithmetic():
    for seed in range(10):
        req = synth.embedding_instance(seed)
        assert validate_request(req) == []
        w = req.workload
        for q in w.queries:
            assert q.weight in (0.25, 0.5, 1.0, 2.0)
            for _, opts in q.templates[0].slots:
                for o in opts:
                    assert o.cost == int(o.cost)
        if req.failure_prob > 0:
            assert req.multiplicity == 1


def test_named_workloads_validate():
    from divtune.model import TuningRequest, SolverControls
    for w in (synth.disjoint_affinity_workload(),
              synth.failure_sensitive_workload(),
              synth.update_heavy_workload(),
              synth.update_tradeoff_workload(),
              synth.balanced_workload()):
        req = TuningRequest(workload=w, replica_count=2, multiplicity=1,
                            solver_controls=SolverControls())
        assert validate_request(req) == []
