import pytest

from divtune import monitor, synth
from divtune.model import DivergentDesign, RoutingFunctions


def _config(**kw):
    tables, idxs = synth.monitor_catalog()
    base = dict(tables=tables, indexes=idxs, replica_count=2,
                multiplicity=1, window_size=8, space_budget=24.0,
                time_limit=2.0, gap_tolerance=0.0,
                improvement_threshold=0.2)
    base.update(kw)
    return monitor.MonitorConfig(**base)


def test_start_deploys_empty_design():
    state = monitor.start(_config())
    assert state.design.replica_count == 2
    assert all(not c for c in state.design.configs)
    assert state.series == []


def test_config_dict_round_trip():
    cfg = _config()
    assert monitor.MonitorConfig.from_dict(cfg.to_dict()) == cfg


def test_window_slides_and_aggregates():
    cfg = _config(window_size=4)
    state = monitor.start(cfg)
    for _ in range(3):
        monitor.observe(state, synth.phase_statement("A", 0))
    w = monitor.window_workload(state)
    # three sightings of the same query fold into one weighted entry
    assert len(w.queries) == 1
    assert w.queries[0].weight == pytest.approx(3.0)

    for _ in range(4):
        monitor.observe(state, synth.phase_statement("A", 1))
    w = monitor.window_workload(state)
    # the window holds only the newest four statements now
    assert [q.id for q in w.queries] == ["QA1"]
    assert w.queries[0].weight == pytest.approx(4.0)


def test_improvement_rises_when_new_queries_need_missing_indexes():
    cfg = _config(window_size=6)
    state = monitor.start(cfg)
    for _ in range(6):
        monitor.observe(state, synth.phase_statement("A", 0))
    settled = state.series[-1].improvement
    # a never-seen query served only by a missing index
    entries = [monitor.observe(state, synth.phase_statement("B", 2))
               for _ in range(3)]
    assert max(e.improvement for e in entries) > settled


def test_redeploy_only_above_threshold():
    cfg = _config(window_size=6, improvement_threshold=0.99)
    state = monitor.start(cfg)
    for k in range(12):
        monitor.observe(state, synth.phase_statement("A", k % 3))
    # nothing can beat the deployed design by 99 percent forever
    assert state.redeploy_count <= 1
    assert all(not c for c in state.design.configs) or state.redeploy_count == 1


def test_redeploy_fires_with_low_threshold():
    cfg = _config(window_size=6, improvement_threshold=0.05)
    state = monitor.start(cfg)
    for k in range(6):
        monitor.observe(state, synth.phase_statement("A", k % 3))
    assert state.redeploy_count >= 1
    assert any(c for c in state.design.configs)


def test_timeout_keeps_deployment():
    cfg = _config(time_limit=1e-9)
    state = monitor.start(cfg)
    before = state.design
    entry = monitor.observe(state, synth.phase_statement("A", 0))
    assert entry.status == "timeout_best_known"
    assert state.design == before
    assert state.redeploy_count == 0


def test_replay_matches_incremental_observe():
    cfg = _config(window_size=6)
    stream = synth.drift_stream(seed=3, length=40)
    replayed = monitor.replay(cfg, stream)

    state = monitor.start(cfg)
    for stmt in stream:
        monitor.observe(state, stmt)
    assert [e.improvement for e in replayed.series] == \
           [e.improvement for e in state.series]
    assert replayed.design == state.design


def test_initial_design_is_respected():
    cfg = _config()
    tables, idxs = synth.monitor_catalog()
    seed_design = DivergentDesign.make(
        [{"IA0"}, set()], RoutingFunctions.make({}))
    state = monitor.start(cfg, initial_design=seed_design)
    assert state.design == seed_design


def test_series_entries_are_complete():
    cfg = _config()
    state = monitor.start(cfg)
    for i in range(5):
        monitor.observe(state, synth.phase_statement("A", i % 3))
    assert [e.statement_index for e in state.series] == [1, 2, 3, 4, 5]
    for e in state.series:
        assert e.status in ("optimal", "feasible_within_gap",
                            "timeout_best_known")
        assert e.solve_time >= 0.0
