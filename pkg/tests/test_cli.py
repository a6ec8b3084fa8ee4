import csv
import json
import os

import pytest

from divtune import cli, synth
from divtune.model import canonical_json, dump_workload


@pytest.fixture()
def workload_file(tmp_path):
    path = str(tmp_path / "workload.json")
    dump_workload(synth.balanced_workload(), path)
    return path


def _run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tune_emits_json(capsys, workload_file):
    code, out, err = _run(capsys, [
        "tune", "--workload", workload_file, "--replicas", "2",
        "--space-budget", "10", "--gap", "0"])
    assert code == 0, err
    payload = json.loads(out)
    assert payload["status"] == "optimal"
    assert payload["design"]["replica_count"] == 2


def test_tune_report_writes_files(capsys, workload_file, tmp_path):
    report = str(tmp_path / "report")
    code, out, err = _run(capsys, [
        "tune", "--workload", workload_file, "--replicas", "2",
        "--space-budget", "10", "--gap", "0", "--report", report])
    assert code == 0, err
    assert os.path.exists(os.path.join(report, "loads.csv"))
    assert os.path.exists(os.path.join(report, "loads.png"))
    assert os.path.exists(os.path.join(report, "design.json"))
    with open(os.path.join(report, "loads.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["replica"] for r in rows] == ["1", "2"]


def test_pareto_report(capsys, workload_file, tmp_path):
    report = str(tmp_path / "report")
    code, out, err = _run(capsys, [
        "pareto", "--workload", workload_file, "--replicas", "2",
        "--fractions", "0,1", "--gap", "0", "--report", report])
    assert code == 0, err
    payload = json.loads(out)
    assert len(payload["points"]) == 2
    with open(os.path.join(report, "pareto.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert os.path.exists(os.path.join(report, "pareto.png"))


def test_baseline_unif(capsys, workload_file):
    code, out, err = _run(capsys, [
        "baseline", "--workload", workload_file, "--kind", "unif",
        "--replicas", "2", "--space-budget", "10"])
    assert code == 0, err
    payload = json.loads(out)
    assert payload["kind"] == "unif"
    assert payload["total_cost"] > 0


def test_baseline_divg(capsys, workload_file):
    code, out, err = _run(capsys, [
        "baseline", "--workload", workload_file, "--kind", "divg",
        "--replicas", "2", "--space-budget", "10", "--seed", "3"])
    assert code == 0, err
    payload = json.loads(out)
    assert payload["kind"] == "divg"
    assert payload["iterations"] >= 1


def test_route_designed_query(capsys, workload_file, tmp_path):
    design_path = str(tmp_path / "design.json")
    code, out, err = _run(capsys, [
        "tune", "--workload", workload_file, "--replicas", "2",
        "--gap", "0", "--report", str(tmp_path)])
    assert code == 0, err
    capsysed = json.loads(out)
    code, out, err = _run(capsys, [
        "route", "--workload", workload_file,
        "--design", str(tmp_path / "design.json"), "--query", "Q0"])
    assert code == 0, err
    payload = json.loads(out)
    assert payload["method"] == "designed"
    assert payload["replicas"] == \
        capsysed["design"]["routing"]["normal"]["Q0"]
    assert set(payload["costs"]) == {"1", "2"}


def test_route_unseen_query_uses_fallback(capsys, workload_file, tmp_path):
    _run(capsys, ["tune", "--workload", workload_file, "--replicas", "2",
                  "--gap", "0", "--report", str(tmp_path)])
    unseen = synth.phase_statement("A", 0).to_dict()
    qpath = str(tmp_path / "query.json")
    with open(qpath, "w") as fh:
        fh.write(canonical_json(unseen))
    code, out, err = _run(capsys, [
        "route", "--workload", workload_file,
        "--design", str(tmp_path / "design.json"), "--query-file", qpath])
    assert code == 0, err
    payload = json.loads(out)
    assert payload["method"] == "top_m"
    assert len(payload["replicas"]) == 1


def test_monitor_replay(capsys, tmp_path):
    tables, idxs = synth.monitor_catalog()
    doc = {
        "config": {
            "tables": [t.to_dict() for t in tables],
            "indexes": [i.to_dict() for i in idxs],
            "replica_count": 2,
            "multiplicity": 1,
            "window_size": 6,
            "space_budget": 24.0,
            "time_limit": 2.0,
            "gap_tolerance": 0.0,
            "improvement_threshold": 0.2,
        },
        "stream": [
            {"kind": "query", "statement": synth.phase_statement("A", k % 3).to_dict()}
            for k in range(12)
        ],
    }
    stream_path = str(tmp_path / "stream.json")
    with open(stream_path, "w") as fh:
        fh.write(canonical_json(doc))
    report = str(tmp_path / "mon")
    code, out, err = _run(capsys, [
        "monitor", "--stream", stream_path, "--report", report])
    assert code == 0, err
    payload = json.loads(out)
    assert len(payload["series"]) == 12
    assert payload["redeploy_count"] >= 1
    assert os.path.exists(os.path.join(report, "series.csv"))
    assert os.path.exists(os.path.join(report, "series.png"))


def test_oracle_matches_tune(capsys, tmp_path):
    path = str(tmp_path / "tiny.json")
    dump_workload(synth.tiny_workload(1), path)
    code, out, err = _run(capsys, [
        "oracle", "--workload", path, "--replicas", "2", "--gap", "0"])
    assert code == 0, err
    oracle_payload = json.loads(out)
    code, out, err = _run(capsys, [
        "tune", "--workload", path, "--replicas", "2", "--gap", "0"])
    assert code == 0, err
    tune_payload = json.loads(out)
    assert tune_payload["breakdown"]["total"] == \
        pytest.approx(oracle_payload["cost"], rel=1e-6)


def test_export_lp(capsys, workload_file, tmp_path):
    out_path = str(tmp_path / "prog.lp")
    code, out, err = _run(capsys, [
        "export-lp", "--workload", workload_file, "--replicas", "2",
        "--out", out_path])
    assert code == 0, err
    with open(out_path) as fh:
        text = fh.read()
    assert "Minimize" in text and text.rstrip().endswith("End")


def test_bench_writes_report(capsys, tmp_path):
    report = str(tmp_path / "bench")
    code, out, err = _run(capsys, [
        "bench", "--seeds", "1", "--report", report])
    assert code == 0, err
    with open(os.path.join(report, "bench.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # four variants, one seed
    assert os.path.exists(os.path.join(report, "bench.png"))


def test_missing_file_is_machine_readable(capsys):
    code, out, err = _run(capsys, [
        "tune", "--workload", "/nonexistent/w.json"])
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["type"] == "not_found"


def test_bad_json_is_machine_readable(capsys, tmp_path):
    path = str(tmp_path / "broken.json")
    with open(path, "w") as fh:
        fh.write("{not json")
    code, out, err = _run(capsys, ["tune", "--workload", path])
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["type"] == "parse"


def test_invalid_request_is_machine_readable(capsys, workload_file):
    code, out, err = _run(capsys, [
        "tune", "--workload", workload_file, "--replicas", "2",
        "--multiplicity", "5"])
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["type"] == "validation"


def test_out_flag_writes_file(capsys, workload_file, tmp_path):
    out_path = str(tmp_path / "result.json")
    code, out, err = _run(capsys, [
        "baseline", "--workload", workload_file, "--kind", "unif",
        "--out", out_path])
    assert code == 0, err
    assert out == ""
    with open(out_path) as fh:
        payload = json.load(fh)
    assert payload["kind"] == "unif"
