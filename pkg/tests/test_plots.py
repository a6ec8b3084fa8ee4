import os

from divtune import monitor, plots, synth
from divtune.recommender import ParetoPoint


def _png_ok(path):
    assert os.path.exists(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
    assert magic[:4] == b"\x89PNG"
    assert os.path.getsize(path) > 500


def test_save_load_profile(tmp_path):
    path = str(tmp_path / "loads.png")
    plots.save_load_profile((12.0, 8.5, 14.25), path)
    _png_ok(path)


def test_save_pareto_curves(tmp_path):
    pts = [ParetoPoint(replica_count=n, multiplicity=1, fraction=f,
                       budget=f * 10.0, cost=100.0 - 20.0 * f,
                       status="optimal", wall_time=0.01)
           for n in (2, 3) for f in (0.0, 0.5, 1.0)]
    path = str(tmp_path / "pareto.png")
    plots.save_pareto_curves(pts, path)
    _png_ok(path)


def test_save_improvement_series(tmp_path):
    entries = [monitor.SeriesEntry(statement_index=i + 1,
                                   improvement=0.01 * i,
                                   solve_time=0.001, status="optimal")
               for i in range(30)]
    path = str(tmp_path / "series.png")
    plots.save_improvement_series(entries, path, threshold=0.2)
    _png_ok(path)


def test_save_benchmark(tmp_path):
    rows = [{"label": lbl, "seed": s, "num_variables": 40 + s,
             "num_constraints": 30 + s, "status": "optimal",
             "objective": 10.0, "nodes": 3, "wall_time": 0.01 * (s + 1)}
            for lbl in ("plain", "budget") for s in range(3)]
    path = str(tmp_path / "bench.png")
    plots.save_benchmark(rows, path)
    _png_ok(path)
