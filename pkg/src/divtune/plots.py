"""Figure rendering for reports. All figures go straight to files via the
Agg backend so the CLI works headless."""
from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .monitor import SeriesEntry  # noqa: E402
from .recommender import ParetoPoint  # noqa: E402


def save_load_profile(loads: Sequence[float], path: str,
                      title: str = "per-replica load") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    replicas = [f"r{i + 1}" for i in range(len(loads))]
    ax.bar(replicas, list(loads), color="#4878a8")
    ax.set_xlabel("replica")
    ax.set_ylabel("load")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_pareto_curves(points: Sequence[ParetoPoint], path: str,
                       title: str = "cost vs materialization budget") -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    by_n: dict[int, list[ParetoPoint]] = {}
    for p in points:
        by_n.setdefault(p.replica_count, []).append(p)
    for n, pts in sorted(by_n.items()):
        pts = sorted(pts, key=lambda p: p.fraction)
        xs = [p.fraction for p in pts]
        ys = [p.cost for p in pts]
        ax.plot(xs, ys, marker="o", label=f"{n} replicas")
    ax.set_xlabel("budget fraction")
    ax.set_ylabel("workload cost")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_improvement_series(series: Sequence[SeriesEntry], path: str,
                            threshold: Optional[float] = None,
                            title: str = "re-tuning improvement") -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [e.statement_index for e in series]
    ys = [e.improvement for e in series]
    ax.plot(xs, ys, lw=1.2, color="#a85948")
    if threshold is not None:
        ax.axhline(threshold, ls="--", color="#666666", lw=1,
                   label=f"threshold {threshold:g}")
        ax.legend()
    ax.set_xlabel("statement")
    ax.set_ylabel("improvement")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_benchmark(rows: Sequence[dict], path: str,
                   title: str = "solve time by instance size") -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    by_label: dict[str, list[dict]] = {}
    for row in rows:
        by_label.setdefault(str(row.get("label", "run")), []).append(row)
    for label, group in sorted(by_label.items()):
        group = sorted(group, key=lambda r: r["num_variables"])
        ax.plot([r["num_variables"] for r in group],
                [r["wall_time"] for r in group],
                marker="o", label=label)
    ax.set_xlabel("variables")
    ax.set_ylabel("seconds")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
