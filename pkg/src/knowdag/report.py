"""Figure rendering for campaign and real-data result stores.

Figures are written next to the CSV tables so a results directory is
self-contained: delta summaries as bar charts with standard-error bars, and
metric trajectories against the induction step.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graphs import METRIC_NAMES
from .runner import aggregate_results, load_all_records, write_tables

METRIC_LABELS = {"fdr": "FDR", "tpr": "TPR", "fpr": "FPR", "shd": "SHD/d"}


def render_delta_summary(summary: dict, path: Path) -> None:
    """Grouped bars of mean delta per metric, split by knowledge kind."""
    rows = [r for r in summary["delta_tests"] if r["delta"] == 1 and r["kind"] != "all"]
    kinds = sorted({r["kind"] for r in rows})
    if not rows:
        rows = [r for r in summary["delta_tests"] if r["delta"] == 1]
        kinds = sorted({r["kind"] for r in rows})
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(kinds), 1)
    xs = np.arange(len(METRIC_NAMES))
    for idx, kind in enumerate(kinds):
        means = []
        errs = []
        for m in METRIC_NAMES:
            match = [r for r in rows if r["kind"] == kind and r["metric"] == m]
            means.append(match[0]["mean"] if match else 0.0)
            errs.append(match[0]["stderr"] if match else 0.0)
        ax.bar(xs + idx * width, means, width, yerr=errs, capsize=3, label=kind)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(xs + width * (len(kinds) - 1) / 2)
    ax.set_xticklabels([METRIC_LABELS[m] for m in METRIC_NAMES])
    ax.set_ylabel("mean change after one piece of knowledge")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trajectories(trajectories: list[list[dict]], path: Path) -> None:
    """Mean metric value per induction step, averaged over trajectories."""
    if not trajectories:
        return
    max_k = max(r["k"] for records in trajectories for r in records)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, metric in zip(axes.ravel(), METRIC_NAMES):
        means = []
        ks = list(range(max_k + 1))
        for k in ks:
            vals = [
                r["metrics_pred"]["shd_per_node" if metric == "shd" else metric]
                for records in trajectories
                for r in records
                if r["k"] == k
            ]
            means.append(np.mean(vals) if vals else np.nan)
        ax.plot(ks, means, marker="o")
        ax.set_title(METRIC_LABELS[metric])
        ax.set_xlabel("induction step")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(out_dir: str | Path, alpha: float = 0.05) -> dict:
    """Re-aggregate a result store and write tables and figures.

    Pure fold over the persisted trajectory files; the solver is not run.
    """
    out = Path(out_dir)
    summary = aggregate_results(out, alpha=alpha)
    write_tables(summary, out / "tables")
    figures = out / "figures"
    figures.mkdir(parents=True, exist_ok=True)
    render_delta_summary(summary, figures / "delta_summary.png")
    render_trajectories(load_all_records(out), figures / "metric_trajectories.png")
    return summary
