"""Config-driven experiment campaigns, persistence, and aggregation.

A campaign is a grid of (graph model, d, n, s0) cells with several seeded
trials each. Every trial generates a ground truth, simulates data, runs the
sequential induction protocol, and persists one JSON-lines trajectory file.
Aggregation is a pure fold over those files: it never reruns the solver, so
tables and figures can be regenerated at any time from the result store.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .errors import ParameterError
from .graphs import (
    DirectedGraph,
    METRIC_NAMES,
    generate_er_dag,
    generate_sf_dag,
    read_adjacency_csv,
    read_edge_list,
)
from .induction import (
    KindFilter,
    KnowledgeSource,
    Variant,
    read_trajectory_records,
    run_induction,
    write_trajectory,
)
from .rng import derive_seed
from .sem import DataMatrix, load_csv_dataset, simulate_index_sem
from .solver import SolverConfig
from .stats import TestReport, one_sample_t, summarize, two_sample_t

GRAPH_TYPES = ("er", "sf")


@dataclass(frozen=True)
class ExperimentConfig:
    graph_types: tuple[str, ...] = ("er",)
    d_values: tuple[int, ...] = (10,)
    n_values: tuple[int, ...] = (200,)
    s0_factors: tuple[int, ...] = (1,)
    trials: int = 10
    steps: int = 3
    variant: Variant = Variant.MISCLASSIFIED
    kinds: KindFilter = KindFilter.BOTH
    noise_scale: float = 1.0
    standardize: bool = False
    master_seed: int = 0
    alpha: float = 0.05
    workers: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        for gt in self.graph_types:
            if gt not in GRAPH_TYPES:
                raise ParameterError(f"unknown graph type {gt!r}")
        if self.trials < 1 or self.steps < 0 or self.workers < 1:
            raise ParameterError("trials >= 1, steps >= 0 and workers >= 1 required")

    @property
    def source(self) -> KnowledgeSource:
        return KnowledgeSource(self.variant, self.kinds)

    def cells(self) -> list["Cell"]:
        return [
            Cell(gt, d, n, f * d)
            for gt in self.graph_types
            for d in self.d_values
            for n in self.n_values
            for f in self.s0_factors
        ]

    def to_mapping(self) -> dict:
        return {
            "graph_types": list(self.graph_types),
            "d_values": list(self.d_values),
            "n_values": list(self.n_values),
            "s0_factors": list(self.s0_factors),
            "trials": self.trials,
            "steps": self.steps,
            "source": self.variant.value,
            "kinds": self.kinds.value,
            "noise_scale": self.noise_scale,
            "standardize": self.standardize,
            "seed": self.master_seed,
            "alpha": self.alpha,
            "workers": self.workers,
            "solver": self.solver.to_mapping(),
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_mapping(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_ini(cls, path: str | Path) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ParameterError(f"cannot read config file {path}")
        exp = dict(parser["experiment"]) if parser.has_section("experiment") else {}
        kwargs = {}
        if "graph_types" in exp:
            kwargs["graph_types"] = tuple(_split_list(exp["graph_types"]))
        if "d" in exp:
            kwargs["d_values"] = tuple(int(v) for v in _split_list(exp["d"]))
        if "n" in exp:
            kwargs["n_values"] = tuple(int(v) for v in _split_list(exp["n"]))
        if "s0_factors" in exp:
            kwargs["s0_factors"] = tuple(int(v) for v in _split_list(exp["s0_factors"]))
        for key, cast in (
            ("trials", int), ("steps", int), ("noise_scale", float),
            ("seed", int), ("alpha", float), ("workers", int),
        ):
            name = "master_seed" if key == "seed" else key
            if key in exp:
                kwargs[name] = cast(exp[key])
        if "source" in exp:
            kwargs["variant"] = Variant(exp["source"])
        if "kinds" in exp:
            kwargs["kinds"] = KindFilter(exp["kinds"])
        if "standardize" in exp:
            kwargs["standardize"] = exp["standardize"].lower() in ("1", "true", "yes")
        if parser.has_section("solver"):
            kwargs["solver"] = SolverConfig.from_mapping(dict(parser["solver"]))
        return cls(**kwargs)


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass(frozen=True)
class Cell:
    graph_type: str
    d: int
    n: int
    s0: int

    @property
    def tag(self) -> str:
        return f"{self.graph_type}_d{self.d}_n{self.n}_s{self.s0}"


def full_grid(**overrides) -> ExperimentConfig:
    """The full 16-combination simulation grid with 10 trials per cell."""
    base = ExperimentConfig(
        graph_types=("er", "sf"),
        d_values=(10, 20),
        n_values=(200, 1000),
        s0_factors=(1, 4),
        trials=10,
    )
    return replace(base, **overrides)


def generate_cell_truth(cell: Cell, config: ExperimentConfig, trial: int) -> DirectedGraph:
    seed = derive_seed(config.master_seed, _gt_code(cell.graph_type),
                       cell.d, cell.n, cell.s0, trial, 0)
    if cell.graph_type == "er":
        return generate_er_dag(cell.d, cell.s0, seed)
    return generate_sf_dag(cell.d, cell.s0, seed)


def _gt_code(graph_type: str) -> int:
    return GRAPH_TYPES.index(graph_type)


def run_cell_trial(cell: Cell, trial: int, config: ExperimentConfig, out_path: Path) -> Path:
    """Run one (cell, trial) and persist its trajectory; returns the path."""
    code = _gt_code(cell.graph_type)
    truth = generate_cell_truth(cell, config, trial)
    sem_seed = derive_seed(config.master_seed, code, cell.d, cell.n, cell.s0, trial, 1)
    data = simulate_index_sem(truth, cell.n, config.noise_scale, sem_seed)
    if config.standardize:
        values = data.values
        data = DataMatrix((values - values.mean(axis=0)) / values.std(axis=0))
    ind_seed = derive_seed(config.master_seed, code, cell.d, cell.n, cell.s0, trial, 2)
    traj = run_induction(data, truth, config.steps, config.source, config.solver, ind_seed)
    provenance = {
        "cell": cell.tag,
        "trial": trial,
        "master_seed": config.master_seed,
        "config_hash": config.config_hash(),
        "version": __version__,
        "truth_edges": sorted(truth.edges),
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory(traj, out_path, provenance)
    return out_path


def trajectory_path(out_dir: str | Path, cell: Cell, trial: int) -> Path:
    return Path(out_dir) / "trajectories" / cell.tag / f"trial{trial:02d}.jsonl"


def _run_job(args) -> tuple[str, int, str | None]:
    cell, trial, config, path = args
    try:
        run_cell_trial(cell, trial, config, path)
        return cell.tag, trial, None
    except Exception as exc:  # cell failures must not sink the campaign
        return cell.tag, trial, f"{type(exc).__name__}: {exc}"


def run_campaign(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Run all missing (cell, trial) jobs, then aggregate and render tables.

    Existing trajectory files are kept as-is, so an interrupted campaign can
    be resumed by rerunning with the same config and output directory.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "campaign.json").write_text(
        json.dumps({"config": config.to_mapping(), "config_hash": config.config_hash(),
                    "version": __version__}, indent=2, sort_keys=True) + "\n"
    )
    jobs = []
    for cell in config.cells():
        for trial in range(config.trials):
            path = trajectory_path(out, cell, trial)
            if not path.exists():
                jobs.append((cell, trial, config, path))

    failures: list[dict] = []
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for tag, trial, err in pool.map(_run_job, jobs):
                if err:
                    failures.append({"cell": tag, "trial": trial, "error": err})
    else:
        for job in jobs:
            tag, trial, err = _run_job(job)
            if err:
                failures.append({"cell": tag, "trial": trial, "error": err})
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")

    summary = aggregate_results(out, alpha=config.alpha)
    summary["failures"] = failures
    write_tables(summary, out / "tables")
    return summary


# --- aggregation -----------------------------------------------------------


def load_all_records(out_dir: str | Path) -> list[list[dict]]:
    """All persisted trajectories, one list of step records per file."""
    root = Path(out_dir) / "trajectories"
    if not root.exists():
        return []
    return [read_trajectory_records(p) for p in sorted(root.glob("**/*.jsonl"))]


def _metric_value(record: dict, metric: str, expected: bool = False) -> float:
    block = record["metrics_expected"] if expected else record["metrics_pred"]
    return block["shd_per_node"] if metric == "shd" else block[metric]


def collect_deltas(trajectories: list[list[dict]], max_delta: int = 2) -> list[dict]:
    """Flatten (trajectory, base step, delta) into one pooled sample table.

    Each entry carries the empirical delta, the expected-graph delta, the
    knowledge kind driving the increment ('active', 'inactive', or 'mixed'),
    and enough provenance to slice by cell or step later.
    """
    samples = []
    for records in trajectories:
        by_k = {r["k"]: r for r in records}
        for base in sorted(by_k):
            for delta in range(1, max_delta + 1):
                hi = base + delta
                if hi not in by_k:
                    continue
                kinds = {by_k[b]["selected"]["kind"] for b in range(base + 1, hi + 1)}
                kind = kinds.pop() if len(kinds) == 1 else "mixed"
                entry = {
                    "delta": delta,
                    "base": base,
                    "kind": kind,
                    "cell": by_k[hi].get("provenance", {}).get("cell", ""),
                    "trial": by_k[hi].get("provenance", {}).get("trial", -1),
                }
                for m in METRIC_NAMES:
                    entry[m] = _metric_value(by_k[hi], m) - _metric_value(by_k[base], m)
                    if by_k[hi].get("metrics_expected") is not None:
                        entry[f"{m}_expected"] = (
                            _metric_value(by_k[hi], m, expected=True)
                            - _metric_value(by_k[base], m)
                        )
                samples.append(entry)
    return samples


def _group(samples: list[dict], delta: int, kind: str | None) -> list[dict]:
    out = [s for s in samples if s["delta"] == delta]
    if kind is not None:
        out = [s for s in out if s["kind"] == kind]
    return out


def aggregate_results(out_dir: str | Path, alpha: float = 0.05) -> dict:
    """Pooled one-sample and comparison statistics for every metric and delta."""
    trajectories = load_all_records(out_dir)
    samples = collect_deltas(trajectories)
    kinds_present = sorted({s["kind"] for s in samples})
    rows_one = []
    rows_cmp_kind = []
    rows_exp = []
    for delta in (1, 2):
        for kind in [None, *kinds_present]:
            group = _group(samples, delta, kind)
            for metric in METRIC_NAMES:
                values = [s[metric] for s in group]
                if len(values) >= 2:
                    rows_one.append(_one_sample_row(metric, delta, kind or "all", values, alpha))
                exp_values = [s[f"{metric}_expected"] for s in group if f"{metric}_expected" in s]
                if len(values) >= 2 and len(exp_values) >= 2:
                    rows_exp.append(
                        _comparison_row(metric, delta, kind or "all", values, exp_values, alpha)
                    )
        active = _group(samples, delta, "active")
        inactive = _group(samples, delta, "inactive")
        if len(active) >= 2 and len(inactive) >= 2:
            for metric in METRIC_NAMES:
                rows_cmp_kind.append(
                    _kind_comparison_row(
                        metric, delta,
                        [s[metric] for s in inactive], [s[metric] for s in active], alpha,
                    )
                )
    return {
        "n_trajectories": len(trajectories),
        "n_samples": len(samples),
        "delta_tests": rows_one,
        "active_vs_inactive": rows_cmp_kind,
        "empirical_vs_expected": rows_exp,
        "samples": samples,
    }


def _report_dict(r: TestReport) -> dict:
    return {
        "mean": r.mean, "stderr": r.stderr, "mean_pm_stderr": r.summary(),
        "t_stat": r.t_stat, "p_value": r.p_value, "significant": r.significant,
        "n": r.n,
    }


def _one_sample_row(metric, delta, kind, values, alpha) -> dict:
    try:
        rep = one_sample_t(values, alpha)
        stats_block = _report_dict(rep)
        direction = -1 if metric != "tpr" else 1
        if not rep.significant:
            remark = "not significant"
        elif rep.mean * direction > 0:
            remark = "significant improvement"
        else:
            remark = "significant deterioration"
    except Exception:
        mean, se = summarize(values)
        stats_block = {"mean": mean, "stderr": se,
                       "mean_pm_stderr": f"{mean:.5f} \u00b1 {se:.5f}",
                       "t_stat": None, "p_value": None,
                       "significant": False, "n": len(values)}
        remark = "degenerate sample"
    return {"metric": metric, "delta": delta, "kind": kind, **stats_block, "remark": remark}


def _comparison_row(metric, delta, kind, empirical, expected, alpha) -> dict:
    """Welch is the primary test; the paired variant (one-sample t on the
    per-transition differences) is reported alongside since the two sample
    lists are matched by (trajectory, base step)."""
    emp_mean, emp_se = summarize(empirical)
    exp_mean, exp_se = summarize(expected)
    try:
        rep = two_sample_t(empirical, expected, alpha)
        p, t, sig = rep.p_value, rep.t_stat, rep.significant
    except Exception:
        p, t, sig = None, None, False
    paired_p = paired_t = None
    if len(empirical) == len(expected):
        try:
            diffs = [e - x for e, x in zip(empirical, expected)]
            paired = one_sample_t(diffs, alpha)
            paired_p, paired_t = paired.p_value, paired.t_stat
        except Exception:
            pass
    return {
        "metric": metric, "delta": delta, "kind": kind,
        "empirical_mean": emp_mean, "empirical_stderr": emp_se,
        "expected_mean": exp_mean, "expected_stderr": exp_se,
        "p_value": p, "t_stat": t, "test": "welch",
        "paired_p_value": paired_p, "paired_t_stat": paired_t,
        "remark": "difference" if sig else "no difference",
    }


def _kind_comparison_row(metric, delta, inactive, active, alpha) -> dict:
    in_mean, in_se = summarize(inactive)
    ac_mean, ac_se = summarize(active)
    try:
        rep = two_sample_t(inactive, active, alpha)
        p, t, sig = rep.p_value, rep.t_stat, rep.significant
    except Exception:
        p, t, sig = None, None, False
    direction = -1 if metric != "tpr" else 1
    if not sig:
        better = "no difference"
    else:
        better = "inactive" if (in_mean - ac_mean) * direction > 0 else "active"
    return {
        "metric": metric, "delta": delta,
        "inactive_mean": in_mean, "inactive_stderr": in_se,
        "active_mean": ac_mean, "active_stderr": ac_se,
        "p_value": p, "t_stat": t, "better": better,
    }


# --- table output -----------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_csv(rows: list[dict], columns: list[str], path: Path) -> None:
    lines = [",".join(columns)]
    lines += [",".join(_fmt(row.get(c)) for c in columns) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_tables(summary: dict, tables_dir: str | Path) -> list[Path]:
    tables_dir = Path(tables_dir)
    tables_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = tables_dir / "delta_tests.csv"
    write_csv(
        summary["delta_tests"],
        ["metric", "delta", "kind", "mean", "stderr", "mean_pm_stderr",
         "p_value", "t_stat", "n", "remark"],
        path,
    )
    written.append(path)

    path = tables_dir / "active_vs_inactive.csv"
    write_csv(
        summary["active_vs_inactive"],
        ["metric", "delta", "inactive_mean", "inactive_stderr",
         "active_mean", "active_stderr", "p_value", "t_stat", "better"],
        path,
    )
    written.append(path)

    path = tables_dir / "empirical_vs_expected.csv"
    write_csv(
        summary["empirical_vs_expected"],
        ["metric", "delta", "kind", "empirical_mean", "empirical_stderr",
         "expected_mean", "expected_stderr", "test", "p_value", "t_stat",
         "paired_p_value", "paired_t_stat", "remark"],
        path,
    )
    written.append(path)
    return written


# --- real-data pipeline ------------------------------------------------------


def read_truth_file(path: str | Path) -> DirectedGraph:
    for line in Path(path).read_text().splitlines():
        bare = line.split("#", 1)[0].strip()
        if bare:
            if bare.startswith("d="):
                return read_edge_list(path)
            break
    return read_adjacency_csv(path)


def run_real_data(
    data_path: str | Path,
    truth_path: str | Path,
    out_dir: str | Path,
    config: ExperimentConfig,
) -> dict:
    """Induction against a consensus edge set on a real dataset.

    Knowledge is drawn from consensus edges the model has not yet recovered
    (known-active only). Reports delta TPR, delta fraction of predicted
    edges agreeing with the consensus, and delta fraction reversed.
    """
    truth = read_truth_file(truth_path)
    data = load_csv_dataset(data_path, standardize=config.standardize)
    if data.d != truth.d:
        raise ParameterError(f"data has d={data.d} but truth graph has d={truth.d}")
    out = Path(out_dir)
    source = KnowledgeSource(Variant.MISCLASSIFIED, KindFilter.ACTIVE_ONLY)
    if truth.n_edges == 0:
        empty = {"warning": "empty_knowledge_source", "rows": [], "n_trajectories": 0}
        out.mkdir(parents=True, exist_ok=True)
        (out / "real_data.json").write_text(json.dumps(empty, indent=2) + "\n")
        return empty

    for trial in range(config.trials):
        path = out / "trajectories" / "real" / f"trial{trial:02d}.jsonl"
        if path.exists():
            continue
        seed = derive_seed(config.master_seed, 99, trial)
        traj = run_induction(data, truth, config.steps, source, config.solver, seed)
        provenance = {"cell": "real", "trial": trial, "master_seed": config.master_seed,
                      "config_hash": config.config_hash(), "version": __version__}
        path.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory(traj, path, provenance)

    report = aggregate_real_data(out, alpha=config.alpha)
    write_csv(
        report["rows"],
        ["metric", "delta", "mean", "stderr", "mean_pm_stderr",
         "p_value", "t_stat", "n", "remark"],
        _ensure_dir(out / "tables") / "real_data.csv",
    )
    return report


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _real_metrics(record: dict) -> dict:
    m = record["metrics_pred"]
    n_pred = max(len(record["pred_edges"]), 1)
    return {
        "tpr": m["tpr"],
        "agreement": m["tp"] / n_pred,
        "reversed_frac": m["reversed"] / n_pred,
    }


def aggregate_real_data(out_dir: str | Path, alpha: float = 0.05) -> dict:
    root = Path(out_dir) / "trajectories" / "real"
    trajectories = [read_trajectory_records(p) for p in sorted(root.glob("*.jsonl"))]
    rows = []
    for metric in ("tpr", "agreement", "reversed_frac"):
        for delta in (1, 2):
            values = []
            for records in trajectories:
                by_k = {r["k"]: r for r in records}
                for base in sorted(by_k):
                    hi = base + delta
                    if hi in by_k:
                        values.append(
                            _real_metrics(by_k[hi])[metric] - _real_metrics(by_k[base])[metric]
                        )
            if len(values) < 2:
                continue
            direction = -1 if metric == "reversed_frac" else 1
            try:
                rep = one_sample_t(values, alpha)
                remark = (
                    "improvement" if rep.significant and rep.mean * direction > 0
                    else "deterioration" if rep.significant
                    else "not significant"
                )
                rows.append({"metric": metric, "delta": delta, **_report_dict(rep),
                             "remark": remark})
            except Exception:
                mean, se = summarize(values)
                rows.append({"metric": metric, "delta": delta, "mean": mean, "stderr": se,
                             "mean_pm_stderr": f"{mean:.5f} \u00b1 {se:.5f}",
                             "t_stat": None, "p_value": None, "significant": False,
                             "n": len(values), "remark": "degenerate sample"})
    return {"rows": rows, "n_trajectories": len(trajectories)}
