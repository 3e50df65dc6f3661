"""Sequential knowledge induction with a simulated expert.

Starting from an unconstrained baseline fit, each step draws one new piece
of knowledge from an oracle that reads the true graph (either correcting a
mistake of the current prediction or restating something the model already
got right), adds it to the accumulated constraint set, and refits. Alongside
each refit the protocol records the expected graph: the previous prediction
with the outstanding knowledge applied by hand and nothing else changed,
which is the yardstick for whether refitting helps more than bookkeeping.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .constraints import EdgeConstraint, Kind, known_active, known_inactive
from .errors import ParameterError
from .graphs import DirectedGraph, MetricReport, expected_graph, structural_metrics
from .rng import derive_seed, make_rng
from .sem import DataMatrix
from .solver import FitResult, SolverConfig, fit


class Variant(enum.Enum):
    MISCLASSIFIED = "misclassified"
    CORRECT = "correct"


class KindFilter(enum.Enum):
    ACTIVE_ONLY = "active"
    INACTIVE_ONLY = "inactive"
    BOTH = "both"


@dataclass(frozen=True)
class KnowledgeSource:
    """Which pool the simulated expert draws from, and which edge kinds."""

    variant: Variant
    kinds: KindFilter = KindFilter.BOTH

    @property
    def allows_active(self) -> bool:
        return self.kinds in (KindFilter.ACTIVE_ONLY, KindFilter.BOTH)

    @property
    def allows_inactive(self) -> bool:
        return self.kinds in (KindFilter.INACTIVE_ONLY, KindFilter.BOTH)


def candidate_constraints(
    pred: DirectedGraph,
    truth: DirectedGraph,
    existing: tuple[EdgeConstraint, ...],
    source: KnowledgeSource,
) -> list[EdgeConstraint]:
    """All constraints the expert could legally hand over next, sorted."""
    if pred.d != truth.d:
        raise ParameterError(f"node count mismatch: pred d={pred.d}, truth d={truth.d}")
    taken = {c.pair for c in existing}
    t, p = truth.edges, pred.edges
    out: list[EdgeConstraint] = []
    if source.variant is Variant.MISCLASSIFIED:
        if source.allows_active:
            out += [known_active(i, j) for (i, j) in t if (i, j) not in p and (i, j) not in taken]
        if source.allows_inactive:
            out += [known_inactive(i, j) for (i, j) in p if (i, j) not in t and (i, j) not in taken]
    else:
        if source.allows_active:
            out += [known_active(i, j) for (i, j) in p & t if (i, j) not in taken]
        if source.allows_inactive:
            for i in range(pred.d):
                for j in range(pred.d):
                    pair = (i, j)
                    if i != j and pair not in p and pair not in t and pair not in taken:
                        out.append(known_inactive(i, j))
    return sorted(out, key=lambda c: (c.i, c.j, c.kind.value))


def select_knowledge(
    pred: DirectedGraph,
    truth: DirectedGraph,
    existing: tuple[EdgeConstraint, ...],
    source: KnowledgeSource,
    seed: int,
) -> EdgeConstraint | None:
    """Uniform pick among eligible constraints; None when the pool is empty."""
    cands = candidate_constraints(pred, truth, existing, source)
    if not cands:
        return None
    rng = make_rng(seed, 0)
    return cands[int(rng.integers(len(cands)))]


def is_satisfied(constraint: EdgeConstraint, graph: DirectedGraph) -> bool:
    present = constraint.pair in graph.edges
    return present if constraint.kind is Kind.ACTIVE else not present


@dataclass(frozen=True)
class InductionStep:
    k: int
    selected: EdgeConstraint | None
    knowledge: tuple[EdgeConstraint, ...]
    fit: FitResult
    pred: DirectedGraph
    expected: DirectedGraph | None
    metrics_pred: MetricReport
    metrics_expected: MetricReport | None


@dataclass(frozen=True)
class InductionTrajectory:
    truth: DirectedGraph
    source: KnowledgeSource
    seed: int
    steps: tuple[InductionStep, ...]
    exhausted: bool

    def __len__(self) -> int:
        return len(self.steps)


def run_induction(
    data: DataMatrix,
    truth: DirectedGraph,
    steps: int,
    source: KnowledgeSource,
    config: SolverConfig | None = None,
    seed: int = 0,
    warm_start_steps: bool = True,
) -> InductionTrajectory:
    """Baseline fit plus up to `steps` single-constraint refits.

    Stops early when the knowledge pool is exhausted. Step k+1 warm-starts
    from the step-k parameters, so a refit is a perturbation of the previous
    solution rather than a fresh search.
    """
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    if truth.d != data.d:
        raise ParameterError(f"truth has d={truth.d} but data has d={data.d}")
    config = config or SolverConfig()
    fit_seed = derive_seed(seed, 0)

    baseline = fit(data, (), config, seed=fit_seed)
    records = [
        InductionStep(
            k=0, selected=None, knowledge=(), fit=baseline, pred=baseline.graph,
            expected=None, metrics_pred=structural_metrics(baseline.graph, truth),
            metrics_expected=None,
        )
    ]
    knowledge: tuple[EdgeConstraint, ...] = ()
    exhausted = False
    prev = baseline

    for k in range(1, steps + 1):
        selected = select_knowledge(prev.graph, truth, knowledge, source, derive_seed(seed, k))
        if selected is None:
            exhausted = True
            break
        outstanding = [c for c in knowledge if not is_satisfied(c, prev.graph)]
        exp = expected_graph(prev.graph, [selected, *outstanding])
        knowledge = (*knowledge, selected)
        result = fit(
            data, knowledge, config, seed=fit_seed,
            warm_start=prev.sem if warm_start_steps else None,
        )
        records.append(
            InductionStep(
                k=k, selected=selected, knowledge=knowledge, fit=result,
                pred=result.graph, expected=exp,
                metrics_pred=structural_metrics(result.graph, truth),
                metrics_expected=structural_metrics(exp, truth),
            )
        )
        prev = result

    return InductionTrajectory(truth, source, seed, tuple(records), exhausted)


def delta_metric(
    traj: InductionTrajectory,
    metric: str,
    delta: int = 1,
    base_step: int = 0,
    expected: bool = False,
) -> float:
    """metric(step k+delta) - metric(pred at step k); SHD is per node.

    With `expected` the later value is read from the expected graph instead
    of the refit prediction.
    """
    if delta < 1:
        raise ParameterError("delta must be >= 1")
    hi = base_step + delta
    if base_step < 0 or hi >= len(traj.steps):
        raise ParameterError(
            f"steps {base_step} and {hi} must lie within the {len(traj.steps)}-step trajectory"
        )
    later = traj.steps[hi].metrics_expected if expected else traj.steps[hi].metrics_pred
    if later is None:
        raise ParameterError(f"step {hi} has no expected graph")
    return later.value(metric) - traj.steps[base_step].metrics_pred.value(metric)


# --- persistence -----------------------------------------------------------


def _metrics_dict(m: MetricReport | None) -> dict | None:
    if m is None:
        return None
    return {
        "fdr": m.fdr, "tpr": m.tpr, "fpr": m.fpr, "shd": m.shd,
        "shd_per_node": m.shd_per_node, "tp": m.tp, "reversed": m.reversed,
        "fp": m.fp, "missing": m.missing,
    }


def _constraint_dict(c: EdgeConstraint) -> dict:
    return {"i": c.i, "j": c.j, "kind": c.kind.value}


def trajectory_records(traj: InductionTrajectory, provenance: dict | None = None) -> list[dict]:
    """One JSON-able record per step; wall-clock timing lives in a sidecar
    so that records are byte-stable across reruns."""
    from .graphs import METRIC_NAMES

    records = []
    for step in traj.steps:
        rec = {
            "k": step.k,
            "selected": None if step.selected is None else _constraint_dict(step.selected),
            "knowledge": [_constraint_dict(c) for c in step.knowledge],
            "pred_edges": sorted(step.pred.edges),
            "expected_edges": None if step.expected is None else sorted(step.expected.edges),
            "metrics_pred": _metrics_dict(step.metrics_pred),
            "metrics_expected": _metrics_dict(step.metrics_expected),
            "solver_status": step.fit.status,
            "outer_iterations": len(step.fit.log),
            "final_h": step.fit.log[-1].h if step.fit.log else None,
            "final_rho": step.fit.log[-1].rho if step.fit.log else None,
            "loss": step.fit.log[-1].loss if step.fit.log else None,
            "exhausted": traj.exhausted and step.k == len(traj.steps) - 1,
        }
        if step.k >= 1:
            rec["delta_pred"] = {
                m: delta_metric(traj, m, 1, step.k - 1, expected=False) for m in METRIC_NAMES
            }
            rec["delta_expected"] = {
                m: delta_metric(traj, m, 1, step.k - 1, expected=True) for m in METRIC_NAMES
            }
        if provenance:
            rec["provenance"] = provenance
        records.append(rec)
    return records


def write_trajectory(
    traj: InductionTrajectory, path: str | Path, provenance: dict | None = None
) -> None:
    path = Path(path)
    records = trajectory_records(traj, provenance)
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    times = [step.fit.wall_time for step in traj.steps]
    path.with_suffix(".times.json").write_text(json.dumps({"wall_times": times}) + "\n")


def read_trajectory_records(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records

