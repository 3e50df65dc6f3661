"""Synthetic nonlinear SEM data and dataset ingestion.

Each non-root variable is generated from three random linear indices of its
parents pushed through tanh, cos, and sin, plus Gaussian noise; root nodes
are pure noise. The nonzero index coefficients are drawn uniformly from
[-2, -0.5] u [0.5, 2], which keeps every parent influential enough for the
true graph to be recoverable in principle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError, ParameterError
from .graphs import DirectedGraph
from .rng import make_rng


@dataclass(frozen=True)
class DataMatrix:
    """Immutable n x d observation matrix; column j holds variable j."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ParameterError(f"data matrix must be 2-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("data matrix contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class IndexModelSpec:
    """Coefficients of the three per-node indices; zero outside parent slots.

    a1[i, j], a2[i, j], a3[i, j] weight parent i in node j's tanh, cos, and
    sin index respectively.
    """

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    noise_scale: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ParameterError(f"{name} must be square, got shape {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.a1.shape != self.a2.shape or self.a1.shape != self.a3.shape:
            raise ParameterError("coefficient matrices must share a shape")
        if self.noise_scale <= 0:
            raise ParameterError("noise_scale must be positive")

    @property
    def d(self) -> int:
        return self.a1.shape[0]


def draw_index_model(truth: DirectedGraph, noise_scale: float, seed: int) -> IndexModelSpec:
    """Sample index coefficients for every parent slot of `truth`."""
    if noise_scale <= 0:
        raise ParameterError("noise_scale must be positive")
    rng = make_rng(seed, 0)
    d = truth.d
    mats = [np.zeros((d, d)) for _ in range(3)]
    for j in range(d):
        parents = truth.parents(j)
        for a in mats:
            for i in parents:
                mag = rng.uniform(0.5, 2.0)
                sign = 1.0 if rng.random() < 0.5 else -1.0
                a[i, j] = sign * mag
    return IndexModelSpec(mats[0], mats[1], mats[2], noise_scale)


def simulate_from_model(
    truth: DirectedGraph, model: IndexModelSpec, n: int, seed: int
) -> DataMatrix:
    """Sample n rows from `model` in topological order of `truth`."""
    if n < 1:
        raise ParameterError(f"sample count must be >= 1, got {n}")
    if model.d != truth.d:
        raise ParameterError("model dimension disagrees with graph")
    if not truth.is_dag():
        raise ParameterError("simulation requires an acyclic ground truth")
    rng = make_rng(seed, 1)
    d = truth.d
    x = np.zeros((n, d))
    noise = rng.normal(0.0, model.noise_scale, size=(n, d))
    for j in truth.topological_order():
        if truth.parents(j):
            x[:, j] = (
                np.tanh(x @ model.a1[:, j])
                + np.cos(x @ model.a2[:, j])
                + np.sin(x @ model.a3[:, j])
                + noise[:, j]
            )
        else:
            x[:, j] = noise[:, j]
    return DataMatrix(x)


def simulate_index_sem(
    truth: DirectedGraph, n: int, noise_scale: float = 1.0, seed: int = 0
) -> DataMatrix:
    """Draw a fresh index model and sample n observations from it."""
    model = draw_index_model(truth, noise_scale, seed)
    return simulate_from_model(truth, model, n, seed)


def write_sem_metadata(
    path: str | Path, seed: int, graph_ref: str, model: IndexModelSpec
) -> None:
    """JSON sidecar recording everything needed to regenerate the data."""
    payload = {
        "seed": seed,
        "graph": graph_ref,
        "noise_scale": model.noise_scale,
        "mechanism": "tanh+cos+sin of three linear parent indices",
        "coefficient_range": [0.5, 2.0],
        "a1": model.a1.tolist(),
        "a2": model.a2.tolist(),
        "a3": model.a3.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


# --- ingestion -------------------------------------------------------------


def write_csv_dataset(data: DataMatrix, path: str | Path) -> None:
    """Comma-separated numeric matrix; floats serialized via repr(float)."""
    lines = [",".join(repr(float(v)) for v in row) for row in data.values]
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv_dataset(path: str | Path, standardize: bool = False) -> DataMatrix:
    """Read a rectangular numeric CSV, auto-detecting an optional header row.

    With `standardize`, each column is z-scored to mean 0 and variance 1.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"{path}: file not found")
    rows: list[list[str]] = []
    for raw in path.read_text().splitlines():
        if raw.strip():
            rows.append([c.strip() for c in raw.split(",")])
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    start = 0
    if not _all_numeric(rows[0]):
        start = 1
        if len(rows) == 1:
            raise IngestionError(f"{path}: header row but no data rows")

    width = len(rows[start])
    values = np.empty((len(rows) - start, width))
    for r, row in enumerate(rows[start:], start=start):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {r + 1}: expected {width} columns, got {len(row)}"
            )
        for c, cell in enumerate(row):
            try:
                values[r - start, c] = float(cell)
            except ValueError as exc:
                raise IngestionError(
                    f"{path}: row {r + 1}, column {c + 1}: non-numeric cell {cell!r}"
                ) from exc
    if not np.all(np.isfinite(values)):
        raise IngestionError(f"{path}: non-finite values in data")

    if standardize:
        std = values.std(axis=0)
        zero = np.flatnonzero(std == 0)
        if zero.size:
            raise IngestionError(
                f"{path}: column {int(zero[0]) + 1} has zero variance; cannot standardize"
            )
        values = (values - values.mean(axis=0)) / std
    return DataMatrix(values)


def _all_numeric(cells: list[str]) -> bool:
    for cell in cells:
        try:
            float(cell)
        except ValueError:
            return False
    return True
