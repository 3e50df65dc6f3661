"""Per-node MLP structural equation model with a smooth acyclicity score.

Each variable j gets its own one-hidden-layer sigmoid MLP fed the full
observation row; the weighted adjacency entry W[i, j] is the Euclidean norm
of column i of node j's first-layer weights, so W[i, j] = 0 exactly when the
fitted mechanism for j ignores variable i. Acyclicity of the support of W is
scored by h(W) = tr(exp(W o W)) - d, which is zero iff the support is a DAG,
and everything here is differentiable in the raw parameters: the score and
the constraint residuals are functions of the squared column norms, which
are smooth even where a norm vanishes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .constraints import PenaltyState, penalty_on_squares
from .errors import NumericError, ParameterError
from .rng import make_rng

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class WeightedAdjacency:
    """Nonnegative d x d matrix of dependency strengths."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError(f"adjacency must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericError("adjacency contains non-finite entries")
        if np.any(v < 0):
            raise ParameterError("adjacency entries must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.values, dtype=dtype)


@dataclass(frozen=True)
class MlpSem:
    """Parameters of d node-wise MLPs: one hidden sigmoid layer, linear output.

    w1[j, h, i] is the first-layer weight from input i to hidden unit h of
    node j's network; b1, w2, b2 are the remaining biases and output weights.
    """

    w1: np.ndarray  # (d, hidden, d)
    b1: np.ndarray  # (d, hidden)
    w2: np.ndarray  # (d, hidden)
    b2: np.ndarray  # (d,)

    def __post_init__(self):
        w1 = np.array(self.w1, dtype=float)
        if w1.ndim != 3 or w1.shape[0] != w1.shape[2]:
            raise ParameterError(f"w1 must have shape (d, hidden, d), got {w1.shape}")
        d, hidden = w1.shape[0], w1.shape[1]
        arrays = {"w1": w1}
        for name, shape in (("b1", (d, hidden)), ("w2", (d, hidden)), ("b2", (d,))):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ParameterError(f"{name} must have shape {shape}, got {a.shape}")
            arrays[name] = a
        for name, a in arrays.items():
            if not np.all(np.isfinite(a)):
                raise NumericError(f"non-finite values in {name}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def d(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def n_params(self) -> int:
        return n_params(self.d, self.hidden)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.w1.ravel(), self.b1.ravel(), self.w2.ravel(), self.b2.ravel()]
        )

    @classmethod
    def from_vector(cls, d: int, hidden: int, vec: np.ndarray) -> "MlpSem":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (n_params(d, hidden),):
            raise ParameterError(
                f"parameter vector must have length {n_params(d, hidden)}, got {vec.shape}"
            )
        parts = _split_vector(d, hidden, vec)
        return cls(*parts)

    def save(self, path: str | Path) -> None:
        """JSON checkpoint; floats round-trip exactly via repr."""
        payload = {
            "version": CHECKPOINT_VERSION,
            "d": self.d,
            "hidden": self.hidden,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "MlpSem":
        payload = json.loads(Path(path).read_text())
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ParameterError(f"unsupported checkpoint version {payload.get('version')}")
        sem = cls(
            np.array(payload["w1"]), np.array(payload["b1"]),
            np.array(payload["w2"]), np.array(payload["b2"]),
        )
        if sem.d != payload["d"] or sem.hidden != payload["hidden"]:
            raise ParameterError("checkpoint shape header disagrees with arrays")
        return sem


def n_params(d: int, hidden: int) -> int:
    return d * (hidden * d + hidden + hidden + 1)


def _split_vector(d, hidden, vec):
    sizes = [d * hidden * d, d * hidden, d * hidden, d]
    shapes = [(d, hidden, d), (d, hidden), (d, hidden), (d,)]
    out, ofs = [], 0
    for size, shape in zip(sizes, shapes):
        out.append(vec[ofs : ofs + size].reshape(shape))
        ofs += size
    return out


def init_mlp_sem(d: int, hidden: int, seed: int) -> MlpSem:
    """Seeded initialization: small uniform first layer, Glorot output layer."""
    rng = make_rng(seed, 0)
    w1 = rng.uniform(-0.1, 0.1, size=(d, hidden, d))
    limit = np.sqrt(6.0 / (hidden + 1))
    w2 = rng.uniform(-limit, limit, size=(d, hidden))
    return MlpSem(w1, np.zeros((d, hidden)), w2, np.zeros(d))


def _hidden_activations(sem: MlpSem, x: np.ndarray) -> np.ndarray:
    """Sigmoid hidden activations for all nodes, shape (d, n, hidden)."""
    z = np.matmul(x, sem.w1.transpose(0, 2, 1))
    z += sem.b1[:, None, :]
    return expit(z)


def forward(sem: MlpSem, x: np.ndarray) -> np.ndarray:
    """All-node predictions for data rows `x` (n, d) -> (n, d)."""
    x = np.asarray(x, dtype=float)
    hid = _hidden_activations(sem, x)
    pred = np.matmul(hid, sem.w2[:, :, None])[:, :, 0] + sem.b2[:, None]
    return pred.T


def squared_column_norms(sem: MlpSem) -> np.ndarray:
    """Matrix [i, j] = squared norm of column i of node j's first layer."""
    return (sem.w1**2).sum(axis=1).T


def adjacency(sem: MlpSem) -> WeightedAdjacency:
    """W[i, j] = || column i of node j's first-layer weights ||_2."""
    return WeightedAdjacency(np.sqrt(squared_column_norms(sem)))


# --- acyclicity score -----------------------------------------------------


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Taylor kernel.

    Scales the input below norm 1/2, sums the Taylor series to machine
    precision, and squares back up. Adequate for the small (d <= 50)
    nonnegative matrices used by the acyclicity score.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expm requires a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("expm input contains non-finite entries")
    norm = float(np.abs(m).sum(axis=0).max())
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    a = m / (2.0**s)
    result = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, 31):
            term = term @ a / k
            result += term
            if float(np.abs(term).max()) < 1e-17:
                break
        for _ in range(s):
            result = result @ result
    return result


def h_acyc(weights) -> float:
    """Acyclicity score h(W) = tr(exp(W o W)) - d; zero iff support is a DAG."""
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise NumericError("h_acyc input contains non-finite entries")
    return float(np.trace(expm(w * w)) - w.shape[0])


def h_acyc_with_grad(weights) -> tuple[float, np.ndarray]:
    """Score and its gradient 2 * exp(W o W)^T o W."""
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise NumericError("h_acyc input contains non-finite entries")
    e = expm(w * w)
    return float(np.trace(e) - w.shape[0]), 2.0 * e.T * w


# --- loss and smooth objective --------------------------------------------


def loss(sem: MlpSem, data) -> float:
    """Least-squares fit: (1 / 2n) sum_j sum_rows (x_j - MLP_j(x_row))^2."""
    x = _data_values(data, sem.d)
    resid = x - forward(sem, x)
    return float(0.5 / x.shape[0] * np.sum(resid**2))


def objective_gradient(
    sem: MlpSem, data, penalty_state: PenaltyState | None
) -> tuple[float, np.ndarray]:
    """Smooth objective F(theta) and its exact gradient as a flat vector.

    F = least-squares loss + (rho/2) h^2 + alpha h + knowledge penalty terms,
    with h and the residuals chained through the squared column norms. The
    l1 regularizer is not included here; the solver realizes it through its
    nonnegative split parameterization. Pass penalty_state=None for the bare
    loss.
    """
    x = _data_values(data, sem.d)
    n = x.shape[0]

    with np.errstate(over="ignore", invalid="ignore"):
        hid = _hidden_activations(sem, x)  # (d, n, hidden)
        pred = np.matmul(hid, sem.w2[:, :, None])[:, :, 0] + sem.b2[:, None]  # (d, n)
        resid = pred - x.T
        value = float(0.5 / n * np.sum(resid**2))

        d_pred = resid / n  # (d, n)
        g_w2 = np.matmul(d_pred[:, None, :], hid)[:, 0, :]
        g_b2 = d_pred.sum(axis=1)
        d_z = (d_pred[:, :, None] * sem.w2[:, None, :]) * (hid * (1.0 - hid))
        g_w1 = np.matmul(d_z.transpose(0, 2, 1), x)
        g_b1 = d_z.sum(axis=1)

        if penalty_state is not None:
            sq = squared_column_norms(sem)  # [i, j] = W_ij^2
            d_sq = np.zeros_like(sq)

            e = expm(sq)
            h_val = float(np.trace(e) - sem.d)
            value += 0.5 * penalty_state.rho * h_val**2 + penalty_state.alpha * h_val
            d_sq += (penalty_state.rho * h_val + penalty_state.alpha) * e.T

            pen_value, pen_d_sq = penalty_on_squares(sq, penalty_state)
            value += pen_value
            d_sq += pen_d_sq

            # sq[i, j] = sum_h w1[j, h, i]^2
            g_w1 = g_w1 + 2.0 * d_sq.T[:, None, :] * sem.w1

    if not np.isfinite(value):
        raise NumericError("objective evaluated to a non-finite value")
    grad = np.concatenate([g_w1.ravel(), g_b1.ravel(), g_w2.ravel(), g_b2.ravel()])
    return value, grad


def _data_values(data, d: int) -> np.ndarray:
    x = np.asarray(getattr(data, "values", data), dtype=float)
    if x.ndim != 2:
        raise ParameterError(f"data must be a 2-d matrix, got shape {x.shape}")
    if x.shape[1] != d:
        raise ParameterError(f"data has {x.shape[1]} columns but model expects {d}")
    return x
