"""Augmented-Lagrangian fitting of the MLP SEM under knowledge constraints.

The inner problem minimizes the smooth penalized objective plus an l1 term
on the first-layer weights. The l1 term is kept smooth for L-BFGS-B by
splitting those weights into nonnegative parts, w1 = pos - neg with
pos, neg >= 0, so the regularizer becomes lambda * sum(pos + neg) under
simple bound constraints. The outer loop performs dual ascent on the
acyclicity multiplier and the per-constraint multipliers, and grows the
shared penalty weight whenever the acyclicity score stalls.
"""

from __future__ import annotations

import configparser
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.optimize as sopt

from . import model as model_mod
from .constraints import (
    EdgeConstraint,
    Kind,
    PenaltyState,
    check_consistent,
    max_violation_margined,
    update_multipliers,
)
from .errors import DivergedError, NumericError, ParameterError
from .graphs import DirectedGraph
from .model import MlpSem, WeightedAdjacency, init_mlp_sem, n_params
from .sem import DataMatrix

STATUS_CONVERGED = "converged"
STATUS_MAX_OUTER = "max_outer_iterations"
STATUS_INFEASIBLE = "infeasible_knowledge"


@dataclass(frozen=True)
class SolverConfig:
    lambda1: float = 0.01
    # Small ridge over the layer weights. Without it the unpenalized output
    # layer can absorb arbitrarily large rescalings of the first layer,
    # driving every column norm below threshold while keeping the fit.
    lambda2: float = 0.01
    hidden: int = 10
    rho_init: float = 1.0
    rho_max: float = 1e16
    rho_growth: float = 10.0
    h_tol: float = 1e-8
    progress_ratio: float = 0.25
    inner_max_iter: int = 500
    inner_gtol: float = 1e-6
    w_thresh: float = 0.3
    # Binding constraints settle on the boundary from the violated side;
    # the margin keeps their converged weights strictly past w_thresh.
    constraint_margin: float = 1e-4
    max_outer: int = 100

    def __post_init__(self):
        for name in ("lambda1", "rho_init", "rho_max", "rho_growth", "h_tol",
                     "inner_gtol", "w_thresh"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.lambda2 < 0 or self.constraint_margin < 0:
            raise ParameterError("lambda2 and constraint_margin must be nonnegative")
        if not 0 < self.progress_ratio < 1:
            raise ParameterError("progress_ratio must be in (0, 1)")
        if self.hidden < 1 or self.inner_max_iter < 1 or self.max_outer < 1:
            raise ParameterError("hidden, inner_max_iter and max_outer must be >= 1")

    @classmethod
    def from_ini(cls, path: str | Path) -> "SolverConfig":
        parser = configparser.ConfigParser()
        parser.read(path)
        if not parser.has_section("solver"):
            return cls()
        return cls.from_mapping(dict(parser["solver"]))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SolverConfig":
        kwargs = {}
        for f in ("lambda1", "lambda2", "rho_init", "rho_max", "rho_growth", "h_tol",
                  "progress_ratio", "inner_gtol", "w_thresh", "constraint_margin"):
            if f in mapping:
                kwargs[f] = float(mapping[f])
        for f in ("hidden", "inner_max_iter", "max_outer"):
            if f in mapping:
                kwargs[f] = int(mapping[f])
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        return {
            "lambda1": self.lambda1, "lambda2": self.lambda2, "hidden": self.hidden,
            "rho_init": self.rho_init, "rho_max": self.rho_max,
            "rho_growth": self.rho_growth, "h_tol": self.h_tol,
            "progress_ratio": self.progress_ratio,
            "inner_max_iter": self.inner_max_iter, "inner_gtol": self.inner_gtol,
            "w_thresh": self.w_thresh, "constraint_margin": self.constraint_margin,
            "max_outer": self.max_outer,
        }


@dataclass(frozen=True)
class OuterIteration:
    outer_iter: int
    rho: float
    h: float
    max_violation: float
    loss: float


@dataclass(frozen=True)
class FitResult:
    sem: MlpSem
    weights: WeightedAdjacency
    graph: DirectedGraph
    log: tuple[OuterIteration, ...]
    status: str
    wall_time: float
    constraints: tuple[EdgeConstraint, ...] = field(default_factory=tuple)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    def to_json(self) -> str:
        """Canonical serialization; wall time is excluded so that equal
        (data, constraints, config, seed) inputs produce equal bytes."""
        payload = {
            "status": self.status,
            "edges": sorted(self.graph.edges),
            "weights": self.weights.values.tolist(),
            "log": [
                [r.outer_iter, r.rho, r.h, r.max_violation, r.loss] for r in self.log
            ],
        }
        return json.dumps(payload, sort_keys=True)


def threshold(weights, w_thresh: float) -> DirectedGraph:
    """Keep edge (i, j), i != j, iff W_ij >= w_thresh (boundary kept)."""
    if w_thresh <= 0:
        raise ParameterError("w_thresh must be positive")
    w = np.asarray(weights, dtype=float)
    keep = w >= w_thresh
    np.fill_diagonal(keep, False)
    edges = frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(keep)))
    return DirectedGraph(w.shape[0], edges)


def write_convergence_log(log, path: str | Path) -> None:
    lines = ["outer_iter,rho,h,max_violation,loss"]
    lines += [
        f"{r.outer_iter},{r.rho!r},{r.h!r},{r.max_violation!r},{r.loss!r}" for r in log
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def fit(
    data: DataMatrix,
    constraints=(),
    config: SolverConfig | None = None,
    seed: int = 0,
    warm_start: MlpSem | None = None,
    progress=None,
) -> FitResult:
    """Fit the MLP SEM to `data` subject to the knowledge constraints.

    Deterministic in (data, constraints, config, seed, warm_start). Returns
    a result even when the knowledge constraints cannot be satisfied at the
    penalty cap; that outcome is reported through the status field.
    `progress`, if given, receives each OuterIteration as it completes, so
    a caller on another thread can poll a snapshot of the current state.
    """
    config = config or SolverConfig()
    constraints = tuple(constraints)
    check_consistent(constraints)
    d = data.d
    for c in constraints:
        if c.i >= d or c.j >= d:
            raise ParameterError(f"constraint ({c.i}, {c.j}) out of range for d={d}")

    t0 = time.perf_counter()
    hidden = config.hidden
    start = warm_start if warm_start is not None else init_mlp_sem(d, hidden, seed)
    if start.d != d:
        raise ParameterError("warm start dimension disagrees with data")
    x = _Split.from_sem(start)

    rho = config.rho_init
    alpha = 0.0
    cons = tuple(replace(c, multiplier=0.0) for c in constraints)
    infeas = np.inf  # max of h and the worst constraint violation
    log: list[OuterIteration] = []
    status = STATUS_MAX_OUTER

    for outer in range(config.max_outer):
        state = PenaltyState(
            rho=rho, alpha=alpha, rho_ineq=rho, rho_eq=rho,
            w_thresh=config.w_thresh, constraints=cons,
            margin=config.constraint_margin,
        )
        x = _wake_dead_active_columns(x, cons, d, hidden)
        x = _minimize_inner(x, data, state, config, d, hidden, log)
        sem = x.to_sem(d, hidden)
        weights = model_mod.adjacency(sem)
        h_new = model_mod.h_acyc(weights)
        viol = max_violation_margined(weights, state)
        infeas_new = max(h_new, viol)

        alpha += rho * h_new
        cons = update_multipliers(weights, cons, state)
        log.append(OuterIteration(outer, rho, h_new, viol, model_mod.loss(sem, data)))
        if progress is not None:
            progress(log[-1])

        if infeas_new <= config.h_tol:
            status = STATUS_CONVERGED
            break
        stalled = infeas_new > config.progress_ratio * infeas
        if stalled:
            if rho >= config.rho_max:
                status = STATUS_INFEASIBLE if viol > config.h_tol else STATUS_MAX_OUTER
                break
            rho *= config.rho_growth
        infeas = infeas_new

    sem = x.to_sem(d, hidden)
    weights = model_mod.adjacency(sem)
    return FitResult(
        sem=sem,
        weights=weights,
        graph=threshold(weights, config.w_thresh),
        log=tuple(log),
        status=status,
        wall_time=time.perf_counter() - t0,
        constraints=cons,
    )


def _wake_dead_active_columns(x: "_Split", cons, d: int, hidden: int) -> "_Split":
    """Give dead first-layer columns of known-active pairs a small seed value.

    The penalty residuals act through squared weights, so their gradient
    vanishes on a column that is exactly zero; once the l1 term has pinned a
    column, no multiplier can revive it. A tiny deterministic kick restores
    the descent direction; the data and penalty terms take it from there.
    """
    dead = [
        c for c in cons
        if c.kind is Kind.ACTIVE and float(np.abs(x.pos[c.j, :, c.i] - x.neg[c.j, :, c.i]).max()) < 1e-6
    ]
    if not dead:
        return x
    pos = x.pos.copy()
    neg = x.neg.copy()
    for c in dead:
        pos[c.j, :, c.i] = 0.01
        neg[c.j, :, c.i] = 0.0
    return _Split(pos, neg, x.rest)


@dataclass(frozen=True)
class _Split:
    """First layer as pos - neg plus the unsplit remaining parameters."""

    pos: np.ndarray  # (d, hidden, d)
    neg: np.ndarray
    rest: np.ndarray  # flat (b1, w2, b2)

    @classmethod
    def from_sem(cls, sem: MlpSem) -> "_Split":
        vec = sem.to_vector()
        k = sem.d * sem.hidden * sem.d
        w1 = vec[:k].reshape(sem.d, sem.hidden, sem.d)
        return cls(np.maximum(w1, 0.0), np.maximum(-w1, 0.0), vec[k:])

    def to_sem(self, d: int, hidden: int) -> MlpSem:
        vec = np.concatenate([(self.pos - self.neg).ravel(), self.rest])
        return MlpSem.from_vector(d, hidden, vec)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.pos.ravel(), self.neg.ravel(), self.rest])


def _minimize_inner(x0: _Split, data, state: PenaltyState, config: SolverConfig,
                    d: int, hidden: int, log) -> _Split:
    k = d * hidden * d
    total = n_params(d, hidden)
    rest_len = total - k

    n_w2 = d * hidden
    w2_lo = k + d * hidden  # rest layout: b1, w2, b2
    z0 = x0.flat()
    start_ok = False

    def objective(z):
        nonlocal start_ok
        pos, neg, rest = z[:k], z[k : 2 * k], z[2 * k :]
        w1 = pos - neg
        vec = np.concatenate([w1, rest])
        sem = MlpSem.from_vector(d, hidden, vec)
        try:
            value, grad = model_mod.objective_gradient(sem, data, state)
            if not np.all(np.isfinite(grad)):
                raise NumericError("non-finite gradient")
        except NumericError as exc:
            if not start_ok:
                raise DivergedError(str(exc), log=list(log)) from exc
            # Line-search probe overflowed (huge weights blow up the trace
            # exponential). Hand back a finite barrier sloping toward the
            # solve's start point so the search backtracks.
            delta = z - z0
            return 1e20 * (1.0 + float(delta @ delta)), 2e20 * delta
        start_ok = True
        value += config.lambda1 * float(np.sum(pos) + np.sum(neg))
        g_w1 = grad[:k]
        g = np.concatenate([g_w1 + config.lambda1, -g_w1 + config.lambda1, grad[k:]])
        if config.lambda2 > 0:
            w2 = vec[w2_lo : w2_lo + n_w2]
            value += 0.5 * config.lambda2 * float(w1 @ w1 + w2 @ w2)
            g[:k] += config.lambda2 * w1
            g[k : 2 * k] -= config.lambda2 * w1
            g[2 * k + n_w2 : 2 * k + 2 * n_w2] += config.lambda2 * w2
        return value, g

    bounds = [(0.0, None)] * (2 * k) + [(None, None)] * rest_len
    res = sopt.minimize(
        objective,
        x0.flat(),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": config.inner_max_iter, "gtol": config.inner_gtol},
    )
    z = res.x
    return _Split(
        z[:k].reshape(d, hidden, d), z[k : 2 * k].reshape(d, hidden, d), z[2 * k :]
    )
