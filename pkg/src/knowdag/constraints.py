"""Expert-knowledge constraints as one-sided augmented-Lagrangian penalties.

A known-active edge (i, j) demands that the learned weight survive the
pruning threshold, W_ij^2 >= w_thresh^2; a known-inactive edge demands the
opposite, W_ij^2 <= w_thresh^2. Writing g <= 0 for the satisfied side, the
slack variable that would turn each inequality into an equality has a
closed-form optimum, which leaves the standard one-sided multiplier term

    (1 / 2 rho) * (max(0, alpha + rho * g)^2 - alpha^2)

per constraint, with dual update alpha <- max(0, alpha + rho * g).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstraintConflictError, IngestionError, ParameterError


class Kind(enum.Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class EdgeConstraint:
    """One piece of expert knowledge about the ordered pair (i, j)."""

    i: int
    j: int
    kind: Kind
    multiplier: float = 0.0

    def __post_init__(self):
        if self.i == self.j:
            raise ParameterError(f"constraint on self-loop ({self.i}, {self.i})")
        if self.i < 0 or self.j < 0:
            raise ParameterError(f"negative node index in constraint ({self.i}, {self.j})")
        if self.multiplier < 0:
            raise ParameterError("inequality multiplier must be nonnegative")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


def known_active(i: int, j: int) -> EdgeConstraint:
    return EdgeConstraint(i, j, Kind.ACTIVE)


def known_inactive(i: int, j: int) -> EdgeConstraint:
    return EdgeConstraint(i, j, Kind.INACTIVE)


def check_consistent(constraints: Iterable[EdgeConstraint]) -> None:
    """Reject sets that assert both kinds, or duplicates, on one ordered pair."""
    seen: dict[tuple[int, int], Kind] = {}
    for c in constraints:
        if c.pair in seen:
            raise ConstraintConflictError(c.i, c.j)
        seen[c.pair] = c.kind


@dataclass(frozen=True)
class PenaltyState:
    """Penalty weights and multipliers for one inner minimization.

    `rho` drives the acyclicity penalty with multiplier `alpha`;
    `rho_ineq` / `rho_eq` drive known-active / known-inactive residuals.
    The solver keeps all three weights on a shared geometric schedule.
    """

    rho: float = 1.0
    alpha: float = 0.0
    rho_ineq: float = 1.0
    rho_eq: float = 1.0
    w_thresh: float = 0.3
    constraints: tuple[EdgeConstraint, ...] = ()
    # Optional interior margin: residuals target w_thresh + margin for active
    # and w_thresh - margin for inactive constraints, so a binding constraint
    # settles strictly on the kept / pruned side of the exact threshold.
    margin: float = 0.0

    def __post_init__(self):
        if self.rho < 0 or self.rho_ineq < 0 or self.rho_eq < 0:
            raise ParameterError("penalty weights must be nonnegative")
        if self.w_thresh <= 0:
            raise ParameterError("w_thresh must be positive")
        if not 0 <= self.margin < self.w_thresh:
            raise ParameterError("margin must be in [0, w_thresh)")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        check_consistent(self.constraints)

    def rho_for(self, c: EdgeConstraint) -> float:
        return self.rho_ineq if c.kind is Kind.ACTIVE else self.rho_eq

    def thresh_for(self, c: EdgeConstraint) -> float:
        if c.kind is Kind.ACTIVE:
            return self.w_thresh + self.margin
        return self.w_thresh - self.margin


def constraint_violation(weights, c: EdgeConstraint, w_thresh: float) -> float:
    """One-sided residual g; the constraint is satisfied when g <= 0.

    Known-active: g = w_thresh^2 - W_ij^2 (edge must survive pruning).
    Known-inactive: g = W_ij^2 - w_thresh^2 (edge must be pruned).
    """
    w = np.asarray(weights, dtype=float)
    wij2 = float(w[c.i, c.j]) ** 2
    if c.kind is Kind.ACTIVE:
        return w_thresh**2 - wij2
    return wij2 - w_thresh**2


def violations(weights, constraints: Sequence[EdgeConstraint], w_thresh: float) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return np.array([constraint_violation(w, c, w_thresh) for c in constraints])


def penalty_terms(g: np.ndarray, alphas: np.ndarray, rhos: np.ndarray) -> tuple[float, np.ndarray]:
    """Slack-eliminated penalty total and its derivative w.r.t. each g.

    Each term is (max(0, alpha + rho*g)^2 - alpha^2) / (2 rho) with derivative
    max(0, alpha + rho*g); inactive constraints (alpha + rho*g <= 0) contribute
    the constant -alpha^2 / (2 rho) and zero gradient.
    """
    if np.any(rhos <= 0):
        raise ParameterError("penalty weights must be positive when constraints are present")
    m = np.maximum(0.0, alphas + rhos * g)
    value = float(np.sum((m**2 - alphas**2) / (2.0 * rhos)))
    return value, m


def penalty_on_squares(
    sq: np.ndarray, state: PenaltyState
) -> tuple[float, np.ndarray]:
    """Penalty evaluated on the matrix of squared weights, with its gradient.

    `sq[i, j]` is W_ij^2, which is what the residuals are written in; the
    gradient w.r.t. `sq` is smooth everywhere, including at zero weights.
    """
    d_sq = np.zeros_like(sq)
    if not state.constraints:
        return 0.0, d_sq
    signs = np.array([-1.0 if c.kind is Kind.ACTIVE else 1.0 for c in state.constraints])
    idx_i = np.array([c.i for c in state.constraints])
    idx_j = np.array([c.j for c in state.constraints])
    threshs = np.array([state.thresh_for(c) for c in state.constraints])
    g = signs * (sq[idx_i, idx_j] - threshs**2)
    alphas = np.array([c.multiplier for c in state.constraints])
    rhos = np.array([state.rho_for(c) for c in state.constraints])
    value, dg = penalty_terms(g, alphas, rhos)
    np.add.at(d_sq, (idx_i, idx_j), dg * signs)
    return value, d_sq


def augmented_penalty(
    weights, constraints: Sequence[EdgeConstraint], state: PenaltyState
) -> tuple[float, np.ndarray]:
    """Penalty total and its gradient w.r.t. the weight matrix entries."""
    w = np.asarray(weights, dtype=float)
    st = replace(state, constraints=tuple(constraints))
    value, d_sq = penalty_on_squares(w**2, st)
    return value, d_sq * 2.0 * w


def update_multipliers(
    weights, constraints: Sequence[EdgeConstraint], state: PenaltyState
) -> tuple[EdgeConstraint, ...]:
    """Dual ascent: alpha <- max(0, alpha + rho * g) for every constraint."""
    w = np.asarray(weights, dtype=float)
    updated = []
    for c in constraints:
        g = constraint_violation(w, c, state.thresh_for(c))
        new_alpha = max(0.0, c.multiplier + state.rho_for(c) * g)
        updated.append(replace(c, multiplier=new_alpha))
    return tuple(updated)


def max_violation(weights, constraints: Sequence[EdgeConstraint], w_thresh: float) -> float:
    """Largest positive residual; 0.0 when every constraint is satisfied."""
    if not constraints:
        return 0.0
    return float(max(0.0, violations(weights, constraints, w_thresh).max()))


def max_violation_margined(weights, state: PenaltyState) -> float:
    """Largest positive residual against the state's margined thresholds."""
    if not state.constraints:
        return 0.0
    w = np.asarray(weights, dtype=float)
    return max(
        0.0,
        max(constraint_violation(w, c, state.thresh_for(c)) for c in state.constraints),
    )


# --- file formats ---------------------------------------------------------


def write_knowledge_file(constraints: Iterable[EdgeConstraint], path: str | Path) -> None:
    """One `active i j` or `inactive i j` line per constraint."""
    lines = [f"{c.kind.value} {c.i} {c.j}" for c in constraints]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_knowledge_file(path: str | Path) -> tuple[EdgeConstraint, ...]:
    constraints = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("active", "inactive"):
            raise IngestionError(f"{path}: line {lineno}: expected 'active|inactive i j'")
        constraints.append(EdgeConstraint(int(parts[1]), int(parts[2]), Kind(parts[0])))
    check_consistent(constraints)
    return tuple(constraints)


def constraints_to_json(constraints: Iterable[EdgeConstraint]) -> list[dict]:
    return [{"i": c.i, "j": c.j, "kind": c.kind.value} for c in constraints]


def constraints_from_json(items: Iterable[dict]) -> tuple[EdgeConstraint, ...]:
    constraints = tuple(
        EdgeConstraint(int(it["i"]), int(it["j"]), Kind(it["kind"])) for it in items
    )
    check_consistent(constraints)
    return constraints


def dump_knowledge_json(constraints: Iterable[EdgeConstraint], path: str | Path) -> None:
    Path(path).write_text(json.dumps(constraints_to_json(constraints), indent=2) + "\n")
