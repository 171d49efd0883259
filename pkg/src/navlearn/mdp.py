"""Deterministic grid MDP and the soft (maximum-entropy) value recursion.

States are grid cells, actions the 8 king moves, transitions deterministic.
The backward pass keeps the value field of every sweep so the forward pass
can use the budget-matched stochastic policy; the induced path distribution
is then exactly proportional to the exponentiated path reward over all
goal-reaching paths within the step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import OutOfBoundsError, UnreachableGoalError, ValidationError
from .grids import GridGeometry

# king moves, scanline order; opposite(a) = 7 - a
KING_MOVES = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


def default_horizon(geometry: GridGeometry) -> int:
    return 2 * (geometry.width + geometry.height)


def successor_table(geometry: GridGeometry, impassable: np.ndarray | None = None) -> np.ndarray:
    """(n_cells, 8) flat successor indices; -1 where a move leaves the grid
    or enters an impassable cell. Impassable cells get no actions at all."""
    w, h = geometry.width, geometry.height
    n = w * h
    idx = np.arange(n)
    xs, ys = idx % w, idx // w
    succ = np.full((n, 8), -1, dtype=np.int64)
    blocked = None
    if impassable is not None:
        blocked = np.asarray(impassable, dtype=bool).ravel()
        if blocked.shape[0] != n:
            raise ValidationError("impassable mask shape does not match geometry")
    for a, (dx, dy) in enumerate(KING_MOVES):
        nx, ny = xs + dx, ys + dy
        ok = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
        tgt = np.where(ok, ny * w + nx, 0)
        if blocked is not None:
            ok &= ~blocked[tgt]
        succ[ok, a] = tgt[ok]
    if blocked is not None:
        succ[blocked] = -1
    return succ


@dataclass(frozen=True)
class GridMdp:
    """Grid MDP with an absorbing goal and a finite step budget.

    gamma is carried for completeness but fixed at 1; the finite horizon
    plays the role of discounting.
    """

    geometry: GridGeometry
    goal: tuple[int, int]
    horizon: int | None = None
    impassable: np.ndarray | None = None
    gamma: float = 1.0
    succ: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.geometry.in_bounds(self.goal):
            raise OutOfBoundsError(f"goal {self.goal} is out of bounds")
        if self.horizon is None:
            object.__setattr__(self, "horizon", default_horizon(self.geometry))
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if self.impassable is not None:
            mask = np.asarray(self.impassable, dtype=bool)
            if mask.shape != self.geometry.shape:
                raise ValidationError("impassable mask shape does not match geometry")
            if mask[self.goal[1], self.goal[0]]:
                raise UnreachableGoalError(f"goal {self.goal} is impassable")
            object.__setattr__(self, "impassable", mask)
        object.__setattr__(self, "succ", successor_table(self.geometry, self.impassable))
        self.succ.setflags(write=False)

    @property
    def goal_index(self) -> int:
        return self.goal[1] * self.geometry.width + self.goal[0]

    def is_passable(self, cell: tuple[int, int]) -> bool:
        if self.impassable is None:
            return True
        return not self.impassable[cell[1], cell[0]]


@dataclass(frozen=True)
class SoftPolicy:
    """Value stack and stochastic policy from the soft backward pass.

    `value_stack[b]` is the log total weight of goal-reaching paths using at
    most b steps; `values` exposes the final sweep. The policy is budget-
    indexed: pi(a | s, b) is proportional to exp(R(s) + V[b-1, succ(s, a)]).
    States that cannot reach the goal within the remaining budget have an
    empty policy (all-zero row).
    """

    mdp: GridMdp
    reward: np.ndarray = field(repr=False)
    value_stack: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.value_stack[-1].reshape(self.mdp.geometry.shape)

    @property
    def sweeps(self) -> int:
        return self.value_stack.shape[0] - 1

    def policy_at(self, budget: int) -> np.ndarray:
        """(n_cells, 8) action probabilities for the given remaining budget."""
        if not 1 <= budget <= self.sweeps:
            raise ValidationError(f"budget must be in [1, {self.sweeps}]")
        succ = self.mdp.succ
        vb = self.value_stack[budget]
        vp = self.value_stack[budget - 1]
        ok = succ >= 0
        sidx = np.where(ok, succ, 0)
        with np.errstate(invalid="ignore"):
            logw = np.where(ok, vp[sidx], -np.inf) - vb[:, None]
        pi = np.zeros_like(logw)
        live = np.isfinite(logw)
        # R(s) cancels in the per-state normalization, so omit it here
        pi[live] = np.exp(logw[live])
        rows = pi.sum(axis=1, keepdims=True)
        np.divide(pi, rows, out=pi, where=rows > 0)
        pi[self.mdp.goal_index] = 0.0
        return pi

    def action_probabilities(self, cell: tuple[int, int], budget: int) -> dict[tuple[int, int], float]:
        """Move -> probability map for one cell (empty if no path in budget)."""
        idx = cell[1] * self.mdp.geometry.width + cell[0]
        row = self.policy_at(budget)[idx]
        return {KING_MOVES[a]: float(p) for a, p in enumerate(row) if p > 0}


@dataclass(frozen=True)
class VisitationField:
    """Expected per-cell visit counts for one start/goal/budget rollout."""

    counts: np.ndarray
    start: tuple[int, int]
    steps: int
    mass_trace: np.ndarray
    policy: SoftPolicy = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.counts.sum())


def soft_backward(mdp: GridMdp, reward: np.ndarray) -> SoftPolicy:
    """Run `mdp.horizon` sweeps of the soft Bellman recursion.

    V(s) <- log sum_a exp(R(s) + V(succ(s, a))) with the goal pinned at 0
    each sweep; evaluated with max-shifted log-sum-exp. Every sweep's field
    is retained so the forward pass can match its policy to the remaining
    step budget.
    """
    r = np.asarray(reward, dtype=np.float64).reshape(-1)
    if r.shape[0] != mdp.geometry.n_cells:
        raise ValidationError("reward field shape does not match geometry")
    if not np.isfinite(r).all():
        raise ValidationError("reward field must be finite")
    if not mdp.is_passable(mdp.goal):
        raise UnreachableGoalError(f"goal {mdp.goal} is impassable")
    stack = _kernels.soft_backward_stack(r, mdp.succ, mdp.goal_index, mdp.horizon)
    return SoftPolicy(mdp=mdp, reward=r, value_stack=stack)


def expected_visitation(mdp: GridMdp, policy: SoftPolicy, start: tuple[int, int],
                        steps: int) -> VisitationField:
    """Expected state visitation counts D_s over `steps` time slots.

    D^0 is a delta at `start`; mass propagates with the budget-matched
    policy and is retired once it reaches the goal (counted exactly once,
    at arrival). Requires steps - 1 <= policy sweeps so every slot has a
    matching policy.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if not mdp.geometry.in_bounds(start):
        raise OutOfBoundsError(f"start {start} is out of bounds")
    if not mdp.is_passable(start):
        raise ValidationError(f"start {start} is impassable")
    if steps - 1 > policy.sweeps:
        raise ValidationError(
            f"steps={steps} exceeds the policy's {policy.sweeps}-sweep budget")
    start_idx = start[1] * mdp.geometry.width + start[0]
    if start_idx != mdp.goal_index and policy.value_stack[steps - 1, start_idx] == -np.inf:
        raise UnreachableGoalError(
            f"goal {mdp.goal} is unreachable from {start} within {steps - 1} steps")
    counts, trace = _kernels.visitation_counts(
        policy.reward, mdp.succ, policy.value_stack, start_idx, mdp.goal_index, steps)
    return VisitationField(counts=counts.reshape(mdp.geometry.shape), start=start,
                           steps=steps, mass_trace=trace, policy=policy)
