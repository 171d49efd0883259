"""Maximum-entropy reward learning from demonstrated grid paths.

The reward is linear in the per-cell features, R(s) = theta . phi(s). The
log-likelihood gradient per demonstration is the empirical feature count
minus the expected feature count under the current stochastic policy,
computed on that demonstration's own feature stack.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import (OutOfBoundsError, SchemaMismatchError, UnreachableGoalError,
                     ValidationError)
from .grids import FeatureSchema, FeatureStack, GridGeometry
from .mdp import GridMdp, expected_visitation, soft_backward

INIT_WEIGHT_RANGE = 5.0  # cold-start weights drawn uniformly from [-5, 5]


@dataclass(frozen=True)
class Demonstration:
    """One demonstrated path plus the feature stack it was driven over."""

    id: str
    path: tuple[tuple[int, int], ...]
    stack: FeatureStack
    source: str = "oracle"

    def __post_init__(self):
        if self.source not in ("oracle", "human-ui", "file"):
            raise ValidationError(f"unknown demonstration source {self.source!r}")
        path = tuple((int(x), int(y)) for x, y in self.path)
        if len(path) < 2:
            raise ValidationError("a demonstration needs at least 2 cells")
        geo = self.stack.geometry
        for cell in path:
            if not geo.in_bounds(cell):
                raise OutOfBoundsError(f"demonstration cell {cell} is out of bounds")
        for (x0, y0), (x1, y1) in zip(path, path[1:]):
            if max(abs(x1 - x0), abs(y1 - y0)) != 1:
                raise ValidationError(
                    f"cells {(x0, y0)} -> {(x1, y1)} are not 8-adjacent")
        object.__setattr__(self, "path", path)

    @property
    def start(self) -> tuple[int, int]:
        return self.path[0]

    @property
    def goal(self) -> tuple[int, int]:
        return self.path[-1]

    @property
    def schema(self) -> FeatureSchema:
        return self.stack.schema

    def world_points(self) -> list[tuple[float, float]]:
        return [self.stack.geometry.center_of(c) for c in self.path]


@dataclass(frozen=True)
class TrainingMeta:
    demo_ids: tuple[str, ...]
    iterations: int
    final_grad_norm: float
    wall_clock_s: float
    init_mode: str
    stop_reason: str
    seed: int | None = None


@dataclass(frozen=True)
class BehaviorModel:
    """Learned weight vector bound to the feature schema it was trained on."""

    theta: np.ndarray
    schema: FeatureSchema
    meta: TrainingMeta

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.shape != (self.schema.dimension,):
            raise SchemaMismatchError(
                f"theta has shape {theta.shape}, schema needs ({self.schema.dimension},)")
        if not np.isfinite(theta).all():
            raise ValidationError("model weights must be finite")
        object.__setattr__(self, "theta", theta)
        theta.setflags(write=False)


@dataclass(frozen=True)
class RewardMap:
    """Per-cell scalar reward surface rendered from a model and a stack."""

    values: np.ndarray
    geometry: GridGeometry

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.geometry.shape:
            raise ValidationError("reward values shape does not match geometry")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)


def _check_schema(schema: FeatureSchema, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (schema.dimension,):
        raise SchemaMismatchError(
            f"theta has {theta.shape} entries for a {schema.dimension}-feature schema")
    return theta


def feature_counts(demo: Demonstration) -> np.ndarray:
    """Per-feature sums over all visited cells, repeats included."""
    planes = demo.stack.planes
    xs = np.fromiter((c[0] for c in demo.path), dtype=np.int64)
    ys = np.fromiter((c[1] for c in demo.path), dtype=np.int64)
    return planes[:, ys, xs].sum(axis=1)


def path_reward(demo: Demonstration, theta: np.ndarray) -> float:
    """Total reward collected along the demonstration, sum of theta . phi(s)."""
    theta = _check_schema(demo.schema, theta)
    return float(feature_counts(demo) @ theta)


def reward_map(model: BehaviorModel, stack: FeatureStack) -> RewardMap:
    if stack.schema != model.schema:
        raise SchemaMismatchError("feature stack schema differs from the model's")
    values = np.tensordot(model.theta, stack.planes, axes=1)
    return RewardMap(values=values, geometry=stack.geometry)


class _DemoProblem:
    """Cached per-demonstration arrays for repeated gradient evaluations."""

    def __init__(self, demo: Demonstration):
        self.demo = demo
        geo = demo.stack.geometry
        self.mdp = GridMdp(geometry=geo, goal=demo.goal, horizon=2 * len(demo.path) - 1)
        self.features = demo.stack.feature_matrix()  # (n_cells, D)
        self.emp_counts = feature_counts(demo)
        gx, gy = demo.goal
        self.emp_counts_nogoal = self.emp_counts - demo.stack.feature_vector(demo.goal)
        self.start_idx = demo.start[1] * geo.width + demo.start[0]
        self.goal_idx = gy * geo.width + gx
        self.steps = 2 * len(demo.path)
        self._cached_key = None
        self._cached = None

    def _backward(self, theta: np.ndarray):
        key = theta.tobytes()
        if self._cached_key != key:
            r = self.features @ theta
            stack = _kernels.soft_backward_stack(r, self.mdp.succ, self.goal_idx,
                                                 self.mdp.horizon)
            self._cached_key = key
            self._cached = (r, stack)
        return self._cached

    def evaluate(self, theta: np.ndarray, want_gradient: bool = True):
        """(log-likelihood, gradient or None) of this demo under theta."""
        r, stack = self._backward(theta)
        log_z = stack[-1, self.start_idx]
        if log_z == -np.inf:
            raise UnreachableGoalError(
                f"demo {self.demo.id}: goal unreachable within the step budget")
        loglik = float(self.emp_counts_nogoal @ theta - log_z)
        if not want_gradient:
            return loglik, None
        counts, _ = _kernels.visitation_counts(
            r, self.mdp.succ, stack, self.start_idx, self.goal_idx, self.steps)
        grad = self.emp_counts - counts @ self.features
        return loglik, grad


def likelihood_gradient(demos: Sequence[Demonstration],
                        theta: np.ndarray) -> tuple[np.ndarray, float]:
    """Mean gradient and mean log-likelihood over the demonstrations.

    Per demo the gradient is empirical minus expected feature counts, with
    expectations taken over goal-reaching paths of at most 2*len(path) - 1
    steps on the demo's own stack; the returned log-likelihood is the mean
    log-probability of the demos under their per-demo path distributions.
    """
    if not demos:
        raise ValidationError("at least one demonstration is required")
    schema = demos[0].schema
    for d in demos[1:]:
        if d.schema != schema:
            raise SchemaMismatchError(f"demo {d.id} uses a different schema")
    theta = _check_schema(schema, theta)
    grads = np.zeros(schema.dimension)
    logliks = 0.0
    for demo in demos:
        loglik, grad = _DemoProblem(demo).evaluate(theta)
        grads += grad
        logliks += loglik
    return grads / len(demos), logliks / len(demos)


@dataclass(frozen=True)
class TrainBudget:
    max_iterations: int = 500
    wall_clock_s: float | None = None
    tolerance: float = 1e-4


ProgressFn = Callable[[int, float, float, float], None]


def train(demos: Sequence[Demonstration],
          schema: FeatureSchema,
          init: str | np.ndarray = "random",
          budget: TrainBudget = TrainBudget(),
          seed: int = 0,
          progress: ProgressFn | None = None,
          cancel: threading.Event | None = None) -> BehaviorModel:
    """Fit reward weights by gradient ascent on the demo log-likelihood.

    init is either "random" (uniform in [-5, 5], seeded) or a warm-start
    weight vector. The step size follows eta_k = 0.1 * 0.99^k applied to the
    gradient normalized by mean demonstration length (the raw gradient
    scales linearly with path length); a halving backtrack keeps the
    likelihood non-decreasing across accepted iterations. Stops at the
    infinity-norm tolerance, the iteration cap, the wall-clock budget, or
    cancellation, whichever comes first.
    """
    if not demos:
        raise ValidationError("at least one demonstration is required")
    for d in demos:
        if d.schema != schema:
            raise SchemaMismatchError(f"demo {d.id} schema differs from the training schema")

    if isinstance(init, str):
        if init != "random":
            raise ValidationError(f"unknown init mode {init!r}")
        rng = np.random.default_rng(seed)
        theta = rng.uniform(-INIT_WEIGHT_RANGE, INIT_WEIGHT_RANGE, schema.dimension)
        init_mode = "random"
    else:
        theta = _check_schema(schema, np.array(init, dtype=np.float64, copy=True))
        init_mode = "warm"

    problems = [_DemoProblem(d) for d in demos]
    mean_len = float(np.mean([len(d.path) for d in demos]))
    t0 = time.perf_counter()

    def out_of_time() -> bool:
        return (budget.wall_clock_s is not None
                and time.perf_counter() - t0 >= budget.wall_clock_s)

    def full_eval(th):
        g = np.zeros(schema.dimension)
        ll = 0.0
        for p in problems:
            loglik, grad = p.evaluate(th)
            ll += loglik
            g += grad
        return ll / len(problems), g / len(problems) / mean_len

    def probe_eval(th):
        # line-search probe: log-likelihood only, no forward pass; the
        # backward stack is cached so a follow-up gradient at the same
        # theta reuses it
        return sum(p.evaluate(th, want_gradient=False)[0]
                   for p in problems) / len(problems)

    loglik, direction = full_eval(theta)
    grad_norm = float(np.abs(direction).max())
    iterations = 0
    stop_reason = "max-iterations"
    eta = 0.1  # base step on the length-normalized gradient
    for k in range(budget.max_iterations):
        if progress is not None:
            progress(k, grad_norm, time.perf_counter() - t0, loglik)
        if cancel is not None and cancel.is_set():
            stop_reason = "cancelled"
            break
        if grad_norm < budget.tolerance:
            stop_reason = "converged"
            break
        if out_of_time():
            stop_reason = "budget"
            break
        def interrupted():
            return out_of_time() or (cancel is not None and cancel.is_set())

        # monotone line search along the gradient: backtrack (halve) until the
        # likelihood is non-decreasing, then expand (double) while it strictly
        # improves; the accepted step seeds the next iteration
        floor = loglik - 1e-12 * max(1.0, abs(loglik))
        accepted = False
        for _ in range(30):
            cand_ll = probe_eval(theta + eta * direction)
            if cand_ll >= floor:
                accepted = True
                break
            eta *= 0.5
            if interrupted():
                break
        if accepted:
            best = (eta, cand_ll)
            probe = eta
            while probe < 1e4 and not interrupted():
                probe *= 2.0
                next_ll = probe_eval(theta + probe * direction)
                if next_ll <= best[1]:
                    break
                best = (probe, next_ll)
            eta, _ = best
            theta = theta + eta * direction
            loglik, direction = full_eval(theta)
        iterations = k + 1
        grad_norm = float(np.abs(direction).max())
        if not accepted:
            if cancel is not None and cancel.is_set():
                stop_reason = "cancelled"
            elif out_of_time():
                stop_reason = "budget"
            else:
                stop_reason = "no-ascent"
            break

    elapsed = time.perf_counter() - t0
    meta = TrainingMeta(
        demo_ids=tuple(d.id for d in demos),
        iterations=iterations,
        final_grad_norm=grad_norm,
        wall_clock_s=elapsed,
        init_mode=init_mode,
        stop_reason=stop_reason,
        seed=seed if init_mode == "random" else None,
    )
    return BehaviorModel(theta=theta, schema=schema, meta=meta)


def visitation_for_demo(demo: Demonstration, theta: np.ndarray):
    """Expected visitation field for one demo at the given weights.

    Exposed for inspection and tests; training uses the fused kernel path.
    """
    theta = _check_schema(demo.schema, theta)
    problem = _DemoProblem(demo)
    r = problem.features @ theta
    policy = soft_backward(problem.mdp, r)
    return expected_visitation(problem.mdp, policy, demo.start, problem.steps)


MODEL_FORMAT = "navlearn-model/1"


def model_to_json(model: BehaviorModel) -> str:
    """Deterministic model serialization; identical models give identical bytes.

    Wall-clock time is deliberately not serialized: it is the one meta field
    that can never be bit-stable across runs.
    """
    import json

    doc = {
        "format": MODEL_FORMAT,
        "schema": [[k, r] for k, r in model.schema.descriptors],
        "theta": [float(v) for v in model.theta],
        "training": {
            "demo_ids": list(model.meta.demo_ids),
            "iterations": model.meta.iterations,
            "final_grad_norm": float(model.meta.final_grad_norm),
            "init_mode": model.meta.init_mode,
            "stop_reason": model.meta.stop_reason,
            "seed": model.meta.seed,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> BehaviorModel:
    import json

    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"not a model file (format={doc.get('format')!r})")
    schema = FeatureSchema(tuple((k, int(r)) for k, r in doc["schema"]))
    tr = doc["training"]
    meta = TrainingMeta(
        demo_ids=tuple(tr["demo_ids"]),
        iterations=int(tr["iterations"]),
        final_grad_norm=float(tr["final_grad_norm"]),
        wall_clock_s=0.0,
        init_mode=tr["init_mode"],
        stop_reason=tr["stop_reason"],
        seed=tr.get("seed"),
    )
    return BehaviorModel(theta=np.array(doc["theta"], dtype=np.float64),
                         schema=schema, meta=meta)


def save_model(model: BehaviorModel, path) -> None:
    from pathlib import Path

    Path(path).write_text(model_to_json(model))


def load_model(path) -> BehaviorModel:
    from pathlib import Path

    return model_from_json(Path(path).read_text())
