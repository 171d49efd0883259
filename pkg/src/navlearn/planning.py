"""Grid path planners and trajectory utilities.

The IOC planner turns a reward surface into a minimum-cost path problem
(high reward = cheap to enter); the baseline planner knows only laser
opacity and unknown-space costs, never terrain. Both search the same
8-connected graph with diagonal steps scaled by sqrt(2) and deterministic
tie-breaking, so identical inputs always give identical trajectories.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import UnreachableGoalError, ValidationError
from .grids import GridGeometry, OpacityLayer
from .learning import RewardMap
from .mdp import KING_MOVES

REWARD_COST_EPSILON = 1e-6
SQRT2 = float(np.sqrt(2.0))

_STEP_LENGTHS = tuple(SQRT2 if dx != 0 and dy != 0 else 1.0 for dx, dy in KING_MOVES)


@dataclass(frozen=True)
class Trajectory:
    """Ordered world points in meters, with synthetic or recorded timestamps."""

    points: np.ndarray
    provenance: str
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] < 1:
            raise ValidationError("a trajectory needs at least one point")
        if not np.isfinite(pts).all():
            raise ValidationError("trajectory coordinates must be finite")
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
            if ts.shape[0] != pts.shape[0]:
                raise ValidationError("timestamps and points differ in length")
            object.__setattr__(self, "timestamps", ts)
            ts.setflags(write=False)
        if self.provenance not in ("ground-truth", "ioc", "baseline", "oracle", "demonstration"):
            raise ValidationError(f"unknown provenance {self.provenance!r}")

    def __len__(self) -> int:
        return self.points.shape[0]

    def arc_lengths(self) -> np.ndarray:
        """Cumulative distance along the polyline, starting at 0."""
        if len(self) == 1:
            return np.zeros(1)
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate(([0.0], np.cumsum(seg)))

    @property
    def length(self) -> float:
        return float(self.arc_lengths()[-1])

    def effective_timestamps(self) -> np.ndarray:
        """Recorded timestamps, or arc length at a nominal 1 m/s."""
        if self.timestamps is not None:
            return self.timestamps
        return self.arc_lengths()


def densify(traj: Trajectory, step: float) -> Trajectory:
    """Resample a trajectory at fixed arc-length spacing, keeping endpoints."""
    if not step > 0:
        raise ValidationError("resample step must be positive")
    if len(traj) == 1:
        return traj
    arcs = traj.arc_lengths()
    total = arcs[-1]
    if total == 0.0:
        return Trajectory(points=traj.points[:1], provenance=traj.provenance)
    samples = np.arange(0.0, total, step)
    if total - samples[-1] > 1e-12:
        samples = np.concatenate((samples, [total]))
    else:
        samples[-1] = total
    xs = np.interp(samples, arcs, traj.points[:, 0])
    ys = np.interp(samples, arcs, traj.points[:, 1])
    ts = None
    if traj.timestamps is not None:
        ts = np.interp(samples, arcs, traj.timestamps)
    return Trajectory(points=np.column_stack((xs, ys)), provenance=traj.provenance,
                      timestamps=ts)


def _shortest_path_cells(entry_cost: np.ndarray, impassable: np.ndarray | None,
                         start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Deterministic Dijkstra over the 8-connected grid.

    entry_cost[y, x] is the per-unit-length cost of entering a cell; an edge
    into a neighbor costs step_length * entry_cost[neighbor]. Ties in the
    frontier settle by (cost, row, column); parents relax only on strict
    improvement in a fixed action order, so the result is reproducible.
    """
    h, w = entry_cost.shape
    if impassable is None:
        impassable = np.zeros((h, w), dtype=bool)
    for name, (x, y) in (("start", start), ("goal", goal)):
        if not (0 <= x < w and 0 <= y < h):
            raise ValidationError(f"{name} {(x, y)} is out of bounds")
        if impassable[y, x]:
            raise ValidationError(f"{name} {(x, y)} is not passable")
    if (entry_cost[~impassable] <= 0).any():
        raise ValidationError("entry costs must be positive on passable cells")
    if start == goal:
        return [start]

    dist = np.full((h, w), np.inf)
    settled = np.zeros((h, w), dtype=bool)
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    dist[start[1], start[0]] = 0.0
    frontier: list[tuple[float, int, int]] = [(0.0, start[1], start[0])]
    while frontier:
        d, y, x = heapq.heappop(frontier)
        if settled[y, x]:
            continue
        settled[y, x] = True
        if (x, y) == goal:
            break
        for (dx, dy), step in zip(KING_MOVES, _STEP_LENGTHS):
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or impassable[ny, nx] or settled[ny, nx]:
                continue
            nd = d + step * entry_cost[ny, nx]
            if nd < dist[ny, nx]:
                dist[ny, nx] = nd
                parent[(nx, ny)] = (x, y)
                heapq.heappush(frontier, (nd, ny, nx))
    if not settled[goal[1], goal[0]]:
        raise UnreachableGoalError(f"no path from {start} to {goal} through passable cells")
    cells = [goal]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    cells.reverse()
    return cells


def _cells_to_trajectory(cells: list[tuple[int, int]], geometry: GridGeometry,
                         provenance: str) -> Trajectory:
    pts = np.array([geometry.center_of(c) for c in cells], dtype=np.float64)
    traj = Trajectory(points=pts, provenance=provenance)
    return Trajectory(points=pts, provenance=provenance, timestamps=traj.arc_lengths())


def plan_ioc(reward: RewardMap, start: tuple[int, int], goal: tuple[int, int],
             impassable: np.ndarray | None = None) -> Trajectory:
    """Maximum-reward path via a minimum-cost transform of the reward map.

    Entering a cell costs step_length * (R_max - R(cell) + epsilon); the
    epsilon keeps edge costs positive so the optimum is well defined and a
    constant reward shift never changes the path.
    """
    entry = reward.values.max() - reward.values + REWARD_COST_EPSILON
    cells = _shortest_path_cells(entry, impassable, start, goal)
    return _cells_to_trajectory(cells, reward.geometry, "ioc")


@dataclass(frozen=True)
class BaselineParams:
    w_obstacle: float = 50.0
    w_unknown: float = 10.0
    inflation_radius_cells: int = 2
    lethal_opacity: float = 0.97


@dataclass(frozen=True)
class PlanRequest:
    """One planning request against a stored environment.

    Exactly one of model_id (IOC) or baseline parameters applies; start may
    equal goal only as the trivial single-point plan.
    """

    start: tuple[int, int]
    goal: tuple[int, int]
    environment_id: str
    model_id: str | None = None
    baseline: BaselineParams | None = None

    def __post_init__(self):
        if (self.model_id is None) == (self.baseline is None):
            raise ValidationError(
                "a plan request names either a model or baseline parameters")

    def validate_bounds(self, geometry: GridGeometry) -> None:
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not geometry.in_bounds(cell):
                raise ValidationError(f"{name} {cell} is out of bounds")


def inflate_obstacles(hard: np.ndarray, radius_cells: int) -> np.ndarray:
    """Hard cells plus every cell within the Euclidean inflation radius."""
    if not hard.any():
        return hard.astype(bool)
    dist = ndimage.distance_transform_edt(~hard.astype(bool))
    return dist <= radius_cells


def plan_baseline(opacity: OpacityLayer, start: tuple[int, int], goal: tuple[int, int],
                  params: BaselineParams = BaselineParams()) -> Trajectory:
    """Obstacle-only shortest path; terrain features are never consulted.

    Cells at lethal opacity, and everything within the inflation radius of
    them, are impassable; remaining cells cost
    step_length * (1 + w_obstacle * opacity + w_unknown * [unknown]).
    """
    hard = opacity.cells >= params.lethal_opacity
    blocked = inflate_obstacles(hard, params.inflation_radius_cells)
    entry = 1.0 + params.w_obstacle * opacity.cells + params.w_unknown * opacity.unknown
    cells = _shortest_path_cells(entry, blocked, start, goal)
    return _cells_to_trajectory(cells, opacity.geometry, "baseline")


def plan_cells(cost: np.ndarray, impassable: np.ndarray | None,
               start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Shortest cell path under an arbitrary positive entry-cost surface."""
    return _shortest_path_cells(np.asarray(cost, dtype=np.float64), impassable, start, goal)


TRAJECTORY_HEADER = "t_s,x_m,y_m"


def trajectory_to_csv(traj: Trajectory) -> str:
    ts = traj.effective_timestamps()
    lines = [TRAJECTORY_HEADER]
    lines.extend(f"{repr(float(t))},{repr(float(x))},{repr(float(y))}"
                 for t, (x, y) in zip(ts, traj.points))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str, provenance: str) -> Trajectory:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0].strip() != TRAJECTORY_HEADER:
        raise ValidationError("trajectory file must start with 't_s,x_m,y_m'")
    rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
    if not rows:
        raise ValidationError("trajectory file has no points")
    arr = np.array(rows, dtype=np.float64)
    return Trajectory(points=arr[:, 1:3], provenance=provenance, timestamps=arr[:, 0])


def save_trajectory(traj: Trajectory, path) -> None:
    Path(path).write_text(trajectory_to_csv(traj))


def load_trajectory(path, provenance: str) -> Trajectory:
    return trajectory_from_csv(Path(path).read_text(), provenance)
