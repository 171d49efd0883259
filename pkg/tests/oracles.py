"""Brute-force reference implementations used as independent test oracles.

Everything here trades efficiency for obviousness: per-cell scans, explicit
path enumeration, and full relaxation shortest paths. None of it shares code
with the production algorithms it checks.
"""

from __future__ import annotations

import numpy as np

from navlearn.mdp import KING_MOVES


def nearest_source_scan(cells: np.ndarray) -> np.ndarray:
    """Per-cell Manhattan distance to the closest 1, by scanning every pair."""
    h, w = cells.shape
    sources = np.argwhere(cells == 1)
    out = np.full((h, w), h + w, dtype=np.int64)
    if sources.size == 0:
        return out
    for y in range(h):
        for x in range(w):
            out[y, x] = min(abs(sy - y) + abs(sx - x) for sy, sx in sources)
    return out


def enumerate_goal_paths(succ: np.ndarray, start: int, goal: int,
                         max_steps: int, coords: np.ndarray) -> list[list[int]]:
    """All paths start -> goal with at most max_steps moves (DFS).

    coords[s] = (x, y) is used only to prune branches that cannot reach the
    goal in the remaining budget (Chebyshev lower bound, exact for king
    moves on an open grid, admissible with obstacles).
    """
    gx, gy = coords[goal]
    paths: list[list[int]] = []
    path = [start]

    def chebyshev(s: int) -> int:
        x, y = coords[s]
        return max(abs(int(x) - int(gx)), abs(int(y) - int(gy)))

    def dfs(s: int, budget: int):
        if s == goal:
            paths.append(path.copy())
            return
        if budget <= 0 or chebyshev(s) > budget:
            return
        for a in range(8):
            t = succ[s, a]
            if t >= 0:
                path.append(int(t))
                dfs(int(t), budget - 1)
                path.pop()

    dfs(start, max_steps)
    return paths


def path_distribution(paths: list[list[int]], rewards: np.ndarray) -> np.ndarray:
    """Normalized probabilities proportional to exp(sum of non-goal rewards)."""
    logw = np.array([rewards[p[:-1]].sum() for p in paths])
    logw -= logw.max()
    p = np.exp(logw)
    return p / p.sum()


def enumerated_visit_counts(paths, probs, n_states: int) -> np.ndarray:
    counts = np.zeros(n_states)
    for path, pr in zip(paths, probs):
        for s in path:
            counts[s] += pr
    return counts


def enumerated_loglik(paths: list[list[int]], features: np.ndarray,
                      theta: np.ndarray, demo_path: list[int]) -> float:
    """log P(demo) where P(path) ~ exp(theta . feature sum over non-goal cells)."""
    sums = np.stack([features[p[:-1]].sum(axis=0) for p in paths])
    scores = sums @ theta
    demo_score = features[demo_path[:-1]].sum(axis=0) @ theta
    m = scores.max()
    return float(demo_score - (m + np.log(np.exp(scores - m).sum())))


def finite_difference_gradient(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(theta)
    for j in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (f(up) - f(dn)) / (2 * h)
    return g


def relaxation_shortest_cost(entry_cost: np.ndarray, impassable: np.ndarray | None,
                             start: tuple[int, int], goal: tuple[int, int]) -> float:
    """Bellman-Ford style full relaxation; cost of the optimal 8-connected path."""
    h, w = entry_cost.shape
    if impassable is None:
        impassable = np.zeros((h, w), dtype=bool)
    dist = np.full((h, w), np.inf)
    dist[start[1], start[0]] = 0.0
    for _ in range(h * w):
        changed = False
        for y in range(h):
            for x in range(w):
                if impassable[y, x] or not np.isfinite(dist[y, x]):
                    continue
                for dx, dy in KING_MOVES:
                    nx, ny = x + dx, y + dy
                    if not (0 <= nx < w and 0 <= ny < h) or impassable[ny, nx]:
                        continue
                    step = np.sqrt(2.0) if dx != 0 and dy != 0 else 1.0
                    nd = dist[y, x] + step * entry_cost[ny, nx]
                    if nd < dist[ny, nx] - 1e-15:
                        dist[ny, nx] = nd
                        changed = True
        if not changed:
            break
    return float(dist[goal[1], goal[0]])
