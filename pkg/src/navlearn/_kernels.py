"""Hot loops for the soft value recursion and the visitation forward pass.

Kept free of any domain types so numba can compile them once per dtype
signature. States are flattened row-major; `succ[s, a]` is the successor of
state s under action a, or -1 where the action is unavailable.
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def soft_backward_stack(reward, succ, goal, sweeps):
    """Log path-weight stack V[b, s] for path budgets b = 0..sweeps.

    V[b, s] = log sum over goal-reaching paths from s using at most b steps
    of exp(sum of rewards over the path's non-goal states). The goal row is
    pinned to 0 (absorbing, no further reward). Unreachable (s, b) pairs
    stay at -inf.
    """
    n = reward.shape[0]
    v = np.full((sweeps + 1, n), NEG_INF)
    v[0, goal] = 0.0
    for b in range(1, sweeps + 1):
        prev = v[b - 1]
        cur = v[b]
        for s in range(n):
            if s == goal:
                cur[s] = 0.0
                continue
            m = NEG_INF
            for a in range(8):
                t = succ[s, a]
                if t >= 0 and prev[t] > m:
                    m = prev[t]
            if m == NEG_INF:
                continue
            acc = 0.0
            for a in range(8):
                t = succ[s, a]
                if t >= 0 and prev[t] > NEG_INF:
                    acc += np.exp(prev[t] - m)
            cur[s] = reward[s] + m + np.log(acc)
    return v


@njit(cache=True)
def visitation_counts(reward, succ, v, start, goal, steps):
    """Expected visit counts D[s] = sum_{t=0}^{steps-1} mu_t(s).

    mu_0 is a delta at `start`; each step moves unabsorbed mass with the
    budget-matched stochastic policy pi(a | s, b) proportional to
    exp(reward[s] + V[b-1, succ]). Mass reaching the goal is counted once,
    on arrival, then retired. Returns (D, mass_trace) where mass_trace[t]
    is active-plus-absorbed probability mass at step t (conservation check).
    """
    n = reward.shape[0]
    mu = np.zeros(n)
    nxt = np.zeros(n)
    counts = np.zeros(n)
    trace = np.ones(steps)
    mu[start] = 1.0
    absorbed = 0.0
    for t in range(steps):
        active = 0.0
        for s in range(n):
            counts[s] += mu[s]
            active += mu[s]
        trace[t] = active + absorbed
        absorbed += mu[goal]
        active -= mu[goal]
        mu[goal] = 0.0
        b = steps - 1 - t
        if b <= 0 or active <= 0.0:
            for r in range(t + 1, steps):
                trace[r] = absorbed
            break
        vb = v[b]
        vp = v[b - 1]
        for s in range(n):
            nxt[s] = 0.0
        for s in range(n):
            if mu[s] <= 0.0 or vb[s] == NEG_INF:
                continue
            base = reward[s] - vb[s]
            for a in range(8):
                t2 = succ[s, a]
                if t2 >= 0 and vp[t2] > NEG_INF:
                    nxt[t2] += mu[s] * np.exp(base + vp[t2])
        tmp = mu
        mu = nxt
        nxt = tmp
    return counts, trace
