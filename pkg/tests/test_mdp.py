import numpy as np
import pytest

from navlearn.errors import UnreachableGoalError, ValidationError
from navlearn.mdp import (GridMdp, expected_visitation, soft_backward,
                          successor_table)

from conftest import make_geometry
from oracles import enumerate_goal_paths, enumerated_visit_counts, path_distribution


def corridor(n, height=1):
    # GridGeometry requires >= 2 rows; emulate a 1-wide corridor by blocking row 1
    geo = make_geometry(n, 2)
    impassable = np.zeros(geo.shape, dtype=bool)
    impassable[1, :] = True
    return geo, impassable


def state_coords(geometry):
    idx = np.arange(geometry.n_cells)
    return np.column_stack((idx % geometry.width, idx // geometry.width))


class TestSoftBackward:
    def test_forced_move_probability_one(self):
        geo, blocked = corridor(2)
        mdp = GridMdp(geometry=geo, goal=(1, 0), horizon=4, impassable=blocked)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        probs = policy.action_probabilities((0, 0), budget=4)
        assert probs == {(1, 0): pytest.approx(1.0)}

    def test_cross_map_symmetry(self):
        geo = make_geometry(5, 5)
        blocked = np.ones(geo.shape, dtype=bool)
        blocked[2, :] = False
        blocked[:, 2] = False
        mdp = GridMdp(geometry=geo, goal=(2, 2), impassable=blocked)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        v = policy.values.copy()
        v[blocked] = 0.0  # -inf on blocked cells; mask before comparing
        for k in (1, 2, 3):
            assert np.allclose(v, np.rot90(v, k))

    def test_corridor_path_probabilities_match_enumeration(self):
        geo, blocked = corridor(3)
        rewards = np.zeros(geo.n_cells)
        rewards[0], rewards[1], rewards[2] = -1.0, -1.0, 0.0
        horizon = 7
        mdp = GridMdp(geometry=geo, goal=(2, 0), horizon=horizon, impassable=blocked)
        policy = soft_backward(mdp, rewards)

        paths = enumerate_goal_paths(mdp.succ, 0, 2, horizon, state_coords(geo))
        probs = path_distribution(paths, rewards)
        for path, expected in zip(paths, probs):
            p = 1.0
            for t, (s, nxt) in enumerate(zip(path, path[1:])):
                row = policy.policy_at(horizon - t)[s]
                step = {mdp.succ[s, a]: row[a] for a in range(8) if mdp.succ[s, a] >= 0}
                p *= step[nxt]
            assert p == pytest.approx(expected, abs=1e-12)

    def test_unreachable_states_have_empty_policy(self):
        geo = make_geometry(4, 4)
        blocked = np.zeros(geo.shape, dtype=bool)
        blocked[:, 2] = True  # wall splits the grid
        mdp = GridMdp(geometry=geo, goal=(0, 0), horizon=6, impassable=blocked)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        assert policy.values[1, 3] == -np.inf
        assert policy.action_probabilities((3, 1), budget=6) == {}

    def test_impassable_goal_rejected(self):
        geo = make_geometry(4, 4)
        blocked = np.zeros(geo.shape, dtype=bool)
        blocked[1, 1] = True
        with pytest.raises(UnreachableGoalError):
            GridMdp(geometry=geo, goal=(1, 1), impassable=blocked)

    def test_policy_invariant_to_reward_shift_given_values(self):
        # per-state softmax over R(s) + V(succ): the action-independent R(s)
        # cancels, so the extracted policy is identical for R and R + c
        geo = make_geometry(4, 3)
        rng = np.random.default_rng(7)
        r = rng.normal(size=geo.n_cells)
        mdp = GridMdp(geometry=geo, goal=(3, 2), horizon=8)
        base = soft_backward(mdp, r)
        shifted = object.__new__(type(base))
        object.__setattr__(shifted, "mdp", base.mdp)
        object.__setattr__(shifted, "reward", base.reward + 3.7)
        object.__setattr__(shifted, "value_stack", base.value_stack)
        for budget in (1, 3, 8):
            assert np.allclose(base.policy_at(budget), shifted.policy_at(budget))


class TestExpectedVisitation:
    def test_start_equals_goal(self):
        geo = make_geometry(3, 3)
        mdp = GridMdp(geometry=geo, goal=(1, 1), horizon=4)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        field = expected_visitation(mdp, policy, (1, 1), steps=4)
        expected = np.zeros(geo.shape)
        expected[1, 1] = 1.0
        assert np.allclose(field.counts, expected)

    def test_two_cell_corridor_counts(self):
        geo, blocked = corridor(2)
        mdp = GridMdp(geometry=geo, goal=(1, 0), horizon=1, impassable=blocked)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        field = expected_visitation(mdp, policy, (0, 0), steps=2)
        assert field.counts[0, 0] == pytest.approx(1.0)
        assert field.counts[0, 1] == pytest.approx(1.0)

    def test_mass_conservation_every_step(self, rng):
        geo = make_geometry(6, 5)
        r = rng.normal(-0.5, 1.0, geo.n_cells)
        mdp = GridMdp(geometry=geo, goal=(5, 4), horizon=12)
        policy = soft_backward(mdp, r)
        field = expected_visitation(mdp, policy, (0, 0), steps=13)
        assert np.abs(field.mass_trace - 1.0).max() < 1e-9

    def test_counts_match_enumeration(self, rng):
        for trial in range(10):
            w, h = int(rng.integers(3, 5)), int(rng.integers(2, 4))
            geo = make_geometry(w, h)
            r = rng.normal(0, 1.2, geo.n_cells)
            start = int(rng.integers(0, geo.n_cells))
            goal = int(rng.integers(0, geo.n_cells))
            steps = int(rng.integers(3, 7))
            mdp = GridMdp(geometry=geo, goal=(goal % w, goal // w), horizon=steps - 1)
            policy = soft_backward(mdp, r)
            paths = enumerate_goal_paths(mdp.succ, start, goal, steps - 1,
                                         state_coords(geo))
            if not paths:
                continue
            field = expected_visitation(mdp, policy, (start % w, start // w), steps)
            probs = path_distribution(paths, r)
            ref = enumerated_visit_counts(paths, probs, geo.n_cells)
            assert np.abs(field.counts.ravel() - ref).max() < 1e-9

    def test_start_impassable_rejected(self):
        geo = make_geometry(4, 4)
        blocked = np.zeros(geo.shape, dtype=bool)
        blocked[0, 0] = True
        mdp = GridMdp(geometry=geo, goal=(3, 3), horizon=6, impassable=blocked)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        with pytest.raises(ValidationError):
            expected_visitation(mdp, policy, (0, 0), steps=3)

    def test_goal_unreachable_within_budget(self):
        geo = make_geometry(6, 2)
        mdp = GridMdp(geometry=geo, goal=(5, 0), horizon=2)
        policy = soft_backward(mdp, np.zeros(geo.n_cells))
        with pytest.raises(UnreachableGoalError):
            expected_visitation(mdp, policy, (0, 0), steps=3)


class TestSuccessorTable:
    def test_border_actions_removed(self):
        geo = make_geometry(3, 3)
        succ = successor_table(geo)
        # corner cell 0 keeps only E, S, SE
        assert (succ[0] >= 0).sum() == 3
        # center keeps all 8
        assert (succ[4] >= 0).sum() == 8

    def test_impassable_cells_isolated(self):
        geo = make_geometry(3, 3)
        blocked = np.zeros(geo.shape, dtype=bool)
        blocked[1, 1] = True
        succ = successor_table(geo, blocked)
        assert (succ[4] == -1).all()
        assert 4 not in set(succ[succ >= 0].tolist())
