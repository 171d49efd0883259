import numpy as np
import pytest

from navlearn.errors import ValidationError
from navlearn.metrics import format_table, mhd, realign_start, results_to_csv, summarize
from navlearn.planning import Trajectory, densify


def traj(points):
    return Trajectory(points=np.asarray(points, dtype=float), provenance="oracle")


class TestMhd:
    def test_self_distance_zero(self, rng):
        a = traj(rng.normal(size=(12, 2)))
        assert mhd(a, a) == 0.0

    def test_hand_computed_case(self):
        a = traj([(0.0, 0.0), (1.0, 0.0)])
        b = traj([(0.0, 1.0)])
        assert mhd(a, b) == pytest.approx((1 + np.sqrt(2)) / 2)

    def test_directedness(self):
        a = traj([(0.0, 0.0)])
        b = traj([(0.0, 0.0), (10.0, 0.0)])
        assert mhd(a, b) == pytest.approx(0.0)
        assert mhd(b, a) == pytest.approx(5.0)

    def test_symmetric_variant(self):
        a = traj([(0.0, 0.0)])
        b = traj([(0.0, 0.0), (10.0, 0.0)])
        assert mhd(a, b, symmetric=True) == pytest.approx(5.0)
        assert mhd(b, a, symmetric=True) == pytest.approx(5.0)

    def test_rigid_motion_invariance(self, rng):
        a = traj(rng.normal(size=(9, 2)))
        b = traj(rng.normal(size=(7, 2)))
        base = mhd(a, b)
        angle = 0.83
        rot = np.array([[np.cos(angle), -np.sin(angle)],
                        [np.sin(angle), np.cos(angle)]])
        shift = np.array([4.2, -1.7])
        a2 = traj(a.points @ rot.T + shift)
        b2 = traj(b.points @ rot.T + shift)
        assert abs(mhd(a2, b2) - base) < 1e-9

    def test_nonnegative_and_zero_iff_subset(self, rng):
        b = traj(rng.normal(size=(8, 2)))
        sub = traj(b.points[2:5])
        assert mhd(sub, b) == 0.0
        off = traj(b.points + 0.5)
        assert mhd(off, b) > 0.0

    def test_bounded_by_max_pointwise(self, rng):
        a = traj(rng.normal(size=(6, 2)))
        b = traj(rng.normal(size=(5, 2)))
        from scipy.spatial.distance import cdist
        assert mhd(a, b) <= cdist(a.points, b.points).min(axis=1).max() + 1e-12

    def test_densification_stability(self, rng):
        pts = np.column_stack((np.linspace(0, 10, 7), rng.normal(0, 1, 7)))
        a, b = traj(pts), traj(pts[::-1] + 0.3)
        step = 0.25
        d1 = mhd(densify(a, step), densify(b, step))
        d2 = mhd(densify(a, step / 2), densify(b, step / 2))
        assert abs(d1 - d2) < step


class TestRealign:
    def test_shifts_to_surveyed_start(self):
        t = traj([(2.0, 3.0), (4.0, 3.0)])
        out = realign_start(t, (0.0, 0.0))
        assert np.allclose(out.points[0], (0.0, 0.0))
        assert np.allclose(out.points[1], (2.0, 0.0))

    def test_noop_when_already_aligned(self):
        t = traj([(1.0, 1.0), (2.0, 2.0)])
        assert realign_start(t, (1.0, 1.0)) is t

    def test_mhd_of_realigned_bias(self, rng):
        # a constant GPS bias disappears after re-alignment
        gt = traj(rng.normal(size=(10, 2)).cumsum(axis=0))
        biased = traj(gt.points + np.array([2.0, -3.0]))
        assert mhd(biased, gt) > 1.0
        assert mhd(realign_start(biased, tuple(gt.points[0])), gt) < 1e-12


class TestSummarize:
    def test_mean_median_best(self):
        rows = [("s", "ioc", 2.0), ("s", "ioc", 4.0)]
        (res,) = summarize(rows)
        assert res.mean == pytest.approx(3.0)
        assert res.median == pytest.approx(3.0)
        assert res.best == pytest.approx(2.0)

    def test_single_trial_best_only(self):
        (res,) = summarize([("s", "baseline", 3.6)])
        assert res.mean is None and res.median is None
        assert res.best == pytest.approx(3.6)

    def test_lower_mean_flagged(self):
        rows = [("s", "baseline", 5.0), ("s", "baseline", 6.0),
                ("s", "ioc", 3.0), ("s", "ioc", 4.0)]
        results = summarize(rows)
        flags = {r.planner: r.best_mean for r in results}
        assert flags == {"baseline": False, "ioc": True}

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            summarize([])

    def test_csv_and_table_render(self):
        rows = [("a", "baseline", 5.0), ("a", "ioc", 3.0), ("b", "ioc", 1.0)]
        results = summarize(rows)
        csv = results_to_csv(results)
        assert csv.splitlines()[0] == "site,planner,mean,median,best,best_mean"
        table = format_table(results)
        assert "ioc mean" in table.splitlines()[0]
        assert "--" in table  # single-trial site renders dashes
