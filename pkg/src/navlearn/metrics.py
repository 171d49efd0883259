"""Trajectory similarity and trial aggregation.

The headline metric is the directed modified Hausdorff distance: the mean,
over the compared trajectory's points, of the distance to the nearest
ground-truth point. Lower is more similar. Aggregation mirrors the
mean/median/best-per-site reporting convention, with single-trial sites
reporting best only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import distance

from .errors import ValidationError
from .planning import Trajectory


def mhd(a: Trajectory, b: Trajectory, symmetric: bool = False) -> float:
    """Modified Hausdorff distance in meters, directed from a to b.

    b is the ground-truth trajectory. The directed form is intentionally
    asymmetric; pass symmetric=True for max(h(a,b), h(b,a)).
    """
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("cannot compare an empty trajectory")
    d = distance.cdist(a.points, b.points)
    forward = float(d.min(axis=1).mean())
    if not symmetric:
        return forward
    return max(forward, float(d.min(axis=0).mean()))


def realign_start(traj: Trajectory, surveyed_start: tuple[float, float]) -> Trajectory:
    """Shift a recorded track so its first point sits on the surveyed start.

    Corrects constant positioning bias in ingested real logs; simulated
    trajectories already start on the waypoint, making this a no-op.
    """
    offset = np.asarray(surveyed_start, dtype=np.float64) - traj.points[0]
    if not np.any(offset):
        return traj
    return Trajectory(points=traj.points + offset, provenance=traj.provenance,
                      timestamps=traj.timestamps)


@dataclass(frozen=True)
class MhdResult:
    """Per-site, per-planner MHD statistics across trials."""

    site: str
    planner: str
    per_trial: tuple[float, ...]
    mean: float | None
    median: float | None
    best: float
    best_mean: bool = False

    def __post_init__(self):
        if any(v < 0 for v in self.per_trial):
            raise ValidationError("MHD values cannot be negative")


def _site_stats(site: str, planner: str, values: list[float]) -> MhdResult:
    vals = tuple(float(v) for v in values)
    if len(vals) == 1:
        return MhdResult(site=site, planner=planner, per_trial=vals,
                         mean=None, median=None, best=vals[0])
    return MhdResult(site=site, planner=planner, per_trial=vals,
                     mean=float(np.mean(vals)), median=float(np.median(vals)),
                     best=float(np.min(vals)))


def summarize(rows) -> list[MhdResult]:
    """Aggregate (site, planner, mhd) rows into per-site statistics.

    Rows may come from one or many trial reports. Within each site, the
    planner with the lowest mean (lowest best for single-trial sites) is
    flagged as best_mean, mirroring the boldface convention.
    """
    grouped: dict[tuple[str, str], list[float]] = {}
    order: list[tuple[str, str]] = []
    for site, planner, value in rows:
        key = (str(site), str(planner))
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(float(value))
    if not grouped:
        raise ValidationError("no trial rows to summarize")

    results = [_site_stats(site, planner, grouped[(site, planner)])
               for site, planner in order]
    by_site: dict[str, list[MhdResult]] = {}
    for r in results:
        by_site.setdefault(r.site, []).append(r)
    flagged = []
    for r in results:
        peers = by_site[r.site]
        score = r.mean if r.mean is not None else r.best
        best = min(p.mean if p.mean is not None else p.best for p in peers)
        flagged.append(
            MhdResult(site=r.site, planner=r.planner, per_trial=r.per_trial,
                      mean=r.mean, median=r.median, best=r.best,
                      best_mean=bool(score == best and len(peers) > 1)))
    return flagged


def results_to_csv(results: list[MhdResult]) -> str:
    lines = ["site,planner,mean,median,best,best_mean"]
    for r in results:
        mean = "" if r.mean is None else repr(r.mean)
        median = "" if r.median is None else repr(r.median)
        lines.append(f"{r.site},{r.planner},{mean},{median},{repr(r.best)},"
                     f"{int(r.best_mean)}")
    return "\n".join(lines) + "\n"


def format_table(results: list[MhdResult]) -> str:
    """Fixed-width table in the site | planner columns layout of the trials."""
    planners = []
    for r in results:
        if r.planner not in planners:
            planners.append(r.planner)
    sites = []
    for r in results:
        if r.site not in sites:
            sites.append(r.site)
    by_key = {(r.site, r.planner): r for r in results}

    def cell(value, flag=False):
        if value is None:
            return "--"
        text = f"{value:.3f}"
        return f"*{text}" if flag else text

    header = ["site"]
    for p in planners:
        header += [f"{p} mean", f"{p} median", f"{p} best"]
    rows = [header]
    for site in sites:
        row = [site]
        for p in planners:
            r = by_key.get((site, p))
            if r is None:
                row += ["--", "--", "--"]
            else:
                row += [cell(r.mean, r.best_mean), cell(r.median), cell(r.best)]
        rows.append(row)
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    out = []
    for i, row in enumerate(rows):
        out.append("  ".join(v.rjust(w) for v, w in zip(row, widths)))
        if i == 0:
            out.append("-" * len(out[0]))
    return "\n".join(out) + "\n"
