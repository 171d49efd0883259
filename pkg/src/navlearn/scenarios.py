"""Synthetic sites, scripted demonstrators, and the four-trial protocol.

Environments are generated from a scenario spec: widened road polylines,
building rectangles (which double as laser obstacles), circular zones of
danger rasterized into the avoidance layer, and everything else grass. The
scripted oracles stand in for a human teleoperator for the three behaviors:
hugging the road edge, staying covert near structures, and deviating around
danger zones. Trials alternate planner order and direction so every planner
is collected twice per direction, always led by a ground-truth pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .envfile import Environment, Zod, environment_to_json
from .errors import UnreachableGoalError, ValidationError
from .grids import (BinaryLayer, FeatureSchema, GridGeometry, OpacityLayer,
                    blur_layer, build_stack, crop_layers)
from .learning import BehaviorModel, Demonstration, reward_map
from .metrics import mhd
from .planning import (Trajectory, densify, plan_baseline, plan_cells, plan_ioc,
                       trajectory_to_csv)

BEHAVIORS = ("edge-of-road", "covert", "zod-avoidance")
RESAMPLE_STEP_M = 0.25

# hand-tuned oracle entry costs; they only need to produce qualitatively
# correct demonstrations, the learner is measured against the oracle
EDGE_COST_ROAD = 1.0
EDGE_COST_ROAD_EDGE = 0.5
EDGE_COST_GRASS = 8.0
ZOD_COST_GRASS = 3.0
COVERT_OPEN_PENALTY = 4.0
COVERT_BLUR_RADIUS = 5


@dataclass(frozen=True)
class RoadSpec:
    points: tuple[tuple[float, float], ...]
    width_m: float

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError("a road needs at least two points")
        if not self.width_m > 0:
            raise ValidationError("road width must be positive")


@dataclass(frozen=True)
class Rect:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValidationError("degenerate building rectangle")


@dataclass(frozen=True)
class WaypointPair:
    name: str
    start: tuple[float, float]
    goal: tuple[float, float]


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    geometry: GridGeometry
    roads: tuple[RoadSpec, ...]
    buildings: tuple[Rect, ...]
    zods: tuple[Zod, ...]
    waypoint_pairs: tuple[WaypointPair, ...]
    behavior: str = "edge-of-road"
    label_noise: float = 0.0
    trials: int = 4

    def __post_init__(self):
        if self.behavior not in BEHAVIORS:
            raise ValidationError(f"unknown behavior {self.behavior!r}")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValidationError("label noise rate must be in [0, 1)")
        if not 1 <= self.trials <= 4:
            raise ValidationError("trials must be between 1 and 4")
        if not self.waypoint_pairs:
            raise ValidationError("at least one waypoint pair is required")


def _segment_distances(geometry: GridGeometry, pts: np.ndarray) -> np.ndarray:
    """Per-cell distance from cell centers to a polyline."""
    cx, cy = geometry.cell_centers()
    best = np.full(geometry.shape, np.inf)
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        dx, dy = x1 - x0, y1 - y0
        seg2 = dx * dx + dy * dy
        if seg2 == 0:
            d = np.hypot(cx - x0, cy - y0)
        else:
            t = np.clip(((cx - x0) * dx + (cy - y0) * dy) / seg2, 0.0, 1.0)
            d = np.hypot(cx - (x0 + t * dx), cy - (y0 + t * dy))
        np.minimum(best, d, out=best)
    return best


def generate_environment(spec: ScenarioSpec, env_id: str = "environment") -> Environment:
    """Rasterize a scenario spec into binary layers and the opacity grid.

    Deterministic for a given spec: the label-noise channel draws from a
    generator seeded by spec.seed alone.
    """
    geo = spec.geometry
    road = np.zeros(geo.shape, dtype=bool)
    for r in spec.roads:
        dist = _segment_distances(geo, np.asarray(r.points, dtype=float))
        road |= dist <= r.width_m / 2.0

    obstacle = np.zeros(geo.shape, dtype=bool)
    cx, cy = geo.cell_centers()
    for b in spec.buildings:
        obstacle |= ((cx >= b.x_min) & (cx <= b.x_max)
                     & (cy >= b.y_min) & (cy <= b.y_max))

    avoidance = np.zeros(geo.shape, dtype=bool)
    for z in spec.zods:
        avoidance |= np.hypot(cx - z.center_x, cy - z.center_y) <= z.radius

    road &= ~obstacle
    grass = ~road & ~obstacle

    if spec.label_noise > 0.0:
        rng = np.random.default_rng(spec.seed)
        flips = (rng.random(geo.shape) < spec.label_noise) & ~obstacle
        road, grass = (np.where(flips, grass, road).astype(bool),
                       np.where(flips, road, grass).astype(bool))

    for pair in spec.waypoint_pairs:
        for point in (pair.start, pair.goal):
            x, y = geo.cell_of(point)
            if obstacle[y, x]:
                raise ValidationError(
                    f"waypoint {point} of pair {pair.name!r} is inside a building")

    layers = {
        "obstacle": BinaryLayer(kind="obstacle", cells=obstacle.astype(np.uint8),
                                geometry=geo),
        "road": BinaryLayer(kind="road", cells=road.astype(np.uint8), geometry=geo),
        "grass": BinaryLayer(kind="grass", cells=grass.astype(np.uint8), geometry=geo),
        "avoidance": BinaryLayer(kind="avoidance", cells=avoidance.astype(np.uint8),
                                 geometry=geo),
    }
    opacity = OpacityLayer(cells=obstacle.astype(np.float64),
                           unknown=np.zeros(geo.shape, dtype=bool), geometry=geo)
    return Environment(id=env_id, geometry=geo, layers=layers, opacity=opacity,
                       zods=spec.zods, seed=spec.seed)


def _road_edge_mask(env: Environment) -> np.ndarray:
    """Road cells with at least one grass cell among their 8 neighbors."""
    road = env.layers["road"].cells.astype(bool)
    grass = env.layers["grass"].cells.astype(bool)
    near_grass = ndimage.binary_dilation(grass, structure=np.ones((3, 3), dtype=bool))
    return road & near_grass


def behavior_cost(env: Environment, behavior: str) -> tuple[np.ndarray, np.ndarray]:
    """(entry-cost surface, impassable mask) encoding one scripted behavior."""
    obstacle = env.obstacle_mask()
    road = env.layers["road"].cells.astype(bool)
    grass = env.layers["grass"].cells.astype(bool)
    if behavior == "edge-of-road":
        cost = np.full(env.geometry.shape, EDGE_COST_GRASS)
        cost[road] = EDGE_COST_ROAD
        cost[_road_edge_mask(env)] = EDGE_COST_ROAD_EDGE
        cost[~road & ~grass] = EDGE_COST_GRASS
        return cost, obstacle
    if behavior == "covert":
        blurred = blur_layer(env.layers["obstacle"], COVERT_BLUR_RADIUS)
        cost = 1.0 + COVERT_OPEN_PENALTY * (1.0 - blurred)
        return cost, obstacle
    if behavior == "zod-avoidance":
        cost = np.full(env.geometry.shape, ZOD_COST_GRASS)
        cost[road] = EDGE_COST_ROAD
        cost[_road_edge_mask(env)] = EDGE_COST_ROAD_EDGE
        avoid = env.layers["avoidance"].cells.astype(bool)
        return cost, obstacle | avoid
    raise ValidationError(f"unknown behavior {behavior!r}")


def oracle_path(env: Environment, behavior: str, start_m: tuple[float, float],
                goal_m: tuple[float, float]) -> list[tuple[int, int]]:
    """Cell path of the scripted demonstrator between two world points."""
    cost, blocked = behavior_cost(env, behavior)
    start = env.geometry.cell_of(start_m)
    goal = env.geometry.cell_of(goal_m)
    try:
        return plan_cells(cost, blocked, start, goal)
    except ValidationError as e:
        raise UnreachableGoalError(f"oracle cannot demonstrate: {e.message}") from None


def default_crop_margin(schema: FeatureSchema) -> int:
    return schema.max_radius + 8


def oracle_demonstrate(env: Environment, behavior: str,
                       start_m: tuple[float, float], goal_m: tuple[float, float],
                       schema: FeatureSchema, demo_id: str = "demo",
                       crop_margin: int | None = None) -> Demonstration:
    """Scripted teleoperation: drive the behavior's optimal path and bind the
    feature stack of the surrounding region.

    The stack is cropped to the path's bounding box plus a margin, mirroring
    per-demonstration mapping of just the relevant area; the margin exceeds
    the largest blur radius so features along the path match the full map.
    """
    cells = oracle_path(env, behavior, start_m, goal_m)
    margin = default_crop_margin(schema) if crop_margin is None else crop_margin
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    geo = env.geometry
    x0 = max(0, min(xs) - margin)
    y0 = max(0, min(ys) - margin)
    x1 = min(geo.width, max(xs) + margin + 1)
    y1 = min(geo.height, max(ys) + margin + 1)
    cropped = crop_layers(env.layers.values(), x0, y0, x1, y1)
    stack = build_stack(cropped, schema)
    path = tuple((x - x0, y - y0) for x, y in cells)
    return Demonstration(id=demo_id, path=path, stack=stack, source="oracle")


def oracle_trajectory(env: Environment, behavior: str, start_m, goal_m) -> Trajectory:
    cells = oracle_path(env, behavior, start_m, goal_m)
    pts = np.array([env.geometry.center_of(c) for c in cells])
    traj = Trajectory(points=pts, provenance="ground-truth")
    return Trajectory(points=pts, provenance="ground-truth",
                      timestamps=traj.arc_lengths())


@dataclass(frozen=True)
class TrialLeg:
    planner: str  # ground-truth | ioc | baseline
    direction: str  # "i->g" or "g->i"


@dataclass(frozen=True)
class TrialRecord:
    number: int
    legs: tuple[TrialLeg, ...]


def build_trial_plan(n_trials: int = 4) -> tuple[TrialRecord, ...]:
    """The alternating four-trial protocol.

    Trial 1 runs ground truth (i,g), IOC (g,i), baseline (i,g); trial 2
    reverses every direction; trials 3-4 swap the IOC/baseline order. Each
    leg starts where the previous one ended, so across four trials every
    planner is captured twice per direction and every trial begins with a
    ground-truth pass.
    """
    if not 1 <= n_trials <= 4:
        raise ValidationError("the protocol defines 1 to 4 trials")
    fwd, rev = "i->g", "g->i"
    plans = (
        TrialRecord(1, (TrialLeg("ground-truth", fwd), TrialLeg("ioc", rev),
                        TrialLeg("baseline", fwd))),
        TrialRecord(2, (TrialLeg("ground-truth", rev), TrialLeg("ioc", fwd),
                        TrialLeg("baseline", rev))),
        TrialRecord(3, (TrialLeg("ground-truth", fwd), TrialLeg("baseline", rev),
                        TrialLeg("ioc", fwd))),
        TrialRecord(4, (TrialLeg("ground-truth", rev), TrialLeg("baseline", fwd),
                        TrialLeg("ioc", rev))),
    )
    return plans[:n_trials]


@dataclass(frozen=True)
class LegResult:
    planner: str
    direction: str
    trajectory: Trajectory | None
    mhd_m: float | None
    error: str | None = None


@dataclass(frozen=True)
class TrialResult:
    number: int
    legs: tuple[LegResult, ...]


@dataclass(frozen=True)
class SiteResult:
    site: str
    trials: tuple[TrialResult, ...]

    def mhd_rows(self):
        for trial in self.trials:
            for leg in trial.legs:
                if leg.mhd_m is not None:
                    yield (self.site, leg.planner, trial.number, leg.mhd_m)


@dataclass(frozen=True)
class TrialReport:
    scenario_seed: int
    behavior: str
    resample_step_m: float
    sites: tuple[SiteResult, ...]

    def mhd_rows(self):
        for site in self.sites:
            yield from site.mhd_rows()

    def summary_rows(self):
        for site, planner, _trial, value in self.mhd_rows():
            yield (site, planner, value)


def run_trials(spec: ScenarioSpec, model: BehaviorModel,
               env: Environment | None = None) -> TrialReport:
    """Execute the trial protocol at every waypoint pair of the scenario.

    Ground truth comes from the scenario behavior's oracle; the IOC planner
    searches the model's reward map over the full feature stack; the
    baseline sees only the opacity grid. Planner trajectories are resampled
    at a fixed step and scored with the directed MHD against the same
    trial's ground truth. A leg that cannot reach its goal is recorded as an
    error and the remaining legs continue.
    """
    env = env or generate_environment(spec)
    stack = build_stack(env.layers.values(), model.schema)
    rmap = reward_map(model, stack)
    obstacles = env.obstacle_mask()
    plan = build_trial_plan(spec.trials)

    sites = []
    for pair in spec.waypoint_pairs:
        endpoints = {"i": pair.start, "g": pair.goal}
        trials = []
        for record in plan:
            gt_traj = None
            legs = []
            for leg in record.legs:
                frm, to = leg.direction.split("->")
                start_m, goal_m = endpoints[frm], endpoints[to]
                try:
                    if leg.planner == "ground-truth":
                        traj = oracle_trajectory(env, spec.behavior, start_m, goal_m)
                        gt_traj = densify(traj, RESAMPLE_STEP_M)
                        legs.append(LegResult(leg.planner, leg.direction, traj, None))
                        continue
                    if leg.planner == "ioc":
                        traj = plan_ioc(rmap, env.geometry.cell_of(start_m),
                                        env.geometry.cell_of(goal_m),
                                        impassable=obstacles)
                    else:
                        traj = plan_baseline(env.opacity, env.geometry.cell_of(start_m),
                                             env.geometry.cell_of(goal_m))
                    score = None
                    if gt_traj is not None:
                        score = mhd(densify(traj, RESAMPLE_STEP_M), gt_traj)
                    legs.append(LegResult(leg.planner, leg.direction, traj, score))
                except (UnreachableGoalError, ValidationError) as e:
                    legs.append(LegResult(leg.planner, leg.direction, None, None,
                                          error=e.message))
            trials.append(TrialResult(number=record.number, legs=tuple(legs)))
        sites.append(SiteResult(site=pair.name, trials=tuple(trials)))
    return TrialReport(scenario_seed=spec.seed, behavior=spec.behavior,
                       resample_step_m=RESAMPLE_STEP_M, sites=tuple(sites))


def training_pairs(spec: ScenarioSpec) -> tuple[WaypointPair, ...]:
    """Waypoint pairs used for demonstration collection (name != eval)."""
    return tuple(p for p in spec.waypoint_pairs if p.name != "eval")


def collect_oracle_demos(spec: ScenarioSpec, env: Environment,
                         schema: FeatureSchema,
                         both_directions: bool = True) -> list[Demonstration]:
    """Scripted demonstrations over every training pair of the scenario."""
    demos = []
    for pair in training_pairs(spec):
        demos.append(oracle_demonstrate(env, spec.behavior, pair.start, pair.goal,
                                        schema, demo_id=f"{pair.name}-fwd"))
        if both_directions:
            demos.append(oracle_demonstrate(env, spec.behavior, pair.goal, pair.start,
                                            schema, demo_id=f"{pair.name}-rev"))
    if not demos:
        raise ValidationError("scenario has no training pairs")
    return demos


def eval_only(spec: ScenarioSpec) -> ScenarioSpec:
    """The scenario restricted to its held-out evaluation pair."""
    pairs = tuple(p for p in spec.waypoint_pairs if p.name == "eval")
    if not pairs:
        raise ValidationError("scenario has no eval pair")
    return replace(spec, waypoint_pairs=pairs)


# --- serialization ---------------------------------------------------------

SCENARIO_FORMAT = "navlearn-scenario/1"
REPORT_FORMAT = "navlearn-report/1"


def scenario_to_json(spec: ScenarioSpec) -> str:
    geo = spec.geometry
    doc = {
        "format": SCENARIO_FORMAT,
        "seed": spec.seed,
        "geometry": {"width": geo.width, "height": geo.height,
                     "resolution_m": geo.resolution,
                     "origin_x_m": geo.origin_x, "origin_y_m": geo.origin_y},
        "roads": [{"points": [[float(x), float(y)] for x, y in r.points],
                   "width_m": r.width_m} for r in spec.roads],
        "buildings": [{"x_min": b.x_min, "y_min": b.y_min,
                       "x_max": b.x_max, "y_max": b.y_max} for b in spec.buildings],
        "zods": [{"center_x_m": z.center_x, "center_y_m": z.center_y,
                  "radius_m": z.radius} for z in spec.zods],
        "waypoint_pairs": [{"name": p.name, "i": list(p.start), "g": list(p.goal)}
                           for p in spec.waypoint_pairs],
        "behavior": spec.behavior,
        "label_noise": spec.label_noise,
        "trials": spec.trials,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def scenario_from_json(text: str) -> ScenarioSpec:
    doc = json.loads(text)
    if doc.get("format") != SCENARIO_FORMAT:
        raise ValidationError(f"not a scenario file (format={doc.get('format')!r})")
    g = doc["geometry"]
    return ScenarioSpec(
        seed=int(doc["seed"]),
        geometry=GridGeometry(width=int(g["width"]), height=int(g["height"]),
                              resolution=float(g["resolution_m"]),
                              origin_x=float(g.get("origin_x_m", 0.0)),
                              origin_y=float(g.get("origin_y_m", 0.0))),
        roads=tuple(RoadSpec(points=tuple((float(x), float(y)) for x, y in r["points"]),
                             width_m=float(r["width_m"])) for r in doc["roads"]),
        buildings=tuple(Rect(**{k: float(v) for k, v in b.items()})
                        for b in doc["buildings"]),
        zods=tuple(Zod(center_x=float(z["center_x_m"]), center_y=float(z["center_y_m"]),
                       radius=float(z["radius_m"])) for z in doc["zods"]),
        waypoint_pairs=tuple(WaypointPair(name=p["name"], start=tuple(p["i"]),
                                          goal=tuple(p["g"]))
                             for p in doc["waypoint_pairs"]),
        behavior=doc.get("behavior", "edge-of-road"),
        label_noise=float(doc.get("label_noise", 0.0)),
        trials=int(doc.get("trials", 4)),
    )


def save_scenario(spec: ScenarioSpec, path) -> None:
    Path(path).write_text(scenario_to_json(spec))


def load_scenario(path) -> ScenarioSpec:
    return scenario_from_json(Path(path).read_text())


def save_report(report: TrialReport, directory) -> None:
    """Write manifest, per-leg trajectory CSVs, and the metric table."""
    root = Path(directory)
    traj_dir = root / "trajectories"
    traj_dir.mkdir(parents=True, exist_ok=True)
    manifest_sites = []
    metric_lines = ["site,planner,trial,mhd_m"]
    for site in report.sites:
        site_doc = {"site": site.site, "trials": []}
        for trial in site.trials:
            trial_doc = {"number": trial.number, "legs": []}
            for i, leg in enumerate(trial.legs):
                leg_doc = {"planner": leg.planner, "direction": leg.direction}
                if leg.trajectory is not None:
                    fname = f"{site.site}-trial{trial.number}-{i}-{leg.planner}.csv"
                    (traj_dir / fname).write_text(trajectory_to_csv(leg.trajectory))
                    leg_doc["file"] = f"trajectories/{fname}"
                if leg.mhd_m is not None:
                    leg_doc["mhd_m"] = leg.mhd_m
                    metric_lines.append(
                        f"{site.site},{leg.planner},{trial.number},{repr(leg.mhd_m)}")
                if leg.error is not None:
                    leg_doc["error"] = leg.error
                trial_doc["legs"].append(leg_doc)
            site_doc["trials"].append(trial_doc)
        manifest_sites.append(site_doc)
    manifest = {
        "format": REPORT_FORMAT,
        "scenario_seed": report.scenario_seed,
        "behavior": report.behavior,
        "resample_step_m": report.resample_step_m,
        "sites": manifest_sites,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (root / "metrics.csv").write_text("\n".join(metric_lines) + "\n")


def load_report_rows(directory) -> list[tuple[str, str, float]]:
    """(site, planner, mhd) rows from a saved report's metric table."""
    text = (Path(directory) / "metrics.csv").read_text()
    rows = []
    for line in text.strip().splitlines()[1:]:
        site, planner, _trial, value = line.split(",")
        rows.append((site, planner, float(value)))
    if not rows:
        raise ValidationError(f"report {directory} has no metric rows")
    return rows


def save_environment_for(spec: ScenarioSpec, path, env_id: str = "environment") -> Environment:
    env = generate_environment(spec, env_id=env_id)
    Path(path).write_text(environment_to_json(env))
    return env
