"""Seeded scenario generators for the three behaviors.

Each generator emulates the flat urban sites the behaviors were designed
around: a winding road through grass with a few structures set back from
it. Waypoint pairs are split into short training segments (demonstrations
are collected per region) and one long held-out evaluation traverse.
"""

from __future__ import annotations

import numpy as np

from .envfile import Zod
from .grids import GridGeometry
from .scenarios import Rect, RoadSpec, ScenarioSpec, WaypointPair


def _road_knots(rng, x_max: float, y_center: float, amplitude: float,
                n_knots: int = 5) -> tuple[tuple[float, float], ...]:
    xs = np.linspace(0.0, x_max, n_knots)
    ys = y_center + rng.uniform(-amplitude, amplitude, n_knots)
    ys[0] = y_center + rng.uniform(-amplitude / 2, amplitude / 2)
    return tuple((float(x), float(y)) for x, y in zip(xs, ys))


def _road_y(road: RoadSpec, x: float) -> float:
    pts = np.asarray(road.points)
    return float(np.interp(x, pts[:, 0], pts[:, 1]))


def _treeline(road: RoadSpec, x_max: float, thickness: float = 2.5) -> list[Rect]:
    """A forest strip flush against the road's south edge.

    With woods on one side, the grass shoulder (and so the demonstrated
    road-edge preference) lies on a single, feature-identifiable side. The
    strip overlaps the road band slightly; obstacle rasterization wins over
    road, so no grass sliver can appear between pavement and trees.
    """
    rects = []
    pts = np.asarray(road.points)
    step = 1.0
    half = road.width_m / 2.0
    overlap = 0.3
    for x in np.arange(0.0, x_max, step):
        y = float(np.interp(x + step / 2, pts[:, 0], pts[:, 1]))
        rects.append(Rect(x_min=float(x), y_min=y - half - thickness,
                          x_max=float(min(x + step, x_max)), y_max=y - half + overlap))
    return rects


def road_world(seed: int, width: int = 200, height: int = 120,
               resolution: float = 0.5) -> ScenarioSpec:
    """Edge-of-road site: a winding road with woods to the south and an open
    grass shoulder to the north, buildings set well back."""
    rng = np.random.default_rng(seed)
    x_max = width * resolution
    y_center = height * resolution / 2.0
    road = RoadSpec(points=_road_knots(rng, x_max, y_center, amplitude=4.0),
                    width_m=5.0)

    buildings = _treeline(road, x_max)
    for bx in rng.uniform(15.0, x_max - 25.0, 3):
        by = y_center + rng.uniform(16.0, 22.0)
        w, h = rng.uniform(6.0, 10.0, 2)
        buildings.append(Rect(x_min=float(bx), y_min=float(by - h / 2),
                              x_max=float(bx + w), y_max=float(by + h / 2)))

    def on_road(x):
        return (x, _road_y(road, x))

    pairs = (
        WaypointPair("eval", on_road(6.0), on_road(x_max - 6.0)),
        WaypointPair("train-a", on_road(12.0), on_road(40.0)),
        WaypointPair("train-b", on_road(40.0), on_road(66.0)),
        WaypointPair("train-c", on_road(62.0), on_road(90.0)),
    )
    return ScenarioSpec(seed=seed, geometry=GridGeometry(width, height, resolution),
                        roads=(road,), buildings=tuple(buildings), zods=(),
                        waypoint_pairs=pairs, behavior="edge-of-road")


def village_world(seed: int, width: int = 140, height: int = 100,
                  resolution: float = 0.5) -> ScenarioSpec:
    """Covert-behavior site: structures staggered along both sides of a road."""
    rng = np.random.default_rng(seed)
    x_max = width * resolution
    y_center = height * resolution / 2.0
    road = RoadSpec(points=((0.0, y_center), (x_max, y_center)), width_m=5.0)

    buildings = []
    half_road = road.width_m / 2.0
    for i, bx in enumerate(np.arange(9.0, x_max - 12.0, 9.0)):
        side = 1.0 if i % 2 == 0 else -1.0
        gap = rng.uniform(2.5, 4.0)
        size_x = rng.uniform(4.0, 6.0)
        size_y = rng.uniform(4.0, 6.0)
        y_near = y_center + side * (half_road + gap)
        y_far = y_near + side * size_y
        buildings.append(Rect(x_min=float(bx), y_min=float(min(y_near, y_far)),
                              x_max=float(bx + size_x), y_max=float(max(y_near, y_far))))

    pairs = (
        WaypointPair("eval", (5.0, y_center), (x_max - 5.0, y_center)),
        WaypointPair("train-a", (8.0, y_center), (34.0, y_center)),
        WaypointPair("train-b", (36.0, y_center), (62.0, y_center)),
    )
    return ScenarioSpec(seed=seed, geometry=GridGeometry(width, height, resolution),
                        roads=(road,), buildings=tuple(buildings), zods=(),
                        waypoint_pairs=pairs, behavior="covert")


def zod_world(seed: int, width: int = 160, height: int = 100,
              resolution: float = 0.5) -> ScenarioSpec:
    """Danger-zone site: the edge-of-road layout with zones blocking the road.

    Radii follow the 2 / 2.5 / 3 meter convention; every zone is centered on
    the road and wider than its half-width, so the direct route always
    crosses one and the only detour is through the northern grass.
    """
    rng = np.random.default_rng(seed)
    x_max = width * resolution
    y_center = height * resolution / 2.0
    # straight road: the obstacle-only planner's direct route then runs down
    # the roadway, so the zones genuinely lie on its path
    road_y = y_center + float(rng.uniform(-2.0, 2.0))
    road = RoadSpec(points=((0.0, road_y), (x_max, road_y)), width_m=4.0)

    zod_xs = np.array([22.0, 42.0, 62.0]) + rng.uniform(-3.0, 3.0, 3)
    radii = (2.0, 2.5, 3.0)
    zods = tuple(Zod(center_x=float(x), center_y=road_y, radius=r)
                 for x, r in zip(zod_xs, radii))

    buildings = _treeline(road, x_max)
    for bx in rng.uniform(20.0, x_max - 25.0, 2):
        by = y_center + rng.uniform(15.0, 19.0)
        w, h = rng.uniform(5.0, 8.0, 2)
        buildings.append(Rect(x_min=float(bx), y_min=float(by - h / 2),
                              x_max=float(bx + w), y_max=float(by + h / 2)))

    def on_road(x):
        return (x, road_y)

    pairs = [WaypointPair("eval", on_road(5.0), on_road(x_max - 5.0))]
    for i, zx in enumerate(zod_xs):
        for tag, reach in (("a", 11.0), ("b", 8.0)):
            lo = max(3.0, float(zx - reach))
            hi = min(x_max - 3.0, float(zx + reach))
            pairs.append(WaypointPair(f"train-z{i}{tag}", on_road(lo), on_road(hi)))
    return ScenarioSpec(seed=seed, geometry=GridGeometry(width, height, resolution),
                        roads=(road,), buildings=tuple(buildings), zods=zods,
                        waypoint_pairs=tuple(pairs), behavior="zod-avoidance")


def mini_world(seed: int = 0) -> ScenarioSpec:
    """Small road world for fast end-to-end runs (CLI, service, examples)."""
    geometry = GridGeometry(width=72, height=44, resolution=0.5)
    y_center = 11.0
    road = RoadSpec(points=((0.0, y_center), (36.0, y_center)), width_m=4.0)
    rng = np.random.default_rng(seed)
    bx = float(rng.uniform(12.0, 20.0))
    buildings = tuple(_treeline(road, 36.0)) + (
        Rect(x_min=bx, y_min=17.5, x_max=bx + 5.0, y_max=21.0),)
    pairs = (
        WaypointPair("eval", (3.0, y_center), (33.0, y_center)),
        WaypointPair("train-a", (4.0, y_center), (18.0, y_center)),
        WaypointPair("train-b", (18.0, y_center), (32.0, y_center)),
    )
    return ScenarioSpec(seed=seed, geometry=geometry, roads=(road,),
                        buildings=buildings, zods=(), waypoint_pairs=pairs,
                        behavior="edge-of-road")
