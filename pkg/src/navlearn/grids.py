"""Occupancy feature grids: binary layers, Manhattan-blurred planes, feature stacks.

An environment is a set of binary occupancy layers (obstacle / road / grass /
avoidance) over one grid geometry. A feature stack derives, per schema, the
raw planes plus distance-attenuated "blurred" planes and a trailing bias
plane; the per-cell column of that stack is the feature vector consumed by
reward learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import GeometryMismatchError, OutOfBoundsError, ValidationError

LAYER_KINDS = ("obstacle", "road", "grass", "avoidance")
BIAS_KIND = "bias"

# terrain kinds that must stay disjoint (a cell is road or grass, never both)
TERRAIN_KINDS = ("road", "grass")


@dataclass(frozen=True)
class GridGeometry:
    """Axis-aligned grid: `origin` is the world position of cell (0,0)'s corner."""

    width: int
    height: int
    resolution: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValidationError(f"grid must be at least 2x2, got {self.width}x{self.height}")
        if not self.resolution > 0:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape, row-major (height, width)."""
        return (self.height, self.width)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def center_of(self, cell: tuple[int, int]) -> tuple[float, float]:
        """World coordinates (meters) of a cell's center."""
        x, y = cell
        return (self.origin_x + (x + 0.5) * self.resolution,
                self.origin_y + (y + 0.5) * self.resolution)

    def cell_of(self, point: tuple[float, float]) -> tuple[int, int]:
        """Cell containing a world point. Raises if outside the grid."""
        cx = int(np.floor((point[0] - self.origin_x) / self.resolution))
        cy = int(np.floor((point[1] - self.origin_y) / self.resolution))
        if not self.in_bounds((cx, cy)):
            raise OutOfBoundsError(f"point {point} is outside the grid")
        return (cx, cy)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (shape HxW) of cell-center world coordinates."""
        xs = self.origin_x + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin_y + (np.arange(self.height) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)


def _check_binary(cells: np.ndarray) -> np.ndarray:
    arr = np.asarray(cells)
    if not np.isin(arr, (0, 1)).all():
        raise ValidationError("binary layer values must be exactly 0 or 1")
    return arr.astype(np.uint8)


@dataclass(frozen=True)
class BinaryLayer:
    """One feature's occupancy grid; value 1 marks presence."""

    kind: str
    cells: np.ndarray
    geometry: GridGeometry

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        object.__setattr__(self, "cells", _check_binary(self.cells))
        if self.cells.shape != self.geometry.shape:
            raise GeometryMismatchError(
                f"layer {self.kind}: cells shape {self.cells.shape} != geometry {self.geometry.shape}")
        self.cells.setflags(write=False)


def check_terrain_disjoint(layers: Iterable[BinaryLayer]) -> None:
    """Road and grass may never both claim a cell."""
    terrain = [l for l in layers if l.kind in TERRAIN_KINDS]
    for i, a in enumerate(terrain):
        for b in terrain[i + 1:]:
            if (a.cells & b.cells).any():
                raise ValidationError(f"terrain layers {a.kind} and {b.kind} overlap")


@dataclass(frozen=True)
class OpacityLayer:
    """Continuous obstacle evidence in [0,1] plus an unknown-cell mask.

    Stands in for the accumulated laser log-odds grid the baseline planner
    consumes; unknown cells carry no opacity claim.
    """

    cells: np.ndarray
    unknown: np.ndarray
    geometry: GridGeometry

    def __post_init__(self):
        vals = np.clip(np.asarray(self.cells, dtype=np.float64), 0.0, 1.0)
        unk = np.asarray(self.unknown, dtype=bool)
        if vals.shape != self.geometry.shape or unk.shape != self.geometry.shape:
            raise GeometryMismatchError("opacity shapes do not match geometry")
        object.__setattr__(self, "cells", vals)
        object.__setattr__(self, "unknown", unk)
        vals.setflags(write=False)
        unk.setflags(write=False)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature descriptors (kind, blur radius); radius 0 means raw.

    The trailing bias descriptor is implicit in `descriptors` as
    ("bias", 0) and is always last.
    """

    descriptors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        desc = tuple((str(k), int(r)) for k, r in self.descriptors)
        if len(set(desc)) != len(desc):
            raise ValidationError("schema descriptors must be unique")
        if not desc or desc[-1] != (BIAS_KIND, 0):
            raise ValidationError("schema must end with the bias descriptor")
        for kind, radius in desc[:-1]:
            if kind not in LAYER_KINDS:
                raise ValidationError(f"unknown feature kind {kind!r}")
            if radius < 0:
                raise ValidationError("blur radius must be >= 0")
        object.__setattr__(self, "descriptors", desc)

    @property
    def dimension(self) -> int:
        return len(self.descriptors)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(sorted({k for k, _ in self.descriptors[:-1]}))

    @property
    def max_radius(self) -> int:
        return max((r for _, r in self.descriptors[:-1]), default=0)

    def index_of(self, kind: str, radius: int) -> int:
        return self.descriptors.index((kind, radius))


def _schema(pairs: Sequence[tuple[str, Sequence[int]]]) -> FeatureSchema:
    desc = [(kind, r) for kind, radii in pairs for r in radii]
    desc.append((BIAS_KIND, 0))
    return FeatureSchema(tuple(desc))


# Standardized set: raw + radii 1..4 for all four kinds + bias (D = 21).
STANDARD_SCHEMA = _schema([(k, (0, 1, 2, 3, 4)) for k in LAYER_KINDS])

# Hand-selected per-behavior sets (raw planes plus behavior-specific radii).
EDGE_OF_ROAD_SCHEMA = _schema([
    ("obstacle", (0, 4)),
    ("road", (0, 3, 6)),
    ("grass", (0, 3, 6, 9)),
])
COVERT_SCHEMA = _schema([
    ("obstacle", (0, 5, 10)),
    ("road", (0, 5, 10)),
    ("grass", (0, 5, 10)),
])

NAMED_SCHEMAS = {
    "standard": STANDARD_SCHEMA,
    "edge": EDGE_OF_ROAD_SCHEMA,
    "covert": COVERT_SCHEMA,
    "zod": STANDARD_SCHEMA,
}


def schema_by_name(name: str) -> FeatureSchema:
    try:
        return NAMED_SCHEMAS[name]
    except KeyError:
        raise ValidationError(
            f"unknown schema {name!r}; choose from {sorted(NAMED_SCHEMAS)}") from None


def manhattan_distance_field(sources: np.ndarray) -> np.ndarray:
    """Per-cell Manhattan distance (cells) to the nearest 1-valued cell.

    Cells return a large sentinel (width+height) when the layer has no
    sources at all.
    """
    src = np.asarray(sources)
    h, w = src.shape
    if not src.any():
        return np.full((h, w), h + w, dtype=np.int64)
    if src.all():
        return np.zeros((h, w), dtype=np.int64)
    # chamfer transform with the taxicab metric is exact for L1 on open grids
    return ndimage.distance_transform_cdt(1 - src, metric="taxicab").astype(np.int64)


def blur_layer(layer: BinaryLayer, radius: int) -> np.ndarray:
    """Distance-attenuated presence plane: 1 at sources, 0 beyond `radius`.

    value(c) = max(0, 1 - m(c) / (radius + 1)) with m the Manhattan distance
    to the nearest occupied cell, so the falloff is linear and reaches zero
    exactly one cell past the radius.
    """
    if radius < 1:
        raise ValidationError(f"blur radius must be >= 1, got {radius}")
    dist = manhattan_distance_field(layer.cells)
    return np.maximum(0.0, 1.0 - dist / (radius + 1.0))


@dataclass(frozen=True)
class FeatureStack:
    """All feature planes for one environment, ordered per schema.

    `planes` has shape (D, height, width); the last plane is the constant
    bias. Values are in [0,1].
    """

    schema: FeatureSchema
    geometry: GridGeometry
    planes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.planes.shape != (self.schema.dimension, *self.geometry.shape):
            raise GeometryMismatchError("planes shape does not match schema/geometry")
        self.planes.setflags(write=False)

    def feature_vector(self, cell: tuple[int, int]) -> np.ndarray:
        """The D feature values at one cell, schema order (bias last)."""
        if not self.geometry.in_bounds(cell):
            raise OutOfBoundsError(f"cell {cell} is out of bounds")
        x, y = cell
        return self.planes[:, y, x].copy()

    def feature_matrix(self) -> np.ndarray:
        """Row-per-cell view (n_cells, D), cells flattened row-major."""
        d = self.schema.dimension
        return self.planes.reshape(d, -1).T


def build_stack(layers: Iterable[BinaryLayer], schema: FeatureSchema) -> FeatureStack:
    """Assemble raw, blurred, and bias planes in schema order.

    A schema kind with no matching layer is treated as all-zero only for
    `avoidance` (environments without a-priori intel); any other missing
    kind is an error.
    """
    by_kind: dict[str, BinaryLayer] = {}
    geometry = None
    for layer in layers:
        if layer.kind in by_kind:
            raise ValidationError(f"duplicate layer kind {layer.kind!r}")
        if geometry is None:
            geometry = layer.geometry
        elif layer.geometry != geometry:
            raise GeometryMismatchError(
                f"layer {layer.kind} geometry differs from {sorted(by_kind)}")
        by_kind[layer.kind] = layer
    if geometry is None:
        raise ValidationError("at least one layer is required")
    check_terrain_disjoint(by_kind.values())

    zeros = np.zeros(geometry.shape)
    dist_cache: dict[str, np.ndarray] = {}
    planes = np.empty((schema.dimension, *geometry.shape))
    for i, (kind, radius) in enumerate(schema.descriptors):
        if kind == BIAS_KIND:
            planes[i] = 1.0
            continue
        layer = by_kind.get(kind)
        if layer is None:
            if kind != "avoidance":
                raise ValidationError(f"schema requires a {kind!r} layer")
            planes[i] = zeros
            continue
        if radius == 0:
            planes[i] = layer.cells
        else:
            if kind not in dist_cache:
                dist_cache[kind] = manhattan_distance_field(layer.cells)
            planes[i] = np.maximum(0.0, 1.0 - dist_cache[kind] / (radius + 1.0))
    return FeatureStack(schema=schema, geometry=geometry, planes=planes)


def crop_layers(layers: Iterable[BinaryLayer], x0: int, y0: int,
                x1: int, y1: int) -> list[BinaryLayer]:
    """Sub-grid copies of layers over cells [x0,x1) x [y0,y1).

    The cropped geometry's origin shifts so world coordinates are preserved.
    """
    out = []
    for layer in layers:
        geo = layer.geometry
        if not (0 <= x0 < x1 <= geo.width and 0 <= y0 < y1 <= geo.height):
            raise OutOfBoundsError("crop window exceeds grid bounds")
        sub = GridGeometry(
            width=x1 - x0, height=y1 - y0, resolution=geo.resolution,
            origin_x=geo.origin_x + x0 * geo.resolution,
            origin_y=geo.origin_y + y0 * geo.resolution)
        out.append(BinaryLayer(kind=layer.kind, cells=layer.cells[y0:y1, x0:x1].copy(),
                               geometry=sub))
    return out
