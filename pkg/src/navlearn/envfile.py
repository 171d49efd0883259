"""Environment manifest files.

A manifest is a JSON document holding the grid geometry, the generation
seed, the zone-of-danger definitions, and each binary layer as a row-major
run-length-encoded string of "value x count" pairs (e.g. "0x57 1x3"). The
opacity layer stores float values the same way. Blurred planes are derived
data and are never serialized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grids import BinaryLayer, GridGeometry, OpacityLayer

ENVIRONMENT_FORMAT = "navlearn-environment/1"


@dataclass(frozen=True)
class Zod:
    """Circular zone of danger: a-priori intel rasterized into avoidance."""

    center_x: float
    center_y: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"ZOD radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Environment:
    """One simulated site: binary layers plus the baseline planner's opacity grid."""

    id: str
    geometry: GridGeometry
    layers: dict[str, BinaryLayer]
    opacity: OpacityLayer
    zods: tuple[Zod, ...] = ()
    seed: int = 0

    def layer(self, kind: str) -> BinaryLayer | None:
        return self.layers.get(kind)

    def obstacle_mask(self) -> np.ndarray:
        layer = self.layers.get("obstacle")
        if layer is None:
            return np.zeros(self.geometry.shape, dtype=bool)
        return layer.cells.astype(bool)


def rle_encode(values: np.ndarray, fmt=str) -> str:
    flat = np.asarray(values).ravel()
    if flat.size == 0:
        return ""
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    return " ".join(f"{fmt(flat[s])}x{e - s}" for s, e in zip(starts, ends))


def rle_decode(text: str, size: int, caster=int) -> np.ndarray:
    out = []
    for token in text.split():
        try:
            value, count = token.split("x")
            out.extend([caster(value)] * int(count))
        except ValueError:
            raise ValidationError(f"bad RLE token {token!r}") from None
    if len(out) != size:
        raise ValidationError(f"RLE decodes to {len(out)} values, expected {size}")
    return np.array(out)


def _fmt_float(v) -> str:
    return repr(float(v))


def environment_to_json(env: Environment) -> str:
    geo = env.geometry
    doc = {
        "format": ENVIRONMENT_FORMAT,
        "id": env.id,
        "seed": env.seed,
        "geometry": {
            "width": geo.width,
            "height": geo.height,
            "resolution_m": geo.resolution,
            "origin_x_m": geo.origin_x,
            "origin_y_m": geo.origin_y,
        },
        "zods": [
            {"center_x_m": z.center_x, "center_y_m": z.center_y, "radius_m": z.radius}
            for z in env.zods
        ],
        "layers": {kind: rle_encode(layer.cells) for kind, layer in sorted(env.layers.items())},
        "opacity": {
            "values": rle_encode(env.opacity.cells, fmt=_fmt_float),
            "unknown": rle_encode(env.opacity.unknown.astype(np.uint8)),
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def environment_from_json(text: str, env_id: str | None = None) -> Environment:
    doc = json.loads(text)
    if doc.get("format") != ENVIRONMENT_FORMAT:
        raise ValidationError(f"not an environment file (format={doc.get('format')!r})")
    g = doc["geometry"]
    geometry = GridGeometry(width=int(g["width"]), height=int(g["height"]),
                            resolution=float(g["resolution_m"]),
                            origin_x=float(g["origin_x_m"]),
                            origin_y=float(g["origin_y_m"]))
    n = geometry.n_cells
    layers = {}
    for kind, rle in doc["layers"].items():
        cells = rle_decode(rle, n).reshape(geometry.shape)
        layers[kind] = BinaryLayer(kind=kind, cells=cells, geometry=geometry)
    op = doc["opacity"]
    opacity = OpacityLayer(
        cells=rle_decode(op["values"], n, caster=float).reshape(geometry.shape),
        unknown=rle_decode(op["unknown"], n).reshape(geometry.shape).astype(bool),
        geometry=geometry)
    zods = tuple(Zod(center_x=float(z["center_x_m"]), center_y=float(z["center_y_m"]),
                     radius=float(z["radius_m"])) for z in doc["zods"])
    return Environment(id=env_id or doc.get("id", "environment"), geometry=geometry,
                       layers=layers, opacity=opacity, zods=zods,
                       seed=int(doc.get("seed", 0)))


def save_environment(env: Environment, path) -> None:
    Path(path).write_text(environment_to_json(env))


def load_environment(path, env_id: str | None = None) -> Environment:
    return environment_from_json(Path(path).read_text(), env_id=env_id)
