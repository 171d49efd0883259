import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from navlearn.grids import BinaryLayer, FeatureSchema, GridGeometry, build_stack


def make_geometry(width=8, height=8, resolution=1.0, origin=(0.0, 0.0)):
    return GridGeometry(width=width, height=height, resolution=resolution,
                        origin_x=origin[0], origin_y=origin[1])


def random_binary_layer(rng, geometry, kind="obstacle", density=0.2):
    cells = (rng.random(geometry.shape) < density).astype(np.uint8)
    return BinaryLayer(kind=kind, cells=cells, geometry=geometry)


def small_schema(d_blur=(0, 2)):
    desc = [("obstacle", r) for r in d_blur] + [("road", r) for r in d_blur]
    desc.append(("bias", 0))
    return FeatureSchema(tuple(desc))


def random_stack(rng, geometry, schema=None, density=0.2):
    schema = schema or small_schema()
    layers = []
    for kind in {k for k, _ in schema.descriptors[:-1]}:
        layers.append(random_binary_layer(rng, geometry, kind=kind, density=density))
    return build_stack(layers, schema)


def random_walk_path(rng, geometry, length):
    """Random 8-connected path without immediate backtracking."""
    x = int(rng.integers(0, geometry.width))
    y = int(rng.integers(0, geometry.height))
    path = [(x, y)]
    prev = None
    for _ in range(length - 1):
        options = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                nx, ny = path[-1][0] + dx, path[-1][1] + dy
                if geometry.in_bounds((nx, ny)) and (nx, ny) != prev:
                    options.append((nx, ny))
        prev = path[-1]
        path.append(options[int(rng.integers(0, len(options)))])
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
