import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "helpers"))

from scengen import SamplerConfig, load_bundled, parse, run_program, sample_scene
from scengen.worlds import parse_world


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


@pytest.fixture(scope="session")
def tworoads():
    return load_bundled("tworoads")


@pytest.fixture(scope="session")
def mars():
    return load_bundled("mars")


@pytest.fixture(scope="session")
def flat_world():
    """A plain 100x100 workspace with an oriented square zone for specifier
    and operator tests."""
    return parse_world({
        "name": "flat",
        "workspace": [rect(-50, -50, 50, 50)],
        "regions": {
            "zone": {"polygons": [rect(-10, -10, 10, 10)], "orientation": "flow"},
            "plain": {"polygons": [rect(20, 20, 40, 40)]},
        },
        "fields": {
            "flow": {"default_deg": 45,
                     "pieces": [{"polygon": rect(-10, -10, 10, 10), "heading_deg": 90}]},
        },
        "tables": {},
        "prelude": [],
    })


def build(source, world):
    return run_program(parse(source), world)


def sample(model, seed=0, max_iterations=10000):
    scene, report = sample_scene(model, SamplerConfig(max_iterations=max_iterations),
                                 (seed, 0))
    return scene


def scene_obj(scene, name):
    for obj in scene.objects:
        if obj.name == name:
            return obj
    raise KeyError(name)


@pytest.fixture
def flat(flat_world):
    def run(source, seed=0):
        return sample(build(source, flat_world), seed)
    return run
