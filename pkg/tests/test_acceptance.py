"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v`` to get one line per
criterion.  Every tolerance is pinned here; the statistical tests use fixed
seeds so the suite is deterministic.
"""

import json
import math
import os
import statistics
import time

import numpy as np
import pytest
from scipy import stats as scipy_stats

from scengen import (SamplerConfig, apply_pruning, load_bundled, parse, run_program,
                     sample_scene)
from scengen.cli import main as cli_main
from scengen.errors import ResolutionError
from scengen.geometry import Vector
from scengen.sampler import derive_prune_contexts, _interval_hits
from scengen.worlds import benchmark_path, gallery_scenarios, parse_world

from conftest import build, rect, sample, scene_obj


@pytest.fixture
def announce(capsys):
    def go(line):
        with capsys.disabled():
            print(line, flush=True)
    return go


@pytest.fixture(scope="module")
def flatw():
    return parse_world({
        "name": "flat",
        "workspace": [rect(-50, -50, 50, 50)],
        "regions": {"zone": {"polygons": [rect(-10, -10, 10, 10)], "orientation": "flow"}},
        "fields": {"flow": {"default_deg": 45,
                            "pieces": [{"polygon": rect(-10, -10, 10, 10),
                                        "heading_deg": 90}]}},
        "tables": {},
        "prelude": [],
    })


def accepted_params(model, key, n, base_seed=0):
    out = []
    for seed in range(n):
        scene, _ = sample_scene(model, SamplerConfig(), (base_seed, seed))
        out.append(scene.params[key])
    return out


# ---------------------------------------------------------------------------


def test_criterion_01_gallery(announce):
    """All 12 gallery scenarios accept within budget, median <= 2000,
    total runtime <= 60 s."""
    worlds = {"tworoads": load_bundled("tworoads"), "mars": load_bundled("mars")}
    scenarios = gallery_scenarios()
    assert len(scenarios) == 12
    start = time.perf_counter()
    medians = {}
    for path, wname in scenarios:
        model = run_program(parse(open(path).read()), worlds[wname])
        overrides, pstats = apply_pruning(model)
        iters = []
        for seed in range(10):
            scene, report = sample_scene(model, SamplerConfig(), (seed, 0),
                                         overrides, pstats)
            assert report.iterations <= 10000
            iters.append(report.iterations)
        medians[os.path.basename(path)] = statistics.median(iters)
    elapsed = time.perf_counter() - start
    assert all(m <= 2000 for m in medians.values()), medians
    assert elapsed <= 60.0, f"took {elapsed:.1f}s"
    worst = max(medians.values())
    announce(f"ACCEPTANCE 1: PASS — 12 scenarios x 10 seeds accepted; "
             f"worst median {worst:.0f} iterations; {elapsed:.1f}s total")


def test_criterion_02_conditioning(announce, flatw):
    """x = (0,1); require x > 0.5 samples Uniform(0.5, 1): KS p > 0.01."""
    src = "ego = Object\nx = (0, 1)\nparam out = x\nrequire x > 0.5\n"
    model = build(src, flatw)
    start = time.perf_counter()
    values = accepted_params(model, "out", 10_000)
    elapsed = time.perf_counter() - start
    assert all(v > 0.5 for v in values)
    _, pvalue = scipy_stats.kstest(values, "uniform", args=(0.5, 0.5))
    assert pvalue > 0.01, pvalue
    assert elapsed <= 10.0, f"took {elapsed:.1f}s"
    announce(f"ACCEPTANCE 2: PASS — KS vs Uniform(0.5, 1) p = {pvalue:.3f} "
             f"over 10^4 accepted samples in {elapsed:.1f}s")


def test_criterion_03_diagonal(announce, flatw):
    """y = x @ x is diagonal (exact component equality); resampling breaks
    the correlation."""
    model = build("ego = Object\nx = (0, 1)\nparam y = x @ x\n", flatw)
    diag = accepted_params(model, "y", 10_000)
    exact = sum(1 for v in diag if v.x == v.y)
    assert exact == 10_000
    model2 = build("ego = Object\nx = (0, 1)\nparam y = resample(x) @ x\n", flatw)
    pairs = accepted_params(model2, "y", 10_000)
    corr = np.corrcoef([v.x for v in pairs], [v.y for v in pairs])[0, 1]
    assert abs(corr) < 0.05, corr
    announce(f"ACCEPTANCE 3: PASS — diagonal exact in 10000/10000 samples; "
             f"resampled |corr| = {abs(corr):.4f} < 0.05")


def test_criterion_04_specifier_resolution(announce):
    """(a) dependency-driven plan order; (b) the exact resolution error
    classes."""
    tworoads = load_bundled("tworoads")
    src = ("ego = Car\n"
           "spot = OrientedPoint at 3 @ 0, facing 0\n"
           "x = Car left of spot by 0.5, with model 'BUS'\n")
    model = build(src, tworoads)
    order = []
    for _, props in model.instances[-1].resolution_order:
        order.extend(props)
    assert order.index("model") < order.index("width") < order.index("position")

    with pytest.raises(ResolutionError) as dup:
        build("ego = Car\nCar at 1 @ 1, on road\n", tworoads)
    assert "property position specified twice" in str(dup.value)

    with pytest.raises(ResolutionError) as cyc:
        build("ego = Car\nCar left of 0 @ 0, facing roadDirection\n", tworoads)
    assert "specifiers have cyclic dependencies" in str(cyc.value)
    announce("ACCEPTANCE 4: PASS — plan orders model before width before position; "
             "duplicate and cyclic programs raise the exact error classes")


def test_criterion_05_mutation_statistics(announce, flatw):
    """mutationScale 2 gives position stddev 2.0 m and heading stddev 10
    degrees, both within 5%."""
    src = "ego = Object at 0 @ 0, with requireVisible False\nmutate ego by 2\n"
    model = build(src, flatw)
    xs, ys, hs = [], [], []
    for seed in range(10_000):
        scene, _ = sample_scene(model, SamplerConfig(), (seed, 0))
        props = scene.objects[0].properties
        xs.append(props["position"].x)
        ys.append(props["position"].y)
        hs.append(props["heading"])
    sx, sy, sh = np.std(xs), np.std(ys), np.std(hs)
    assert abs(sx - 2.0) <= 0.1, sx
    assert abs(sy - 2.0) <= 0.1, sy
    target = 2 * math.radians(5.0)
    assert abs(sh - target) <= 0.05 * target, sh
    announce(f"ACCEPTANCE 5: PASS — position stddev ({sx:.3f}, {sy:.3f}) m vs 2.0 +-5%; "
             f"heading stddev {math.degrees(sh):.2f} deg vs 10 +-5%")


def test_criterion_06_soft_requirements(announce, flatw):
    """require[0.8] B with unconditional P(B) = 0.5: accepted-scene
    satisfaction rate in [0.8 - 3 sigma, 1]."""
    src = "ego = Object\nx = (0, 1)\nparam out = x\nrequire[0.8] x > 0.5\n"
    model = build(src, flatw)
    values = accepted_params(model, "out", 10_000)
    rate = sum(1 for v in values if v > 0.5) / len(values)
    sigma = math.sqrt(0.8 * 0.2 / len(values))
    assert rate >= 0.8 - 3 * sigma, rate
    assert rate <= 1.0
    announce(f"ACCEPTANCE 6: PASS — satisfaction rate {rate:.4f} in "
             f"[{0.8 - 3 * sigma:.4f}, 1]")


# -- criterion 7: pruning soundness and distribution preservation -----------


def _grid_points(region, pitch=0.1):
    minx, miny, maxx, maxy = region.geom.bounds
    xs = np.arange(minx + pitch / 2, maxx, pitch)
    ys = np.arange(miny + pitch / 2, maxy, pitch)
    gx, gy = np.meshgrid(xs, ys)
    gx, gy = gx.ravel(), gy.ravel()
    mask = region.contains_points_xy(gx, gy)
    return gx[mask], gy[mask]


def _lanes_oracle():
    """Zero requirement-satisfying placements outside the pruned regions of
    the two-polygon heading benchmark (partner placements over-approximated:
    collisions and visibility ignored, which only widens validity)."""
    world = load_bundled("lanes_bench")
    model = run_program(parse(open(benchmark_path("lanes_bench.scn")).read()), world)
    overrides, _ = apply_pruning(model)
    contexts = {c.target.name: c for c in derive_prune_contexts(model)
                if c.kind == "heading"}
    assert set(contexts) == {"ego", "c"}
    road = world.regions["road"]
    gx, gy = _grid_points(road)
    lane_a = gx < 0  # heading 0 on the left lane, pi on the right
    allowed = [(math.radians(170), math.pi), (-math.pi, math.radians(-170))]
    max_dist = 8.0
    window = math.radians(20)  # 2 x 2 x 5 degree deviations... (+-10 degrees)

    from scipy.spatial import cKDTree
    tree_a = cKDTree(np.column_stack([gx[lane_a], gy[lane_a]]))
    tree_b = cKDTree(np.column_stack([gx[~lane_a], gy[~lane_a]]))

    # pairwise cell compatibility under the widened window
    same_ok = _interval_hits(allowed, 0.0, window / 2)
    cross_ok = _interval_hits(allowed, math.pi, window / 2)
    assert cross_ok and not same_ok

    checked = 0
    for target in ("ego", "c"):
        node = contexts[target].node
        pruned = overrides[node.node_id]
        outside = ~pruned.contains_points_xy(gx, gy)
        pts = np.column_stack([gx[outside], gy[outside]])
        own_a = lane_a[outside]
        # a placement is oracle-valid iff some opposite-lane partner is
        # within the distance bound
        if len(pts):
            d_to_b = tree_b.query(pts, k=1)[0]
            d_to_a = tree_a.query(pts, k=1)[0]
            partner_dist = np.where(own_a, d_to_b, d_to_a)
            valid = partner_dist <= max_dist
            assert not valid.any(), f"{target}: {int(valid.sum())} valid outside"
            checked += len(pts)
    return checked


def _strips_oracle():
    """Zero valid placements outside the pruned region of the narrow-strip
    width benchmark."""
    world = load_bundled("strips_bench")
    model = run_program(parse(open(benchmark_path("strips_bench.scn")).read()), world)
    overrides, _ = apply_pruning(model)
    leaf = [c for c in derive_prune_contexts(model) if c.kind == "width"][0]
    pruned = overrides[leaf.node.node_id]
    road = world.regions["road"]
    gx, gy = _grid_points(road)
    outside = ~pruned.contains_points_xy(gx, gy)
    pts_x, pts_y = gx[outside], gy[outside]

    # the workspace is the union of axis-aligned rectangles; a unit box fits
    # at (x, y) iff it fits inside a single (inset) rectangle
    rects = []
    for poly in world.workspace.polygons:
        x0, y0, x1, y1 = poly.bounds
        rects.append((x0 + 0.5, y0 + 0.5, x1 - 0.5, y1 - 0.5))

    def box_fits(x, y):
        fits = np.zeros_like(x, dtype=bool)
        for x0, y0, x1, y1 in rects:
            fits |= (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        return fits

    def partner_exists(x, y):
        # c = (x + 4, y + g) for some g in [0, 2]
        ok = np.zeros_like(x, dtype=bool)
        cx = x + 4.0
        for x0, y0, x1, y1 in rects:
            ok |= (cx >= x0) & (cx <= x1) & (y + 2.0 >= y0) & (y <= y1)
        return ok

    valid = box_fits(pts_x, pts_y) & partner_exists(pts_x, pts_y)
    assert not valid.any(), f"{int(valid.sum())} valid placements outside pruned region"
    return len(pts_x)


def _ks_prune_agreement(bench, n, seeds=(0, 1)):
    world = load_bundled(bench)
    model = run_program(parse(open(benchmark_path(bench + ".scn")).read()), world)
    overrides, _ = apply_pruning(model)
    plain = {"x": [], "y": []}
    pruned = {"x": [], "y": []}
    for seed in range(n):
        s1, _ = sample_scene(model, SamplerConfig(), (seeds[0], seed))
        s2, _ = sample_scene(model, SamplerConfig(), (seeds[1], seed), overrides)
        p1 = s1.objects[s1.ego_index].properties["position"]
        p2 = s2.objects[s2.ego_index].properties["position"]
        plain["x"].append(p1.x)
        plain["y"].append(p1.y)
        pruned["x"].append(p2.x)
        pruned["y"].append(p2.y)
    ps = []
    for coord in ("x", "y"):
        _, p = scipy_stats.ks_2samp(plain[coord], pruned[coord])
        ps.append(p)
    return ps


def test_criterion_07_pruning_soundness(announce):
    """Grid oracles find zero valid placements outside the pruned regions;
    pruned and unpruned accepted distributions agree by KS (p > 0.01,
    10^4 samples per side)."""
    checked_lanes = _lanes_oracle()
    checked_strips = _strips_oracle()
    assert checked_lanes > 1000 and checked_strips > 1000  # oracles saw real area
    ps = _ks_prune_agreement("lanes_bench", 10_000) + \
        _ks_prune_agreement("strips_bench", 10_000)
    assert all(p > 0.01 for p in ps), ps
    announce(f"ACCEPTANCE 7: PASS — oracles checked {checked_lanes}+{checked_strips} "
             f"outside-region grid placements, zero valid; KS p-values "
             f"{', '.join(f'{p:.3f}' for p in ps)} all > 0.01")


def test_criterion_08_pruning_speedup(announce):
    """On the lateral-offset benchmark, pruning reduces rejections by a
    factor of at least 3 (and never increases them)."""
    world = load_bundled("strips_bench")
    model = run_program(parse(open(benchmark_path("strips_bench.scn")).read()), world)
    overrides, pstats = apply_pruning(model)
    rej_off = rej_on = 0
    for seed in range(10):
        _, off = sample_scene(model, SamplerConfig(), (seed, 0))
        _, on = sample_scene(model, SamplerConfig(), (seed, 1), overrides, pstats)
        rej_off += off.total_rejections
        rej_on += on.total_rejections
    ratio = rej_off / max(1, rej_on)
    assert ratio >= 3.0, (rej_off, rej_on)
    assert rej_off >= rej_on  # pruning never increases rejections
    announce(f"ACCEPTANCE 8: PASS — rejections {rej_off} unpruned vs {rej_on} pruned "
             f"over seeds 0-9: ratio {ratio:.1f} >= 3")


# -- criterion 9: semantics micro-suite --------------------------------------

TOL = 1e-9
P45 = math.pi / 4

# (label, specifier text or expression, expected, mode); modes: pos / head / val.
# Objects named in snippets: p = OrientedPoint (5, 5) facing 45 deg,
# o = Object at (-5, -5) facing 0, 2 x 3 box; ego parked at (40, -40) facing 0.
MICRO_PROGRAM_CASES = [
    ("position:at", "at 1 @ 2", Vector(1, 2), "pos"),
    ("position:offset-by", "offset by (-3) @ 5", Vector(37, -35), "pos"),
    ("position:offset-along-heading", "offset along -90 deg by 0 @ 2", Vector(42, -40), "pos"),
    ("position:offset-along-field", "offset along flow by 0 @ 2",
     Vector(40 - 2 * math.sin(P45), -40 + 2 * math.cos(P45)), "pos"),
    ("position:left-of-vector", "left of 0 @ 0 by 1, with width 1, facing 0",
     Vector(-1.5, 0), "pos"),
    ("position:right-of-vector", "right of 0 @ 0 by 1, with width 1, facing 0",
     Vector(1.5, 0), "pos"),
    ("position:ahead-of-vector", "ahead of 5 @ 5, with height 2, facing 0",
     Vector(5, 6), "pos"),
    ("position:behind-vector", "behind 5 @ 5, with height 2, facing 0", Vector(5, 4), "pos"),
    ("position:beyond", "beyond 0 @ 10 by 0 @ 3 from 0 @ 0", Vector(0, 13), "pos"),
    ("position:beyond-rotated", "beyond 30 @ -40 by 0 @ 3 from 40 @ -40",
     Vector(27, -40), "pos"),
    ("posheading:left-of-op", "left of p by 0.25, with width 1", Vector(5, 5) +
     __import__("scengen.geometry", fromlist=["rotate"]).rotate(Vector(-0.75, 0), P45),
     "pos"),
    ("posheading:ahead-of-object", "ahead of o, with height 2", Vector(-5, -5 + 2.5), "pos"),
    ("posheading:behind-object", "behind o, with height 2", Vector(-5, -7.5), "pos"),
    ("posheading:adopted-heading", "right of p by 1, with width 1", P45, "head"),
    ("posheading:following", "following flow from 0 @ 0 for 8", Vector(-8, 0), "pos"),
    ("posheading:following-heading", "following flow from 0 @ 0 for 8", math.pi / 2, "head"),
    ("headingspec:facing", "at 1 @ 1, facing 30 deg", math.radians(30), "head"),
    ("headingspec:facing-field", "at 0 @ 0, facing flow", math.pi / 2, "head"),
    ("headingspec:facing-toward", "at 0 @ 0, facing toward 10 @ 0", -math.pi / 2, "head"),
    ("headingspec:facing-away", "at 0 @ 0, facing away from 10 @ 0", math.pi / 2, "head"),
    ("headingspec:apparently-facing", "at 40 @ -30, apparently facing 90 deg", math.pi / 2,
     "head"),
    ("scalar:relative-heading", "relative heading of 30 deg from 45 deg",
     math.radians(-15), "val"),
    ("scalar:apparent-heading", "apparent heading of p from 0 @ 5",
     3 * math.pi / 4, "val"),
    ("scalar:distance", "distance from 0 @ 0 to 3 @ 4", 5.0, "val"),
    ("scalar:angle", "angle from 1 @ 1 to 0 @ 2",
     math.radians(45), "val"),
    ("boolean:can-see", "ego can see 40 @ -30", True, "val"),
    ("boolean:is-in-vector", "(0 @ 0) is in zone", True, "val"),
    ("boolean:is-in-object", "o is in zone", True, "val"),
    ("heading:field-at", "flow at (30 @ 30)", P45, "val"),
    ("heading:heading-rel-heading", "170 deg relative to 30 deg", math.radians(200), "val"),
    ("vector:offset-by", "(1 @ 2) offset by (3 @ 4)", Vector(4, 6), "val"),
    ("vector:offset-along-h", "(1 @ 1) offset along 90 deg by (0 @ 2)", Vector(-1, 1),
     "val"),
    ("vector:offset-along-f", "(0 @ 0) offset along flow by (0 @ 2)", Vector(-2, 0),
     "val"),
    ("vector:vec-relative", "(1 @ 2) relative to (3 @ 4)", Vector(4, 6), "val"),
    ("region:visible-region", "visible zone",
     lambda r: r.contains_point(Vector(8, -8)) and not r.contains_point(Vector(-8, 8)),
     "val"),
    ("region:visible-from", "zone visible from q",
     lambda r: r.contains_point(Vector(0, 9)) and not r.contains_point(Vector(0, 0)),
     "val"),
    ("oriented:follow", "follow flow from (0 @ 0) for 5", Vector(-5, 0), "oval"),
]

MICRO_CORNER_CASES = [
    ("oriented:front", "front of", Vector(0, 1.5)),
    ("oriented:back", "back of", Vector(0, -1.5)),
    ("oriented:left", "left of", Vector(-1, 0)),
    ("oriented:right", "right of", Vector(1, 0)),
    ("oriented:front-left", "front left of", Vector(-1, 1.5)),
    ("oriented:front-right", "front right of", Vector(1, 1.5)),
    ("oriented:back-left", "back left of", Vector(-1, -1.5)),
    ("oriented:back-right", "back right of", Vector(1, -1.5)),
]


def test_criterion_09_semantics_micro_suite(announce, flatw):
    """Table-driven hand-derived cases for the core geometric notation and
    every specifier/operator figure row, tolerance 1e-9; plus the grammar
    coverage inventory."""
    from scengen.geometry import (forward_euler, offset_local, rotate, ConstantField,
                                  visible_sector)

    # core notation (rotate, offsetLocal, sectors, boxes, forward Euler)
    geometry_cases = 0
    assert (rotate(Vector(0, 1), math.pi / 2) - Vector(-1, 0)).norm() <= TOL
    assert (offset_local(Vector(5, 5), math.pi / 2, Vector(0, 1)) - Vector(4, 5)).norm() <= TOL
    assert visible_sector(Vector(0, 0), None, 50.0).contains(Vector(0, 50))
    assert not visible_sector(Vector(0, 0), 0.0, 30.0, math.radians(80)).contains(
        Vector(0, 30.01))
    assert (forward_euler(Vector(0, 0), 4.0, ConstantField(-math.pi / 2))
            - Vector(4, 0)).norm() <= TOL
    geometry_cases += 5

    extra = ("p = OrientedPoint at 5 @ 5, facing 45 deg\n"
             "q = Point at 0 @ 20, with viewDistance 15\n"
             "o = Object at -5 @ -5, facing 0, with width 2, with height 3, "
             "with requireVisible False, with allowCollisions True\n")
    failures = []
    for label, text, expected, mode in MICRO_PROGRAM_CASES:
        if mode == "pos" or mode == "head":
            src = ("ego = Object at 40 @ -40, with requireVisible False\n" + extra +
                   f"x = Object {text}, with requireVisible False, "
                   "with allowCollisions True\n")
            scene = sample(build(src, flatw))
            props = scene_obj(scene, "x").properties
            got = props["position"] if mode == "pos" else props["heading"]
        else:
            src = ("ego = Object at 40 @ -40, with requireVisible False\n" + extra +
                   f"param out = {text}\n")
            scene = sample(build(src, flatw))
            got = scene.params["out"]
        if mode == "oval":
            got = got.position
        if callable(expected):
            ok = expected(got)
        elif isinstance(expected, Vector):
            ok = (got - expected).norm() <= TOL
        elif isinstance(expected, bool):
            ok = got is expected
        else:
            ok = abs(got - expected) <= TOL
        if not ok:
            failures.append((label, got, expected))
    for label, which, offset in MICRO_CORNER_CASES:
        src = ("ego = Object at 40 @ -40, with requireVisible False\n" + extra +
               f"param out = {which} o\n")
        got = sample(build(src, flatw)).params["out"]
        expected = Vector(-5, -5) + offset
        if (got.position - expected).norm() > TOL or got.heading != 0.0:
            failures.append((label, got, expected))
    assert not failures, failures

    from test_evaluator import OPERATOR_SNIPPETS, SPECIFIER_SNIPPETS
    assert len(OPERATOR_SNIPPETS) == 41
    assert len(SPECIFIER_SNIPPETS) == 25
    total = geometry_cases + len(MICRO_PROGRAM_CASES) + len(MICRO_CORNER_CASES)
    announce(f"ACCEPTANCE 9: PASS — {total} hand-derived formula cases at 1e-9; "
             f"grammar coverage spans {len(OPERATOR_SNIPPETS)} operator productions "
             f"and {len(SPECIFIER_SNIPPETS)} specifier rows")


def test_criterion_10_determinism(announce, tmp_path):
    """generate -n 10 --seed 42 twice and 1-vs-4 workers: byte-identical
    output trees."""
    scenario = str(tmp_path / "pair.scn")
    with open(scenario, "w") as fh:
        fh.write("ego = Car\ncar2 = Car offset by (-10, 10) @ (20, 40), "
                 "with viewAngle 30 deg\nrequire car2 can see ego\n")
    outs = []
    for name, workers in (("r1", 1), ("r2", 1), ("w4", 4)):
        out = tmp_path / name
        code = cli_main(["generate", scenario, "--world", "tworoads", "-n", "10",
                         "--seed", "42", "--format", "both", "--out", str(out),
                         "--workers", str(workers)])
        assert code == 0
        outs.append(out)
    names = sorted(os.listdir(outs[0]))
    assert len([n for n in names if n.endswith(".json") and n.startswith("scene")]) == 10
    for name in names:
        blob = (outs[0] / name).read_bytes()
        assert (outs[1] / name).read_bytes() == blob, f"{name} differs across runs"
        assert (outs[2] / name).read_bytes() == blob, f"{name} differs across workers"
    announce("ACCEPTANCE 10: PASS — 10-scene output trees byte-identical across "
             "two runs and across 1-vs-4 worker configurations")
