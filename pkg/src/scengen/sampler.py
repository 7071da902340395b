"""Rejection sampling with configuration-space pruning.

Three pruning passes restrict the regions that position leaves sample from,
removing only mass that could never satisfy the requirements:

* containment: a box of inradius ``minRadius`` centered outside
  ``erode(workspace, minRadius)`` necessarily pokes out of the workspace;
* heading: when two objects are aligned (within a bounded deviation) to a
  piecewise-constant field and constrained in relative heading and distance,
  each field cell is restricted to the union of M-dilations of compatible
  cells;
* width: cells too thin to hold the whole laterally-spread configuration are
  restricted to their M-collars around other cells.

The derivation of pruning opportunities is a best-effort static analysis;
whenever a pattern is not recognized the sampler simply falls back to plain
rejection, which is always correct.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

from shapely.geometry import Polygon

from . import ops as _ops
from .errors import ExhaustionError, Rejection, SampleTimeError, ScenError
from .evaluator import ScenarioModel
from .geometry import (PiecewiseField, Region, Vector, bounding_box_polygon,
                       normalize_heading, visible_sector)
from .objects import ObjectInstance
from .values import (Constant, DistributionNode, EvalContext, KIND_POINT_IN_REGION,
                     Operation, PropertySlot, SampleAssignment, derive_rng, evaluate,
                     sample_all, static_bounds, static_constant)

ALL_PASSES = ("containment", "heading", "width")


@dataclass
class SamplerConfig:
    max_iterations: int = 10000
    prune: tuple = ALL_PASSES
    seed: int = 0
    batch_size: int = 64
    workers: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ScenError("max iterations must be at least 1")


@dataclass
class SamplerReport:
    iterations: int = 0
    rejections: Counter = dc_field(default_factory=Counter)
    pruned_area: dict = dc_field(default_factory=dict)  # pass -> fraction removed
    wall_time: float = 0.0

    @property
    def total_rejections(self) -> int:
        return sum(self.rejections.values())


@dataclass
class SceneObject:
    name: str
    class_name: str
    properties: dict
    corners: list  # bounding box corners, CCW from front-right
    is_ego: bool


@dataclass
class Scene:
    objects: list
    ego_index: int
    params: dict
    seed_path: tuple
    iterations: int
    world_name: str
    assignment: Optional[SampleAssignment] = None


# ---------------------------------------------------------------------------
# Pruning primitives
# ---------------------------------------------------------------------------


def prune_containment(base: Region, container: Region, min_radius: float) -> Region:
    """Restrict base to the part whose minRadius-disc fits in the container."""
    return base.intersection(container.erode(min_radius))


def narrow(cells: list[Polygon], min_width: float) -> list[int]:
    """Indices of cells admitting no inscribed disc of diameter min_width."""
    out = []
    for i, poly in enumerate(cells):
        if Region(poly).erode(min_width / 2.0).is_empty:
            out.append(i)
    return out


def _interval_hits(allowed: list, center: float, half_width: float) -> bool:
    """Does [center-half, center+half] intersect the allowed heading set?
    Angles are circular; allowed intervals are given in radians in [-pi, pi]."""
    center = normalize_heading(center)
    lo_c, hi_c = center - half_width, center + half_width
    two_pi = 2.0 * math.pi
    for lo, hi in allowed:
        for shift in (-two_pi, 0.0, two_pi):
            if lo_c <= hi + shift and lo + shift <= hi_c:
                return True
    return False


def mirror_intervals(allowed: list) -> list:
    return [(-hi, -lo) for lo, hi in allowed]


def prune_by_heading(field: PiecewiseField, allowed: list, max_dist: float,
                     deviation: float) -> Region:
    """Union over cell pairs (P, Q) with compatible relative heading of
    dilate(Q, M) ∩ P.  ``allowed`` constrains f(Q) - f(P) up to ±2*deviation;
    the inclusive interval-intersection reading keeps every possibly-valid
    placement."""
    kept: list[Region] = []
    dilated = [Region(q).dilate(max_dist) for q, _ in field.cells]
    for i, (p_poly, hp) in enumerate(field.cells):
        p_region = Region(p_poly)
        for j, (q_poly, hq) in enumerate(field.cells):
            qd = dilated[j]
            if not qd.intersects_polygon(p_poly):
                continue
            rel = normalize_heading(hq - hp)
            if not _interval_hits(allowed, rel, 2.0 * deviation):
                continue
            kept.append(p_region.intersection(qd))
    result = Region.empty()
    for piece in kept:
        result = result.union(piece)
    return result


def prune_by_width(field: PiecewiseField, max_dist: float, min_width: float) -> Region:
    """Wide cells stay whole; each narrow cell keeps only its part within
    max_dist of some other cell."""
    cells = [p for p, _ in field.cells]
    narrow_idx = set(narrow(cells, min_width))
    result = Region.empty()
    for i, poly in enumerate(cells):
        if i not in narrow_idx:
            result = result.union(Region(poly))
    for i in narrow_idx:
        collar = Region.empty()
        for j, other in enumerate(cells):
            if j == i:
                continue
            collar = collar.union(Region(other).dilate(max_dist))
        result = result.union(Region(cells[i]).intersection(collar))
    return result


def _restrict_to_map(base: Region, field: PiecewiseField, pruned_map: Region) -> Region:
    """Apply a map-level pruning result to a sampling region: points outside
    every field cell are untouched (the analysis says nothing about them)."""
    cells = Region.from_polygons([p for p, _ in field.cells])
    outside = base.difference(cells)
    inside = base.intersection(pruned_map)
    return Region(outside.geom.union(inside.geom), base.orientation, base.name)


# ---------------------------------------------------------------------------
# Static analysis: deriving prune contexts
# ---------------------------------------------------------------------------


@dataclass
class PruneContext:
    kind: str  # containment | heading | width
    target: ObjectInstance
    node: DistributionNode
    base_region: Region
    container: Optional[Region] = None
    min_radius: float = 0.0
    field: Optional[PiecewiseField] = None
    allowed: Optional[list] = None
    max_dist: float = 0.0
    deviation: float = 0.0
    min_width: float = 0.0


def _position_leaf(inst: ObjectInstance) -> Optional[DistributionNode]:
    value = inst.values.get("position")
    if isinstance(value, DistributionNode) and value.kind == KIND_POINT_IN_REGION:
        region = value.params[0]
        if isinstance(region, Constant) and isinstance(region.value, Region):
            return value
    return None


def _may_mutate(inst: ObjectInstance) -> bool:
    scale = inst.values.get("mutationScale")
    if scale is None:
        return False
    return static_constant(scale) != 0


def _dim_lower_bound(inst: ObjectInstance) -> float:
    lows = []
    for prop in ("width", "height"):
        sym = inst.values.get(prop)
        if sym is None:
            return 0.0
        b = static_bounds(sym)
        if b is None or b[0] <= 0:
            return 0.0
        lows.append(b[0])
    return min(lows)


def _field_alignment(inst: ObjectInstance):
    """(field, deviation bound) when the object's heading is the field at its
    own position plus a statically-bounded deviation."""
    heading = inst.values.get("heading")
    position = inst.values.get("position")
    if heading is None or position is None:
        return None

    def match_field_at(sym):
        if (isinstance(sym, Operation) and sym.op == "field_at"
                and sym.args[1] is position
                and isinstance(sym.args[0], Constant)
                and isinstance(sym.args[0].value, PiecewiseField)):
            return sym.args[0].value
        return None

    direct = match_field_at(heading)
    if direct is not None:
        return (direct, 0.0)
    if isinstance(heading, Operation) and heading.op == "add":
        for fld_arg, dev_arg in (heading.args, heading.args[::-1]):
            fld = match_field_at(fld_arg)
            if fld is None:
                continue
            bounds = static_bounds(dev_arg)
            if bounds is None:
                return None
            return (fld, max(abs(bounds[0]), abs(bounds[1])))
    return None


def _slot_of(sym, prop: str) -> Optional[ObjectInstance]:
    if isinstance(sym, PropertySlot) and sym.prop == prop:
        return sym.instance
    return None


def _scan_requirements(model: ScenarioModel):
    """Recognize 'abs(relative heading of X [from Y]) <= / >= c' and
    'distance [from X] to Y <= c' hard requirements."""
    heading_reqs = []
    distance_bounds = {}
    for req in model.requirements:
        if req.kind != "hard":
            continue
        cond = req.condition
        if not isinstance(cond, Operation) or cond.op not in ("le", "lt", "ge", "gt"):
            continue
        lhs, rhs = cond.args
        if not (isinstance(rhs, Constant) and isinstance(rhs.value, (int, float))):
            continue
        bound = float(rhs.value)
        if isinstance(lhs, Operation) and lhs.op == "abs":
            inner = lhs.args[0]
            if isinstance(inner, Operation) and inner.op == "rel_heading":
                x = _slot_of(inner.args[0], "heading")
                y = _slot_of(inner.args[1], "heading")
                if x is None or y is None:
                    continue
                if cond.op in ("le", "lt"):
                    allowed = [(-bound, bound)]
                else:
                    allowed = [(-math.pi, -bound), (bound, math.pi)]
                heading_reqs.append((x, y, allowed))
        elif isinstance(lhs, Operation) and lhs.op == "distance" and cond.op in ("le", "lt"):
            x = _slot_of(lhs.args[0], "position")
            y = _slot_of(lhs.args[1], "position")
            if x is None or y is None:
                continue
            key = frozenset((id(x), id(y)))
            distance_bounds[key] = min(distance_bounds.get(key, math.inf), bound)
    return heading_reqs, distance_bounds


def _pair_distance_bound(model: ScenarioModel, x: ObjectInstance, y: ObjectInstance,
                         distance_bounds: dict) -> Optional[float]:
    """An upper bound on |x - y| in any accepted scene: an explicit distance
    requirement, or the ego's view distance when the partner must be visible."""
    best = distance_bounds.get(frozenset((id(x), id(y))), math.inf)
    ego = model.ego
    for a, b in ((x, y), (y, x)):
        if a is ego:
            vis = b.values.get("requireVisible")
            if vis is not None and static_constant(vis) is True:
                vd = static_bounds(a.values.get("viewDistance", Constant(50.0)))
                if vd is not None:
                    best = min(best, vd[1])
    return None if math.isinf(best) else best


def _resolve_anchor(inst: ObjectInstance):
    """Follow lateral-offset provenance to its root: (root, low, high)."""
    lo = hi = 0.0
    current = inst
    for _ in range(64):
        anchor = current.lateral_anchor
        if anchor is None:
            return (current, lo, hi)
        root, alo, ahi = anchor
        lo += alo
        hi += ahi
        current = root
    return (current, lo, hi)


def derive_prune_contexts(model: ScenarioModel) -> list[PruneContext]:
    contexts: list[PruneContext] = []
    workspace = model.world.workspace if model.world is not None else None

    leaves = {}
    for inst in model.physical:
        node = _position_leaf(inst)
        if node is not None and not _may_mutate(inst):
            leaves[id(inst)] = (inst, node)

    # containment against the workspace
    if workspace is not None:
        for inst, node in leaves.values():
            contexts.append(PruneContext(
                kind="containment", target=inst, node=node,
                base_region=node.params[0].value,
                container=workspace, min_radius=_dim_lower_bound(inst) / 2.0))

    heading_reqs, distance_bounds = _scan_requirements(model)

    # heading-based pruning
    for x, y, allowed in heading_reqs:
        ax = _field_alignment(x)
        ay = _field_alignment(y)
        if ax is None or ay is None or ax[0] is not ay[0]:
            continue
        fld = ax[0]
        delta = max(ax[1], ay[1])
        max_dist = _pair_distance_bound(model, x, y, distance_bounds)
        if max_dist is None:
            continue
        # allowed constrains heading(x) - heading(y); pruning x's cell P with
        # the partner in Q needs f(P) - f(Q) in the set, i.e. relHead(P, Q)
        # in its mirror.
        for target, target_allowed in ((x, mirror_intervals(allowed)), (y, allowed)):
            if id(target) not in leaves:
                continue
            inst, node = leaves[id(target)]
            contexts.append(PruneContext(
                kind="heading", target=inst, node=node,
                base_region=node.params[0].value,
                field=fld, allowed=target_allowed, max_dist=max_dist,
                deviation=delta))

    # width-based pruning from lateral offset chains
    for inst, node in leaves.values():
        align = _field_alignment(inst)
        if align is None:
            continue
        spans = []
        members = [(inst, 0.0, 0.0)]
        for other in model.physical:
            if other is inst:
                continue
            root, lo, hi = _resolve_anchor(other)
            if root is inst and _field_alignment(other) is not None:
                members.append((other, lo, hi))
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, alo, ahi = members[i]
                b, blo, bhi = members[j]
                guaranteed = max(0.0, alo - bhi, blo - ahi)
                if guaranteed <= 0:
                    continue
                max_dist = _pair_distance_bound(model, a, b, distance_bounds)
                if max_dist is None:
                    continue
                spans.append((guaranteed, max_dist))
        if not spans:
            continue
        min_width, max_dist = max(spans)
        contexts.append(PruneContext(
            kind="width", target=inst, node=node,
            base_region=node.params[0].value,
            field=align[0], max_dist=max_dist, min_width=min_width))

    return contexts


def apply_pruning(model: ScenarioModel, passes=ALL_PASSES):
    """Compute pruned regions for position leaves.

    Returns (overrides, stats): overrides maps node ids to restricted
    regions; stats maps pass name to the fraction of area it removed,
    aggregated over all leaves it touched.
    """
    overrides: dict[int, Region] = {}
    removed = {name: 0.0 for name in ALL_PASSES}
    original = {name: 0.0 for name in ALL_PASSES}
    contexts = [c for c in derive_prune_contexts(model) if c.kind in passes]
    order = {name: i for i, name in enumerate(ALL_PASSES)}
    contexts.sort(key=lambda c: (order[c.kind], c.target.index))
    for ctx in contexts:
        current = overrides.get(ctx.node.node_id, ctx.base_region)
        before = current.area
        if before <= 0:
            continue
        if ctx.kind == "containment":
            result = prune_containment(current, ctx.container, ctx.min_radius)
        elif ctx.kind == "heading":
            pruned_map = prune_by_heading(ctx.field, ctx.allowed, ctx.max_dist,
                                          ctx.deviation)
            result = _restrict_to_map(current, ctx.field, pruned_map)
        else:
            pruned_map = prune_by_width(ctx.field, ctx.max_dist, ctx.min_width)
            result = _restrict_to_map(current, ctx.field, pruned_map)
        overrides[ctx.node.node_id] = result
        removed[ctx.kind] += max(0.0, before - result.area)
        original[ctx.kind] += before
    stats = {name: (removed[name] / original[name] if original[name] > 0 else 0.0)
             for name in ALL_PASSES}
    return overrides, stats


# ---------------------------------------------------------------------------
# The rejection loop
# ---------------------------------------------------------------------------


def _check_finite(value, what: str):
    if isinstance(value, Vector):
        if not value.is_finite():
            raise SampleTimeError(f"{what} is not finite")
    elif isinstance(value, float) and not math.isfinite(value):
        raise SampleTimeError(f"{what} is not finite")
    return value


def _attempt(model: ScenarioModel, rng, overrides, seed=None) -> Scene:
    def resolver(inst, prop, ctx):
        return evaluate(model.final_value(inst, prop), ctx)

    assignment = sample_all(model.nodes, rng, slot_resolver=resolver,
                            region_overrides=overrides, seed=seed)
    ctx = EvalContext(assignment, slot_resolver=resolver, region_overrides=overrides)

    physical = model.physical
    boxes = []
    for inst in physical:
        pos = _check_finite(evaluate(model.final_value(inst, "position"), ctx),
                            f"{inst.label()} position")
        heading = _check_finite(evaluate(model.final_value(inst, "heading"), ctx),
                                f"{inst.label()} heading")
        width = evaluate(inst.get("width"), ctx)
        height = evaluate(inst.get("height"), ctx)
        if not (width > 0 and height > 0):
            raise SampleTimeError(
                f"{inst.label()} has non-positive dimensions {width} x {height}",
                inst.span)
        boxes.append(bounding_box_polygon(pos, heading, width, height))

    # user requirements, in source order
    for req in model.requirements:
        if req.kind == "soft":
            if assignment[req.gate] >= req.probability:
                continue
        value = evaluate(req.condition, ctx)
        if not isinstance(value, bool):
            raise SampleTimeError("requirement condition is not a boolean", req.span)
        if not value:
            raise Rejection(req.label)

    # default requirements: containment, collision, visibility
    workspace = model.world.workspace if model.world is not None else None
    if workspace is not None:
        for inst, box in zip(physical, boxes):
            if not workspace.covers_polygon(box):
                raise Rejection("containment")

    flags = [bool(evaluate(inst.get("allowCollisions"), ctx)) for inst in physical]
    for i in range(len(physical)):
        for j in range(i + 1, len(physical)):
            if flags[i] or flags[j]:
                continue
            if boxes[i].intersects(boxes[j]):
                raise Rejection("collision")

    ego = model.ego
    ego_sector = visible_sector(
        evaluate(model.final_value(ego, "position"), ctx),
        evaluate(model.final_value(ego, "heading"), ctx) if ego.is_oriented else None,
        evaluate(ego.get("viewDistance"), ctx),
        evaluate(ego.get("viewAngle"), ctx) if ego.is_oriented else 2 * math.pi)
    for inst, box in zip(physical, boxes):
        if not bool(evaluate(inst.get("requireVisible"), ctx)):
            continue
        if not _ops._can_see_box(None, ego_sector, box):
            raise Rejection("visibility")

    objects = []
    ego_index = -1
    for k, (inst, box) in enumerate(zip(physical, boxes)):
        props = {}
        for prop in inst.values:
            props[prop] = evaluate(model.final_value(inst, prop), ctx)
        corners = [Vector(x, y) for x, y in list(box.exterior.coords)[:4]]
        if inst.is_ego:
            ego_index = k
        objects.append(SceneObject(inst.name or f"{inst.cls.name.lower()}{inst.index}",
                                   inst.cls.name, props, corners, inst.is_ego))
    params = {name: evaluate(sym, ctx) for name, sym in model.params.items()}
    world_name = model.world.name if model.world is not None else ""
    return Scene(objects, ego_index, params, (), 0, world_name, assignment)


def sample_scene(model: ScenarioModel, config: SamplerConfig, seed_path: tuple,
                 overrides: Optional[dict] = None, stats: Optional[dict] = None):
    """Draw until every requirement holds, or the iteration budget runs out.

    Parallel sampling partitions iteration indices into batches; the accepted
    scene is always the one with the smallest index, so results are identical
    for any worker count.
    """
    start = time.perf_counter()
    report = SamplerReport(pruned_area=dict(stats or {}))
    if overrides is None:
        overrides = {}

    def try_index(i: int):
        rng = derive_rng(*seed_path, i)
        try:
            return (i, _attempt(model, rng, overrides, seed=(*seed_path, i)), None)
        except Rejection as rej:
            return (i, None, rej.reason)

    def finish(scene: Scene, index: int) -> Scene:
        scene.seed_path = tuple(seed_path)
        scene.iterations = index + 1
        report.iterations = index + 1
        report.wall_time = time.perf_counter() - start
        return scene

    if config.workers <= 1:
        for i in range(config.max_iterations):
            i, scene, reason = try_index(i)
            if scene is not None:
                return finish(scene, i), report
            report.rejections[reason] += 1
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for base in range(0, config.max_iterations, config.batch_size):
                idxs = range(base, min(base + config.batch_size, config.max_iterations))
                for i, scene, reason in pool.map(try_index, idxs):
                    if scene is not None:
                        return finish(scene, i), report
                    report.rejections[reason] += 1

    report.iterations = config.max_iterations
    report.wall_time = time.perf_counter() - start
    raise ExhaustionError(
        f"no accepted scene in {config.max_iterations} iterations "
        f"(rejections: {dict(report.rejections)})",
        dict(report.rejections), config.max_iterations)


def verify_scene(model: ScenarioModel, scene: Scene) -> bool:
    """Re-check every hard requirement and default requirement directly from
    the concrete scene, without consulting the sampler's bookkeeping."""
    ctx = EvalContext(scene.assignment,
                      slot_resolver=lambda inst, prop, c: evaluate(
                          model.final_value(inst, prop), c))
    for req in model.requirements:
        if req.kind == "hard" and not evaluate(req.condition, ctx):
            return False
    boxes = []
    for obj in scene.objects:
        boxes.append(bounding_box_polygon(obj.properties["position"],
                                          obj.properties["heading"],
                                          obj.properties["width"],
                                          obj.properties["height"]))
    workspace = model.world.workspace if model.world is not None else None
    if workspace is not None:
        for box in boxes:
            if not workspace.covers_polygon(box):
                return False
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if scene.objects[i].properties.get("allowCollisions") or \
               scene.objects[j].properties.get("allowCollisions"):
                continue
            if boxes[i].intersects(boxes[j]):
                return False
    ego = model.ego
    sector = visible_sector(
        evaluate(model.final_value(ego, "position"), ctx),
        evaluate(model.final_value(ego, "heading"), ctx) if ego.is_oriented else None,
        evaluate(ego.get("viewDistance"), ctx),
        evaluate(ego.get("viewAngle"), ctx) if ego.is_oriented else 2 * math.pi)
    for obj, box in zip(scene.objects, boxes):
        if obj.properties.get("requireVisible") and not _ops._can_see_box(None, sector, box):
            return False
    return True
