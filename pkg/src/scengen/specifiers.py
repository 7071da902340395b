"""Specifier abstraction, resolution and evaluation rules.

A bound specifier knows which properties it sets (some optionally), which
properties of the object under construction it depends on, and a symbolic
template for each property it can produce.  Templates contain
:class:`SelfProperty` placeholders; executing the resolved plan substitutes
the partially-built object's values for them, so every dependency is bound
before it is read.

Resolution follows the classic scheme: explicit specifiers beat optional
offers beat class defaults; duplicate claims and dependency cycles are
errors; the plan is a topological order of the dependency graph with source
order as the stable tie-break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import NO_SPAN, ConstructionError, ResolutionError, Span
from .geometry import OrientedValue, Region, Vector, VectorField
from .objects import ClassDef, ObjectInstance
from .values import (Constant, DistributionNode, KIND_CHOICE, KIND_INTERVAL, KIND_NORMAL,
                     KIND_POINT_IN_REGION, Operation, PropertySlot,
                     SelfProperty, SymbolicValue, const, make_distribution, op_result_type,
                     operation)

PRIORITY_EXPLICIT = 1
PRIORITY_OPTIONAL = 2
PRIORITY_DEFAULT = 3


# ---------------------------------------------------------------------------
# Static typing and symbolic coercion helpers
# ---------------------------------------------------------------------------


def static_type(sym: SymbolicValue) -> str:
    if isinstance(sym, Constant):
        v = sym.value
        if isinstance(v, Vector):
            return "vector"
        if isinstance(v, OrientedValue):
            return "oriented"
        if isinstance(v, VectorField):
            return "field"
        if isinstance(v, Region):
            return "region"
        if isinstance(v, ObjectInstance):
            return "instance"
        if isinstance(v, ClassDef):
            return "class"
        if isinstance(v, bool):
            return "boolean"
        if isinstance(v, (int, float)):
            return "scalar"
        if isinstance(v, str):
            return "string"
        if isinstance(v, list):
            return "list"
        if isinstance(v, dict):
            return "map"
        if v is None:
            return "none"
        return "unknown"
    if isinstance(sym, DistributionNode):
        if sym.kind in (KIND_INTERVAL, KIND_NORMAL):
            return "scalar"
        if sym.kind == KIND_POINT_IN_REGION:
            return "vector"
        params = sym.params if sym.kind == KIND_CHOICE else sym.params[0::2]
        kinds = {static_type(p) for p in params}
        return kinds.pop() if len(kinds) == 1 else "unknown"
    if isinstance(sym, Operation):
        if sym.op in ("add", "sub"):
            ta = static_type(sym.args[0])
            tb = static_type(sym.args[1])
            if "vector" in (ta, tb):
                return "vector"
            if ta in ("scalar", "heading") and tb in ("scalar", "heading"):
                return "scalar"
            return "unknown"
        if sym.op == "neg":
            return static_type(sym.args[0])
        return op_result_type(sym.op)
    return "unknown"


def instance_of(sym: SymbolicValue) -> Optional[ObjectInstance]:
    if isinstance(sym, Constant) and isinstance(sym.value, ObjectInstance):
        return sym.value
    return None


Reader = Callable[[ObjectInstance, str, Span], SymbolicValue]


def construction_reader(inst: ObjectInstance, prop: str, span: Span) -> SymbolicValue:
    return inst.get(prop, span)


def requirement_reader(inst: ObjectInstance, prop: str, span: Span) -> SymbolicValue:
    if not inst.has_property(prop):
        raise ConstructionError(f"{inst.label()} has no property {prop!r}", span)
    return PropertySlot(inst, prop, span)


def to_vector_sym(sym: SymbolicValue, span: Span, reader: Reader = construction_reader) -> SymbolicValue:
    t = static_type(sym)
    if t == "vector":
        return sym
    if t == "oriented":
        return operation("op_position", sym, span=span)
    inst = instance_of(sym)
    if inst is not None:
        return reader(inst, "position", span)
    if t in ("scalar", "boolean", "string", "list", "map", "region", "field", "none", "class"):
        raise ConstructionError(f"expected a vector, got a {t}", span)
    return operation("as_vector", sym, span=span)


def to_heading_sym(sym: SymbolicValue, span: Span, reader: Reader = construction_reader) -> SymbolicValue:
    t = static_type(sym)
    if t in ("scalar", "heading"):
        return sym
    if t == "oriented":
        return operation("op_heading", sym, span=span)
    inst = instance_of(sym)
    if inst is not None:
        if not inst.is_oriented:
            raise ConstructionError(f"{inst.label()} has no heading", span)
        return reader(inst, "heading", span)
    if t in ("vector", "boolean", "string", "list", "map", "region", "none", "class"):
        raise ConstructionError(f"expected a heading, got a {t}", span)
    if t == "field":
        raise ConstructionError(
            "a vector field can only be used as a heading inside a specifier", span)
    return operation("as_heading", sym, span=span)


def oriented_sym(sym: SymbolicValue, span: Span, reader: Reader = construction_reader) -> SymbolicValue:
    """Symbolic OrientedValue for an oriented point value or instance."""
    t = static_type(sym)
    if t == "oriented":
        return sym
    inst = instance_of(sym)
    if inst is not None and inst.is_oriented:
        return operation("oriented", reader(inst, "position", span),
                         reader(inst, "heading", span), span=span)
    raise ConstructionError("expected an oriented point", span)


_CORNER_OFFSETS = {
    "front": (0.0, 0.5, False, True),
    "back": (0.0, -0.5, False, True),
    "left": (-0.5, 0.0, True, False),
    "right": (0.5, 0.0, True, False),
    "front_left": (-0.5, 0.5, True, True),
    "front_right": (0.5, 0.5, True, True),
    "back_left": (-0.5, -0.5, True, True),
    "back_right": (0.5, -0.5, True, True),
}


def corner_sym(sym: SymbolicValue, which: str, span: Span,
               reader: Reader = construction_reader) -> SymbolicValue:
    """Edge midpoints and corners of an object's bounding box, as an oriented
    point sharing the object's heading."""
    inst = instance_of(sym)
    if inst is None or not inst.is_physical:
        raise ConstructionError(f"'{which.replace('_', ' ')} of' requires an object", span)
    wx, hy, needs_w, needs_h = _CORNER_OFFSETS[which]
    x = operation("mul", reader(inst, "width", span), const(wx), span=span) if needs_w else const(0.0)
    y = operation("mul", reader(inst, "height", span), const(hy), span=span) if needs_h else const(0.0)
    pos = reader(inst, "position", span)
    heading = reader(inst, "heading", span)
    local = operation("vec", x, y, span=span)
    return operation("oriented",
                     operation("offset_local", pos, heading, local, span=span),
                     heading, span=span)


def visible_region_sym(viewer: SymbolicValue, span: Span,
                       reader: Reader = construction_reader) -> SymbolicValue:
    """Symbolic visibility sector for a point, oriented point or instance."""
    inst = instance_of(viewer)
    if inst is not None:
        pos = reader(inst, "position", span)
        heading = reader(inst, "heading", span) if inst.is_oriented else const(None)
        vd = reader(inst, "viewDistance", span)
        va = reader(inst, "viewAngle", span) if inst.is_oriented else const(2 * math.pi)
        return operation("visible_sector", pos, heading, vd, va, span=span)
    t = static_type(viewer)
    if t == "oriented":
        return operation("visible_sector", operation("op_position", viewer, span=span),
                         operation("op_heading", viewer, span=span),
                         const(50.0), const(2 * math.pi), span=span)
    if t == "vector":
        return operation("visible_sector", viewer, const(None), const(50.0),
                         const(2 * math.pi), span=span)
    raise ConstructionError("visibility requires a point or oriented point", span)


def region_statically_oriented(sym: SymbolicValue) -> bool:
    if isinstance(sym, Constant):
        return isinstance(sym.value, Region) and sym.value.orientation is not None
    if isinstance(sym, Operation):
        if sym.op in ("region_visible", "region_visible_from", "region_intersect",
                      "region_union", "region_difference"):
            if region_statically_oriented(sym.args[0]):
                return True
            if sym.op == "region_intersect":
                return region_statically_oriented(sym.args[1])
    return False


def collect_self_deps(*syms: Optional[SymbolicValue]) -> frozenset[str]:
    deps: set[str] = set()
    stack = [s for s in syms if s is not None]
    seen: set[int] = set()
    while stack:
        v = stack.pop()
        if id(v) in seen:
            continue
        seen.add(id(v))
        if isinstance(v, SelfProperty):
            deps.add(v.prop)
        elif isinstance(v, Operation):
            stack.extend(v.args)
        elif isinstance(v, DistributionNode):
            stack.extend(v.params)
    return frozenset(deps)


def substitute_self(sym: SymbolicValue, instance: ObjectInstance,
                    memo: Optional[dict] = None) -> SymbolicValue:
    """Replace SelfProperty placeholders with the instance's current values.

    Distribution nodes containing placeholders were built for this very
    specifier application, so rewriting their parameters in place keeps node
    identity (and therefore sample sharing) intact.
    """
    if memo is None:
        memo = {}
    key = id(sym)
    if key in memo:
        return memo[key]
    result: SymbolicValue
    if isinstance(sym, SelfProperty):
        result = instance.get(sym.prop, sym.span)
    elif isinstance(sym, Operation):
        new_args = tuple(substitute_self(a, instance, memo) for a in sym.args)
        if all(n is o for n, o in zip(new_args, sym.args)):
            result = sym
        else:
            result = Operation(sym.op, new_args, sym.span)
    elif isinstance(sym, DistributionNode):
        new_params = tuple(substitute_self(p, instance, memo) for p in sym.params)
        if any(n is not o for n, o in zip(new_params, sym.params)):
            sym.params = new_params
        result = sym
    else:
        result = sym
    memo[key] = result
    return result


# ---------------------------------------------------------------------------
# Bound specifiers
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class BoundSpecifier:
    """One specifier application, ready for resolution."""

    label: str
    templates: dict  # non-optionally specified property -> template
    optional_templates: dict = field(default_factory=dict)
    priority: int = PRIORITY_EXPLICIT
    span: Span = NO_SPAN
    extra_deps: frozenset = frozenset()
    source_index: int = 0

    @property
    def props(self) -> tuple:
        return tuple(self.templates)

    @property
    def optional_props(self) -> tuple:
        return tuple(self.optional_templates)

    @property
    def deps(self) -> frozenset:
        return collect_self_deps(*self.templates.values(),
                                 *self.optional_templates.values()) | self.extra_deps

    def evaluate(self, instance: ObjectInstance) -> dict:
        memo: dict = {}
        out = {}
        for prop, template in {**self.templates, **self.optional_templates}.items():
            out[prop] = substitute_self(template, instance, memo)
        return out

    def __repr__(self):
        return f"<specifier {self.label}>"


def _self_scalar(prop: str, span: Span, cls: ClassDef, scale: float,
                 extra: Optional[SymbolicValue]) -> SymbolicValue:
    """scale * self.<prop> [+ extra], with the dimension read as 0 when the
    class has no such property (placing a point 'left of X' treats its box as
    empty)."""
    if cls.has_builtin(prop) or prop in cls.default_expr_chain():
        base: SymbolicValue = operation("mul", SelfProperty(prop, span), const(scale), span=span)
    else:
        base = const(0.0)
    if extra is not None:
        sign = const(1.0) if scale >= 0 else const(-1.0)
        base = operation("add", base, operation("mul", extra, sign, span=span), span=span)
    return base


_SIDE_AXES = {
    "left": ("width", -1.0, "x"),
    "right": ("width", 1.0, "x"),
    "ahead": ("height", 1.0, "y"),
    "behind": ("height", -1.0, "y"),
}


def side_of_specifier(side: str, target: SymbolicValue, amount: Optional[SymbolicValue],
                      cls: ClassDef, span: Span) -> BoundSpecifier:
    """left/right of X [by S] and ahead of / behind X [by S].

    Vector targets use the object's own heading; oriented targets use the
    target's frame and optionally hand over its heading.  Physical-object
    targets place against the matching edge midpoint first.
    """
    dim, sign, axis = _SIDE_AXES[side]
    inst = instance_of(target)
    label = f"{side} of" if side != "behind" else "behind"

    offset = _self_scalar(dim, span, cls, sign * 0.5, amount if amount is not None else const(0.0))
    local = operation("vec", offset, const(0.0), span=span) if axis == "x" \
        else operation("vec", const(0.0), offset, span=span)

    if inst is not None and inst.is_physical:
        edge = {"left": "left", "right": "right", "ahead": "front", "behind": "back"}[side]
        target = corner_sym(const(inst), edge, span)
    t = static_type(target)
    if t == "oriented" or (inst is not None and inst.is_oriented):
        ov = oriented_sym(target, span)
        heading = operation("op_heading", ov, span=span)
        pos = operation("offset_local", operation("op_position", ov, span=span),
                        heading, local, span=span)
        return BoundSpecifier(label, {"position": pos}, {"heading": heading}, span=span)
    vec = to_vector_sym(target, span)
    pos = operation("offset_local", vec, SelfProperty("heading", span), local, span=span)
    return BoundSpecifier(label, {"position": pos}, span=span)


def at_specifier(target: SymbolicValue, span: Span) -> BoundSpecifier:
    return BoundSpecifier("at", {"position": to_vector_sym(target, span)}, span=span)


def offset_by_specifier(offset: SymbolicValue, ego_position: SymbolicValue,
                        span: Span) -> BoundSpecifier:
    pos = operation("add", ego_position, to_vector_sym(offset, span), span=span)
    return BoundSpecifier("offset by", {"position": pos}, span=span)


def offset_along_specifier(direction: SymbolicValue, offset: SymbolicValue,
                           ego_position: SymbolicValue, span: Span) -> BoundSpecifier:
    off = to_vector_sym(offset, span)
    if static_type(direction) == "field":
        pos = operation("offset_along_field", ego_position, direction, off, span=span)
    else:
        pos = operation("offset_along_heading", ego_position,
                        to_heading_sym(direction, span), off, span=span)
    return BoundSpecifier("offset along", {"position": pos}, span=span)


def beyond_specifier(target: SymbolicValue, offset: SymbolicValue,
                     base: SymbolicValue, span: Span) -> BoundSpecifier:
    t = to_vector_sym(target, span)
    b = to_vector_sym(base, span)
    line_of_sight = operation("angle_of", operation("sub", t, b, span=span), span=span)
    pos = operation("add", t, operation("rotate", to_vector_sym(offset, span),
                                        line_of_sight, span=span), span=span)
    return BoundSpecifier("beyond", {"position": pos}, span=span)


def visible_specifier(viewer: SymbolicValue, span: Span) -> BoundSpecifier:
    sector = visible_region_sym(viewer, span)
    region = operation("sector_region", sector, span=span)
    node = make_distribution(KIND_POINT_IN_REGION, [region], span)
    return BoundSpecifier("visible", {"position": node}, span=span)


def in_region_specifier(kind: str, region: SymbolicValue, span: Span) -> BoundSpecifier:
    if static_type(region) not in ("region", "unknown"):
        raise ConstructionError(f"'{kind}' requires a region", span)
    node = make_distribution(KIND_POINT_IN_REGION, [region], span)
    optional = {}
    if region_statically_oriented(region):
        optional["heading"] = operation("orientation_at", region, node, span=span)
    return BoundSpecifier(kind, {"position": node}, optional, span=span)


def following_specifier(fieldv: SymbolicValue, base: SymbolicValue, dist: SymbolicValue,
                        span: Span) -> BoundSpecifier:
    if static_type(fieldv) != "field":
        raise ConstructionError("'following' requires a vector field", span)
    ov = operation("follow", fieldv, to_vector_sym(base, span), dist, span=span)
    return BoundSpecifier("following",
                          {"position": operation("op_position", ov, span=span)},
                          {"heading": operation("op_heading", ov, span=span)}, span=span)


def facing_specifier(target: SymbolicValue, span: Span) -> BoundSpecifier:
    if static_type(target) == "field":
        heading = operation("field_at", target, SelfProperty("position", span), span=span)
    else:
        heading = to_heading_sym(target, span)
    return BoundSpecifier("facing", {"heading": heading}, span=span)


def facing_toward_specifier(toward: bool, target: SymbolicValue, span: Span) -> BoundSpecifier:
    t = to_vector_sym(target, span)
    me = SelfProperty("position", span)
    diff = operation("sub", t, me, span=span) if toward else operation("sub", me, t, span=span)
    label = "facing toward" if toward else "facing away from"
    return BoundSpecifier(label, {"heading": operation("angle_of", diff, span=span)}, span=span)


def apparently_facing_specifier(heading: SymbolicValue, base: SymbolicValue,
                                span: Span) -> BoundSpecifier:
    los = operation("angle_of",
                    operation("sub", SelfProperty("position", span),
                              to_vector_sym(base, span), span=span), span=span)
    h = operation("add", to_heading_sym(heading, span), los, span=span)
    return BoundSpecifier("apparently facing", {"heading": h}, span=span)


def with_specifier(prop: str, value: SymbolicValue, span: Span) -> BoundSpecifier:
    return BoundSpecifier(f"with {prop}", {prop: value}, span=span)


def default_specifier(prop: str, template: SymbolicValue, span: Span) -> BoundSpecifier:
    return BoundSpecifier(f"default {prop}", {prop: template},
                          priority=PRIORITY_DEFAULT, span=span)


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


@dataclass
class ResolutionPlan:
    entries: list  # (BoundSpecifier, tuple of property names)

    def order_of(self, prop: str) -> int:
        for i, (_, props) in enumerate(self.entries):
            if prop in props:
                return i
        raise KeyError(prop)

    @property
    def properties(self) -> list:
        out = []
        for _, props in self.entries:
            out.extend(props)
        return out


def resolve_specifiers(cls: ClassDef, specifiers: list[BoundSpecifier],
                       defaults: dict) -> ResolutionPlan:
    """Schedule specifiers so every dependency is assigned first.

    ``defaults`` maps property names to default-priority BoundSpecifiers for
    this instance (builtin and class defaults, most-derived).
    """
    spec_for_property: dict[str, BoundSpecifier] = {}
    optional_for_property: dict[str, list[BoundSpecifier]] = {}
    order: list[BoundSpecifier] = []
    noted: set[int] = set()

    def note(spec: BoundSpecifier):
        if id(spec) not in noted:
            noted.add(id(spec))
            spec.source_index = len(order)
            order.append(spec)

    for spec in specifiers:
        note(spec)
        for prop in spec.props:
            if prop in spec_for_property:
                raise ResolutionError(f"property {prop} specified twice", spec.span)
            spec_for_property[prop] = spec
        for prop in spec.optional_props:
            optional_for_property.setdefault(prop, []).append(spec)

    for prop, offers in optional_for_property.items():
        if prop in spec_for_property:
            continue
        if len(offers) > 1:
            raise ResolutionError(f"property {prop} specified twice", offers[1].span)
        spec_for_property[prop] = offers[0]

    for prop, default in defaults.items():
        if prop not in spec_for_property:
            note(default)
            spec_for_property[prop] = default

    selected = {id(s) for s in spec_for_property.values()}
    chosen = [spec for spec in order if id(spec) in selected]

    edges: dict[int, set[int]] = {id(s): set() for s in chosen}
    indegree: dict[int, int] = {id(s): 0 for s in chosen}
    for spec in chosen:
        for dep in sorted(spec.deps):
            if dep not in spec_for_property:
                raise ResolutionError(f"missing property {dep} required by {spec.label}",
                                      spec.span)
            provider = spec_for_property[dep]
            if provider is spec:
                continue
            if id(spec) not in edges[id(provider)]:
                edges[id(provider)].add(id(spec))
                indegree[id(spec)] += 1

    by_id = {id(s): s for s in chosen}
    ready = [s for s in chosen if indegree[id(s)] == 0]
    plan: list = []
    while ready:
        spec = ready.pop(0)
        props = tuple(sorted(p for p, s in spec_for_property.items() if s is spec))
        plan.append((spec, props))
        newly = [by_id[t] for t in edges[id(spec)]]
        for target in newly:
            indegree[id(target)] -= 1
        ready.extend(t for t in newly if indegree[id(t)] == 0)
        ready.sort(key=lambda s: s.source_index)
    if len(plan) != len(chosen):
        first = min((s for s in chosen if indegree[id(s)] > 0), key=lambda s: s.source_index)
        raise ResolutionError("specifiers have cyclic dependencies", first.span)
    return ResolutionPlan(plan)


def execute_plan(instance: ObjectInstance, plan: ResolutionPlan):
    """Evaluate the plan in order, accumulating properties on the instance.

    The two built-in geometric properties are coerced on assignment: position
    contexts read points as vectors, heading contexts read oriented points as
    headings."""
    for spec, props in plan.entries:
        values = spec.evaluate(instance)
        for prop in props:
            assert prop in values, f"{spec.label} did not produce {prop}"
            value = values[prop]
            if prop == "position":
                value = to_vector_sym(value, spec.span)
            elif prop == "heading":
                value = to_heading_sym(value, spec.span)
            instance.set(prop, value)
    instance.resolution_order = tuple((s.label, props) for s, props in plan.entries)
