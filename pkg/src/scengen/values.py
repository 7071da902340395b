"""Symbolic values: the lazily-evaluated expression DAG over random nodes.

Running a program once produces, for every object property, parameter and
requirement, a DAG of :class:`SymbolicValue` nodes.  Drawing a scene then
means assigning a concrete value to every :class:`DistributionNode` (in
creation order, which is a topological order of the parameter dependencies)
and deterministically evaluating the DAG under that assignment.  The split
makes re-sampling cheap and lets the pruning passes inspect position nodes
statically.
"""

from __future__ import annotations

import itertools
import math
from typing import Any, Callable, Iterable, Optional

import numpy as np

from .errors import NO_SPAN, Rejection, SampleTimeError, ScenError, Span
from .geometry import EmptyRegionError, Region, Vector

_node_ids = itertools.count(1)

# Distribution kinds.  The four language-level distributions plus the
# region-sampling primitive, which the sampler treats as the "position leaf"
# that pruning may restrict.
KIND_INTERVAL = "interval"
KIND_CHOICE = "choice"
KIND_WEIGHTED = "weighted"
KIND_NORMAL = "normal"
KIND_POINT_IN_REGION = "point_in_region"

_ARITY = {KIND_INTERVAL: 2, KIND_NORMAL: 2, KIND_POINT_IN_REGION: 1}


class SymbolicValue:
    __slots__ = ()


class Constant(SymbolicValue):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"Const({self.value!r})"


class DistributionNode(SymbolicValue):
    """A leaf random variable.  Parameters are themselves symbolic, so e.g.
    Normal(m, 1) with random m reads the same m draw in both of two resampled
    copies."""

    __slots__ = ("kind", "params", "node_id", "span")

    def __init__(self, kind: str, params: tuple[SymbolicValue, ...], span: Span = NO_SPAN):
        expected = _ARITY.get(kind)
        if expected is not None and len(params) != expected:
            raise ScenError(f"{kind} distribution takes {expected} parameters, got {len(params)}",
                            span)
        if kind == KIND_CHOICE and not params:
            raise ScenError("uniform choice requires at least one value", span)
        if kind == KIND_WEIGHTED and (not params or len(params) % 2 != 0):
            raise ScenError("weighted distribution requires value/weight pairs", span)
        if kind not in (KIND_INTERVAL, KIND_CHOICE, KIND_WEIGHTED, KIND_NORMAL,
                        KIND_POINT_IN_REGION):
            raise ScenError(f"unknown distribution kind {kind!r}", span)
        self.kind = kind
        self.params = tuple(params)
        self.node_id = next(_node_ids)
        self.span = span

    def __repr__(self):
        return f"Node#{self.node_id}({self.kind})"


class Operation(SymbolicValue):
    """Applied operation over symbolic arguments."""

    __slots__ = ("op", "args", "span")

    def __init__(self, op: str, args: tuple[SymbolicValue, ...], span: Span = NO_SPAN):
        self.op = op
        self.args = tuple(args)
        self.span = span

    def __repr__(self):
        return f"Op({self.op}, {len(self.args)} args)"


class SelfProperty(SymbolicValue):
    """Placeholder for ``self.<prop>`` inside a specifier or default value;
    substituted with the partially-built object's property at plan time."""

    __slots__ = ("prop", "span")

    def __init__(self, prop: str, span: Span = NO_SPAN):
        self.prop = prop
        self.span = span

    def __repr__(self):
        return f"Self.{self.prop}"


class PropertySlot(SymbolicValue):
    """Deferred read of an object property, resolved against the *final*
    (post-mutation) value at evaluation time.  Requirement conditions are
    built from these so they observe mutated scenes."""

    __slots__ = ("instance", "prop", "span")

    def __init__(self, instance, prop: str, span: Span = NO_SPAN):
        self.instance = instance
        self.prop = prop
        self.span = span

    def __repr__(self):
        return f"Slot({self.instance!r}.{self.prop})"


# --------------------------------------------------------------------------
# Construction helpers
# --------------------------------------------------------------------------


def const(value) -> Constant:
    if isinstance(value, SymbolicValue):
        return value  # type: ignore[return-value]
    return Constant(value)


def make_distribution(kind: str, params: Iterable[SymbolicValue], span: Span = NO_SPAN) -> DistributionNode:
    """Fresh leaf node.  Evaluating the same syntactic distribution twice goes
    through here twice and yields two independent nodes."""
    return DistributionNode(kind, tuple(const(p) for p in params), span)


def resample(value: SymbolicValue, span: Span = NO_SPAN) -> SymbolicValue:
    """Independent copy of a leaf distribution, sharing its parameter values.

    Concrete values resample to themselves (the platoon helpers rely on
    ``resample(0)`` being legal); anything else is an error.
    """
    if isinstance(value, DistributionNode):
        return DistributionNode(value.kind, value.params, span)
    if isinstance(value, Constant):
        return value
    raise ScenError("resample requires a distribution or a constant value", span)


_REGISTRY: dict[str, Callable] = {}
_RESULT_TYPE: dict[str, str] = {}


def register_op(name: str, fn: Callable, result_type: str = "unknown"):
    _REGISTRY[name] = fn
    _RESULT_TYPE[name] = result_type


def op_result_type(name: str) -> str:
    return _RESULT_TYPE.get(name, "unknown")


def operation(op: str, *args: SymbolicValue, span: Span = NO_SPAN) -> SymbolicValue:
    """Build an applied operation, constant-folding when every argument is
    already concrete.  Folding keeps control-flow values concrete and the DAGs
    small; distribution nodes never fold."""
    args = tuple(const(a) for a in args)
    if all(isinstance(a, Constant) for a in args):
        fn = _REGISTRY[op]
        return Constant(fn(_FOLD_CTX, *[a.value for a in args], span=span))
    return Operation(op, args, span)


# --------------------------------------------------------------------------
# Reachability and sampling
# --------------------------------------------------------------------------


def walk(roots: Iterable[SymbolicValue]):
    """Iterate every SymbolicValue reachable from the roots, once each."""
    seen: set[int] = set()
    stack = list(roots)
    while stack:
        v = stack.pop()
        if id(v) in seen or not isinstance(v, SymbolicValue):
            continue
        seen.add(id(v))
        yield v
        if isinstance(v, DistributionNode):
            stack.extend(v.params)
        elif isinstance(v, Operation):
            stack.extend(v.args)
        elif isinstance(v, Constant) and isinstance(v.value, SymbolicValue):
            stack.append(v.value)


def reachable_nodes(roots: Iterable[SymbolicValue]) -> list[DistributionNode]:
    """All distribution nodes reachable from the roots, in creation order
    (creation order is topological: parameters exist before their node)."""
    nodes = [v for v in walk(roots) if isinstance(v, DistributionNode)]
    nodes.sort(key=lambda n: n.node_id)
    return nodes


class SampleAssignment:
    """node id -> concrete value, plus the seed material that produced it."""

    __slots__ = ("values", "seed")

    def __init__(self, seed=None):
        self.values: dict[int, Any] = {}
        self.seed = seed

    def __contains__(self, node: DistributionNode) -> bool:
        return node.node_id in self.values

    def __getitem__(self, node: DistributionNode):
        return self.values[node.node_id]

    def __setitem__(self, node: DistributionNode, value):
        self.values[node.node_id] = value


class EvalContext:
    """State for one deterministic evaluation pass: the assignment, a memo so
    shared subexpressions evaluate once, and the property-slot resolver."""

    __slots__ = ("assignment", "memo", "slot_resolver", "region_overrides")

    def __init__(self, assignment: SampleAssignment,
                 slot_resolver: Optional[Callable] = None,
                 region_overrides: Optional[dict[int, Region]] = None):
        self.assignment = assignment
        self.memo: dict[int, Any] = {}
        self.slot_resolver = slot_resolver
        self.region_overrides = region_overrides or {}


_FOLD_CTX = EvalContext(SampleAssignment())


def evaluate(value: SymbolicValue, ctx: EvalContext):
    """Deterministic replay of the DAG under a fixed assignment."""
    if isinstance(value, Constant):
        return value.value
    key = id(value)
    if key in ctx.memo:
        return ctx.memo[key]
    if isinstance(value, DistributionNode):
        try:
            result = ctx.assignment[value]
        except KeyError:
            raise ScenError(f"assignment does not cover node #{value.node_id}", value.span)
    elif isinstance(value, Operation):
        fn = _REGISTRY[value.op]
        args = [evaluate(a, ctx) for a in value.args]
        result = fn(ctx, *args, span=value.span)
    elif isinstance(value, PropertySlot):
        if ctx.slot_resolver is None:
            raise ScenError("object property read outside a sampling context", value.span)
        result = ctx.slot_resolver(value.instance, value.prop, ctx)
    elif isinstance(value, SelfProperty):
        raise ScenError(f"self.{value.prop} escaped specifier resolution", value.span)
    else:
        raise ScenError(f"cannot evaluate {value!r}")
    ctx.memo[key] = result
    return result


def _check_scalar(x, what: str, span: Span):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SampleTimeError(f"{what} must be a scalar, got {type(x).__name__}", span)
    if not math.isfinite(x):
        raise SampleTimeError(f"{what} is not finite", span)
    return float(x)


def sample_node(node: DistributionNode, ctx: EvalContext, rng: np.random.Generator):
    """Draw one value for a leaf node, its parameters already evaluable."""
    span = node.span
    if node.kind == KIND_INTERVAL:
        low = _check_scalar(evaluate(node.params[0], ctx), "interval low", span)
        high = _check_scalar(evaluate(node.params[1], ctx), "interval high", span)
        if low > high:
            raise SampleTimeError(f"interval has low {low} > high {high}", span)
        if low == high:
            return low
        return low + rng.random() * (high - low)
    if node.kind == KIND_CHOICE:
        values = [evaluate(p, ctx) for p in node.params]
        return values[int(rng.integers(len(values)))]
    if node.kind == KIND_WEIGHTED:
        values = [evaluate(p, ctx) for p in node.params[0::2]]
        weights = [_check_scalar(evaluate(p, ctx), "weight", span) for p in node.params[1::2]]
        if any(w < 0 for w in weights):
            raise SampleTimeError("weights must be nonnegative", span)
        total = sum(weights)
        if total <= 0:
            raise SampleTimeError("weights must not all be zero", span)
        u = rng.random() * total
        acc = 0.0
        for v, w in zip(values, weights):
            acc += w
            if u < acc:
                return v
        return values[-1]
    if node.kind == KIND_NORMAL:
        mean = _check_scalar(evaluate(node.params[0], ctx), "mean", span)
        std = _check_scalar(evaluate(node.params[1], ctx), "stdDev", span)
        if std < 0:
            raise SampleTimeError(f"stdDev must be nonnegative, got {std}", span)
        if std == 0:
            return mean
        return mean + std * float(rng.standard_normal())
    if node.kind == KIND_POINT_IN_REGION:
        region = ctx.region_overrides.get(node.node_id)
        if region is None:
            region = evaluate(node.params[0], ctx)
        if not isinstance(region, Region):
            raise SampleTimeError("point sampling requires a region", span)
        try:
            return region.uniform_point(rng)
        except EmptyRegionError:
            where = f" ({span})" if span.line else ""
            raise Rejection(f"empty sampling region{where}")
    raise ScenError(f"unknown node kind {node.kind}", span)


def sample_all(nodes: Iterable[DistributionNode], rng: np.random.Generator,
               slot_resolver=None, region_overrides=None, seed=None) -> SampleAssignment:
    """Assign every node in creation order.  Parameters are always older than
    the nodes using them, so each draw sees a fully-assigned prefix."""
    assignment = SampleAssignment(seed=seed)
    ctx = EvalContext(assignment, slot_resolver=slot_resolver,
                      region_overrides=region_overrides)
    for node in sorted(nodes, key=lambda n: n.node_id):
        assignment[node] = sample_node(node, ctx, rng)
    return assignment


def derive_rng(*path: int) -> np.random.Generator:
    """Named, splittable stream: a child generator keyed by an integer path
    such as (seed, scene_index, iteration)."""
    return np.random.default_rng(np.random.SeedSequence(list(path)))


# --------------------------------------------------------------------------
# Structural identity and static bounds
# --------------------------------------------------------------------------


def structurally_equal(a: SymbolicValue, b: SymbolicValue) -> bool:
    """Equality up to a consistent renaming of node ids.

    Two DAGs are structurally identical when they have the same shape, the
    same operation tags and constants, and their distribution nodes correspond
    one-to-one (shared nodes must be shared the same way on both sides).
    """
    mapping: dict[int, int] = {}

    def go(x: SymbolicValue, y: SymbolicValue) -> bool:
        if type(x) is not type(y):
            return False
        if isinstance(x, Constant):
            vx, vy = x.value, y.value
            if isinstance(vx, SymbolicValue) and isinstance(vy, SymbolicValue):
                return go(vx, vy)
            if isinstance(vx, float) and isinstance(vy, float):
                return vx == vy or (math.isnan(vx) and math.isnan(vy))
            return type(vx) is type(vy) and vx == vy
        if isinstance(x, DistributionNode):
            if x.kind != y.kind or len(x.params) != len(y.params):
                return False
            if x.node_id in mapping:
                return mapping[x.node_id] == y.node_id
            if y.node_id in mapping.values():
                return False
            mapping[x.node_id] = y.node_id
            return all(go(p, q) for p, q in zip(x.params, y.params))
        if isinstance(x, Operation):
            return (x.op == y.op and len(x.args) == len(y.args)
                    and all(go(p, q) for p, q in zip(x.args, y.args)))
        if isinstance(x, SelfProperty):
            return x.prop == y.prop
        if isinstance(x, PropertySlot):
            return x.instance is y.instance and x.prop == y.prop
        return False

    return go(a, b)


_BOUND_OPS = {"add", "sub", "mul", "neg", "abs", "deg", "div", "min", "max"}


def static_bounds(value: SymbolicValue, _depth: int = 0) -> Optional[tuple[float, float]]:
    """Conservative [low, high] bounds of a scalar-valued DAG, or None.

    Used by the pruning analysis: bounds must contain every possible sample.
    Only simple shapes are recognized; anything else returns None and the
    corresponding pruning opportunity is skipped.
    """
    if _depth > 32:
        return None
    if isinstance(value, Constant):
        v = value.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return None
        return (float(v), float(v))
    if isinstance(value, DistributionNode):
        if value.kind == KIND_INTERVAL:
            lo = static_bounds(value.params[0], _depth + 1)
            hi = static_bounds(value.params[1], _depth + 1)
            if lo is None or hi is None:
                return None
            return (min(lo[0], hi[0]), max(lo[1], hi[1]))
        if value.kind == KIND_CHOICE:
            bs = [static_bounds(p, _depth + 1) for p in value.params]
            if any(b is None for b in bs):
                return None
            return (min(b[0] for b in bs), max(b[1] for b in bs))
        if value.kind == KIND_WEIGHTED:
            bs = [static_bounds(p, _depth + 1) for p in value.params[0::2]]
            if any(b is None for b in bs):
                return None
            return (min(b[0] for b in bs), max(b[1] for b in bs))
        return None  # normal is unbounded
    if isinstance(value, Operation) and value.op in _BOUND_OPS:
        bs = [static_bounds(a, _depth + 1) for a in value.args]
        if any(b is None for b in bs):
            return None
        if value.op == "add":
            return (bs[0][0] + bs[1][0], bs[0][1] + bs[1][1])
        if value.op == "sub":
            return (bs[0][0] - bs[1][1], bs[0][1] - bs[1][0])
        if value.op == "mul":
            cands = [bs[0][i] * bs[1][j] for i in (0, 1) for j in (0, 1)]
            return (min(cands), max(cands))
        if value.op == "div":
            lo, hi = bs[1]
            if lo <= 0.0 <= hi:
                return None
            cands = [bs[0][i] / bs[1][j] for i in (0, 1) for j in (0, 1)]
            return (min(cands), max(cands))
        if value.op == "neg":
            return (-bs[0][1], -bs[0][0])
        if value.op == "abs":
            lo, hi = bs[0]
            if lo >= 0:
                return (lo, hi)
            if hi <= 0:
                return (-hi, -lo)
            return (0.0, max(-lo, hi))
        if value.op == "deg":
            k = math.pi / 180.0
            return (bs[0][0] * k, bs[0][1] * k)
        if value.op == "min":
            return (min(b[0] for b in bs), min(b[1] for b in bs))
        if value.op == "max":
            return (max(b[0] for b in bs), max(b[1] for b in bs))
    if isinstance(value, Operation) and value.op == "getitem":
        # Indexing a concrete map with a bounded-choice key: bound over all
        # values the key can take.
        base, key = value.args
        if isinstance(base, Constant) and isinstance(base.value, dict):
            table = base.value
            keys: Optional[list] = None
            if isinstance(key, Constant):
                keys = [key.value]
            elif isinstance(key, DistributionNode) and key.kind in (KIND_CHOICE, KIND_WEIGHTED):
                params = key.params if key.kind == KIND_CHOICE else key.params[0::2]
                if all(isinstance(p, Constant) for p in params):
                    keys = [p.value for p in params]
            if keys is not None and all(k in table for k in keys):
                sub = [static_bounds(const(table[k]), _depth + 1) for k in keys]
                if all(b is not None for b in sub):
                    return (min(b[0] for b in sub), max(b[1] for b in sub))
        return None
    if isinstance(value, Operation) and value.op == "getattr":
        base, key = value.args
        if isinstance(base, Operation) or isinstance(base, DistributionNode):
            # e.g. table[model].width: rewrite as getitem bound when possible
            inner = Operation("getitem", (base, const(None)))
            del inner
        if isinstance(base, Constant) and isinstance(base.value, dict) and isinstance(key, Constant):
            if key.value in base.value:
                return static_bounds(const(base.value[key.value]), _depth + 1)
        if isinstance(base, Operation) and base.op == "getitem" and isinstance(key, Constant):
            tbl, k = base.args
            if isinstance(tbl, Constant) and isinstance(tbl.value, dict):
                rows = None
                if isinstance(k, Constant):
                    rows = [tbl.value.get(k.value)]
                elif isinstance(k, DistributionNode) and k.kind in (KIND_CHOICE, KIND_WEIGHTED):
                    params = k.params if k.kind == KIND_CHOICE else k.params[0::2]
                    if all(isinstance(p, Constant) for p in params):
                        rows = [tbl.value.get(p.value) for p in params]
                if rows is not None and all(isinstance(r, dict) and key.value in r for r in rows):
                    sub = [static_bounds(const(r[key.value]), _depth + 1) for r in rows]
                    if all(b is not None for b in sub):
                        return (min(b[0] for b in sub), max(b[1] for b in sub))
        return None
    return None


def static_constant(value: SymbolicValue):
    """The concrete value if the DAG is (foldable to) a constant, else None."""
    if isinstance(value, Constant):
        return value.value
    b = static_bounds(value)
    if b is not None and b[0] == b[1]:
        return b[0]
    return None


# --------------------------------------------------------------------------
# Core operation implementations (arithmetic, logic, access).  Geometric
# operators live in ops.py and are registered on import.
# --------------------------------------------------------------------------


def _num(x, span, what="operand"):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenError(f"{what} must be a scalar, got {type(x).__name__}", span)
    return x


def _register_core():
    def _add(ctx, a, b, span=NO_SPAN):
        if isinstance(a, Vector) or isinstance(b, Vector):
            if isinstance(a, Vector) and isinstance(b, Vector):
                return a + b
            raise ScenError("cannot add a vector and a scalar", span)
        return _num(a, span) + _num(b, span)

    def _sub(ctx, a, b, span=NO_SPAN):
        if isinstance(a, Vector) and isinstance(b, Vector):
            return a - b
        return _num(a, span) - _num(b, span)

    def _mul(ctx, a, b, span=NO_SPAN):
        return _num(a, span) * _num(b, span)

    def _div(ctx, a, b, span=NO_SPAN):
        b = _num(b, span)
        if b == 0:
            raise SampleTimeError("division by zero", span)
        return _num(a, span) / b

    register_op("add", _add, "scalar")
    register_op("sub", _sub, "scalar")
    register_op("mul", _mul, "scalar")
    register_op("div", _div, "scalar")
    register_op("neg", lambda ctx, a, span=NO_SPAN: -a if isinstance(a, Vector) else -_num(a, span),
                "scalar")
    register_op("abs", lambda ctx, a, span=NO_SPAN: abs(_num(a, span)), "scalar")
    register_op("min", lambda ctx, *a, span=NO_SPAN: min(_num(x, span) for x in a), "scalar")
    register_op("max", lambda ctx, *a, span=NO_SPAN: max(_num(x, span) for x in a), "scalar")
    register_op("deg", lambda ctx, a, span=NO_SPAN: _num(a, span) * math.pi / 180.0, "scalar")

    def _cmp(name, fn):
        register_op(name, lambda ctx, a, b, span=NO_SPAN: fn(a, b), "boolean")

    _cmp("eq", lambda a, b: a == b)
    _cmp("ne", lambda a, b: a != b)
    _cmp("lt", lambda a, b: a < b)
    _cmp("le", lambda a, b: a <= b)
    _cmp("gt", lambda a, b: a > b)
    _cmp("ge", lambda a, b: a >= b)

    def _bool(x, span):
        if not isinstance(x, bool):
            raise ScenError(f"expected a boolean, got {type(x).__name__}", span)
        return x

    register_op("not", lambda ctx, a, span=NO_SPAN: not _bool(a, span), "boolean")
    register_op("and", lambda ctx, a, b, span=NO_SPAN: _bool(a, span) and _bool(b, span), "boolean")
    register_op("or", lambda ctx, a, b, span=NO_SPAN: _bool(a, span) or _bool(b, span), "boolean")
    register_op("is", lambda ctx, a, b, span=NO_SPAN: a is b or (a is None and b is None),
                "boolean")

    register_op("vec", lambda ctx, x, y, span=NO_SPAN: Vector(_num(x, span, "x coordinate"),
                                                              _num(y, span, "y coordinate")),
                "vector")

    def _getitem(ctx, base, key, span=NO_SPAN):
        if isinstance(base, (dict, list)):
            try:
                return base[key]
            except (KeyError, IndexError, TypeError):
                raise ScenError(f"bad index {key!r}", span)
        raise ScenError(f"cannot index a {type(base).__name__}", span)

    register_op("getitem", _getitem, "unknown")

    def _getattr(ctx, base, key, span=NO_SPAN):
        if isinstance(base, dict):
            if key in base:
                return base[key]
            raise ScenError(f"map has no entry {key!r}", span)
        if isinstance(base, Vector) and key in ("x", "y"):
            return getattr(base, key)
        raise ScenError(f"cannot read property {key!r} of {type(base).__name__}", span)

    register_op("getattr", _getattr, "unknown")


_register_core()
