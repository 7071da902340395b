"""Classes, builtin property defaults, object instances and coercions.

The three builtin classes form the root of every inheritance chain:
``Point`` (position and mutation knobs), ``OrientedPoint`` (adds heading and
the view cone) and ``Object`` (adds the bounding box and the collision /
visibility flags).  Only instances of ``Object`` subclasses are physical:
they participate in the default requirements and appear in scenes; points
and oriented points are scaffolding values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import NO_SPAN, ConstructionError, Span
from .geometry import OrientedValue, Vector
from .values import SymbolicValue

POINT = "Point"
ORIENTED_POINT = "OrientedPoint"
OBJECT = "Object"

# The builtin defaults: property -> (owning class, default value).
BUILTIN_DEFAULTS: dict[str, tuple[str, object]] = {
    "position": (POINT, Vector(0.0, 0.0)),
    "viewDistance": (POINT, 50.0),
    "mutationScale": (POINT, 0.0),
    "positionStdDev": (POINT, 1.0),
    "heading": (ORIENTED_POINT, 0.0),
    "viewAngle": (ORIENTED_POINT, math.radians(360.0)),
    "headingStdDev": (ORIENTED_POINT, math.radians(5.0)),
    "width": (OBJECT, 1.0),
    "height": (OBJECT, 1.0),
    "allowCollisions": (OBJECT, False),
    "requireVisible": (OBJECT, True),
}

_CLASS_PROPS = {
    POINT: [p for p, (c, _) in BUILTIN_DEFAULTS.items() if c == POINT],
    ORIENTED_POINT: [p for p, (c, _) in BUILTIN_DEFAULTS.items() if c in (POINT, ORIENTED_POINT)],
    OBJECT: list(BUILTIN_DEFAULTS),
}


@dataclass
class ClassDef:
    """A scenario class: name, superclass and per-property default ASTs."""

    name: str
    superclass: Optional["ClassDef"]
    defaults: dict  # property name -> syntax.Node (unevaluated)
    span: Span = NO_SPAN

    def mro(self) -> list["ClassDef"]:
        chain = [self]
        while chain[-1].superclass is not None:
            chain.append(chain[-1].superclass)
        return chain

    @property
    def builtin_root(self) -> str:
        """The most-derived builtin class in the inheritance chain."""
        for cls in self.mro():
            if cls.name in _CLASS_PROPS:
                return cls.name
        return POINT

    def isa(self, name: str) -> bool:
        return any(c.name == name for c in self.mro())

    @property
    def is_physical(self) -> bool:
        return self.builtin_root == OBJECT

    def builtin_properties(self) -> list[str]:
        return list(_CLASS_PROPS[self.builtin_root])

    def has_builtin(self, prop: str) -> bool:
        return prop in _CLASS_PROPS[self.builtin_root]

    def default_expr_chain(self) -> dict:
        """Most-derived user default AST per property, walked root-first so
        subclasses override."""
        merged: dict = {}
        for cls in reversed(self.mro()):
            for prop, expr in cls.defaults.items():
                merged[prop] = expr
        return merged

    def __repr__(self):
        return f"<class {self.name}>"


def make_builtin_classes() -> dict[str, ClassDef]:
    point = ClassDef(POINT, None, {})
    oriented = ClassDef(ORIENTED_POINT, point, {})
    obj = ClassDef(OBJECT, oriented, {})
    return {POINT: point, ORIENTED_POINT: oriented, OBJECT: obj}


def define_class(name: str, superclass: Optional[ClassDef], properties, span: Span = NO_SPAN,
                 builtins: Optional[dict] = None) -> ClassDef:
    """Register a user class; defaults stay unevaluated ASTs."""
    if superclass is None:
        assert builtins is not None
        superclass = builtins[OBJECT]
    defaults: dict = {}
    for prop in properties:
        if prop.name in defaults:
            raise ConstructionError(f"duplicate property {prop.name!r} in class {name}",
                                    prop.span)
        defaults[prop.name] = prop.value
    return ClassDef(name, superclass, defaults, span)


_instance_counter = [0]


class ObjectInstance:
    """A constructed instance: class, symbolic property values, creation
    index and bookkeeping used by the sampler and the pruning analysis."""

    __slots__ = ("cls", "values", "index", "is_ego", "name", "span",
                 "resolution_order", "lateral_anchor")

    def __init__(self, cls: ClassDef, span: Span = NO_SPAN):
        self.cls = cls
        self.values: dict[str, SymbolicValue] = {}
        _instance_counter[0] += 1
        self.index = _instance_counter[0]
        self.is_ego = False
        self.name: Optional[str] = None
        self.span = span
        self.resolution_order: tuple = ()
        # (anchor instance, low, high): static lateral-offset provenance
        self.lateral_anchor: Optional[tuple] = None

    @property
    def is_physical(self) -> bool:
        return self.cls.is_physical

    @property
    def is_oriented(self) -> bool:
        return self.cls.isa(ORIENTED_POINT)

    def has_property(self, prop: str) -> bool:
        return prop in self.values

    def get(self, prop: str, span: Span = NO_SPAN) -> SymbolicValue:
        if prop not in self.values:
            raise ConstructionError(
                f"{self.label()} has no property {prop!r}", span)
        return self.values[prop]

    def set(self, prop: str, value: SymbolicValue):
        self.values[prop] = value

    def label(self) -> str:
        if self.name:
            return f"{self.cls.name} {self.name!r}"
        return f"{self.cls.name} #{self.index}"

    def __repr__(self):
        return f"<{self.label()}>"


def coerce_to_vector(value, span: Span = NO_SPAN):
    """Concrete-value coercion: points and oriented points read as vectors."""
    if isinstance(value, Vector):
        return value
    if isinstance(value, OrientedValue):
        return value.position
    raise ConstructionError(f"expected a vector, got {type(value).__name__}", span)


def coerce_to_heading(value, span: Span = NO_SPAN):
    if isinstance(value, bool):
        raise ConstructionError("expected a heading, got a boolean", span)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, OrientedValue):
        return value.heading
    raise ConstructionError(f"expected a heading, got {type(value).__name__}", span)
