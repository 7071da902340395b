"""AST node types produced by the parser.

Statement nodes cover the scenario statements plus the small imperative
subset (functions with default arguments, for-range loops, if/else); every
node carries a source span.  Specifier nodes appear only inside object
definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import NO_SPAN, Span


@dataclass
class Node:
    span: Span = field(default=NO_SPAN, kw_only=True)


# -- expressions -----------------------------------------------------------


@dataclass
class Num(Node):
    value: float


@dataclass
class Str(Node):
    value: str


@dataclass
class Bool(Node):
    value: bool


@dataclass
class NoneLit(Node):
    pass


@dataclass
class Name(Node):
    id: str


@dataclass
class EgoRef(Node):
    pass


@dataclass
class SelfRef(Node):
    pass


@dataclass
class ListLit(Node):
    items: list


@dataclass
class DictLit(Node):
    pairs: list  # (key expr, value expr)


@dataclass
class Interval(Node):
    """The '(low, high)' uniform-interval literal; there are no tuples."""

    low: Node
    high: Node


@dataclass
class VectorLit(Node):
    """x @ y"""

    x: Node
    y: Node


@dataclass
class Call(Node):
    func: Node
    args: list
    kwargs: list  # (name, expr)


@dataclass
class Attribute(Node):
    value: Node
    attr: str


@dataclass
class Index(Node):
    value: Node
    index: Node


@dataclass
class UnaryOp(Node):
    op: str  # "neg" | "not" | "deg"
    operand: Node


@dataclass
class BinOp(Node):
    op: str  # add sub mul div and or eq ne lt le gt ge is
    left: Node
    right: Node


@dataclass
class TernaryIf(Node):
    then: Node
    cond: Node
    orelse: Node


@dataclass
class OperatorApp(Node):
    """Application of one of the multi-word geometric operators.

    ``op`` names the surface form; ``operands`` holds its expression slots in
    a fixed order with None for omitted optional clauses.
    """

    op: str
    operands: list


@dataclass
class ObjectDef(Node):
    class_name: str
    specifiers: list


# -- specifier syntax nodes --------------------------------------------------


@dataclass
class SpecNode(Node):
    pass


@dataclass
class WithSpec(SpecNode):
    prop: str
    value: Node


@dataclass
class AtSpec(SpecNode):
    target: Node


@dataclass
class OffsetBySpec(SpecNode):
    offset: Node


@dataclass
class OffsetAlongSpec(SpecNode):
    direction: Node
    offset: Node


@dataclass
class SideOfSpec(SpecNode):
    """left/right of X [by S] and ahead of/behind X [by S]."""

    side: str  # left | right | ahead | behind
    target: Node
    amount: Optional[Node]


@dataclass
class BeyondSpec(SpecNode):
    target: Node
    offset: Node
    base: Optional[Node]


@dataclass
class VisibleSpec(SpecNode):
    base: Optional[Node]


@dataclass
class InRegionSpec(SpecNode):
    kind: str  # "in" | "on"
    region: Node


@dataclass
class FollowingSpec(SpecNode):
    field: Node
    base: Optional[Node]
    distance: Node


@dataclass
class FacingSpec(SpecNode):
    target: Node  # heading expression or vector field


@dataclass
class FacingTowardSpec(SpecNode):
    toward: bool  # False = "away from"
    target: Node


@dataclass
class ApparentlyFacingSpec(SpecNode):
    heading: Node
    base: Optional[Node]


# -- statements --------------------------------------------------------------


@dataclass
class Program(Node):
    statements: list


@dataclass
class Import(Node):
    module: str


@dataclass
class Assign(Node):
    target: str  # plain name or "ego"
    value: Node


@dataclass
class ParamAssign(Node):
    pairs: list  # (name, expr)


@dataclass
class PropertyDefault(Node):
    name: str
    value: Node


@dataclass
class ClassDef(Node):
    name: str
    superclass: Optional[str]
    properties: list  # PropertyDefault


@dataclass
class ExprStatement(Node):
    value: Node


@dataclass
class Require(Node):
    condition: Node
    probability: Optional[float]  # None = hard


@dataclass
class Mutate(Node):
    names: list  # empty = every physical object
    scale: Optional[Node]


@dataclass
class FunctionDef(Node):
    name: str
    params: list  # (name, default expr | None)
    body: list


@dataclass
class Return(Node):
    value: Optional[Node]


@dataclass
class ForRange(Node):
    var: str
    count: Node
    body: list


@dataclass
class If(Node):
    cond: Node
    then: list
    orelse: list
