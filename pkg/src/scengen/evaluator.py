"""Construction-phase interpreter.

Runs a parsed program exactly once against a world, producing a
:class:`ScenarioModel`: symbolic objects, the ego designation, hard and soft
requirement DAGs, global parameters and mutation settings.  All randomness is
captured as distribution nodes; control flow must be concrete, which the
interpreter enforces wherever a boolean or loop bound is consumed.

Requirement conditions are lowered with deferred property reads so they
observe post-mutation values; everything else reads the constructed
(pre-mutation) symbolic values.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Optional

from . import ops  # noqa: F401  (registers geometric operators)
from . import syntax as S
from .errors import ConstructionError, Span
from .objects import BUILTIN_DEFAULTS, ClassDef, OBJECT, ObjectInstance, make_builtin_classes
from .parser import parse
from .specifiers import (BoundSpecifier, PRIORITY_DEFAULT, apparently_facing_specifier,
                         at_specifier, beyond_specifier, construction_reader,
                         corner_sym, execute_plan, facing_specifier,
                         facing_toward_specifier, following_specifier, in_region_specifier,
                         instance_of, offset_along_specifier, offset_by_specifier,
                         oriented_sym, requirement_reader, resolve_specifiers,
                         side_of_specifier, static_type, substitute_self, to_heading_sym,
                         to_vector_sym, visible_region_sym, visible_specifier, with_specifier)
from .values import (Constant, DistributionNode, KIND_CHOICE, KIND_INTERVAL, KIND_NORMAL,
                     KIND_WEIGHTED, SelfProperty, SymbolicValue, const, make_distribution,
                     operation, reachable_nodes, resample, static_bounds)


@dataclass
class Requirement:
    condition: SymbolicValue
    kind: str  # "hard" | "soft"
    probability: Optional[float]
    gate: Optional[DistributionNode]  # uniform(0,1) node for soft requirements
    span: Span
    label: str
    ast: S.Node


@dataclass
class ScenarioModel:
    """Compiled scenario: everything the sampler needs, immutable."""

    instances: list
    ego: ObjectInstance
    requirements: list
    params: dict
    world: object
    nodes: list
    finals: dict  # id(instance) -> {"position": sym, "heading": sym|None}
    bindings: dict
    source_name: str = "<scenario>"

    @property
    def physical(self) -> list:
        return [o for o in self.instances if o.is_physical]

    def final_value(self, inst: ObjectInstance, prop: str) -> SymbolicValue:
        override = self.finals.get(id(inst))
        if override and prop in override and override[prop] is not None:
            return override[prop]
        return inst.get(prop)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class FunctionValue:
    def __init__(self, name, params, body, interp):
        self.name = name
        self.params = params  # list of (name, default SymbolicValue | None)
        self.body = body
        self.interp = interp

    def __repr__(self):
        return f"<function {self.name}>"


class Builtin:
    def __init__(self, name, fn):
        self.name = name
        self.fn = fn

    def __repr__(self):
        return f"<builtin {self.name}>"


def _ast_self_deps(node) -> set:
    """Conservative self-dependencies of an unevaluated default expression:
    explicit self.<p> mentions, plus position whenever a 'relative to' or
    'facing' construct might evaluate a field at the object's position."""
    deps: set = set()

    def walk(n):
        if isinstance(n, S.Attribute) and isinstance(n.value, S.SelfRef):
            deps.add(n.attr)
            return
        if isinstance(n, S.OperatorApp) and n.op == "relative_to":
            deps.add("position")
        if dataclasses.is_dataclass(n):
            for f in dataclasses.fields(n):
                walk(getattr(n, f.name))
        elif isinstance(n, (list, tuple)):
            for item in n:
                walk(item)

    walk(node)
    return deps


class _LazyDefault(BoundSpecifier):
    """Class-default specifier: the default expression is evaluated only if
    resolution actually selects it, once per instance."""

    def __init__(self, prop, expr_ast, interp, span):
        super().__init__(f"default {prop}", {prop: Constant(None)},
                         priority=PRIORITY_DEFAULT, span=span)
        self._prop = prop
        self._ast = expr_ast
        self._interp = interp
        self._deps = frozenset(_ast_self_deps(expr_ast))

    @property
    def deps(self):
        return self._deps

    def evaluate(self, instance):
        template = self._interp.eval_expr(self._ast, allow_self=True)
        return {self._prop: substitute_self(template, instance)}


class Interpreter:
    def __init__(self, world, source_name: str = "<scenario>",
                 search_paths: Optional[list] = None):
        self.world = world
        self.source_name = source_name
        self.search_paths = list(search_paths or [])
        self.globals: dict = {}
        self.locals_stack: list = []
        self.classes: dict = make_builtin_classes()
        self.instances: list = []
        self.ego: Optional[ObjectInstance] = None
        self.requirements: list = []
        self.params: dict = {}
        self.reader = construction_reader
        self.allow_self = False
        self.prov: dict = {}  # id(sym) -> (anchor instance, x low, x high)
        self._arg_cache: Optional[dict] = None  # per object definition
        self._imported: set = set()
        self._instance_count = 0
        self._install_builtins()
        if world is not None:
            for name, value in world.bindings().items():
                self.globals[name] = const(value)

    # -- environment ---------------------------------------------------------

    def _install_builtins(self):
        self.globals["Uniform"] = const(Builtin("Uniform", self._uniform))
        self.globals["Discrete"] = const(Builtin("Discrete", self._discrete))
        self.globals["Normal"] = const(Builtin("Normal", self._normal))
        self.globals["resample"] = const(Builtin("resample", self._resample))
        for name in ("abs", "min", "max"):
            self.globals[name] = const(Builtin(name, self._make_scalar_builtin(name)))

    def _make_scalar_builtin(self, op):
        def fn(args, kwargs, span):
            if kwargs or not args or (op == "abs" and len(args) != 1):
                raise ConstructionError(f"bad arguments for {op}()", span)
            return operation(op, *args, span=span)
        return fn

    def _uniform(self, args, kwargs, span):
        if kwargs or not args:
            raise ConstructionError("Uniform(value, ...) requires at least one value", span)
        return make_distribution(KIND_CHOICE, args, span)

    def _normal(self, args, kwargs, span):
        if kwargs or len(args) != 2:
            raise ConstructionError("Normal(mean, stdDev) requires two arguments", span)
        return make_distribution(KIND_NORMAL, args, span)

    def _discrete(self, args, kwargs, span):
        if kwargs or len(args) != 1:
            raise ConstructionError("Discrete({value: weight, ...}) requires one table", span)
        table = args[0]
        if not (isinstance(table, Constant) and isinstance(table.value, dict)):
            raise ConstructionError("Discrete requires a concrete table", span)
        params: list = []
        for key, weight in table.value.items():
            params.append(const(key))
            params.append(const(weight))
        return make_distribution(KIND_WEIGHTED, params, span)

    def _resample(self, args, kwargs, span):
        if kwargs or len(args) != 1:
            raise ConstructionError("resample(distribution) requires one argument", span)
        return resample(args[0], span)

    def lookup(self, name: str, span: Span) -> SymbolicValue:
        for scope in reversed(self.locals_stack):
            if name in scope:
                return scope[name]
        if name in self.globals:
            return self.globals[name]
        raise ConstructionError(f"unbound variable {name!r}", span)

    def bind(self, name: str, value: SymbolicValue):
        if self.locals_stack:
            self.locals_stack[-1][name] = value
        else:
            self.globals[name] = value

    def require_ego(self, span: Span) -> ObjectInstance:
        if self.ego is None:
            raise ConstructionError("ego is not defined yet", span)
        return self.ego

    def ego_position(self, span: Span) -> SymbolicValue:
        return self.reader(self.require_ego(span), "position", span)

    def concrete(self, sym: SymbolicValue, what: str, span: Span):
        if isinstance(sym, Constant):
            return sym.value
        raise ConstructionError(
            f"{what} may not depend on random variables", span)

    # -- program -------------------------------------------------------------

    def run(self, program: S.Program) -> ScenarioModel:
        self.execute_block(program.statements)
        return self.finalize()

    def execute_block(self, statements):
        for stmt in statements:
            self.execute(stmt)

    def execute(self, stmt):
        if isinstance(stmt, S.Assign):
            value = self.eval_expr(stmt.value)
            if stmt.target == "ego":
                if self.ego is not None:
                    raise ConstructionError("ego is already defined", stmt.span)
                inst = instance_of(value)
                if inst is None:
                    raise ConstructionError("ego must be an object", stmt.span)
                inst.is_ego = True
                self.ego = inst
            inst = instance_of(value)
            if inst is not None and inst.name is None:
                inst.name = stmt.target
            self.bind(stmt.target, value)
        elif isinstance(stmt, S.ParamAssign):
            for name, expr in stmt.pairs:
                self.params[name] = self.eval_expr(expr)
        elif isinstance(stmt, S.ClassDef):
            self.define_class(stmt)
        elif isinstance(stmt, S.ExprStatement):
            self.eval_expr(stmt.value)
        elif isinstance(stmt, S.Require):
            self.add_requirement(stmt)
        elif isinstance(stmt, S.Mutate):
            self.mutate(stmt)
        elif isinstance(stmt, S.FunctionDef):
            params = [(name, self.eval_expr(default) if default is not None else None)
                      for name, default in stmt.params]
            self.bind(stmt.name, const(FunctionValue(stmt.name, params, stmt.body, self)))
        elif isinstance(stmt, S.Return):
            if not self.locals_stack:
                raise ConstructionError("return outside a function", stmt.span)
            raise _Return(self.eval_expr(stmt.value) if stmt.value is not None else Constant(None))
        elif isinstance(stmt, S.ForRange):
            count = self.concrete(self.eval_expr(stmt.count), "a loop bound", stmt.span)
            if not isinstance(count, (int, float)) or count != int(count):
                raise ConstructionError("range() requires an integer", stmt.span)
            for i in range(int(count)):
                self.bind(stmt.var, const(i))
                self.execute_block(stmt.body)
        elif isinstance(stmt, S.If):
            cond = self.concrete(self.eval_expr(stmt.cond), "conditional branching", stmt.span)
            if not isinstance(cond, bool):
                raise ConstructionError("if condition must be a boolean", stmt.span)
            self.execute_block(stmt.then if cond else stmt.orelse)
        elif isinstance(stmt, S.Import):
            self.do_import(stmt)
        else:
            raise ConstructionError(f"cannot execute {type(stmt).__name__}", stmt.span)

    def do_import(self, stmt: S.Import):
        for base in self.search_paths:
            path = os.path.join(base, stmt.module + ".scn")
            if os.path.exists(path):
                real = os.path.realpath(path)
                if real in self._imported:
                    return
                self._imported.add(real)
                with open(path, "r", encoding="utf-8") as fh:
                    program = parse(fh.read())
                self.execute_block(program.statements)
                return
        raise ConstructionError(f"cannot find module {stmt.module!r} on the search path",
                                stmt.span)

    def define_class(self, stmt: S.ClassDef):
        if not stmt.name[0].isupper():
            raise ConstructionError("class names must start with an uppercase letter",
                                    stmt.span)
        if stmt.name in self.classes:
            raise ConstructionError(f"class {stmt.name!r} is already defined", stmt.span)
        superclass = None
        if stmt.superclass is not None:
            if stmt.superclass not in self.classes:
                raise ConstructionError(f"unknown superclass {stmt.superclass!r}", stmt.span)
            superclass = self.classes[stmt.superclass]
        seen = set()
        for prop in stmt.properties:
            if prop.name in seen:
                raise ConstructionError(f"duplicate property {prop.name!r} in class "
                                        f"{stmt.name}", prop.span)
            seen.add(prop.name)
        cls = ClassDef(stmt.name, superclass or self.classes[OBJECT],
                       {p.name: p.value for p in stmt.properties}, stmt.span)
        self.classes[stmt.name] = cls

    def add_requirement(self, stmt: S.Require):
        prev = self.reader
        self.reader = requirement_reader
        try:
            cond = self.eval_expr(stmt.condition)
        finally:
            self.reader = prev
        if stmt.probability is None:
            kind, gate = "hard", None
            label = f"require at {stmt.span}"
        else:
            kind = "soft"
            gate = make_distribution(KIND_INTERVAL, [const(0.0), const(1.0)], stmt.span)
            label = f"require[{stmt.probability}] at {stmt.span}"
        self.requirements.append(Requirement(cond, kind, stmt.probability, gate,
                                             stmt.span, label, stmt.condition))

    def mutate(self, stmt: S.Mutate):
        scale = self.eval_expr(stmt.scale) if stmt.scale is not None else const(1.0)
        if stmt.names:
            targets = []
            for name in stmt.names:
                inst = instance_of(self.lookup(name, stmt.span))
                if inst is None:
                    raise ConstructionError(f"mutate requires objects, {name!r} is not one",
                                            stmt.span)
                targets.append(inst)
        else:
            targets = [o for o in self.instances if o.is_physical]
        for inst in targets:
            inst.set("mutationScale", scale)

    # -- expressions -----------------------------------------------------------

    def eval_expr(self, node: S.Node, allow_self: Optional[bool] = None) -> SymbolicValue:
        if allow_self is not None:
            prev, self.allow_self = self.allow_self, allow_self
            try:
                return self.eval_expr(node)
            finally:
                self.allow_self = prev
        cache = self._arg_cache
        if cache is not None and id(node) in cache:
            return cache[id(node)]
        result = self._eval_expr_inner(node)
        if cache is not None:
            cache[id(node)] = result
        return result

    def _eval_expr_inner(self, node: S.Node) -> SymbolicValue:
        if isinstance(node, S.Num):
            return const(float(node.value))
        if isinstance(node, S.Str):
            return const(node.value)
        if isinstance(node, S.Bool):
            return const(node.value)
        if isinstance(node, S.NoneLit):
            return const(None)
        if isinstance(node, S.Name):
            return self.lookup(node.id, node.span)
        if isinstance(node, S.EgoRef):
            return const(self.require_ego(node.span))
        if isinstance(node, S.SelfRef):
            raise ConstructionError("self requires a property access (self.<property>)",
                                    node.span)
        if isinstance(node, S.ListLit):
            items = [self.eval_expr(i) for i in node.items]
            if not all(isinstance(i, Constant) for i in items):
                raise ConstructionError("list elements must be concrete", node.span)
            return const([i.value for i in items])
        if isinstance(node, S.DictLit):
            table = {}
            for key_ast, val_ast in node.pairs:
                key = self.concrete(self.eval_expr(key_ast), "a table key", node.span)
                val = self.concrete(self.eval_expr(val_ast), "a table weight", node.span)
                table[key] = val
            return const(table)
        if isinstance(node, S.Interval):
            return make_distribution(KIND_INTERVAL,
                                     [self.eval_expr(node.low), self.eval_expr(node.high)],
                                     node.span)
        if isinstance(node, S.VectorLit):
            return operation("vec", self.eval_expr(node.x), self.eval_expr(node.y),
                             span=node.span)
        if isinstance(node, S.Call):
            return self.eval_call(node)
        if isinstance(node, S.Attribute):
            return self.eval_attribute(node)
        if isinstance(node, S.Index):
            return operation("getitem", self.eval_expr(node.value),
                             self.eval_expr(node.index), span=node.span)
        if isinstance(node, S.UnaryOp):
            return operation(node.op, self.eval_expr(node.operand), span=node.span)
        if isinstance(node, S.BinOp):
            return self.eval_binop(node)
        if isinstance(node, S.TernaryIf):
            cond = self.concrete(self.eval_expr(node.cond), "conditional branching",
                                 node.span)
            if not isinstance(cond, bool):
                raise ConstructionError("ternary condition must be a boolean", node.span)
            return self.eval_expr(node.then if cond else node.orelse)
        if isinstance(node, S.OperatorApp):
            return self.eval_operator(node)
        if isinstance(node, S.ObjectDef):
            return const(self.construct_object(node))
        raise ConstructionError(f"cannot evaluate {type(node).__name__}", node.span)

    def eval_call(self, node: S.Call) -> SymbolicValue:
        func = self.eval_expr(node.func)
        args = [self.eval_expr(a) for a in node.args]
        kwargs = {k: self.eval_expr(v) for k, v in node.kwargs}
        if isinstance(func, Constant) and isinstance(func.value, Builtin):
            return func.value.fn(args, kwargs, node.span)
        if isinstance(func, Constant) and isinstance(func.value, FunctionValue):
            return self.call_function(func.value, args, kwargs, node.span)
        raise ConstructionError("only functions can be called", node.span)

    def call_function(self, fn: FunctionValue, args, kwargs, span: Span) -> SymbolicValue:
        scope: dict = {}
        params = fn.params
        if len(args) > len(params):
            raise ConstructionError(f"{fn.name}() takes at most {len(params)} arguments",
                                    span)
        for (name, _), value in zip(params, args):
            scope[name] = value
        for key, value in kwargs.items():
            if key not in [p for p, _ in params]:
                raise ConstructionError(f"{fn.name}() has no parameter {key!r}", span)
            if key in scope:
                raise ConstructionError(f"duplicate argument {key!r}", span)
            scope[key] = value
        for name, default in params:
            if name not in scope:
                if default is None:
                    raise ConstructionError(f"{fn.name}() missing argument {name!r}", span)
                scope[name] = default
        self.locals_stack.append(scope)
        try:
            self.execute_block(fn.body)
        except _Return as ret:
            return ret.value
        finally:
            self.locals_stack.pop()
        return Constant(None)

    def eval_attribute(self, node: S.Attribute) -> SymbolicValue:
        if isinstance(node.value, S.SelfRef):
            if not self.allow_self:
                raise ConstructionError(
                    "self is only available in specifier arguments and default values",
                    node.span)
            return SelfProperty(node.attr, node.span)
        base = self.eval_expr(node.value)
        inst = instance_of(base)
        if inst is not None:
            return self.reader(inst, node.attr, node.span)
        return operation("getattr", base, const(node.attr), span=node.span)

    def eval_binop(self, node: S.BinOp) -> SymbolicValue:
        left = self.eval_expr(node.left)
        right = self.eval_expr(node.right)
        if node.op == "is":
            # Identity is statically decidable: symbolic values are never
            # None, so e.g. 'model is None' answers whether the argument was
            # omitted even when model is a distribution.
            if isinstance(left, Constant) and isinstance(right, Constant):
                return const(left.value is right.value
                             or (left.value is None and right.value is None))
            if isinstance(right, Constant) and right.value is None:
                return const(False)
            if isinstance(left, Constant) and left.value is None:
                return const(False)
            raise ConstructionError("'is' requires concrete operands", node.span)
        if node.op in ("add", "sub", "mul", "div"):
            left = self._scalarize(left, node.span)
            right = self._scalarize(right, node.span)
        return operation(node.op, left, right, span=node.span)

    def _scalarize(self, sym: SymbolicValue, span: Span) -> SymbolicValue:
        """Arithmetic operands: oriented points read as headings (vectors pass
        through for vector addition)."""
        t = static_type(sym)
        if t == "oriented":
            return operation("op_heading", sym, span=span)
        inst = instance_of(sym)
        if inst is not None:
            if inst.is_oriented:
                return self.reader(inst, "heading", span)
            raise ConstructionError(f"{inst.label()} cannot be used in arithmetic", span)
        return sym

    # -- multi-word operators ---------------------------------------------------

    def eval_operator(self, node: S.OperatorApp) -> SymbolicValue:
        op = node.op
        a = node.operands
        span = node.span
        ev = self.eval_expr

        if op == "relative_to":
            return self.relative_to(ev(a[0]), ev(a[1]), span)
        if op == "field_at":
            fieldv = ev(a[0])
            if static_type(fieldv) != "field":
                raise ConstructionError("'at' requires a vector field on the left", span)
            return operation("field_at", fieldv, to_vector_sym(ev(a[1]), span, self.reader),
                             span=span)
        if op == "offset_by":
            left = ev(a[0])
            off = to_vector_sym(ev(a[1]), span, self.reader)
            t = static_type(left)
            inst = instance_of(left)
            if t == "oriented" or (inst is not None and inst.is_oriented):
                ov = oriented_sym(left, span, self.reader)
                heading = operation("op_heading", ov, span=span)
                pos = operation("offset_local", operation("op_position", ov, span=span),
                                heading, off, span=span)
                result = operation("oriented", pos, heading, span=span)
                self._prov_offset(result, left, a[1], span)
                return result
            result = operation("add", to_vector_sym(left, span, self.reader), off, span=span)
            self._prov_offset(result, left, a[1], span)
            return result
        if op == "offset_along":
            left = to_vector_sym(ev(a[0]), span, self.reader)
            direction = ev(a[1])
            off = to_vector_sym(ev(a[2]), span, self.reader)
            if static_type(direction) == "field":
                return operation("offset_along_field", left, direction, off, span=span)
            return operation("offset_along_heading", left,
                             to_heading_sym(direction, span, self.reader), off, span=span)
        if op == "visible_region":
            region = ev(a[0])
            sector = visible_region_sym(const(self.require_ego(span)), span, self.reader)
            return operation("region_visible", region, sector, span=span)
        if op == "region_visible_from":
            region = ev(a[0])
            sector = visible_region_sym(ev(a[1]), span, self.reader)
            return operation("region_visible", region, sector, span=span)
        if op == "can_see":
            return self.can_see(ev(a[0]), ev(a[1]), span)
        if op == "is_in":
            target = ev(a[0])
            region = ev(a[1])
            inst = instance_of(target)
            if inst is not None and inst.is_physical:
                box = self._bbox_sym(inst, span)
                return operation("box_in_region", box, region, span=span)
            return operation("point_in_region", to_vector_sym(target, span, self.reader),
                             region, span=span)
        if op == "relative_heading":
            h1 = to_heading_sym(ev(a[0]), span, self.reader)
            if a[1] is not None:
                h2 = to_heading_sym(ev(a[1]), span, self.reader)
            else:
                h2 = self.reader(self.require_ego(span), "heading", span)
            return operation("rel_heading", h1, h2, span=span)
        if op == "apparent_heading":
            target = ev(a[0])
            ovh = to_heading_sym(target, span, self.reader)
            ovp = to_vector_sym(target, span, self.reader)
            base = to_vector_sym(ev(a[1]), span, self.reader) if a[1] is not None \
                else self.ego_position(span)
            return operation("apparent_heading", ovh, ovp, base, span=span)
        if op == "distance":
            v1 = to_vector_sym(ev(a[0]), span, self.reader) if a[0] is not None \
                else self.ego_position(span)
            v2 = to_vector_sym(ev(a[1]), span, self.reader)
            return operation("distance", v1, v2, span=span)
        if op == "angle":
            v1 = to_vector_sym(ev(a[0]), span, self.reader) if a[0] is not None \
                else self.ego_position(span)
            v2 = to_vector_sym(ev(a[1]), span, self.reader)
            return operation("angle_between", v1, v2, span=span)
        if op == "follow":
            fieldv = ev(a[0])
            if static_type(fieldv) != "field":
                raise ConstructionError("'follow' requires a vector field", span)
            base = to_vector_sym(ev(a[1]), span, self.reader) if a[1] is not None \
                else self.ego_position(span)
            dist = ev(a[2])
            result = operation("follow", fieldv, base, dist, span=span)
            if a[1] is not None:
                source = self._prov_of(ev(a[1]))
                if source is not None:
                    self.prov[id(result)] = (result, *source)
            return result
        if op.startswith("corner_"):
            which = op[len("corner_"):]
            target = ev(a[0])
            result = corner_sym(target, which, span, self.reader)
            inst = instance_of(target)
            if inst is not None:
                self.prov[id(result)] = (result, inst, 0.0, 0.0)
            return result
        raise ConstructionError(f"unknown operator {op!r}", span)

    def relative_to(self, left: SymbolicValue, right: SymbolicValue, span: Span):
        lt, rt = static_type(left), static_type(right)
        li, ri = instance_of(left), instance_of(right)
        if li is not None and ri is not None:
            raise ConstructionError(
                f"{li.label()} relative to {ri.label()} is ambiguous; "
                "use explicit .position or .heading", span)
        if lt == "oriented" and rt == "oriented":
            raise ConstructionError("oriented point relative to oriented point is "
                                    "ambiguous; use .position or .heading", span)

        def self_position():
            if not self.allow_self:
                raise ConstructionError(
                    "a field-relative heading is only defined inside a specifier", span)
            return SelfProperty("position", span)

        if lt == "field" and rt == "field":
            pos = self_position()
            return operation("add", operation("field_at", left, pos, span=span),
                             operation("field_at", right, pos, span=span), span=span)
        if lt == "field" or rt == "field":
            fieldv, other = (left, right) if lt == "field" else (right, left)
            heading = to_heading_sym(other, span, self.reader)
            return operation("add", heading,
                             operation("field_at", fieldv, self_position(), span=span),
                             span=span)
        # vector offsets in a local frame
        if lt == "vector" and (rt == "oriented" or (ri is not None and ri.is_oriented)):
            ov = oriented_sym(right, span, self.reader)
            heading = operation("op_heading", ov, span=span)
            pos = operation("offset_local", operation("op_position", ov, span=span),
                            heading, left, span=span)
            return operation("oriented", pos, heading, span=span)
        if lt == "vector" and (rt == "vector" or ri is not None):
            return operation("add", left, to_vector_sym(right, span, self.reader), span=span)
        if rt == "vector" and li is not None and not li.is_oriented:
            return operation("add", self.reader(li, "position", span), right, span=span)
        # headings
        h1 = to_heading_sym(left, span, self.reader)
        h2 = to_heading_sym(right, span, self.reader)
        return operation("add", h1, h2, span=span)

    def can_see(self, viewer: SymbolicValue, target: SymbolicValue, span: Span):
        sector = visible_region_sym(viewer, span, self.reader)
        inst = instance_of(target)
        if inst is not None and inst.is_physical:
            return operation("can_see_box", sector, self._bbox_sym(inst, span), span=span)
        return operation("can_see_point", sector,
                         to_vector_sym(target, span, self.reader), span=span)

    def _bbox_sym(self, inst: ObjectInstance, span: Span) -> SymbolicValue:
        return operation("bbox", self.reader(inst, "position", span),
                         self.reader(inst, "heading", span),
                         self.reader(inst, "width", span),
                         self.reader(inst, "height", span), span=span)

    # -- provenance for the width-pruning analysis -------------------------------

    def _prov_of(self, sym: SymbolicValue):
        inst = instance_of(sym)
        if inst is not None:
            return (inst, 0.0, 0.0)
        entry = self.prov.get(id(sym))
        return entry[1:] if entry is not None else None

    def _prov_offset(self, result, left_sym, offset_ast, span):
        """Record 'result = anchor + lateral x-offset' when the offset's x
        bounds are statically known."""
        base = self._prov_of(left_sym)
        if base is None:
            return
        if not isinstance(offset_ast, S.VectorLit):
            return
        xb = static_bounds(self.eval_expr(offset_ast.x))
        if xb is None:
            return
        anchor, lo, hi = base
        self.prov[id(result)] = (result, anchor, lo + xb[0], hi + xb[1])

    # -- object construction ------------------------------------------------------

    def construct_object(self, node: S.ObjectDef) -> ObjectInstance:
        if node.class_name not in self.classes:
            raise ConstructionError(f"unknown class {node.class_name!r}", node.span)
        cls = self.classes[node.class_name]
        outer_cache = self._arg_cache
        self._arg_cache = {}
        try:
            specs: list[BoundSpecifier] = []
            lateral: Optional[tuple] = None
            for sn in node.specifiers:
                spec = self.build_specifier(sn, cls)
                specs.append(spec)
                if isinstance(sn, (S.AtSpec, S.OffsetBySpec, S.SideOfSpec)):
                    lateral = self._spec_lateral(sn, lateral)

            defaults: dict = {}
            for prop in cls.builtin_properties():
                _, value = BUILTIN_DEFAULTS[prop]
                defaults[prop] = BoundSpecifier(f"default {prop}", {prop: const(value)},
                                                priority=PRIORITY_DEFAULT, span=node.span)
            for prop, expr_ast in cls.default_expr_chain().items():
                defaults[prop] = _LazyDefault(prop, expr_ast, self, node.span)

            plan = resolve_specifiers(cls, specs, defaults)
            instance = ObjectInstance(cls, node.span)
            self._instance_count += 1
            instance.index = self._instance_count
            execute_plan(instance, plan)
        finally:
            self._arg_cache = outer_cache
        instance.lateral_anchor = lateral
        self.instances.append(instance)
        return instance

    def _spec_lateral(self, sn: S.SpecNode, current):
        """Static lateral provenance from position specifiers, best effort."""
        if isinstance(sn, S.AtSpec):
            target = self.eval_expr(sn.target, allow_self=True)
            return self._prov_of(target)
        if isinstance(sn, S.OffsetBySpec) and isinstance(sn.offset, S.VectorLit):
            if self.ego is None:
                return None
            xb = static_bounds(self.eval_expr(sn.offset.x))
            if xb is None:
                return None
            return (self.ego, xb[0], xb[1])
        if isinstance(sn, S.SideOfSpec):
            base = self._prov_of(self.eval_expr(sn.target, allow_self=True))
            if base is None:
                return current
            anchor, lo, hi = base
            if sn.side in ("ahead", "behind"):
                return (anchor, lo, hi)
            amount = self.eval_expr(sn.amount, allow_self=True) if sn.amount is not None \
                else const(0.0)
            ab = static_bounds(amount)
            if ab is None:
                return None
            sign = -1.0 if sn.side == "left" else 1.0
            offs = sorted([sign * ab[0], sign * ab[1]])
            return (anchor, lo + offs[0], hi + offs[1])
        return current

    def build_specifier(self, sn: S.SpecNode, cls: ClassDef) -> BoundSpecifier:
        span = sn.span
        ev = lambda ast: self.eval_expr(ast, allow_self=True)
        if isinstance(sn, S.WithSpec):
            return with_specifier(sn.prop, ev(sn.value), span)
        if isinstance(sn, S.AtSpec):
            return at_specifier(ev(sn.target), span)
        if isinstance(sn, S.OffsetBySpec):
            return offset_by_specifier(ev(sn.offset), self.ego_position(span), span)
        if isinstance(sn, S.OffsetAlongSpec):
            return offset_along_specifier(ev(sn.direction), ev(sn.offset),
                                          self.ego_position(span), span)
        if isinstance(sn, S.SideOfSpec):
            amount = ev(sn.amount) if sn.amount is not None else None
            return side_of_specifier(sn.side, ev(sn.target), amount, cls, span)
        if isinstance(sn, S.BeyondSpec):
            base = ev(sn.base) if sn.base is not None else \
                self.reader(self.require_ego(span), "position", span)
            return beyond_specifier(ev(sn.target), ev(sn.offset), base, span)
        if isinstance(sn, S.VisibleSpec):
            viewer = ev(sn.base) if sn.base is not None else const(self.require_ego(span))
            return visible_specifier(viewer, span)
        if isinstance(sn, S.InRegionSpec):
            return in_region_specifier(sn.kind, ev(sn.region), span)
        if isinstance(sn, S.FollowingSpec):
            base = ev(sn.base) if sn.base is not None else self.ego_position(span)
            return following_specifier(ev(sn.field), base, ev(sn.distance), span)
        if isinstance(sn, S.FacingSpec):
            return facing_specifier(ev(sn.target), span)
        if isinstance(sn, S.FacingTowardSpec):
            return facing_toward_specifier(sn.toward, ev(sn.target), span)
        if isinstance(sn, S.ApparentlyFacingSpec):
            base = ev(sn.base) if sn.base is not None else self.ego_position(span)
            return apparently_facing_specifier(ev(sn.heading), base, span)
        raise ConstructionError(f"unknown specifier {type(sn).__name__}", span)

    # -- finalization ---------------------------------------------------------------

    def finalize(self) -> ScenarioModel:
        if self.ego is None:
            raise ConstructionError("it is a syntax error to leave ego undefined")
        finals: dict = {}
        for inst in self.instances:
            scale = inst.values.get("mutationScale")
            if scale is None:
                continue
            ps = inst.values.get("positionStdDev", const(1.0))
            std = operation("mul", scale, ps)
            nx = make_distribution(KIND_NORMAL, [const(0.0), std], inst.span)
            ny = make_distribution(KIND_NORMAL, [const(0.0), std], inst.span)
            pos = operation("add", inst.get("position"),
                            operation("vec", nx, ny))
            entry = {"position": pos, "heading": None}
            if inst.is_oriented:
                hs = inst.values.get("headingStdDev", const(math.radians(5.0)))
                nh = make_distribution(KIND_NORMAL,
                                       [const(0.0), operation("mul", scale, hs)], inst.span)
                entry["heading"] = operation("add", inst.get("heading"), nh)
            finals[id(inst)] = entry

        roots: list = []
        for inst in self.instances:
            roots.extend(inst.values.values())
        for entry in finals.values():
            roots.extend(v for v in entry.values() if v is not None)
        for req in self.requirements:
            roots.append(req.condition)
            if req.gate is not None:
                roots.append(req.gate)
        roots.extend(self.params.values())
        nodes = reachable_nodes(roots)

        return ScenarioModel(
            instances=list(self.instances),
            ego=self.ego,
            requirements=list(self.requirements),
            params=dict(self.params),
            world=self.world,
            nodes=nodes,
            finals=finals,
            bindings=dict(self.globals),
            source_name=self.source_name,
        )


def run_program(program: S.Program, world, source_name: str = "<scenario>",
                search_paths=None) -> ScenarioModel:
    """Execute the construction phase of a parsed program against a world."""
    interp = Interpreter(world, source_name, search_paths)
    if world is not None and world.prelude:
        prelude = parse(world.prelude)
        interp.execute_block(prelude.statements)
    return interp.run(program)
