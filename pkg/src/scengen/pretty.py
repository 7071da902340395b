"""Canonical source renderer.

``unparse(parse(s))`` produces a program that parses back to a structurally
identical AST.  Composite expressions are emitted fully parenthesized so the
output never depends on precedence subtleties.
"""

from __future__ import annotations

from . import syntax as S

_BINOPS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "and": "and", "or": "or",
           "eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=", "is": "is"}


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def expr(node: S.Node) -> str:
    if isinstance(node, S.Num):
        return _num(node.value)
    if isinstance(node, S.Str):
        body = node.value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{body}'"
    if isinstance(node, S.Bool):
        return "True" if node.value else "False"
    if isinstance(node, S.NoneLit):
        return "None"
    if isinstance(node, S.Name):
        return node.id
    if isinstance(node, S.EgoRef):
        return "ego"
    if isinstance(node, S.SelfRef):
        return "self"
    if isinstance(node, S.ListLit):
        return "[" + ", ".join(expr(i) for i in node.items) + "]"
    if isinstance(node, S.DictLit):
        return "{" + ", ".join(f"{expr(k)}: {expr(v)}" for k, v in node.pairs) + "}"
    if isinstance(node, S.Interval):
        return f"({expr(node.low)}, {expr(node.high)})"
    if isinstance(node, S.VectorLit):
        return f"({expr(node.x)} @ {expr(node.y)})"
    if isinstance(node, S.Call):
        parts = [expr(a) for a in node.args]
        parts += [f"{k}={expr(v)}" for k, v in node.kwargs]
        return f"{expr(node.func)}({', '.join(parts)})"
    if isinstance(node, S.Attribute):
        return f"{expr(node.value)}.{node.attr}"
    if isinstance(node, S.Index):
        return f"{expr(node.value)}[{expr(node.index)}]"
    if isinstance(node, S.UnaryOp):
        if node.op == "neg":
            return f"(-{expr(node.operand)})"
        if node.op == "not":
            return f"(not {expr(node.operand)})"
        return f"({expr(node.operand)} deg)"
    if isinstance(node, S.BinOp):
        return f"({expr(node.left)} {_BINOPS[node.op]} {expr(node.right)})"
    if isinstance(node, S.TernaryIf):
        return f"({expr(node.then)} if {expr(node.cond)} else {expr(node.orelse)})"
    if isinstance(node, S.OperatorApp):
        return _operator(node)
    if isinstance(node, S.ObjectDef):
        specs = ", ".join(spec(sp) for sp in node.specifiers)
        body = f"{node.class_name} {specs}" if specs else node.class_name
        return f"({body})"
    raise TypeError(f"cannot unparse {node!r}")


def _operator(node: S.OperatorApp) -> str:
    op = node.op
    a = node.operands

    def e(i):
        return expr(a[i])

    if op == "relative_to":
        return f"({e(0)} relative to {e(1)})"
    if op == "field_at":
        return f"({e(0)} at {e(1)})"
    if op == "offset_by":
        return f"({e(0)} offset by {e(1)})"
    if op == "offset_along":
        return f"({e(0)} offset along {e(1)} by {e(2)})"
    if op == "region_visible_from":
        return f"({e(0)} visible from {e(1)})"
    if op == "visible_region":
        return f"(visible {e(0)})"
    if op == "can_see":
        return f"({e(0)} can see {e(1)})"
    if op == "is_in":
        return f"({e(0)} is in {e(1)})"
    if op == "relative_heading":
        tail = f" from {e(1)}" if a[1] is not None else ""
        return f"(relative heading of {e(0)}{tail})"
    if op == "apparent_heading":
        tail = f" from {e(1)}" if a[1] is not None else ""
        return f"(apparent heading of {e(0)}{tail})"
    if op == "distance":
        head = f" from {e(0)}" if a[0] is not None else ""
        return f"(distance{head} to {e(1)})"
    if op == "angle":
        head = f" from {e(0)}" if a[0] is not None else ""
        return f"(angle{head} to {e(1)})"
    if op == "follow":
        mid = f" from {e(1)}" if a[1] is not None else ""
        return f"(follow {e(0)}{mid} for {e(2)})"
    if op.startswith("corner_"):
        which = op[len("corner_"):].replace("_", " ")
        return f"({which} of {e(0)})"
    raise TypeError(f"cannot unparse operator {op!r}")


def spec(node: S.SpecNode) -> str:
    if isinstance(node, S.WithSpec):
        return f"with {node.prop} {expr(node.value)}"
    if isinstance(node, S.AtSpec):
        return f"at {expr(node.target)}"
    if isinstance(node, S.OffsetBySpec):
        return f"offset by {expr(node.offset)}"
    if isinstance(node, S.OffsetAlongSpec):
        return f"offset along {expr(node.direction)} by {expr(node.offset)}"
    if isinstance(node, S.SideOfSpec):
        head = {"left": "left of", "right": "right of", "ahead": "ahead of",
                "behind": "behind"}[node.side]
        by = f" by {expr(node.amount)}" if node.amount is not None else ""
        return f"{head} {expr(node.target)}{by}"
    if isinstance(node, S.BeyondSpec):
        base = f" from {expr(node.base)}" if node.base is not None else ""
        return f"beyond {expr(node.target)} by {expr(node.offset)}{base}"
    if isinstance(node, S.VisibleSpec):
        return f"visible from {expr(node.base)}" if node.base is not None else "visible"
    if isinstance(node, S.InRegionSpec):
        return f"{node.kind} {expr(node.region)}"
    if isinstance(node, S.FollowingSpec):
        base = f" from {expr(node.base)}" if node.base is not None else ""
        return f"following {expr(node.field)}{base} for {expr(node.distance)}"
    if isinstance(node, S.FacingSpec):
        return f"facing {expr(node.target)}"
    if isinstance(node, S.FacingTowardSpec):
        return f"facing toward {expr(node.target)}" if node.toward \
            else f"facing away from {expr(node.target)}"
    if isinstance(node, S.ApparentlyFacingSpec):
        base = f" from {expr(node.base)}" if node.base is not None else ""
        return f"apparently facing {expr(node.heading)}{base}"
    raise TypeError(f"cannot unparse specifier {node!r}")


def _statement(node: S.Node, indent: int, out: list):
    pad = "    " * indent

    def line(text):
        out.append(pad + text)

    if isinstance(node, S.Import):
        line(f"import {node.module}")
    elif isinstance(node, S.Assign):
        line(f"{node.target} = {expr(node.value)}")
    elif isinstance(node, S.ParamAssign):
        pairs = ", ".join(f"{k} = {expr(v)}" for k, v in node.pairs)
        line(f"param {pairs}")
    elif isinstance(node, S.ClassDef):
        sup = f"({node.superclass})" if node.superclass else ""
        line(f"class {node.name}{sup}:")
        for prop in node.properties:
            out.append(pad + "    " + f"{prop.name}: {expr(prop.value)}")
    elif isinstance(node, S.ExprStatement):
        value = node.value
        if isinstance(value, S.ObjectDef):
            specs = ", ".join(spec(sp) for sp in value.specifiers)
            line(f"{value.class_name} {specs}" if specs else value.class_name)
        else:
            line(expr(value))
    elif isinstance(node, S.Require):
        head = f"require[{_num(node.probability)}]" if node.probability is not None else "require"
        line(f"{head} {expr(node.condition)}")
    elif isinstance(node, S.Mutate):
        text = "mutate"
        if node.names:
            text += " " + ", ".join(node.names)
        if node.scale is not None:
            text += f" by {expr(node.scale)}"
        line(text)
    elif isinstance(node, S.FunctionDef):
        params = ", ".join(n if d is None else f"{n}={expr(d)}" for n, d in node.params)
        line(f"def {node.name}({params}):")
        for stmt in node.body:
            _statement(stmt, indent + 1, out)
    elif isinstance(node, S.Return):
        line("return" if node.value is None else f"return {expr(node.value)}")
    elif isinstance(node, S.ForRange):
        line(f"for {node.var} in range({expr(node.count)}):")
        for stmt in node.body:
            _statement(stmt, indent + 1, out)
    elif isinstance(node, S.If):
        line(f"if {expr(node.cond)}:")
        for stmt in node.then:
            _statement(stmt, indent + 1, out)
        if node.orelse:
            line("else:")
            for stmt in node.orelse:
                _statement(stmt, indent + 1, out)
    else:
        raise TypeError(f"cannot unparse statement {node!r}")


def unparse(program: S.Program) -> str:
    out: list[str] = []
    for stmt in program.statements:
        _statement(stmt, 0, out)
    return "\n".join(out) + "\n"
