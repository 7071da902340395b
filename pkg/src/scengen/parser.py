"""Recursive-descent parser.

Operator precedence, loosest to tightest:

    ternary if/else -> or -> and -> not -> comparisons ('==' '!=' '<' '<='
    '>' '>=' 'is' 'can see' 'is in') -> 'relative to' -> chains ('at',
    'offset by', 'offset along .. by', 'visible from') -> '@' -> '+' '-'
    -> '*' '/' -> postfix 'deg' -> unary '-' -> attribute/index/call.

The grammar has no tuples: ``(a, b)`` is always a uniform-interval literal.
An uppercase name in value position that is not called, indexed or accessed
is an object definition (class names are capitalized by convention); its
comma-separated specifier list extends for as long as each comma is followed
by a specifier head.
"""

from __future__ import annotations

import dataclasses

from . import syntax as S
from .errors import ParseError, Span
from .lexer import DEDENT, EOF, INDENT, KW, NAME, NEWLINE, NUMBER, OP, STRING, Token, tokenize

SPEC_HEADS = frozenset(
    "with at offset left right ahead behind beyond visible in on following facing apparently".split()
)

_COMPARISONS = {"==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at(self, kind: str, value=None, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == kind and (value is None or tok.value == value)

    def at_kw(self, *words: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == KW and tok.value in words

    def expect(self, kind: str, value=None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.value!r}", tok.span,
                             expected=str(want))
        return self.next()

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if not self.at_kw(word):
            raise ParseError(f"expected {word!r}, found {tok.value!r}", tok.span, expected=word)
        return self.next()

    # -- program -----------------------------------------------------------

    def parse_program(self) -> S.Program:
        stmts = []
        while not self.at(EOF):
            if self.at(NEWLINE):
                self.next()
                continue
            stmts.append(self.statement())
        return S.Program(stmts, span=Span(1, 1))

    def block(self) -> list:
        self.expect(OP, ":")
        self.expect(NEWLINE)
        body: list = []
        if not self.at(INDENT):
            return body
        self.next()
        while not self.at(DEDENT) and not self.at(EOF):
            if self.at(NEWLINE):
                self.next()
                continue
            body.append(self.statement())
        self.expect(DEDENT)
        return body

    # -- statements ----------------------------------------------------------

    def statement(self) -> S.Node:
        tok = self.peek()
        if tok.kind == KW:
            word = tok.value
            if word == "import":
                return self.import_stmt()
            if word == "class":
                return self.class_stmt()
            if word == "def":
                return self.def_stmt()
            if word == "return":
                self.next()
                value = None
                if not self.at(NEWLINE):
                    value = self.expression()
                self.expect(NEWLINE)
                return S.Return(value, span=tok.span)
            if word == "for":
                return self.for_stmt()
            if word == "if":
                return self.if_stmt()
            if word == "param":
                return self.param_stmt()
            if word == "require":
                return self.require_stmt()
            if word == "mutate":
                return self.mutate_stmt()
            if word == "ego" and self.at(OP, "=", offset=1):
                self.next()
                self.next()
                value = self.expression()
                self.expect(NEWLINE)
                return S.Assign("ego", value, span=tok.span)
        if tok.kind == NAME and self.at(OP, "=", offset=1):
            self.next()
            self.next()
            value = self.expression()
            self.expect(NEWLINE)
            return S.Assign(tok.value, value, span=tok.span)
        value = self.expression()
        self.expect(NEWLINE)
        return S.ExprStatement(value, span=tok.span)

    def import_stmt(self) -> S.Import:
        tok = self.expect_kw("import")
        name = self.expect(NAME)
        self.expect(NEWLINE)
        return S.Import(name.value, span=tok.span)

    def class_stmt(self) -> S.ClassDef:
        tok = self.expect_kw("class")
        name = self.expect(NAME)
        superclass = None
        if self.at(OP, "("):
            self.next()
            superclass = self.expect(NAME).value
            self.expect(OP, ")")
        self.expect(OP, ":")
        self.expect(NEWLINE)
        props: list = []
        if self.at(INDENT):
            self.next()
            while not self.at(DEDENT) and not self.at(EOF):
                if self.at(NEWLINE):
                    self.next()
                    continue
                pname = self.expect(NAME)
                self.expect(OP, ":")
                expr = self.expression()
                self.expect(NEWLINE)
                props.append(S.PropertyDefault(pname.value, expr, span=pname.span))
            self.expect(DEDENT)
        return S.ClassDef(name.value, superclass, props, span=tok.span)

    def def_stmt(self) -> S.FunctionDef:
        tok = self.expect_kw("def")
        name = self.expect(NAME)
        self.expect(OP, "(")
        params: list = []
        seen_default = False
        while not self.at(OP, ")"):
            pname = self.expect(NAME)
            default = None
            if self.at(OP, "="):
                self.next()
                default = self.expression()
                seen_default = True
            elif seen_default:
                raise ParseError("parameter without default after defaulted parameter",
                                 pname.span)
            params.append((pname.value, default))
            if not self.at(OP, ")"):
                self.expect(OP, ",")
        self.expect(OP, ")")
        body = self.block()
        return S.FunctionDef(name.value, params, body, span=tok.span)

    def for_stmt(self) -> S.ForRange:
        tok = self.expect_kw("for")
        var = self.expect(NAME)
        self.expect_kw("in")
        callee = self.expect(NAME)
        if callee.value != "range":
            raise ParseError("only 'for NAME in range(...)' loops are supported", callee.span)
        self.expect(OP, "(")
        count = self.expression()
        self.expect(OP, ")")
        body = self.block()
        return S.ForRange(var.value, count, body, span=tok.span)

    def if_stmt(self) -> S.If:
        tok = self.expect_kw("if")
        cond = self.expression()
        then = self.block()
        orelse: list = []
        if self.at_kw("else"):
            self.next()
            orelse = self.block()
        return S.If(cond, then, orelse, span=tok.span)

    def param_stmt(self) -> S.ParamAssign:
        tok = self.expect_kw("param")
        pairs = []
        while True:
            name = self.expect(NAME)
            self.expect(OP, "=")
            pairs.append((name.value, self.expression()))
            if self.at(OP, ","):
                self.next()
                continue
            break
        self.expect(NEWLINE)
        return S.ParamAssign(pairs, span=tok.span)

    def require_stmt(self) -> S.Require:
        tok = self.expect_kw("require")
        prob = None
        if self.at(OP, "["):
            self.next()
            p = self.peek()
            if p.kind != NUMBER:
                raise ParseError("soft-requirement probability must be a number literal",
                                 p.span)
            self.next()
            prob = float(p.value)
            if not (0.0 < prob <= 1.0):
                raise ParseError(f"probability must be in (0, 1], got {prob}", p.span)
            self.expect(OP, "]")
        cond = self.expression()
        self.expect(NEWLINE)
        return S.Require(cond, prob, span=tok.span)

    def mutate_stmt(self) -> S.Mutate:
        tok = self.expect_kw("mutate")
        names: list = []
        while self.at(NAME) or self.at_kw("ego"):
            names.append(self.next().value)
            if self.at(OP, ","):
                self.next()
                continue
            break
        scale = None
        if self.at_kw("by"):
            self.next()
            scale = self.expression()
        self.expect(NEWLINE)
        return S.Mutate(names, scale, span=tok.span)

    # -- expressions ---------------------------------------------------------

    def expression(self) -> S.Node:
        return self.ternary()

    def ternary(self) -> S.Node:
        value = self.or_expr()
        if self.at_kw("if"):
            span = self.next().span
            cond = self.or_expr()
            self.expect_kw("else")
            orelse = self.ternary()
            return S.TernaryIf(value, cond, orelse, span=span)
        return value

    def or_expr(self) -> S.Node:
        left = self.and_expr()
        while self.at_kw("or"):
            span = self.next().span
            left = S.BinOp("or", left, self.and_expr(), span=span)
        return left

    def and_expr(self) -> S.Node:
        left = self.not_expr()
        while self.at_kw("and"):
            span = self.next().span
            left = S.BinOp("and", left, self.not_expr(), span=span)
        return left

    def not_expr(self) -> S.Node:
        if self.at_kw("not"):
            span = self.next().span
            return S.UnaryOp("not", self.not_expr(), span=span)
        return self.comparison()

    def comparison(self) -> S.Node:
        left = self.relative()
        tok = self.peek()
        if tok.kind == OP and tok.value in _COMPARISONS:
            self.next()
            right = self.relative()
            nxt = self.peek()
            if nxt.kind == OP and nxt.value in _COMPARISONS:
                raise ParseError("chained comparisons are not supported", nxt.span)
            return S.BinOp(_COMPARISONS[tok.value], left, right, span=tok.span)
        if self.at_kw("is"):
            span = self.next().span
            if self.at_kw("in"):
                self.next()
                return S.OperatorApp("is_in", [left, self.relative()], span=span)
            return S.BinOp("is", left, self.relative(), span=span)
        if self.at_kw("can") and self.at_kw("see", offset=1):
            span = self.next().span
            self.next()
            return S.OperatorApp("can_see", [left, self.relative()], span=span)
        return left

    def relative(self) -> S.Node:
        left = self.chain()
        while self.at_kw("relative") and self.at_kw("to", offset=1):
            span = self.next().span
            self.next()
            left = S.OperatorApp("relative_to", [left, self.chain()], span=span)
        return left

    def chain(self) -> S.Node:
        left = self.vector_expr()
        while True:
            if self.at_kw("at"):
                span = self.next().span
                left = S.OperatorApp("field_at", [left, self.vector_expr()], span=span)
            elif self.at_kw("offset") and self.at_kw("by", offset=1):
                span = self.next().span
                self.next()
                left = S.OperatorApp("offset_by", [left, self.vector_expr()], span=span)
            elif self.at_kw("offset") and self.at_kw("along", offset=1):
                span = self.next().span
                self.next()
                direction = self.vector_expr()
                self.expect_kw("by")
                left = S.OperatorApp("offset_along", [left, direction, self.vector_expr()],
                                     span=span)
            elif self.at_kw("visible") and self.at_kw("from", offset=1):
                span = self.next().span
                self.next()
                left = S.OperatorApp("region_visible_from", [left, self.vector_expr()],
                                     span=span)
            else:
                return left

    def vector_expr(self) -> S.Node:
        left = self.additive()
        while self.at(OP, "@"):
            span = self.next().span
            left = S.VectorLit(left, self.additive(), span=span)
        return left

    def additive(self) -> S.Node:
        left = self.term()
        while self.at(OP, "+") or self.at(OP, "-"):
            tok = self.next()
            op = "add" if tok.value == "+" else "sub"
            left = S.BinOp(op, left, self.term(), span=tok.span)
        return left

    def term(self) -> S.Node:
        left = self.deg_expr()
        while self.at(OP, "*") or self.at(OP, "/"):
            tok = self.next()
            op = "mul" if tok.value == "*" else "div"
            left = S.BinOp(op, left, self.deg_expr(), span=tok.span)
        return left

    def deg_expr(self) -> S.Node:
        value = self.unary()
        while self.at_kw("deg"):
            span = self.next().span
            value = S.UnaryOp("deg", value, span=span)
        return value

    def unary(self) -> S.Node:
        if self.at(OP, "-"):
            span = self.next().span
            return S.UnaryOp("neg", self.unary(), span=span)
        return self.postfix()

    def postfix(self) -> S.Node:
        value = self.primary()
        while True:
            if self.at(OP, "."):
                self.next()
                attr = self.peek()
                if attr.kind != NAME:
                    raise ParseError("expected a property name after '.'", attr.span)
                self.next()
                value = S.Attribute(value, attr.value, span=attr.span)
            elif self.at(OP, "["):
                span = self.next().span
                idx = self.expression()
                self.expect(OP, "]")
                value = S.Index(value, idx, span=span)
            elif self.at(OP, "("):
                span = self.next().span
                args, kwargs = self.call_arguments()
                value = S.Call(value, args, kwargs, span=span)
            else:
                return value

    def call_arguments(self):
        args: list = []
        kwargs: list = []
        while not self.at(OP, ")"):
            if self.at(NAME) and self.at(OP, "=", offset=1):
                name = self.next().value
                self.next()
                kwargs.append((name, self.expression()))
            else:
                if kwargs:
                    raise ParseError("positional argument after keyword argument",
                                     self.peek().span)
                args.append(self.expression())
            if not self.at(OP, ")"):
                self.expect(OP, ",")
        self.expect(OP, ")")
        return args, kwargs

    # -- primaries and multi-word prefix operators --------------------------

    def primary(self) -> S.Node:
        tok = self.peek()
        if tok.kind == NUMBER:
            self.next()
            return S.Num(float(tok.value), span=tok.span)
        if tok.kind == STRING:
            self.next()
            return S.Str(tok.value, span=tok.span)
        if tok.kind == OP and tok.value == "(":
            self.next()
            first = self.expression()
            if self.at(OP, ","):
                self.next()
                second = self.expression()
                self.expect(OP, ")")
                return S.Interval(first, second, span=tok.span)
            self.expect(OP, ")")
            return first
        if tok.kind == OP and tok.value == "[":
            self.next()
            items = []
            while not self.at(OP, "]"):
                items.append(self.expression())
                if not self.at(OP, "]"):
                    self.expect(OP, ",")
            self.expect(OP, "]")
            return S.ListLit(items, span=tok.span)
        if tok.kind == OP and tok.value == "{":
            self.next()
            pairs = []
            while not self.at(OP, "}"):
                key = self.expression()
                self.expect(OP, ":")
                pairs.append((key, self.expression()))
                if not self.at(OP, "}"):
                    self.expect(OP, ",")
            self.expect(OP, "}")
            return S.DictLit(pairs, span=tok.span)
        if tok.kind == KW:
            return self.keyword_primary(tok)
        if tok.kind == NAME:
            return self.name_primary(tok)
        raise ParseError(f"unexpected {tok.value!r}", tok.span)

    def keyword_primary(self, tok: Token) -> S.Node:
        word = tok.value
        if word == "True":
            self.next()
            return S.Bool(True, span=tok.span)
        if word == "False":
            self.next()
            return S.Bool(False, span=tok.span)
        if word == "None":
            self.next()
            return S.NoneLit(span=tok.span)
        if word == "ego":
            self.next()
            return S.EgoRef(span=tok.span)
        if word == "self":
            self.next()
            return S.SelfRef(span=tok.span)
        if word == "visible":
            self.next()
            return S.OperatorApp("visible_region", [self.chain()], span=tok.span)
        if word == "follow":
            self.next()
            field = self.chain()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.chain()
            self.expect_kw("for")
            dist = self.chain()
            return S.OperatorApp("follow", [field, base, dist], span=tok.span)
        if word == "distance":
            self.next()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.chain()
            self.expect_kw("to")
            return S.OperatorApp("distance", [base, self.chain()], span=tok.span)
        if word == "angle":
            self.next()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.chain()
            self.expect_kw("to")
            return S.OperatorApp("angle", [base, self.chain()], span=tok.span)
        if word == "relative":
            self.next()
            name = self.peek()
            if name.kind != NAME or name.value != "heading":
                raise ParseError("expected 'heading' after 'relative'", name.span)
            self.next()
            self.expect_kw("of")
            h1 = self.chain()
            h2 = None
            if self.at_kw("from"):
                self.next()
                h2 = self.chain()
            return S.OperatorApp("relative_heading", [h1, h2], span=tok.span)
        if word == "front" or word == "back":
            self.next()
            which = word
            if self.at_kw("left") or self.at_kw("right"):
                which = f"{word}_{self.next().value}"
            self.expect_kw("of")
            return S.OperatorApp(f"corner_{which}", [self.chain()], span=tok.span)
        if word in ("left", "right"):
            self.next()
            self.expect_kw("of")
            return S.OperatorApp(f"corner_{word}", [self.chain()], span=tok.span)
        raise ParseError(f"unexpected keyword {word!r}", tok.span)

    def name_primary(self, tok: Token) -> S.Node:
        name = tok.value
        # "apparent heading of OP [from V]" starts with the NAME 'apparent'
        if name == "apparent" and self.at(NAME, "heading", offset=1):
            self.next()
            self.next()
            self.expect_kw("of")
            target = self.chain()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.chain()
            return S.OperatorApp("apparent_heading", [target, base], span=tok.span)
        nxt = self.peek(1)
        postfix_start = nxt.kind == OP and nxt.value in ("(", "[", ".")
        if name[0].isupper() and not postfix_start:
            self.next()
            specifiers = self.specifier_list()
            return S.ObjectDef(name, specifiers, span=tok.span)
        self.next()
        return S.Name(name, span=tok.span)

    # -- specifiers ----------------------------------------------------------

    def specifier_list(self) -> list:
        specs: list = []
        if self.specifier_starts():
            specs.append(self.specifier())
            while self.at(OP, ",") and self.specifier_starts(offset=1):
                self.next()
                specs.append(self.specifier())
        return specs

    def specifier_starts(self, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == KW and tok.value in SPEC_HEADS

    def spec_arg(self) -> S.Node:
        return self.relative()

    def specifier(self) -> S.SpecNode:
        tok = self.peek()
        word = tok.value
        if word == "with":
            self.next()
            prop = self.expect(NAME)
            return S.WithSpec(prop.value, self.spec_arg(), span=tok.span)
        if word == "at":
            self.next()
            return S.AtSpec(self.spec_arg(), span=tok.span)
        if word == "offset":
            self.next()
            if self.at_kw("by"):
                self.next()
                return S.OffsetBySpec(self.spec_arg(), span=tok.span)
            self.expect_kw("along")
            direction = self.spec_arg()
            self.expect_kw("by")
            return S.OffsetAlongSpec(direction, self.spec_arg(), span=tok.span)
        if word in ("left", "right"):
            self.next()
            self.expect_kw("of")
            target = self.spec_arg()
            amount = None
            if self.at_kw("by"):
                self.next()
                amount = self.spec_arg()
            return S.SideOfSpec(word, target, amount, span=tok.span)
        if word == "ahead":
            self.next()
            self.expect_kw("of")
            target = self.spec_arg()
            amount = None
            if self.at_kw("by"):
                self.next()
                amount = self.spec_arg()
            return S.SideOfSpec("ahead", target, amount, span=tok.span)
        if word == "behind":
            self.next()
            target = self.spec_arg()
            amount = None
            if self.at_kw("by"):
                self.next()
                amount = self.spec_arg()
            return S.SideOfSpec("behind", target, amount, span=tok.span)
        if word == "beyond":
            self.next()
            target = self.spec_arg()
            self.expect_kw("by")
            offset = self.spec_arg()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.spec_arg()
            return S.BeyondSpec(target, offset, base, span=tok.span)
        if word == "visible":
            self.next()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.spec_arg()
            return S.VisibleSpec(base, span=tok.span)
        if word in ("in", "on"):
            self.next()
            return S.InRegionSpec(word, self.spec_arg(), span=tok.span)
        if word == "following":
            self.next()
            field = self.spec_arg()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.spec_arg()
            self.expect_kw("for")
            return S.FollowingSpec(field, base, self.spec_arg(), span=tok.span)
        if word == "facing":
            self.next()
            if self.at_kw("toward"):
                self.next()
                return S.FacingTowardSpec(True, self.spec_arg(), span=tok.span)
            if self.at_kw("away"):
                self.next()
                self.expect_kw("from")
                return S.FacingTowardSpec(False, self.spec_arg(), span=tok.span)
            return S.FacingSpec(self.spec_arg(), span=tok.span)
        if word == "apparently":
            self.next()
            self.expect_kw("facing")
            heading = self.spec_arg()
            base = None
            if self.at_kw("from"):
                self.next()
                base = self.spec_arg()
            return S.ApparentlyFacingSpec(heading, base, span=tok.span)
        raise ParseError(f"expected a specifier, found {word!r}", tok.span)


def parse(source: str) -> S.Program:
    return Parser(tokenize(source)).parse_program()


def parse_expression(source: str) -> S.Node:
    parser = Parser(tokenize(source))
    expr = parser.expression()
    parser.expect(NEWLINE)
    parser.expect(EOF)
    return expr


# --------------------------------------------------------------------------
# Structural equality (ignoring spans) and pretty-printing
# --------------------------------------------------------------------------


def ast_equal(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if dataclasses.is_dataclass(a):
        for f in dataclasses.fields(a):
            if f.name == "span":
                continue
            if not ast_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    return a == b
