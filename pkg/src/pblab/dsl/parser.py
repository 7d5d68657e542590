"""Recursive-descent parser for description documents.

One statement per line; brackets may span lines. ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..bundle import Cell, check_cells
from ..symexpr import RatAbsExpr, SubstitutionOutOfClass, abs_of
from .nodes import (
    COMMANDS,
    BundleDecl,
    Command,
    Document,
    GlueDecl,
    MetricDecl,
    PerCell,
    Plot,
    Pos,
    SectionDecl,
    SpaceDecl,
)

VAR_RE = re.compile(r"[a-z][a-z0-9]*\Z")
NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(Exception):
    def __init__(self, message: str, pos: Pos | None = None, kind: str = "ParseError"):
        self.message = message
        self.pos = pos
        self.kind = kind
        super().__init__(f"{pos}: {message}" if pos else message)


@dataclass(frozen=True)
class Tok:
    kind: str  # NUM, ID, SYM, NL, EOF
    value: str
    pos: Pos


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>->|[()\[\]{},;:+\-*/^=~])"
)
_KEYWORD_RE = re.compile(r"[a-z]+(?:-[a-z]+)+")


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    depth = 0
    at_start = True
    while i < len(text):
        if at_start:
            m = _KEYWORD_RE.match(text, i)
            if m and m.group(0).split("-")[0] in ("check", "induce", "dual", "commute"):
                toks.append(Tok("ID", m.group(0), Pos(line, col)))
                col += m.end() - i
                i = m.end()
                at_start = False
                continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", Pos(line, col))
        kind = m.lastgroup
        val = m.group(0)
        pos = Pos(line, col)
        if kind == "nl":
            if depth == 0 and toks and toks[-1].kind != "NL":
                toks.append(Tok("NL", "\n", pos))
            line += 1
            col = 1
            i = m.end()
            at_start = depth == 0
            continue
        if kind in ("ws", "comment"):
            pass
        elif kind == "num":
            toks.append(Tok("NUM", val, pos))
            at_start = False
        elif kind == "id":
            toks.append(Tok("ID", val, pos))
            at_start = False
        else:
            if val in "([{":
                depth += 1
            elif val in ")]}":
                depth -= 1
                if depth < 0:
                    raise ParseError(f"unbalanced {val!r}", pos)
            toks.append(Tok("SYM", val, pos))
            at_start = False
        col += m.end() - i
        i = m.end()
    if depth:
        raise ParseError("unclosed bracket at end of input", Pos(line, col))
    if toks and toks[-1].kind != "NL":
        toks.append(Tok("NL", "\n", Pos(line, col)))
    toks.append(Tok("EOF", "", Pos(line, col)))
    return toks


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.symbols: dict = {}

    # -- token helpers ----------------------------------------------------
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def advance(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, value: str) -> bool:
        t = self.tok
        return t.kind in ("SYM", "ID") and t.value == value

    def expect(self, value: str) -> Tok:
        if not self.at(value):
            raise ParseError(f"expected {value!r}, found {self.tok.value or 'end of input'!r}", self.tok.pos)
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Tok:
        if self.tok.kind != kind:
            raise ParseError(f"expected {what}, found {self.tok.value or 'end of input'!r}", self.tok.pos)
        return self.advance()

    def name(self) -> str:
        t = self.expect_kind("ID", "a name")
        if not NAME_RE.match(t.value):
            raise ParseError(f"bad name {t.value!r}", t.pos)
        return t.value

    def var(self) -> str:
        t = self.expect_kind("ID", "a variable")
        if not VAR_RE.match(t.value) or t.value in ("abs", "inf"):
            raise ParseError(f"bad variable name {t.value!r}", t.pos)
        return t.value

    def integer(self) -> int:
        return int(self.expect_kind("NUM", "an integer").value)

    def end_statement(self):
        if self.tok.kind == "EOF":
            return
        self.expect_kind("NL", "end of line")

    def comma_list(self, open_: str, close: str, item):
        self.expect(open_)
        out = []
        if not self.at(close):
            out.append(item())
            while self.at(","):
                self.advance()
                out.append(item())
        self.expect(close)
        return tuple(out)

    # -- references ---------------------------------------------------------
    def declare(self, name: str, kind: str, node, pos: Pos):
        if name in self.symbols:
            raise ParseError(f"duplicate name {name!r}", pos)
        self.symbols[name] = (kind, node)

    def ref(self, kinds: str, pos: Pos):
        t = self.tok
        n = self.name()
        if n not in self.symbols:
            raise ParseError(f"unresolved reference {n!r}", t.pos)
        kind, node = self.symbols[n]
        if kind not in kinds.split("|"):
            raise ParseError(f"{n!r} is a {kind}, expected {kinds.replace('|', ' or ')}", t.pos)
        return n, node

    # -- expressions --------------------------------------------------------
    def expr(self, allowed) -> RatAbsExpr:
        e = self.term(allowed)
        while self.at("+") or self.at("-"):
            op = self.advance().value
            r = self.term(allowed)
            e = e + r if op == "+" else e - r
        return e

    def term(self, allowed) -> RatAbsExpr:
        e = self.unary(allowed)
        while self.at("*") or self.at("/"):
            t = self.advance()
            r = self.unary(allowed)
            if t.value == "*":
                e = e * r
            else:
                if r.is_zero():
                    raise ParseError("division by zero", t.pos)
                e = e / r
        return e

    def unary(self, allowed) -> RatAbsExpr:
        if self.at("-"):
            self.advance()
            return -self.unary(allowed)
        return self.power(allowed)

    def power(self, allowed) -> RatAbsExpr:
        base = self.atom(allowed)
        if self.at("^"):
            self.advance()
            base = base ** self.integer()
        return base

    def atom(self, allowed) -> RatAbsExpr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return RatAbsExpr(int(t.value))
        if self.at("("):
            self.advance()
            e = self.expr(allowed)
            self.expect(")")
            return e
        if self.at("abs"):
            self.advance()
            self.expect("(")
            inner_pos = self.tok.pos
            e = self.expr(allowed)
            self.expect(")")
            return self.abs_value(e, inner_pos)
        v = self.var()
        if allowed is not None and v not in allowed:
            raise ParseError(f"unknown variable {v!r} (allowed: {', '.join(sorted(allowed)) or 'none'})", t.pos)
        return RatAbsExpr.var(v)

    def abs_value(self, e: RatAbsExpr, pos: Pos) -> RatAbsExpr:
        try:
            if e.is_polynomial():
                return RatAbsExpr(abs_of(e.num))
            if e.den.is_constant():
                return RatAbsExpr(abs_of(e.num)) / RatAbsExpr(abs(e.den.constant_value()))
            return RatAbsExpr(abs_of(e.num), abs_of(e.den))
        except SubstitutionOutOfClass as err:
            raise ParseError(f"class error: {err}", pos, "SubstitutionOutOfClass") from None

    # -- literals -----------------------------------------------------------
    def rational(self) -> Fraction | None:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        if self.at("inf"):
            self.advance()
            return ("-inf" if neg else "inf")
        n = Fraction(self.integer())
        if self.at("/"):
            self.advance()
            d = self.integer()
            if d == 0:
                raise ParseError("zero denominator", self.tok.pos)
            n /= d
        return -n if neg else n

    def cell(self, chart: str) -> Cell:
        t = self.tok
        if self.at("{"):
            self.advance()
            q = self.rational()
            if isinstance(q, str):
                raise ParseError("a point cell needs a finite value", t.pos)
            self.expect("}")
            return Cell.point(chart, q)
        self.expect("(")
        lo = self.rational()
        self.expect(",")
        hi = self.rational()
        self.expect(")")
        if lo == "inf" or hi == "-inf":
            raise ParseError("interval bounds out of order", t.pos)
        lo = None if lo == "-inf" else lo
        hi = None if hi == "inf" else hi
        try:
            return Cell.interval(chart, lo, hi)
        except ValueError as e:
            raise ParseError(str(e), t.pos) from None

    def cells(self, chart: str) -> tuple:
        t = self.tok
        cells = self.comma_list("[", "]", lambda: self.cell(chart))
        try:
            check_cells(cells)
        except ValueError as e:
            raise ParseError(str(e), t.pos) from None
        return cells

    def matrix(self, allowed) -> tuple:
        return self.comma_list("[", "]", lambda: self.vector(allowed))

    def vector(self, allowed) -> tuple:
        return self.comma_list("[", "]", lambda: self.expr(allowed))

    def per_cell(self, chart: str, value) -> PerCell:
        def item():
            c = self.cell(chart)
            self.expect(":")
            return (c, value())

        return PerCell(self.comma_list("[", "]", item))

    def matrix_or_per_cell(self, chart: str, allowed):
        """``[[..], ..]`` is a matrix; ``[cell: [[..]], ..]`` is per cell."""
        nxt = self.toks[self.i + 1]
        if nxt.kind == "SYM" and nxt.value in ("(", "{"):
            return self.per_cell(chart, lambda: self.matrix(allowed))
        return self.matrix(allowed)

    # -- statements ---------------------------------------------------------
    def document(self) -> Document:
        stmts = []
        while self.tok.kind != "EOF":
            if self.tok.kind == "NL":
                self.advance()
                continue
            stmts.append(self.statement())
        return Document(tuple(stmts))

    def statement(self):
        t = self.tok
        if t.kind != "ID":
            raise ParseError(f"expected a statement, found {t.value!r}", t.pos)
        kw = t.value
        if kw == "space":
            return self.space()
        if kw == "bundle":
            return self.bundle()
        if kw == "glue" and self.toks[self.i + 2].value == "=":
            return self.glue()
        if kw == "metric":
            return self.metric()
        if kw == "section":
            return self.section()
        if kw in COMMANDS:
            return self.command()
        raise ParseError(f"unknown statement {kw!r}", t.pos)

    def plot(self, with_base: bool) -> Plot:
        t = self.tok
        self.expect("(")
        base = None
        vars_ = []
        if with_base:
            base = self.var()
            self.expect(";")
        if not self.at(")"):
            vars_.append(self.var())
            while self.at(","):
                self.advance()
                vars_.append(self.var())
        self.expect(")")
        allvars = set(vars_) | ({base} if base else set())
        if len(allvars) != len(vars_) + (1 if base else 0):
            raise ParseError("repeated domain variable", t.pos)
        self.expect("->")
        exprs = self.comma_list("(", ")", lambda: self.expr(allvars))
        return Plot(base, tuple(vars_), exprs)

    def generators(self, with_base: bool, n: int, what: str) -> tuple:
        def item():
            t = self.tok
            g = self.plot(with_base)
            if len(g.exprs) != n:
                raise ParseError(f"generator has {len(g.exprs)} components, {what} has dimension {n}", t.pos)
            return g

        return self.comma_list("[", "]", item)

    def space(self) -> SpaceDecl:
        pos = self.advance().pos
        npos, name = self.tok.pos, self.name()
        self.expect("dim")
        dim = self.integer()
        gens = ()
        if self.at("gens"):
            self.advance()
            gens = self.generators(False, dim, f"space {name!r}")
        self.end_statement()
        node = SpaceDecl(name, dim, gens, pos)
        self.declare(name, "space", node, npos)
        return node

    def bundle(self) -> BundleDecl:
        pos = self.advance().pos
        npos, name = self.tok.pos, self.name()
        self.expect("base")
        base = self.var()
        cells = None
        if self.at("cells"):
            self.advance()
            cells = self.cells(base)
        self.expect("fibre")
        fibre = self.integer()
        gens = ()
        if self.at("gens"):
            self.advance()
            gens = self.generators(True, fibre, f"the fibre of {name!r}")
        self.end_statement()
        node = BundleDecl(name, base, cells, fibre, gens, pos)
        self.declare(name, "bundle", node, npos)
        return node

    def glue(self) -> GlueDecl:
        pos = self.advance().pos
        npos, name = self.tok.pos, self.name()
        self.expect("=")
        left, lnode = self.ref("bundle", pos)
        self.expect("~")
        right, rnode = self.ref("bundle", pos)
        if lnode.base == rnode.base:
            raise ParseError("the two base charts need distinct variable names", pos)
        self.expect("on")
        on = self.cells(lnode.base)
        self.expect("via")
        self.expect("f")
        self.expect("=")
        f = self.expr({lnode.base})
        inv = None
        if self.at("inv"):
            self.advance()
            inv = self.expr({rnode.base})
        self.expect("lift")
        lift = self.matrix_or_per_cell(lnode.base, {lnode.base})
        mats = [m for _, m in lift.items] if isinstance(lift, PerCell) else [lift]
        for m in mats:
            if len(m) != rnode.fibre or any(len(r) != lnode.fibre for r in m):
                raise ParseError(f"lift must be {rnode.fibre}x{lnode.fibre}", pos)
        self.end_statement()
        node = GlueDecl(name, left, right, on, f, inv, lift, pos)
        self.declare(name, "glue", node, npos)
        return node

    def metric(self) -> MetricDecl:
        pos = self.advance().pos
        npos, name = self.tok.pos, self.name()
        self.expect("on")
        bname, bnode = self.ref("bundle", pos)
        allowed = {bnode.base}
        if self.at("="):
            self.advance()
            value = self.matrix(allowed)
        else:
            value = self.per_cell(bnode.base, lambda: self.matrix(allowed))
        mats = [m for _, m in value.items] if isinstance(value, PerCell) else [value]
        n = bnode.fibre
        for m in mats:
            if len(m) != n or any(len(r) != n for r in m):
                raise ParseError(f"metric on {bname!r} must be {n}x{n}", pos)
        sos = None
        if self.at("sos"):
            self.advance()

            def term():
                self.expect("(")
                c = self.expr(allowed)
                self.expect(",")
                v = self.vector(allowed)
                self.expect(")")
                if len(v) != n:
                    raise ParseError(f"sos functional must have {n} entries", pos)
                return (c, v)

            sos = self.comma_list("[", "]", term)
        self.end_statement()
        node = MetricDecl(name, bname, value, sos, pos)
        self.declare(name, "metric", node, npos)
        return node

    def section(self) -> SectionDecl:
        pos = self.advance().pos
        npos, name = self.tok.pos, self.name()
        self.expect("on")
        bname, bnode = self.ref("bundle", pos)
        allowed = {bnode.base}
        if self.at("="):
            self.advance()
            value = self.vector(allowed)
        else:
            value = self.per_cell(bnode.base, lambda: self.vector(allowed))
        vecs = [v for _, v in value.items] if isinstance(value, PerCell) else [value]
        if any(len(v) != bnode.fibre for v in vecs):
            raise ParseError(f"section of {bname!r} must have {bnode.fibre} entries", pos)
        self.end_statement()
        node = SectionDecl(name, bname, value, pos)
        self.declare(name, "section", node, npos)
        return node

    def command(self) -> Command:
        t = self.advance()
        kinds = COMMANDS[t.value]
        args = []
        for k in kinds:
            n, _ = self.ref(k, t.pos)
            args.append(n)
        self.end_statement()
        return Command(t.value, tuple(args), t.pos)


def parse(text: str) -> Document:
    return Parser(text).document()


def parse_expr(text: str, variables=None) -> RatAbsExpr:
    """A single expression; ``variables`` restricts the allowed names."""
    p = Parser(text)
    e = p.expr(set(variables) if variables is not None else None)
    p.end_statement()
    if p.tok.kind != "EOF":
        raise ParseError(f"trailing input {p.tok.value!r}", p.tok.pos)
    return e
