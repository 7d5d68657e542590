"""Syntax tree of a description document.

Positions are carried for error messages but ignored by equality, so a
document and its re-parsed canonical print compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


NOPOS = Pos(0, 0)


@dataclass(frozen=True)
class Plot:
    """``(vars) -> (exprs)`` for spaces; ``(base; vars) -> (exprs)`` for bundles."""

    base: str | None
    vars: tuple
    exprs: tuple


@dataclass(frozen=True)
class SpaceDecl:
    name: str
    dim: int
    gens: tuple = ()
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class BundleDecl:
    name: str
    base: str
    cells: tuple | None  # None: the whole line
    fibre: int
    gens: tuple = ()
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class PerCell:
    """``[cell: value, ...]``"""

    items: tuple  # ((Cell, value), ...)


@dataclass(frozen=True)
class GlueDecl:
    name: str
    left: str
    right: str
    on: tuple  # source cells
    f: object
    inv: object | None
    lift: object  # matrix (tuple of tuples) or PerCell of matrices
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class MetricDecl:
    name: str
    bundle: str
    value: object  # matrix or PerCell of matrices
    sos: tuple | None = None  # ((coeff, (entries...)), ...)
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class SectionDecl:
    name: str
    bundle: str
    value: object  # vector (tuple) or PerCell of vectors
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Command:
    name: str
    args: tuple = ()
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Document:
    statements: tuple

    def declarations(self) -> dict:
        return {s.name: s for s in self.statements if not isinstance(s, Command)}

    def commands(self) -> list:
        return [s for s in self.statements if isinstance(s, Command)]


COMMANDS = {
    "dual": ("space|bundle",),
    "profile": ("bundle|glue",),
    "glue": ("glue",),
    "check-metric": ("metric",),
    "induce-metric": ("glue", "metric", "metric"),
    "exists": ("bundle",),
    "dual-metric": ("metric",),
    "commute-tensor": ("glue", "glue"),
    "report": (),
}
