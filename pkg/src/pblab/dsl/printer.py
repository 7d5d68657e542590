"""Canonical printing of documents; ``parse(print_document(d)) == d``."""
from __future__ import annotations

from .nodes import BundleDecl, Command, Document, GlueDecl, MetricDecl, PerCell, Plot, SectionDecl, SpaceDecl


def print_cell(c) -> str:
    return c.key()


def print_vector(v) -> str:
    return "[" + ", ".join(str(e) for e in v) + "]"


def print_matrix(m) -> str:
    return "[" + ", ".join(print_vector(r) for r in m) + "]"


def print_per_cell(pc: PerCell, value) -> str:
    return "[" + ", ".join(f"{print_cell(c)}: {value(v)}" for c, v in pc.items) + "]"


def print_plot(p: Plot) -> str:
    dom = ", ".join(p.vars)
    if p.base is not None:
        dom = f"{p.base}; {dom}" if dom else f"{p.base};"
    return f"({dom}) -> (" + ", ".join(str(e) for e in p.exprs) + ")"


def _gens(gens) -> str:
    return " gens [" + ", ".join(print_plot(g) for g in gens) + "]" if gens else ""


def print_statement(s) -> str:
    if isinstance(s, SpaceDecl):
        return f"space {s.name} dim {s.dim}{_gens(s.gens)}"
    if isinstance(s, BundleDecl):
        cells = ""
        if s.cells is not None:
            cells = " cells [" + ", ".join(print_cell(c) for c in s.cells) + "]"
        return f"bundle {s.name} base {s.base}{cells} fibre {s.fibre}{_gens(s.gens)}"
    if isinstance(s, GlueDecl):
        on = "[" + ", ".join(print_cell(c) for c in s.on) + "]"
        inv = f" inv {s.inv}" if s.inv is not None else ""
        lift = print_per_cell(s.lift, print_matrix) if isinstance(s.lift, PerCell) else print_matrix(s.lift)
        return f"glue {s.name} = {s.left} ~ {s.right} on {on} via f = {s.f}{inv} lift {lift}"
    if isinstance(s, MetricDecl):
        if isinstance(s.value, PerCell):
            value = " " + print_per_cell(s.value, print_matrix)
        else:
            value = " = " + print_matrix(s.value)
        sos = ""
        if s.sos is not None:
            sos = " sos [" + ", ".join(f"({c}, {print_vector(v)})" for c, v in s.sos) + "]"
        return f"metric {s.name} on {s.bundle}{value}{sos}"
    if isinstance(s, SectionDecl):
        if isinstance(s.value, PerCell):
            value = " " + print_per_cell(s.value, print_vector)
        else:
            value = " = " + print_vector(s.value)
        return f"section {s.name} on {s.bundle}{value}"
    if isinstance(s, Command):
        return " ".join((s.name,) + tuple(s.args))
    raise TypeError(f"cannot print {type(s).__name__}")


def print_document(d: Document) -> str:
    return "".join(print_statement(s) + "\n" for s in d.statements)
