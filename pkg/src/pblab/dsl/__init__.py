"""Description language: parsing, printing, running and the shipped catalog."""
from .parser import ParseError, parse, parse_expr
from .printer import print_document
from .runner import dumps, run_document


def round_trip(doc):
    return parse(print_document(doc))


__all__ = ["ParseError", "parse", "parse_expr", "print_document", "round_trip", "run_document", "dumps"]
