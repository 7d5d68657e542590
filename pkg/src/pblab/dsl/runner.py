"""Execute a parsed document against the primitive modules and build a report."""
from __future__ import annotations

import json
import time

from .. import linalg as la
from ..bundle import BundleError, PseudoBundle, TotalGenerator, dual_bundle, line_cells
from ..diffvs import DiffVSError, Functional, GeneratedVS, GeneratorPlot
from ..glue import (
    BaseGluing,
    BundleGluing,
    GlueError,
    GluedBundle,
    check_dual_necessary,
    direct_sum_glue_commutativity_check,
    dual_transition,
    switch_map,
    tensor_glue_commutativity_check,
)
from ..metric import (
    BundleMetric,
    MetricError,
    compat_check,
    dual_metric,
    existence_check,
    glue_metrics,
    glue_metrics_commutative,
    is_pseudometric,
    metrics_coincide,
)
from ..symexpr import SymExprError
from .nodes import BundleDecl, Command, Document, GlueDecl, MetricDecl, PerCell, SectionDecl, SpaceDecl
from .printer import print_statement


class SemanticError(Exception):
    pass


SEMANTIC_ERRORS = (SemanticError, SymExprError, DiffVSError, BundleError, GlueError, MetricError, ArithmeticError, ValueError, KeyError)


def _strs(M) -> list:
    return [[str(a) for a in row] for row in M]


def _basis(phis) -> list:
    return [[str(a) for a in phi.coeffs] for phi in phis]


class Runner:
    def __init__(self, seed: int = 0, timing: bool = False):
        self.seed = seed
        self.timing = timing
        self.objects: dict = {}
        self.decls: dict = {}

    # -- declarations -------------------------------------------------------
    def declare(self, s) -> None:
        self.decls[s.name] = s
        if isinstance(s, SpaceDecl):
            gens = [GeneratorPlot(p.vars, p.exprs) for p in s.gens]
            self.objects[s.name] = GeneratedVS(s.dim, gens, s.name)
        elif isinstance(s, BundleDecl):
            cells = s.cells if s.cells is not None else line_cells(s.base)
            gens = [TotalGenerator(p.base, p.vars, p.exprs, f"g{i + 1}") for i, p in enumerate(s.gens)]
            self.objects[s.name] = PseudoBundle(s.base, cells, s.fibre, gens, s.name)
        elif isinstance(s, GlueDecl):
            B1, B2 = self.objects[s.left], self.objects[s.right]
            base = BaseGluing(B1.var, B2.var, s.on, s.f, s.inv)
            lift = dict(s.lift.items) if isinstance(s.lift, PerCell) else s.lift
            G = BundleGluing(base, lift)
            self.objects[s.name] = GluedBundle(B1, B2, G)
        elif isinstance(s, MetricDecl):
            B = self.objects[s.bundle]
            if isinstance(s.value, PerCell):
                mats = dict(s.value.items)
            else:
                mats = {c: s.value for c in B.cells}
            sos = None
            if s.sos is not None:
                terms = [(c, Functional(v)) for c, v in s.sos]
                sos = {c: terms for c in mats}
            self.objects[s.name] = BundleMetric(mats, sos, s.name)
        elif isinstance(s, SectionDecl):
            self.objects[s.name] = dict(s.value.items) if isinstance(s.value, PerCell) else s.value

    # -- commands -----------------------------------------------------------
    def execute(self, c: Command) -> dict:
        handler = getattr(self, "cmd_" + c.name.replace("-", "_"))
        return handler(*c.args)

    def cmd_dual(self, name: str) -> dict:
        obj = self.objects[name]
        if isinstance(obj, GeneratedVS):
            return {"kind": "space", "dual_dim": obj.dual_dim(), "dual_basis": _basis(obj.dual_basis())}
        view = dual_bundle(obj)
        dims = view.dims_by_key()
        cells = {c.key(): {"dual_dim": len(b), "dual_basis": _basis(b)} for c, b in view.bases.items()}
        try:
            model = view.as_bundle().fibre_dim
        except BundleError:
            model = None
        return {"kind": "bundle", "cells": cells, "dual_dims": dims, "standard_model_dim": model}

    def cmd_profile(self, name: str) -> dict:
        obj = self.objects[name]
        if isinstance(obj, GluedBundle):
            fibre = {gc.key(): obj.fibre_dim(gc) for gc in obj.cells}
        else:
            fibre = {c.key(): obj.fibre_dim for c in obj.cells}
        return {"dual_dims": obj.profile_by_key(), "fibre_dims": fibre}

    def cmd_glue(self, name: str) -> dict:
        GB = self.objects[name]
        res = GB.resolution
        invertible = GB.gluing.base.invertible
        transitions = {}
        for c in res.y_cells:
            M = dual_transition(GB, c) if invertible else None
            transitions[c.key()] = _strs(M) if M is not None else None
        return {
            "cells": GB.space.keys(),
            "y_cells": [c.key() for c in res.y_cells],
            "image": {c.key(): res.ymap[c].key() for c in res.y_cells},
            "lifts": {c.key(): _strs(L) for c, L in GB.lifts.items()},
            "dual_dims": GB.profile_by_key(),
            "switch_involutive": switch_map(GB).involutive(),
            "dual_necessary": check_dual_necessary(GB) if invertible else None,
            "dual_transitions": transitions,
        }

    def _bundle_of(self, metric_name: str):
        return self.objects[self.decls[metric_name].bundle]

    def cmd_check_metric(self, name: str) -> dict:
        g = self.objects[name]
        v = is_pseudometric(self._bundle_of(name), g, self.seed)
        return {"bundle": self.decls[name].bundle, "verdict": v.as_dict()}

    def cmd_induce_metric(self, gname: str, m1: str, m2: str) -> dict:
        decl = self.decls[gname]
        if self.decls[m1].bundle != decl.left or self.decls[m2].bundle != decl.right:
            raise SemanticError(f"metrics must live on {decl.left} and {decl.right}, in that order")
        GB, g1, g2 = self.objects[gname], self.objects[m1], self.objects[m2]
        out = {"compatible": compat_check(g1, g2, GB), "dual_necessary": check_dual_necessary(GB)}
        if not out["compatible"]:
            out.update(glued=None, commutative=None, coincide=None)
            return out
        ga = glue_metrics(g1, g2, GB)
        out["glued"] = {"metric": ga.as_json(), "verdict": is_pseudometric(GB, ga, self.seed).as_dict()}
        if out["dual_necessary"]:
            gb = glue_metrics_commutative(g1, g2, GB)
            out["commutative"] = {"metric": gb.as_json(), "verdict": is_pseudometric(GB, gb, self.seed).as_dict()}
            out["coincide"] = metrics_coincide(ga, gb)
        else:
            out.update(commutative=None, coincide=None)
        return out

    def cmd_exists(self, name: str) -> dict:
        B = self.objects[name]
        ex = existence_check(B, self.seed)
        out = {"status": ex.status, "metric": None, "certificate": None, "verdict": None}
        if ex.metric is not None:
            out["metric"] = ex.metric.as_json()
        if ex.certificate is not None:
            out["certificate"] = ex.certificate.as_dict()
            out["certificate"]["replay"] = ex.certificate.replay(B)
        if ex.verdict is not None:
            out["verdict"] = ex.verdict.as_dict()
        return out

    def cmd_dual_metric(self, name: str) -> dict:
        B, g = self._bundle_of(name), self.objects[name]
        if not isinstance(B, PseudoBundle):
            raise SemanticError("dual-metric needs a metric on a declared bundle")
        model, gs = dual_metric(B, g, self.seed)
        out = {"dual_fibre_dim": model.fibre_dim, "metric": gs.as_json(), "round_trip": None}
        if all(B.fibre_space(c).dual_dim() == B.fibre_dim for c in B.cells):
            _, back = dual_metric(model, gs, self.seed)
            out["round_trip"] = all(
                la.mat_equal(back.lookup(c), g.lookup(c), la.ExprField(c.ctx())) for c in B.cells
            )
        return out

    def cmd_commute_tensor(self, ga: str, gb: str) -> dict:
        da, db = self.decls[ga], self.decls[gb]
        A, Bp = self.objects[ga], self.objects[gb]
        args = (
            self.objects[da.left],
            self.objects[db.left],
            self.objects[da.right],
            self.objects[db.right],
            A.gluing,
            Bp.gluing,
        )

        def clean(r):
            return {k: r[k] for k in ("certified", "cells", "lifts")}

        return {
            "tensor": clean(tensor_glue_commutativity_check(*args)),
            "direct_sum": clean(direct_sum_glue_commutativity_check(*args)),
        }

    def cmd_report(self) -> dict:
        decls = []
        for name, s in self.decls.items():
            obj = self.objects[name]
            item = {"name": name, "kind": type(s).__name__.replace("Decl", "").lower(), "source": print_statement(s)}
            if isinstance(obj, GeneratedVS):
                item["dual_dim"] = obj.dual_dim()
            elif isinstance(obj, (PseudoBundle, GluedBundle)):
                item["dual_dims"] = obj.profile_by_key()
            decls.append(item)
        return {"declarations": decls}


def run_document(doc: Document, seed: int = 0, timing: bool = False, source: str | None = None) -> tuple:
    """Execute ``doc``; returns ``(report, exit_code)``."""
    runner = Runner(seed, timing)
    report = {"seed": seed, "results": []}
    if source is not None:
        report["source"] = source
    for s in doc.statements:
        stmt = print_statement(s)
        t0 = time.perf_counter()
        try:
            if isinstance(s, Command):
                result = runner.execute(s)
            else:
                runner.declare(s)
                continue
        except SEMANTIC_ERRORS as e:
            report["error"] = {
                "type": type(e).__name__,
                "message": str(e).strip("'\""),
                "line": s.pos.line,
                "statement": stmt,
            }
            return report, 2
        entry = {"command": stmt, "line": s.pos.line, "result": result}
        if timing:
            entry["seconds"] = round(time.perf_counter() - t0, 4)
        report["results"].append(entry)
    return report, 0


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"
