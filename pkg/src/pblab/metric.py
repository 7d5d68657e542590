"""Pseudo-metrics on pseudo-bundles and on glued pseudo-bundles.

A metric is a symmetric matrix of rational expressions in the base variable,
one per cell. Smoothness is tested on probe plots (total generators and the
constant-fibre plots ``u -> (u, e_k)``). Along each chart the cellwise
evaluations must merge into one smooth expression. Rational functions are
analytic, so two pieces that join smoothly at a point are the same rational
function; merging is therefore exact equality of the interval pieces, plus
agreement of the point values.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg as la
from .bundle import Cell, PseudoBundle, _cell_within, dual_bundle, order_cells
from .diffvs import Functional, ShapeMismatch, sos_matrix
from .glue import (
    GluedBundle,
    GluedCell,
    _subst,
    check_dual_necessary,
    dual_gluing,
    switch_map,
)
from .symexpr import (
    DivisionByZero,
    RatAbsExpr,
    eval_at,
    is_smooth,
    normalize,
    rational_roots,
    substitute_rat,
)

PSD_SAMPLES = 50


class MetricError(Exception):
    pass


class AsymmetricMetric(MetricError):
    pass


class IncompatibleMetrics(MetricError):
    pass


class NecessaryConditionFails(MetricError):
    pass


class MetricRequired(MetricError):
    pass


class NotLocallyTrivial(MetricError):
    pass


def _cell_of(key):
    return key.cell if isinstance(key, GluedCell) else key


def _norm_matrix(M, cell: Cell):
    if cell.is_point:
        return [[_subst(a, cell.chart, cell.q) for a in row] for row in M]
    return [[RatAbsExpr.coerce(a).normalized(cell.ctx()) for a in row] for row in M]


class BundleMetric:
    """Cellwise symmetric matrices; keys are cells (or glued cells)."""

    def __init__(self, matrices: dict, sos: dict | None = None, label: str = ""):
        self.matrices = {}
        for k, M in matrices.items():
            M = [[RatAbsExpr.coerce(a) for a in row] for row in M]
            n = len(M)
            if any(len(row) != n for row in M):
                raise ShapeMismatch(f"metric matrix on {k} is not square")
            if not la.is_symmetric(M, la.ExprField(_cell_of(k).ctx())):
                raise AsymmetricMetric(f"metric matrix on {k} is not symmetric")
            self.matrices[k] = M
        self.sos = sos or {}
        self.label = label

    @classmethod
    def uniform(cls, cells, M, label: str = "") -> "BundleMetric":
        return cls({c: M for c in cells}, label=label)

    def keys(self) -> list:
        return list(self.matrices)

    def lookup(self, key):
        """Matrix on ``key`` or on the declared cell containing it, normalized there."""
        if key in self.matrices:
            return _norm_matrix(self.matrices[key], _cell_of(key))
        cell = _cell_of(key)
        region = key.region if isinstance(key, GluedCell) else None
        for k, M in self.matrices.items():
            kc = _cell_of(k)
            kr = k.region if isinstance(k, GluedCell) else None
            if kr == region and kc.chart == cell.chart and _cell_within(cell, kc):
                return _norm_matrix(M, cell)
        raise ShapeMismatch(f"metric has no matrix on {key}")

    def sos_on(self, key):
        if key in self.sos:
            return self.sos[key]
        cell = _cell_of(key)
        for k, terms in self.sos.items():
            kc = _cell_of(k)
            if type(k) is type(key) and kc.chart == cell.chart and _cell_within(cell, kc):
                if isinstance(k, GluedCell) and k.region != key.region:
                    continue
                return terms
        return None

    def as_json(self) -> dict:
        return {
            (k.key() if hasattr(k, "key") else str(k)): [[str(a) for a in row] for row in M]
            for k, M in self.matrices.items()
        }


@dataclass
class MetricVerdict:
    symmetric: bool
    smooth: bool
    psd: str  # "exact" | "probabilistic" | "fails"
    rank_ok: dict
    smooth_witness: dict | None = None
    psd_witness: dict | None = None
    psd_samples: int = 0
    ranks: dict = field(default_factory=dict)
    smooth_mode: str = "certified-on-probes"

    @property
    def passed(self) -> bool:
        return self.symmetric and self.smooth and self.psd != "fails" and all(self.rank_ok.values())

    def as_dict(self) -> dict:
        out = {
            "symmetric": self.symmetric,
            "smooth": self.smooth,
            "smooth_mode": self.smooth_mode,
            "psd": self.psd,
            "rank_ok": dict(sorted(self.rank_ok.items())),
            "ranks": dict(sorted(self.ranks.items())),
            "pass": self.passed,
        }
        if self.psd == "probabilistic":
            out["psd_samples"] = self.psd_samples
        if self.smooth_witness:
            out["smooth_witness"] = self.smooth_witness
        if self.psd_witness:
            out["psd_witness"] = self.psd_witness
        return out


# ---------------------------------------------------------------------------
# probe runs


@dataclass
class Run:
    """One chart of a bundle seen by probes: the cellwise metric pulled to probe coordinates."""

    var: str
    pieces: list  # [(cell, matrix)]
    probes: list  # [(fibre_vars, components, name)]


def _bundle_keys(B):
    return list(B.cells)


def metric_runs(B, g: BundleMetric) -> tuple:
    """Runs along each chart plus mixed cellwise checks ``(cell, M, P, Q)``."""
    if isinstance(B, PseudoBundle):
        return [Run(B.var, [(c, g.lookup(c)) for c in B.cells], B.probes())], []
    GB: GluedBundle = B
    res = GB.resolution
    tgt = Run(GB.target_var, [(t, g.lookup(GluedCell("i2", t))) for t in res.target_cells], GB.B2.probes())
    pieces = []
    mixed = []
    for c in res.source_cells:
        if c not in res.ymap:
            pieces.append((c, g.lookup(GluedCell("i1", c))))
            continue
        t = res.ymap[c]
        G2 = g.lookup(GluedCell("i2", t))
        G2x = _pull_to_source(GB, G2, c)
        L = GB.lifts[c]
        F = la.ExprField(c.ctx())
        pieces.append((c, la.matmul(la.matmul(la.transpose(L), G2x, F), L, F)))
        if not c.is_point:
            # a source probe and a target probe over the same glued point
            LtG = la.matmul(la.transpose(L), G2x, F)
            for P in GB.B1.probes():
                for Q in GB.B2.probes():
                    Qx = _pull_probe(GB, Q, c)
                    mixed.append((c, LtG, P, Qx))
    src = Run(GB.source_var, pieces, GB.B1.probes())
    return [src, tgt], mixed


def _pull_to_source(GB: GluedBundle, M, c: Cell):
    t = GB.resolution.ymap[c]
    if c.is_point:
        return [[_subst(a, GB.target_var, t.q) for a in row] for row in M]
    f = GB.resolution.f_expr(c)
    return [[_subst(a, GB.target_var, f).normalized(c.ctx()) for a in row] for row in M]


def _pull_probe(GB: GluedBundle, Q, c: Cell):
    vars_, comps, name = Q
    f = GB.resolution.f_expr(c)
    return vars_, tuple(_subst(a, GB.target_var, f) for a in comps), name


def _pair(M, P, Q, base_var: str):
    """Evaluation ``P^T M Q`` with the probes' fibre variables renamed apart."""
    pv, pc, _ = P
    qv, qc, _ = Q
    taken = {base_var} | set(pv)
    mapping = {}
    for v in qv:
        if v in taken:
            i = 2
            while f"{v}{i}" in taken:
                i += 1
            mapping[v] = f"{v}{i}"
            taken.add(mapping[v])
        else:
            taken.add(v)
    if mapping:
        sub = {v: RatAbsExpr.var(w) for v, w in mapping.items()}
        qc = tuple(substitute_rat(a, sub) for a in qc)
        qv = tuple(mapping.get(v, v) for v in qv)
    acc = RatAbsExpr(0)
    for i, row in enumerate(M):
        if pc[i].is_zero():
            continue
        for j, a in enumerate(row):
            if a.is_zero() or qc[j].is_zero():
                continue
            acc = acc + pc[i] * a * qc[j]
    return acc, (base_var,) + tuple(pv) + tuple(qv)


def _pieces_merge(var: str, evals: list):
    """None if the cellwise evaluations glue to one smooth expression, else a reason."""
    cells = [c for c, _ in evals]
    by_cell = dict(evals)
    # connected runs of cells
    runs = []
    ordered = order_cells(cells)
    for c in ordered:
        if runs and _touches(runs[-1][-1], c):
            runs[-1].append(c)
        else:
            runs.append([c])
    for run in runs:
        intervals = [c for c in run if not c.is_point]
        ref = None
        for c in intervals:
            e = by_cell[c].normalized(c.ctx(var))
            if normalize(e.num, c.ctx(var)).has_abs():
                return f"not smooth on {c}"
            if ref is None:
                ref = e
            elif not ref.equals(e):
                return f"pieces on {intervals[0]} and {c} are different functions"
        if ref is not None:
            for c in run:
                if not c.is_point:
                    continue
                if var in ref.den.variables():
                    try:
                        expected = _subst(ref, var, c.q)
                    except DivisionByZero:
                        return f"singular at {c}"
                else:
                    expected = _subst(ref, var, c.q)
                if not expected.equals(by_cell[c]):
                    return f"value at {c} differs from the limit of its neighbours"
        else:
            for c in run:
                if normalize(by_cell[c].num).has_abs():
                    return f"not smooth at {c}"
    return None


def _touches(a: Cell, b: Cell) -> bool:
    if a.is_point or b.is_point:
        return a.adjacent(b)
    return False


def smoothness(B, g: BundleMetric):
    """(smooth, witness) over every probe pair of every run."""
    runs, mixed = metric_runs(B, g)
    for run in runs:
        for P in run.probes:
            for Q in run.probes:
                evals = []
                for c, M in run.pieces:
                    if c.is_point:
                        try:
                            Pc = (P[0], tuple(_subst(a, run.var, c.q) for a in P[1]), P[2])
                            Qc = (Q[0], tuple(_subst(a, run.var, c.q) for a in Q[1]), Q[2])
                        except DivisionByZero:
                            continue  # a probe with a pole here does not reach this fibre
                    else:
                        Pc, Qc = P, Q
                    e, _ = _pair(M, Pc, Qc, run.var)
                    evals.append((c, e))
                reason = _pieces_merge(run.var, evals)
                if reason is not None:
                    return False, {"chart": run.var, "probes": [P[2], Q[2]], "reason": reason}
    for c, M, P, Q in mixed:
        e, vars_ = _pair(M, P, Q, c.chart)
        if not is_smooth(normalize(e.num, c.ctx()), c.ctx()):
            return False, {"chart": c.chart, "probes": [P[2], Q[2]], "reason": f"mixed pair not smooth on {c}"}
    return True, None


# ---------------------------------------------------------------------------
# verdicts


def _profile(B) -> dict:
    return B.dual_dim_profile()


def _fibre_dim(B, key) -> int:
    if isinstance(B, PseudoBundle):
        return B.fibre_dim
    return B.fibre_dim(key)


def _sample_points(cell: Cell, rng: random.Random, n: int) -> list:
    if cell.is_point:
        return [cell.q]
    out = list(cell.samples(3))
    while len(out) < n:
        lo = cell.lo if cell.lo is not None else (cell.hi - 50 if cell.hi is not None else Fraction(-50))
        hi = cell.hi if cell.hi is not None else lo + 100
        x = lo + (hi - lo) * Fraction(rng.randint(1, 999), 1000)
        if cell.contains(x):
            out.append(x)
    return out


def _rank_at_cell(M, cell: Cell, k: int, rng) -> bool:
    F = la.ExprField(cell.ctx())
    if la.rank(M, F) != k:
        return False
    if cell.is_point:
        return True
    # rank can only drop on the roots of a maximal minor
    minor = la.maximal_minor(M, F)
    num = normalize(minor.num, cell.ctx())
    pts = [p for p in _sample_points(cell, rng, 5)]
    if not num.has_abs() and cell.chart in num.variables():
        pts += [r for r in rational_roots(num, cell.chart) if cell.contains(r)]
    for p in pts:
        try:
            if la.rank(la.evaluate_matrix(M, {cell.chart: p})) != k:
                return False
        except ZeroDivisionError:
            return False
    return True


def _sos_exact(M, terms, cell: Cell) -> bool:
    if not terms:
        return all(a.is_zero(cell.ctx()) for row in M for a in row)
    n = len(M)
    if any(len(phi) != n for _, phi in terms):
        return False
    if not la.mat_equal(_norm_matrix(sos_matrix(terms, n), cell), M, la.ExprField(cell.ctx())):
        return False
    for c, _ in terms:
        c = RatAbsExpr.coerce(c)
        for p in cell.samples(5):
            try:
                v = eval_at(c, {cell.chart: p}) if c.variables() else c.constant_value()
            except DivisionByZero:
                return False
            if v <= 0:
                return False
    return True


def is_pseudometric(B, g: BundleMetric, seed: int = 0) -> MetricVerdict:
    rng = random.Random(seed)
    profile = _profile(B)
    keys = _bundle_keys(B)
    mats = {}
    for k in keys:
        M = g.lookup(k)
        n = _fibre_dim(B, k)
        if len(M) != n:
            raise ShapeMismatch(f"metric on {k} is {len(M)}x{len(M)}, fibre dimension is {n}")
        mats[k] = M
    symmetric = all(la.is_symmetric(M, la.ExprField(_cell_of(k).ctx())) for k, M in mats.items())
    smooth, swit = smoothness(B, g)
    rank_ok, ranks = {}, {}
    for k, M in mats.items():
        cell = _cell_of(k)
        key = k.key()
        ranks[key] = la.rank(M, la.ExprField(cell.ctx())) if M else 0
        rank_ok[key] = _rank_at_cell(M, cell, profile[k], rng) if M else profile[k] == 0
    # positive semi-definiteness
    mode, pwit, samples = "exact", None, 0
    for k, M in mats.items():
        cell = _cell_of(k)
        if not M:
            continue
        terms = g.sos_on(k)
        if terms is not None and _sos_exact(M, terms, cell):
            continue
        if all(a.is_constant() for row in M for a in row):
            C = [[a.constant_value() for a in row] for row in M]
            if la.psd_exact(C):
                continue
            mode, pwit = "fails", {"cell": k.key(), "matrix": [[str(a) for a in row] for row in C]}
            break
        failed = False
        for p in _sample_points(cell, rng, PSD_SAMPLES):
            C = la.evaluate_matrix(M, {cell.chart: p})
            v = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(len(M))]
            samples += 1
            if la.quad_form(C, v) < 0 or not la.psd_exact(C):
                mode, pwit, failed = "fails", {"cell": k.key(), "point": str(p)}, True
                break
        if failed:
            break
        mode = "probabilistic"
    return MetricVerdict(symmetric, smooth, mode, rank_ok, swit, pwit, samples, ranks)


# ---------------------------------------------------------------------------
# gluing of metrics


def compat_check(g1: BundleMetric, g2: BundleMetric, GB: GluedBundle) -> bool:
    """``G1(y) == L(y)^T G2(f(y)) L(y)`` on every cell of ``Y``."""
    res = GB.resolution
    for c in res.y_cells:
        F = la.ExprField(c.ctx())
        G1 = g1.lookup(c)
        G2 = _pull_to_source(GB, g2.lookup(res.ymap[c]), c)
        L = GB.lifts[c]
        rhs = la.matmul(la.matmul(la.transpose(L), G2, F), L, F)
        if not la.mat_equal(G1, rhs, F):
            return False
    return True


def glue_metrics(g1: BundleMetric, g2: BundleMetric, GB: GluedBundle) -> BundleMetric:
    """``g1`` on the cells of ``X1 - Y`` and ``g2`` on the target cells."""
    if not compat_check(g1, g2, GB):
        raise IncompatibleMetrics("g1 and g2 are not compatible with the lift")
    mats, sos = {}, {}
    for gc in GB.cells:
        src = g1 if gc.region == "i1" else g2
        mats[gc] = src.lookup(gc.cell)
        terms = src.sos_on(gc.cell)
        if terms is not None:
            sos[gc] = terms
    return BundleMetric(mats, sos, f"({g1.label} ~ {g2.label})")


def _dual_coords(G, D, F):
    """``S`` with ``G = D^T S D`` for a full-row-rank ``D``."""
    if not D:
        return []
    DDt_inv = la.inverse(la.matmul(D, la.transpose(D), F), F)
    return la.matmul(la.matmul(DDt_inv, la.matmul(la.matmul(D, G, F), la.transpose(D), F), F), DDt_inv, F)


def glue_metrics_commutative(g1: BundleMetric, g2: BundleMetric, GB: GluedBundle) -> BundleMetric:
    """Glue ``g2`` to ``g1`` over the switched base along the dual gluing, then switch back."""
    if not GB.gluing.base.invertible or not check_dual_necessary(GB):
        raise NecessaryConditionFails("duals of glued fibres do not correspond")
    if not compat_check(g1, g2, GB):
        raise NecessaryConditionFails("g1 and g2 are not compatible with the lift")
    dual = dual_gluing(GB)
    switch = switch_map(GB)
    rev = GB.resolution.inverse_map
    mats = {}
    for gc in GB.cells:
        sgc = switch.apply_cell(gc)
        # in the switched presentation: region i2 carries X1 (g1), region i1 carries X2 - f(Y) (g2)
        if sgc.region == "i1":
            mats[gc] = g2.lookup(sgc.cell)
            continue
        x_cell = sgc.cell
        if gc.region == "i1":
            mats[gc] = g1.lookup(x_cell)
            continue
        # glued point: move g1 through the dual lift onto the target fibre
        t = gc.cell
        assert rev[t] == x_cell
        Lstar = dual.lift_on(t)
        mats[gc] = _transport_through_dual(GB, g1, x_cell, t, Lstar)
    return BundleMetric(mats, label=f"({g2.label} ~* {g1.label})")


def _transport_through_dual(GB: GluedBundle, g1: BundleMetric, c: Cell, t: Cell, Lstar):
    """``D2^T M^-T S1 M^-1 D2`` on the target cell ``t``.

    ``Lstar`` is the dual lift over ``t``; ``M`` solves ``D2 L = M D1`` with
    ``D2 L = (Lstar D2^T)^T``, everything written in the target variable.
    """
    F = la.ExprField(t.ctx())
    D2 = [list(phi.coeffs) for phi in GB.B2.dual_basis(t)]
    n2 = GB.B2.fibre_dim
    if not D2:
        return [[RatAbsExpr(0)] * n2 for _ in range(n2)]
    D1 = [_at_target(GB, list(phi.coeffs), c, t) for phi in GB.B1.dual_basis(c)]
    G1 = [_at_target(GB, row, c, t) for row in g1.lookup(c)]
    S1 = _dual_coords(G1, D1, F)
    D2L = la.transpose(la.matmul(Lstar, la.transpose(D2), F))
    M = la.solve_left(D1, D2L, F)
    if M is None:
        raise NecessaryConditionFails(f"dual lift does not map the dual fibre over {t} onto the one over {c}")
    Minv = la.inverse(M, F)
    S2 = la.matmul(la.matmul(la.transpose(Minv), S1, F), Minv, F)
    return la.matmul(la.matmul(la.transpose(D2), S2, F), D2, F)


def _at_target(GB: GluedBundle, row, c: Cell, t: Cell) -> list:
    if t.is_point:
        return [_subst(a, GB.source_var, c.q) for a in row]
    finv = GB.resolution.finv_expr(t)
    return [_subst(a, GB.source_var, finv).normalized(t.ctx()) for a in row]


def metrics_coincide(ga: BundleMetric, gb: BundleMetric) -> bool:
    ka = {k.key() if hasattr(k, "key") else str(k): k for k in ga.matrices}
    kb = {k.key() if hasattr(k, "key") else str(k): k for k in gb.matrices}
    if set(ka) != set(kb):
        return False
    for name, k in ka.items():
        cell = _cell_of(k)
        if not la.mat_equal(ga.lookup(k), gb.lookup(kb[name]), la.ExprField(cell.ctx())):
            return False
    return True


# ---------------------------------------------------------------------------
# existence


@dataclass
class NonexistenceCertificate:
    required_ranks: dict  # cell key -> dual dimension
    point: str  # the point cell where the rank requirement fails
    interval: str  # an adjacent interval of smaller required rank
    interval_rank: int
    point_rank: int
    probes: list  # constant-fibre probe pairs making every entry continuous
    forced: str

    def replay(self, B: PseudoBundle) -> bool:
        """Re-derive the ranks and re-check the semicontinuity contradiction."""
        prof = B.profile_by_key()
        if prof != self.required_ranks:
            return False
        if prof.get(self.point) != self.point_rank or prof.get(self.interval) != self.interval_rank:
            return False
        cells = {c.key(): c for c in B.cells}
        p, i = cells[self.point], cells[self.interval]
        if not (p.is_point and not i.is_point and p.adjacent(i)):
            return False
        names = {name for _, _, name in B.probes()}
        if any(a not in names or b not in names for a, b in self.probes):
            return False
        return self.interval_rank < self.point_rank

    def as_dict(self) -> dict:
        return {
            "required_ranks": dict(sorted(self.required_ranks.items())),
            "point": self.point,
            "interval": self.interval,
            "interval_rank": self.interval_rank,
            "point_rank": self.point_rank,
            "probes": [list(p) for p in self.probes],
            "forced": self.forced,
        }


@dataclass
class Existence:
    status: str  # "Exists" | "NonExistent" | "Unknown"
    metric: BundleMetric | None = None
    certificate: NonexistenceCertificate | None = None
    verdict: MetricVerdict | None = None


def canonical_metric(B: PseudoBundle) -> BundleMetric:
    """``sum_k phi_k (x) phi_k`` over the cellwise dual bases."""
    mats, sos = {}, {}
    for c in B.cells:
        basis = B.dual_basis(c)
        terms = [(RatAbsExpr(1), phi) for phi in basis]
        if terms:
            mats[c] = sos_matrix(terms, B.fibre_dim)
        else:
            mats[c] = [[RatAbsExpr(0)] * B.fibre_dim for _ in range(B.fibre_dim)]
        sos[c] = terms
    return BundleMetric(mats, sos, f"g({B.label})")


def existence_check(B: PseudoBundle, seed: int = 0) -> Existence:
    g = canonical_metric(B)
    v = is_pseudometric(B, g, seed)
    if v.passed and v.psd == "exact":
        return Existence("Exists", g, None, v)
    prof = B.dual_dim_profile()
    for p in B.cells:
        if not p.is_point:
            continue
        for i in B.cells:
            if i.is_point or not p.adjacent(i) or prof[i] >= prof[p]:
                continue
            n = B.fibre_dim
            probes = [(f"const(e{a + 1})", f"const(e{b + 1})") for a in range(n) for b in range(a, n)]
            if prof[i] == 0:
                forced = (
                    f"rank 0 on {i} forces every coefficient to vanish there; the constant probes make each "
                    f"coefficient smooth, so it vanishes at {p} too, contradicting rank {prof[p]} at {p}"
                )
            else:
                forced = (
                    f"every {prof[i] + 1}-minor vanishes on {i}; the constant probes make the coefficients "
                    f"continuous, so the rank at {p} is at most {prof[i]} < {prof[p]}"
                )
            cert = NonexistenceCertificate(
                {c.key(): k for c, k in prof.items()}, p.key(), i.key(), prof[i], prof[p], probes, forced
            )
            return Existence("NonExistent", None, cert, v)
    return Existence("Unknown", None, None, v)


# ---------------------------------------------------------------------------
# pairing map and the dual metric


@dataclass
class PairingMap:
    matrices: dict
    warnings: list

    def apply(self, key, v) -> list:
        """Coefficients of the covector ``g(x)(v, .)``."""
        M = self.matrices[key]
        return [sum((RatAbsExpr.coerce(v[i]) * M[i][j] for i in range(len(v))), RatAbsExpr(0)) for j in range(len(M))]


def pairing_map(B, g: BundleMetric, seed: int = 0) -> PairingMap:
    rng = random.Random(seed)
    mats = {}
    for k in _bundle_keys(B):
        M = g.lookup(k)
        if len(M) != _fibre_dim(B, k):
            raise ShapeMismatch(f"metric on {k} does not fit the fibre")
        mats[k] = M
    pm = PairingMap(mats, [])
    v = is_pseudometric(B, g, seed)
    if not all(v.rank_ok.values()):
        pm.warnings.append("rank differs from the dual dimension; the pairing is smooth but g is not a pseudo-metric")
    keys = list(mats)
    for _ in range(20):
        k = keys[rng.randrange(len(keys))]
        cell = _cell_of(k)
        pts = _sample_points(cell, rng, 4)
        x = pts[rng.randrange(len(pts))]
        n = len(mats[k])
        a = [Fraction(rng.randint(-9, 9)) for _ in range(n)]
        b = [Fraction(rng.randint(-9, 9)) for _ in range(n)]
        C = la.evaluate_matrix(mats[k], {cell.chart: x})
        phi = [sum(a[i] * C[i][j] for i in range(n)) for j in range(n)]
        if sum(phi[j] * b[j] for j in range(n)) != sum(a[i] * C[i][j] * b[j] for i in range(n) for j in range(n)):
            raise MetricError("pairing map disagrees with the metric")
    return pm


def dual_metric(B: PseudoBundle, g: BundleMetric | None, seed: int = 0) -> tuple:
    """The induced metric on the dual bundle in dual-basis coordinates.

    Returns ``(dual_bundle_model, metric)``.
    """
    if g is None:
        raise MetricRequired("the dual metric needs a pseudo-metric on the bundle")
    v = is_pseudometric(B, g, seed)
    if not v.passed:
        raise MetricRequired("the given metric is not a pseudo-metric")
    prof = B.dual_dim_profile()
    for a in B.cells:
        for b in B.cells:
            if a.adjacent(b) and prof[a] != prof[b]:
                raise NotLocallyTrivial(f"dual dimension jumps between {a} and {b}")
    model = dual_bundle(B).as_bundle()
    mats, sos = {}, {}
    for c in B.cells:
        F = la.ExprField(c.ctx())
        D = [list(phi.coeffs) for phi in B.dual_basis(c)]
        if not D:
            mats[c] = []
            continue
        S = _dual_coords(g.lookup(c), D, F)
        Sinv = la.inverse(S, F)
        mats[c] = Sinv
        terms = g.sos_on(c)
        if terms is not None and _diagonal_in_basis(terms, D, F):
            k = len(D)
            sos[c] = [
                (RatAbsExpr(1) / cf, Functional([RatAbsExpr(int(i == j)) for i in range(k)]))
                for j, (cf, _) in enumerate(terms)
            ]
    return model, BundleMetric(mats, sos, f"{g.label}*")


def _diagonal_in_basis(terms, D, F) -> bool:
    return len(terms) == len(D) and all(
        all(F.is_zero(a - b) for a, b in zip(phi.coeffs, row)) for (_, phi), row in zip(terms, D)
    )
