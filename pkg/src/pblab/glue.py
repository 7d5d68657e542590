"""Gluing of one-chart bases and pseudo-bundles along a partial map.

A gluing identifies each ``y`` in a union ``Y`` of source cells with ``f(y)``
in the target chart. The glued base keeps the source cells outside ``Y``
(region ``i1``) and every target cell (region ``i2``). Both charts are
re-celled against each other so that ``f`` maps each cell of ``Y`` onto
exactly one target cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg as la
from .bundle import (
    Cell,
    PseudoBundle,
    SubBundleSpec,
    TotalGenerator,
    _cell_within,
    _degeneracy_points,
    breakpoints,
    direct_sum_bundle,
    locate,
    order_cells,
    quotient_bundle,
    refine_cells,
    tensor_bundle,
)
from .diffvs import GeneratedVS, GeneratorPlot, direct_sum_vs, tensor_vs
from .symexpr import (
    INF,
    DivisionByZero,
    RatAbsExpr,
    eval_at,
    rational_roots,
    substitute_rat,
    univariate_limit,
)


class GlueError(Exception):
    pass


class MalformedGluing(GlueError):
    pass


class LiftDomainMismatch(GlueError):
    pass


class IncompatibleMaps(GlueError):
    pass


class NotInvertible(GlueError):
    pass


class ConditionFails(GlueError):
    pass


def _lookup(spec, cell: Cell, what: str):
    """Value of a uniform-or-per-cell specification on ``cell``."""
    if not isinstance(spec, dict):
        return spec
    if cell in spec:
        return spec[cell]
    for c, v in spec.items():
        if c.chart == cell.chart and _cell_within(cell, c):
            return v
    raise KeyError(f"no {what} given for cell {cell}")


def _subst(e, var: str, value) -> RatAbsExpr:
    return substitute_rat(e, {var: value})


def _on_cell(e, cell: Cell) -> RatAbsExpr:
    e = RatAbsExpr.coerce(e)
    if cell.is_point:
        return _subst(e, cell.chart, cell.q)
    return e.normalized(cell.ctx())


def _bound(v):
    if v == INF or v == -INF:
        return None
    return Fraction(v)


@dataclass(frozen=True)
class GluedCell:
    region: str  # "i1" (source minus Y) or "i2" (target)
    cell: Cell

    def key(self) -> str:
        return f"{self.region}:{self.cell.key()}"

    def __str__(self):
        return self.key()


class BaseGluing:
    """Declared gluing data: ``f`` on ``Y`` (source chart) and optionally its inverse."""

    def __init__(self, source_var: str, target_var: str, Y, f, f_inverse=None):
        if source_var == target_var:
            raise MalformedGluing("the two charts need distinct variable names")
        self.source_var = source_var
        self.target_var = target_var
        self.Y = tuple(order_cells(Y))
        self.f = f if isinstance(f, dict) else (RatAbsExpr.coerce(f) if f is not None else None)
        if isinstance(f_inverse, dict):
            self.f_inverse = f_inverse
        else:
            self.f_inverse = RatAbsExpr.coerce(f_inverse) if f_inverse is not None else None
        if self.Y and self.f is None:
            raise MalformedGluing("a nonempty Y needs a map f")

    @property
    def invertible(self) -> bool:
        return self.f_inverse is not None or not self.Y

    def f_on(self, cell: Cell) -> RatAbsExpr:
        try:
            return _lookup(self.f, cell, "f")
        except KeyError as e:
            raise MalformedGluing(str(e)) from None

    def finv_on(self, tcell: Cell) -> RatAbsExpr:
        if self.f_inverse is None:
            raise NotInvertible("the gluing map has no declared inverse")
        try:
            return _lookup(self.f_inverse, tcell, "inverse")
        except KeyError as e:
            raise MalformedGluing(str(e)) from None

    def apply(self, cell: Cell, x) -> Fraction:
        try:
            return eval_at(self.f_on(cell), {self.source_var: Fraction(x)})
        except DivisionByZero:
            raise MalformedGluing(f"f is undefined at {x}") from None

    def reversed(self, resolution: "Resolution") -> "BaseGluing":
        """The gluing of the target onto the source along the inverse."""
        if self.f_inverse is None and self.Y:
            raise NotInvertible("the gluing map has no declared inverse")
        ys = [resolution.ymap[c] for c in resolution.y_cells]
        f_new = {resolution.ymap[c]: self.finv_on(resolution.ymap[c]) for c in resolution.y_cells} if ys else None
        finv_new = {c: self.f_on(c) for c in resolution.y_cells} if ys else None
        return BaseGluing(self.target_var, self.source_var, ys, f_new, finv_new)

    def resolve(self, source_cells, target_cells, extra_source=(), extra_target=()) -> "Resolution":
        return Resolution(self, source_cells, target_cells, extra_source, extra_target)


class Resolution:
    """Mutually refined cell complexes with the cellwise correspondence ``Y -> f(Y)``."""

    def __init__(self, G: BaseGluing, source_cells, target_cells, extra_source=(), extra_target=()):
        self.gluing = G
        sv, tv = G.source_var, G.target_var
        src = refine_cells([c.with_chart(sv) for c in source_cells], breakpoints(G.Y) | set(extra_source))
        tgt = refine_cells([c.with_chart(tv) for c in target_cells], extra_target)
        for y in G.Y:
            if not any(_cell_within(c, y) or _cell_within(y, c) for c in src):
                raise MalformedGluing(f"Y cell {y} is not in the source base")
        for _ in range(8):
            y_cells = [c for c in src if any(_cell_within(c, y) for y in G.Y)]
            images = {c: self._image(c) for c in y_cells}
            new_t = {b for im in images.values() for b in im.endpoints()}
            tgt2 = refine_cells(tgt, new_t)
            pre = set()
            for c in y_cells:
                if c.is_point:
                    continue
                im = images[c]
                for b in breakpoints(tgt2):
                    if im.contains(b):
                        pre.add(self._preimage(c, im, b))
            src2 = refine_cells(src, pre)
            if len(src2) == len(src) and len(tgt2) == len(tgt):
                break
            src, tgt = src2, tgt2
        else:
            raise MalformedGluing("cell refinement did not stabilize")
        self.source_cells = tuple(src)
        self.target_cells = tuple(tgt)
        self.y_cells = tuple(c for c in src if any(_cell_within(c, y) for y in G.Y))
        ymap = {}
        used = set()
        for c in self.y_cells:
            im = self._image(c)
            match = [t for t in tgt if t.key() == im.key()]
            if not match:
                raise MalformedGluing(f"f maps {c} to {im}, which is not in the target base")
            if match[0] in used:
                raise MalformedGluing(f"f is not injective: two cells map onto {im}")
            used.add(match[0])
            ymap[c] = match[0]
        self.ymap = ymap
        self.inverse_map = {t: c for c, t in ymap.items()}
        if G.f_inverse is not None:
            self._verify_inverse()

    def _image(self, c: Cell) -> Cell:
        G = self.gluing
        tv = G.target_var
        if c.is_point:
            return Cell.point(tv, G.apply(c, c.q))
        f = G.f_on(c).normalized(c.ctx(G.source_var))
        if G.source_var in f.den.variables():
            for r in rational_roots(f.den, G.source_var):
                if c.contains(r):
                    raise MalformedGluing(f"f has a pole at {r} inside {c}")
        try:
            a = univariate_limit(f, G.source_var, c.lo, 1) if c.lo is not None else univariate_limit(f, G.source_var, None, -1)
            b = univariate_limit(f, G.source_var, c.hi, -1) if c.hi is not None else univariate_limit(f, G.source_var, None, 1)
        except ValueError as e:
            raise MalformedGluing(str(e)) from None
        if a == b:
            raise MalformedGluing(f"f is not injective on {c}")
        lo, hi = (a, b) if a < b else (b, a)
        return Cell.interval(tv, _bound(lo), _bound(hi))

    def _preimage(self, c: Cell, im: Cell, t) -> Fraction:
        G = self.gluing
        if G.f_inverse is not None:
            try:
                x = eval_at(G.finv_on(Cell.point(G.target_var, t)), {G.target_var: t})
            except KeyError:
                x = eval_at(G.finv_on(im), {G.target_var: t})
            if c.contains(x):
                return x
        # bisection-free exact fallback: rational solutions of f(x) = t
        f = G.f_on(c) - RatAbsExpr(t)
        for r in rational_roots(f.normalized(c.ctx(G.source_var)).num, G.source_var):
            if c.contains(r):
                return r
        raise MalformedGluing(f"cannot locate the preimage of {t} in {c} exactly")

    def _verify_inverse(self) -> None:
        G = self.gluing
        sv, tv = G.source_var, G.target_var
        for c, t in self.ymap.items():
            f, g = G.f_on(c), G.finv_on(t)
            if c.is_point:
                if eval_at(g, {tv: t.q}) != c.q:
                    raise MalformedGluing(f"declared inverse fails at {c}")
                continue
            if not _subst(g, tv, f).equals(RatAbsExpr.var(sv), c.ctx(sv)):
                raise MalformedGluing(f"f_inverse(f(x)) != x on {c}")
            if not _subst(f, sv, g).equals(RatAbsExpr.var(tv), t.ctx(tv)):
                raise MalformedGluing(f"f(f_inverse(y)) != y on {t}")

    def f_expr(self, c: Cell) -> RatAbsExpr:
        return _on_cell(self.gluing.f_on(c), c)

    def finv_expr(self, t: Cell) -> RatAbsExpr:
        return _on_cell(self.gluing.finv_on(t), t)

    def source_breakpoints(self) -> set:
        return breakpoints(self.source_cells)

    def target_breakpoints(self) -> set:
        return breakpoints(self.target_cells)


class GluedSpace:
    def __init__(self, resolution: Resolution):
        self.resolution = resolution
        G = resolution.gluing
        self.gluing = G
        i1 = [GluedCell("i1", c) for c in resolution.source_cells if c not in resolution.ymap]
        i2 = [GluedCell("i2", t) for t in resolution.target_cells]
        self.cells = tuple(i1 + i2)

    def regions(self) -> dict:
        out = {"i1": [], "i2": []}
        for gc in self.cells:
            out[gc.region].append(gc.cell)
        return out

    def locate(self, chart: str, x) -> GluedCell:
        """Region-tagged cell of the point ``x`` of chart ``chart``."""
        r = self.resolution
        x = Fraction(x)
        if chart == self.gluing.source_var:
            c = locate(r.source_cells, x)
            if c is None:
                raise MalformedGluing(f"{x} is not in the source base")
            if c in r.ymap:
                return GluedCell("i2", r.ymap[c])
            return GluedCell("i1", c)
        if chart == self.gluing.target_var:
            t = locate(r.target_cells, x)
            if t is None:
                raise MalformedGluing(f"{x} is not in the target base")
            return GluedCell("i2", t)
        raise KeyError(chart)

    def push_forward(self, chart: str, x):
        """The point of the glued space as ``(region, coordinate)``."""
        r = self.resolution
        x = Fraction(x)
        if chart == self.gluing.source_var:
            c = locate(r.source_cells, x)
            if c in r.ymap:
                return ("i2", self.gluing.apply(c, x))
            return ("i1", x)
        return ("i2", x)

    def keys(self) -> list:
        return [gc.key() for gc in self.cells]


def glue_spaces(source_cells, target_cells, G: BaseGluing) -> GluedSpace:
    return GluedSpace(G.resolve(source_cells, target_cells))


# ---------------------------------------------------------------------------
# bundles


class BundleGluing:
    """A base gluing with a fibrewise-linear lift, given per cell of ``Y``."""

    def __init__(self, base: BaseGluing, lift):
        self.base = base
        if isinstance(lift, dict):
            self.lift = {c: _mat(m) for c, m in lift.items()}
            for c in self.lift:
                if not any(_cell_within(c, y) or _cell_within(y, c) for y in base.Y):
                    raise LiftDomainMismatch(f"lift given on {c}, outside Y")
        else:
            self.lift = _mat(lift) if lift is not None else None

    def lift_on(self, cell: Cell):
        try:
            return _lookup(self.lift, cell, "lift")
        except KeyError as e:
            raise LiftDomainMismatch(str(e)) from None


def _defined_on(g: TotalGenerator, cell: Cell) -> bool:
    return not cell.is_point or g.defined_at(cell.q)


def _mat(m):
    return [[RatAbsExpr.coerce(a) for a in row] for row in m]


def _mat_on(M, cell: Cell):
    return [[_on_cell(a, cell) for a in row] for row in M]


def _mat_subst(M, var: str, value):
    return [[_subst(a, var, value) for a in row] for row in M]


class GluedBundle:
    """``B1`` glued to ``B2`` along a bundle gluing."""

    def __init__(self, B1: PseudoBundle, B2: PseudoBundle, G: BundleGluing, extra_source=(), extra_target=()):
        base = G.base
        if B1.var != base.source_var:
            B1 = B1.renamed(base.source_var)
        if B2.var != base.target_var:
            B2 = B2.renamed(base.target_var)
        extra_s, extra_t = set(extra_source), set(extra_target)
        for _ in range(4):
            res = base.resolve(B1.cells, B2.cells, extra_s, extra_t)
            self.B1 = B1.refined(res.source_breakpoints())
            self.B2 = B2.refined(res.target_breakpoints())
            if [c.key() for c in self.B1.cells] != [c.key() for c in res.source_cells] or [
                c.key() for c in self.B2.cells
            ] != [c.key() for c in res.target_cells]:
                raise MalformedGluing("bundle bases do not match the gluing charts")
            self.gluing = G
            self.resolution = res
            self.space = GluedSpace(res)
            self.lifts = {}
            for c in res.y_cells:
                L = _mat_on(G.lift_on(c), c)
                if len(L) != B2.fibre_dim or any(len(row) != B1.fibre_dim for row in L):
                    raise LiftDomainMismatch(
                        f"lift on {c} has shape {len(L)}x{len(L[0]) if L else 0}, "
                        f"expected {B2.fibre_dim}x{B1.fibre_dim}"
                    )
                self.lifts[c] = L
            # the augmented generator set can degenerate at new points
            new_t = set()
            for t in res.inverse_map:
                if t.is_point:
                    continue
                gens = self._total_on_image(t)
                new_t.update(_degeneracy_points(t.chart, [t], B2.fibre_dim, gens))
            if not new_t:
                break
            extra_t |= new_t
            extra_s |= {eval_at(res.finv_expr(locate(res.target_cells, p)), {base.target_var: p}) for p in new_t}
        self.label = f"({B1.label} ~ {B2.label})"
        self.cells = self.space.cells
        self._fibres = {gc: self._make_fibre(gc) for gc in self.cells}
        for sp in self._fibres.values():
            sp.dual_basis()

    @property
    def source_var(self) -> str:
        return self.gluing.base.source_var

    @property
    def target_var(self) -> str:
        return self.gluing.base.target_var

    def fibre_dim(self, gc: GluedCell) -> int:
        return self.B1.fibre_dim if gc.region == "i1" else self.B2.fibre_dim

    def lift_at_target(self, t: Cell):
        """``L(f^-1(t))`` as a matrix in the target variable, and the source cell."""
        r = self.resolution
        c = r.inverse_map[t]
        if t.is_point:
            return _mat_subst(self.lifts[c], self.source_var, c.q), c
        g = r.finv_expr(t)
        return [[_subst(a, self.source_var, g).normalized(t.ctx()) for a in row] for row in self.lifts[c]], c

    def _total_on_image(self, t: Cell) -> list:
        """Split-form generators over an image cell: B2's plus lifted B1's."""
        r = self.resolution
        tv = self.target_var
        gens = list(self.B2.generators)
        c = r.inverse_map[t]
        L, _ = self.lift_at_target(t)
        g = r.finv_expr(t) if not t.is_point else RatAbsExpr(c.q)
        for p in self.B1.generators:
            if t.is_point and not p.defined_at(c.q):
                continue
            comps = [_subst(a, self.source_var, g) for a in p.components]
            lifted = la.matvec(L, comps, la.ExprField(t.ctx()))
            gens.append(TotalGenerator(tv, p.fibre_vars, lifted, p.tag))
        return gens

    def fibre_generators(self, gc: GluedCell) -> list:
        if gc.region == "i1":
            return [g.on_cell(gc.cell) for g in self.B1.generators if _defined_on(g, gc.cell)]
        t = gc.cell
        if t not in self.resolution.inverse_map:
            return [g.on_cell(t) for g in self.B2.generators if _defined_on(g, t)]
        return [g.on_cell(t) for g in self._total_on_image(t) if _defined_on(g, t)]

    def _make_fibre(self, gc: GluedCell) -> GeneratedVS:
        plots = self.fibre_generators(gc)
        n = self.fibre_dim(gc)
        if gc.cell.is_point:
            return GeneratedVS(n, plots, f"{self.label}[{gc.key()}]")
        return GeneratedVS(n, plots, f"{self.label}[{gc.key()}]", (gc.cell.chart,), gc.cell.ctx())

    def fibre_space(self, gc: GluedCell) -> GeneratedVS:
        return self._fibres[gc]

    def fibre_space_at(self, chart: str, x) -> GeneratedVS:
        gc = self.space.locate(chart, x)
        region, coord = self.space.push_forward(chart, x)
        sp = self._fibres[gc]
        if gc.cell.is_point:
            return sp
        return sp.at_params({gc.cell.chart: coord})

    def dual_basis(self, gc: GluedCell) -> list:
        return self._fibres[gc].dual_basis()

    def dual_dim_profile(self) -> dict:
        return {gc: self._fibres[gc].dual_dim() for gc in self.cells}

    def profile_by_key(self) -> dict:
        return {gc.key(): k for gc, k in self.dual_dim_profile().items()}

    def glued_cell(self, key: str) -> GluedCell:
        for gc in self.cells:
            if gc.key() == key:
                return gc
        raise KeyError(key)

    def __repr__(self):
        return f"GluedBundle({self.label!r}, cells={self.space.keys()})"


def glue_bundles(B1: PseudoBundle, B2: PseudoBundle, G: BundleGluing, extra_source=(), extra_target=()) -> GluedBundle:
    return GluedBundle(B1, B2, G, extra_source, extra_target)


# ---------------------------------------------------------------------------
# maps and sections


def _as_vector(v):
    if isinstance(v, (list, tuple)):
        return [RatAbsExpr.coerce(a) for a in v]
    return [RatAbsExpr.coerce(v)]


def _vec_on(spec, cell: Cell):
    return [_on_cell(a, cell) for a in _as_vector(_lookup(spec, cell, "value"))]


def _vec_equal(a, b, cell: Cell) -> bool:
    return len(a) == len(b) and all(x.equals(y, cell.ctx()) for x, y in zip(a, b))


def _compose_f(spec2, res: Resolution, c: Cell):
    """``phi2(f(x))`` on the source cell ``c``."""
    t = res.ymap[c]
    vals = _vec_on(spec2, t)
    if c.is_point:
        return [_subst(v, res.gluing.target_var, t.q) for v in vals]
    f = res.f_expr(c)
    return [_subst(v, res.gluing.target_var, f).normalized(c.ctx()) for v in vals]


def check_f_compatible(phi1, phi2, G: BaseGluing, source_cells=None, target_cells=None) -> bool:
    """``phi1(y) == phi2(f(y))`` on every cell of ``Y``."""
    res = G.resolve(source_cells or G.Y or [Cell.interval(G.source_var)], target_cells or [Cell.interval(G.target_var)])
    for c in res.y_cells:
        if not _vec_equal(_vec_on(phi1, c), _compose_f(phi2, res, c), c):
            return False
    return True


def check_fg_compatible(psi1, psi2, G: BaseGluing, H: BaseGluing, source_cells=None, target_cells=None) -> bool:
    """``g(psi1(y)) == psi2(f(y))`` on every cell of ``Y``; ``H`` carries ``g``."""
    res = G.resolve(source_cells or G.Y or [Cell.interval(G.source_var)], target_cells or [Cell.interval(G.target_var)])
    for c in res.y_cells:
        inner = _vec_on(psi1, c)
        if len(inner) != 1:
            raise ValueError("maps into a one-chart range are scalar")
        x0 = c.sample()
        z0 = eval_at(inner[0], {G.source_var: x0}) if inner[0].variables() else inner[0].constant_value()
        zc = locate(list(H.Y), z0)
        if zc is None:
            return False
        g = H.f_on(zc)
        lhs = [_subst(g, H.source_var, inner[0]).normalized(c.ctx())]
        if not _vec_equal(lhs, _compose_f(psi2, res, c), c):
            return False
    return True


class PiecewiseMap:
    """Region-tagged values: ``phi1`` on ``i1`` cells, ``phi2`` on ``i2`` cells."""

    def __init__(self, space: GluedSpace, pieces: dict):
        self.space = space
        self.pieces = pieces  # GluedCell -> list of RatAbsExpr

    def value_on(self, gc: GluedCell) -> list:
        return self.pieces[gc]

    def evaluate(self, chart: str, x) -> list:
        gc = self.space.locate(chart, x)
        _, coord = self.space.push_forward(chart, x)
        return [eval_at(a, {gc.cell.chart: coord}) if a.variables() else a.constant_value() for a in self.pieces[gc]]

    def equals(self, other: "PiecewiseMap") -> bool:
        if set(self.pieces) != set(other.pieces):
            return False
        return all(_vec_equal(self.pieces[k], other.pieces[k], k.cell) for k in self.pieces)

    def __mul__(self, other: "PiecewiseMap") -> "PiecewiseMap":
        """Pointwise product of a scalar piecewise map with a vector one."""
        out = {}
        for gc, vals in other.pieces.items():
            (h,) = self.pieces[gc]
            out[gc] = [(h * v).normalized(gc.cell.ctx()) for v in vals]
        return type(other)(other.space, out)


class PiecewiseSection(PiecewiseMap):
    pass


def glue_maps(phi1, phi2, G: BaseGluing, source_cells=None, target_cells=None) -> PiecewiseMap:
    space = GluedSpace(G.resolve(source_cells or [Cell.interval(G.source_var)], target_cells or [Cell.interval(G.target_var)]))
    if not check_f_compatible(phi1, phi2, G, space.resolution.source_cells, space.resolution.target_cells):
        raise IncompatibleMaps("phi1 and phi2 differ on Y after composing with f")
    pieces = {}
    for gc in space.cells:
        pieces[gc] = _vec_on(phi1 if gc.region == "i1" else phi2, gc.cell)
    return PiecewiseMap(space, pieces)


def sections_compatible(s1, s2, GB: GluedBundle) -> bool:
    """``L(y) s1(y) == s2(f(y))`` on every cell of ``Y``."""
    res = GB.resolution
    for c in res.y_cells:
        F = la.ExprField(c.ctx())
        lhs = la.matvec(GB.lifts[c], _vec_on(s1, c), F)
        if not _vec_equal(lhs, _compose_f(s2, res, c), c):
            return False
    return True


def glue_sections(s1, s2, GB: GluedBundle) -> PiecewiseSection:
    if not sections_compatible(s1, s2, GB):
        raise IncompatibleMaps("the sections are not compatible with the lift")
    pieces = {}
    for gc in GB.cells:
        pieces[gc] = _vec_on(s1 if gc.region == "i1" else s2, gc.cell)
    return PiecewiseSection(GB.space, pieces)


def glue_scalars(h1, h2, GB: GluedBundle) -> PiecewiseMap:
    return glue_maps(h1, h2, GB.gluing.base, GB.resolution.source_cells, GB.resolution.target_cells)


def scale_section(h, s, cell: Cell) -> list:
    hv = _vec_on(h, cell)[0]
    return [(hv * a).normalized(cell.ctx()) for a in _vec_on(s, cell)]


# ---------------------------------------------------------------------------
# switch map and dual gluing


class SwitchMap:
    """Identification of ``X1 u_f X2`` with ``X2 u_{f^-1} X1``."""

    def __init__(self, space: GluedSpace):
        G = space.gluing
        if not G.invertible:
            raise NotInvertible("the switch map needs an invertible gluing map")
        self.space = space
        r = space.resolution
        rev = G.reversed(r)
        self.switched = GluedSpace(rev.resolve(r.target_cells, r.source_cells))
        self.orders = ((G.source_var, G.target_var), (G.target_var, G.source_var))

    def apply_cell(self, gc: GluedCell) -> GluedCell:
        r = self.space.resolution
        if gc.region == "i1":
            return GluedCell("i2", gc.cell)
        if gc.cell in r.inverse_map:
            return GluedCell("i2", r.inverse_map[gc.cell])
        return GluedCell("i1", gc.cell)

    def apply_point(self, region: str, x):
        r = self.space.resolution
        G = self.space.gluing
        x = Fraction(x)
        if region == "i1":
            return ("i2", x)
        t = locate(r.target_cells, x)
        if t in r.inverse_map:
            return ("i2", eval_at(G.finv_on(t), {G.target_var: x}))
        return ("i1", x)

    def inverse(self) -> "SwitchMap":
        return SwitchMap(self.switched)

    def involutive(self) -> bool:
        back = self.inverse()
        for gc in self.space.cells:
            if back.apply_cell(self.apply_cell(gc)).key() != gc.key():
                return False
        return True


def switch_map(space_or_bundle) -> SwitchMap:
    space = space_or_bundle.space if isinstance(space_or_bundle, GluedBundle) else space_or_bundle
    return SwitchMap(space)


def dual_gluing(GB: GluedBundle) -> BundleGluing:
    """Gluing of the duals along ``f^-1`` with the transposed lift."""
    r = GB.resolution
    base = GB.gluing.base
    if not base.invertible:
        raise NotInvertible("dual gluing needs an invertible gluing map")
    rev = base.reversed(r)
    lifts = {}
    for t, c in r.inverse_map.items():
        L, _ = GB.lift_at_target(t)
        lifts[t] = la.transpose(L) if L else [[] for _ in range(GB.B1.fibre_dim)]
    return BundleGluing(rev, lifts)


def _dual_rows(B: PseudoBundle, cell: Cell):
    return [list(phi.coeffs) for phi in B.dual_basis(cell)]


def _target_dual_on_source(GB: GluedBundle, c: Cell):
    """Dual basis of B2 over ``f(c)``, written in the source variable."""
    t = GB.resolution.ymap[c]
    D2 = _dual_rows(GB.B2, t)
    if c.is_point:
        return [[_subst(a, GB.target_var, t.q) for a in row] for row in D2]
    f = GB.resolution.f_expr(c)
    return [[_subst(a, GB.target_var, f).normalized(c.ctx()) for a in row] for row in D2]


def dual_transition(GB: GluedBundle, c: Cell):
    """``M`` with ``D2(f(x)) L(x) = M D1(x)``, or None if the duals do not correspond."""
    F = la.ExprField(c.ctx())
    D1 = _dual_rows(GB.B1, c)
    D2 = _target_dual_on_source(GB, c)
    if len(D1) != len(D2):
        return None
    if not D1:
        return []
    D2L = la.matmul(D2, GB.lifts[c], F)
    M = la.solve_left(D1, D2L, F)
    if M is None or la.rank(M, F) != len(D1):
        return None
    return M


def check_dual_necessary(GB: GluedBundle) -> bool:
    if not GB.gluing.base.invertible:
        raise NotInvertible("the dual condition needs an invertible gluing map")
    return all(dual_transition(GB, c) is not None for c in GB.resolution.y_cells)


# ---------------------------------------------------------------------------
# sub-bundles and quotients


def _classify_cell(GB: GluedBundle, W1: SubBundleSpec, W2: SubBundleSpec, c: Cell) -> set:
    F = la.ExprField(c.ctx())
    A = [la.matvec(GB.lifts[c], w, F) for w in W1.basis_at(c)]
    t = GB.resolution.ymap[c]
    B = W2.basis_at(t)
    if c.is_point:
        B = [[_subst(a, GB.target_var, t.q) for a in w] for w in B]
    else:
        f = GB.resolution.f_expr(c)
        B = [[_subst(a, GB.target_var, f).normalized(c.ctx()) for a in w] for w in B]
    A = [v for v in A if any(not F.is_zero(a) for a in v)]
    out = set()
    if la.span_contains(B, A, F):
        out.add("Forward")
    if la.span_contains(A, B, F):
        out.add("Reverse")
    return out


def check_subbundle_condition(W1: SubBundleSpec, W2: SubBundleSpec, GB: GluedBundle) -> str:
    per_cell = [_classify_cell(GB, W1, W2, c) for c in GB.resolution.y_cells]
    if any(not s for s in per_cell):
        return "Fails"
    if all("Forward" in s for s in per_cell):
        return "Forward"
    if all("Reverse" in s for s in per_cell):
        return "Reverse"
    return "Mixed"


def induced_subbundle_gluing(W1: SubBundleSpec, W2: SubBundleSpec, GB: GluedBundle) -> BundleGluing:
    """Lift between the sub-bundles in the coordinates of their echelon bases."""
    if check_subbundle_condition(W1, W2, GB) != "Forward":
        raise ConditionFails("the lift does not map W1 into W2 on every cell of Y")
    lifts = {}
    for c in GB.resolution.y_cells:
        F = la.ExprField(c.ctx())
        b1 = W1.basis_at(c)
        t = GB.resolution.ymap[c]
        b2 = W2.basis_at(t)
        if c.is_point:
            b2 = [[_subst(a, GB.target_var, t.q) for a in w] for w in b2]
        else:
            f = GB.resolution.f_expr(c)
            b2 = [[_subst(a, GB.target_var, f).normalized(c.ctx()) for a in w] for w in b2]
        images = [la.matvec(GB.lifts[c], w, F) for w in b1]
        if b1 and b2:
            lifts[c] = la.transpose(la.solve_left(b2, images, F))
        else:
            lifts[c] = [[] for _ in b2]
    return BundleGluing(GB.gluing.base, lifts)


@dataclass
class QuotientGluingResult:
    glued: GluedBundle
    agree: bool
    table: dict  # cell key -> {"glue_then_quotient": k, "quotient_then_glue": k, "generators_equal": bool}


def _quotient_lift(GB: GluedBundle, Q1, Q2, c: Cell):
    """``Q2(f(x)) L(x) R1`` with ``R1`` a right inverse of ``Q1``."""
    F = la.ExprField(c.ctx())
    t = GB.resolution.ymap[c]
    if c.is_point:
        Q2c = [[_subst(a, GB.target_var, t.q) for a in row] for row in Q2]
        Q1c = [[_subst(a, GB.source_var, c.q) for a in row] for row in Q1]
    else:
        f = GB.resolution.f_expr(c)
        Q2c = [[_subst(a, GB.target_var, f).normalized(c.ctx()) for a in row] for row in Q2]
        Q1c = [[a.normalized(c.ctx()) for a in row] for row in Q1]
    if not Q1c or not Q2c:
        return [[RatAbsExpr(0)] * len(Q1c) for _ in Q2c]
    R1 = la.matmul(la.transpose(Q1c), la.inverse(la.matmul(Q1c, la.transpose(Q1c), F), F), F)
    return la.matmul(la.matmul(Q2c, GB.lifts[c], F), R1, F)


def quotient_gluing(B1: PseudoBundle, B2: PseudoBundle, W1: SubBundleSpec, W2: SubBundleSpec, G: BundleGluing) -> QuotientGluingResult:
    GB = GluedBundle(B1, B2, G)
    if check_subbundle_condition(W1, W2, GB) != "Forward":
        raise ConditionFails("the quotient gluing needs L(W1) inside W2 on Y")
    Z1 = quotient_bundle(GB.B1, W1)
    Z2 = quotient_bundle(GB.B2, W2)
    lifts = {c: _quotient_lift(GB, Z1.quotient_map, Z2.quotient_map, c) for c in GB.resolution.y_cells}
    GZ = GluedBundle(
        Z1, Z2, BundleGluing(G.base, lifts), GB.resolution.source_breakpoints(), GB.resolution.target_breakpoints()
    )
    table = {}
    agree = True
    for gc in GZ.cells:
        # glue first, then divide by the image of W1 u W2
        outer = GB._fibres.get(gc)
        if outer is None:
            outer = GB.fibre_space(GB.space.locate(gc.cell.chart, gc.cell.sample()))
        W = W1 if gc.region == "i1" else W2
        Q = W.annihilator_at(gc.cell)
        F = la.ExprField(gc.cell.ctx())
        plots = [GeneratorPlot(p.domain_vars, la.matvec(Q, list(p.components), F)) for p in outer.generators]
        if gc.cell.is_point:
            left = GeneratedVS(len(Q), plots)
        else:
            left = GeneratedVS(len(Q), plots, "", (gc.cell.chart,), gc.cell.ctx())
        right = GZ.fibre_space(gc)
        gens_equal = _generator_sets_equal(left.generators, right.generators, gc.cell)
        ok = left.dual_dim() == right.dual_dim() and gens_equal
        agree &= ok
        table[gc.key()] = {
            "glue_then_quotient": left.dual_dim(),
            "quotient_then_glue": right.dual_dim(),
            "generators_equal": gens_equal,
        }
    return QuotientGluingResult(GZ, agree, table)


def _generator_sets_equal(A, B, cell: Cell) -> bool:
    remaining = list(B)
    for p in A:
        for i, q in enumerate(remaining):
            if len(p.components) == len(q.components) and all(
                a.equals(b, cell.ctx()) for a, b in zip(p.components, q.components)
            ):
                remaining.pop(i)
                break
        else:
            return False
    return not remaining


# ---------------------------------------------------------------------------
# commutativity of gluing with tensor products and direct sums


def _kron_lifts(GA: GluedBundle, GB_: GluedBundle, op: str) -> dict:
    out = {}
    for c in GA.resolution.y_cells:
        F = la.ExprField(c.ctx())
        La, Lb = GA.lifts[c], GB_.lifts[c]
        if op == "tensor":
            out[c] = la.kron(La, Lb, F)
        else:
            na, nb = len(La[0]) if La else 0, len(Lb[0]) if Lb else 0
            top = [list(r) + [RatAbsExpr(0)] * nb for r in La]
            bot = [[RatAbsExpr(0)] * na + list(r) for r in Lb]
            out[c] = top + bot
    return out


def _commutativity(B1, B1p, B2, B2p, G, Gp, op: str) -> dict:
    if G.base is not Gp.base:
        same = (G.base.source_var, G.base.target_var, [y.key() for y in G.base.Y]) == (
            Gp.base.source_var,
            Gp.base.target_var,
            [y.key() for y in Gp.base.Y],
        )
        if not same:
            raise MalformedGluing("both gluings must share one base gluing")
    bundle_op = tensor_bundle if op == "tensor" else direct_sum_bundle
    vs_op = tensor_vs if op == "tensor" else direct_sum_vs
    # glue-then-combine needs both factors on a common refinement
    GA0 = GluedBundle(B1, B2, G)
    GB0 = GluedBundle(B1p, B2p, Gp)
    src_pts = GA0.resolution.source_breakpoints() | GB0.resolution.source_breakpoints()
    tgt_pts = GA0.resolution.target_breakpoints() | GB0.resolution.target_breakpoints()
    GA = GluedBundle(B1, B2, G, src_pts, tgt_pts)
    GBp = GluedBundle(B1p, B2p, Gp, src_pts, tgt_pts)
    lifts = _kron_lifts(GA, GBp, op)
    right = GluedBundle(bundle_op(GA.B1, GBp.B1), bundle_op(GA.B2, GBp.B2), BundleGluing(G.base, lifts), src_pts, tgt_pts)
    cells = {}
    certified = True
    for gc in right.cells:
        la_cell = GA.space.locate(gc.cell.chart, gc.cell.sample()) if gc.region == "i2" else GA.glued_cell(gc.key())
        lb_cell = GBp.space.locate(gc.cell.chart, gc.cell.sample()) if gc.region == "i2" else GBp.glued_cell(gc.key())
        left = vs_op(_fibre_on(GA, la_cell, gc.cell), _fibre_on(GBp, lb_cell, gc.cell))
        rf = right.fibre_space(gc)
        F = la.ExprField(gc.cell.ctx())
        dl = [list(p.coeffs) for p in left.dual_basis()]
        dr = [list(p.coeffs) for p in rf.dual_basis()]
        same_dual = len(dl) == len(dr) and (not dl or la.span_equal(dl, dr, F))
        ok = left.dual_dim() == rf.dual_dim() and same_dual
        certified &= ok
        cells[gc.key()] = {
            "left_dual_dim": left.dual_dim(),
            "right_dual_dim": rf.dual_dim(),
            "dual_spaces_equal": same_dual,
            "certified": ok,
        }
    return {
        "certified": certified,
        "cells": cells,
        "lifts": {c.key(): [[str(a) for a in row] for row in m] for c, m in lifts.items()},
        "lift_matrices": lifts,
        "left": (GA, GBp),
        "right": right,
    }


def _fibre_on(GB: GluedBundle, gc: GluedCell, cell: Cell) -> GeneratedVS:
    """Fibre of ``GB`` on a cell of its base, possibly a finer cell than ``gc``."""
    if gc.cell == cell:
        return GB.fibre_space(gc)
    plots = GB.fibre_generators(gc)
    n = GB.fibre_dim(gc)
    if cell.is_point:
        plots = [GeneratorPlot(p.domain_vars, [_subst(a, cell.chart, cell.q) for a in p.components]) for p in plots]
        return GeneratedVS(n, plots)
    return GeneratedVS(n, plots, "", (cell.chart,), cell.ctx())


def tensor_glue_commutativity_check(B1, B1p, B2, B2p, G: BundleGluing, Gp: BundleGluing) -> dict:
    return _commutativity(B1, B1p, B2, B2p, G, Gp, "tensor")


def direct_sum_glue_commutativity_check(B1, B1p, B2, B2p, G: BundleGluing, Gp: BundleGluing) -> dict:
    return _commutativity(B1, B1p, B2, B2p, G, Gp, "sum")
