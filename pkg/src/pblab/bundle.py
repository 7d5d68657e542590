"""Pseudo-bundles over a one-dimensional cell-decomposed base.

Total generators are in split form: the base coordinate of the plot is the base
variable itself, so the fibre over ``x`` is generated by substituting ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg as la
from .diffvs import (
    GeneratedVS,
    GeneratorPlot,
    ShapeMismatch,
    _fresh,
    _constraint_rows,
    direct_sum_vs,
    tensor_vs,
)
from .symexpr import (
    RatAbsExpr,
    Sign,
    SignContext,
    eval_at,
    normalize,
    rational_roots,
    substitute_rat,
)


class BundleError(Exception):
    pass


class PointOutsideBase(BundleError):
    pass


class BaseMismatch(BundleError):
    pass


class NotASubspace(BundleError):
    pass


def _fmt(q) -> str:
    if q is None:
        return "inf"
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Cell:
    """A point ``{q}`` or an open interval ``(lo, hi)``; ``None`` bounds are infinite."""

    chart: str
    lo: Fraction | None
    hi: Fraction | None
    is_point: bool = False

    def __post_init__(self):
        if self.lo is not None:
            object.__setattr__(self, "lo", Fraction(self.lo))
        if self.hi is not None:
            object.__setattr__(self, "hi", Fraction(self.hi))
        if self.is_point:
            if self.lo is None or self.lo != self.hi:
                raise ValueError("a point cell needs lo == hi, finite")
        elif self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @classmethod
    def point(cls, chart: str, q) -> "Cell":
        return cls(chart, Fraction(q), Fraction(q), True)

    @classmethod
    def interval(cls, chart: str, lo=None, hi=None) -> "Cell":
        return cls(chart, lo, hi, False)

    @property
    def q(self) -> Fraction:
        if not self.is_point:
            raise ValueError("not a point cell")
        return self.lo

    def contains(self, x) -> bool:
        x = Fraction(x)
        if self.is_point:
            return x == self.lo
        return (self.lo is None or self.lo < x) and (self.hi is None or x < self.hi)

    def sample(self) -> Fraction:
        if self.is_point:
            return self.lo
        if self.lo is None and self.hi is None:
            return Fraction(1, 3)
        if self.lo is None:
            return self.hi - 1
        if self.hi is None:
            return self.lo + 1
        return (self.lo + self.hi) / 2

    def samples(self, n: int = 3) -> list:
        """A few distinct rational points of the cell, deterministic."""
        if self.is_point:
            return [self.lo]
        if self.lo is not None and self.hi is not None:
            w = self.hi - self.lo
            return [self.lo + w * Fraction(k, n + 1) for k in range(1, n + 1)]
        c = self.sample()
        step = -1 if self.lo is None else 1
        return [c + step * Fraction(k, 2) for k in range(n)]

    def sign(self) -> Sign:
        if self.is_point:
            return Sign.POS if self.lo > 0 else Sign.NEG if self.lo < 0 else Sign.ZERO
        if self.lo is not None and self.lo >= 0:
            return Sign.POS
        if self.hi is not None and self.hi <= 0:
            return Sign.NEG
        return Sign.ANY

    def ctx(self, var: str | None = None) -> SignContext:
        return SignContext.of({var or self.chart: self.sign()})

    def endpoints(self) -> list:
        return [b for b in (self.lo, self.hi) if b is not None]

    def sort_key(self):
        lo = self.lo if self.lo is not None else None
        return (lo is not None, lo if lo is not None else 0, 0 if self.is_point else 1)

    def key(self) -> str:
        if self.is_point:
            return "{" + _fmt(self.lo) + "}"
        lo = "-inf" if self.lo is None else _fmt(self.lo)
        hi = "inf" if self.hi is None else _fmt(self.hi)
        return f"({lo},{hi})"

    def __str__(self):
        return self.key()

    def with_chart(self, chart: str) -> "Cell":
        return Cell(chart, self.lo, self.hi, self.is_point)

    def adjacent(self, other: "Cell") -> bool:
        """The closures meet and exactly one of the two is a point."""
        if self.is_point == other.is_point:
            return False
        p, i = (self, other) if self.is_point else (other, self)
        return p.lo in (i.lo, i.hi)


def order_cells(cells) -> list:
    def key(c):
        lo = c.lo
        return (0 if lo is None else 1, lo if lo is not None else 0, 0 if c.is_point else 1)

    return sorted(cells, key=key)


def line_cells(chart: str, points=()) -> list:
    """Cells of the whole line cut at ``points``."""
    pts = sorted({Fraction(p) for p in points})
    if not pts:
        return [Cell.interval(chart)]
    out = [Cell.interval(chart, None, pts[0])]
    for a, b in zip(pts, pts[1:]):
        out += [Cell.point(chart, a), Cell.interval(chart, a, b)]
    out += [Cell.point(chart, pts[-1]), Cell.interval(chart, pts[-1], None)]
    return out


def refine_cells(cells, points) -> list:
    out = []
    for c in cells:
        cuts = sorted({Fraction(p) for p in points if not c.is_point and c.contains(p)})
        if not cuts:
            out.append(c)
            continue
        lo = c.lo
        for p in cuts:
            out += [Cell.interval(c.chart, lo, p), Cell.point(c.chart, p)]
            lo = p
        out.append(Cell.interval(c.chart, lo, c.hi))
    return order_cells(out)


def check_cells(cells) -> None:
    cells = order_cells(cells)
    for a, b in zip(cells, cells[1:]):
        a_hi = a.hi
        b_lo = b.lo
        if a_hi is None or b_lo is None or a_hi > b_lo:
            raise ValueError(f"cells {a} and {b} overlap")
        if a_hi == b_lo and not a.is_point and not b.is_point:
            continue
        if a.is_point and b.is_point and a.lo == b.lo:
            raise ValueError(f"duplicate point cell {a}")


def breakpoints(cells) -> set:
    return {b for c in cells for b in c.endpoints()}


def locate(cells, x):
    for c in cells:
        if c.contains(x):
            return c
    return None


def same_coverage(a, b) -> bool:
    pts = breakpoints(a) | breakpoints(b)
    ra, rb = refine_cells(a, pts), refine_cells(b, pts)
    # point cells at shared boundaries may exist on one side only
    return {c.key() for c in ra} == {c.key() for c in rb}


@dataclass(frozen=True)
class Chart:
    id: str
    var: str
    cells: tuple


@dataclass(frozen=True)
class BaseComplex:
    charts: tuple

    def chart(self, cid: str) -> Chart:
        for c in self.charts:
            if c.id == cid:
                return c
        raise KeyError(cid)


class TotalGenerator:
    """Split-form plot ``(base_var, fibre_vars) -> (base_var, components)``."""

    __slots__ = ("base_var", "fibre_vars", "components", "tag")

    def __init__(self, base_var: str, fibre_vars, components, tag: str = ""):
        self.base_var = base_var
        self.fibre_vars = tuple(fibre_vars)
        self.components = tuple(RatAbsExpr.coerce(c) for c in components)
        self.tag = tag

    @property
    def dim(self) -> int:
        return len(self.components)

    def rename(self, mapping: dict) -> "TotalGenerator":
        sub = {v: RatAbsExpr.var(w) for v, w in mapping.items()}
        return TotalGenerator(
            mapping.get(self.base_var, self.base_var),
            [mapping.get(v, v) for v in self.fibre_vars],
            [substitute_rat(c, sub) for c in self.components],
            self.tag,
        )

    def defined_at(self, x) -> bool:
        """False at poles of a component: the plot's domain excludes that base point."""
        return all(
            self.base_var not in c.den.variables() or eval_at(RatAbsExpr(c.den), {self.base_var: Fraction(x)}) != 0
            for c in self.components
        )

    def on_cell(self, cell: Cell) -> GeneratorPlot:
        """Fibre plot over ``cell``; the base variable stays a parameter on intervals."""
        if cell.is_point:
            comps = [substitute_rat(c, {self.base_var: cell.q}) for c in self.components]
        else:
            ctx = cell.ctx(self.base_var)
            comps = [c.normalized(ctx) for c in self.components]
        return GeneratorPlot(self.fibre_vars, comps)

    def at(self, x) -> GeneratorPlot:
        comps = [substitute_rat(c, {self.base_var: Fraction(x)}) for c in self.components]
        return GeneratorPlot(self.fibre_vars, comps)

    def __str__(self):
        return f"({self.base_var}; {', '.join(self.fibre_vars)}) -> ({', '.join(str(c) for c in self.components)})"


def _uses_abs_of(gens, var: str) -> bool:
    return any(var in c.num.abs_variables() for g in gens for c in g.components)


class PseudoBundle:
    """A pseudo-bundle over one chart with a finitely generated total diffeology."""

    def __init__(self, var: str, cells, fibre_dim: int, generators=(), label: str = "", refine: bool = True):
        cells = order_cells(cells)
        check_cells(cells)
        if any(c.chart != var for c in cells):
            cells = [c.with_chart(var) for c in cells]
        gens = []
        for g in generators:
            if g.dim != fibre_dim:
                raise ShapeMismatch(f"generator {g} has {g.dim} components, expected {fibre_dim}")
            gens.append(_align(g, var))
        if refine and _uses_abs_of(gens, var):
            if any(c.contains(0) for c in cells):
                cells = refine_cells(cells, [0])
        if refine and gens:
            cells = refine_cells(cells, _degeneracy_points(var, cells, fibre_dim, gens))
        self.var = var
        self.cells = tuple(cells)
        self.fibre_dim = fibre_dim
        self.generators = tuple(gens)
        self.label = label
        self.subset_diffeology = "exact"
        self._fibres = {c: self._make_fibre(c) for c in self.cells}
        for sp in self._fibres.values():
            sp.dual_basis()

    @classmethod
    def standard(cls, var: str, fibre_dim: int, cells=None, label: str = "") -> "PseudoBundle":
        return cls(var, cells or line_cells(var), fibre_dim, (), label)

    def _make_fibre(self, cell: Cell) -> GeneratedVS:
        plots = [g.on_cell(cell) for g in self.generators if not cell.is_point or g.defined_at(cell.q)]
        if cell.is_point:
            return GeneratedVS(self.fibre_dim, plots, f"{self.label}[{cell}]")
        return GeneratedVS(self.fibre_dim, plots, f"{self.label}[{cell}]", (self.var,), cell.ctx())

    @property
    def base(self) -> BaseComplex:
        return BaseComplex((Chart(self.var, self.var, self.cells),))

    def locate(self, x) -> Cell:
        c = locate(self.cells, x)
        if c is None:
            raise PointOutsideBase(f"{x} is not in the base of {self.label or 'bundle'}")
        return c

    def fibre_space(self, cell: Cell) -> GeneratedVS:
        return self._fibres[cell]

    def fibre_space_at(self, x) -> GeneratedVS:
        cell = self.locate(x)
        if cell.is_point:
            return self._fibres[cell]
        return GeneratedVS(self.fibre_dim, [g.at(x) for g in self.generators if g.defined_at(x)], f"{self.label}[{_fmt(x)}]")

    def dual_basis(self, cell: Cell) -> list:
        return self._fibres[cell].dual_basis()

    def dual_dim_profile(self) -> dict:
        return {c: self._fibres[c].dual_dim() for c in self.cells}

    def profile_by_key(self) -> dict:
        return {c.key(): k for c, k in self.dual_dim_profile().items()}

    def refined(self, points) -> "PseudoBundle":
        cells = refine_cells(self.cells, points)
        if len(cells) == len(self.cells):
            return self
        out = PseudoBundle(self.var, cells, self.fibre_dim, self.generators, self.label, refine=False)
        out.subset_diffeology = self.subset_diffeology
        return out

    def renamed(self, var: str) -> "PseudoBundle":
        if var == self.var:
            return self
        gens = [_align(g, var) for g in self.generators]
        out = PseudoBundle(var, [c.with_chart(var) for c in self.cells], self.fibre_dim, gens, self.label, refine=False)
        out.subset_diffeology = self.subset_diffeology
        return out

    def probes(self) -> list:
        """Total generators plus the constant-fibre probes ``u -> (u, e_k)``."""
        out = [(g.fibre_vars, g.components, g.tag or f"gen{i}") for i, g in enumerate(self.generators)]
        for k in range(self.fibre_dim):
            unit = tuple(RatAbsExpr(int(i == k)) for i in range(self.fibre_dim))
            out.append(((), unit, f"const(e{k + 1})"))
        return out

    def structurally_equal(self, other: "PseudoBundle") -> bool:
        if (self.var, self.fibre_dim) != (other.var, other.fibre_dim):
            return False
        if [c.key() for c in self.cells] != [c.key() for c in other.cells]:
            return False
        if len(self.generators) != len(other.generators):
            return False
        for a, b in zip(self.generators, other.generators):
            if a.fibre_vars != b.fibre_vars or any(not x.equals(y) for x, y in zip(a.components, b.components)):
                return False
        return True

    def __repr__(self):
        return f"PseudoBundle({self.label!r}, base={self.var}, fibre_dim={self.fibre_dim}, cells={[c.key() for c in self.cells]})"


def _degeneracy_points(var: str, cells, fibre_dim: int, gens) -> list:
    """Rational points inside interval cells where the fibre structure may jump.

    These are roots of a maximal nonvanishing minor of the dual constraint
    system and poles of the generator components.
    """
    pts = set()
    for g in gens:
        for c in g.components:
            if var in c.den.variables():
                pts.update(rational_roots(c.den, var))
    for cell in cells:
        if cell.is_point:
            continue
        ctx = cell.ctx(var)
        V = GeneratedVS(fibre_dim, [g.on_cell(cell) for g in gens], "", (var,), ctx)
        rows = _constraint_rows(V)
        if not rows:
            continue
        m = la.maximal_minor(rows, la.ExprField(ctx))
        num = normalize(m.num, ctx)
        for r in rational_roots(num, var) if not num.has_abs() else []:
            if cell.contains(r):
                pts.add(r)
    return sorted(p for p in pts if any(c.contains(p) and not c.is_point for c in cells))


def _align(g: TotalGenerator, var: str) -> TotalGenerator:
    """Rename the base variable to ``var`` and fibre variables away from it."""
    mapping = {}
    taken = {var} | set(g.fibre_vars)
    for v in g.fibre_vars:
        if v == var:
            mapping[v] = _fresh(v, taken)
            taken.add(mapping[v])
    if g.base_var != var:
        mapping[g.base_var] = var
    return g.rename(mapping) if mapping else g


def _common_base(B1: PseudoBundle, B2: PseudoBundle):
    if B1.var != B2.var:
        B2 = B2.renamed(B1.var)
    if not same_coverage(B1.cells, B2.cells):
        raise BaseMismatch(f"bases of {B1.label} and {B2.label} differ")
    pts = breakpoints(B1.cells) | breakpoints(B2.cells)
    return B1.refined(pts), B2.refined(pts)


def _apart(g: TotalGenerator, taken: set) -> TotalGenerator:
    mapping = {}
    taken = set(taken)
    for v in g.fibre_vars:
        if v in taken:
            mapping[v] = _fresh(v, taken)
            taken.add(mapping[v])
        else:
            taken.add(v)
    return g.rename(mapping) if mapping else g


def direct_sum_bundle(B1: PseudoBundle, B2: PseudoBundle) -> PseudoBundle:
    B1, B2 = _common_base(B1, B2)
    z = RatAbsExpr(0)
    gens = [TotalGenerator(B1.var, g.fibre_vars, list(g.components) + [z] * B2.fibre_dim, g.tag) for g in B1.generators]
    gens += [TotalGenerator(B1.var, g.fibre_vars, [z] * B1.fibre_dim + list(g.components), g.tag) for g in B2.generators]
    return PseudoBundle(B1.var, B1.cells, B1.fibre_dim + B2.fibre_dim, gens, f"({B1.label} + {B2.label})")


def _kron_vec(a, b) -> list:
    return [x * y for x in a for y in b]


def _unit(k, d) -> list:
    return [RatAbsExpr(int(i == k)) for i in range(d)]


def tensor_bundle(B1: PseudoBundle, B2: PseudoBundle) -> PseudoBundle:
    B1, B2 = _common_base(B1, B2)
    x = B1.var
    gens = []
    for p in B1.generators:
        for q in B2.generators:
            q2 = _apart(q, {x} | set(p.fibre_vars))
            gens.append(TotalGenerator(x, p.fibre_vars + q2.fibre_vars, _kron_vec(p.components, q2.components)))
        for k in range(B2.fibre_dim):
            gens.append(TotalGenerator(x, p.fibre_vars, _kron_vec(p.components, _unit(k, B2.fibre_dim))))
    for q in B2.generators:
        for k in range(B1.fibre_dim):
            gens.append(TotalGenerator(x, q.fibre_vars, _kron_vec(_unit(k, B1.fibre_dim), q.components)))
    return PseudoBundle(x, B1.cells, B1.fibre_dim * B2.fibre_dim, gens, f"({B1.label} x {B2.label})")


def fibrewise_check(B: PseudoBundle, B1: PseudoBundle, B2: PseudoBundle, op) -> bool:
    """Dual dims of ``B`` agree with ``op`` applied to the factor fibres, cell by cell."""
    for c in B.cells:
        s1 = B1.refined(breakpoints(B.cells)).fibre_space(c)
        s2 = B2.refined(breakpoints(B.cells)).renamed(B.var).fibre_space(c.with_chart(B.var))
        if op(s1, s2).dual_dim() != B.fibre_space(c).dual_dim():
            return False
    return True


FIBREWISE_OPS = {"sum": direct_sum_vs, "tensor": tensor_vs}


# ---------------------------------------------------------------------------
# dual bundle view


class DualBundleView:
    """Per-cell dual fibre bases of a pseudo-bundle, with a pairing oracle."""

    def __init__(self, B: PseudoBundle):
        self.bundle = B
        self.bases = {c: B.dual_basis(c) for c in B.cells}

    def dims(self) -> dict:
        return {c: len(b) for c, b in self.bases.items()}

    def dims_by_key(self) -> dict:
        return {c.key(): len(b) for c, b in self.bases.items()}

    def pairing(self, cell: Cell, coords, gen_index: int) -> RatAbsExpr:
        """Evaluate the dual vector ``sum coords[k] * phi_k`` on a total generator over ``cell``."""
        basis = self.bases[cell]
        plot = self.bundle.generators[gen_index].on_cell(cell)
        acc = RatAbsExpr(0)
        for a, phi in zip(coords, basis):
            acc = acc + RatAbsExpr.coerce(a) * phi.apply(plot.components)
        return acc

    def as_bundle(self) -> PseudoBundle:
        """Duals of finite-dimensional fibres are standard; requires a constant dual dimension."""
        dims = set(self.dims().values())
        if len(dims) > 1:
            raise BundleError("dual fibres change dimension; no single standard model")
        k = dims.pop() if dims else 0
        return PseudoBundle(self.bundle.var, self.bundle.cells, k, (), f"{self.bundle.label}*")


def dual_bundle(B: PseudoBundle) -> DualBundleView:
    return DualBundleView(B)


# ---------------------------------------------------------------------------
# sub-bundles and quotients


class SubBundleSpec:
    """Per-cell spanning vectors of ``W`` inside each fibre."""

    def __init__(self, dim: int, spans: dict, default=None):
        self.dim = dim
        self.spans = {c: [[RatAbsExpr.coerce(a) for a in v] for v in vs] for c, vs in spans.items()}
        self.default = None if default is None else [[RatAbsExpr.coerce(a) for a in v] for v in default]
        for vs in list(self.spans.values()) + ([self.default] if self.default is not None else []):
            for v in vs:
                if len(v) != dim:
                    raise NotASubspace(f"vector of length {len(v)} in a fibre of dimension {dim}")

    @classmethod
    def uniform(cls, dim: int, vectors) -> "SubBundleSpec":
        return cls(dim, {}, list(vectors))

    @classmethod
    def zero(cls, dim: int) -> "SubBundleSpec":
        return cls.uniform(dim, [])

    @classmethod
    def full(cls, dim: int) -> "SubBundleSpec":
        return cls.uniform(dim, la.identity(dim, la.ExprField()))

    def span_at(self, cell: Cell) -> list:
        if cell in self.spans:
            return self.spans[cell]
        for c, vs in self.spans.items():
            if c.chart == cell.chart and _cell_within(cell, c):
                return vs
        if self.default is None:
            raise NotASubspace(f"no span given for cell {cell}")
        return self.default

    def basis_at(self, cell: Cell) -> list:
        vs = self.span_at(cell)
        F = la.ExprField(cell.ctx())
        vs = [[_at_cell(a, cell) for a in v] for v in vs]
        return la.row_basis(vs, F) if vs else []

    def annihilator_at(self, cell: Cell) -> list:
        """Rows ``q`` with ``q . w = 0`` for all ``w`` in W; the quotient map."""
        F = la.ExprField(cell.ctx())
        basis = self.basis_at(cell)
        if not basis:
            return la.identity(self.dim, F)
        return la.nullspace(basis, self.dim, F)

    def uniform_over(self, cells) -> bool:
        ref = None
        for c in cells:
            b = [[a for a in v] for v in self.basis_at(c)]
            if c.is_point:
                continue
            if ref is None:
                ref = b
            elif len(b) != len(ref) or not la.mat_equal(b, ref, la.ExprField()):
                return False
        return True


def _cell_within(inner: Cell, outer: Cell) -> bool:
    if outer.is_point:
        return inner.is_point and inner.lo == outer.lo
    if inner.is_point:
        return outer.contains(inner.lo)
    lo_ok = outer.lo is None or (inner.lo is not None and inner.lo >= outer.lo)
    hi_ok = outer.hi is None or (inner.hi is not None and inner.hi <= outer.hi)
    return lo_ok and hi_ok


def _at_cell(a: RatAbsExpr, cell: Cell) -> RatAbsExpr:
    if cell.is_point:
        return substitute_rat(a, {cell.chart: cell.q})
    return a.normalized(cell.ctx())


def _span_matrix_generic(W: SubBundleSpec, B: PseudoBundle):
    """The W basis valid on every interval cell (with the base variable symbolic)."""
    intervals = [c for c in B.cells if not c.is_point]
    if not W.uniform_over(intervals):
        raise NotASubspace("the subspace must be given by one formula on every interval cell")
    return W.basis_at(intervals[0]) if intervals else W.basis_at(B.cells[0])


def _check_pointwise(W: SubBundleSpec, B: PseudoBundle, generic) -> None:
    for c in B.cells:
        if len(W.basis_at(c)) != len(generic):
            raise NotASubspace(f"subspace dimension jumps at {c}")


def quotient_bundle(B: PseudoBundle, W: SubBundleSpec) -> PseudoBundle:
    if W.dim != B.fibre_dim:
        raise NotASubspace("subspace ambient dimension differs from the fibre")
    basis = _span_matrix_generic(W, B)
    _check_pointwise(W, B, basis)
    F = la.ExprField()
    Q = la.nullspace(basis, B.fibre_dim, F) if basis else la.identity(B.fibre_dim, F)
    gens = [
        TotalGenerator(g.base_var, g.fibre_vars, la.matvec(Q, list(g.components), F), g.tag)
        for g in B.generators
    ]
    out = PseudoBundle(B.var, B.cells, len(Q), gens, f"{B.label}/W", refine=False)
    out.quotient_map = Q
    return out


def sub_bundle(B: PseudoBundle, W: SubBundleSpec) -> PseudoBundle:
    """Generators of ``B`` that land in ``W``, in the coordinates of W's echelon basis."""
    if W.dim != B.fibre_dim:
        raise NotASubspace("subspace ambient dimension differs from the fibre")
    basis = _span_matrix_generic(W, B)
    _check_pointwise(W, B, basis)
    F = la.ExprField()
    _, pivots = la.rref(basis, F) if basis else ([], [])
    Q = la.nullspace(basis, B.fibre_dim, F) if basis else la.identity(B.fibre_dim, F)
    gens = []
    for g in B.generators:
        image = la.matvec(Q, list(g.components), F) if Q else []
        inside = all(
            all(normalize(v.num, c.ctx()).is_zero() for v in image) for c in B.cells if not c.is_point
        )
        if inside:
            gens.append(TotalGenerator(g.base_var, g.fibre_vars, [g.components[p] for p in pivots], g.tag))
    out = PseudoBundle(B.var, B.cells, len(basis), gens, f"{B.label}|W", refine=False)
    out.subset_diffeology = "exact" if len(basis) == B.fibre_dim else "approximate"
    out.inclusion = basis
    return out
