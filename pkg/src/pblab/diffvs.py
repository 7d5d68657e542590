"""Finite-dimensional vector spaces with a diffeology generated by finitely many plots.

Generators may carry parameters (a base coordinate when the space is a fibre);
smoothness is always judged in the domain variables only, with parameters held
fixed on a region described by the sign context.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import linalg as la
from .symexpr import (
    EMPTY_CTX,
    AbsPolyExpr,
    RatAbsExpr,
    Sign,
    SignContext,
    eval_at,
    is_smooth,
    normalize,
    substitute_rat,
)

PSD_SAMPLES = 50


class DiffVSError(Exception):
    pass


class ShapeMismatch(DiffVSError):
    pass


@dataclass(frozen=True)
class GeneratorPlot:
    domain_vars: tuple
    components: tuple

    def __init__(self, domain_vars, components):
        object.__setattr__(self, "domain_vars", tuple(domain_vars))
        object.__setattr__(self, "components", tuple(RatAbsExpr.coerce(c) for c in components))

    @property
    def dim(self) -> int:
        return len(self.components)

    def is_zero(self, ctx: SignContext = EMPTY_CTX) -> bool:
        return all(c.is_zero(ctx) for c in self.components)

    def rename(self, mapping: dict) -> "GeneratorPlot":
        sub = {v: RatAbsExpr.var(w) for v, w in mapping.items()}
        return GeneratorPlot(
            [mapping.get(v, v) for v in self.domain_vars],
            [substitute_rat(c, sub) for c in self.components],
        )

    def __eq__(self, other):
        if not isinstance(other, GeneratorPlot):
            return NotImplemented
        return self.domain_vars == other.domain_vars and all(
            a.equals(b) for a, b in zip(self.components, other.components)
        ) and len(self.components) == len(other.components)

    __hash__ = None

    def __str__(self):
        return f"({', '.join(self.domain_vars)}) -> ({', '.join(str(c) for c in self.components)})"


class GeneratedVS:
    """``R^dim`` with the vector-space diffeology generated by ``generators``."""

    def __init__(self, dim: int, generators=(), label: str = "", params=(), ctx: SignContext = EMPTY_CTX):
        if dim < 0:
            raise ValueError("dimension must be non-negative")
        gens = []
        for g in generators:
            if g.dim != dim:
                raise ShapeMismatch(f"generator {g} has {g.dim} components, expected {dim}")
            used = set().union(*(c.variables() for c in g.components)) if g.components else set()
            stray = used - set(g.domain_vars) - set(params)
            if stray:
                raise ValueError(f"generator {g} uses undeclared variables {sorted(stray)}")
            if not g.is_zero(ctx):
                gens.append(g)
        self.dim = dim
        self.generators = tuple(gens)
        self.label = label
        self.params = tuple(params)
        self.ctx = ctx
        self._dual = None

    @classmethod
    def standard(cls, dim: int, label: str = "") -> "GeneratedVS":
        return cls(dim, (), label or f"R^{dim}")

    @property
    def field(self):
        return la.ExprField(self.ctx)

    def is_standard(self) -> bool:
        return not self.generators

    def at_params(self, values: dict) -> "GeneratedVS":
        """Fix parameter values; the result is parameter-free."""
        sub = {p: Fraction(values[p]) for p in self.params}
        gens = [
            GeneratorPlot(g.domain_vars, [substitute_rat(c, sub) for c in g.components])
            for g in self.generators
        ]
        return GeneratedVS(self.dim, gens, self.label)

    def dual_basis(self) -> list:
        if self._dual is None:
            self._dual = dual_basis(self)
        return self._dual

    def dual_dim(self) -> int:
        return len(self.dual_basis())

    def __repr__(self):
        return f"GeneratedVS(dim={self.dim}, generators={len(self.generators)}, label={self.label!r})"


@dataclass(frozen=True)
class Functional:
    coeffs: tuple

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(RatAbsExpr.coerce(c) for c in coeffs))

    def __len__(self):
        return len(self.coeffs)

    def apply(self, vec) -> RatAbsExpr:
        acc = RatAbsExpr(0)
        for c, v in zip(self.coeffs, vec):
            acc = acc + c * RatAbsExpr.coerce(v)
        return acc

    def as_fractions(self) -> list:
        return [c.constant_value() for c in self.coeffs]

    def __eq__(self, other):
        if not isinstance(other, Functional):
            return NotImplemented
        return len(self) == len(other) and all(a.equals(b) for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    def __str__(self):
        return "[" + ", ".join(str(c) for c in self.coeffs) + "]"


@dataclass
class BilinearForm:
    matrix: list
    sos: list | None = None  # [(coefficient, Functional), ...]

    def __post_init__(self):
        self.matrix = [[RatAbsExpr.coerce(a) for a in row] for row in self.matrix]
        n = len(self.matrix)
        if any(len(row) != n for row in self.matrix):
            raise ShapeMismatch("bilinear form matrix must be square")
        if self.sos is not None:
            self.sos = [(RatAbsExpr.coerce(c), phi) for c, phi in self.sos]

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @classmethod
    def from_sos(cls, terms) -> "BilinearForm":
        terms = list(terms)
        return cls(sos_matrix(terms, len(terms[0][1]) if terms else 0), terms)

    def is_symmetric(self, ctx: SignContext = EMPTY_CTX) -> bool:
        return la.is_symmetric(self.matrix, la.ExprField(ctx))

    def sos_verified(self, ctx: SignContext = EMPTY_CTX, points=()) -> bool:
        """The certificate reproduces the matrix and its coefficients are positive at ``points``."""
        if self.sos is None:
            return False
        if not la.mat_equal(sos_matrix(self.sos, self.dim), self.matrix, la.ExprField(ctx)):
            return False
        for c, _ in self.sos:
            if c.is_constant():
                if c.constant_value() <= 0:
                    return False
            else:
                for p in points:
                    if eval_at(c, p) <= 0:
                        return False
        return True

    def evaluate(self, u, v) -> RatAbsExpr:
        acc = RatAbsExpr(0)
        for i, row in enumerate(self.matrix):
            for j, a in enumerate(row):
                acc = acc + a * RatAbsExpr.coerce(u[i]) * RatAbsExpr.coerce(v[j])
        return acc


def sos_matrix(terms, dim: int) -> list:
    M = [[RatAbsExpr(0) for _ in range(dim)] for _ in range(dim)]
    for c, phi in terms:
        for i in range(dim):
            for j in range(dim):
                M[i][j] = M[i][j] + c * phi.coeffs[i] * phi.coeffs[j]
    return M


# ---------------------------------------------------------------------------
# smoothness of linear and bilinear evaluations


def split_by_vars(e: AbsPolyExpr, vars_) -> dict:
    """Group terms by their part in ``vars_``; values are expressions in the rest."""
    vs = set(vars_)
    out: dict = {}
    for (m, a), c in e.terms:
        km = tuple((v, k) for v, k in m if v in vs)
        ka = tuple(v for v in a if v in vs)
        rm = tuple((v, k) for v, k in m if v not in vs)
        ra = tuple(v for v in a if v not in vs)
        out.setdefault((km, ka), {})[(rm, ra)] = c
    return {k: AbsPolyExpr(v) for k, v in out.items()}


def smooth_in(e, vars_, ctx: SignContext = EMPTY_CTX) -> bool:
    """Smoothness of a rational expression in ``vars_`` with other variables frozen."""
    e = RatAbsExpr.coerce(e)
    return is_smooth(normalize(e.num, ctx), ctx, over=vars_)


def _combine(coeffs, comps):
    """Numerator of ``sum coeffs[i] * comps[i]`` over the common denominator."""
    acc = RatAbsExpr(0)
    for c, p in zip(coeffs, comps):
        acc = acc + RatAbsExpr.coerce(c) * p
    return acc


def _constraint_rows(V: GeneratedVS) -> list:
    """Rows ``r`` with ``r . a = 0`` iff ``sum a_i p_i`` has no abs term, per generator."""
    F = V.field
    rows = []
    for g in V.generators:
        # clear denominators: multiply each numerator by the other distinct denominators
        dens = []
        for c in g.components:
            if all(c.den != d for d in dens):
                dens.append(c.den)
        nums = []
        for c in g.components:
            n = c.num
            for d in dens:
                if d != c.den:
                    n = n * d
            nums.append(normalize(n, V.ctx))
        splits = [split_by_vars(n, g.domain_vars) for n in nums]
        keys = sorted({k for s in splits for k in s if k[1]})
        for k in keys:
            row = [F.norm(RatAbsExpr(s.get(k, AbsPolyExpr()))) for s in splits]
            if any(not F.is_zero(a) for a in row):
                rows.append(row)
    return rows


def dual_basis(V: GeneratedVS) -> list:
    """Canonical basis of the smooth linear functionals."""
    F = V.field
    rows = _constraint_rows(V)
    if not rows:
        basis = la.identity(V.dim, F)
    else:
        basis = la.nullspace(rows, V.dim, F)
    return [Functional(b) for b in basis]


def is_smooth_functional(V: GeneratedVS, phi: Functional) -> bool:
    if len(phi) != V.dim:
        raise ShapeMismatch("functional length differs from dimension")
    return all(smooth_in(_combine(phi.coeffs, g.components), g.domain_vars, V.ctx) for g in V.generators)


def _fresh(name: str, taken: set) -> str:
    i = 2
    while f"{name}{i}" in taken:
        i += 1
    return f"{name}{i}"


def rename_apart(g: GeneratorPlot, taken: set) -> GeneratorPlot:
    mapping = {}
    taken = set(taken)
    for v in g.domain_vars:
        if v in taken:
            mapping[v] = _fresh(v, taken)
            taken.add(mapping[v])
        else:
            taken.add(v)
    return g.rename(mapping) if mapping else g


def _unit(k: int, d: int) -> list:
    return [RatAbsExpr(1) if i == k else RatAbsExpr(0) for i in range(d)]


def bilinear_probe_pairs(V: GeneratedVS):
    """Ordered pairs (vars, left, right) on which a smooth bilinear form must be smooth."""
    taken = set(V.params)
    for p in V.generators:
        for q in V.generators:
            q2 = rename_apart(q, taken | set(p.domain_vars))
            yield p.domain_vars + q2.domain_vars, p.components, q2.components
        for k in range(V.dim):
            yield p.domain_vars, p.components, _unit(k, V.dim)
            yield p.domain_vars, _unit(k, V.dim), p.components


def bilinear_eval(M, left, right) -> RatAbsExpr:
    acc = RatAbsExpr(0)
    for i, row in enumerate(M):
        if left[i].is_zero():
            continue
        for j, a in enumerate(row):
            if a.is_zero() or right[j].is_zero():
                continue
            acc = acc + a * left[i] * right[j]
    return acc


def is_smooth_bilinear(V: GeneratedVS, B: BilinearForm) -> bool:
    if B.dim != V.dim:
        raise ShapeMismatch("form dimension differs from space dimension")
    for vars_, left, right in bilinear_probe_pairs(V):
        if not smooth_in(bilinear_eval(B.matrix, left, right), vars_, V.ctx):
            return False
    return True


def construct_pseudometric_vs(V: GeneratedVS) -> BilinearForm:
    terms = [(RatAbsExpr(1), phi) for phi in V.dual_basis()]
    if not terms:
        return BilinearForm([[RatAbsExpr(0)] * V.dim for _ in range(V.dim)], [])
    return BilinearForm(sos_matrix(terms, V.dim), terms)


@dataclass
class Verdict:
    symmetric: bool
    smooth: bool
    psd: str  # "exact" | "probabilistic" | "fails"
    rank: int
    dual_dim: int
    witness: list | None = None

    @property
    def rank_ok(self) -> bool:
        return self.rank == self.dual_dim

    @property
    def passed(self) -> bool:
        return self.symmetric and self.smooth and self.psd != "fails" and self.rank_ok

    def as_dict(self) -> dict:
        out = {
            "symmetric": self.symmetric,
            "smooth": self.smooth,
            "psd": self.psd,
            "rank": self.rank,
            "dual_dim": self.dual_dim,
            "rank_ok": self.rank_ok,
            "passed": self.passed,
        }
        if self.witness is not None:
            out["psd_witness"] = [str(x) for x in self.witness]
        return out


def sample_param_point(params, ctx: SignContext, rng: random.Random) -> dict:
    out = {}
    for p in params:
        s = ctx.get(p)
        mag = Fraction(rng.randint(1, 40), rng.randint(1, 8))
        if s is Sign.ZERO:
            out[p] = Fraction(0)
        elif s is Sign.NEG:
            out[p] = -mag
        elif s is Sign.POS:
            out[p] = mag
        else:
            out[p] = mag if rng.random() < 0.5 else -mag
    return out


def psd_check(M, params=(), ctx: SignContext = EMPTY_CTX, sos_ok: bool = False, seed: int = 0):
    """('exact'|'probabilistic'|'fails', witness)."""
    if sos_ok:
        return "exact", None
    if all(a.is_constant() for row in M for a in row):
        C = [[a.constant_value() for a in row] for row in M]
        if la.psd_exact(C):
            return "exact", None
        return "fails", _negative_direction(C, random.Random(seed))
    rng = random.Random(seed)
    n = len(M)
    for _ in range(PSD_SAMPLES):
        pt = sample_param_point(params, ctx, rng)
        v = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(n)]
        try:
            C = la.evaluate_matrix(M, pt)
        except ZeroDivisionError:
            continue
        if la.quad_form(C, v) < 0:
            return "fails", [pt.get(p) for p in params] + v
    return "probabilistic", None


def _negative_direction(C, rng) -> list:
    n = len(C)
    for i in range(n):
        if C[i][i] < 0:
            return [Fraction(int(i == k)) for k in range(n)]
    for _ in range(2000):
        v = [Fraction(rng.randint(-9, 9)) for _ in range(n)]
        if la.quad_form(C, v) < 0:
            return v
    return []


def is_pseudometric_vs(V: GeneratedVS, B: BilinearForm, seed: int = 0) -> Verdict:
    if B.dim != V.dim:
        raise ShapeMismatch("form dimension differs from space dimension")
    F = V.field
    sym = B.is_symmetric(V.ctx)
    smooth = is_smooth_bilinear(V, B)
    mode, witness = psd_check(B.matrix, V.params, V.ctx, B.sos_verified(V.ctx), seed)
    return Verdict(sym, smooth, mode, la.rank(B.matrix, F), V.dual_dim(), witness)


# ---------------------------------------------------------------------------
# direct sums and tensor products


def direct_sum_vs(V: GeneratedVS, W: GeneratedVS) -> GeneratedVS:
    zero = RatAbsExpr(0)
    gens = [GeneratorPlot(p.domain_vars, list(p.components) + [zero] * W.dim) for p in V.generators]
    gens += [GeneratorPlot(q.domain_vars, [zero] * V.dim + list(q.components)) for q in W.generators]
    params = tuple(dict.fromkeys(V.params + W.params))
    return GeneratedVS(V.dim + W.dim, gens, f"({V.label} + {W.label})", params, _merge_ctx(V.ctx, W.ctx))


def _tensor_components(a, b) -> list:
    return [x * y for x in a for y in b]


def tensor_vs(V: GeneratedVS, W: GeneratedVS) -> GeneratedVS:
    params = tuple(dict.fromkeys(V.params + W.params))
    gens = []
    for p in V.generators:
        for q in W.generators:
            q2 = rename_apart(q, set(params) | set(p.domain_vars))
            gens.append(GeneratorPlot(p.domain_vars + q2.domain_vars, _tensor_components(p.components, q2.components)))
        for k in range(W.dim):
            gens.append(GeneratorPlot(p.domain_vars, _tensor_components(p.components, _unit(k, W.dim))))
    for q in W.generators:
        for k in range(V.dim):
            gens.append(GeneratorPlot(q.domain_vars, _tensor_components(_unit(k, V.dim), q.components)))
    return GeneratedVS(V.dim * W.dim, gens, f"({V.label} x {W.label})", params, _merge_ctx(V.ctx, W.ctx))


def _merge_ctx(a: SignContext, b: SignContext) -> SignContext:
    d = a.as_dict()
    for v, s in b.as_dict().items():
        if v in d and d[v] is not s:
            raise ValueError(f"conflicting sign assumptions on {v}")
        d[v] = s
    return SignContext.of(d)
