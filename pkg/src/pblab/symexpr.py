"""Exact polynomial expressions over Q with absolute values of single variables.

A term is ``coeff * prod(v**e) * prod(|w|)`` where every ``w`` carries
abs-exponent exactly one; ``|w|*|w|`` is folded into ``w**2`` on construction.
Rational expressions keep an abs-free denominator.
"""
from __future__ import annotations

import enum
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Monomial = tuple  # tuple[tuple[str, int], ...], sorted by variable
AbsSet = tuple  # tuple[str, ...], sorted
Key = tuple  # (Monomial, AbsSet)

Number = Union[int, Fraction]

ONE_KEY: Key = ((), ())


class SymExprError(Exception):
    pass


class SubstitutionOutOfClass(SymExprError):
    """An absolute value would be taken of a sign-indefinite composite."""


class DivisionByZero(SymExprError, ZeroDivisionError):
    pass


class Sign(enum.Enum):
    NEG = "neg"
    ZERO = "zero"
    POS = "pos"
    ANY = "any"


@dataclass(frozen=True)
class SignContext:
    """Sign assumption per variable; unlisted variables are ``ANY``."""

    signs: tuple = ()

    @classmethod
    def of(cls, mapping: Mapping[str, Sign] | None = None) -> "SignContext":
        if not mapping:
            return EMPTY_CTX
        return cls(tuple(sorted((v, Sign(s)) for v, s in mapping.items())))

    def get(self, var: str) -> Sign:
        for v, s in self.signs:
            if v == var:
                return s
        return Sign.ANY

    def with_sign(self, var: str, sign: Sign) -> "SignContext":
        d = dict(self.signs)
        d[var] = sign
        return SignContext.of(d)

    def as_dict(self) -> dict:
        return dict(self.signs)


EMPTY_CTX = SignContext()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _key_mul(k1: Key, k2: Key) -> Key:
    m = _mono_mul(k1[0], k2[0])
    a1, a2 = set(k1[1]), set(k2[1])
    both = a1 & a2
    if both:
        m = _mono_mul(m, tuple(sorted((v, 2) for v in both)))
    return (m, tuple(sorted(a1 ^ a2)))


class AbsPolyExpr:
    """Immutable sum of terms ``coeff * monomial * abs-product``."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, Number] | None = None):
        clean = {}
        if terms:
            for k, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[k] = c
        self._terms = tuple(sorted(clean.items()))
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "AbsPolyExpr":
        return cls({ONE_KEY: c})

    @classmethod
    def var(cls, name: str) -> "AbsPolyExpr":
        return cls({(((name, 1),), ()): 1})

    @classmethod
    def abs_var(cls, name: str) -> "AbsPolyExpr":
        return cls({((), (name,)): 1})

    @classmethod
    def coerce(cls, x) -> "AbsPolyExpr":
        if isinstance(x, AbsPolyExpr):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to AbsPolyExpr")

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> tuple:
        return self._terms

    def term_dict(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(k == ONE_KEY for k, _ in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def variables(self) -> frozenset:
        out = set()
        for (m, a), _ in self._terms:
            out.update(v for v, _ in m)
            out.update(a)
        return frozenset(out)

    def abs_variables(self) -> frozenset:
        out = set()
        for (_, a), _ in self._terms:
            out.update(a)
        return frozenset(out)

    def has_abs(self) -> bool:
        return any(a for (_, a), _ in self._terms)

    def degree(self, var: str | None = None) -> int:
        best = 0
        for (m, a), _ in self._terms:
            if var is None:
                d = sum(e for _, e in m) + len(a)
            else:
                d = dict(m).get(var, 0) + (1 if var in a else 0)
            best = max(best, d)
        return best

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        try:
            other = AbsPolyExpr.coerce(other)
        except TypeError:
            return NotImplemented
        d = dict(self._terms)
        for k, c in other._terms:
            d[k] = d.get(k, 0) + c
        return AbsPolyExpr(d)

    __radd__ = __add__

    def __neg__(self):
        return AbsPolyExpr({k: -c for k, c in self._terms})

    def __sub__(self, other):
        try:
            other = AbsPolyExpr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return AbsPolyExpr.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return AbsPolyExpr({k: c * other for k, c in self._terms})
        if not isinstance(other, AbsPolyExpr):
            return NotImplemented
        d: dict = {}
        for k1, c1 in self._terms:
            for k2, c2 in other._terms:
                k = _key_mul(k1, k2)
                d[k] = d.get(k, 0) + c1 * c2
        return AbsPolyExpr(d)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial expression")
        out = AbsPolyExpr.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = AbsPolyExpr.const(other)
        if not isinstance(other, AbsPolyExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __repr__(self):
        return f"AbsPolyExpr({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (key, c) in enumerate(self._terms):
            body = _key_str(key)
            mag = abs(c)
            if body and mag == 1:
                s = body
            elif body:
                s = f"{_frac_str(mag)}*{body}"
            else:
                s = _frac_str(mag)
            if i == 0:
                parts.append(("-" if c < 0 else "") + s)
            else:
                parts.append((" - " if c < 0 else " + ") + s)
        return "".join(parts)


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _key_str(key: Key) -> str:
    m, a = key
    factors = [v if e == 1 else f"{v}^{e}" for v, e in m]
    factors += [f"abs({v})" for v in a]
    return "*".join(factors)


def normalize(e: AbsPolyExpr, ctx: SignContext = EMPTY_CTX) -> AbsPolyExpr:
    """Rewrite ``|u|`` by the sign of ``u`` in ``ctx``; zero-signed variables vanish."""
    if not ctx.signs:
        return e
    signs = ctx.as_dict()
    d: dict = {}
    for (m, a), c in e.terms:
        if any(signs.get(v) is Sign.ZERO for v, _ in m) or any(signs.get(v) is Sign.ZERO for v in a):
            continue
        mono = dict(m)
        keep = []
        for v in a:
            s = signs.get(v, Sign.ANY)
            if s is Sign.POS:
                mono[v] = mono.get(v, 0) + 1
            elif s is Sign.NEG:
                mono[v] = mono.get(v, 0) + 1
                c = -c
            else:
                keep.append(v)
        k = (tuple(sorted(mono.items())), tuple(keep))
        d[k] = d.get(k, 0) + c
    return AbsPolyExpr(d)


def is_smooth(e: AbsPolyExpr, ctx: SignContext = EMPTY_CTX, over=None) -> bool:
    """True iff the normal form has no abs factor (restricted to ``over`` if given)."""
    n = normalize(e, ctx)
    if over is None:
        return not n.has_abs()
    over = set(over)
    return not any(over.intersection(a) for (_, a), _ in n.terms)


def _term_sign(mono: Monomial, absset: AbsSet, c: Fraction, signs: dict) -> str:
    """'+', '-' when the term is >= 0 / <= 0 on the context region, else '?'."""
    neg = c < 0
    for v, e in mono:
        s = signs.get(v, Sign.ANY)
        if s is Sign.NEG and e % 2:
            neg = not neg
        elif s is Sign.ANY and e % 2:
            return "?"
    return "-" if neg else "+"


def abs_of(e: AbsPolyExpr, ctx: SignContext = EMPTY_CTX) -> AbsPolyExpr:
    """``|e|`` inside the class, or ``SubstitutionOutOfClass``."""
    n = normalize(e, ctx)
    if n.is_zero():
        return n
    if len(n.terms) == 1:
        ((m, a), c), = n.terms
        out = AbsPolyExpr({((), a): abs(c)})
        for v, k in m:
            if k % 2:
                out = out * AbsPolyExpr({(((v, k - 1),) if k > 1 else (), (v,)): 1})
            else:
                out = out * AbsPolyExpr({(((v, k),), ()): 1})
        return normalize(out, ctx)
    signs = ctx.as_dict()
    tsigns = {_term_sign(m, a, c, signs) for (m, a), c in n.terms}
    if tsigns == {"+"}:
        return n
    if tsigns == {"-"}:
        return -n
    raise SubstitutionOutOfClass(f"|{n}| is not expressible: argument has no fixed sign")


def substitute(e: AbsPolyExpr, sigma: Mapping, ctx: SignContext = EMPTY_CTX) -> AbsPolyExpr:
    """Simultaneous substitution ``var -> expression | rational``, normalized."""
    sub = {v: AbsPolyExpr.coerce(x) for v, x in sigma.items()}
    pow_cache: dict = {}
    abs_cache: dict = {}

    def power(v, k):
        if (v, k) not in pow_cache:
            pow_cache[(v, k)] = sub[v] ** k if v in sub else AbsPolyExpr({(((v, k),), ()): 1})
        return pow_cache[(v, k)]

    def absval(v):
        if v not in abs_cache:
            abs_cache[v] = abs_of(sub[v], ctx) if v in sub else AbsPolyExpr.abs_var(v)
        return abs_cache[v]

    out = AbsPolyExpr()
    for (m, a), c in e.terms:
        t = AbsPolyExpr.const(c)
        for v, k in m:
            t = t * power(v, k)
        for v in a:
            t = t * absval(v)
        out = out + t
    return normalize(out, ctx)


def _eval_poly(e: AbsPolyExpr, point: Mapping) -> Fraction:
    total = Fraction(0)
    for (m, a), c in e.terms:
        t = c
        for v, k in m:
            t *= Fraction(point[v]) ** k
        for v in a:
            t *= abs(Fraction(point[v]))
        total += t
    return total


def _point_map(e, point) -> Mapping:
    if isinstance(point, Mapping):
        return point
    names = sorted(e.variables())
    if len(point) != len(names):
        raise ValueError(f"expected {len(names)} coordinates for variables {names}")
    return dict(zip(names, point))


# ---------------------------------------------------------------------------
# univariate helpers (coefficient lists, lowest degree first)


def _to_univariate(e: AbsPolyExpr, var: str) -> list | None:
    coeffs: dict = {}
    for (m, a), c in e.terms:
        if a:
            return None
        md = dict(m)
        k = md.pop(var, 0)
        if md:
            return None
        coeffs[k] = coeffs.get(k, 0) + c
    if not coeffs:
        return []
    return [Fraction(coeffs.get(i, 0)) for i in range(max(coeffs) + 1)]


def _from_univariate(coeffs: Sequence, var: str) -> AbsPolyExpr:
    return AbsPolyExpr({((((var, i),) if i else ()), ()): c for i, c in enumerate(coeffs)})


def _trim(p: list) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _udivmod(a: list, b: list) -> tuple:
    a, b = _trim(a), _trim(b)
    if not b:
        raise ZeroDivisionError
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    while len(_trim(r)) >= len(b):
        r = _trim(r)
        shift = len(r) - len(b)
        f = r[-1] / b[-1]
        q[shift] = f
        for i, c in enumerate(b):
            r[i + shift] -= f * c
    return _trim(q), _trim(r)


def _ugcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _udivmod(a, b)
        a, b = b, r
    if not a:
        return a
    lead = a[-1]
    return [c / lead for c in a]


def _split_coeffs(e: AbsPolyExpr, var: str) -> dict | None:
    """Group terms by the factor free of ``var``; values are univariate in ``var``."""
    groups: dict = {}
    for (m, a), c in e.terms:
        if var in a:
            return None
        md = dict(m)
        k = md.pop(var, 0)
        rest = (tuple(sorted(md.items())), a)
        poly = groups.setdefault(rest, {})
        poly[k] = poly.get(k, 0) + c
    return {rest: [Fraction(p.get(i, 0)) for i in range(max(p) + 1)] for rest, p in groups.items()}


def _cancel(num: AbsPolyExpr, den: AbsPolyExpr) -> tuple:
    if den.is_zero():
        raise DivisionByZero("zero denominator")
    if num.is_zero():
        return AbsPolyExpr(), AbsPolyExpr.const(1)
    if den.is_constant():
        return num * (1 / den.constant_value()), AbsPolyExpr.const(1)
    # common monomial factor
    common = None
    for (m, _), _ in num.terms + den.terms:
        md = dict(m)
        if common is None:
            common = md
        else:
            common = {v: min(e, md[v]) for v, e in common.items() if v in md}
        if not common:
            break
    if common:
        def strip(e):
            out = {}
            for (m, a), c in e.terms:
                md = dict(m)
                for v, k in common.items():
                    md[v] -= k
                out[(tuple(sorted((v, k) for v, k in md.items() if k)), a)] = c
            return AbsPolyExpr(out)
        num, den = strip(num), strip(den)
    dvars = den.variables()
    if len(dvars) == 1 and not den.has_abs():
        (var,) = dvars
        dpoly = _to_univariate(den, var)
        groups = _split_coeffs(num, var)
        if groups is not None:
            g = dpoly
            for p in groups.values():
                g = _ugcd(g, p)
                if len(g) <= 1:
                    break
            if len(g) > 1:
                dq, _ = _udivmod(dpoly, g)
                new = AbsPolyExpr()
                for (m, a), p in groups.items():
                    pq, _ = _udivmod(p, g)
                    new = new + AbsPolyExpr({(m, a): 1}) * _from_univariate(pq, var)
                num, den = new, _from_univariate(dq, var)
    if den.is_constant():
        return num * (1 / den.constant_value()), AbsPolyExpr.const(1)
    lead = den.terms[-1][1]
    if lead != 1:
        num, den = num * (1 / lead), den * (1 / lead)
    return num, den


def _rationalize(num: AbsPolyExpr, den: AbsPolyExpr) -> tuple:
    """Multiply by conjugates until the denominator is abs-free."""
    while den.has_abs():
        w = sorted(den.abs_variables())[0]
        with_w, without = {}, {}
        for (m, a), c in den.terms:
            if w in a:
                with_w[(m, tuple(v for v in a if v != w))] = c
            else:
                without[(m, a)] = c
        conj = AbsPolyExpr(without) - AbsPolyExpr(with_w) * AbsPolyExpr.abs_var(w)
        if conj.is_zero():
            raise DivisionByZero(f"cannot clear |{w}| from denominator {den}")
        new_den = den * conj
        if new_den.is_zero():
            raise DivisionByZero(f"denominator {den} vanishes on one side of {w} = 0")
        num, den = num * conj, new_den
    return num, den


class RatAbsExpr:
    """``num / den`` with ``den`` abs-free and nonzero."""

    __slots__ = ("num", "den", "den_positive")

    def __init__(self, num, den=1, den_positive: bool = False):
        if isinstance(num, RatAbsExpr) or isinstance(den, RatAbsExpr):
            q = RatAbsExpr.coerce(num) / RatAbsExpr.coerce(den)
            num, den = q.num, q.den
        num = AbsPolyExpr.coerce(num)
        den = AbsPolyExpr.coerce(den)
        if den.is_zero():
            raise DivisionByZero("zero denominator")
        if den.has_abs():
            num, den = _rationalize(num, den)
        num, den = _cancel(num, den)
        self.num = num
        self.den = den
        self.den_positive = den_positive or den.is_constant()

    @classmethod
    def coerce(cls, x) -> "RatAbsExpr":
        if isinstance(x, RatAbsExpr):
            return x
        return cls(AbsPolyExpr.coerce(x))

    @classmethod
    def var(cls, name: str) -> "RatAbsExpr":
        return cls(AbsPolyExpr.var(name))

    def is_polynomial(self) -> bool:
        return self.den == AbsPolyExpr.const(1)

    def is_zero(self, ctx: SignContext = EMPTY_CTX) -> bool:
        return normalize(self.num, ctx).is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def variables(self) -> frozenset:
        return self.num.variables() | self.den.variables()

    def normalized(self, ctx: SignContext = EMPTY_CTX) -> "RatAbsExpr":
        if not ctx.signs:
            return self
        return RatAbsExpr(normalize(self.num, ctx), normalize(self.den, ctx), self.den_positive)

    def equals(self, other, ctx: SignContext = EMPTY_CTX) -> bool:
        other = RatAbsExpr.coerce(other)
        return normalize(self.num * other.den - other.num * self.den, ctx).is_zero()

    def assert_den_positive(self, points) -> "RatAbsExpr":
        """Check the denominator is > 0 at each sample point; returns a flagged copy."""
        for p in points:
            if _eval_poly(self.den, _point_map(self.den, p)) <= 0:
                raise ValueError(f"denominator {self.den} is not positive at {p}")
        out = RatAbsExpr(self.num, self.den)
        out.den_positive = True
        return out

    def __add__(self, other):
        try:
            other = RatAbsExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if self.den == other.den:
            return RatAbsExpr(self.num + other.num, self.den)
        return RatAbsExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatAbsExpr(-self.num, self.den)

    def __sub__(self, other):
        try:
            other = RatAbsExpr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return RatAbsExpr.coerce(other) - self

    def __mul__(self, other):
        try:
            other = RatAbsExpr.coerce(other)
        except TypeError:
            return NotImplemented
        return RatAbsExpr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatAbsExpr.coerce(other)
        if other.num.is_zero():
            raise DivisionByZero("division by zero expression")
        return RatAbsExpr(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatAbsExpr.coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return RatAbsExpr(1) / (self ** (-n))
        return RatAbsExpr(self.num ** n, self.den ** n)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, AbsPolyExpr)):
            other = RatAbsExpr.coerce(other)
        if not isinstance(other, RatAbsExpr):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        return f"RatAbsExpr({str(self)!r})"

    def __str__(self):
        if self.is_polynomial():
            return str(self.num)
        return f"({self.num})/({self.den})"


def as_rat(x) -> RatAbsExpr:
    return RatAbsExpr.coerce(x)


def eval_at(e, point) -> Fraction:
    """Exact value at a rational point (mapping, or sequence in sorted-variable order)."""
    if isinstance(e, (int, Fraction)):
        return Fraction(e)
    if isinstance(e, AbsPolyExpr):
        return _eval_poly(e, _point_map(e, point))
    pm = _point_map(_vars_expr(e), point)
    d = _eval_poly(e.den, pm)
    if d == 0:
        raise DivisionByZero(f"denominator {e.den} vanishes at {dict(pm)}")
    return _eval_poly(e.num, pm) / d


def _vars_expr(e: RatAbsExpr) -> AbsPolyExpr:
    # a polynomial whose variable set is that of e (for positional points)
    out = AbsPolyExpr()
    for v in e.variables():
        out = out + AbsPolyExpr.var(v)
    return out


def substitute_rat(e, sigma: Mapping, ctx: SignContext = EMPTY_CTX) -> RatAbsExpr:
    """Substitute rational expressions into a rational expression.

    Each substituted variable ``t -> a/b`` is cleared by multiplying numerator and
    denominator by ``b**D`` with ``D`` the larger ``t``-degree.
    """
    e = RatAbsExpr.coerce(e)
    num, den = e.num, e.den
    poly_sub = {}
    for v, x in sigma.items():
        x = RatAbsExpr.coerce(x)
        if x.is_polynomial():
            poly_sub[v] = x.num
            continue
        if v in num.abs_variables():
            # |a/b| = |a|/|b|; only in class when b has a fixed sign on ctx
            b_abs = abs_of(x.den, ctx)
            if b_abs == x.den or b_abs == -x.den:
                sign = 1 if b_abs == x.den else -1
                a_abs = abs_of(x.num, ctx)
                num, den = _clear_var(num, den, v, x.num, x.den, ctx, a_abs * sign)
                continue
            raise SubstitutionOutOfClass(f"|{x}| has a sign-indefinite denominator")
        num, den = _clear_var(num, den, v, x.num, x.den, ctx, None)
    if poly_sub:
        num = substitute(num, poly_sub, ctx)
        den = substitute(den, poly_sub, ctx)
    return RatAbsExpr(normalize(num, ctx), normalize(den, ctx))


def _clear_var(num, den, v, a, b, ctx, abs_num):
    """Substitute ``v -> a/b`` (and ``|v| -> abs_num/b`` when given) into num/den."""
    D = max(num.degree(v), den.degree(v))

    def clear(p):
        out = AbsPolyExpr()
        for (m, ab), c in p.terms:
            md = dict(m)
            k = md.pop(v, 0)
            has_abs = v in ab
            rest_abs = tuple(x for x in ab if x != v)
            base = AbsPolyExpr({(tuple(sorted(md.items())), rest_abs): c})
            deg = k + (1 if has_abs else 0)
            factor = (a ** k) * (b ** (D - deg))
            if has_abs:
                factor = factor * abs_num
            out = out + base * factor
        return out

    return normalize(clear(num), ctx), normalize(clear(den), ctx)


def _divisors(n: int) -> list:
    n = abs(n)
    out = set()
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.update((i, n // i))
        i += 1
    return sorted(out)


def rational_roots(e: AbsPolyExpr, var: str) -> list:
    """Distinct rational roots of a univariate abs-free polynomial in ``var``."""
    coeffs = _to_univariate(e, var)
    if coeffs is None:
        raise ValueError(f"{e} is not a univariate polynomial in {var}")
    coeffs = _trim(coeffs)
    if len(coeffs) <= 1:
        return []
    roots = []
    k = 0
    while coeffs[k] == 0:
        k += 1
    if k:
        roots.append(Fraction(0))
    coeffs = coeffs[k:]
    if len(coeffs) <= 1:
        return roots
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // _gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            for s in (1, -1):
                r = Fraction(s * p, q)
                if r not in roots and sum(c * r ** i for i, c in enumerate(ints)) == 0:
                    roots.append(r)
    return sorted(roots)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _shift(coeffs: list, a: Fraction, s: int) -> list:
    """Coefficients in ``h`` of ``p(a + s*h)``."""
    from math import comb

    n = len(coeffs)
    out = [Fraction(0)] * n
    for i, c in enumerate(coeffs):
        if not c:
            continue
        for j in range(i + 1):
            out[j] += c * comb(i, j) * a ** (i - j) * s ** j
    return out


INF = float("inf")


def univariate_limit(e: RatAbsExpr, var: str, at=None, side: int = 1, ctx: SignContext = EMPTY_CTX):
    """Limit of a univariate rational expression.

    ``at=None`` means ``side * infinity``; otherwise the one-sided limit at the
    rational ``at`` from ``side`` (+1 right, -1 left). Infinite limits are
    returned as ``float('inf')`` or ``-float('inf')``.
    """
    e = e.normalized(ctx)
    n = _to_univariate(normalize(e.num, ctx), var)
    d = _to_univariate(e.den, var)
    if n is None or d is None:
        raise ValueError(f"{e} is not a univariate rational function of {var}")
    n, d = _trim(n), _trim(d)
    if not n:
        return Fraction(0)
    if at is None:
        dn, dd = len(n) - 1, len(d) - 1
        ratio = n[-1] / d[-1]
        if dn < dd:
            return Fraction(0)
        if dn == dd:
            return ratio
        sgn = 1 if ratio > 0 else -1
        if side < 0 and (dn - dd) % 2:
            sgn = -sgn
        return sgn * INF
    a = Fraction(at)
    ns, ds = _shift(n, a, side), _shift(d, a, side)
    kn = next(i for i, c in enumerate(ns) if c)
    kd = next(i for i, c in enumerate(ds) if c)
    if kn > kd:
        return Fraction(0)
    ratio = ns[kn] / ds[kd]
    if kn == kd:
        return ratio
    return INF if ratio > 0 else -INF
