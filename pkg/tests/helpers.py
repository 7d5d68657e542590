"""Shared test helpers: an independent numeric smoothness oracle and random inputs."""
from __future__ import annotations

import random
import re
from fractions import Fraction

VARS = ("x", "y", "z")


# ---------------------------------------------------------------------------
# random expressions as text


def random_term(rng: random.Random, vars_, max_degree: int, abs_budget: int) -> tuple:
    """One signed monomial; returns (text, abs factors used)."""
    num = rng.randint(1, 9)
    den = rng.choice([1, 1, 1, 2, 3])
    coeff = f"{num}/{den}" if den > 1 else str(num)
    deg = rng.randint(0, max_degree)
    factors, used = [], 0
    for _ in range(deg):
        v = rng.choice(vars_)
        if used < abs_budget and rng.random() < 0.35:
            factors.append(f"abs({v})")
            used += 1
        else:
            factors.append(v)
    text = "*".join([coeff] + factors)
    return text, used


def random_expression(rng: random.Random, nvars: int = 3, max_degree: int = 4, max_abs: int = 2, max_terms: int = 4) -> str:
    """Sum of signed terms in at most ``nvars`` variables, total degree at most
    ``max_degree`` and at most ``max_abs`` abs factors overall."""
    vars_ = VARS[:nvars]
    budget = max_abs
    parts = []
    for i in range(rng.randint(1, max_terms)):
        t, used = random_term(rng, vars_, max_degree, budget)
        budget -= used
        sign = rng.choice(["+", "-"])
        parts.append(("-" if sign == "-" else "") + t if i == 0 else f" {sign} {t}")
    return "".join(parts)


# ---------------------------------------------------------------------------
# the oracle: Python evaluation with Fraction and abs, no symbolic algebra

_NUM = re.compile(r"\d+")


def compile_text(text: str):
    """Evaluate an expression text as a Python function of a point dict."""
    py = _NUM.sub(lambda m: f"F({m.group(0)})", text).replace("^", "**")
    code = compile(py, "<expr>", "eval")

    def f(point: dict) -> Fraction:
        env = {"F": Fraction, "abs": abs}
        env.update(point)
        return eval(code, env)

    return f


def central_difference(g, order: int, h: Fraction) -> Fraction:
    """``order``-th central difference of ``g`` at 0 divided by ``h^order``."""
    from math import comb

    total = Fraction(0)
    for i in range(order + 1):
        t = (Fraction(order, 2) - i) * h
        total += (-1) ** i * comb(order, i) * g(t)
    return total / h**order


def diverges(g, h: Fraction = Fraction(1, 64), orders=range(1, 9)) -> bool:
    """Some difference quotient grows at least 10x when the step shrinks 4x."""
    for k in orders:
        coarse = central_difference(g, k, h)
        fine = central_difference(g, k, h / 4)
        if fine != 0 and abs(fine) >= 10 * abs(coarse) and abs(fine) > Fraction(1, 10**6):
            return True
    return False


def numeric_smooth(text: str, rng: random.Random, vars_=VARS, trials: int = 2) -> bool:
    """Numeric verdict: probe every abs hyperplane along its normal direction."""
    f = compile_text(text)
    abs_vars = sorted(set(re.findall(r"abs\((\w+)\)", text)))
    for v in abs_vars:
        for _ in range(trials):
            base = {w: Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 7)) for w in vars_}
            base[v] = Fraction(0)

            def g(t, base=base, v=v):
                p = dict(base)
                p[v] = t
                return f(p)

            if diverges(g):
                return False
    return True


# ---------------------------------------------------------------------------
# random matrices


def random_rational(rng: random.Random, lo: int = -5, hi: int = 5) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 4))


def random_psd(rng: random.Random, n: int, rank: int | None = None) -> tuple:
    """``sum c_k v_k v_k^T`` with positive ``c_k``; returns (matrix, [(c, v)])."""
    rank = n if rank is None else rank
    terms = []
    for _ in range(rank):
        c = Fraction(rng.randint(1, 5), rng.randint(1, 3))
        v = [random_rational(rng) for _ in range(n)]
        terms.append((c, v))
    M = [[sum(c * v[i] * v[j] for c, v in terms) for j in range(n)] for i in range(n)]
    return M, terms
