"""Exact linear algebra over Q and over rational expressions with a sign context.

Matrices are lists of rows. Entries are ``Fraction`` for ``QQ`` and
``RatAbsExpr`` for ``ExprField``; every routine takes the field explicitly.
"""
from __future__ import annotations

from fractions import Fraction

from .symexpr import EMPTY_CTX, RatAbsExpr, SignContext, eval_at


class QQ_:
    zero = Fraction(0)
    one = Fraction(1)

    def coerce(self, a):
        if isinstance(a, RatAbsExpr):
            return a.constant_value()
        return Fraction(a)

    def is_zero(self, a) -> bool:
        return a == 0

    def norm(self, a):
        return a

    def weight(self, a) -> int:
        return 0


QQ = QQ_()


class ExprField:
    """Rational expressions, zero-tested after normalizing under ``ctx``."""

    def __init__(self, ctx: SignContext = EMPTY_CTX):
        self.ctx = ctx
        self.zero = RatAbsExpr(0)
        self.one = RatAbsExpr(1)

    def coerce(self, a):
        return self.norm(RatAbsExpr.coerce(a))

    def is_zero(self, a) -> bool:
        return RatAbsExpr.coerce(a).is_zero(self.ctx)

    def norm(self, a):
        return RatAbsExpr.coerce(a).normalized(self.ctx)

    def weight(self, a) -> int:
        # prefer simple pivots: fewer terms keeps intermediate expressions small
        return len(a.num.terms) + len(a.den.terms)


def coerce_matrix(M, field=QQ):
    return [[field.coerce(a) for a in row] for row in M]


def zeros(n, m, field=QQ):
    return [[field.zero for _ in range(m)] for _ in range(n)]


def identity(n, field=QQ):
    return [[field.one if i == j else field.zero for j in range(n)] for i in range(n)]


def transpose(M):
    if not M:
        return []
    return [list(col) for col in zip(*M)]


def matmul(A, B, field=QQ):
    if not A:
        return []
    inner = len(B)
    ncols = len(B[0]) if B else 0
    out = []
    for row in A:
        if len(row) != inner:
            raise ValueError("shape mismatch in matmul")
        new = []
        for j in range(ncols):
            acc = field.zero
            for k in range(inner):
                if not field.is_zero(row[k]) and not field.is_zero(B[k][j]):
                    acc = acc + row[k] * B[k][j]
            new.append(field.norm(acc))
        out.append(new)
    return out


def matvec(A, v, field=QQ):
    return [r[0] for r in matmul(A, [[a] for a in v], field)] if A else []


def kron(A, B, field=QQ):
    out = []
    for ra in A:
        for rb in B:
            out.append([field.norm(a * b) for a in ra for b in rb])
    return out


def mat_equal(A, B, field=QQ) -> bool:
    if len(A) != len(B):
        return False
    for ra, rb in zip(A, B):
        if len(ra) != len(rb):
            return False
        if any(not field.is_zero(a - b) for a, b in zip(ra, rb)):
            return False
    return True


def rref(M, field=QQ):
    """Reduced row echelon form and pivot columns (leftmost-first)."""
    R = coerce_matrix(M, field)
    nrows = len(R)
    ncols = len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        cands = [i for i in range(r, nrows) if not field.is_zero(R[i][c])]
        if not cands:
            continue
        p = min(cands, key=lambda i: (field.weight(R[i][c]), i))
        R[r], R[p] = R[p], R[r]
        inv = field.one / R[r][c]
        R[r] = [field.norm(a * inv) for a in R[r]]
        for i in range(nrows):
            if i != r and not field.is_zero(R[i][c]):
                f = R[i][c]
                R[i] = [field.norm(a - f * b) for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    for i in range(nrows):
        R[i] = [field.zero if field.is_zero(a) else a for a in R[i]]
    return R, pivots


def rank(M, field=QQ) -> int:
    if not M or not M[0]:
        return 0
    return len(rref(M, field)[1])


def row_basis(M, field=QQ):
    """Canonical basis of the row space (nonzero rows of the RREF)."""
    if not M or not M[0]:
        return []
    R, piv = rref(M, field)
    return R[: len(piv)]


def nullspace(M, ncols: int | None = None, field=QQ):
    """Canonical basis of {x : M x = 0}, returned in reduced row echelon form."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return identity(ncols, field)
    R, piv = rref(M, field)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for fc in free:
        v = [field.zero] * ncols
        v[fc] = field.one
        for i, pc in enumerate(piv):
            v[pc] = field.norm(-R[i][fc])
        basis.append(v)
    return row_basis(basis, field) if basis else []


def inverse(M, field=QQ):
    n = len(M)
    aug = [list(M[i]) + identity(n, field)[i] for i in range(n)]
    R, piv = rref(aug, field)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R]


def solve_left(A, B, field=QQ):
    """Some X with X A = B (rows of B in the row space of A), or None."""
    # X A = B  <=>  A^T X^T = B^T
    At = transpose(A)
    n = len(A)
    X = []
    for brow in B:
        aug = [list(At[i]) + [brow[i]] for i in range(len(At))]
        R, piv = rref(aug, field)
        if n in piv:
            return None
        x = [field.zero] * n
        for i, pc in enumerate(piv):
            x[pc] = R[i][n]
        X.append(x)
    return X


def span_contains(basis, vectors, field=QQ) -> bool:
    r0 = rank(basis, field) if basis else 0
    rows = list(basis) + list(vectors)
    if not rows:
        return True
    return rank(rows, field) == r0


def span_equal(A, B, field=QQ) -> bool:
    return span_contains(A, B, field) and span_contains(B, A, field)


def is_symmetric(M, field=QQ) -> bool:
    return mat_equal(M, transpose(M), field)


def evaluate_matrix(M, point):
    return [[eval_at(a, point) if isinstance(a, RatAbsExpr) else Fraction(a) for a in row] for row in M]


def charpoly(M) -> list:
    """Coefficients of det(tI - M), constant term first (Faddeev-LeVerrier)."""
    n = len(M)
    A = [[Fraction(a) for a in row] for row in M]
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    Mk = identity(n)
    for k in range(1, n + 1):
        AM = matmul(A, Mk)
        c = -sum(AM[i][i] for i in range(n)) / k
        coeffs[n - k] = c
        Mk = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
    return coeffs


def psd_exact(M) -> bool:
    """Exact PSD test for a constant symmetric matrix.

    A real-rooted polynomial has only nonnegative roots iff its coefficients
    alternate in sign (zeros allowed).
    """
    n = len(M)
    if n == 0:
        return True
    c = charpoly(M)
    return all(((-1) ** (n - k)) * c[k] >= 0 for k in range(n + 1))


def quad_form(M, v):
    n = len(v)
    return sum(Fraction(M[i][j]) * v[i] * v[j] for i in range(n) for j in range(n))


def det(M, field=QQ):
    """Determinant by elimination (product of pivots, with row-swap signs)."""
    n = len(M)
    R = coerce_matrix(M, field)
    d = field.one
    for c in range(n):
        cands = [i for i in range(c, n) if not field.is_zero(R[i][c])]
        if not cands:
            return field.zero
        p = min(cands, key=lambda i: (field.weight(R[i][c]), i))
        if p != c:
            R[c], R[p] = R[p], R[c]
            d = -d
        piv = R[c][c]
        d = field.norm(d * piv)
        for i in range(c + 1, n):
            if not field.is_zero(R[i][c]):
                f = R[i][c] / piv
                R[i] = [field.norm(a - f * b) for a, b in zip(R[i], R[c])]
    return d


def maximal_minor(M, field=QQ):
    """A nonzero ``r x r`` minor, ``r`` the rank (the empty minor is one)."""
    rows = []
    for row in M:
        if rank(rows + [row], field) > len(rows):
            rows.append(row)
    if not rows:
        return field.one
    _, piv = rref(rows, field)
    return det([[row[c] for c in piv] for row in rows], field)
