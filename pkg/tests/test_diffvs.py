import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pblab import linalg as la
from pblab.diffvs import (
    BilinearForm,
    Functional,
    GeneratedVS,
    GeneratorPlot,
    ShapeMismatch,
    construct_pseudometric_vs,
    direct_sum_vs,
    is_pseudometric_vs,
    is_smooth_bilinear,
    is_smooth_functional,
    tensor_vs,
)
from pblab.dsl import parse_expr

POOL = ["0", "0", "t", "2*t", "t^2", "abs(t)", "t*abs(t)", "abs(t) + t", "1", "3*abs(t)"]


def plot(*comps, var="t") -> GeneratorPlot:
    return GeneratorPlot((var,), [parse_expr(c) for c in comps])


@st.composite
def generators(draw, dim):
    comps = [draw(st.sampled_from(POOL)) for _ in range(dim)]
    return plot(*comps)


@st.composite
def spaces(draw, max_dim=3, max_gens=3):
    n = draw(st.integers(1, max_dim))
    gens = draw(st.lists(generators(n), max_size=max_gens))
    return GeneratedVS(n, gens)


# -- examples -----------------------------------------------------------------


def test_standard_dual_is_canonical():
    V = GeneratedVS.standard(3)
    assert [phi.as_fractions() for phi in V.dual_basis()] == la.identity(3)


@pytest.mark.parametrize("n", [2, 3])
def test_abs_on_every_axis_kills_the_dual(n):
    V = GeneratedVS(n, [plot(*["abs(t)" if k == i else "0" for k in range(n)]) for i in range(n)])
    assert V.dual_dim() == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_single_abs_generator_drops_one(n):
    V = GeneratedVS(n, [plot(*(["abs(t)"] + ["0"] * (n - 1)))])
    assert V.dual_dim() == n - 1


def test_example_space_second_coordinate_abs():
    V = GeneratedVS(2, [plot("0", "abs(t)")])
    assert [phi.as_fractions() for phi in V.dual_basis()] == [[1, 0]]
    assert is_smooth_bilinear(V, BilinearForm([[1, 0], [0, 0]]))
    assert not is_smooth_bilinear(V, BilinearForm([[0, 0], [0, 1]]))
    v = is_pseudometric_vs(V, BilinearForm([[2, 0], [0, 0]]))
    assert v.passed and v.rank == 1
    assert not is_pseudometric_vs(V, BilinearForm([[0, 0], [0, 1]])).smooth


def test_dual_functionals_are_smooth():
    V = GeneratedVS(3, [plot("abs(t)", "abs(t)", "t")])
    for phi in V.dual_basis():
        assert is_smooth_functional(V, phi)
    assert not is_smooth_functional(V, Functional([1, 0, 0]))


def test_zero_generators_are_dropped():
    assert GeneratedVS(2, [plot("0", "0")]).generators == ()


def test_undeclared_variable_rejected():
    with pytest.raises(ValueError):
        GeneratedVS(1, [GeneratorPlot(("t",), [parse_expr("s")])])
    with pytest.raises(ShapeMismatch):
        GeneratedVS(2, [plot("t")])


def test_sum_and_tensor_examples():
    A = GeneratedVS(1, [plot("abs(t)")])
    R = GeneratedVS.standard(1)
    assert tensor_vs(A, R).dual_dim() == 0
    assert direct_sum_vs(A, R).dual_dim() == 1
    assert direct_sum_vs(R, GeneratedVS.standard(2)).dual_dim() == 3


def test_psd_failure_has_witness():
    V = GeneratedVS.standard(2)
    v = is_pseudometric_vs(V, BilinearForm([[1, 0], [0, -1]]))
    assert v.psd == "fails" and not v.passed and v.witness


def test_parametrized_fibre_uses_sign_context():
    from pblab.symexpr import Sign, SignContext

    g = GeneratorPlot(("t",), [parse_expr("x*abs(t)")])
    assert GeneratedVS(1, [g], params=("x",), ctx=SignContext.of({"x": Sign.POS})).dual_dim() == 0
    assert GeneratedVS(1, [g], params=("x",), ctx=SignContext.of({"x": Sign.ZERO})).dual_dim() == 1


# -- properties ---------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_more_generators_never_grow_the_dual(data):
    V = data.draw(spaces())
    p = data.draw(generators(V.dim))
    W = GeneratedVS(V.dim, list(V.generators) + [p])
    assert W.dual_dim() <= V.dual_dim()
    # a functional smooth on the larger family is smooth on the smaller one
    if W.dual_dim():
        VD = [phi.as_fractions() for phi in V.dual_basis()]
        assert la.span_contains(VD, [phi.as_fractions() for phi in W.dual_basis()])


@settings(max_examples=100, deadline=None)
@given(spaces())
def test_constructed_pseudometric_verifies(V):
    B = construct_pseudometric_vs(V)
    v = is_pseudometric_vs(V, B)
    assert v.passed and v.psd == "exact" and v.rank == V.dual_dim()


@settings(max_examples=50, deadline=None)
@given(spaces(max_dim=2), spaces(max_dim=2))
def test_direct_sum_dual_is_additive(V, W):
    assert direct_sum_vs(V, W).dual_dim() == V.dual_dim() + W.dual_dim()


@settings(max_examples=50, deadline=None)
@given(spaces(max_dim=2, max_gens=2), spaces(max_dim=2, max_gens=2))
def test_tensor_dual_is_multiplicative(V, W):
    T = tensor_vs(V, W)
    assert T.dual_dim() == V.dual_dim() * W.dual_dim()
    # every product of dual functionals is smooth on the tensor product
    for a in V.dual_basis():
        for b in W.dual_basis():
            assert is_smooth_functional(T, Functional([x * y for x in a.coeffs for y in b.coeffs]))


@settings(max_examples=100, deadline=None)
@given(spaces(), st.randoms(use_true_random=False))
def test_smooth_forms_have_rank_at_most_dual_dim(V, rng):
    n = V.dim
    D = [list(phi.as_fractions()) for phi in V.dual_basis()]
    k = len(D)
    S = [[Fraction(rng.randint(-3, 3)) for _ in range(k)] for _ in range(k)]
    S = [[S[i][j] + S[j][i] for j in range(k)] for i in range(k)]
    M = la.matmul(la.matmul(la.transpose(D), S), D) if k else [[0] * n for _ in range(n)]
    B = BilinearForm(M)
    assert is_smooth_bilinear(V, B)
    assert la.rank(B.matrix, V.field) <= V.dual_dim()
    # a random constant form: smooth ones obey the same bound
    R = [[Fraction(rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)]
    R = [[R[i][j] + R[j][i] for j in range(n)] for i in range(n)]
    if is_smooth_bilinear(V, BilinearForm(R)):
        assert la.rank(R) <= V.dual_dim()


def test_constructed_pseudometric_on_seeded_spaces():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(1, 3)
        V = GeneratedVS(n, [plot(*[rng.choice(POOL) for _ in range(n)]) for _ in range(rng.randint(0, 3))])
        assert is_pseudometric_vs(V, construct_pseudometric_vs(V)).passed
