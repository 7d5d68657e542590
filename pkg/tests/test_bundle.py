import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pblab.bundle import (
    BaseMismatch,
    BundleError,
    Cell,
    NotASubspace,
    PointOutsideBase,
    PseudoBundle,
    SubBundleSpec,
    TotalGenerator,
    direct_sum_bundle,
    dual_bundle,
    fibrewise_check,
    line_cells,
    quotient_bundle,
    sub_bundle,
    tensor_bundle,
)
from pblab.diffvs import direct_sum_vs, tensor_vs
from pblab.dsl import parse_expr


def gen(base, fibre_vars, *comps) -> TotalGenerator:
    return TotalGenerator(base, fibre_vars, [parse_expr(c) for c in comps])


def e52() -> PseudoBundle:
    return PseudoBundle("x", line_cells("x"), 1, [gen("u", ["v"], "u*abs(v)")], "e52")


def e51() -> PseudoBundle:
    return PseudoBundle("x", line_cells("x"), 2, [gen("u", ["v"], "0", "abs(v)")], "e51")


FIBRES = ["0", "v", "abs(v)", "u*abs(v)", "u^2*abs(v)", "(u - 1)*abs(v)", "u*v", "abs(u)*abs(v)"]


@st.composite
def bundles(draw, max_fibre=2):
    n = draw(st.integers(1, max_fibre))
    gens = [gen("u", ["v"], *[draw(st.sampled_from(FIBRES)) for _ in range(n)]) for _ in range(draw(st.integers(0, 2)))]
    return PseudoBundle("x", line_cells("x"), n, gens)


def test_cells_and_keys():
    cells = line_cells("x", [0, Fraction(1, 2)])
    assert [c.key() for c in cells] == ["(-inf,0)", "{0}", "(0,1/2)", "{1/2}", "(1/2,inf)"]
    assert Cell.point("x", 0).adjacent(Cell.interval("x", None, 0))
    with pytest.raises(ValueError):
        Cell.interval("x", 1, 1)


def test_profile_of_nonexistence_example_refines_at_origin():
    assert e52().profile_by_key() == {"(-inf,0)": 0, "{0}": 1, "(0,inf)": 0}


def test_profile_of_existence_example():
    B = e51()
    assert set(B.profile_by_key().values()) == {1}
    assert [phi.as_fractions() for phi in B.dual_basis(B.cells[0])] == [[1, 0]]


def test_interior_points_agree_with_cell():
    B = e52()
    for x in (Fraction(-3), Fraction(-1, 7), Fraction(2, 5), Fraction(9)):
        assert B.fibre_space_at(x).dual_dim() == len(B.dual_basis(B.locate(x)))
    assert B.fibre_space_at(0).dual_dim() == 1


def test_locate_outside_base():
    B = PseudoBundle("x", [Cell.interval("x", 0, 1)], 1)
    with pytest.raises(PointOutsideBase):
        B.locate(5)


def test_generator_poles_refine_cells():
    B = PseudoBundle("x", line_cells("x"), 1, [gen("x", ["v"], "abs(v)/(x - 2)")])
    # the plot is undefined over x = 2, so that fibre is standard
    assert B.profile_by_key() == {"(-inf,2)": 0, "{2}": 1, "(2,inf)": 0}


def test_sum_and_tensor_profiles():
    B = e52()
    S = PseudoBundle.standard("x", 1)
    assert direct_sum_bundle(B, S).profile_by_key() == {"(-inf,0)": 1, "{0}": 2, "(0,inf)": 1}
    assert tensor_bundle(B, B).profile_by_key() == {"(-inf,0)": 0, "{0}": 1, "(0,inf)": 0}
    assert fibrewise_check(direct_sum_bundle(B, S), B, S, direct_sum_vs)
    assert fibrewise_check(tensor_bundle(B, B), B, B, tensor_vs)


def test_mismatched_bases_rejected():
    A = PseudoBundle.standard("x", 1, [Cell.interval("x", 0, 1)])
    B = PseudoBundle.standard("x", 1)
    with pytest.raises(BaseMismatch):
        direct_sum_bundle(A, B)


def test_dual_bundle_view():
    D = dual_bundle(e51())
    assert D.as_bundle().fibre_dim == 1
    with pytest.raises(BundleError):
        dual_bundle(e52()).as_bundle()
    std = PseudoBundle.standard("x", 3)
    assert dual_bundle(dual_bundle(std).as_bundle()).as_bundle().fibre_dim == 3


def test_quotient_of_example_by_first_axis():
    Q = quotient_bundle(e51(), SubBundleSpec.uniform(2, [[1, 0]]))
    assert Q.fibre_dim == 1
    assert str(Q.generators[0].components[0]) == "abs(v)"
    assert set(Q.profile_by_key().values()) == {0}


def test_sub_bundle_keeps_generators_inside():
    S = sub_bundle(e51(), SubBundleSpec.uniform(2, [[0, 1]]))
    assert S.fibre_dim == 1 and len(S.generators) == 1
    assert S.subset_diffeology == "approximate"
    assert set(S.profile_by_key().values()) == {0}


def test_subspace_errors():
    with pytest.raises(NotASubspace):
        quotient_bundle(e51(), SubBundleSpec.uniform(3, [[1, 0, 0]]))
    jumpy = SubBundleSpec(1, {Cell.point("x", 0): []}, [[1]])
    with pytest.raises(NotASubspace):
        sub_bundle(e52(), jumpy)


@settings(max_examples=50, deadline=None)
@given(bundles())
def test_sub_and_quotient_identities(B):
    n = B.fibre_dim
    assert quotient_bundle(B, SubBundleSpec.zero(n)).structurally_equal(B)
    assert sub_bundle(B, SubBundleSpec.full(n)).structurally_equal(B)
    assert quotient_bundle(B, SubBundleSpec.full(n)).fibre_dim == 0


@settings(max_examples=30, deadline=None)
@given(bundles(), bundles())
def test_sum_profile_is_cellwise_sum(A, B):
    S = direct_sum_bundle(A, B)
    pa, pb = A.refined(_bp(S)), B.refined(_bp(S))
    for c in S.cells:
        assert S.dual_dim_profile()[c] == len(pa.dual_basis(c)) + len(pb.dual_basis(c))


@settings(max_examples=30, deadline=None)
@given(bundles(max_fibre=2), bundles(max_fibre=1))
def test_tensor_profile_is_cellwise_product(A, B):
    T = tensor_bundle(A, B)
    pa, pb = A.refined(_bp(T)), B.refined(_bp(T))
    for c in T.cells:
        assert T.dual_dim_profile()[c] == len(pa.dual_basis(c)) * len(pb.dual_basis(c))
    assert fibrewise_check(T, A, B, tensor_vs)


def _bp(B):
    return {p for c in B.cells for p in c.endpoints()}


def test_fibres_at_random_interior_points_match_cells():
    rng = random.Random(5)
    B = PseudoBundle("x", line_cells("x"), 2, [gen("u", ["v"], "(u - 1)*abs(v)", "0"), gen("u", ["v"], "0", "u*abs(v)")])
    prof = B.profile_by_key()
    assert prof["{0}"] == prof["{1}"] == 1 and prof["(0,1)"] == 0
    for _ in range(30):
        x = Fraction(rng.randint(-50, 50), rng.randint(1, 9))
        assert B.fibre_space_at(x).dual_dim() == B.dual_dim_profile()[B.locate(x)]
