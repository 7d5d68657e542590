from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pblab import linalg as la
from pblab.bundle import Cell, PseudoBundle, TotalGenerator, line_cells
from pblab.dsl import parse_expr
from pblab.glue import (
    BaseGluing,
    BundleGluing,
    GluedBundle,
    IncompatibleMaps,
    LiftDomainMismatch,
    MalformedGluing,
    NotInvertible,
    check_dual_necessary,
    check_f_compatible,
    direct_sum_glue_commutativity_check,
    dual_gluing,
    glue_maps,
    glue_scalars,
    glue_sections,
    glue_spaces,
    scale_section,
    sections_compatible,
    switch_map,
    tensor_glue_commutativity_check,
)

E = parse_expr
NEG = Cell.interval("x", None, 0)
POS = Cell.interval("x", 0, None)
Y = [NEG, POS]


def circle_base() -> BaseGluing:
    return BaseGluing("x", "y", Y, E("1/x"), E("1/y"))


def charts(n=1):
    return PseudoBundle.standard("x", n, line_cells("x", [0]), "B1"), PseudoBundle.standard("y", n, label="B2")


def moebius() -> GluedBundle:
    B1, B2 = charts()
    return GluedBundle(B1, B2, BundleGluing(circle_base(), {NEG: [[1]], POS: [[-1]]}))


def annulus() -> GluedBundle:
    B1, B2 = charts()
    return GluedBundle(B1, B2, BundleGluing(circle_base(), [[1]]))


def test_circle_cells():
    sp = glue_spaces(line_cells("x", [0]), line_cells("y"), circle_base())
    assert sp.keys() == ["i1:{0}", "i2:(-inf,0)", "i2:{0}", "i2:(0,inf)"]
    assert sp.locate("x", 2).key() == "i2:(0,inf)"
    assert sp.push_forward("x", 2) == ("i2", Fraction(1, 2))
    assert sp.locate("x", 0).key() == "i1:{0}"


def test_moebius_and_annulus_duals():
    for GB in (moebius(), annulus()):
        assert set(GB.dual_dim_profile().values()) == {1}
        assert check_dual_necessary(GB)
        assert switch_map(GB).involutive()


def test_tangent_circle_lift():
    B1, B2 = charts()
    GB = GluedBundle(B1, B2, BundleGluing(circle_base(), [[E("-1/x^2")]]))
    assert check_dual_necessary(GB)
    assert set(GB.profile_by_key().values()) == {1}


def test_dual_necessary_fails_for_abs_fibre():
    S = PseudoBundle.standard("x", 1)
    W = PseudoBundle("y", line_cells("y"), 1, [TotalGenerator("u", ["v"], [E("abs(v)")])])
    GB = GluedBundle(S, W, BundleGluing(BaseGluing("x", "y", [Cell.interval("x")], E("x"), E("y")), [[1]]))
    assert not check_dual_necessary(GB)


def test_malformed_gluings():
    with pytest.raises(MalformedGluing):
        BaseGluing("x", "x", Y, E("1/x"))
    B1, B2 = charts()
    with pytest.raises(LiftDomainMismatch):
        GluedBundle(B1, B2, BundleGluing(circle_base(), [[1, 0]]))
    with pytest.raises(NotInvertible):
        switch_map(glue_spaces(line_cells("x", [0]), line_cells("y"), BaseGluing("x", "y", Y, E("1/x"))))


def test_f_compatibility():
    G = circle_base()
    assert check_f_compatible(E("x"), E("1/y"), G)
    assert not check_f_compatible(E("x"), E("y"), G)
    m = glue_maps(E("x^2/(1 + x^2)"), E("1/(1 + y^2)"), G)
    assert m.evaluate("x", 2) == [Fraction(4, 5)]
    with pytest.raises(IncompatibleMaps):
        glue_maps(E("x"), E("y"), G)


def test_moebius_section_pair():
    GB = moebius()
    s1 = {NEG: [E("x/(1 + x^2)")], Cell.point("x", 0): [0], POS: [E("-x/(1 + x^2)")]}
    s2 = [E("y/(1 + y^2)")]
    assert sections_compatible(s1, s2, GB)
    assert not sections_compatible([E("x/(1 + x^2)")], s2, GB)
    assert sections_compatible([E("x/(1 + x^2)")], s2, annulus())
    s = glue_sections(s1, s2, GB)
    assert s.evaluate("x", -1) == [Fraction(-1, 2)]
    assert s.evaluate("y", 0) == [0]


def test_glued_sections_scale_by_glued_scalars():
    GB = moebius()
    s1 = {NEG: [E("x/(1 + x^2)")], Cell.point("x", 0): [0], POS: [E("-x/(1 + x^2)")]}
    s2 = [E("y/(1 + y^2)")]
    h1, h2 = E("1/(1 + x^2)"), E("y^2/(1 + y^2)")
    hs1 = {c: scale_section(h1, s1, c) for c in GB.B1.cells}
    hs2 = {t: scale_section(h2, s2, t) for t in GB.B2.cells}
    lhs = glue_sections(hs1, hs2, GB)
    rhs = glue_scalars(h1, h2, GB) * glue_sections(s1, s2, GB)
    assert lhs.equals(rhs)


def test_tensor_commutativity_fixtures():
    B1, B2 = charts()
    mob = BundleGluing(circle_base(), {NEG: [[1]], POS: [[-1]]})
    ann = BundleGluing(circle_base(), [[1]])
    r = tensor_glue_commutativity_check(B1, B1, B2, B2, mob, mob)
    assert r["certified"]
    assert all(m == [["1"]] for m in r["lifts"].values())
    assert tensor_glue_commutativity_check(B1, B1, B2, B2, ann, mob)["certified"]
    S1, S2 = charts(2)
    std = BundleGluing(circle_base(), la.identity(2))
    assert tensor_glue_commutativity_check(S1, S1, S2, S2, std, std)["certified"]
    assert direct_sum_glue_commutativity_check(B1, B1, B2, B2, ann, mob)["certified"]


def test_commutativity_with_nonstandard_fibres():
    W1 = PseudoBundle("x", line_cells("x", [0]), 2, [TotalGenerator("u", ["v"], [E("0"), E("abs(v)")])])
    W2 = PseudoBundle("y", line_cells("y"), 2, [TotalGenerator("u", ["v"], [E("0"), E("abs(v)")])])
    G = BundleGluing(circle_base(), la.identity(2))
    B1, B2 = charts()
    ann = BundleGluing(circle_base(), [[1]])
    assert tensor_glue_commutativity_check(W1, B1, W2, B2, G, ann)["certified"]
    assert direct_sum_glue_commutativity_check(W1, B1, W2, B2, G, ann)["certified"]


# -- properties over random affine gluings -------------------------------------

q = st.fractions(min_value=-6, max_value=6, max_denominator=4)


@st.composite
def affine_gluings(draw):
    a = draw(q.filter(lambda v: v != 0))
    b = draw(q)
    lo = draw(q)
    hi = lo + draw(st.fractions(min_value=Fraction(1, 2), max_value=5, max_denominator=4))
    kind = draw(st.sampled_from(["open", "left", "right", "line"]))
    Yc = {
        "open": [Cell.interval("x", lo, hi)],
        "left": [Cell.interval("x", None, hi)],
        "right": [Cell.interval("x", lo, None)],
        "line": [Cell.interval("x")],
    }[kind]
    f = parse_expr(f"{a.numerator}/{a.denominator}*x + {b.numerator}/{b.denominator}")
    finv = parse_expr(f"(y - {b.numerator}/{b.denominator}) * {a.denominator}/{a.numerator}")
    return BaseGluing("x", "y", Yc, f, finv)


@settings(max_examples=100, deadline=None)
@given(affine_gluings(), st.lists(q, min_size=3, max_size=3))
def test_regions_partition_the_glued_space(G, pts):
    sp = glue_spaces(line_cells("x"), line_cells("y"), G)
    r = sp.resolution
    assert len(set(sp.keys())) == len(sp.cells)
    # target cells tile the target line; source cells off Y are i1 cells
    assert [c.key() for c in r.target_cells] == [gc.cell.key() for gc in sp.cells if gc.region == "i2"]
    for x in pts:
        gc = sp.locate("x", x)
        region, coord = sp.push_forward("x", x)
        assert region == gc.region and gc.cell.contains(coord)
        in_y = any(c.contains(x) for c in G.Y)
        assert (region == "i2") == in_y
        assert sp.locate("y", x).region == "i2"


@settings(max_examples=50, deadline=None)
@given(affine_gluings())
def test_switch_is_involutive(G):
    sp = glue_spaces(line_cells("x"), line_cells("y"), G)
    sw = switch_map(sp)
    assert sw.involutive()
    for gc in sp.cells:
        sample = gc.cell.sample()
        region, coord = sw.apply_point(gc.region, sample)
        back = sw.inverse().apply_point(region, coord)
        assert back == (gc.region, sample)


@settings(max_examples=30, deadline=None)
@given(affine_gluings(), st.integers(-3, 3).filter(bool))
def test_dual_gluing_twice_is_the_original(G, k):
    B1 = PseudoBundle.standard("x", 1)
    B2 = PseudoBundle.standard("y", 1)
    GB = GluedBundle(B1, B2, BundleGluing(G, [[k]]))
    D = dual_gluing(GB)
    GBd = GluedBundle(B2, B1, D)
    DD = dual_gluing(GBd)
    r = GB.resolution
    for c in r.y_cells:
        assert la.mat_equal(DD.lift_on(c), GB.lifts[c], la.ExprField(c.ctx()))
        assert DD.base.f_on(c).equals(G.f_on(c))
