import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_psd
from pblab import linalg as la
from pblab.bundle import Cell, PseudoBundle, TotalGenerator, line_cells
from pblab.diffvs import Functional
from pblab.dsl import parse_expr
from pblab.glue import BaseGluing, BundleGluing, GluedBundle
from pblab.metric import (
    AsymmetricMetric,
    BundleMetric,
    IncompatibleMetrics,
    MetricRequired,
    canonical_metric,
    compat_check,
    dual_metric,
    existence_check,
    glue_metrics,
    glue_metrics_commutative,
    is_pseudometric,
    metrics_coincide,
    pairing_map,
)
from pblab.symexpr import RatAbsExpr

E = parse_expr
NEG = Cell.interval("x", None, 0)
POS = Cell.interval("x", 0, None)


def e52() -> PseudoBundle:
    return PseudoBundle("x", line_cells("x"), 1, [TotalGenerator("u", ["v"], [E("u*abs(v)")])], "e52")


def e51() -> PseudoBundle:
    return PseudoBundle("x", line_cells("x"), 2, [TotalGenerator("u", ["v"], [E("0"), E("abs(v)")])], "e51")


def circle(lift) -> GluedBundle:
    B1 = PseudoBundle.standard("x", 1, line_cells("x", [0]), "B1")
    B2 = PseudoBundle.standard("y", 1, label="B2")
    return GluedBundle(B1, B2, BundleGluing(BaseGluing("x", "y", [NEG, POS], E("1/x"), E("1/y")), lift))


def on(B, M, label=""):
    return BundleMetric.uniform(B.cells, M, label)


def test_nonexistence_certificate_replays():
    B = e52()
    ex = existence_check(B)
    assert ex.status == "NonExistent"
    cert = ex.certificate
    assert cert.point == "{0}" and cert.point_rank == 1 and cert.interval_rank == 0
    assert ["const(e1)", "const(e1)"] == list(cert.probes[0])
    assert cert.replay(B)
    assert not cert.replay(PseudoBundle.standard("x", 1))


def test_delta_metric_is_not_smooth():
    B = e52()
    delta = BundleMetric({c: [[1]] if c.is_point else [[0]] for c in B.cells})
    v = is_pseudometric(B, delta)
    assert all(v.rank_ok.values()) and not v.smooth
    assert "const(e1)" in str(v.smooth_witness)


def test_existence_example():
    B = e51()
    ex = existence_check(B)
    assert ex.status == "Exists"
    for M in ex.metric.matrices.values():
        assert la.mat_equal(M, [[1, 0], [0, 0]], la.ExprField())
    v = is_pseudometric(B, ex.metric)
    assert v.passed and v.psd == "exact"
    assert not is_pseudometric(B, on(B, [[0, 0], [0, 1]])).passed


def test_rank_must_match_dual_dimension():
    B = PseudoBundle.standard("x", 2)
    v = is_pseudometric(B, on(B, [[1, 0], [0, 0]]))
    assert v.smooth and not v.passed
    assert is_pseudometric(B, on(B, [[1, 0], [0, 1]])).passed


def test_asymmetric_metric_rejected():
    with pytest.raises(AsymmetricMetric):
        BundleMetric.uniform(line_cells("x"), [[1, 2], [0, 1]])


@pytest.mark.parametrize("lift", [[[1]], {NEG: [[1]], POS: [[-1]]}])
def test_constant_metrics_on_circle_bundles(lift):
    GB = circle(lift)
    g1, g2 = on(GB.B1, [[1]], "g1"), on(GB.B2, [[1]], "g2")
    assert compat_check(g1, g2, GB)
    ga = glue_metrics(g1, g2, GB)
    gb = glue_metrics_commutative(g1, g2, GB)
    assert is_pseudometric(GB, ga).passed and is_pseudometric(GB, gb).passed
    assert metrics_coincide(ga, gb)


def test_tangent_circle_metric():
    GB = circle([[E("-1/x^2")]])
    g1 = on(GB.B1, [[E("1/(1 + x^2)^2")]])
    g2 = on(GB.B2, [[E("1/(1 + y^2)^2")]])
    assert compat_check(g1, g2, GB)
    ga = glue_metrics(g1, g2, GB)
    assert is_pseudometric(GB, ga).passed
    assert metrics_coincide(ga, glue_metrics_commutative(g1, g2, GB))
    assert not compat_check(g1, on(GB.B2, [[1]]), GB)


def test_nonconstant_annulus_metric():
    GB = circle([[1]])
    g1 = on(GB.B1, [[E("(x^2 + 2)/(x^2 + 1)")]])
    g2 = on(GB.B2, [[E("(2*y^2 + 1)/(y^2 + 1)")]])
    ga = glue_metrics(g1, g2, GB)
    assert is_pseudometric(GB, ga).passed
    assert metrics_coincide(ga, glue_metrics_commutative(g1, g2, GB))
    with pytest.raises(IncompatibleMetrics):
        glue_metrics(g1, on(GB.B2, [[1]]), GB)


def test_dual_metric_inverts_in_dual_coordinates():
    B = PseudoBundle.standard("x", 2)
    model, gs = dual_metric(B, on(B, [[2, 1], [1, 1]]))
    assert model.fibre_dim == 2
    for c in B.cells:
        assert la.mat_equal(gs.lookup(c), [[1, -1], [-1, 2]], la.ExprField())


def test_dual_metric_on_degenerate_fibre():
    B = e51()
    model, gs = dual_metric(B, existence_check(B).metric)
    assert model.fibre_dim == 1
    assert all(la.mat_equal(M, [[1]], la.ExprField()) for M in gs.matrices.values())


def test_dual_metric_errors():
    with pytest.raises(MetricRequired):
        dual_metric(e51(), None)
    B = PseudoBundle.standard("x", 1)
    with pytest.raises(MetricRequired):
        dual_metric(B, on(B, [[-1]]))
    # a jump in the dual dimension rules out any smooth pseudo-metric
    J = PseudoBundle("x", line_cells("x"), 2, [TotalGenerator("u", ["v"], [E("0"), E("u^2*abs(v)")])])
    g = BundleMetric({c: [[1, 0], [0, 1]] if c.is_point else [[1, 0], [0, 0]] for c in J.cells})
    v = is_pseudometric(J, g)
    assert all(v.rank_ok.values()) and not v.smooth
    with pytest.raises(MetricRequired):
        dual_metric(J, g)


def test_pairing_map():
    B = e51()
    pm = pairing_map(B, existence_check(B).metric)
    c = B.cells[0]
    assert [str(a) for a in pm.apply(c, [3, 5])] == ["3", "0"]
    assert not pm.warnings
    assert pairing_map(B, on(B, [[2, 0], [0, 0]])).apply(c, [1, 1])[0].equals(RatAbsExpr(2))


def test_canonical_metric_rank_is_the_profile():
    B = PseudoBundle("x", line_cells("x"), 2, [TotalGenerator("u", ["v"], [E("u*abs(v)"), E("0")])])
    g = canonical_metric(B)
    v = is_pseudometric(B, g)
    assert v.ranks == B.profile_by_key()


# -- properties ---------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_dual_metric_twice_returns_the_metric(n, rng):
    r = rng.randint(1, n)
    M, terms = random_psd(rng, n, r)
    if la.rank(M) < n:
        M = [[M[i][j] + int(i == j) for j in range(n)] for i in range(n)]
        terms = terms + [(Fraction(1), [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    B = PseudoBundle.standard("x", n)
    sos = {c: [(RatAbsExpr(cf), Functional(v)) for cf, v in terms] for c in B.cells}
    g = BundleMetric({c: M for c in B.cells}, sos)
    assert is_pseudometric(B, g).psd == "exact"
    model, gs = dual_metric(B, g)
    _, back = dual_metric(model, gs)
    for c in B.cells:
        assert la.mat_equal(back.lookup(c), M, la.ExprField())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_psd_verdict_matches_eigen_sign(n, rng):
    S = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
    S = [[S[i][j] + S[j][i] for j in range(n)] for i in range(n)]
    B = PseudoBundle.standard("x", n)
    v = is_pseudometric(B, on(B, S))
    assert (v.psd == "exact") == la.psd_exact(S)
    assert v.passed == (la.psd_exact(S) and la.rank(S) == n)


def test_probabilistic_psd_is_seeded():
    B = PseudoBundle.standard("x", 1)
    g = on(B, [[E("x^2 + 1")]])
    a, b = is_pseudometric(B, g, seed=3), is_pseudometric(B, g, seed=3)
    assert a.as_dict() == b.as_dict()
    assert a.passed
    bad = on(B, [[E("x - 1")]])
    assert is_pseudometric(B, bad, seed=random.Random(1).randint(0, 99)).psd == "fails"
