"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import test_bundle  # noqa: E402
import test_diffvs  # noqa: E402
import test_dsl  # noqa: E402
import test_symexpr  # noqa: E402
from helpers import numeric_smooth, random_expression, random_psd  # noqa: E402
from pblab import linalg as la  # noqa: E402
from pblab.bundle import Cell, PseudoBundle, TotalGenerator, line_cells  # noqa: E402
from pblab.diffvs import Functional, GeneratedVS, GeneratorPlot  # noqa: E402
from pblab.dsl import parse, parse_expr, run_document  # noqa: E402
from pblab.dsl.cli import catalog_text  # noqa: E402
from pblab.dsl.runner import Runner  # noqa: E402
from pblab.glue import (  # noqa: E402
    BaseGluing,
    BundleGluing,
    GluedBundle,
    check_dual_necessary,
    direct_sum_glue_commutativity_check,
    tensor_glue_commutativity_check,
)
from pblab.metric import (  # noqa: E402
    BundleMetric,
    compat_check,
    dual_metric,
    existence_check,
    glue_metrics,
    glue_metrics_commutative,
    is_pseudometric,
    metrics_coincide,
)
from pblab.symexpr import RatAbsExpr, is_smooth  # noqa: E402

E = parse_expr
NEG = Cell.interval("x", None, 0)
POS = Cell.interval("x", 0, None)


def report(n: int, what: str, ok: bool, capsys=None):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {what}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def circle_gluing(lift):
    B1 = PseudoBundle.standard("x", 1, line_cells("x", [0]), "B1")
    B2 = PseudoBundle.standard("y", 1, label="B2")
    return B1, B2, BundleGluing(BaseGluing("x", "y", [NEG, POS], E("1/x"), E("1/y")), lift)


def fixture_objects(name: str) -> dict:
    r = Runner(seed=0)
    for s in parse(catalog_text(name)).declarations().values():
        r.declare(s)
    return r.objects


# ---------------------------------------------------------------------------


def test_criterion_1_dual_dimensions(capsys):
    t0 = time.perf_counter()
    ok = True
    for n in (2, 3):
        axes = [GeneratorPlot(("t",), [E("abs(t)") if k == i else E("0") for k in range(n)]) for i in range(n)]
        ok &= GeneratedVS(n, axes).dual_dim() == 0
    for n in (1, 2, 3, 4):
        single = GeneratedVS(n, [GeneratorPlot(("t",), [E("abs(t)")] + [E("0")] * (n - 1))])
        ok &= single.dual_dim() == n - 1
        ok &= GeneratedVS.standard(n).dual_dim() == n
    dt = time.perf_counter() - t0
    report(1, f"trivial, n-1 and full duals reproduced exactly in {dt:.3f}s", ok and dt < 1, capsys)


def test_criterion_2_nonexistence(capsys):
    t0 = time.perf_counter()
    B = PseudoBundle("x", line_cells("x"), 1, [TotalGenerator("u", ["v"], [E("u*abs(v)")])])
    ex = existence_check(B)
    cert = ex.certificate
    ok = ex.status == "NonExistent" and cert is not None and cert.replay(B)
    ok = ok and cert.point == "{0}" and cert.point_rank == 1 and cert.interval_rank == 0
    ok = ok and ("const(e1)", "const(e1)") == tuple(cert.probes[0])
    # the probe (u, 1) sees the cellwise delta metric as a discontinuous function of u
    delta = BundleMetric({c: [[1]] if c.is_point else [[0]] for c in B.cells})
    v = is_pseudometric(B, delta)
    ok = ok and not v.smooth and "const(e1)" in str(v.smooth_witness)
    dt = time.perf_counter() - t0
    report(2, f"(u, u|v|) bundle NonExistent with replayable certificate in {dt:.3f}s", ok and dt < 1, capsys)


def test_criterion_3_existence(capsys):
    B = PseudoBundle("x", line_cells("x"), 2, [TotalGenerator("u", ["v"], [E("0"), E("abs(v)")])])
    ex = existence_check(B)
    ok = ex.status == "Exists"
    ok = ok and all(la.mat_equal(M, [[1, 0], [0, 0]], la.ExprField()) for M in ex.metric.matrices.values())
    v = is_pseudometric(B, ex.metric)
    ok = ok and v.passed and v.psd == "exact"
    report(3, "bundle with generator (0, |v|) has the metric on the smooth fibre direction, exact PSD", ok, capsys)


def test_criterion_4_moebius_annulus(capsys):
    t0 = time.perf_counter()
    ok = True
    for lift in ([[1]], {NEG: [[1]], POS: [[-1]]}):
        B1, B2, G = circle_gluing(lift)
        GB = GluedBundle(B1, B2, G)
        ok &= set(GB.dual_dim_profile().values()) == {1}
        g1 = BundleMetric.uniform(B1.cells, [[1]])
        g2 = BundleMetric.uniform(B2.cells, [[1]])
        ok &= compat_check(g1, g2, GB)
        ga, gb = glue_metrics(g1, g2, GB), glue_metrics_commutative(g1, g2, GB)
        ok &= is_pseudometric(GB, ga).passed and is_pseudometric(GB, gb).passed
        ok &= metrics_coincide(ga, gb)
    dt = time.perf_counter() - t0
    report(4, f"annulus and Moebius glued metrics pass and coincide in {dt:.3f}s", ok and dt < 2, capsys)


def test_criterion_5_tensor_commutativity(capsys):
    B1, B2, mob = circle_gluing({NEG: [[1]], POS: [[-1]]})
    _, _, ann = circle_gluing([[1]])
    S1 = PseudoBundle.standard("x", 2, line_cells("x", [0]))
    S2 = PseudoBundle.standard("y", 2)
    std = BundleGluing(mob.base, la.identity(2))
    mm = tensor_glue_commutativity_check(B1, B1, B2, B2, mob, mob)
    am = tensor_glue_commutativity_check(B1, B1, B2, B2, ann, mob)
    ss = tensor_glue_commutativity_check(S1, S1, S2, S2, std, std)
    ok = mm["certified"] and am["certified"] and ss["certified"]
    ok = ok and all(m == [["1"]] for m in mm["lifts"].values())
    ok = ok and direct_sum_glue_commutativity_check(B1, B1, B2, B2, ann, mob)["certified"]
    # the same checks through the catalog fixture
    rep, code = run_document(parse(catalog_text("tensor_commute")))
    ok = ok and code == 0 and all(r["result"]["tensor"]["certified"] for r in rep["results"])
    report(5, "tensor gluing commutes on all cells; Moebius x Moebius lift is +1", ok, capsys)


def test_criterion_6_dual_necessary(capsys):
    ann, mob = fixture_objects("annulus"), fixture_objects("moebius")
    fail = fixture_objects("dual_necessary_fail")
    glued = [o for objs in (ann, mob) for o in objs.values() if isinstance(o, GluedBundle)]
    bad = [o for o in fail.values() if isinstance(o, GluedBundle)]
    ok = len(glued) == 2 and all(check_dual_necessary(GB) for GB in glued)
    ok = ok and len(bad) == 1 and not check_dual_necessary(bad[0])
    report(6, "dual necessary condition true on annulus/Moebius, false on the |v| fixture", ok, capsys)


def test_criterion_7_smoothness_oracle(capsys):
    rng = random.Random(20261019)
    total, disagreements, nonsmooth = 250, [], 0
    for _ in range(total):
        text = random_expression(rng, nvars=3, max_degree=4, max_abs=2)
        symbolic = is_smooth(E(text).num)
        numeric = numeric_smooth(text, rng)
        nonsmooth += not symbolic
        if symbolic != numeric:
            disagreements.append(text)
    ok = not disagreements and 0 < nonsmooth < total
    report(7, f"symbolic and finite-difference verdicts agree on {total} expressions ({nonsmooth} non-smooth)", ok, capsys)


def test_criterion_8_property_suites(capsys):
    suites = [
        test_diffvs.test_more_generators_never_grow_the_dual,
        test_diffvs.test_constructed_pseudometric_verifies,
        test_symexpr.test_normalize_idempotent,
        test_dsl.test_generated_documents_round_trip,
        test_bundle.test_sub_and_quotient_identities,
    ]
    counts = []
    for fn in suites:
        fn()
        counts.append(fn._hypothesis_internal_use_settings.max_examples)
    ok = counts[:4] == [100, 100, 500, 200]
    report(8, "property suites green (" + ", ".join(map(str, counts)) + " cases)", ok, capsys)


def test_criterion_9_dual_metric_round_trip(capsys):
    rng = random.Random(9)
    passed = 0
    for _ in range(20):
        n = rng.randint(1, 3)
        M, terms = random_psd(rng, n, n)
        while la.rank(M) < n:
            M, terms = random_psd(rng, n, n)
        B = PseudoBundle.standard("x", n)
        sos = {c: [(RatAbsExpr(cf), Functional(v)) for cf, v in terms] for c in B.cells}
        g = BundleMetric({c: M for c in B.cells}, sos)
        if is_pseudometric(B, g).psd != "exact":
            continue
        model, gs = dual_metric(B, g)
        _, back = dual_metric(model, gs)
        passed += all(la.mat_equal(back.lookup(c), M, la.ExprField()) for c in B.cells)
    report(9, f"dual metric twice returns the original matrix exactly ({passed}/20)", passed == 20, capsys)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(
        ((k, v) for k, v in globals().items() if k.startswith("test_criterion_")),
        key=lambda kv: int(kv[0].split("_")[2]),
    ):
        try:
            fn(None)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
