"""One test per acceptance criterion; each records a PASS/FAIL line with its figures."""

import math
import time

import pytest

from conftest import CRITERIA_LINES, UNIT_LOAN
from nneg.insurance import ReinsurerBasis
from nneg.lattice import PolicySchedule, ReinsuranceTerms, backward_induct, simulate_paths
from nneg.market import crr_from_vol
from nneg.mortality import MortalityTable, load_sample_table
from nneg.single import price_single, superhedge_price
from nneg import suites

MODEL = crr_from_vol(100.0, 0.15)
SWEEP_NS = (1, 2, 5, 10, 20, 50, 100)


def report(k, ok, detail):
    CRITERIA_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    print(CRITERIA_LINES[-1])
    assert ok, detail


@pytest.fixture(scope="module")
def multi_sweep():
    table = load_sample_table()
    start = time.perf_counter()
    results = {
        n: backward_induct(PolicySchedule(40.0, 0.05, 100, 70, n), table, ReinsuranceTerms(0.1), MODEL)
        for n in SWEEP_NS
    }
    return results, time.perf_counter() - start


def test_criterion_1_calibration():
    q, loan = MODEL.q, 100 * MODEL.d + 1
    ok = abs(q - 0.5374) <= 0.0005 and abs(loan - 87.07) <= 0.01
    report(1, ok, f"q = {q:.5f}, normalised loan = {loan:.4f}")


def test_criterion_2_single_period_regime():
    basis = ReinsurerBasis(0.45, 0.1)
    start = time.perf_counter()
    quotes = [price_single(MODEL, UNIT_LOAN, n, basis) for n in range(1, 1001)]
    elapsed = time.perf_counter() - start
    per = [qt.lp_cost / n for n, qt in enumerate(quotes, start=1)]
    closed = [qt.cost / n for n, qt in enumerate(quotes, start=1)]
    cross = next(n for n, qt in enumerate(quotes, start=1) if qt.result.case_id == "XOL_PLUS_PUTS")
    limit = 0.45 * MODEL.q * 1.1
    ok = (
        quotes[0].result.case_id == "GLA_ONLY"
        and abs(per[0] - 0.45) < 1e-12
        and all(qt.result.case_id == "XOL_PLUS_PUTS" for qt in quotes[cross - 1:])
        and all(v < 0.45 for v in per[cross - 1:])
        and abs(per[-1] - limit) <= 0.002
        and abs(closed[-1] - limit) <= 0.002
        and elapsed < 10
    )
    report(
        2, ok,
        f"crossover at n = {cross}; per-life at n = 1000 {per[-1]:.5f} (limit {limit:.5f}); "
        f"sweep {elapsed:.1f}s",
    )


def test_criterion_3_counterexample():
    start = time.perf_counter()
    res = suites.counterexample_suite()
    fig = suites.counterexample_figures()
    elapsed = time.perf_counter() - start
    report(
        3, res.passed and elapsed < 1,
        f"SH {fig.sh[0]:.2f}/{fig.sh[1]:.2f}/{fig.sh[2]:.2f}, LP {fig.lp:.4f}, "
        f"independent x0 {fig.independent_x0:.5f}" + ("" if res.passed else f"; {res.failures}"),
    )


def test_criterion_4_strong_duality():
    start = time.perf_counter()
    dual = suites.duality_suite(seed=0, count=500)
    cert = suites.certificate_suite()
    elapsed = time.perf_counter() - start
    ok = dual.passed and cert.passed and dual.checked >= 500 and elapsed < 30
    report(
        4, ok,
        f"{dual.checked} random tuples, {cert.checked} certificates ({cert.detail}); {elapsed:.1f}s"
        + ("" if ok else f"; {(dual.failures + cert.failures)[:3]}"),
    )


def test_criterion_5_exchangeability():
    start = time.perf_counter()
    res = suites.reduction_suite(seed=0)
    elapsed = time.perf_counter() - start
    report(5, res.passed and elapsed < 30, f"{res.checked} books, n = 2..6; {elapsed:.1f}s")


def test_criterion_6_large_deviations():
    start = time.perf_counter()
    res = suites.ldp_suite()
    elapsed = time.perf_counter() - start
    report(6, res.passed and elapsed < 20, f"{res.checked} bound checks; {res.detail}; {elapsed:.1f}s")


def test_criterion_7_undervaluation(multi_sweep):
    tuples = suites.random_tuples(0, 500)

    worst = min(superhedge_price(t.n, t.p, t.q, t.e, t.x0).cost - t.n * t.p * t.q for t in tuples)
    results, _ = multi_sweep
    gaps = {n: r.v0 - r.dcf_bs for n, r in results.items()}
    ok = worst >= -1e-12 and all(g >= 0 for g in gaps.values())
    report(
        7, ok,
        f"min(cost - npq) = {worst:.4g} over 500 tuples; min(v0 - dcf) = {min(gaps.values()):.4f}",
    )


def test_criterion_8_multi_period(multi_sweep):
    basis = ReinsurerBasis(0.45, 0.1)
    flat = MortalityTable.constant(70, 0.45, 3)
    one_period = max(
        abs(
            backward_induct(PolicySchedule(loan, 0, 1, 70, n), flat, ReinsuranceTerms(0.1), MODEL).v0
            - price_single(MODEL, loan, n, basis).lp_cost
        )
        for n in (1, 2, 7, 50)
        for loan in (UNIT_LOAN, 95.0, 130.0)
    )
    shortfalls = transitions = 0
    for n in (1, 2, 3):
        for T in (1, 2, 3, 4):
            table = MortalityTable.constant(70, 0.3, T + 1)
            sched = PolicySchedule(88.0, 0.02, T, 70, n)
            res = backward_induct(sched, table, ReinsuranceTerms(0.1), MODEL)
            rep = simulate_paths(res, sched, table, MODEL)
            shortfalls += len(rep.shortfalls)
            transitions += rep.transitions
    results, elapsed = multi_sweep
    per = [results[n].per_policy for n in SWEEP_NS]
    monotone = all(a >= b - 1e-9 for a, b in zip(per, per[1:]))
    ok = one_period <= 1e-9 and shortfalls == 0 and monotone and elapsed < 120
    curve = ", ".join(f"{n}:{v:.3f}" for n, v in zip(SWEEP_NS, per))
    report(
        8, ok,
        f"T=1 gap {one_period:.1e}; {transitions} transitions, {shortfalls} shortfalls; "
        f"v0/n {curve}; sweep {elapsed:.0f}s",
    )
