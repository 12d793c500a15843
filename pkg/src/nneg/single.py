"""Closed-form cheapest superhedge for a homogeneous book over one period.

Work is in normalised units: the loan sits in ``(S0 d, S0 u]`` and
``L - S0 d = 1``, so one property put pays 1 in the down state and costs
``q``. The three candidate hedges are

* ``XOL_PLUS_PUTS``: ``e`` puts and one XoL, cost ``e q + x0``
* ``GLA_ONLY``: one GLA, cost ``n p``
* ``ALL_PUTS``: ``n`` puts, cost ``n q``

Each comes with a pricing measure on ``(deaths, up/down)`` whose expected
claim equals the cost, which proves minimality by weak duality. When the
excess is an integer the measure is the textbook three-atom construction.
For a fractional excess the atom "at e" is not a state; the measure is then
solved for on the states where the hedge is tight, and if none exists the
closed-form hedge is not minimal and the certificate comes from the
reduced-state LP instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import simplex as sx
from .errors import ArbitrageError, CertificateUnavailable, DomainError, InternalInconsistency, ParameterError
from .insurance import ReinsurerBasis, xol_excess, xol_price_binomial, xol_price_bounds
from .lp import build_symmetric_instance, require_optimal, solve_primal
from .market import PropertyBinomial, normalize_claim, put_price_one_period

XOL_PLUS_PUTS = "XOL_PLUS_PUTS"
GLA_ONLY = "GLA_ONLY"
ALL_PUTS = "ALL_PUTS"

TOL = 1e-9


@dataclass(frozen=True)
class HedgePortfolio:
    puts: float = 0.0
    gla: float = 0.0
    xol: float = 0.0
    cash: float = 0.0
    stock: float = 0.0
    sla: tuple[float, ...] = ()

    def scaled(self, factor: float) -> HedgePortfolio:
        return HedgePortfolio(
            self.puts * factor,
            self.gla * factor,
            self.xol * factor,
            self.cash * factor,
            self.stock * factor,
            tuple(s * factor for s in self.sla),
        )

    def value(self, k: int, up: bool, e: float, q: float) -> float:
        """Normalised time-one value with ``k`` deaths (stock priced 1, ``u = 1+q``, ``d = q``)."""
        stock_px = 1.0 + q if up else q
        return (
            self.puts * (0.0 if up else 1.0)
            + self.gla * k
            + self.xol * max(k - e, 0.0)
            + self.cash
            + self.stock * stock_px
        )

    def cost(self, n: int, p: float, q: float, x0: float) -> float:
        return self.puts * q + self.gla * n * p + self.xol * x0 + self.cash + self.stock


@dataclass
class ExtremalMeasure:
    """Joint law of deaths and the property move: ``x[k]`` up, ``y[k]`` down."""

    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x) - 1

    @property
    def z(self) -> np.ndarray:
        return self.x + self.y

    def expected_claim(self, claim_per_death: float = 1.0) -> float:
        return claim_per_death * float(np.dot(np.arange(self.n + 1), self.y))

    def moments(self, e: float) -> dict[str, float]:
        k = np.arange(self.n + 1, dtype=float)
        z = self.z
        return {
            "mass": float(z.sum()),
            "down": float(self.y.sum()),
            "gla": float(k @ z),
            "xol": float(np.maximum(k - e, 0.0) @ z),
        }


@dataclass
class SuperhedgeResult:
    case_id: str
    cost: float
    portfolio: HedgePortfolio
    certificate: ExtremalMeasure
    n: int
    p: float
    q: float
    e: float
    x0: float

    @property
    def certified_cost(self) -> float:
        """Expected claim under the certificate: the true minimal cost."""
        return self.certificate.expected_claim()

    @property
    def is_minimal(self) -> bool:
        return abs(self.cost - self.certified_cost) <= TOL * max(1.0, abs(self.cost))

    @property
    def per_life(self) -> float:
        return self.cost / self.n


@dataclass
class CheckReport:
    passed: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


# -- classification ------------------------------------------------------------


def check_quote(n: int, p: float, q: float, e: float, x0: float) -> None:
    """Reject parameter tuples outside the domain or admitting an arbitrage."""
    if n < 1:
        raise ParameterError(f"need at least one life, got n={n}")
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise ParameterError(f"p and q must lie in (0, 1), got p={p}, q={q}")
    if e >= n:
        raise DomainError(f"excess {e} >= n={n}: the XoL never pays")
    if e < 0.0:
        raise ParameterError(f"excess must be nonnegative, got {e}")
    if x0 < 0.0:
        raise ArbitrageError(f"negative XoL price {x0}")
    low, high = xol_price_bounds(n, p, e)
    redundant = e == 0.0 or n == 1
    tol = TOL * max(1.0, n)
    if redundant:
        # the XoL is a multiple of the GLA and must be priced as one
        if abs(x0 - high) > tol:
            raise ArbitrageError(
                f"XoL replicates {n - e:g}/{n} GLA; price {x0} != {high}"
            )
        return
    if not x0 / (n - e) < p:
        raise ArbitrageError(f"x0/(n-e) = {x0 / (n - e):.10g} >= p = {p}")
    if x0 < low - tol:
        raise ArbitrageError(f"x0 = {x0:.10g} below the lower no-arbitrage bound {low:.10g}")


def classify_case(n: int, p: float, q: float, e: float, x0: float) -> str:
    check_quote(n, p, q, e, x0)
    if x0 >= q * (n - e):
        return ALL_PUTS
    if n * p < e * q + x0:
        return GLA_ONLY
    return XOL_PLUS_PUTS


# -- certificates --------------------------------------------------------------


def _integral(e: float) -> int | None:
    r = round(e)
    return int(r) if abs(e - r) <= 1e-9 else None


def _case_measure(case: str, n: int, p: float, q: float, e: int, x0: float) -> ExtremalMeasure:
    x = np.zeros(n + 1)
    y = np.zeros(n + 1)
    r = x0 / (n - e)
    if e == 0:
        if case == GLA_ONLY:
            y[n], y[0], x[0] = p, q - p, 1.0 - q
        else:
            y[n], x[n], x[0] = q, p - q, 1.0 - p
    elif case == XOL_PLUS_PUTS:
        y[n] += r
        y[e] += q - r
        x[e] += (n * p - (e * q + x0)) / e
        x[0] += 1.0 - q - (n * p - (e * q + x0)) / e
    elif case == GLA_ONLY:
        y[n] += r
        y[e] += (n / e) * (p - r)
        y[0] += q - (n * p - x0) / e
        x[0] += 1.0 - q
    else:
        y[n] += q
        x[n] += r - q
        x[e] += (n / e) * (p - r)
        x[0] += 1.0 - (n * p - x0) / e
    lowest = min(x.min(), y.min())
    if lowest < -TOL:
        raise InternalInconsistency(f"{case} construction produced mass {lowest:.3g}")
    return ExtremalMeasure(np.maximum(x, 0.0), np.maximum(y, 0.0))


def _tight_measure(case: str, n: int, p: float, q: float, e: float, x0: float) -> ExtremalMeasure:
    """Pricing measure supported where the case's hedge pays exactly the claim."""
    k = np.arange(n + 1, dtype=float)
    if case == XOL_PLUS_PUTS:
        up_ok, down_ok = k <= e, k >= e
    elif case == GLA_ONLY:
        up_ok, down_ok = k == 0, np.ones(n + 1, bool)
    else:
        up_ok, down_ok = np.ones(n + 1, bool), k == n
    kk = np.concatenate([k[up_ok], k[down_ok]])
    is_down = np.concatenate([np.zeros(up_ok.sum()), np.ones(down_ok.sum())])
    A = np.vstack([np.ones_like(kk), is_down, kk, np.maximum(kk - e, 0.0)])
    b = np.array([1.0, q, n * p, x0])
    res = sx.simplex(A, b, np.zeros(kk.size))
    if res.status != sx.OPTIMAL:
        raise CertificateUnavailable(f"no pricing measure is tight for {case} at e={e}")
    x = np.zeros(n + 1)
    y = np.zeros(n + 1)
    nu = int(up_ok.sum())
    x[up_ok] = res.x[:nu]
    y[down_ok] = res.x[nu:]
    return ExtremalMeasure(x, y)


def build_extremal_measure(case: str, n: int, p: float, q: float, e: float, x0: float) -> ExtremalMeasure:
    ei = _integral(e)
    if ei is not None:
        return _case_measure(case, n, p, q, ei, x0)
    return _tight_measure(case, n, p, q, e, x0)


def lp_measure(n: int, p: float, q: float, e: float, x0: float) -> ExtremalMeasure:
    """Maximising pricing measure from the reduced-state LP."""
    inst = build_symmetric_instance(n, p, q, e, x0)
    sol = require_optimal(solve_primal(inst))
    x = np.zeros(n + 1)
    y = np.zeros(n + 1)
    for (k, up), m in zip(inst.states, sol.dual):
        (x if up else y)[k] += m
    return ExtremalMeasure(x, y)


def verify_certificate(
    measure: ExtremalMeasure, n: int, p: float, q: float, e: float, x0: float,
    claimed_cost: float, tol: float = TOL,
) -> CheckReport:
    bad = []
    if len(measure.x) != n + 1 or len(measure.y) != n + 1:
        return CheckReport(False, [f"measure has {len(measure.x)} atoms per branch, need {n + 1}"])
    if min(measure.x.min(), measure.y.min()) < -tol:
        bad.append("negative mass")
    m = measure.moments(e)
    targets = {"mass": 1.0, "down": q, "gla": n * p, "xol": x0}
    for key, want in targets.items():
        if abs(m[key] - want) > tol * max(1.0, abs(want)):
            bad.append(f"{key} constraint: {m[key]:.12g} != {want:.12g}")
    claim = measure.expected_claim()
    if abs(claim - claimed_cost) > tol * max(1.0, abs(claimed_cost)):
        bad.append(f"expected claim {claim:.12g} != claimed cost {claimed_cost:.12g}")
    return CheckReport(not bad, bad)


def verify_superhedge(
    portfolio: HedgePortfolio, n: int, q: float, e: float, claim_per_death: float = 1.0,
    tol: float = TOL,
) -> CheckReport:
    """Check the hedge covers ``k * claim_per_death`` in every down state and 0 in every up state."""
    bad = []
    for k in range(n + 1):
        for up in (True, False):
            v = portfolio.value(k, up, e, q)
            c = 0.0 if up else k * claim_per_death
            if v < c - tol * max(1.0, c):
                bad.append(f"k={k} {'up' if up else 'down'}: value {v:.10g} < claim {c:.10g}")
    return CheckReport(not bad, bad)


# -- pricing -------------------------------------------------------------------


def candidate_portfolio(case: str, n: int, e: float) -> HedgePortfolio:
    if case == XOL_PLUS_PUTS:
        return HedgePortfolio(puts=e, xol=1.0)
    if case == GLA_ONLY:
        return HedgePortfolio(gla=1.0)
    return HedgePortfolio(puts=float(n))


def superhedge_price(n: int, p: float, q: float, e: float, x0: float) -> SuperhedgeResult:
    """Cheapest of the three closed-form hedges, with its pricing-measure certificate.

    If the closed-form hedge is not minimal (possible only for a fractional
    excess) the certificate is the LP's maximising measure and
    ``result.is_minimal`` is False; ``result.certified_cost`` is then the
    true minimum.
    """
    case = classify_case(n, p, q, e, x0)
    cost = {XOL_PLUS_PUTS: e * q + x0, GLA_ONLY: n * p, ALL_PUTS: n * q}[case]
    try:
        cert = build_extremal_measure(case, n, p, q, e, x0)
    except CertificateUnavailable:
        cert = lp_measure(n, p, q, e, x0)
    return SuperhedgeResult(case, cost, candidate_portfolio(case, n, e), cert, n, p, q, e, x0)


def minimal_superhedge(n: int, p: float, q: float, e: float, x0: float):
    """Reduced-state LP optimum (always minimal, any excess)."""
    check_quote(n, p, q, e, x0)
    return require_optimal(solve_primal(build_symmetric_instance(n, p, q, e, x0)))


@dataclass
class SinglePeriodQuote:
    """A superhedge in currency units for loan ``L`` on ``n`` lives."""

    result: SuperhedgeResult | None
    normalization: object
    cost: float
    portfolio: HedgePortfolio
    put_strike: float
    put_price: float
    x0: float
    e: float
    lp_cost: float

    @property
    def per_life(self) -> float:
        return self.cost / self.result.n if self.result else 0.0


def price_single(
    model: PropertyBinomial, loan: float, n: int, basis: ReinsurerBasis,
    x0: float | None = None, with_lp: bool = True,
) -> SinglePeriodQuote:
    """Superhedge ``D (L - S_1)^+`` on ``n`` lives with an XoL at excess ``n p (1 + epsilon)``.

    ``x0`` defaults to the binomial price under the reinsurer's loaded
    death probability.
    """
    p, q = basis.p, model.q
    e = xol_excess(n, basis)
    if x0 is None:
        x0 = xol_price_binomial(n, e, basis.b) if e < n else 0.0
    norm = normalize_claim(model, loan)
    if norm.degenerate:
        return SinglePeriodQuote(None, norm, 0.0, HedgePortfolio(), loan, 0.0, x0, e, 0.0)
    s = norm.scale
    # one normalised XoL is ``s`` real contracts, so its normalised price is x0
    res = superhedge_price(n, p, q, e, x0)
    addon = n * p * norm.gla_addon
    pf = res.portfolio
    portfolio = HedgePortfolio(puts=pf.puts, gla=pf.gla * s + norm.gla_addon, xol=pf.xol * s)
    lp_cost = float("nan")
    if with_lp:
        lp_cost = s * minimal_superhedge(n, p, q, e, x0).cost + addon
    return SinglePeriodQuote(
        res, norm, s * res.cost + addon, portfolio, norm.effective_strike,
        put_price_one_period(model, norm.effective_strike), x0, e, lp_cost,
    )
