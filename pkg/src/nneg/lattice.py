"""Multi-period superhedge on the (time, cumulative deaths, price level) lattice.

Every node holds a one-period hedge in cash, the property stock, a GLA on the
survivors and an XoL on the survivors. The hedge must pay, in each successor
state, the NNEG claims of the lives dying in the period plus the set-up cost
of the successor's own hedge. Costs are filled in backwards from the last
period; the root cost is the time-zero price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import simplex as sx
from .errors import ArbitrageError, InternalInconsistency, ParameterError
from .insurance import xol_price_binomial
from .lp import symmetric_instance, solve_primal
from .market import PropertyBinomial, normalize_claim
from .mortality import MortalityTable, expected_deaths_schedule, max_horizon, period_death_prob
from .single import check_quote, superhedge_price

HOLDINGS = ("cash", "stock", "gla", "xol")
TOL = 1e-9


@dataclass(frozen=True)
class PolicySchedule:
    initial_loan: float
    loan_rate: float
    horizon: int
    start_age: int
    n: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ParameterError(f"horizon must be at least 1, got {self.horizon}")
        if self.n < 0:
            raise ParameterError(f"n must be nonnegative, got {self.n}")
        if self.initial_loan < 0.0:
            raise ParameterError("initial loan must be nonnegative")
        if self.loan_rate <= -1.0:
            raise ParameterError("loan rate must exceed -1")


@dataclass(frozen=True)
class ReinsuranceTerms:
    """Per-node XoL: excess ``m p_t (1 + epsilon)``, priced at death probability ``p_t (1 + eta)``."""

    epsilon: float
    eta: float = 0.0

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ParameterError("epsilon must be positive")
        if not (0.0 <= self.eta < self.epsilon):
            raise ParameterError("need 0 <= eta < epsilon")


@dataclass(frozen=True)
class LatticeNode:
    t: int
    k: int
    j: int
    price: float


@dataclass
class NodeHedge:
    cost: float
    holdings: np.ndarray  # cash, stock, gla, xol
    xol_excess: float | None = None
    xol_price: float = 0.0


@dataclass
class MultiPeriodResult:
    v0: float
    costs: list[np.ndarray]  # costs[t][k, j]
    holdings: list[np.ndarray]  # holdings[t][k, j, :]
    dcf_bs: float
    n: int
    horizon: int
    xol_nodes: int = 0
    excess: list[np.ndarray] = field(default_factory=list)

    @property
    def per_policy(self) -> float:
        return self.v0 / self.n if self.n else 0.0

    def node_count(self, t: int) -> int:
        return self.costs[t].size


def accumulate_loan(schedule: PolicySchedule, t: int) -> float:
    if not (0 <= t <= schedule.horizon):
        raise ParameterError(f"t={t} outside 0..{schedule.horizon}")
    return schedule.initial_loan * (1.0 + schedule.loan_rate) ** t


def node_price(model: PropertyBinomial, t: int, j: int) -> float:
    return model.s0 * model.u**j * model.d ** (t - j)


def _death_support(m: int, p: float) -> range:
    if p <= 0.0:
        return range(0, 1)
    if p >= 1.0:
        return range(m, m + 1)
    return range(0, m + 1)


def node_superhedge(
    node: LatticeNode,
    schedule: PolicySchedule,
    table: MortalityTable,
    terms: ReinsuranceTerms,
    model: PropertyBinomial,
    next_costs: np.ndarray | None,
    cross_check: bool = False,
    warm: dict | None = None,
) -> NodeHedge:
    """Cheapest one-period hedge at ``node``.

    ``next_costs[k', j']`` are the successor set-up costs at ``t + 1`` (None
    in the last period). ``warm`` maps a survivor count to the last optimal
    basis seen for it and is updated in place.
    """
    n = schedule.n
    m = n - node.k
    if m == 0:
        return NodeHedge(0.0, np.zeros(4))
    p = period_death_prob(table, schedule.start_age + node.t)
    loan = accumulate_loan(schedule, node.t + 1)
    up_px, down_px = node.price * model.u, node.price * model.d
    deaths = _death_support(m, p)
    states = [(jd, up) for up in (1, 0) for jd in deaths]
    claim = np.empty(len(states))
    for i, (jd, up) in enumerate(states):
        s1 = up_px if up else down_px
        c = jd * max(loan - s1, 0.0)
        if next_costs is not None:
            c += next_costs[node.k + jd, node.j + up]
        claim[i] = c
    top = float(claim.max())
    if top <= 0.0:
        return NodeHedge(0.0, np.zeros(4))
    if float(claim.min()) == top:
        return NodeHedge(top, np.array([top, 0.0, 0.0, 0.0]))

    e = m * p * (1.0 + terms.epsilon)
    x0 = 0.0
    use_xol = 0.0 < p < 1.0 and e < m
    if use_xol:
        x0 = xol_price_binomial(m, e, p * (1.0 + terms.eta))
        try:
            check_quote(m, p, model.q, e, x0)
        except ArbitrageError as exc:
            raise ArbitrageError(str(exc), node=(node.t, node.k, node.j)) from None
    stock = PropertyBinomial(node.price, model.u, model.d)
    inst = symmetric_instance(
        m, states, claim, gla_price=m * p, e=e if use_xol else None, x0=x0, model=stock
    )
    key = (m, use_xol)
    sol = solve_primal(inst, warm_basis=None if warm is None else warm.get(key))
    if warm is not None and sol.basis is not None and len(sol.basis) == inst.n_assets:
        warm[key] = sol.basis
    if sol.status == sx.UNBOUNDED:
        raise ArbitrageError("node LP unbounded", witness=sol.witness, node=(node.t, node.k, node.j))
    if sol.status != sx.OPTIMAL:
        raise InternalInconsistency(f"node {(node.t, node.k, node.j)}: LP {sol.status}")
    if abs(sol.cost - sol.dual_objective) > 1e-8 * max(1.0, abs(sol.cost)):
        raise InternalInconsistency(f"node {(node.t, node.k, node.j)}: duality gap {sol.gap}")
    h = np.array([sol.holdings.get(a, 0.0) for a in HOLDINGS])
    if cross_check and next_costs is None and use_xol:
        _cross_check_terminal(sol.cost, m, p, model.q, e, x0, stock, loan, node)
    return NodeHedge(sol.cost, h, e if use_xol else None, x0)


def _cross_check_terminal(lp_cost, m, p, q, e, x0, stock, loan, node) -> None:
    norm = normalize_claim(stock, loan)
    if norm.degenerate:
        closed = 0.0
        minimal = True
    else:
        res = superhedge_price(m, p, q, e, x0)
        closed = norm.scale * res.cost + m * p * norm.gla_addon
        minimal = res.is_minimal
    scale = max(1.0, abs(closed))
    if lp_cost > closed + 1e-8 * scale or (minimal and abs(lp_cost - closed) > 1e-8 * scale):
        raise InternalInconsistency(
            f"node {(node.t, node.k, node.j)}: LP {lp_cost!r} vs closed form {closed!r}"
        )


def backward_induct(
    schedule: PolicySchedule,
    table: MortalityTable,
    terms: ReinsuranceTerms,
    model: PropertyBinomial,
    vol: float | None = None,
    deferment: float = 0.0,
    cross_check: bool = True,
) -> MultiPeriodResult:
    """Fill node costs from the last period back to the root.

    The horizon is truncated at the table's terminal age. ``vol`` (default
    ``ln u``) feeds the Black-Scholes comparator only. With ``cross_check``
    every last-period node LP is compared with the closed-form hedge: the LP
    may never exceed it, and must match it whenever the closed form is known
    to be minimal.
    """
    T = min(schedule.horizon, max_horizon(table, schedule.start_age))
    n = schedule.n
    costs: list[np.ndarray] = [None] * (T + 1)  # type: ignore[list-item]
    holdings: list[np.ndarray] = [None] * (T + 1)  # type: ignore[list-item]
    excess: list[np.ndarray] = [None] * (T + 1)  # type: ignore[list-item]
    costs[T] = np.zeros((n + 1, T + 1))
    xol_nodes = 0
    for t in range(T - 1, -1, -1):
        c = np.zeros((n + 1, t + 1))
        h = np.zeros((n + 1, t + 1, 4))
        ex = np.full((n + 1, t + 1), np.nan)
        nxt = costs[t + 1] if t + 1 < T else None
        warm: dict = {}
        for j in range(t + 1):
            price = node_price(model, t, j)
            for k in range(n + 1):
                node = LatticeNode(t, k, j, price)
                hedge = node_superhedge(node, schedule, table, terms, model, nxt, cross_check, warm)
                c[k, j] = hedge.cost
                h[k, j] = hedge.holdings
                if hedge.xol_excess is not None:
                    ex[k, j] = hedge.xol_excess
                    xol_nodes += 1
        costs[t], holdings[t], excess[t] = c, h, ex
    sched_T = PolicySchedule(
        schedule.initial_loan, schedule.loan_rate, T, schedule.start_age, n
    )
    vol = math.log(model.u) if vol is None else vol
    dcf = dcf_black_scholes(sched_T, table, vol, deferment, s0=model.s0)
    return MultiPeriodResult(
        float(costs[0][0, 0]), costs, holdings, dcf, n, T, xol_nodes, excess
    )


# -- Black-Scholes comparator ----------------------------------------------------


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function (relative accuracy ~1e-16)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def bs_put(s0: float, strike: float, vol: float, t: float, r: float = 0.0, deferment: float = 0.0) -> float:
    """European put on a stock paying a continuous deferment (dividend) yield."""
    if not (s0 > 0.0 and strike > 0.0 and vol > 0.0 and t > 0.0):
        raise ParameterError("bs_put needs positive s0, strike, vol and t")
    sd = vol * math.sqrt(t)
    d1 = (math.log(s0 / strike) + (r - deferment + 0.5 * vol * vol) * t) / sd
    d2 = d1 - sd
    return strike * math.exp(-r * t) * norm_cdf(-d2) - s0 * math.exp(-deferment * t) * norm_cdf(-d1)


def dcf_black_scholes(
    schedule: PolicySchedule, table: MortalityTable, vol: float, deferment: float = 0.0,
    s0: float = 100.0,
) -> float:
    """Expected deaths per period times the put struck at that period's loan."""
    deaths = expected_deaths_schedule(table, schedule.start_age, schedule.n, schedule.horizon)
    total = 0.0
    for t, q_t in enumerate(deaths, start=1):
        loan = accumulate_loan(schedule, t)
        if q_t > 0.0 and loan > 0.0:
            total += q_t * bs_put(s0, loan, vol, float(t), 0.0, deferment)
    return total


# -- verification ------------------------------------------------------------------


@dataclass
class PathReport:
    transitions: int
    worst_surplus: float
    shortfalls: list[tuple]
    path_surplus: list[float]

    @property
    def passed(self) -> bool:
        return not self.shortfalls


def simulate_paths(
    result: MultiPeriodResult,
    schedule: PolicySchedule,
    table: MortalityTable,
    model: PropertyBinomial,
    tol: float = 1e-9,
) -> PathReport:
    """Walk every path of the lattice, rebalancing into each node's hedge.

    At every transition the maturing hedge must cover the period's claims and
    the next hedge's set-up cost; the excess is surplus released on that path.
    """
    T, n = result.horizon, result.n
    shortfalls: list[tuple] = []
    totals: list[float] = []
    count = 0
    worst = math.inf

    def walk(t: int, k: int, j: int, acc: float) -> None:
        nonlocal count, worst
        if t == T or k == n:
            totals.append(acc)
            return
        price = node_price(model, t, j)
        h = result.holdings[t][k, j]
        m = n - k
        p = period_death_prob(table, schedule.start_age + t)
        e = result.excess[t][k, j]
        loan = accumulate_loan(schedule, t + 1)
        for up in (1, 0):
            s1 = price * (model.u if up else model.d)
            for jd in _death_support(m, p):
                value = h[0] + h[1] * s1 + h[2] * jd
                if not np.isnan(e):
                    value += h[3] * max(jd - e, 0.0)
                nxt = result.costs[t + 1][k + jd, j + up] if t + 1 < T else 0.0
                need = jd * max(loan - s1, 0.0) + nxt
                surplus = value - need
                count += 1
                worst = min(worst, surplus)
                if surplus < -tol * max(1.0, need):
                    shortfalls.append((t, k, j, jd, up, surplus))
                walk(t + 1, k + jd, j + up, acc + surplus)

    walk(0, 0, 0, 0.0)
    return PathReport(count, worst, shortfalls, totals)
