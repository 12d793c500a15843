"""Linear-programming superhedger and pricing-measure bounds.

A superhedging problem is posed on a finite state space: each asset has a
time-zero price and a payoff per state, and the claim has a value per state.
The cheapest superhedge ``min price.h  s.t.  payoff^T h >= claim`` is solved
through its dual, the search for a pricing measure maximising the expected
claim. Holdings come back as the simplex multipliers of that dual, so every
optimal solution carries its own certificate.

Two instance shapes are supported. SYMMETRIC instances use the reduced
states ``(deaths k, up/down)`` and are exact whenever the claim depends on the
lives only through the number of deaths. FULL instances enumerate all
``2**(n+1)`` states and accept per-life loans and death probabilities.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import simplex as sx
from .errors import (
    ArbitrageError,
    CapacityError,
    CertificateUnavailable,
    DomainError,
    InternalInconsistency,
    ParameterError,
    TableError,
)
from .insurance import NoArbitrageReport, independent_xol_price
from .market import PropertyBinomial

SYMMETRIC = "symmetric"
FULL = "full"
MAX_FULL_LIVES = 20
FEAS_TOL = 1e-9


@dataclass
class LpInstance:
    states: list
    claim: np.ndarray
    asset_names: list[str]
    prices: np.ndarray
    payoffs: np.ndarray  # assets x states
    mode: str = SYMMETRIC

    def __post_init__(self) -> None:
        self.claim = np.asarray(self.claim, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        self.payoffs = np.asarray(self.payoffs, dtype=float)
        if self.payoffs.shape != (len(self.asset_names), len(self.states)):
            raise ParameterError("payoff matrix shape does not match assets x states")
        if not (np.all(np.isfinite(self.claim)) and np.all(np.isfinite(self.payoffs))):
            raise ParameterError("claim and payoffs must be finite")
        if "cash" not in self.asset_names:
            raise ParameterError("instance must include cash")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_assets(self) -> int:
        return len(self.asset_names)

    def portfolio_value(self, holdings) -> np.ndarray:
        h = self._vector(holdings)
        return self.payoffs.T @ h

    def portfolio_cost(self, holdings) -> float:
        return float(self.prices @ self._vector(holdings))

    def dominates(self, holdings, tol: float = FEAS_TOL) -> bool:
        return bool(np.all(self.portfolio_value(holdings) >= self.claim - tol))

    def without(self, *names: str) -> LpInstance:
        keep = [i for i, a in enumerate(self.asset_names) if a not in names]
        return LpInstance(
            self.states,
            self.claim,
            [self.asset_names[i] for i in keep],
            self.prices[keep],
            self.payoffs[keep],
            self.mode,
        )

    def with_claim(self, claim) -> LpInstance:
        return LpInstance(
            self.states, claim, self.asset_names, self.prices, self.payoffs, self.mode
        )

    def _vector(self, holdings) -> np.ndarray:
        if isinstance(holdings, dict):
            return np.array([holdings.get(a, 0.0) for a in self.asset_names])
        return np.asarray(holdings, dtype=float)


@dataclass
class LpSolution:
    status: str
    holdings: dict[str, float] = field(default_factory=dict)
    cost: float = float("nan")
    dual: np.ndarray | None = None
    dual_objective: float = float("nan")
    witness: dict[str, float] | None = None
    iterations: int = 0
    basis: np.ndarray | None = None  # optimal basis of the measure LP, for warm starts

    @property
    def optimal(self) -> bool:
        return self.status == sx.OPTIMAL

    @property
    def gap(self) -> float:
        return abs(self.cost - self.dual_objective)


@dataclass(frozen=True)
class DualBounds:
    p_low: float
    p_high: float


# -- instance builders -------------------------------------------------------


def symmetric_states(n: int, death_range: Sequence[int] | None = None):
    ks = list(range(n + 1)) if death_range is None else list(death_range)
    return [(k, up) for up in (1, 0) for k in ks]


def build_symmetric_instance(
    n: int,
    p: float,
    q: float,
    e: float,
    x0: float,
    claim_per_death: float = 1.0,
    model: PropertyBinomial | None = None,
) -> LpInstance:
    """Reduced-state instance for the NNEG claim ``k * claim_per_death`` in the down states.

    Without an explicit ``model`` the stock is normalised to price one with
    ``u = 1 + q`` and ``d = q``, which has down probability ``q``.
    """
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    if not (0.0 < q < 1.0):
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    states = symmetric_states(n)
    claim = [k * claim_per_death * (1 - up) for k, up in states]
    return symmetric_instance(
        n, states, claim, gla_price=n * p, e=e, x0=x0, q=q, model=model
    )


def symmetric_instance(n, states, claim, gla_price, e, x0, q=None, model=None):
    """Reduced-state instance with an arbitrary claim per ``(k, up)`` state.

    The XoL is dropped when ``e >= n`` (it can never pay).
    """
    if model is None:
        s0, up_px, down_px = 1.0, 1.0 + q, q
    else:
        s0, up_px, down_px = model.s0, model.up_price, model.down_price
    ks = np.array([k for k, _ in states], dtype=float)
    ups = np.array([u for _, u in states], dtype=float)
    names = ["cash", "stock", "gla"]
    prices = [1.0, s0, gla_price]
    rows = [np.ones_like(ks), np.where(ups == 1, up_px, down_px), ks]
    if e is not None and e < n:
        names.append("xol")
        prices.append(x0)
        rows.append(np.maximum(ks - e, 0.0))
    return LpInstance(list(states), np.asarray(claim, float), names, np.array(prices), np.vstack(rows), SYMMETRIC)


@dataclass(frozen=True)
class VaryingLoanBook:
    """Lives with individual property values, loan-to-value ratios and death probabilities.

    ``alphas`` are the down-state shortfalls ``P_i (L_i - S0 d)``.
    """

    property_values: tuple[float, ...]
    ltvs: tuple[float, ...]
    death_probs: tuple[float, ...]
    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.alphas:
            raise DomainError("empty book")
        if any(a <= 0.0 for a in self.alphas):
            raise ParameterError("every shortfall alpha_i must be positive")
        if any(not (0.0 < p < 1.0) for p in self.death_probs):
            raise ParameterError("death probabilities must lie in (0, 1)")

    @classmethod
    def from_rows(cls, model: PropertyBinomial, rows) -> VaryingLoanBook:
        pv, ltv, pr, al = [], [], [], []
        for i, (value, l, p) in enumerate(rows, start=1):
            if not (model.down_price < l < model.up_price):
                raise ParameterError(
                    f"life {i}: ltv {l} outside ({model.down_price}, {model.up_price})"
                )
            if value <= 0.0:
                raise ParameterError(f"life {i}: property value must be positive")
            pv.append(float(value))
            ltv.append(float(l))
            pr.append(float(p))
            al.append(float(value) * (l - model.down_price))
        return cls(tuple(pv), tuple(ltv), tuple(pr), tuple(al))

    @classmethod
    def homogeneous(cls, n: int, p: float, alpha: float = 1.0) -> VaryingLoanBook:
        return cls((1.0,) * n, (float("nan"),) * n, (p,) * n, (alpha,) * n)

    @property
    def n(self) -> int:
        return len(self.alphas)

    @property
    def sigma(self) -> float:
        return float(sum(self.alphas))

    @property
    def weighted_death_prob(self) -> float:
        return float(np.dot(self.alphas, self.death_probs)) / self.sigma


@dataclass(frozen=True)
class BookXoL:
    """Weighted XoL paying ``(sum alpha_i w_i - excess)^+``.

    ``subset`` optionally names the lives (0-based) whose shortfalls add up to
    the excess.
    """

    excess: float
    price: float
    subset: tuple[int, ...] | None = None


def load_book(source: TextIO | str):
    """Rows ``(property_value, ltv, death_prob)`` from a book CSV."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    want = ["property_value", "ltv", "death_prob"]
    if header is None or [h.strip().lower() for h in header] != want:
        raise TableError(f"expected header {','.join(want)!r}", line=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise TableError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            rows.append(tuple(float(c) for c in row))
        except ValueError:
            raise TableError(f"cannot parse row {row!r}", line=lineno) from None
        if not (0.0 < rows[-1][2] < 1.0):
            raise TableError(f"death_prob {rows[-1][2]} outside (0, 1)", line=lineno)
    return rows


def full_states(n: int) -> np.ndarray:
    """All outcomes as a ``(2**(n+1), n+1)`` 0/1 array; column 0 is the up indicator."""
    if n > MAX_FULL_LIVES:
        raise CapacityError(
            f"{n} lives exceeds the full-enumeration limit of {MAX_FULL_LIVES}; "
            "group lives with equal shortfall and death probability into one "
            "symmetric block, or split the book into sub-books of at most "
            f"{MAX_FULL_LIVES} lives"
        )
    idx = np.arange(2 ** (n + 1))
    return ((idx[:, None] >> np.arange(n + 1)) & 1).astype(np.int8)


def build_general_instance(
    model: PropertyBinomial, book: VaryingLoanBook, xol: BookXoL | None
) -> LpInstance:
    omega = full_states(book.n)
    lives = omega[:, 1:].astype(float)
    alphas = np.asarray(book.alphas)
    at_risk = lives @ alphas
    up = omega[:, 0]
    names = ["cash", "stock"] + [f"sla_{i + 1}" for i in range(book.n)] + ["gla"]
    prices = [1.0, model.s0, *book.death_probs, float(np.dot(alphas, book.death_probs))]
    rows = [np.ones(len(omega)), np.where(up == 1, model.up_price, model.down_price)]
    rows += [lives[:, i] for i in range(book.n)]
    rows.append(at_risk)
    if xol is not None:
        names.append("xol")
        prices.append(xol.price)
        rows.append(np.maximum(at_risk - xol.excess, 0.0))
    claim = (1 - up) * at_risk
    states = [tuple(int(v) for v in w) for w in omega]
    return LpInstance(states, claim, names, np.array(prices), np.vstack(rows), FULL)


def build_homogeneous_full_instance(n, p, q, e, x0, claim_per_death=1.0):
    """FULL-mode twin of :func:`build_symmetric_instance` (unit shortfall per life)."""
    model = PropertyBinomial(1.0, 1.0 + q, q)
    book = VaryingLoanBook.homogeneous(n, p, claim_per_death)
    xol = None if e >= n else BookXoL(e * claim_per_death, x0 * claim_per_death)
    inst = build_general_instance(model, book, xol)
    return inst


# -- solvers -----------------------------------------------------------------


def solve_primal(instance: LpInstance, warm_basis=None) -> LpSolution:
    """Cheapest superhedge together with the maximising pricing measure.

    ``warm_basis`` (state indices from an earlier solve of the same shape) is
    only a starting hint; the answer does not depend on it.
    """
    res = sx.simplex(
        instance.payoffs, instance.prices, instance.claim, maximize=True, warm_basis=warm_basis
    )
    names = instance.asset_names
    if res.status == sx.INFEASIBLE:
        witness = dict(zip(names, (-res.farkas).tolist()))
        return LpSolution(sx.UNBOUNDED, witness=witness, iterations=res.iterations)
    if res.status == sx.UNBOUNDED:
        return LpSolution(sx.INFEASIBLE, iterations=res.iterations)
    holdings = dict(zip(names, res.y.tolist()))
    return LpSolution(
        sx.OPTIMAL,
        holdings=holdings,
        cost=float(instance.prices @ res.y),
        dual=res.x,
        dual_objective=float(instance.claim @ res.x),
        iterations=res.iterations,
        basis=res.basis,
    )


def require_optimal(sol: LpSolution, where: str = "") -> LpSolution:
    if sol.status == sx.UNBOUNDED:
        raise ArbitrageError(
            f"quoted prices admit an arbitrage{where}", witness=sol.witness
        )
    if sol.status != sx.OPTIMAL:
        raise InternalInconsistency(f"superhedge LP {sol.status}{where}")
    return sol


def solve_dual_bounds(instance: LpInstance) -> DualBounds:
    """Lowest and highest expected claim over pricing measures on the instance states."""
    hi = sx.simplex(instance.payoffs, instance.prices, instance.claim, maximize=True)
    if hi.status == sx.INFEASIBLE:
        witness = dict(zip(instance.asset_names, (-hi.farkas).tolist()))
        raise ArbitrageError("no pricing measure exists", witness=witness)
    lo = sx.simplex(instance.payoffs, instance.prices, instance.claim, maximize=False)
    return DualBounds(p_low=lo.objective, p_high=hi.objective)


def verify_measure(instance: LpInstance, masses, tol: float = FEAS_TOL) -> list[str]:
    """Violations of nonnegativity or of any asset-pricing equation."""
    masses = np.asarray(masses, dtype=float)
    problems = []
    if np.any(masses < -tol):
        problems.append(f"negative mass {masses.min():.3g}")
    implied = instance.payoffs @ masses
    for name, got, want in zip(instance.asset_names, implied, instance.prices):
        if abs(got - want) > tol * max(1.0, abs(want)):
            problems.append(f"{name}: implied price {got:.12g} != quoted {want:.12g}")
    return problems


# -- varying loans -----------------------------------------------------------


@dataclass(frozen=True)
class StrategyCosts:
    sh1: float
    sh2: float
    sh3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.sh1, self.sh2, self.sh3


def sh_strategy_costs(book: VaryingLoanBook, q: float, xol: BookXoL) -> StrategyCosts:
    """Costs of XoL plus puts, modified GLA, and all puts, each checked to superhedge."""
    if book.n == 0:
        raise DomainError("empty book")
    alphas = np.asarray(book.alphas)
    sigma = book.sigma
    e = xol.excess
    costs = StrategyCosts(
        sh1=e * q + xol.price,
        sh2=float(np.dot(alphas, book.death_probs)),
        sh3=sigma * q,
    )
    if book.n <= MAX_FULL_LIVES:
        omega = full_states(book.n)
        at_risk = omega[:, 1:].astype(float) @ alphas
        down = omega[:, 0] == 0
        claim = np.where(down, at_risk, 0.0)
        payoffs = {
            "SH1": np.where(down, e, 0.0) + np.maximum(at_risk - e, 0.0),
            "SH2": at_risk,
            "SH3": np.where(down, sigma, 0.0),
        }
        for name, value in payoffs.items():
            if np.any(value < claim - FEAS_TOL):
                raise InternalInconsistency(f"{name} fails to superhedge")
    return costs


def xol_arbitrage_bound_heterogeneous(book: VaryingLoanBook, xol: BookXoL) -> NoArbitrageReport:
    sigma = book.sigma
    if math.isclose(sigma, xol.excess, rel_tol=0.0, abs_tol=FEAS_TOL):
        raise DomainError("excess equals total sum at risk; XoL is degenerate")
    ratio = xol.price / (sigma - xol.excess)
    bound = book.weighted_death_prob
    return NoArbitrageReport(passed=ratio < bound, margin=bound - ratio)


def price_book_xol(book: VaryingLoanBook, excess: float) -> float:
    """Weighted XoL price with lives independent at their own death probabilities."""
    return independent_xol_price(book.alphas, book.death_probs, excess)


def find_excess_subset(alphas, e: float, tol: float = 1e-9) -> tuple[int, ...] | None:
    """Some set of lives whose shortfalls sum to ``e``, or None."""
    n = len(alphas)
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            if abs(sum(alphas[i] for i in combo) - e) <= tol * max(1.0, abs(e)):
                return combo
    return None


@dataclass
class StateMeasure:
    masses: dict[tuple[int, ...], float]
    expected_claim: float

    def to_array(self, instance: LpInstance) -> np.ndarray:
        index = {s: i for i, s in enumerate(instance.states)}
        out = np.zeros(instance.n_states)
        for s, m in self.masses.items():
            out[index[s]] += m
        return out


def five_point_certificate(
    book: VaryingLoanBook, q: float, xol: BookXoL, case: int
) -> StateMeasure:
    """Five-point extremal measure for the XoL-plus-puts (case 1) or all-puts (case 3) hedge."""
    if case not in (1, 3):
        raise ParameterError("certificate exists only for case 1 or case 3")
    probs = set(book.death_probs)
    if len(probs) != 1:
        raise CertificateUnavailable("closed-form certificate needs a common death probability")
    p = probs.pop()
    sigma, e, x0 = book.sigma, xol.excess, xol.price
    if sigma <= e:
        raise CertificateUnavailable("excess must be below the total sum at risk")
    subset = xol.subset if xol.subset is not None else find_excess_subset(book.alphas, e)
    if subset is None or abs(sum(book.alphas[i] for i in subset) - e) > FEAS_TOL * max(1.0, e):
        raise CertificateUnavailable(f"no set of lives has shortfalls summing to {e}")
    ratio = x0 / (sigma - e)
    if not e > sigma - e:
        raise CertificateUnavailable("the excess set must carry more than half the sum at risk")
    if 1.0 - 2.0 * p + ratio < -FEAS_TOL:
        raise CertificateUnavailable("need 1 - 2p + x0/(sigma - e) >= 0")
    if ratio > p + FEAS_TOL:
        raise CertificateUnavailable("XoL quote violates no-arbitrage")
    n = book.n
    w_e = tuple([0] + [1 if i in subset else 0 for i in range(n)])
    w_tilde = tuple(1 - v for v in w_e)
    all_dead_down = tuple([0] + [1] * n)
    all_dead_up = tuple([1] + [1] * n)
    w_e_up = tuple([1] + list(w_e[1:]))
    nobody_up = tuple([1] + [0] * n)
    if case == 1:
        if not ratio < q:
            raise CertificateUnavailable("case 1 needs x0/(sigma - e) < q")
        if p < q:
            raise CertificateUnavailable(
                "p < q: the cheapest superhedge may not be one of SH1-SH3; use the LP"
            )
        spec = [
            (all_dead_down, ratio),
            (w_e, q - ratio),
            (w_e_up, p - q),
            (w_tilde, p - ratio),
            (nobody_up, 1.0 - 2.0 * p + ratio),
        ]
    else:
        if not ratio >= q:
            raise CertificateUnavailable("case 3 needs x0/(sigma - e) >= q")
        spec = [
            (all_dead_down, q),
            (all_dead_up, ratio - q),
            (w_e_up, p - ratio),
            (w_tilde, p - ratio),
            (nobody_up, 1.0 - 2.0 * p + ratio),
        ]
    masses: dict[tuple[int, ...], float] = {}
    for state, m in spec:
        if m < -FEAS_TOL:
            raise CertificateUnavailable(f"negative mass {m} at {state}")
        masses[state] = masses.get(state, 0.0) + max(m, 0.0)
    alphas = np.asarray(book.alphas)
    claim = sum(m * (1 - s[0]) * float(np.dot(alphas, s[1:])) for s, m in masses.items())
    return StateMeasure(masses, claim)
