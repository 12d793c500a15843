"""Insurance-market assets: GLA, excess-of-loss reinsurance and its tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class ReinsurerBasis:
    """Excess margin ``epsilon`` and pricing loading ``eta`` on death probability ``p``."""

    p: float
    epsilon: float
    eta: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 1.0):
            raise ParameterError(f"p must lie in (0, 1), got {self.p}")
        if not self.epsilon > 0.0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 <= self.eta < self.epsilon):
            raise ParameterError(
                f"need 0 <= eta < epsilon, got eta={self.eta}, epsilon={self.epsilon}"
            )
        if not self.a < 1.0:
            raise ParameterError(f"p(1+epsilon) = {self.a} must be below 1")

    @property
    def a(self) -> float:
        """Excess per life, ``p(1 + epsilon)``."""
        return self.p * (1.0 + self.epsilon)

    @property
    def b(self) -> float:
        """Reinsurer's loaded death probability ``p(1 + eta)``."""
        return self.p * (1.0 + self.eta)


@dataclass(frozen=True)
class XoLQuote:
    n: int
    e: float
    x0: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.e < self.n):
            raise ParameterError(f"need 0 <= e < n, got e={self.e}, n={self.n}")
        if self.x0 < 0.0:
            raise ParameterError(f"XoL price must be nonnegative, got {self.x0}")


@dataclass(frozen=True)
class GLAQuote:
    n: int
    p: float

    @property
    def price(self) -> float:
        return self.n * self.p


@dataclass(frozen=True)
class NoArbitrageReport:
    passed: bool
    margin: float

    def __bool__(self) -> bool:
        return self.passed


def xol_excess(n: int, basis: ReinsurerBasis) -> float:
    if n < 1:
        raise ParameterError(f"need at least one life, got n={n}")
    return n * basis.a


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) probabilities built by the multiplicative recurrence in log space."""
    if n == 0:
        return np.ones(1)
    if p <= 0.0 or p >= 1.0:
        out = np.zeros(n + 1)
        out[0 if p <= 0.0 else n] = 1.0
        return out
    k = np.arange(n, dtype=float)
    steps = np.log((n - k) / (k + 1.0)) + (math.log(p) - math.log1p(-p))
    logpmf = np.empty(n + 1)
    logpmf[0] = n * math.log1p(-p)
    logpmf[1:] = logpmf[0] + np.cumsum(steps)
    return np.exp(logpmf)


def xol_price_binomial(n: int, e: float, death_prob: float) -> float:
    """Expected ``(D - e)^+`` for ``D ~ Binomial(n, death_prob)``."""
    if not (0.0 <= e < n):
        raise DomainError(f"degenerate contract: need 0 <= e < n, got e={e}, n={n}")
    if not (0.0 < death_prob < 1.0):
        raise ParameterError(f"death_prob must lie in (0, 1), got {death_prob}")
    start = math.floor(e) + 1
    pmf = binomial_pmf(n, death_prob)[start:]
    k = np.arange(start, n + 1, dtype=float)
    return float(np.dot(k - e, pmf))


def rate_function(p: float, a: float) -> float:
    """Bernoulli large-deviation rate: relative entropy of ``a`` from ``p``."""
    if not (0.0 < p < 1.0 and 0.0 < a < 1.0):
        raise DomainError(f"rate function needs p, a in (0, 1), got p={p}, a={a}")
    return a * math.log(a / p) + (1.0 - a) * math.log((1.0 - a) / (1.0 - p))


def ldp_price_bound(n: int, basis: ReinsurerBasis) -> float:
    """Upper bound ``(n - floor(e(n))) exp(-n I_b(a))`` on the loaded XoL price."""
    if n < 1:
        raise ParameterError(f"need at least one life, got n={n}")
    e = xol_excess(n, basis)
    return (n - math.floor(e)) * math.exp(-n * rate_function(basis.b, basis.a))


def check_no_arbitrage(quote: XoLQuote, p: float) -> NoArbitrageReport:
    ratio = quote.x0 / (quote.n - quote.e)
    return NoArbitrageReport(passed=ratio < p, margin=p - ratio)


def xol_price_bounds(n: int, p: float, e: float) -> tuple[float, float]:
    """Range of XoL prices consistent with some pricing measure given the GLA price.

    The upper end is the chord ``p (n - e)``; the lower end is the convex
    minorant of ``k -> (k - e)^+`` on ``{0..n}`` evaluated at the mean ``n p``.
    Strictly inside the range an equivalent measure exists as well.
    """
    mean = n * p
    lo, hi = math.floor(e), math.ceil(e)
    if mean <= lo:
        low = 0.0
    elif mean >= hi:
        low = mean - e
    else:
        low = (mean - lo) * (hi - e)
    return low, p * (n - e)


def asymptotic_regime_test(n: int, q: float, basis: ReinsurerBasis, x0: float) -> bool:
    """True when ``e(n)`` puts plus one XoL is the minimal superhedge.

    Equivalent to both ``x0 / (n - e) < q`` and ``e q + x0 < n p``.
    """
    p, eps = basis.p, basis.epsilon
    if not max(p, q) < 1.0 / (1.0 + eps):
        raise DomainError(
            f"regime undefined: max(p, q) = {max(p, q)} >= 1/(1+epsilon) = {1 / (1 + eps)}"
        )
    return x0 / n < min(p * (1.0 - q * (1.0 + eps)), q * (1.0 - p * (1.0 + eps)))


def independent_xol_price(alphas, death_probs, e: float) -> float:
    """Price of the weighted XoL ``(sum alpha_i w_i - e)^+`` under independent lives."""
    alphas = np.asarray(alphas, dtype=float)
    probs = np.asarray(death_probs, dtype=float)
    n = alphas.size
    # distribution of the sum at risk, built life by life as a dict of atoms
    atoms = {0.0: 1.0}
    for a, p in zip(alphas, probs):
        nxt: dict[float, float] = {}
        for s, w in atoms.items():
            nxt[s] = nxt.get(s, 0.0) + w * (1.0 - p)
            nxt[s + a] = nxt.get(s + a, 0.0) + w * p
        atoms = nxt
    if n == 0:
        return 0.0
    return float(sum(max(s - e, 0.0) * w for s, w in atoms.items()))
