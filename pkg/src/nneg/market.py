"""Binomial property model, loan normalisation and the one-period put.

Everything here works in the normalised market (cash bond worth one at both
dates). Interest only re-enters through :func:`apply_interest` when payout
schedules are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ModelError, NormalizationError, ParameterError

ABS_TOL = 1e-9


@dataclass(frozen=True)
class PropertyBinomial:
    """One-period binomial tree for the property stock."""

    s0: float
    u: float
    d: float

    def __post_init__(self) -> None:
        if not self.s0 > 0.0:
            raise ModelError(f"s0 must be positive, got {self.s0}")
        if not (0.0 < self.d < 1.0 < self.u):
            raise ModelError(f"need 0 < d < 1 < u, got d={self.d}, u={self.u}")

    @property
    def q(self) -> float:
        return risk_neutral_down_prob(self)

    @property
    def up_price(self) -> float:
        return self.s0 * self.u

    @property
    def down_price(self) -> float:
        return self.s0 * self.d


@dataclass(frozen=True)
class ClaimNormalization:
    gla_addon: float
    effective_strike: float
    scale: float
    degenerate: bool


def risk_neutral_down_prob(model: PropertyBinomial) -> float:
    """Probability of the down move under any martingale measure."""
    u, d = model.u, model.d
    if d >= 1.0 or u <= 1.0 or d <= 0.0:
        raise ModelError(f"need 0 < d < 1 < u, got d={d}, u={u}")
    return (u - 1.0) / (u - d)


def crr_from_vol(s0: float, vol: float) -> PropertyBinomial:
    """Symmetric exponential calibration ``u = e^vol``, ``d = e^-vol``."""
    if not vol > 0.0:
        raise ParameterError(f"volatility must be positive, got {vol}")
    return PropertyBinomial(s0=s0, u=math.exp(vol), d=math.exp(-vol))


def normalize_claim(model: PropertyBinomial, loan: float) -> ClaimNormalization:
    """Clamp the loan into the band ``(S0 d, S0 u]``.

    The part of the loan above the up price is a sure loss per death and is
    covered by ``gla_addon`` GLAs; the remainder is a put whose down payoff is
    ``scale``. The full superhedge cost is therefore
    ``n * p * gla_addon + scale * normalised_cost``.
    """
    if loan < 0.0:
        raise ParameterError(f"loan must be nonnegative, got {loan}")
    if loan <= model.down_price:
        return ClaimNormalization(0.0, loan, 0.0, True)
    strike = min(loan, model.up_price)
    return ClaimNormalization(
        gla_addon=max(loan - model.up_price, 0.0),
        effective_strike=strike,
        scale=strike - model.down_price,
        degenerate=False,
    )


def put_price_one_period(model: PropertyBinomial, strike: float) -> float:
    lo, hi = model.down_price, model.up_price
    if not (lo < strike <= hi * (1.0 + 1e-15)):
        raise NormalizationError(
            f"strike {strike} outside ({lo}, {hi}]; normalise the claim first"
        )
    return (strike - lo) * model.q


def apply_interest(normalized_cost: float, r: float, payouts=None):
    """Return the (unchanged) cost and the payouts inflated by ``1 + r``.

    Pricing constraints are invariant under inflating payouts and
    discounting by the same factor, so the time-zero cost never moves.
    """
    if r <= -1.0:
        raise ParameterError(f"interest rate must exceed -1, got {r}")
    scaled = None if payouts is None else [x * (1.0 + r) for x in payouts]
    return normalized_cost, scaled
