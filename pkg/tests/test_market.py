import math

import pytest

from nneg.errors import ModelError, NormalizationError, ParameterError
from nneg.market import (
    PropertyBinomial,
    apply_interest,
    crr_from_vol,
    normalize_claim,
    put_price_one_period,
    risk_neutral_down_prob,
)


def test_down_probability_examples():
    assert risk_neutral_down_prob(PropertyBinomial(100, 1.6, 0.5)) == pytest.approx(6 / 11)
    assert crr_from_vol(100, 0.15).q == pytest.approx(0.5374, abs=1e-4)
    assert PropertyBinomial(1, 2, 0.5).q == pytest.approx(2 / 3)


@pytest.mark.parametrize("u,d", [(1.0, 0.5), (1.5, 1.0), (0.9, 0.5), (2.0, 0.0)])
def test_invalid_factors_rejected(u, d):
    with pytest.raises(ModelError):
        PropertyBinomial(100, u, d)


def test_crr_calibration():
    m = crr_from_vol(100, 0.15)
    assert m.u == pytest.approx(1.161834, abs=1e-6)
    assert m.d == pytest.approx(0.860708, abs=1e-6)
    assert m.down_price + 1 == pytest.approx(87.07, abs=0.01)
    half = crr_from_vol(1, math.log(2))
    assert (half.u, half.d) == (pytest.approx(2.0), pytest.approx(0.5))
    with pytest.raises(ParameterError):
        crr_from_vol(100, 0.0)


def test_normalize_claim_cases():
    m = crr_from_vol(100, 0.15)
    n = normalize_claim(m, 87.07)
    assert n.gla_addon == 0.0 and n.scale == pytest.approx(1.0, abs=0.005)
    assert normalize_claim(PropertyBinomial(100, 1.2, 0.9), 85).degenerate
    big = normalize_claim(PropertyBinomial(100, 1.2, 0.8), 130)
    assert (big.gla_addon, big.effective_strike, big.scale) == (10, 120, 40)
    assert not big.degenerate
    with pytest.raises(ParameterError):
        normalize_claim(m, -1)


def test_put_price_examples():
    m = PropertyBinomial(100, 1.6, 0.5)
    assert put_price_one_period(m, 90) == pytest.approx(40 * 6 / 11)
    assert put_price_one_period(m, m.down_price + 1) == pytest.approx(m.q)
    assert put_price_one_period(PropertyBinomial(1, 2, 0.5), 1) == pytest.approx(1 / 3)
    # top of the band: S0 (u - d) q = S0 (u - 1)
    assert put_price_one_period(m, m.up_price) == pytest.approx(100 * 0.6)
    with pytest.raises(NormalizationError):
        put_price_one_period(m, 45)
    with pytest.raises(NormalizationError):
        put_price_one_period(m, 170)


def test_q_monotone_in_factors():
    # dq/du = (1 - d)/(u - d)^2 > 0: a larger up move needs more down weight
    qs_u = [PropertyBinomial(1, u, 0.5).q for u in (1.1, 1.5, 2.0, 3.0)]
    qs_d = [PropertyBinomial(1, 1.5, d).q for d in (0.1, 0.5, 0.9)]
    assert all(a < b for a, b in zip(qs_u, qs_u[1:]))
    assert all(a < b for a, b in zip(qs_d, qs_d[1:]))


def test_apply_interest():
    assert apply_interest(10, 0) == (10, None)
    cost, pays = apply_interest(10, 0.05, [1.0, 2.0])
    assert cost == 10 and pays == [pytest.approx(1.05), pytest.approx(2.1)]
    assert apply_interest(0, 0.3)[0] == 0
    with pytest.raises(ParameterError):
        apply_interest(1, -1)
