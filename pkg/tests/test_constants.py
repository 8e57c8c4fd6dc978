import math

import pytest
from hypothesis import given, strategies as st

from prodsets.constants import (
    derive_params,
    iterated_log,
    mn_prediction,
    params_from_loglog,
    taylor_inequality_check,
    taylor_lhs,
    theta,
    theta_forms,
)


def test_iterated_log_identities():
    assert iterated_log(math.e, 1) == pytest.approx(1.0)
    assert iterated_log(math.exp(math.e), 2) == pytest.approx(1.0)
    assert iterated_log(10**6, 2) == pytest.approx(2.625791914476011, rel=1e-12)


@pytest.mark.parametrize("x,j", [(1, 2), (0, 1), (-3, 1), (2, 3)])
def test_iterated_log_domain(x, j):
    with pytest.raises(ValueError):
        iterated_log(x, j)


def test_iterated_log_accepts_huge_ints():
    assert iterated_log(10**400, 1) == pytest.approx(400 * math.log(10))


@given(st.floats(min_value=1.5, max_value=300.0), st.integers(min_value=1, max_value=2))
def test_iterated_log_shift(y, j):
    try:
        expected = iterated_log(y, j)
    except ValueError:
        return
    assert iterated_log(math.exp(y), j + 1) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_theta():
    first, second = theta_forms()
    assert abs(first - second) < 1e-12
    assert 0.0430356 < theta() < 0.0430357
    assert round(theta(), 8) == 0.04303567
    assert 2 * theta() == pytest.approx(0.0860713320559343, rel=1e-12)


def test_derive_params_values():
    p = derive_params(10**6)
    assert p.k == 1
    assert p.r == pytest.approx(3.1842698676861985, rel=1e-12)
    assert p.h == 4
    assert derive_params(100).k == 1
    assert derive_params(100).r == pytest.approx(1.6082816270080507)


def test_tilt_undefined_at_desk_scale():
    p = derive_params(10**6)
    assert p.x > 1
    assert p.lambda1 is None and p.lambda2 is None


def test_tilt_defined_asymptotically():
    p = params_from_loglog(40.0)
    assert 0 < p.x < 1
    assert 0 < p.lambda2 < 1
    assert p.lambda1 > 1
    assert p.lambda2 == pytest.approx((1 - p.x) / math.log(4))


def test_validity_floor():
    with pytest.raises(ValueError, match="validity floor"):
        derive_params(99)
    p = derive_params(20, strict=False)
    assert p.r >= 0 and p.h >= 0
    with pytest.raises(ValueError):
        derive_params(2, strict=False)


def test_k_monotone():
    ks = [derive_params(n).k for n in range(100, 10**5, 997)]
    assert ks == sorted(ks)
    assert params_from_loglog(3.0).k == 2


def test_mn_prediction():
    expected = 10**6 / (math.log(1000) ** (2 * theta()) * math.log(math.log(1000)) ** 1.5)
    assert mn_prediction(1000) == pytest.approx(expected, rel=1e-12)
    assert mn_prediction(1000) == pytest.approx(315158.56160494575, rel=1e-12)
    assert mn_prediction(17) > mn_prediction(16)
    with pytest.raises(ValueError):
        mn_prediction(15)


def test_taylor_inequality():
    assert taylor_inequality_check(0.0)
    assert taylor_lhs(0.5) == pytest.approx(0.26162407188227393)
    assert taylor_inequality_check(0.5)
    assert all(taylor_inequality_check(i / 100) for i in range(-99, 100))
    with pytest.raises(ValueError):
        taylor_inequality_check(1.0)
