import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import linalg, stats
from statsmodels.tsa.stattools import acf as sm_acf, adfuller, pacf as sm_pacf

from asgrowth import series_stats as ss
from asgrowth.errors import DegenerateInput, SingularRegression, ZeroVariance

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
series = st.lists(finite, min_size=5, max_size=60).map(np.array)


def _nonconstant(x):
    return np.ptp(x) > 1e-6 * max(1.0, np.abs(x).max())


@pytest.mark.parametrize("s, d, expected", [
    ([1, 3, 6, 10], 1, [2, 3, 4]),
    ([1, 3, 6, 10], 2, [1, 1]),
    ([1, 3, 6, 10], 0, [1, 3, 6, 10]),
])
def test_difference(s, d, expected):
    assert ss.difference(s, d).tolist() == expected


def test_difference_linear_is_constant():
    t = np.arange(30)
    assert np.allclose(ss.difference(2.5 + 4.0 * t, 1), 4.0)


def test_difference_too_short():
    with pytest.raises(DegenerateInput):
        ss.difference([1, 2, 3], 2)


@pytest.mark.parametrize("s, expected", [
    ([10, 14, 11], [4, 3]),
    ([5, 5, 5, 5], [0, 0, 0]),
    ([247, 344, 416, 487, 614], [97, 72, 71, 127]),
])
def test_iaav(s, expected):
    assert ss.iaav(s).tolist() == expected


def test_acf_small_example():
    assert ss.acf([1, 2, 3, 4, 5], 1).at(1) == pytest.approx(0.4, abs=1e-12)


def test_acf_constant_raises():
    with pytest.raises(ZeroVariance):
        ss.acf([3, 3, 3, 3], 2)


def test_acf_bound():
    r = ss.acf(np.arange(25.0) ** 1.5, 5)
    assert r.conf_bound == pytest.approx(1.96 / 5)


@pytest.mark.parametrize("seed", range(5))
def test_acf_pacf_match_statsmodels(seed):
    x = np.random.default_rng(seed).standard_normal(150).cumsum()
    ours_acf = ss.acf(x, 20).values
    ours_pacf = ss.pacf(x, 20).values
    assert np.allclose(ours_acf, sm_acf(x, nlags=20, fft=False), atol=1e-10)
    assert np.allclose(ours_pacf, sm_pacf(x, nlags=20, method="ldb")[1:], atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_pacf_matches_yule_walker_brute_force(seed):
    x = np.random.default_rng(100 + seed).standard_normal(80)
    rho = ss.acf(x, 10).values
    pac = ss.pacf(x, 10)
    for k in range(1, 11):
        phi = linalg.solve(linalg.toeplitz(rho[:k]), rho[1:k + 1])
        assert pac.at(k) == pytest.approx(phi[-1], abs=1e-8)


@settings(max_examples=80, deadline=None)
@given(series)
def test_acf_pacf_properties(x):
    assume(_nonconstant(x))
    lag = min(8, x.size - 1)
    a = ss.acf(x, lag)
    p = ss.pacf(x, lag)
    assert a.values[0] == 1.0
    assert np.all(np.abs(a.values) <= 1 + 1e-12)
    assert np.all(np.abs(p.values) <= 1 + 1e-9)
    assert p.at(1) == pytest.approx(a.at(1), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(series, st.floats(0.01, 100), st.floats(-100, 100))
def test_acf_affine_invariance(x, a, b):
    assume(_nonconstant(x))
    assert np.allclose(ss.acf(x, 4 if x.size > 4 else 1).values,
                       ss.acf(a * x + b, 4 if x.size > 4 else 1).values, atol=1e-8)


def test_durbin_levinson_ar1():
    rho = 0.6 ** np.arange(6)
    assert np.allclose(ss.durbin_levinson(rho), [0.6, 0, 0, 0, 0], atol=1e-12)


@pytest.mark.parametrize("mode, reg", [("none", "n"), ("constant", "c"),
                                       ("constant_trend", "ct")])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dickey_fuller_matches_statsmodels(mode, reg, seed):
    x = np.random.default_rng(seed).standard_normal(120).cumsum()
    ours = ss.dickey_fuller(x, mode)
    ref = adfuller(x, maxlag=0, regression=reg, autolag=None)
    assert ours.statistic == pytest.approx(ref[0], rel=1e-9)
    for lvl in ("1%", "5%", "10%"):
        assert ours.critical_values[lvl] == pytest.approx(ref[4][lvl], abs=1e-3)


def test_augmented_dickey_fuller_matches_statsmodels():
    x = np.random.default_rng(9).standard_normal(200).cumsum()
    ours = ss.dickey_fuller(x, "constant", lags=2)
    ref = adfuller(x, maxlag=2, regression="c", autolag=None)
    assert ours.statistic == pytest.approx(ref[0], rel=1e-9)


def test_dickey_fuller_random_walk_vs_white_noise():
    rng = np.random.default_rng(2024)
    walk = rng.standard_normal(200).cumsum()
    noise = rng.standard_normal(200)
    assert ss.dickey_fuller(walk).reject_null is False
    assert ss.dickey_fuller(noise).reject_null is True
    assert ss.dickey_fuller(noise).p_bracket == "<0.01"
    # reference p-values agree with the verdicts
    assert adfuller(walk, maxlag=0, autolag=None)[1] > 0.05
    assert adfuller(noise, maxlag=0, autolag=None)[1] < 0.05


def test_dickey_fuller_constant_is_singular():
    with pytest.raises(SingularRegression):
        ss.dickey_fuller(np.full(20, 4.0))


def test_jarque_bera_exact_zero():
    # +-sqrt(3) with mass 1/6 each: variance 1, fourth moment 3
    x = np.array([-math.sqrt(3), 0, 0, 0, 0, math.sqrt(3)] * 2, dtype=float)
    skew, kurt = ss._moments(x)
    assert skew == pytest.approx(0, abs=1e-12) and kurt == pytest.approx(3, abs=1e-12)
    r = ss.jarque_bera(x)
    assert r.statistic == pytest.approx(0, abs=1e-12)
    assert r.p_value == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_jarque_bera_matches_scipy(seed):
    x = np.random.default_rng(seed).standard_exponential(70)
    ref = stats.jarque_bera(x)
    r = ss.jarque_bera(x)
    assert r.statistic == pytest.approx(ref.statistic, rel=1e-10)
    assert r.p_value == pytest.approx(ref.pvalue, abs=1e-12)


def test_jarque_bera_normal_n1000():
    assert ss.jarque_bera(np.random.default_rng(5).standard_normal(1000)).p_value > 0.05


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 11, 12, 20, 50, 100, 500, 2000])
def test_shapiro_wilk_matches_scipy(n):
    x = np.random.default_rng(n).standard_normal(n) ** 2
    ref = stats.shapiro(x)
    r = ss.shapiro_wilk(x)
    assert r.statistic == pytest.approx(ref.statistic, abs=1e-4)
    assert r.p_value == pytest.approx(ref.pvalue, abs=1e-3)


def test_shapiro_wilk_verdicts():
    rng = np.random.default_rng(17)
    assert ss.shapiro_wilk(rng.standard_normal(100)).p_value > 0.05
    assert ss.shapiro_wilk(rng.standard_exponential(100)).p_value < 0.05


def test_shapiro_wilk_bounds():
    with pytest.raises(DegenerateInput):
        ss.shapiro_wilk([1.0, 2.0])
    with pytest.raises(ZeroVariance):
        ss.shapiro_wilk([1.0, 1.0, 1.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=8, max_size=80).map(np.array))
def test_test_results_consistent(x):
    assume(_nonconstant(x))
    for r in (ss.jarque_bera(x), ss.shapiro_wilk(x)):
        assert 0 <= r.p_value <= 1
        assert r.reject_null == (r.p_value < 0.05)
    w = ss.shapiro_wilk(x).statistic
    assert 0 < w <= 1


def test_characterize_bundle():
    x = np.random.default_rng(1).standard_normal(40).cumsum()
    out = ss.characterize(x)
    assert out["n"] == 40
    assert out["acf"].max_lag == 12
    assert set(out) >= {"dickey_fuller", "jarque_bera", "shapiro_wilk"}
