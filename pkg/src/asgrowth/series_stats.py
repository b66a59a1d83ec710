"""Characterization of annual count series.

Series are plain 1-d float arrays; anything array-like is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .errors import DegenerateInput, SingularRegression, ZeroVariance

ALPHA = 0.05
Z95 = 1.96


def as_series(s, min_length: int = 2) -> np.ndarray:
    x = np.asarray(s, dtype=float).ravel()
    if x.size < min_length:
        raise DegenerateInput(f"series of length {x.size}; need at least {min_length}")
    if not np.all(np.isfinite(x)):
        raise DegenerateInput("series contains non-finite values")
    return x


@dataclass(frozen=True)
class AcfResult:
    """Correlogram values; ``values[i]`` belongs to lag ``first_lag + i``."""

    max_lag: int
    values: np.ndarray
    conf_bound: float
    first_lag: int = 0

    def at(self, lag: int) -> float:
        return float(self.values[lag - self.first_lag])

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.first_lag, self.max_lag + 1)

    def significant_lags(self) -> list:
        return [int(k) for k, v in zip(self.lags, self.values)
                if k > 0 and abs(v) > self.conf_bound]


@dataclass(frozen=True)
class StatTestResult:
    name: str
    statistic: float
    p_value: Optional[float]
    reject_null: bool
    # set when only tabulated critical values back the decision
    p_bracket: Optional[str] = None
    critical_values: Optional[dict] = None


def difference(s, d: int = 1) -> np.ndarray:
    x = as_series(s, min_length=1)
    if d < 0:
        raise ValueError("d must be non-negative")
    if d == 0:
        return x.copy()
    if x.size - d < 2:
        raise DegenerateInput(f"differencing {x.size} values {d} times leaves fewer than 2")
    return np.diff(x, n=d)


def iaav(s) -> np.ndarray:
    """Inter-annual absolute variation: ``|y_t - y_{t-1}|``."""
    x = as_series(s, min_length=3)
    return np.abs(np.diff(x))


def autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    xc = x - x.mean()
    n = x.size
    return np.array([xc[: n - k] @ xc[k:] / n for k in range(max_lag + 1)])


def acf(s, max_lag: int) -> AcfResult:
    x = as_series(s)
    if not 0 <= max_lag < x.size:
        raise DegenerateInput(f"max_lag must lie in [0, {x.size - 1}]")
    gamma = autocovariance(x, max_lag)
    if gamma[0] <= 0:
        raise ZeroVariance("constant series has no autocorrelation")
    rho = gamma / gamma[0]
    rho[0] = 1.0
    return AcfResult(max_lag, rho, Z95 / math.sqrt(x.size))


def durbin_levinson(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations for lags 1..len(rho)-1 from autocorrelations."""
    m = len(rho) - 1
    out = np.zeros(m)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, m + 1):
        if v <= 0:
            break
        a = (rho[k] - phi @ rho[k - 1:0:-1]) / v if k > 1 else rho[1]
        phi = np.append(phi - a * phi[::-1], a)
        v *= 1.0 - a * a
        out[k - 1] = a
    return out


def pacf(s, max_lag: int) -> AcfResult:
    x = as_series(s)
    if not 1 <= max_lag < x.size:
        raise DegenerateInput(f"max_lag must lie in [1, {x.size - 1}]")
    rho = acf(x, max_lag).values
    return AcfResult(max_lag, durbin_levinson(rho), Z95 / math.sqrt(x.size), first_lag=1)


# MacKinnon (2010) response surfaces for the single-series case:
# crit(T) = b0 + b1/T + b2/T^2 + b3/T^3, rows for 1%, 5%, 10%.
_DF_SURFACE = {
    "none": ((-2.56574, -2.2358, -3.627, 0.0),
             (-1.94100, -0.2686, -3.365, 31.223),
             (-1.61682, 0.2656, -2.714, 25.364)),
    "constant": ((-3.43035, -6.5393, -16.786, -79.433),
                 (-2.86154, -2.8903, -4.234, -40.040),
                 (-2.56677, -1.5384, -2.809, 0.0)),
    "constant_trend": ((-3.95877, -9.0531, -28.428, -134.155),
                       (-3.41049, -4.3904, -9.036, -45.374),
                       (-3.12705, -2.5856, -3.925, -22.380)),
}


def df_critical_values(trend_mode: str, nobs: int) -> dict:
    rows = _DF_SURFACE[trend_mode]
    inv = 1.0 / nobs
    return {lvl: b0 + b1 * inv + b2 * inv**2 + b3 * inv**3
            for lvl, (b0, b1, b2, b3) in zip(("1%", "5%", "10%"), rows)}


def dickey_fuller(s, trend_mode: str = "constant", lags: int = 0) -> StatTestResult:
    """Dickey-Fuller unit-root test (augmented when ``lags > 0``).

    The null hypothesis is a unit root; ``reject_null`` means the series
    looks stationary. Significance comes from MacKinnon's finite-sample
    critical values, so ``p_value`` is None and ``p_bracket`` gives the
    tabulated interval the statistic falls in.
    """
    if trend_mode not in _DF_SURFACE:
        raise ValueError(f"unknown trend_mode {trend_mode!r}")
    x = as_series(s, min_length=8)
    dx = np.diff(x)
    y = dx[lags:]
    nobs = y.size
    cols = [x[lags:-1]]
    cols += [dx[lags - j:-j] for j in range(1, lags + 1)]
    if trend_mode in ("constant", "constant_trend"):
        cols.append(np.ones(nobs))
    if trend_mode == "constant_trend":
        cols.append(np.arange(1, nobs + 1, dtype=float))
    X = np.column_stack(cols)
    if nobs <= X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularRegression("Dickey-Fuller design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = nobs - X.shape[1]
    s2 = resid @ resid / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    if cov[0, 0] <= 0:
        raise SingularRegression("zero standard error on the lagged level")
    tstat = float(beta[0] / math.sqrt(cov[0, 0]))
    crit = df_critical_values(trend_mode, nobs)
    if tstat < crit["1%"]:
        bracket = "<0.01"
    elif tstat < crit["5%"]:
        bracket = "0.01-0.05"
    elif tstat < crit["10%"]:
        bracket = "0.05-0.10"
    else:
        bracket = ">0.10"
    return StatTestResult("dickey_fuller", tstat, None, tstat < crit["5%"],
                          p_bracket=bracket, critical_values=crit)


def _moments(x: np.ndarray):
    xc = x - x.mean()
    m2 = np.mean(xc**2)
    if m2 <= 0:
        raise ZeroVariance("constant series")
    skew = np.mean(xc**3) / m2**1.5
    kurt = np.mean(xc**4) / m2**2
    return skew, kurt


def jarque_bera(s) -> StatTestResult:
    x = as_series(s, min_length=8)
    skew, kurt = _moments(x)
    jb = x.size / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    p = float(stats.chi2.sf(jb, 2))
    return StatTestResult("jarque_bera", float(jb), p, p < ALPHA)


# Royston (1995), algorithm AS R94.
_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582663)
_SW_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def _poly(coef, x):
    return sum(c * x**i for i, c in enumerate(coef))


def shapiro_wilk_coefficients(n: int) -> np.ndarray:
    """Royston's approximation to the W-test weights, antisymmetric, ascending order."""
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    i = np.arange(1, n + 1)
    m = ndtri((i - 0.375) / (n + 0.25))
    summ2 = m @ m
    rsn = 1.0 / math.sqrt(n)
    a = np.empty(n)
    an = m[-1] / math.sqrt(summ2) + _poly(_SW_C1, rsn)
    if n > 5:
        an1 = m[-2] / math.sqrt(summ2) + _poly(_SW_C2, rsn)
        fac = math.sqrt((summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2)
                        / (1 - 2 * an**2 - 2 * an1**2))
        a[:] = m / fac
        a[-1], a[-2] = an, an1
        a[0], a[1] = -an, -an1
    else:
        fac = math.sqrt((summ2 - 2 * m[-1] ** 2) / (1 - 2 * an**2))
        a[:] = m / fac
        a[-1], a[0] = an, -an
    return a


def shapiro_wilk(s) -> StatTestResult:
    x = as_series(s, min_length=1)
    n = x.size
    if not 3 <= n <= 5000:
        raise DegenerateInput(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    xs = np.sort(x)
    ssq = np.sum((xs - xs.mean()) ** 2)
    if ssq <= 0 or xs[-1] - xs[0] < 1e-19 * max(1.0, abs(xs[0])):
        raise ZeroVariance("constant series")
    a = shapiro_wilk_coefficients(n)
    w = min(float((a @ xs) ** 2 / ssq), 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = max(p, 0.0)
    else:
        y = math.log1p(-w) if w < 1 else -math.inf
        if n <= 11:
            gamma = _poly(_SW_G, n)
            if y >= gamma:
                p = 1e-99
                return StatTestResult("shapiro_wilk", w, p, True)
            y = -math.log(gamma - y)
            mu = _poly(_SW_C3, n)
            sigma = math.exp(_poly(_SW_C4, n))
        else:
            ln = math.log(n)
            mu = _poly(_SW_C5, ln)
            sigma = math.exp(_poly(_SW_C6, ln))
        p = float(stats.norm.sf(y, loc=mu, scale=sigma))
    return StatTestResult("shapiro_wilk", w, p, p < ALPHA)


def characterize(s, max_lag: Optional[int] = None, trend_mode: str = "constant") -> dict:
    """ACF, PACF and the stationarity/normality tests in one bundle."""
    x = as_series(s)
    if max_lag is None:
        max_lag = min(12, x.size - 1)
    out = {"n": int(x.size), "acf": acf(x, max_lag), "pacf": pacf(x, max(1, max_lag))}
    for name, fn, need in (("dickey_fuller", lambda v: dickey_fuller(v, trend_mode), 8),
                           ("jarque_bera", jarque_bera, 8),
                           ("shapiro_wilk", shapiro_wilk, 3)):
        if x.size >= need:
            try:
                out[name] = fn(x)
            except (ZeroVariance, SingularRegression):
                out[name] = None
    return out
