"""Long-term growth trends and Fisher-z comparison of trend correlations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from .errors import DegenerateInput, DivisionByZero, DomainError, LengthMismatch, ZeroVariance
from .series_stats import Z95, as_series


@dataclass(frozen=True)
class TrendEstimate:
    """Average annual growth of a cumulative count series.

    For ``rw_drift`` the ``fitted`` values are the one-step fits of the
    random walk with drift, ``y[t-1] + growth``, anchored at ``y[0]``;
    ``trend_line`` is the straight drift line from the same anchor.
    """

    method: str
    annual_growth: float
    se: float
    intercept: Optional[float]
    fitted: np.ndarray
    trend_line: np.ndarray
    start_year: Optional[int] = None

    @property
    def years(self) -> Optional[np.ndarray]:
        if self.start_year is None:
            return None
        return np.arange(self.start_year, self.start_year + self.fitted.size)


def rw_drift_trend(s, start_year: Optional[int] = None) -> TrendEstimate:
    y = as_series(s, min_length=3)
    dy = np.diff(y)
    drift = float(dy.mean())
    se = float(dy.std(ddof=1) / math.sqrt(dy.size))
    fitted = np.concatenate([[y[0]], y[:-1] + drift])
    line = y[0] + drift * np.arange(y.size)
    return TrendEstimate("rw_drift", drift, se, None, fitted, line, start_year)


def linear_trend(s, start_year: Optional[int] = None) -> TrendEstimate:
    """OLS of the values on the year index ``0..n-1``."""
    y = as_series(s, min_length=3)
    n = y.size
    t = np.arange(n, dtype=float)
    tc = t - t.mean()
    sxx = tc @ tc
    slope = float(tc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * t.mean())
    fitted = intercept + slope * t
    resid = y - fitted
    s2 = resid @ resid / (n - 2)
    se = float(math.sqrt(max(s2, 0.0) / sxx))
    return TrendEstimate("linear", slope, se, intercept, fitted, fitted.copy(), start_year)


def relative_growth_pct(country: TrendEstimate, region: TrendEstimate) -> float:
    if region.annual_growth == 0:
        raise DivisionByZero("region growth is zero")
    if region.annual_growth < 0:
        raise DomainError("region growth must be positive")
    return 100.0 * country.annual_growth / region.annual_growth


def fisher_z(r: float) -> float:
    if not abs(r) < 1:
        raise DomainError(f"Fisher transform needs |r| < 1, got {r}")
    return 0.5 * math.log((1 + r) / (1 - r))


@dataclass(frozen=True)
class CorrelationComparison:
    r1: Optional[float]
    r2: Optional[float]
    n1: int
    n2: int
    z1: float
    z2: float
    zd: float
    p_value: float
    reject_equal: bool


def compare_fisher_z(z1: float, n1: int, z2: float, n2: int) -> CorrelationComparison:
    """Two-sided normal test of H0: z1 == z2 on already transformed correlations."""
    if n1 <= 3 or n2 <= 3:
        raise DomainError("sample sizes must exceed 3")
    zd = (z1 - z2) / math.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    p = 2 * norm.cdf(zd) if zd < 0 else 2 * norm.sf(zd)
    return CorrelationComparison(None, None, n1, n2, z1, z2, zd, float(min(p, 1.0)),
                                 abs(zd) > Z95)


def compare_correlations(r1: float, n1: int, r2: float, n2: int) -> CorrelationComparison:
    res = compare_fisher_z(fisher_z(r1), n1, fisher_z(r2), n2)
    return CorrelationComparison(r1, r2, n1, n2, res.z1, res.z2, res.zd,
                                 res.p_value, res.reject_equal)


def _aligned(a: TrendEstimate, b: TrendEstimate):
    fa, fb = a.fitted, b.fitted
    if a.start_year is not None and b.start_year is not None:
        lo = max(a.start_year, b.start_year)
        hi = min(a.start_year + fa.size, b.start_year + fb.size)
        if hi - lo < 2:
            raise LengthMismatch("trends share fewer than two years")
        fa = fa[lo - a.start_year:hi - a.start_year]
        fb = fb[lo - b.start_year:hi - b.start_year]
    if fa.size != fb.size:
        raise LengthMismatch(f"trend lengths differ ({fa.size} vs {fb.size})")
    return fa, fb


def trend_correlation(a: TrendEstimate, b: TrendEstimate) -> tuple:
    """Pearson correlation of fitted trends over their common years.

    Returns ``(r, n)`` with ``n`` the number of overlapping years.
    """
    fa, fb = _aligned(a, b)
    ca, cb = fa - fa.mean(), fb - fb.mean()
    denom = math.sqrt((ca @ ca) * (cb @ cb))
    if denom == 0:
        raise ZeroVariance("a fitted trend is constant")
    r = float(np.clip(ca @ cb / denom, -1.0, 1.0))
    return r, int(fa.size)


def trend_table(series: dict, region: Optional[str] = None) -> list:
    """Growth, standard error and relative growth for both trend models.

    ``series`` maps a label to ``(values, start_year)``.
    """
    rows = []
    ref = {}
    if region is not None:
        vals, start = series[region]
        ref = {"rw_drift": rw_drift_trend(vals, start), "linear": linear_trend(vals, start)}
    for label, (vals, start) in series.items():
        for est in (rw_drift_trend(vals, start), linear_trend(vals, start)):
            rel = None
            if ref:
                rel = relative_growth_pct(est, ref[est.method])
            rows.append({
                "label": label,
                "period": f"{start}-{start + len(vals) - 1}" if start is not None else "",
                "method": est.method,
                "annual_growth": est.annual_growth,
                "se": est.se,
                "relative_pct": rel,
            })
    return rows
