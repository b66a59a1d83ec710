"""Offline detection of variance changepoints.

Segments are scored with twice the negative Gaussian log-likelihood of a
variance-change model whose mean is pinned to the global series mean.
Changepoint indices are 0-based and name the *last* element of the left
segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateInput, DegenerateSegment
from .series_stats import as_series

LOG2PI = math.log(2 * math.pi)
MIN_SEG = 2
FLOOR_FRACTION = 1e-8


@dataclass(frozen=True)
class PenaltySpec:
    kind: str = "SIC"
    params_per_cp: int = 2
    manual_value: Optional[float] = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("AIC", "SIC", "MANUAL"):
            raise ValueError(f"unknown penalty {self.kind!r}")
        if self.params_per_cp < 1:
            raise ValueError("params_per_cp must be >= 1")
        if kind == "MANUAL" and (self.manual_value is None or self.manual_value < 0):
            raise ValueError("manual penalty needs a non-negative manual_value")

    @classmethod
    def parse(cls, text: str, params_per_cp: int = 2) -> "PenaltySpec":
        """``"aic"``, ``"sic"``/``"bic"`` or ``"manual=<value>"``."""
        t = text.strip().lower()
        if t.startswith("manual"):
            _, _, val = t.partition("=")
            return cls("MANUAL", params_per_cp, float(val))
        if t == "bic":
            t = "sic"
        return cls(t.upper(), params_per_cp)

    def value(self, n: int) -> float:
        if self.kind == "AIC":
            return 2.0 * self.params_per_cp
        if self.kind == "SIC":
            return self.params_per_cp * math.log(n)
        return float(self.manual_value)


@dataclass(frozen=True)
class ChangePointResult:
    method: str
    penalty: PenaltySpec
    changepoints: tuple
    segment_variances: tuple
    total_cost: float
    beta: float = 0.0
    segment_bounds: tuple = field(default=(), repr=False)

    @property
    def n_segments(self) -> int:
        return len(self.changepoints) + 1

    def years(self, origin_year: int) -> list:
        return [origin_year + t for t in self.changepoints]


def cusum(s) -> np.ndarray:
    """Running sum of deviations from the global mean."""
    x = as_series(s)
    return np.cumsum(x - x.mean())


class VarianceCost:
    """Segment costs with O(1) lookup from prefix sums of squared deviations."""

    def __init__(self, s, min_seg: int = MIN_SEG, floor_fraction: float = FLOOR_FRACTION):
        x = as_series(s)
        self.x = x
        self.n = x.size
        self.min_seg = min_seg
        dev2 = (x - x.mean()) ** 2
        self.prefix = np.concatenate([[0.0], np.cumsum(dev2)])
        var = dev2.mean()
        self.floor = floor_fraction * (var if var > 0 else 1.0)

    def variance(self, start, end):
        """Variance about the global mean of ``x[start..end]`` (inclusive), floored."""
        length = np.asarray(end) - np.asarray(start) + 1
        raw = (self.prefix[np.asarray(end) + 1] - self.prefix[np.asarray(start)]) / length
        return np.maximum(raw, self.floor)

    def __call__(self, start, end):
        length = np.asarray(end) - np.asarray(start) + 1
        return length * (LOG2PI + np.log(self.variance(start, end)) + 1.0)

    def cost(self, start: int, end: int) -> float:
        if end - start + 1 < self.min_seg or start < 0 or end >= self.n:
            raise DegenerateSegment(f"segment [{start}, {end}] shorter than {self.min_seg}")
        return float(self(start, end))

    def best_split(self, start: int, end: int):
        """Split ``[start, end]`` minimizing left + right cost; smallest index on ties."""
        ts = np.arange(start + self.min_seg - 1, end - self.min_seg + 1)
        if ts.size == 0:
            return None, math.inf
        costs = self(start, ts) + self(ts + 1, end)
        i = int(np.argmin(costs))
        return int(ts[i]), float(costs[i])

    def segmentation_cost(self, changepoints) -> float:
        bounds = _bounds(changepoints, self.n)
        return float(sum(self.cost(a, b) for a, b in bounds))


def segment_cost(s, start: int, end: int, min_seg: int = MIN_SEG) -> float:
    return VarianceCost(s, min_seg).cost(start, end)


def _bounds(changepoints, n):
    edges = [-1, *changepoints, n - 1]
    return [(edges[i] + 1, edges[i + 1]) for i in range(len(edges) - 1)]


def _result(method, penalty, cost: VarianceCost, cps, beta):
    cps = tuple(sorted(int(t) for t in cps))
    bounds = _bounds(cps, cost.n)
    variances = tuple(float(cost.variance(a, b)) for a, b in bounds)
    total = cost.segmentation_cost(cps) + beta * len(cps)
    return ChangePointResult(method, penalty, cps, variances, total, beta, tuple(bounds))


def _check(x, min_seg) -> bool:
    """False when the series is too short to hold a single split."""
    if x.size < min_seg:
        raise DegenerateInput(f"need at least {min_seg} points, got {x.size}")
    return x.size >= 2 * min_seg


def binseg(s, penalty: PenaltySpec = PenaltySpec(), max_cps: int = 5,
           min_seg: int = MIN_SEG) -> ChangePointResult:
    """Binary segmentation.

    A segment is split at its best point ``t`` when
    ``C(left) + C(right) + beta < C(segment)``. Among the open segments the
    split with the largest gain is taken first, so ``max_cps`` truncates the
    search the same way every run.
    """
    x = as_series(s)
    splittable = _check(x, min_seg)
    cost = VarianceCost(x, min_seg)
    beta = penalty.value(x.size)
    cps = []
    if not splittable:
        return _result("binseg", penalty, cost, cps, beta)
    candidates = {}

    def consider(a, b):
        t, split = cost.best_split(a, b)
        if t is not None:
            gain = cost.cost(a, b) - split - beta
            if gain > 0:
                candidates[(a, b)] = (gain, t)

    consider(0, x.size - 1)
    while candidates and len(cps) < max_cps:
        (a, b), (gain, t) = max(candidates.items(), key=lambda kv: (kv[1][0], -kv[1][1]))
        del candidates[(a, b)]
        cps.append(t)
        consider(a, t)
        consider(t + 1, b)
    return _result("binseg", penalty, cost, cps, beta)


def segneigh_table(cost: VarianceCost, Q: int):
    """Optimal unpenalized cost for 0..Q changepoints, with backpointers.

    ``F[m, j]`` is the best cost of ``x[0..j]`` cut into ``m + 1`` segments.
    """
    n, ms = cost.n, cost.min_seg
    F = np.full((Q + 1, n), np.inf)
    back = np.full((Q + 1, n), -1, dtype=int)
    j = np.arange(ms - 1, n)
    F[0, j] = cost(0, j)
    for m in range(1, Q + 1):
        for end in range((m + 1) * ms - 1, n):
            ts = np.arange(m * ms - 1, end - ms + 1)
            vals = F[m - 1, ts] + cost(ts + 1, end)
            i = int(np.argmin(vals))
            F[m, end] = vals[i]
            back[m, end] = ts[i]
    return F, back


def segneigh(s, penalty: PenaltySpec = PenaltySpec(), Q: int = 5,
             min_seg: int = MIN_SEG) -> ChangePointResult:
    """Exact penalized segmentation by dynamic programming (segment neighbourhood).

    ``Q`` caps the number of changepoints; the returned segmentation minimizes
    ``sum of segment costs + beta * m`` over ``m = 0..Q``.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    x = as_series(s)
    if not _check(x, min_seg):
        return _result("segneigh", penalty, VarianceCost(x, min_seg), [], penalty.value(x.size))
    cost = VarianceCost(x, min_seg)
    beta = penalty.value(x.size)
    Q = min(Q, x.size // min_seg - 1)
    F, back = segneigh_table(cost, Q)
    penalized = F[:, -1] + beta * np.arange(Q + 1)
    m = int(np.argmin(penalized))
    cps = []
    end = x.size - 1
    for level in range(m, 0, -1):
        end = int(back[level, end])
        cps.append(end)
    return _result("segneigh", penalty, cost, cps, beta)


def consensus_changepoints(s, penalty: Optional[PenaltySpec] = None, *, max_cps: int = 5,
                           Q: int = 5, slack: int = 1, results=None) -> list:
    """Changepoints found by both searches (within ``slack``), reported at SN's index."""
    if results is None:
        penalty = penalty or PenaltySpec("SIC")
        results = (binseg(s, penalty, max_cps), segneigh(s, penalty, Q))
    bs, sn = results
    return match_changepoints(bs.changepoints, sn.changepoints, slack)


def match_changepoints(bs, sn, slack: int = 1) -> list:
    return sorted(t for t in sn if any(abs(t - u) <= slack for u in bs))


def _slope(y: np.ndarray) -> float:
    t = np.arange(y.size, dtype=float)
    tc = t - t.mean()
    return float(tc @ (y - y.mean()) / (tc @ tc))


def segment_growth(y) -> tuple:
    """``(rate_pct, slope)``: OLS slope on the index, as a percentage of the mean."""
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        raise DegenerateSegment(f"need at least 3 points, got {y.size}")
    slope = _slope(y)
    mean = y.mean()
    if mean == 0:
        if slope == 0:
            return 0.0, 0.0
        raise DegenerateSegment("segment mean is zero")
    return 100.0 * slope / mean, slope


def iaav_growth_rates(s, cp: int) -> tuple:
    """Growth rate (%) of the series before and after changepoint ``cp``."""
    x = as_series(s)
    before, after = x[:cp + 1], x[cp + 1:]
    if before.size < 3 or after.size < 3:
        raise DegenerateSegment(f"changepoint {cp} leaves fewer than 3 points on a side")
    return segment_growth(before)[0], segment_growth(after)[0]
