"""Registry-assigned ASNs versus ASNs seen in routing-table snapshots."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DegenerateInput, DivisionByZero
from .ingest import IN_USE, STATUSES, RouteviewSnapshot, country_asns


@dataclass(frozen=True)
class ReachabilityStats:
    label: str
    registered: int
    assigned: int
    advertised: int
    ratio: Optional[float]
    period_increase_pct: Optional[float] = None

    def row(self) -> dict:
        return {
            "label": self.label,
            "registered": self.registered,
            "assigned": self.assigned,
            "advertised": self.advertised,
            "ratio": self.ratio,
            "ratio_1dp": None if self.ratio is None else f"{self.ratio:.1f}",
            "increase_pct": self.period_increase_pct,
        }


def advertised_count(snapshot: RouteviewSnapshot, country_asns: Iterable[int]) -> int:
    asns = country_asns if isinstance(country_asns, (set, frozenset)) else set(country_asns)
    return len(snapshot.asn_set & asns)


def reachability_ratio(assigned: int, advertised: int) -> float:
    if assigned <= 0:
        raise DivisionByZero("no assigned ASNs")
    return advertised / assigned


def period_growth_pct(daily) -> float:
    """Endpoint change ``100 * (last - first) / first`` of ``(date, count)`` samples."""
    samples = sorted(daily)
    if len(samples) < 2:
        raise DegenerateInput("need at least two samples")
    first, last = samples[0][1], samples[-1][1]
    if first == 0:
        raise DivisionByZero("first count is zero")
    return 100.0 * (last - first) / first


def drop_events(daily, threshold_pct: float) -> list:
    """Dates where the count fell by at least ``threshold_pct`` percent from the previous sample."""
    if threshold_pct <= 0:
        raise ValueError("threshold_pct must be positive")
    samples = sorted(daily)
    if len(samples) < 2:
        raise DegenerateInput("need at least two samples")
    events = []
    for (_, prev), (day, cur) in zip(samples, samples[1:]):
        if prev > 0:
            drop = 100.0 * (prev - cur) / prev
            if drop >= threshold_pct:
                events.append((day, drop))
    return events


def daily_counts(snapshots: Iterable[RouteviewSnapshot], records, country: Optional[str]) -> list:
    """Advertised count per snapshot, judged against the registry as of each snapshot date."""
    out = []
    cache = {}
    for snap in sorted(snapshots, key=lambda s: s.date):
        if snap.date not in cache:
            cache[snap.date] = country_asns(records, country, as_of=snap.date)
        out.append((snap.date, advertised_count(snap, cache[snap.date])))
    return out


def reachability_stats(records, snapshot: RouteviewSnapshot, country: Optional[str], *,
                       label: Optional[str] = None,
                       history: Optional[list] = None) -> ReachabilityStats:
    """Registered/assigned/advertised counts for one country (``None``: whole registry).

    ``history`` is an optional list of ``(date, count)`` used for the period increase.
    """
    registered = country_asns(records, country, as_of=snapshot.date, statuses=frozenset(STATUSES))
    assigned = country_asns(records, country, as_of=snapshot.date, statuses=IN_USE)
    adv = advertised_count(snapshot, assigned)
    ratio = reachability_ratio(len(assigned), adv) if assigned else None
    increase = None
    if history and len(history) >= 2:
        try:
            increase = period_growth_pct(history)
        except DivisionByZero:
            increase = None
    return ReachabilityStats(label or country or "ALL", len(registered), len(assigned),
                             adv, ratio, increase)


def reachability_table(records, snapshots: list, countries: list, *,
                       region_label: Optional[str] = None) -> list:
    """One :class:`ReachabilityStats` per country, judged on the latest snapshot."""
    if not snapshots:
        raise DegenerateInput("no snapshots")
    latest = max(snapshots, key=lambda s: s.date)
    labels = [(c, c) for c in countries]
    if region_label:
        labels.insert(0, (None, region_label))
    out = []
    for code, label in labels:
        history = daily_counts(snapshots, records, code) if len(snapshots) > 1 else None
        out.append(reachability_stats(records, latest, code, label=label, history=history))
    return out


def as_date(value) -> dt.date:
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value))
