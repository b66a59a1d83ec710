"""Deterministic synthetic delegated files and routing snapshots for tests."""
from __future__ import annotations

import datetime as dt

import numpy as np

COUNTRIES = {"IN": 40, "CN": 60, "JP": 90, "KR": 30, "TW": 20}
FIRST_YEAR = 1994
LAST_YEAR = 2012


def yearly_allocations(seed: int = 7) -> dict:
    """``{cc: [count per year]}`` with roughly linear growth and some noise."""
    rng = np.random.default_rng(seed)
    years = LAST_YEAR - FIRST_YEAR + 1
    out = {}
    for cc, base in COUNTRIES.items():
        ramp = np.linspace(0.3, 1.6, years)
        out[cc] = [int(max(1, round(base * r + rng.normal(0, base * 0.15)))) for r in ramp]
    return out


def delegated_text(seed: int = 7, extra_lines=()) -> str:
    alloc = yearly_allocations(seed)
    records = []
    asn = 1000
    rng = np.random.default_rng(seed + 1)
    for cc, counts in alloc.items():
        for i, count in enumerate(counts):
            year = FIRST_YEAR + i
            left = count
            while left > 0:
                block = int(min(left, rng.integers(1, 4)))
                day = dt.date(year, int(rng.integers(1, 13)), int(rng.integers(1, 28)))
                status = "allocated" if rng.random() < 0.5 else "assigned"
                records.append(f"apnic|{cc}|asn|{asn}|{block}|{day:%Y%m%d}|{status}")
                asn += block
                left -= block
    records.append(f"apnic||asn|{asn}|5||reserved")
    records.append(f"apnic||asn|{asn + 5}|10||available")
    header = [
        f"2|apnic|20130101|{len(records)}|19830101|20130101|+1000",
        f"apnic|*|asn|*|{len(records)}|summary",
        "apnic|*|ipv4|*|0|summary",
        "# synthetic fixture",
    ]
    return "\n".join(header + records + list(extra_lines)) + "\n"


def write_fixture(tmp_path, seed: int = 7, snapshots: bool = True):
    """Write ``delegated.txt`` and a ``snapshots/`` directory; returns their paths."""
    from asgrowth import ingest

    path = tmp_path / "delegated.txt"
    path.write_text(delegated_text(seed))
    snap_dir = tmp_path / "snapshots"
    if snapshots:
        snap_dir.mkdir()
        recs = ingest.parse_delegated(path.read_text())
        in_use = sorted(a for r in recs if r.status in ingest.IN_USE for a in r.asns())
        rng = np.random.default_rng(seed + 2)
        for k, day in enumerate(("20121201", "20121215", "20121231")):
            keep = [a for a in in_use if rng.random() < 0.55 + 0.1 * k]
            lines = [f"AS{a}" for a in keep] + ["AS64512", "4200000000"]
            (snap_dir / f"asns-{day}.txt").write_text("\n".join(lines) + "\n")
    return path, snap_dir


# registered, assigned, advertised per country
REACH_COUNTS = {"IN": (614, 607, 495), "CN": (729, 551, 220)}
REGION_COUNTS = (9876, 8420, 5285)
SNAPSHOT_DATE = dt.date(2013, 2, 1)


def reachability_fixture():
    """Records and one snapshot reproducing fixed registered/assigned/advertised counts.

    Countries other than those in ``REACH_COUNTS`` fill the region totals.
    """
    from asgrowth import ingest

    records, advertised = [], []
    asn = 10000
    fill = tuple(r - sum(v[i] for v in REACH_COUNTS.values())
                 for i, r in enumerate(REGION_COUNTS))
    for cc, (registered, assigned, adv) in [*REACH_COUNTS.items(), ("JP", fill)]:
        day = dt.date(2005, 3, 1)
        records.append(ingest.DelegatedRecord("apnic", cc, "asn", asn, assigned, day, "assigned"))
        advertised.extend(range(asn, asn + adv))
        asn += assigned
        records.append(ingest.DelegatedRecord("apnic", cc, "asn", asn, registered - assigned,
                                              None, "reserved"))
        asn += registered - assigned
    # unregistered noise in the routing table
    advertised.extend([64512, 4200000001])
    snap = ingest.RouteviewSnapshot(SNAPSHOT_DATE, frozenset(advertised))
    return records, snap
