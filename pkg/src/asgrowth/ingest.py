"""Parsers for RIR delegated-statistics files and routing-table ASN snapshots.

Delegated files are pipe separated::

    registry|cc|type|start|value|date|status[|extensions...]

preceded by a version header line and a handful of summary lines.
"""
from __future__ import annotations

import datetime as dt
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .errors import MalformedRecord, NoRecords

log = logging.getLogger(__name__)

RESOURCE_TYPES = ("asn", "ipv4", "ipv6")
STATUSES = ("allocated", "assigned", "reserved", "available")
IN_USE = frozenset({"allocated", "assigned"})
ASN_LIMIT = 2**32

_VERSION_RE = re.compile(r"^\d+(\.\d+)*$")
_DATE_RE = re.compile(r"^\d{8}$")

Source = Union[bytes, str, IO, Iterable[str]]


@dataclass(frozen=True)
class DelegatedRecord:
    registry: str
    country_code: str
    resource_type: str
    start: Union[int, str]
    value: int
    date: Optional[dt.date]
    status: str
    extensions: Optional[str] = None

    @property
    def year(self) -> Optional[int]:
        return None if self.date is None else self.date.year

    def to_line(self) -> str:
        """Serialize the seven standard fields (extensions are dropped)."""
        date = "" if self.date is None else self.date.strftime("%Y%m%d")
        return "|".join(
            [self.registry, self.country_code, self.resource_type,
             str(self.start), str(self.value), date, self.status]
        )

    def asns(self) -> range:
        if self.resource_type != "asn":
            raise ValueError("not an asn record")
        return range(self.start, self.start + self.value)


@dataclass(frozen=True)
class AnnualCountSeries:
    label: str
    start_year: int
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    def __len__(self):
        return len(self.counts)

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + len(self.counts))

    @property
    def end_year(self) -> int:
        return self.start_year + len(self.counts) - 1

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    def window(self, first_year=None, last_year=None) -> "AnnualCountSeries":
        first = self.start_year if first_year is None else max(first_year, self.start_year)
        last = self.end_year if last_year is None else min(last_year, self.end_year)
        lo, hi = first - self.start_year, last - self.start_year + 1
        return AnnualCountSeries(self.label, first, self.counts[lo:hi])


@dataclass(frozen=True)
class RouteviewSnapshot:
    date: dt.date
    asn_set: frozenset = field(default_factory=frozenset)

    def __len__(self):
        return len(self.asn_set)


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    if isinstance(source, str):
        source = io.StringIO(source)
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        yield line.rstrip("\r\n")


def _parse_date(text: str) -> dt.date:
    if not _DATE_RE.match(text):
        raise ValueError(text)
    return dt.datetime.strptime(text, "%Y%m%d").date()


def _is_summary(fields: list) -> bool:
    # registry|*|type|*|count|summary
    return "summary" in (fields[-1], fields[5] if len(fields) > 5 else None)


def parse_record(line: str, line_number: int = 0) -> DelegatedRecord:
    fields = line.strip().split("|")
    if len(fields) < 7:
        raise MalformedRecord(line_number, f"expected at least 7 fields, got {len(fields)}", line)
    registry, cc, rtype, start, value, date, status = (f.strip() for f in fields[:7])
    extensions = "|".join(fields[7:]) if len(fields) > 7 else None
    rtype = rtype.lower()
    status = status.lower()
    if rtype not in RESOURCE_TYPES:
        raise MalformedRecord(line_number, f"bad resource type {rtype!r}", line)
    if status not in STATUSES:
        raise MalformedRecord(line_number, f"bad status {status!r}", line)
    try:
        count = int(value)
    except ValueError:
        raise MalformedRecord(line_number, f"bad value {value!r}", line) from None
    if count < 1:
        raise MalformedRecord(line_number, f"value must be >= 1, got {count}", line)
    try:
        when = _parse_date(date)
    except ValueError:
        # unused space routinely carries an empty or zero date
        if status in ("reserved", "available"):
            when = None
        else:
            raise MalformedRecord(line_number, f"bad date {date!r}", line) from None
    if rtype == "asn":
        try:
            first = int(start)
        except ValueError:
            raise MalformedRecord(line_number, f"bad asn {start!r}", line) from None
        if not 0 <= first < ASN_LIMIT or first + count > ASN_LIMIT:
            raise MalformedRecord(line_number, f"asn {start} out of range", line)
        start = first
    if status in IN_USE and not re.fullmatch(r"[A-Za-z]{2}", cc):
        raise MalformedRecord(line_number, f"bad country code {cc!r}", line)
    return DelegatedRecord(registry, cc.upper(), rtype, start, count, when, status, extensions)


def parse_delegated(source: Source, *, strict: bool = False,
                    errors: Optional[list] = None) -> list:
    """Parse a delegated(-extended) statistics file.

    Parameters
    ----------
    source : bytes, str, file object or iterable of lines
    strict : bool
        Raise on the first malformed resource line instead of skipping it.
    errors : list, optional
        Receives a :class:`MalformedRecord` for every skipped line.

    Returns
    -------
    list of DelegatedRecord, in input order.
    """
    records = []
    seen_header = False
    for number, line in enumerate(_lines(source), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split("|")
        if not seen_header and _VERSION_RE.match(fields[0]):
            seen_header = True
            continue
        if _is_summary(fields):
            continue
        try:
            records.append(parse_record(text, number))
        except MalformedRecord as exc:
            if strict:
                raise
            log.warning("skipping %s", exc)
            if errors is not None:
                errors.append(exc)
    return records


def _matches(rec, country, resource_type, max_asn):
    if rec.status not in IN_USE or rec.date is None:
        return False
    if rec.resource_type != resource_type:
        return False
    if country is not None and rec.country_code != country.upper():
        return False
    if max_asn is not None and rec.resource_type == "asn" and rec.start >= max_asn:
        return False
    return True


def build_annual_series(records: Iterable[DelegatedRecord], country: Optional[str],
                        resource_type: str = "asn", end_year: Optional[int] = None, *,
                        label: Optional[str] = None,
                        max_asn: Optional[int] = None) -> AnnualCountSeries:
    """Cumulative in-use resource count per calendar year.

    ``counts[k]`` is the summed ``value`` of matching allocated/assigned
    records dated on or before the end of ``start_year + k``. ``country=None``
    aggregates every country (the whole registry).
    """
    per_year = defaultdict(int)
    for rec in records:
        if _matches(rec, country, resource_type, max_asn):
            per_year[rec.date.year] += rec.value
    if not per_year:
        raise NoRecords(f"no {resource_type} records for {country or 'any country'}")
    first = min(per_year)
    last = max(per_year) if end_year is None else end_year
    if last < first:
        raise NoRecords(f"end year {last} precedes first allocation year {first}")
    yearly = [per_year.get(y, 0) for y in range(first, last + 1)]
    return AnnualCountSeries(label or country or "ALL", first, np.cumsum(yearly).tolist())


def country_asns(records: Iterable[DelegatedRecord], country: Optional[str], *,
                 as_of: Optional[dt.date] = None, statuses=IN_USE) -> set:
    """ASNs delegated to ``country`` (all countries if None) with a status in ``statuses``."""
    out = set()
    for rec in records:
        if rec.resource_type != "asn" or rec.status not in statuses:
            continue
        if country is not None and rec.country_code != country.upper():
            continue
        if as_of is not None and rec.date is not None and rec.date > as_of:
            continue
        out.update(rec.asns())
    return out


def parse_snapshot(source: Source, date: dt.date, *, strict: bool = False) -> RouteviewSnapshot:
    """Read one decimal ASN per line; ``#`` starts a comment."""
    asns = set()
    for number, line in enumerate(_lines(source), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if text.upper().startswith("AS"):
            text = text[2:]
        try:
            asn = int(text)
            if not 0 <= asn < ASN_LIMIT:
                raise ValueError
        except ValueError:
            exc = MalformedRecord(number, f"not an AS number: {text!r}", line)
            if strict:
                raise exc from None
            log.warning("skipping %s", exc)
            continue
        asns.add(asn)
    return RouteviewSnapshot(date, frozenset(asns))


_FILENAME_DATE = re.compile(r"(\d{4})-?(\d{2})-?(\d{2})")


def date_from_filename(name: str) -> dt.date:
    m = _FILENAME_DATE.search(name)
    if m is None:
        raise ValueError(f"no YYYYMMDD date in {name!r}")
    return dt.date(*map(int, m.groups()))


def load_snapshot_dir(path, *, strict: bool = False) -> list:
    """Load every dated snapshot file in a directory, ordered by date."""
    from pathlib import Path

    snapshots = []
    for p in sorted(Path(path).iterdir()):
        if not p.is_file():
            continue
        try:
            when = date_from_filename(p.name)
        except ValueError:
            log.warning("ignoring %s: no date in file name", p)
            continue
        with open(p, "rb") as fh:
            snapshots.append(parse_snapshot(fh, when, strict=strict))
    snapshots.sort(key=lambda s: s.date)
    return snapshots
