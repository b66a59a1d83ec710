import datetime as dt
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asgrowth import ingest
from asgrowth.errors import MalformedRecord, NoRecords

import synth


def test_parse_record_fields():
    rec = ingest.parse_record("apnic|IN|asn|9829|1|20000103|allocated")
    assert rec.registry == "apnic"
    assert rec.country_code == "IN"
    assert rec.resource_type == "asn"
    assert rec.start == 9829
    assert rec.value == 1
    assert rec.date == dt.date(2000, 1, 3)
    assert rec.status == "allocated"
    assert rec.year == 2000
    assert list(rec.asns()) == [9829]


def test_comment_emits_nothing():
    assert ingest.parse_delegated("# comment\n") == []


@pytest.mark.parametrize("line, reason", [
    ("apnic|IN|asn|9829|1|2000AB03|allocated", "bad date"),
    ("apnic|IN|asn|9829|0|20000103|allocated", "value"),
    ("apnic|IN|asn|x|1|20000103|allocated", "bad asn"),
    ("apnic|IN|asn|4294967295|2|20000103|allocated", "out of range"),
    ("apnic|IN|asn|9829|1|20000103|lent", "bad status"),
    ("apnic|IN|asx|9829|1|20000103|allocated", "bad resource type"),
    ("apnic|IND|asn|9829|1|20000103|allocated", "country code"),
    ("apnic|IN|asn|9829", "7 fields"),
])
def test_malformed_lines(line, reason):
    with pytest.raises(MalformedRecord) as info:
        ingest.parse_record(line, 12)
    assert reason in info.value.reason
    assert info.value.line_number == 12


def test_skip_and_collect_errors():
    text = "2|apnic|20130101|2|19830101|20130101|+1000\n" \
           "apnic|*|asn|*|2|summary\n" \
           "apnic|IN|asn|9829|1|20000103|allocated\n" \
           "apnic|IN|asn|9830|1|2000AB03|allocated\n"
    errors = []
    recs = ingest.parse_delegated(text, errors=errors)
    assert len(recs) == 1
    assert len(errors) == 1 and errors[0].line_number == 4
    with pytest.raises(MalformedRecord):
        ingest.parse_delegated(text, strict=True)


def test_extended_format_and_case():
    recs = ingest.parse_delegated(
        b"apnic|in|ASN|100|2|20010101|Assigned|A91A7381|e-stats\n"
        b"apnic||asn|300|4||available\n")
    assert recs[0].country_code == "IN" and recs[0].status == "assigned"
    assert recs[0].extensions == "A91A7381|e-stats"
    assert recs[1].date is None


def test_to_line_round_trip():
    line = "apnic|JP|asn|2497|1|19970101|allocated"
    assert ingest.parse_record(line).to_line() == line


def _rec(cc, year, value=1, status="allocated", start=1):
    return ingest.DelegatedRecord("apnic", cc, "asn", start, value, dt.date(year, 6, 1),
                                  status)


def test_annual_series_counting():
    recs = [_rec("IN", 1994), _rec("IN", 1994), _rec("IN", 1995)]
    s = ingest.build_annual_series(recs, "IN")
    assert s.start_year == 1994
    assert list(s.counts) == [2, 3]


def test_no_records():
    with pytest.raises(NoRecords):
        ingest.build_annual_series([_rec("CN", 1994)], "IN")


def test_series_weights_by_value_and_fills_gaps():
    recs = [_rec("IN", 1994, 3), _rec("IN", 1997, 2), _rec("IN", 1995, 1, "reserved")]
    s = ingest.build_annual_series(recs, "IN", end_year=1998)
    assert list(s.years) == [1994, 1995, 1996, 1997, 1998]
    assert list(s.counts) == [3, 3, 3, 5, 5]


def test_all_countries_and_max_asn():
    recs = [_rec("IN", 2000, start=10), _rec("CN", 2000, start=70000)]
    assert list(ingest.build_annual_series(recs, None).counts) == [2]
    assert list(ingest.build_annual_series(recs, None, max_asn=65536).counts) == [1]


def test_window():
    s = ingest.AnnualCountSeries("x", 2000, (1, 2, 3, 4))
    w = s.window(first_year=2001, last_year=2002)
    assert w.start_year == 2001 and w.counts == (2, 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1990, 2012), st.integers(1, 5)), min_size=1, max_size=40))
def test_series_is_monotone_and_totals(pairs):
    recs = [_rec("IN", y, v) for y, v in pairs]
    s = ingest.build_annual_series(recs, "IN")
    c = np.asarray(s.counts)
    assert np.all(np.diff(c) >= 0)
    assert c[-1] == sum(v for _, v in pairs)
    assert s.start_year == min(y for y, _ in pairs)


def test_series_independent_of_record_order():
    recs = ingest.parse_delegated(synth.delegated_text())
    shuffled = recs[:]
    random.Random(3).shuffle(shuffled)
    a = ingest.build_annual_series(recs, "IN")
    b = ingest.build_annual_series(shuffled, "IN")
    assert a == b


def test_synthetic_fixture_totals():
    recs = ingest.parse_delegated(synth.delegated_text())
    alloc = synth.yearly_allocations()
    s = ingest.build_annual_series(recs, "IN")
    assert s.start_year == synth.FIRST_YEAR
    assert list(s.counts) == list(np.cumsum(alloc["IN"]))


def test_snapshot_dedup_and_prefix():
    snap = ingest.parse_snapshot("9829\n4755\n9829\nAS100 # note\n", dt.date(2012, 1, 1))
    assert snap.asn_set == {9829, 4755, 100}


def test_snapshot_empty():
    assert ingest.parse_snapshot("", dt.date(2012, 1, 1)).asn_set == frozenset()


def test_snapshot_strict():
    with pytest.raises(MalformedRecord):
        ingest.parse_snapshot("45abc\n", dt.date(2012, 1, 1), strict=True)
    assert ingest.parse_snapshot("45abc\n7\n", dt.date(2012, 1, 1)).asn_set == {7}


def test_snapshot_dir(tmp_path):
    (tmp_path / "asns-20121201.txt").write_text("1\n2\n")
    (tmp_path / "asns-2012-12-15.txt").write_text("3\n")
    (tmp_path / "README").write_text("x")
    snaps = ingest.load_snapshot_dir(tmp_path)
    assert [s.date for s in snaps] == [dt.date(2012, 12, 1), dt.date(2012, 12, 15)]


def test_country_asns_as_of():
    recs = [ingest.DelegatedRecord("apnic", "IN", "asn", 10, 3, dt.date(2000, 1, 1), "assigned"),
            ingest.DelegatedRecord("apnic", "IN", "asn", 20, 1, dt.date(2005, 1, 1), "allocated"),
            ingest.DelegatedRecord("apnic", "IN", "asn", 30, 1, dt.date(2001, 1, 1), "reserved")]
    assert ingest.country_asns(recs, "IN") == {10, 11, 12, 20}
    assert ingest.country_asns(recs, "IN", as_of=dt.date(2003, 1, 1)) == {10, 11, 12}
