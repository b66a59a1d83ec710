import datetime as dt

import pytest
from hypothesis import given, settings, strategies as st

from asgrowth import reachability as rc
from asgrowth.errors import DegenerateInput, DivisionByZero
from asgrowth.ingest import RouteviewSnapshot

import synth

asn_sets = st.frozensets(st.integers(0, 300), max_size=80)


def _snap(asns, day=dt.date(2013, 1, 1)):
    return RouteviewSnapshot(day, frozenset(asns))


@pytest.mark.parametrize("snap, country, expected", [({1, 2, 3}, {2, 3, 4}, 2),
                                                     ({1, 2}, {5, 6}, 0),
                                                     (set(), {1}, 0)])
def test_advertised_count(snap, country, expected):
    assert rc.advertised_count(_snap(snap), country) == expected


@pytest.mark.parametrize("assigned, advertised, ratio, shown", [(607, 495, 0.815, "0.8"),
                                                                (551, 220, 0.399, "0.4"),
                                                                (8420, 5285, 0.628, "0.6"),
                                                                (10, 10, 1.0, "1.0")])
def test_ratio(assigned, advertised, ratio, shown):
    r = rc.reachability_ratio(assigned, advertised)
    assert r == pytest.approx(ratio, abs=5e-4)
    assert f"{r:.1f}" == shown


def test_ratio_zero_assigned():
    with pytest.raises(DivisionByZero):
        rc.reachability_ratio(0, 0)


def _daily(values):
    start = dt.date(2012, 1, 1)
    return [(start + dt.timedelta(days=i), v) for i, v in enumerate(values)]


@pytest.mark.parametrize("values, pct", [([100, 103, 116], 16.0), ([50, 50, 50], 0.0)])
def test_period_growth(values, pct):
    assert rc.period_growth_pct(_daily(values)) == pytest.approx(pct)


def test_period_growth_errors():
    with pytest.raises(DivisionByZero):
        rc.period_growth_pct(_daily([0, 5]))
    with pytest.raises(DegenerateInput):
        rc.period_growth_pct(_daily([5]))


@pytest.mark.parametrize("values, drops", [([100, 65, 100], [35.0]),
                                           ([1, 2, 3, 4], []),
                                           ([100, 75], []),
                                           ([100, 70], [30.0])])
def test_drop_events(values, drops):
    events = rc.drop_events(_daily(values), 30)
    assert [pytest.approx(d) for _, d in events] == drops


@settings(max_examples=100, deadline=None)
@given(asn_sets, asn_sets)
def test_count_bounded_and_ratio_in_unit_interval(snap, country):
    n = rc.advertised_count(_snap(snap), country)
    assert n <= min(len(snap), len(country))
    if country:
        assert 0 <= rc.reachability_ratio(len(country), n) <= 1


def test_fixture_table():
    records, snap = synth.reachability_fixture()
    stats = rc.reachability_table(records, [snap], ["IN", "CN"], region_label="APNIC")
    got = {s.label: (s.registered, s.assigned, s.advertised, s.row()["ratio_1dp"])
           for s in stats}
    assert got == {"APNIC": (9876, 8420, 5285, "0.6"),
                   "IN": (614, 607, 495, "0.8"),
                   "CN": (729, 551, 220, "0.4")}


def test_history_and_daily_counts():
    records, snap = synth.reachability_fixture()
    early = _snap(list(snap.asn_set)[:100], dt.date(2013, 1, 1))
    daily = rc.daily_counts([snap, early], records, "IN")
    assert [d for d, _ in daily] == [dt.date(2013, 1, 1), synth.SNAPSHOT_DATE]
    stats = rc.reachability_stats(records, snap, "IN", history=daily)
    assert stats.period_increase_pct == pytest.approx(100 * (495 - daily[0][1]) / daily[0][1])


def test_table_needs_snapshots():
    with pytest.raises(DegenerateInput):
        rc.reachability_table([], [], ["IN"])
