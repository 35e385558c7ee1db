from datetime import date, datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stigspot.geo_grid import GridSpec
from stigspot.hotspots import HotspotSet, ThresholdSpec, jaccard
from stigspot.io import events_to_arrays
from stigspot.pipeline import (WEEKDAY, WEEKEND, AnalysisConfig, IndexedEvents, Occurrence,
                               TemporalTuple, all_tuples, analyze, classify_day, daily_trails,
                               detect_intermittent, detect_permanent, index_events,
                               remove_in_mask, similarity_matrix, tune_thresholds,
                               tuning_objective, tuple_similarity)
from stigspot.synthetic import PlantedCluster, SyntheticScenario, generate, truth_mask

WEEK = (date(2014, 9, 1), date(2014, 9, 8))  # Monday to Sunday


def scenario(*clusters, background=0.0, n=60, period=WEEK):
    return SyntheticScenario(41.0, 29.0, n, n, period[0], period[1], tuple(clusters),
                             background_rate=background)


def prepare(sc, seed=0, tau_p=0.3, tau_i=0.3, min_area=1):
    data = generate(sc, seed)
    lat, lon, t = events_to_arrays([e for e in data.events if not e.online])
    cfg = AnalysisConfig(sc.grid, sc.period_start, sc.period_end,
                         tau_permanent=ThresholdSpec(tau_p, min_area),
                         tau_intermittent=ThresholdSpec(tau_i, min_area))
    ev, counts = index_events(lat, lon, t, cfg)
    assert counts == {"outside_grid": 0, "outside_period": 0}
    return data, cfg, ev


def truth(data, name, spec):
    c = next(c for c in data.truth["clusters"] if c["name"] == name)
    return truth_mask(c, GridSpec(**data.truth["grid"]), spec)


ALWAYS = PlantedCluster("always", (30, 30), 15, 6.0)
WEEKEND_NIGHT = PlantedCluster("late", (30, 30), 12, 8.0, (("weekend", 10), ("weekend", 11)))


# --- calendar ------------------------------------------------------------------------------

@pytest.mark.parametrize("d,expected", [(date(2014, 9, 6), WEEKEND), (date(2014, 9, 7), WEEKEND),
                                        (date(2014, 9, 8), WEEKDAY), (date(2014, 9, 5), WEEKDAY)])
def test_classify_day(d, expected):
    assert classify_day(d) == expected


def test_classify_day_uses_local_time_for_datetimes():
    # Friday 22:30 UTC is already Saturday in UTC+3
    ts = datetime(2014, 9, 5, 22, 30, tzinfo=timezone.utc)
    assert classify_day(ts, 0) == WEEKDAY
    assert classify_day(ts, 3) == WEEKEND


def test_there_are_24_tuples():
    assert len(set(all_tuples())) == 24
    with pytest.raises(ValueError):
        TemporalTuple("holiday", 0)
    with pytest.raises(ValueError):
        TemporalTuple(WEEKDAY, 12)
    assert TemporalTuple(WEEKEND, 10).hours == (20, 22)


def test_config_validation():
    g = GridSpec(0, 0, 4, 4)
    with pytest.raises(ValueError):
        AnalysisConfig(g, date(2014, 9, 1), date(2014, 9, 1))
    with pytest.raises(ValueError):
        AnalysisConfig(GridSpec(0, 0, 4, 4, time_step_s=1300), date(2014, 9, 1), date(2014, 9, 2))
    cfg = AnalysisConfig(g, *WEEK)
    assert (cfg.n_days, cfg.steps_per_day, cfg.steps_per_slot) == (7, 72, 6)


def test_index_events_drops_outside_grid_and_period():
    g = GridSpec(41.0, 29.0, 10, 10)
    cfg = AnalysisConfig(g, date(2014, 9, 1), date(2014, 9, 2), tz_offset_h=3)
    epoch = datetime(2014, 9, 1, tzinfo=timezone(timedelta(hours=3))).timestamp()
    lat = [41.0001, 41.0001, 40.99, 41.0001]
    lon = [29.0001, 29.0001, 29.0001, 29.0001]
    t = [epoch, epoch - 1, epoch, epoch + 86400 - 1]
    ev, counts = index_events(lat, lon, t, cfg)
    assert counts == {"outside_grid": 1, "outside_period": 1}
    assert ev.ids.tolist() == [0, 3]
    assert ev.steps.tolist() == [0, 71]


# --- removal -------------------------------------------------------------------------------

def _random_events(rng, n, shape, n_steps=72):
    return IndexedEvents(rng.integers(0, shape[0], n), rng.integers(0, shape[1], n),
                         rng.integers(0, n_steps, n), np.arange(n))


def test_remove_in_mask_examples():
    rng = np.random.default_rng(0)
    ev = _random_events(rng, 50, (8, 8))
    kept, n = remove_in_mask(ev, np.zeros((8, 8), bool))
    assert n == 0 and kept.ids.tolist() == ev.ids.tolist()
    kept, n = remove_in_mask(ev, np.ones((8, 8), bool))
    assert n == 50 and len(kept) == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 200))
def test_remove_in_mask_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    ev = _random_events(rng, n, (12, 12))
    mask = rng.random((12, 12)) > 0.6
    kept, removed = remove_in_mask(ev, mask)
    ref = [i for i, (r, c) in enumerate(zip(ev.rows, ev.cols)) if not mask[r, c]]
    assert kept.ids.tolist() == ref
    assert removed == n - len(ref)
    assert not any(mask[r, c] for r, c in zip(kept.rows, kept.cols))


# --- permanent -----------------------------------------------------------------------------

def test_always_on_cluster_is_one_permanent_region():
    data, cfg, ev = prepare(scenario(ALWAYS))
    perm = detect_permanent(ev, cfg)
    assert len(perm.hotspots) == 1
    assert jaccard(perm.hotspots.mask, truth(data, "always", cfg.grid)) >= 0.8


def test_weekend_only_cluster_is_not_permanent():
    weekend = PlantedCluster("weekend", (20, 45), 8, 6.0,
                             tuple((WEEKEND, s) for s in range(12)))
    always = PlantedCluster("always", (35, 18), 12, 6.0)
    data, cfg, ev = prepare(scenario(always, weekend))
    perm = detect_permanent(ev, cfg)
    assert len(perm.hotspots) == 1
    assert not (perm.hotspots.mask & truth(data, "weekend", cfg.grid)).any()
    # the weekend disc does show up on Saturday
    sat = cfg.dates.index(date(2014, 9, 6))
    assert (perm.daily_masks[sat] & truth(data, "weekend", cfg.grid)).any()


def test_no_events_gives_empty_permanent_set():
    cfg = AnalysisConfig(GridSpec(0, 0, 20, 20), *WEEK)
    perm = detect_permanent(IndexedEvents.empty(), cfg)
    assert len(perm.hotspots) == 0
    assert len(perm.empty_days) == 7


def test_permanent_mask_within_every_daily_mask_and_monotone_in_tau():
    _, cfg, ev = prepare(scenario(ALWAYS, background=2.0))
    trails = daily_trails(ev, cfg)
    prev = None
    for tau in (0.1, 0.3, 0.5, 0.7, 0.9):
        perm = detect_permanent(ev, cfg.with_taus(tau, 0.5), trails=trails)
        for m in perm.daily_masks:
            assert not (perm.hotspots.mask & ~m).any()
        if prev is not None:
            assert not (perm.hotspots.mask & ~prev).any()
        prev = perm.hotspots.mask


# --- intermittent --------------------------------------------------------------------------

def test_weekend_night_cluster_only_in_its_slots():
    _, cfg, ev = prepare(scenario(WEEKEND_NIGHT))
    occ = detect_intermittent(ev, cfg)
    assert len(occ) == 7 * 12
    active = {(d, tt) for (d, tt), hs in occ.items() if len(hs)}
    expected = {(d, TemporalTuple(WEEKEND, s)) for d in (date(2014, 9, 6), date(2014, 9, 7))
                for s in (10, 11)}
    assert active == expected


def test_empty_slot_gives_empty_set():
    cfg = AnalysisConfig(GridSpec(0, 0, 10, 10), date(2014, 9, 1), date(2014, 9, 2))
    occ = detect_intermittent(IndexedEvents.empty(), cfg)
    assert all(len(hs) == 0 for hs in occ.values())


def test_similarity_matrix_structure():
    g = GridSpec(0, 0, 8, 8)
    a = np.zeros(g.shape, bool)
    a[0:2, 0:2] = True
    b = np.zeros(g.shape, bool)
    b[5:7, 5:7] = True
    d1, d2 = date(2014, 9, 2), date(2014, 9, 1)
    occ = {(d1, TemporalTuple(WEEKDAY, 3)): HotspotSet(g, a),
           (d2, TemporalTuple(WEEKDAY, 4)): HotspotSet(g, b),
           (d2, TemporalTuple(WEEKDAY, 3)): HotspotSet(g, a)}
    m = similarity_matrix(occ)
    assert [o.label for o in m.labels] == ["2014-09-01/03", "2014-09-01/04", "2014-09-02/03"]
    assert np.array_equal(m.values, m.values.T)
    assert np.all(np.diag(m.values) == 1.0)
    assert m.values[0, 1] == 0.0 and m.values[0, 2] == 1.0


def test_identical_same_tuple_masks_score_one():
    g = GridSpec(0, 0, 8, 8)
    rng = np.random.default_rng(4)
    base = {s: rng.random(g.shape) > 0.5 for s in range(12)}
    occ = {}
    for d in (date(2014, 9, 1), date(2014, 9, 2), date(2014, 9, 3)):
        for s in range(12):
            occ[(d, TemporalTuple(WEEKDAY, s))] = HotspotSet(g, base[s])
    m = similarity_matrix(occ)
    assert tuning_objective(m.labels, m.values, "intra") == 1.0


def test_objective_needs_repeated_tuples():
    g = GridSpec(0, 0, 4, 4)
    occ = {(date(2014, 9, 1), TemporalTuple(WEEKDAY, s)): HotspotSet.empty(g) for s in range(12)}
    m = similarity_matrix(occ)
    with pytest.raises(ValueError):
        tuning_objective(m.labels, m.values)
    with pytest.raises(ValueError):
        tuning_objective(m.labels, m.values, "bogus")


def test_tuples_group_within_month_only():
    g = GridSpec(0, 0, 4, 4)
    a = np.zeros(g.shape, bool)
    a[0, 0] = True
    b = np.zeros(g.shape, bool)
    b[3, 3] = True
    # same tuple in different months never pairs up
    occ = {(date(2014, 9, 30), TemporalTuple(WEEKDAY, 1)): HotspotSet(g, a),
           (date(2014, 10, 1), TemporalTuple(WEEKDAY, 1)): HotspotSet(g, b)}
    m = similarity_matrix(occ)
    with pytest.raises(ValueError):
        tuple_similarity(m.labels, m.values)


PERIODIC = (PlantedCluster("days", (18, 18), 10, 10.0, tuple((WEEKDAY, s) for s in range(3, 10))),
            PlantedCluster("nights", (42, 42), 10, 10.0, tuple((WEEKEND, s) for s in (0, 1, 10, 11))))


def test_periodic_month_intra_exceeds_inter():
    sc = scenario(*PERIODIC, background=1.0, period=(date(2014, 9, 1), date(2014, 9, 15)))
    _, cfg, ev = prepare(sc, tau_i=0.3, min_area=20)
    res = analyze(ev, cfg)
    intra, inter = res.matrix.tuple_stats()
    assert intra > inter


# --- tuning --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def periodic():
    sc = scenario(PlantedCluster("perm", (15, 45), 9, 6.0), *PERIODIC, background=1.0,
                  period=(date(2014, 9, 1), date(2014, 9, 15)))
    return prepare(sc, min_area=20)


def test_tune_single_candidate(periodic):
    _, cfg, ev = periodic
    res = tune_thresholds(ev, cfg, [(0.3, 0.4)])
    assert (res.tau_permanent, res.tau_intermittent) == (0.3, 0.4)
    assert len(res.table) == 1


def test_tune_rejects_bad_candidates(periodic):
    _, cfg, ev = periodic
    for bad in ([], [(0.0, 0.5)], [(0.5, 1.0)]):
        with pytest.raises(ValueError):
            tune_thresholds(ev, cfg, bad)


def test_tune_table_matches_full_chain(periodic):
    _, cfg, ev = periodic
    cands = [(a, b) for a in (0.2, 0.5) for b in (0.3, 0.6)]
    for kind in ("intra", "contrast"):
        res = tune_thresholds(ev, cfg, cands, kind)
        for row in res.table:
            full = analyze(ev, cfg.with_taus(row["tau_permanent"], row["tau_intermittent"]))
            ref = tuning_objective(full.matrix.labels, full.matrix.values, kind)
            assert row["objective"] == pytest.approx(ref, abs=1e-12)
            assert row["n_permanent"] == len(full.permanent.hotspots)
        best = max(res.table, key=lambda r: (r["objective"], r["tau_permanent"],
                                             r["tau_intermittent"]))
        assert (res.tau_permanent, res.tau_intermittent) == (best["tau_permanent"],
                                                             best["tau_intermittent"])


def test_tune_tie_breaks_toward_larger_taus():
    # no events at all: every candidate scores 1.0 (all masks empty)
    cfg = AnalysisConfig(GridSpec(0, 0, 10, 10), *WEEK)
    res = tune_thresholds(IndexedEvents.empty(), cfg, [(0.2, 0.9), (0.8, 0.1), (0.8, 0.3)])
    assert (res.tau_permanent, res.tau_intermittent) == (0.8, 0.3)


def test_tune_requires_repeated_tuples():
    cfg = AnalysisConfig(GridSpec(0, 0, 10, 10), date(2014, 9, 1), date(2014, 9, 2))
    with pytest.raises(ValueError):
        tune_thresholds(IndexedEvents.empty(), cfg, [(0.5, 0.5)])


def test_worker_count_does_not_change_results(periodic):
    _, cfg, ev = periodic
    a, b = analyze(ev, cfg, workers=1), analyze(ev, cfg, workers=4)
    assert np.array_equal(a.permanent.hotspots.mask, b.permanent.hotspots.mask)
    assert np.array_equal(a.matrix.values, b.matrix.values)
    assert np.array_equal(a.recurring.mask, b.recurring.mask)
    ta = tune_thresholds(ev, cfg, [(0.2, 0.3), (0.5, 0.6)], workers=1)
    tb = tune_thresholds(ev, cfg, [(0.2, 0.3), (0.5, 0.6)], workers=3)
    assert ta.table == tb.table


def test_occurrence_label_and_grouping():
    o = Occurrence(date(2014, 9, 6), 7, WEEKEND)
    assert o.label == "2014-09-06/07"
    assert o.month == (2014, 9)
    assert o.tuple == TemporalTuple(WEEKEND, 7)
