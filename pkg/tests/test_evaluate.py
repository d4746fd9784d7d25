import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sword import synth
from sword.detector import ConfigError
from sword.evaluate import (
    Run,
    detections_for,
    evaluate_config,
    expand_grid,
    first_alarm,
    grid_search,
    k_sweep,
    make_runs,
    match_detections,
    measure_arl_add,
    threshold_candidates,
    tune_threshold,
)


def test_match_examples():
    r = match_detections([50], [52, 54], 5)
    assert (r.tp, r.fp, r.fn) == (1, 1, 0)
    assert r.matched == [(50, 52)] and r.false_positives == [54]
    assert r.precision == 0.5 and r.recall == 1.0 and r.f1 == pytest.approx(2 / 3)
    r = match_detections([50], [49], 5)
    assert r.tp == 0 and r.false_positives == [49]
    r = match_detections([50, 100], [], 3)
    assert r.f1 == 0 and r.fn == 2


def test_match_earliest_first():
    r = match_detections([50, 52], [53], 5)
    assert r.matched == [(50, 53)] and r.false_negatives == [52]


cps_st = st.lists(st.integers(1, 200), max_size=6, unique=True)


@given(cps_st, st.lists(st.integers(1, 200), max_size=10, unique=True), st.integers(0, 10))
def test_match_consistency(cps, dets, delta):
    r = match_detections(sorted(cps), sorted(dets), delta)
    assert r.tp + r.fp == len(dets) and r.tp + r.fn == len(cps)
    assert len({c for c, _ in r.matched}) == r.tp == len({d for _, d in r.matched})
    assert all(c <= d <= c + delta for c, d in r.matched)
    p = r.tp / (r.tp + r.fp) if dets else 0.0
    assert r.precision == pytest.approx(p)
    assert r.as_dict() == match_detections(sorted(cps), list(reversed(sorted(dets))), delta).as_dict()


def test_detections_for_percentile_and_absolute():
    s = np.array([np.nan] * 3 + [0.1, 0.2, 0.3, 0.4, 0.5] + [0.05] * 15 + [5.0] + [0.05] * 10)
    assert detections_for(s, {"theta": 1.0, "c": 1}) == [24]
    assert detections_for(s, {"percentile": 1.0, "calibration": 5, "c": 5}) == [24]
    assert detections_for(s, {"percentile": 0.5, "calibration": 5, "c": 1}) == [24]
    # calibration span itself never fires
    assert detections_for(s, {"percentile": 0.1, "calibration": 5, "c": 1})[0] == 24
    assert detections_for(s, {"theta": math.inf}) == []


def test_tune_threshold_prefers_f1_then_fewer_fp():
    scores = [np.array([0.0, 0.1, 0.9, 0.2, 0.5]), np.array([0.0, 0.2, 0.8, 0.1, 0.6])]
    res = tune_threshold(scores, [[3], [3]], 1, 0)
    assert res.mean_f1 == 1.0 and 0.6 < res.theta <= 0.8
    assert threshold_candidates(scores).min() > 0
    empty = tune_threshold([np.zeros(5)], [[3]], 1, 0)
    assert empty.theta == math.inf and empty.mean_f1 == 0


@pytest.fixture(scope="module")
def er_runs():
    return make_runs([synth.hard_er_scenario(seed=s, p2=0.3) for s in range(3)], K=10, R=10, sharing="shared")


def test_grid_search_ranked_and_deterministic(er_runs):
    axes = {"theta": [0.02, 0.05], "w": [2, 3], "k": [2], "c": [5], "mode": ["centroid"]}
    a = grid_search("sword", er_runs, axes)
    b = grid_search("sword", er_runs, {k: list(reversed(v)) for k, v in axes.items()})
    assert [(r.params, r.mean_f1) for r in a] == [(r.params, r.mean_f1) for r in b]
    keys = [(-r.mean_f1, r.total_fp, r.span) for r in a]
    assert keys == sorted(keys)
    one = evaluate_config("sword", er_runs[:1], {"theta": 0.05, "w": 2, "k": 2, "c": 5})
    assert one.std_f1 == 0
    twice = grid_search("sword", er_runs, {"theta": [0.03, 0.03], "k": [2]})
    assert twice[0].f1s == twice[1].f1s


def test_grid_errors(er_runs):
    with pytest.raises(ConfigError):
        expand_grid({})
    with pytest.raises(ConfigError):
        expand_grid({"theta": []})
    with pytest.raises(ConfigError):
        grid_search("sword", [], {"theta": [1]})
    with pytest.raises(ConfigError):
        grid_search("bocpd", er_runs, {"theta": [1]})


def test_k_sweep_rows_and_range(er_runs):
    rows = k_sweep(er_runs, {"w": 2, "w_ref": 2, "c": 7, "mode": "weighted_gamma", "exact": True}, [1, 2, 3])
    assert [r.k for r in rows] == [1, 2, 3]
    assert rows[0].mean_f1 == 0.0
    with pytest.raises(IndexError):
        k_sweep(er_runs, {"w": 2}, [11])


def test_first_alarm():
    s = np.array([np.nan, 0.1, 0.6, 0.7])
    assert first_alarm(s, 0.5) == 3
    assert first_alarm(s, 0.5, start=3) == 4
    assert first_alarm(s, 1.0) is None


def test_arl_degenerate_thresholds(er_runs):
    null = make_runs([synth.null_er_scenario(seed=s, T=60) for s in range(2)], K=10, R=10, sharing="shared")
    p = {"w": 3, "w_ref": 3, "k": 2, "mode": "weighted_gamma"}
    rep = measure_arl_add("sword", p, null, er_runs, [0.0, 0.05, math.inf])
    lo, hi = rep.rows[0], rep.rows[-1]
    assert lo.arl0 == 6 and lo.add == 0 and lo.detection_rate == 1
    assert hi.arl0 == 60 and hi.censored == 1 and hi.detection_rate == 0 and math.isnan(hi.add)
    arl = [r.arl0 for r in rep.rows]
    assert arl == sorted(arl)
    with pytest.raises(ConfigError):
        measure_arl_add("sword", p, null, er_runs, [0.1])


def test_run_caches_are_stable(er_runs):
    r = er_runs[0]
    assert r.features.shape == (100, 8)
    assert r.exact_moments.shape == (100, 50)
    assert np.abs(r.exact_moments[:, 0]).max() <= 1e-10
    assert isinstance(r, Run) and r.timesteps[0] == 1
