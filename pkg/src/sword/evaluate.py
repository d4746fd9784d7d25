"""Matching metrics, threshold tuning, grid search, ARL0/ADD and k-sweeps.

Every method is reduced to a *scorer*: a function from one run's data
and a parameter dict to a score series (NaN during burn-in). Thresholds
and cooldowns are then applied uniformly by
:func:`sword.detector.apply_threshold`, so a grid only rescores when a
non-threshold parameter changes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import baselines, scpd
from .detector import ConfigError, DetectorConfig, WindowSpec, apply_threshold, calibrate_percentile, score_stream
from .graph import GraphSnapshot, feature_matrix
from .kpm import ProbeSet, estimate_stream_moments, exact_stream_moments


@dataclass
class MatchReport:
    matched: list[tuple[int, int]]
    false_positives: list[int]
    false_negatives: list[int]
    delta: int

    @property
    def tp(self) -> int:
        return len(self.matched)

    @property
    def fp(self) -> int:
        return len(self.false_positives)

    @property
    def fn(self) -> int:
        return len(self.false_negatives)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {
            "matched": [list(m) for m in self.matched],
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "delta": self.delta,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def match_detections(true_cps: Iterable[int], detections: Iterable[int], delta: int) -> MatchReport:
    """One-sided, one-to-one matching: a detection d is a hit for the earliest
    unmatched change point c with c <= d <= c + delta."""
    cps = sorted(int(c) for c in true_cps)
    used = [False] * len(cps)
    matched, fps = [], []
    for d in sorted(int(x) for x in detections):
        for i, c in enumerate(cps):
            if not used[i] and c <= d <= c + delta:
                used[i] = True
                matched.append((c, d))
                break
        else:
            fps.append(d)
    fns = [c for c, u in zip(cps, used) if not u]
    return MatchReport(matched, fps, fns, delta)


# Runs and scorers ----------------------------------------------------------


@dataclass
class Run:
    """One stream with ground truth; derived representations are cached."""

    snapshots: Sequence[GraphSnapshot]
    change_points: list[int]
    moments: np.ndarray | None = None
    seed: int = 0

    @property
    def timesteps(self) -> np.ndarray:
        return np.array([g.t for g in self.snapshots])

    @cached_property
    def features(self) -> np.ndarray:
        return feature_matrix(self.snapshots)

    @cached_property
    def laplacian_spectra(self) -> list[np.ndarray]:
        return [baselines.laplacian_spectrum(g) for g in self.snapshots]

    @cached_property
    def exact_moments(self) -> np.ndarray:
        return exact_stream_moments(self.snapshots, 50)


def make_runs(scenarios, K: int = 50, R: int = 30, sharing: str = "fresh", moment_seed=None, exact=False) -> list[Run]:
    """Generate streams and moments; the probe seed defaults to the scenario seed."""
    from .synth import generate_sequence

    runs = []
    for spec in scenarios:
        snaps, cps = generate_sequence(spec)
        seed = spec.seed if moment_seed is None else moment_seed
        mom = exact_stream_moments(snaps, K) if exact else estimate_stream_moments(snaps, K, ProbeSet(R, seed, sharing))
        runs.append(Run(snaps, cps, mom, seed=spec.seed))
    return runs


def _sword_scorer(run: Run, p: dict) -> np.ndarray:
    cfg = DetectorConfig(
        threshold=0.0,
        k=int(p.get("k", 2)),
        cooldown=1,
        mode=p.get("mode", "mean_pairwise"),
        window=WindowSpec(
            int(p.get("w", 3)),
            int(p.get("w_ref", p.get("w", 3))),
            p.get("weighting", "uniform"),
            float(p.get("gamma", 0.7)),
        ),
    )
    mom = run.exact_moments if p.get("exact") else run.moments
    return score_stream(mom, cfg)


def _cascade_cfg(p: dict) -> scpd.CascadeConfig:
    return scpd.CascadeConfig(
        stage=p.get("stage", "S0"),
        n_bins=float(p.get("n_bins", math.inf)),
        contexts=tuple(p.get("contexts", (5, 10))),
        k=int(p.get("k", 8)),
        w=int(p.get("w", 3)),
        w_ref=int(p.get("w_ref", p.get("w", 3))),
        order=p.get("order", "scpd"),
    )


def _scpd_scorer(run: Run, p: dict) -> np.ndarray:
    mom = run.exact_moments if p.get("exact") else run.moments
    return scpd.scpd_scores(mom, _cascade_cfg(p))


def _laddos_scorer(run: Run, p: dict) -> np.ndarray:
    return _scpd_scorer(run, {**p, "stage": "S0", "order": "laddos"})


def _cusum_scorer(run: Run, p: dict) -> np.ndarray:
    return baselines.cusum_scores(run.features, float(p.get("kappa", 0.5)), int(p.get("burn_in", 6)))


def _ewma_scorer(run: Run, p: dict) -> np.ndarray:
    return baselines.ewma_scores(run.features, float(p.get("lam", 0.3)), int(p.get("burn_in", 6)))


def _lad_scorer(run: Run, p: dict) -> np.ndarray:
    return baselines.lad_scores(run.laplacian_spectra, int(p.get("r", 6)), tuple(p.get("windows", (5, 10))))


SCORERS: dict[str, Callable[[Run, dict], np.ndarray]] = {
    "sword": _sword_scorer,
    "scpd": _scpd_scorer,
    "laddos": _laddos_scorer,
    "cusum": _cusum_scorer,
    "ewma": _ewma_scorer,
    "lad": _lad_scorer,
}

# parameters consumed by thresholding rather than scoring
THRESHOLD_KEYS = ("theta", "percentile", "calibration", "c")


def method_scorer(method: str) -> Callable[[Run, dict], np.ndarray]:
    try:
        return SCORERS[method]
    except KeyError:
        raise ConfigError(f"unknown method {method!r}; available: {sorted(SCORERS)}") from None


def detections_for(scores: np.ndarray, p: dict, timesteps: np.ndarray | None = None) -> list[int]:
    """Apply a parameter dict's threshold rule (absolute or percentile) and cooldown."""
    t = np.arange(1, len(scores) + 1) if timesteps is None else np.asarray(timesteps)
    cooldown = int(p.get("c", 1))
    scored = np.flatnonzero(~np.isnan(scores))
    if scored.size == 0:
        return []
    start = int(scored[0])
    if p.get("percentile") is not None:
        n_cal = p.get("calibration") or max(5, int(round(0.2 * len(scores))))
        cal = scores[start : start + n_cal]
        if len(cal) < n_cal:
            return []
        theta = calibrate_percentile(cal, float(p["percentile"]))
        start += n_cal
    else:
        theta = float(p["theta"])
    fired = apply_threshold(scores, theta, cooldown, t, start=start)
    return [int(x) for x in t[fired]]


# Threshold tuning ----------------------------------------------------------


def threshold_candidates(score_sets: Sequence[np.ndarray], max_candidates: int = 200) -> np.ndarray:
    """Positive score values seen across runs, thinned to at most ``max_candidates`` quantiles."""
    pooled = np.concatenate([np.asarray(s)[np.isfinite(s)] for s in score_sets] or [np.zeros(0)])
    vals = np.unique(pooled[pooled > 0])
    if vals.size > max_candidates:
        vals = np.unique(np.quantile(vals, np.linspace(0, 1, max_candidates)))
    return vals


@dataclass
class TuneResult:
    theta: float
    mean_f1: float
    std_f1: float
    total_fp: int
    f1s: list[float]


def tune_threshold(
    score_sets: Sequence[np.ndarray],
    truths: Sequence[Sequence[int]],
    cooldown: int,
    delta: int,
    candidates: np.ndarray | None = None,
    timesteps: Sequence[np.ndarray] | None = None,
) -> TuneResult:
    """Threshold maximising mean F1 over runs (ties: fewer FPs, then larger theta)."""
    if candidates is None:
        candidates = threshold_candidates(score_sets)
    best = None
    for theta in candidates:
        f1s, fp = [], 0
        for i, (s, cps) in enumerate(zip(score_sets, truths)):
            t = None if timesteps is None else timesteps[i]
            dets = detections_for(s, {"theta": theta, "c": cooldown}, t)
            rep = match_detections(cps, dets, delta)
            f1s.append(rep.f1)
            fp += rep.fp
        key = (float(np.mean(f1s)), -fp, float(theta))
        if best is None or key > best[0]:
            best = (key, TuneResult(float(theta), key[0], float(np.std(f1s)), fp, f1s))
    if best is None:
        n = len(score_sets)
        return TuneResult(math.inf, 0.0, 0.0, 0, [0.0] * n)
    return best[1]


# Grid search ---------------------------------------------------------------


def expand_grid(axes: dict[str, Sequence]) -> list[dict]:
    if not axes:
        raise ConfigError("empty grid")
    names = list(axes)
    for k in names:
        if len(axes[k]) == 0:
            raise ConfigError(f"grid axis {k!r} has no values")
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[k] for k in names))]


def _freeze(p: dict) -> tuple:
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in p.items()))


@dataclass
class GridRow:
    params: dict
    mean_f1: float
    std_f1: float
    total_fp: int
    f1s: list[float] = field(repr=False)

    @property
    def span(self) -> int:
        p = self.params
        return int(p.get("w", 0)) + int(p.get("w_ref", p.get("w", 0)))


def evaluate_config(method: str, runs: Sequence[Run], params: dict, delta: int = 5) -> GridRow:
    return grid_search(method, runs, {k: [v] for k, v in params.items()}, delta)[0]


def grid_search(
    method: str,
    runs: Sequence[Run],
    axes: dict[str, Sequence],
    delta: int = 5,
    top: int | None = None,
) -> list[GridRow]:
    """Score every configuration on every run; rank by mean F1, then fewer FPs,
    then shorter windows. Results do not depend on evaluation order."""
    if not runs:
        raise ConfigError("grid search needs at least one run")
    scorer = method_scorer(method)
    configs = expand_grid(axes)
    cache: dict[tuple, list[np.ndarray]] = {}
    rows = []
    for p in configs:
        score_key = _freeze({k: v for k, v in p.items() if k not in THRESHOLD_KEYS})
        if score_key not in cache:
            score_p = {k: v for k, v in p.items() if k not in THRESHOLD_KEYS}
            cache[score_key] = [scorer(run, score_p) for run in runs]
        f1s, fp = [], 0
        for run, s in zip(runs, cache[score_key]):
            rep = match_detections(run.change_points, detections_for(s, p, run.timesteps), delta)
            f1s.append(rep.f1)
            fp += rep.fp
        rows.append(GridRow(dict(p), float(np.mean(f1s)), float(np.std(f1s)), fp, f1s))
    rows.sort(key=lambda r: (-r.mean_f1, r.total_fp, r.span))
    return rows[:top] if top else rows


# k-sensitivity -------------------------------------------------------------


@dataclass
class KSweepRow:
    k: int
    mean_f1: float
    std_f1: float
    thetas: list[float]


def k_sweep(
    runs: Sequence[Run],
    base: dict,
    k_values: Sequence[int],
    delta: int = 5,
    method: str = "sword",
    per_seed: bool = True,
) -> list[KSweepRow]:
    """Hold everything but k fixed; re-tune the threshold at every k
    (per run when ``per_seed``, otherwise one threshold across runs)."""
    scorer = method_scorer(method)
    K = min((r.exact_moments if base.get("exact") else r.moments).shape[1] for r in runs)
    cooldown = int(base.get("c", 1))
    out = []
    for k in k_values:
        if k > K:
            raise IndexError(f"k={k} exceeds cached moment order {K}")
        p = {kk: v for kk, v in base.items() if kk not in THRESHOLD_KEYS}
        p["k"] = k
        scores = [scorer(run, p) for run in runs]
        if per_seed:
            res = [tune_threshold([s], [r.change_points], cooldown, delta, timesteps=[r.timesteps]) for s, r in zip(scores, runs)]
            f1s = [x.mean_f1 for x in res]
            thetas = [x.theta for x in res]
        else:
            res1 = tune_threshold(scores, [r.change_points for r in runs], cooldown, delta, timesteps=[r.timesteps for r in runs])
            f1s, thetas = res1.f1s, [res1.theta]
        out.append(KSweepRow(k, float(np.mean(f1s)), float(np.std(f1s)), thetas))
    return out


# ARL0 / ADD ----------------------------------------------------------------


@dataclass
class ArlRow:
    threshold: float
    arl0: float
    censored: float
    detection_rate: float
    add: float  # NaN when detection rate < 0.3
    add_censored: float  # misses counted as the full post-change horizon


@dataclass
class ArlAddReport:
    method: str
    rows: list[ArlRow]
    T_null: int
    T_change: int
    change_point: int

    def as_records(self) -> list[dict]:
        return [{"method": self.method, **r.__dict__} for r in self.rows]


def first_alarm(scores: np.ndarray, theta: float, cooldown: int = 1, start: int = 0) -> int | None:
    fired = apply_threshold(scores, theta, cooldown, start=start)
    idx = np.flatnonzero(fired)
    return int(idx[0]) + 1 if idx.size else None


def measure_arl_add(
    method: str,
    params: dict,
    null_runs: Sequence[Run],
    change_runs: Sequence[Run],
    thresholds: Sequence[float],
) -> ArlAddReport:
    """ARL0 from null runs (censored at their length) and detection rate / ADD from
    change runs. A pre-change alarm restarts the rule, so the post-change delay is
    measured from the first score >= theta at or after the change point."""
    if len(thresholds) < 2:
        raise ConfigError("an ARL sweep needs at least two thresholds")
    scorer = method_scorer(method)
    p = {k: v for k, v in params.items() if k not in THRESHOLD_KEYS}
    null_scores = [scorer(r, p) for r in null_runs]
    change_scores = [scorer(r, p) for r in change_runs]
    T_null = len(null_runs[0].snapshots)
    T_change = len(change_runs[0].snapshots)
    tau = change_runs[0].change_points[0]
    horizon = T_change - tau
    rows = []
    for theta in sorted(thresholds):
        lengths, censored = [], 0
        for s in null_scores:
            a = first_alarm(s, theta)
            if a is None:
                censored += 1
                a = len(s)
            lengths.append(a)
        delays = []
        for s in change_scores:
            a = first_alarm(s, theta, start=tau - 1)
            delays.append(None if a is None else a - tau)
        hit = [d for d in delays if d is not None]
        rate = len(hit) / len(delays)
        add = float(np.mean(hit)) if hit and rate >= 0.3 else math.nan
        add_c = float(np.mean([horizon if d is None else d for d in delays]))
        rows.append(ArlRow(float(theta), float(np.mean(lengths)), censored / len(null_scores), rate, add, add_c))
    return ArlAddReport(method, rows, T_null, T_change, tau)


def null_quantile_thresholds(method: str, params: dict, null_runs: Sequence[Run], levels: Sequence[float]) -> list[float]:
    """Thresholds at quantiles of the pooled null score distribution."""
    scorer = method_scorer(method)
    p = {k: v for k, v in params.items() if k not in THRESHOLD_KEYS}
    pooled = np.concatenate([s[np.isfinite(s)] for s in (scorer(r, p) for r in null_runs)])
    return [float(np.quantile(pooled, q)) for q in levels]


def matched_add(report: ArlAddReport, target_arl0: float) -> ArlRow:
    """Operating point whose ARL0 is closest to ``target_arl0``."""
    return min(report.rows, key=lambda r: (abs(r.arl0 - target_arl0), -r.threshold))
