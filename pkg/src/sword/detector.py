"""Two-window moment statistics and the online detection loop."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .kpm import as_moment_array

MODES = ("mean_pairwise", "centroid", "weighted_gamma")
MODE_ALIASES = {
    "pw": "mean_pairwise",
    "pairwise": "mean_pairwise",
    "mean-pairwise": "mean_pairwise",
    "cen": "centroid",
    "centroid-l1": "centroid",
    "mean_distance": "centroid",
    "gamma": "weighted_gamma",
    "weighted-gamma": "weighted_gamma",
}


class ConfigError(ValueError):
    pass


def canonical_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode.lower(), mode.lower())
    if mode not in MODES:
        raise ConfigError(f"unknown distance mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class WindowSpec:
    w: int = 3
    w_ref: int = 3
    weighting: str = "uniform"
    gamma: float = 0.7

    def __post_init__(self):
        if self.w < 1 or self.w_ref < 1:
            raise ConfigError("window lengths must be >= 1")
        if self.weighting not in ("uniform", "exponential"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.weighting == "exponential" and not 0.0 < self.gamma < 1.0:
            raise ConfigError("exponential decay gamma must lie in (0, 1)")

    @property
    def span(self) -> int:
        return self.w + self.w_ref

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        """(test, reference) weights, oldest first, each summing to 1."""
        return self._one(self.w), self._one(self.w_ref)

    def _one(self, size: int) -> np.ndarray:
        if self.weighting == "uniform":
            return np.full(size, 1.0 / size)
        age = np.arange(size - 1, -1, -1)
        raw = self.gamma ** age
        return raw / raw.sum()


@dataclass(frozen=True)
class DetectorConfig:
    """SWORD hyperparameters.

    Exactly one of ``threshold`` (absolute) or ``percentile`` must be set.
    With a percentile, the threshold is the quantile of the first
    ``calibration`` scored steps and is frozen afterwards.
    """

    threshold: float | None = 0.02
    k: int = 2
    cooldown: int = 5
    mode: str = "mean_pairwise"
    window: WindowSpec = field(default_factory=WindowSpec)
    percentile: float | None = None
    calibration: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", canonical_mode(self.mode))
        if self.cooldown < 1:
            raise ConfigError("cooldown must be >= 1")
        if self.k < 1:
            raise ConfigError("moment order k must be >= 1")
        if (self.threshold is None) == (self.percentile is None):
            raise ConfigError("set exactly one of threshold or percentile")
        if self.percentile is not None and not 0.0 < self.percentile <= 1.0:
            raise ConfigError("percentile must lie in (0, 1]")

    def with_threshold(self, theta: float) -> "DetectorConfig":
        return replace(self, threshold=theta, percentile=None, calibration=None)


@dataclass
class ScoreSeries:
    """Per-timestep scores (NaN during burn-in) and emitted detections."""

    t: np.ndarray
    score: np.ndarray
    detected: np.ndarray
    threshold: float = math.nan

    @property
    def detections(self) -> list[int]:
        return [int(x) for x in self.t[self.detected]]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "score", "detected"])
            for t, s, d in zip(self.t, self.score, self.detected):
                w.writerow([int(t), "" if np.isnan(s) else repr(float(s)), int(bool(d))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        t = np.array([int(r["t"]) for r in rows], dtype=np.int64)
        s = np.array([float(r["score"]) if r["score"] else math.nan for r in rows])
        d = np.array([r["detected"] == "1" for r in rows], dtype=bool)
        return cls(t, s, d)

    def write_detections(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.detections) + "\n", encoding="utf-8")


def _batched_statistic(windows: np.ndarray, window: WindowSpec, mode: str) -> np.ndarray:
    """Statistic for a batch of ``(B, span, k)`` windows, oldest row first.

    Reductions run over contiguous trailing axes so every batch row is
    computed identically regardless of batch size.
    """
    alpha, beta = window.weights()
    ref = windows[:, : window.w_ref, :]
    test = windows[:, window.w_ref :, :]
    if mode == "mean_pairwise":
        diffs = np.abs(test[:, :, None, :] - ref[:, None, :, :]).sum(axis=-1)
        pair_w = alpha[:, None] * beta[None, :]
        return np.ascontiguousarray(diffs * pair_w).reshape(len(windows), -1).sum(axis=-1)
    mean_test = np.ascontiguousarray(np.swapaxes(test, 1, 2) * alpha).sum(axis=-1)
    mean_ref = np.ascontiguousarray(np.swapaxes(ref, 1, 2) * beta).sum(axis=-1)
    delta = mean_test - mean_ref
    if mode == "centroid":
        return np.abs(delta).sum(axis=-1)
    j = np.arange(1, delta.shape[-1] + 1)
    return np.sqrt(((delta / j) ** 2).sum(axis=-1))


def window_statistic(moments, cfg: DetectorConfig) -> float:
    """D_t for exactly ``w + w_ref`` moment vectors, oldest first."""
    arr = as_moment_array(moments)
    span = cfg.window.span
    if arr.shape[0] != span:
        raise ValueError(f"need exactly {span} moment vectors, got {arr.shape[0]}")
    if arr.shape[1] < cfg.k:
        raise IndexError(f"moment vectors have order {arr.shape[1]} < k={cfg.k}")
    return float(_batched_statistic(arr[None, :, : cfg.k], cfg.window, cfg.mode)[0])


def score_stream(moments, cfg: DetectorConfig) -> np.ndarray:
    """D_t for every position (NaN while fewer than ``w + w_ref`` vectors exist)."""
    arr = as_moment_array(moments)
    if arr.shape[1] < cfg.k:
        raise IndexError(f"moment vectors have order {arr.shape[1]} < k={cfg.k}")
    T, span = arr.shape[0], cfg.window.span
    scores = np.full(T, np.nan)
    if T >= span:
        win = sliding_window_view(arr[:, : cfg.k], span, axis=0)  # (B, k, span)
        win = np.ascontiguousarray(np.swapaxes(win, 1, 2))
        scores[span - 1 :] = _batched_statistic(win, cfg.window, cfg.mode)
    return scores


def apply_threshold(
    scores: np.ndarray,
    theta: float,
    cooldown: int,
    timesteps: np.ndarray | None = None,
    start: int = 0,
) -> np.ndarray:
    """Boolean detection mask: fire when score >= theta and t - t_prev >= cooldown.

    Positions before ``start`` never fire. NaN scores never fire.
    """
    scores = np.asarray(scores, dtype=float)
    t = np.arange(1, len(scores) + 1) if timesteps is None else np.asarray(timesteps)
    fired = np.zeros(len(scores), dtype=bool)
    with np.errstate(invalid="ignore"):
        candidates = np.flatnonzero(scores >= theta)
    prev = -math.inf
    for i in candidates:
        if i >= start and t[i] - prev >= cooldown:
            fired[i] = True
            prev = t[i]
    return fired


def calibrate_percentile(scores: Sequence[float], p: float) -> float:
    """Linear-interpolation quantile of calibration scores."""
    arr = np.asarray(scores, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise ConfigError("percentile calibration needs at least one scored step")
    if not 0.0 <= p <= 1.0:
        raise ConfigError("percentile must lie in [0, 1]")
    return float(np.quantile(arr, p))


def default_calibration(T: int, span: int) -> int:
    return max(5, int(round(0.2 * T)))


def detect_stream(moments, cfg: DetectorConfig, timesteps=None) -> ScoreSeries:
    """Run the online detector over a moment stream.

    Each output row depends only on vectors up to its own timestep.
    """
    arr = as_moment_array(moments) if len(moments) else np.zeros((0, cfg.k))
    T = arr.shape[0]
    t = np.arange(1, T + 1) if timesteps is None else np.asarray(timesteps, dtype=np.int64)
    scores = score_stream(arr, cfg) if T else np.zeros(0)
    span = cfg.window.span
    start = span - 1
    if cfg.percentile is not None:
        n_cal = cfg.calibration if cfg.calibration is not None else default_calibration(T, span)
        if n_cal < 1:
            raise ConfigError("percentile threshold needs a calibration span of at least one scored step")
        cal = scores[start : start + n_cal]
        if cal.size < n_cal:
            # stream ends before calibration completes: no threshold, no detections
            return ScoreSeries(t, scores, np.zeros(T, dtype=bool), math.nan)
        theta = calibrate_percentile(cal, cfg.percentile)
        start += n_cal
    else:
        theta = float(cfg.threshold)
    fired = apply_threshold(scores, theta, cfg.cooldown, t, start=start)
    return ScoreSeries(t, scores, fired, theta)
