"""SCPD/LADdos-style scoring, parameterised so each cascade stage flips one axis.

The stages walk from SCPD's scoring (SVD context, cosine, first
difference, Jackson-damped histograms) to SWORD's centroid L1 on raw
moments:

    S0      SVD context + cosine + first difference
    S1      context mean replaces the top singular vector
    S2      no first difference
    S3      two-window comparison of window means (still cosine)
    S3half  L1 on L2-normalised window means
    S4      L1 on raw window means
    S5      no Jackson damping (identical to SWORD centroid mode)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .detector import DetectorConfig, ScoreSeries, WindowSpec, apply_threshold, score_stream
from .kpm import as_moment_array, dos_histograms, jackson_damp

log = logging.getLogger(__name__)

STAGES = ("S0", "S1", "S2", "S3", "S3half", "S4", "S5")


@dataclass(frozen=True)
class PipelineAxes:
    context: str = "svd"  # "svd" | "mean"
    difference: bool = True
    two_window: bool = False
    metric: str = "cosine"  # "cosine" | "l1"
    l2_normalize: bool = True
    jackson: bool = True


_STAGE_AXES = {
    "S0": PipelineAxes(),
    "S1": PipelineAxes(context="mean"),
    "S2": PipelineAxes(context="mean", difference=False),
    "S3": PipelineAxes(context="mean", difference=False, two_window=True),
    "S3half": PipelineAxes(context="mean", difference=False, two_window=True, metric="l1"),
    "S4": PipelineAxes(context="mean", difference=False, two_window=True, metric="l1", l2_normalize=False),
    "S5": PipelineAxes(
        context="mean", difference=False, two_window=True, metric="l1", l2_normalize=False, jackson=False
    ),
}


def stage_axes(stage: str) -> PipelineAxes:
    if stage not in _STAGE_AXES:
        raise ValueError(f"unknown cascade stage {stage!r}; expected one of {STAGES}")
    return _STAGE_AXES[stage]


@dataclass(frozen=True)
class CascadeConfig:
    stage: str = "S0"
    n_bins: float = math.inf
    contexts: tuple[int, ...] = (5, 10)
    k: int = 8
    w: int = 3
    w_ref: int = 3
    cooldown: int = 5
    threshold: float = 0.0
    order: str = "scpd"  # how multiple context series are combined under differencing

    def __post_init__(self):
        stage_axes(self.stage)
        if not self.contexts or min(self.contexts) < 1:
            raise ValueError("context lengths must be >= 1")
        if self.order not in ("scpd", "laddos"):
            raise ValueError(f"unknown combination order {self.order!r}")

    @property
    def axes(self) -> PipelineAxes:
        return stage_axes(self.stage)


def representations(moments, k: int, n_bins: float, jackson: bool) -> np.ndarray:
    """Per-snapshot vectors h_t fed to the scorer."""
    arr = as_moment_array(moments)[:, :k]
    if jackson:
        arr = jackson_damp(arr)
    return dos_histograms(arr, n_bins)


def _one_minus_cos(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(1.0 - np.dot(a, b) / (na * nb))


def _unit(x: np.ndarray) -> np.ndarray:
    nx = np.linalg.norm(x)
    return x / nx if nx > 0 else x


def _compare(a: np.ndarray, b: np.ndarray, axes: PipelineAxes) -> float:
    if axes.metric == "cosine":
        return _one_minus_cos(a, b)
    if axes.l2_normalize:
        a, b = _unit(a), _unit(b)
    return float(np.abs(a - b).sum())


def top_singular_direction(context: np.ndarray) -> np.ndarray:
    """Leading singular direction of the ``(l, d)`` context rows, signed toward their mean."""
    _, _, vt = np.linalg.svd(context, full_matrices=False)
    u = vt[0]
    if np.dot(u, context.mean(axis=0)) < 0:
        u = -u
    return u


def context_series(h: np.ndarray, length: int, axes: PipelineAxes) -> np.ndarray:
    """Z_t comparing h_t with a summary of the ``length`` vectors before it."""
    T = len(h)
    z = np.full(T, np.nan)
    for i in range(length, T):
        ctx = h[i - length : i]
        ref = top_singular_direction(ctx) if axes.context == "svd" else ctx.mean(axis=0)
        z[i] = _compare(h[i], ref, axes)
    return z


def combine_contexts(series: Sequence[np.ndarray], difference: bool, order: str = "scpd") -> np.ndarray:
    """Merge per-context Z series.

    Without differencing the score is the max over contexts. With
    differencing, ``"scpd"`` takes the max then clamps the first
    difference; ``"laddos"`` clamps each series' difference then takes the max.
    """
    stack = np.vstack(series)
    if not difference:
        return stack.max(axis=0)
    if order == "scpd":
        m = stack.max(axis=0)
        out = np.full_like(m, np.nan)
        out[1:] = np.maximum(0.0, m[1:] - m[:-1])
        return out
    diffs = np.full_like(stack, np.nan)
    diffs[:, 1:] = np.maximum(0.0, stack[:, 1:] - stack[:, :-1])
    return diffs.max(axis=0)


def score_vectors(h: np.ndarray, cfg: CascadeConfig, axes: PipelineAxes | None = None) -> np.ndarray:
    """Score series over precomputed representation vectors ``h`` (T, d)."""
    axes = axes or cfg.axes
    h = np.asarray(h, dtype=float)
    T = len(h)
    if not axes.two_window:
        # NaN-propagating max keeps burn-in undefined until the longest context is full
        series = [context_series(h, ell, axes) for ell in cfg.contexts]
        return combine_contexts(series, axes.difference, cfg.order)
    if axes.metric == "l1" and not axes.l2_normalize:
        det = DetectorConfig(
            threshold=0.0, k=h.shape[1], cooldown=1, mode="centroid", window=WindowSpec(cfg.w, cfg.w_ref)
        )
        return score_stream(h, det)
    span = cfg.w + cfg.w_ref
    out = np.full(T, np.nan)
    for i in range(span - 1, T):
        win = h[i - span + 1 : i + 1]
        ref = win[: cfg.w_ref].mean(axis=0)
        test = win[cfg.w_ref :].mean(axis=0)
        out[i] = _compare(test, ref, axes)
    if axes.difference:
        d = np.full(T, np.nan)
        d[1:] = np.maximum(0.0, out[1:] - out[:-1])
        out = d
    return out


def scpd_scores(moments, cfg: CascadeConfig, axes: PipelineAxes | None = None) -> np.ndarray:
    axes = axes or cfg.axes
    h = representations(moments, cfg.k, cfg.n_bins, axes.jackson)
    return score_vectors(h, cfg, axes)


def scpd_score_stream(moments, cfg: CascadeConfig, timesteps=None, axes: PipelineAxes | None = None) -> ScoreSeries:
    scores = scpd_scores(moments, cfg, axes)
    t = np.arange(1, len(scores) + 1) if timesteps is None else np.asarray(timesteps)
    fired = apply_threshold(scores, cfg.threshold, cfg.cooldown, t)
    return ScoreSeries(t, scores, fired, cfg.threshold)


def laddos_variant(moments, cfg: CascadeConfig, timesteps=None) -> ScoreSeries:
    """S0 scoring with LADdos' clamp-then-max ordering across contexts."""
    return scpd_score_stream(moments, replace(cfg, stage="S0", order="laddos"), timesteps)


def dedupe_bins(bins: Sequence[float]) -> list[float]:
    seen: list[float] = []
    for b in bins:
        b = float(b)
        if b in seen:
            log.warning("duplicate bin count %s ignored", b)
            continue
        seen.append(b)
    return seen
