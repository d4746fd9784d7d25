"""Classical online baselines: CUSUM and EWMA charts on graph features, and LAD."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .detector import ConfigError, ScoreSeries, apply_threshold
from .graph import DENSE_LIMIT, DenseLimitError, GraphSnapshot

log = logging.getLogger(__name__)


def burn_in_standardize(features: np.ndarray, burn_in: int) -> np.ndarray:
    """z-scores using mean/std of the first ``burn_in`` rows; zero-variance dims dropped."""
    x = np.asarray(features, dtype=float)
    if burn_in < 2:
        raise ConfigError("burn-in must cover at least 2 steps")
    base = x[:burn_in]
    mean = base.mean(axis=0)
    std = base.std(axis=0, ddof=1)
    live = std > 1e-12 * np.maximum(1.0, np.abs(mean))
    if not live.any():
        raise ConfigError("every feature is constant during burn-in; nothing to standardise")
    return (x[:, live] - mean[live]) / std[live]


def cusum_recursion(z: np.ndarray, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided tabular CUSUM, S+- = max(0, S+-_{t-1} +- z_t - kappa), starting at 0."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    s_pos = np.zeros_like(z)
    s_neg = np.zeros_like(z)
    hi = np.zeros(z.shape[1])
    lo = np.zeros(z.shape[1])
    for i, row in enumerate(z):
        hi = np.maximum(0.0, hi + row - kappa)
        lo = np.maximum(0.0, lo - row - kappa)
        s_pos[i], s_neg[i] = hi, lo
    return s_pos, s_neg


def cusum_scores(features: np.ndarray, kappa: float, burn_in: int) -> np.ndarray:
    """max_d max(S+, S-) after burn-in, NaN during it."""
    z = burn_in_standardize(features, burn_in)
    out = np.full(len(z), np.nan)
    s_pos, s_neg = cusum_recursion(z[burn_in:], kappa)
    out[burn_in:] = np.maximum(s_pos, s_neg).max(axis=1)
    return out


def cusum_detect(features, kappa: float, theta: float, burn_in: int, cooldown: int = 1, timesteps=None) -> ScoreSeries:
    scores = cusum_scores(features, kappa, burn_in)
    t = np.arange(1, len(scores) + 1) if timesteps is None else np.asarray(timesteps)
    return ScoreSeries(t, scores, apply_threshold(scores, theta, cooldown, t), theta)


def ewma_scores(features: np.ndarray, lam: float, burn_in: int) -> np.ndarray:
    """max_d |E_t| in units of the asymptotic EWMA std sqrt(lam / (2 - lam)).

    E starts at the burn-in mean (0 in standardised units). Comparing the
    score with L gives the usual control limit ``L * std * sqrt(lam/(2-lam))``.
    """
    if not 0.0 < lam <= 1.0:
        raise ConfigError("EWMA smoothing must lie in (0, 1]")
    z = burn_in_standardize(features, burn_in)
    out = np.full(len(z), np.nan)
    e = np.zeros(z.shape[1])
    sigma = np.sqrt(lam / (2.0 - lam))
    for i in range(burn_in, len(z)):
        e = lam * z[i] + (1.0 - lam) * e
        out[i] = np.abs(e).max() / sigma
    return out


def ewma_detect(features, lam: float, L: float, burn_in: int, cooldown: int = 1, timesteps=None) -> ScoreSeries:
    scores = ewma_scores(features, lam, burn_in)
    t = np.arange(1, len(scores) + 1) if timesteps is None else np.asarray(timesteps)
    return ScoreSeries(t, scores, apply_threshold(scores, L, cooldown, t), L)


def laplacian_spectrum(g: GraphSnapshot, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Descending eigenvalues (= singular values) of the combinatorial Laplacian D - A."""
    if g.n > limit:
        raise DenseLimitError(f"LAD needs a dense eigendecomposition; {g.n} nodes exceeds {limit}")
    lap = np.diag(g.degree.astype(float)) - g.adjacency.toarray()
    return np.linalg.eigvalsh(lap)[::-1]


def lad_signatures(spectra: Sequence[np.ndarray], r: int) -> np.ndarray:
    n_min = min(len(s) for s in spectra)
    if r > n_min:
        log.warning("LAD rank r=%d exceeds node count %d; clamping", r, n_min)
        r = n_min
    sig = np.array([np.asarray(s)[:r] for s in spectra], dtype=float)
    norms = np.linalg.norm(sig, axis=1, keepdims=True)
    return np.divide(sig, norms, out=np.zeros_like(sig), where=norms > 0)


def lad_scores(spectra: Sequence[np.ndarray], r: int = 6, windows: tuple[int, ...] = (5, 10)) -> np.ndarray:
    """max over windows of 1 - cos(signature_t, normalised sum of the previous l signatures)."""
    sig = lad_signatures(spectra, r)
    T = len(sig)
    out = np.full(T, np.nan)
    for i in range(max(windows), T):
        zs = []
        for ell in windows:
            ctx = sig[i - ell : i].sum(axis=0)
            nc, ns = np.linalg.norm(ctx), np.linalg.norm(sig[i])
            if nc == 0 or ns == 0:
                # an edgeless side has no spectrum; appearing or vanishing structure counts as maximal change
                zs.append(0.0 if nc == ns else 1.0)
            else:
                zs.append(1.0 - float(np.dot(sig[i], ctx) / (nc * ns)))
        out[i] = max(zs)
    return out


def lad_detect(
    snapshots: Sequence[GraphSnapshot],
    r: int = 6,
    windows: tuple[int, ...] = (5, 10),
    theta: float = 0.0,
    cooldown: int = 1,
) -> ScoreSeries:
    scores = lad_scores([laplacian_spectrum(g) for g in snapshots], r, windows)
    t = np.array([g.t for g in snapshots])
    return ScoreSeries(t, scores, apply_threshold(scores, theta, cooldown, t), theta)
