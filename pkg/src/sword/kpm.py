"""Chebyshev moments of the shifted normalized Laplacian.

Stochastic moments come from Hutchinson probes pushed through the
three-term Chebyshev recurrence (one sparse matvec per order, all probes
applied as one block). Exact moments, Jackson damping, density-of-states
histograms and the moment/Wasserstein comparison live here as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as _rng
from .graph import DENSE_LIMIT, GraphSnapshot, exact_spectrum, w1_sorted

DEFAULT_K = 50
DEFAULT_R = 30
WASSERSTEIN_C = 36.0


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Moments mu_1..mu_K of one snapshot (mu_0 = 1 is implicit)."""

    values: np.ndarray
    source: str = "estimated"
    R: int | None = None
    seed: int | None = None

    @property
    def K(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class ProbeSet:
    """Rademacher probe policy.

    ``sharing="fresh"`` draws new probes for every snapshot from the
    substream keyed by its timestep; ``"shared"`` reuses one probe block
    (keyed by node count) across the whole stream.
    """

    R: int = DEFAULT_R
    seed: int = 0
    sharing: str = "fresh"

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("probe count R must be >= 1")
        if self.sharing not in ("fresh", "shared"):
            raise ValueError(f"unknown probe sharing policy {self.sharing!r}")

    def draw(self, n: int, t: int) -> np.ndarray:
        if self.sharing == "shared":
            gen = _rng.substream(self.seed, _rng.SHARED_PROBES, n)
        else:
            gen = _rng.substream(self.seed, _rng.PROBES, t)
        return _rng.rademacher(gen, n, self.R)


@dataclass(frozen=True, eq=False)
class DosHistogram:
    """Binned density of states over [-1, 1], or raw moments when unbinned."""

    n_bins: float
    masses: np.ndarray
    jackson: bool

    @property
    def edges(self) -> np.ndarray | None:
        if math.isinf(self.n_bins):
            return None
        return np.linspace(-1.0, 1.0, int(self.n_bins) + 1)


def _values(m) -> np.ndarray:
    if isinstance(m, MomentVector):
        return m.values
    return np.asarray(m, dtype=float)


def as_moment_array(moments) -> np.ndarray:
    """Stack a sequence of moment vectors (or a 2-D array) into ``(T, K)``."""
    if isinstance(moments, np.ndarray):
        arr = moments.astype(float, copy=False)
    else:
        arr = np.array([_values(m) for m in moments], dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def chebyshev_probe_traces(op, Z: np.ndarray, K: int) -> np.ndarray:
    """``sum_r z_r^T T_j(op) z_r`` for j = 1..K, keeping two recurrence blocks."""
    out = np.empty(K)
    v_prev = Z
    v_cur = op.matvec(Z)
    out[0] = np.sum(Z * v_cur)
    for j in range(1, K):
        v_prev, v_cur = v_cur, 2.0 * op.matvec(v_cur) - v_prev
        out[j] = np.sum(Z * v_cur)
    return out


def estimate_moments(g: GraphSnapshot, K: int = DEFAULT_K, probes: ProbeSet | None = None) -> MomentVector:
    """Hutchinson estimate of mu_1..mu_K; cost O(K R m)."""
    if K < 1:
        raise ValueError("moment order K must be >= 1")
    probes = probes or ProbeSet()
    Z = probes.draw(g.n, g.t)
    traces = chebyshev_probe_traces(g.operator, Z, K)
    return MomentVector(traces / (g.n * probes.R), source="estimated", R=probes.R, seed=probes.seed)


def estimate_stream_moments(
    snapshots: Sequence[GraphSnapshot],
    K: int = DEFAULT_K,
    probes: ProbeSet | None = None,
    n_jobs: int = 1,
) -> np.ndarray:
    """``(T, K)`` moment array for a stream; identical for any ``n_jobs``."""
    probes = probes or ProbeSet()
    if n_jobs == 1:
        rows = [estimate_moments(g, K, probes).values for g in snapshots]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=n_jobs)(delayed(lambda g: estimate_moments(g, K, probes).values)(g) for g in snapshots)
    return np.array(rows).reshape(len(snapshots), K)


def chebyshev_values(x: np.ndarray, K: int) -> np.ndarray:
    """``T_1(x)..T_K(x)`` stacked on a new leading axis of length K."""
    x = np.asarray(x, dtype=float)
    out = np.empty((K,) + x.shape)
    t_prev, t_cur = np.ones_like(x), x
    out[0] = t_cur
    for j in range(1, K):
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
        out[j] = t_cur
    return out


def spectrum_moments(eigs: np.ndarray, K: int) -> np.ndarray:
    eigs = np.clip(np.asarray(eigs, dtype=float), -1.0, 1.0)
    return chebyshev_values(eigs, K).mean(axis=1)


def exact_moments(g: GraphSnapshot, K: int = DEFAULT_K, limit: int = DENSE_LIMIT) -> MomentVector:
    """mu_j = (1/n) sum_i T_j(lambda_i) from a dense eigendecomposition."""
    mom = spectrum_moments(exact_spectrum(g, limit), K)
    # trace(L~) = 0 exactly (zero diagonal); drop the eigensolver's roundoff
    mom[0] = 0.0
    return MomentVector(mom, source="exact")


def exact_stream_moments(snapshots: Sequence[GraphSnapshot], K: int = DEFAULT_K) -> np.ndarray:
    return np.array([exact_moments(g, K).values for g in snapshots]).reshape(len(snapshots), K)


def _prefixes(a, b, k: int) -> tuple[np.ndarray, np.ndarray]:
    va, vb = _values(a), _values(b)
    if k < 1 or k > min(len(va), len(vb)):
        raise IndexError(f"comparison order k={k} outside [1, {min(len(va), len(vb))}]")
    return va[:k], vb[:k]


def moment_distance(a, b, k: int) -> float:
    """L1 distance over the first k moments."""
    va, vb = _prefixes(a, b, k)
    return float(np.sum(np.abs(va - vb)))


def gamma_discrepancy(a, b, k: int) -> float:
    """sqrt(sum_j (a_j - b_j)^2 / j^2) over the first k moments."""
    va, vb = _prefixes(a, b, k)
    j = np.arange(1, k + 1)
    return float(np.sqrt(np.sum(((va - vb) / j) ** 2)))


def jackson_coefficients(K: int) -> np.ndarray:
    """Jackson kernel g_0..g_K for an order-K expansion (g_0 = 1)."""
    j = np.arange(K + 1)
    a = np.pi / (K + 1)
    g = ((K - j + 1) * np.cos(a * j) + np.sin(a * j) / np.tan(a)) / (K + 1)
    g[0] = 1.0
    g[-1] = max(g[-1], 0.0)
    return g


def jackson_damp(m) -> MomentVector | np.ndarray:
    """Multiply moments by Jackson coefficients; works on a vector or a (T, K) array."""
    if isinstance(m, MomentVector):
        return MomentVector(m.values * jackson_coefficients(m.K)[1:], source=m.source, R=m.R, seed=m.seed)
    arr = np.asarray(m, dtype=float)
    return arr * jackson_coefficients(arr.shape[-1])[1:]


def chebyshev_grid(n_nodes: int) -> np.ndarray:
    i = np.arange(n_nodes)
    x = np.cos(np.pi * (i + 0.5) / n_nodes)
    return np.clip(x, -1.0 + 1e-12, 1.0 - 1e-12)


def _histogram_rows(mom: np.ndarray, n_bins: int) -> np.ndarray:
    n_grid = max(1024, 8 * n_bins)
    x = chebyshev_grid(n_grid)
    # node mass under the Chebyshev measure: (1/N) [1 + 2 sum_j mu_j T_j(x)]
    basis = chebyshev_values(x, mom.shape[-1])
    node_mass = (1.0 + 2.0 * mom @ basis) / n_grid
    idx = np.minimum(((x + 1.0) * 0.5 * n_bins).astype(int), n_bins - 1)
    onehot = np.zeros((n_grid, n_bins))
    onehot[np.arange(n_grid), idx] = 1.0
    masses = node_mass @ onehot
    return masses / masses.sum(axis=-1, keepdims=True)


def _check_bins(n_bins) -> float:
    if not math.isinf(n_bins) and (n_bins < 2 or int(n_bins) != n_bins):
        raise ValueError(f"n_bins must be an integer >= 2 or inf, got {n_bins}")
    return float(n_bins)


def dos_histogram(m, n_bins: float = math.inf, jackson: bool = True) -> DosHistogram:
    """Density of states reconstructed from moments and binned over [-1, 1].

    ``jackson`` records whether the input moments were already damped; no
    damping is applied here. ``n_bins = inf`` passes the moments through.
    """
    n_bins = _check_bins(n_bins)
    mom = _values(m)
    if math.isinf(n_bins):
        return DosHistogram(n_bins, mom.copy(), jackson)
    return DosHistogram(n_bins, _histogram_rows(mom[None, :], int(n_bins))[0], jackson)


def dos_histograms(moments: np.ndarray, n_bins: float) -> np.ndarray:
    """Row-wise :func:`dos_histogram` for a ``(T, K)`` array."""
    n_bins = _check_bins(n_bins)
    if math.isinf(n_bins):
        return np.array(moments, dtype=float)
    return _histogram_rows(np.asarray(moments, dtype=float), int(n_bins))


@dataclass(frozen=True)
class BoundReport:
    w1: float
    gamma: float
    d_k: float
    k: int
    bound: float
    bound_ok: bool


def verify_wasserstein_bound(g1: GraphSnapshot, g2: GraphSnapshot, k: int, C: float = WASSERSTEIN_C) -> BoundReport:
    """Check W1(spec g1, spec g2) <= C/k + Gamma_k with exact spectra."""
    s1, s2 = exact_spectrum(g1), exact_spectrum(g2)
    m1, m2 = spectrum_moments(s1, k), spectrum_moments(s2, k)
    w1 = w1_sorted(s1, s2)
    gam = gamma_discrepancy(m1, m2, k)
    bound = C / k + gam
    return BoundReport(w1=w1, gamma=gam, d_k=moment_distance(m1, m2, k), k=k, bound=bound, bound_ok=w1 <= bound)


def write_moment_cache(path: str | Path, timesteps: Sequence[int], moments: np.ndarray) -> None:
    moments = np.asarray(moments, dtype=float)
    header = ["t"] + [f"mu_{j}" for j in range(1, moments.shape[1] + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, row in zip(timesteps, moments):
            w.writerow([int(t)] + [repr(float(v)) for v in row])


def read_moment_cache(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path}: not a moment cache (expected header starting with 't')")
    body = rows[1:]
    ts = np.array([int(r[0]) for r in body], dtype=np.int64)
    mom = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(len(body), len(rows[0]) - 1)
    return ts, mom
