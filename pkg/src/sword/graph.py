"""Graph snapshots, the shifted normalized Laplacian and small-n spectra."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000

FEATURE_NAMES = (
    "nodes",
    "edges",
    "density",
    "mean_degree",
    "max_degree",
    "degree_std",
    "components",
    "clustering",
)


class SnapshotFormatError(ValueError):
    """Malformed snapshot stream (bad JSON, wrong keys, bad ordering)."""


class DenseLimitError(ValueError):
    """Raised when an exact O(n^3) path is requested on a graph that is too large."""


def _canonical_edges(n: int, edges) -> tuple[np.ndarray, int]:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise ValueError(f"edge {tuple(bad.tolist())} has an endpoint outside [0, {n})")
    loops = arr[:, 0] == arr[:, 1]
    arr = arr[~loops]
    arr = np.sort(arr, axis=1)
    arr = np.unique(arr, axis=0) if arr.size else arr.reshape(0, 2)
    return arr, int(loops.sum())


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """One timestep of an undirected, unweighted graph stream.

    ``edges`` is stored canonically: each edge once as ``(u, v)`` with
    ``u < v``, rows sorted. Use :meth:`from_edges` to build a snapshot
    from raw (possibly duplicated, self-looped) edge lists.
    """

    t: int
    n: int
    edges: np.ndarray
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        if self.t < 1:
            raise ValueError(f"timestep must be >= 1, got {self.t}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        canon, loops = _canonical_edges(self.n, edges)
        if loops or len(canon) != len(edges):
            raise ValueError("edges contain self-loops or duplicates; use GraphSnapshot.from_edges")
        edges = canon
        edges.setflags(write=False)
        deg = np.bincount(edges.ravel(), minlength=self.n).astype(np.int64)
        deg.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "degree", deg)

    @classmethod
    def from_edges(cls, t: int, n: int, edges) -> "GraphSnapshot":
        snap, _ = cls._from_raw(t, n, edges)
        return snap

    @classmethod
    def _from_raw(cls, t, n, edges) -> tuple["GraphSnapshot", int]:
        canon, loops = _canonical_edges(n, edges)
        return cls(t=t, n=n, edges=canon), loops

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def operator(self) -> "ShiftedLaplacianOp":
        return ShiftedLaplacianOp(self)


class ShiftedLaplacianOp:
    """Matrix-free ``L - I = -D^{-1/2} A D^{-1/2}`` for one snapshot.

    Isolated nodes get a zero row and column, so the diagonal is zero and
    every eigenvalue lies in [-1, 1].
    """

    def __init__(self, graph: GraphSnapshot):
        self.graph = graph
        deg = graph.degree.astype(float)
        scale = np.zeros(graph.n)
        nz = deg > 0
        scale[nz] = 1.0 / np.sqrt(deg[nz])
        self.scale = scale
        # -D^{-1/2} A D^{-1/2}, assembled once; each application is O(m)
        a = graph.adjacency.tocoo()
        vals = -scale[a.row] * scale[a.col]
        self._mat = sp.csr_matrix((vals, (a.row, a.col)), shape=a.shape)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.graph.n, self.graph.n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply the operator to a vector, or column-wise to an ``(n, r)`` block."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.graph.n:
            raise ValueError(f"dimension mismatch: operator is {self.graph.n}x{self.graph.n}, input has {x.shape[0]} rows")
        return self._mat @ x

    __matmul__ = matvec

    def dense(self) -> np.ndarray:
        return self._mat.toarray()


def matvec(op: ShiftedLaplacianOp, x: np.ndarray) -> np.ndarray:
    return op.matvec(x)


def load_snapshot_stream(path: str | Path) -> list[GraphSnapshot]:
    """Read a JSON Lines snapshot stream.

    Each non-blank line is ``{"t": int, "n": int, "edges": [[u, v], ...]}``.
    Duplicate edges are merged and self-loops dropped (with a logged count).
    """
    snapshots: list[GraphSnapshot] = []
    dropped = 0
    prev_t = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                t, n, edges = int(rec["t"]), int(rec["n"]), rec["edges"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise SnapshotFormatError(f"{path}, line {lineno}: cannot parse snapshot: {exc}") from exc
            if prev_t is not None and t <= prev_t:
                raise SnapshotFormatError(f"{path}, line {lineno}: non-increasing timestep {t} after {prev_t}")
            try:
                snap, loops = GraphSnapshot._from_raw(t, n, edges)
            except ValueError as exc:
                raise ValueError(f"{path}, line {lineno}: {exc}") from exc
            dropped += loops
            snapshots.append(snap)
            prev_t = t
    if dropped:
        log.warning("dropped %d self-loop(s) while reading %s", dropped, path)
    return snapshots


def dump_snapshot_stream(snapshots: Iterable[GraphSnapshot], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in snapshots:
            rec = {"t": int(g.t), "n": int(g.n), "edges": g.edges.tolist()}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def _check_dense(g: GraphSnapshot, limit: int) -> None:
    if g.n > limit:
        raise DenseLimitError(
            f"graph has {g.n} nodes, above the dense limit of {limit}; use the KPM estimator instead"
        )


def exact_spectrum(g: GraphSnapshot, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Ascending eigenvalues of the shifted normalized Laplacian."""
    _check_dense(g, limit)
    return np.linalg.eigvalsh(g.operator.dense())


def w1_sorted(spec_a: Sequence[float], spec_b: Sequence[float]) -> float:
    """1-Wasserstein distance between two empirical spectra.

    Equal lengths use the mean absolute difference of sorted values;
    otherwise the integral of |F_a - F_b| over the merged support.
    """
    a = np.sort(np.asarray(spec_a, dtype=float))
    b = np.sort(np.asarray(spec_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("W1 is undefined for an empty spectrum")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    grid = np.concatenate([a, b])
    grid.sort()
    widths = np.diff(grid)
    cdf_a = np.searchsorted(a, grid[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * widths))


def extract_features(g: GraphSnapshot) -> np.ndarray:
    """8 summary statistics, ordered as :data:`FEATURE_NAMES`."""
    n, m = g.n, g.m
    deg = g.degree.astype(float)
    density = m / (n * (n - 1) / 2) if n > 1 else 0.0
    n_comp, _ = connected_components(g.adjacency, directed=False)
    wedge_pairs = float(np.sum(deg * (deg - 1)))
    if wedge_pairs > 0:
        a = g.adjacency
        closed = float((a @ a).multiply(a).sum())
        clustering = closed / wedge_pairs
    else:
        clustering = 0.0
    return np.array(
        [n, m, density, deg.mean(), deg.max(initial=0.0), deg.std(), n_comp, clustering],
        dtype=float,
    )


def feature_matrix(snapshots: Sequence[GraphSnapshot]) -> np.ndarray:
    return np.vstack([extract_features(g) for g in snapshots])
