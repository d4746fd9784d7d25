"""Seeded synthetic graph-stream benchmarks.

Every snapshot is drawn independently from the generator of the segment
it falls in, using the substream keyed by ``(seed, t)``; the same spec
always yields the same stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import rng as _rng
from .graph import GraphSnapshot, dump_snapshot_stream

FAMILIES = ("ER", "SBM", "BA", "WS", "MultiCP", "HardER", "HardSBM")


@dataclass(frozen=True)
class Segment:
    """A generator and its parameters, active from ``start`` onwards."""

    model: str
    params: dict[str, Any]


@dataclass(frozen=True)
class ScenarioSpec:
    family: str
    n: int
    T: int
    change_points: tuple[int, ...]
    segments: tuple[Segment, ...]
    seed: int = 0

    def __post_init__(self):
        cps = tuple(int(c) for c in self.change_points)
        object.__setattr__(self, "change_points", cps)
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("change points must be strictly increasing")
        if any(c <= 1 or c > self.T for c in cps):
            raise ValueError(f"change points must lie in (1, {self.T}]")
        if len(self.segments) != len(cps) + 1:
            raise ValueError("need one segment per change point plus one")
        if self.n < 2 or self.T < 1:
            raise ValueError("need n >= 2 and T >= 1")
        for seg in self.segments:
            _validate_segment(seg, self.n)

    def segment_at(self, t: int) -> Segment:
        idx = sum(t >= c for c in self.change_points)
        return self.segments[idx]


def _prob(name, p):
    if not 0.0 <= float(p) <= 1.0:
        raise ValueError(f"{name}={p} is not a probability")


def _validate_segment(seg: Segment, n: int) -> None:
    p = seg.params
    if seg.model == "er":
        _prob("p", p["p"])
    elif seg.model == "sbm":
        _prob("p_in", p["p_in"])
        _prob("p_out", p["p_out"])
        sizes = block_sizes(n, p["blocks"]) if isinstance(p["blocks"], int) else list(p["blocks"])
        if sum(sizes) != n or min(sizes) < 1:
            raise ValueError(f"block sizes {sizes} do not partition {n} nodes")
    elif seg.model == "ba":
        if not 1 <= int(p["m"]) < n:
            raise ValueError(f"BA attachment m={p['m']} must satisfy 1 <= m < n={n}")
    elif seg.model == "ws":
        _prob("p", p["p"])
        k = int(p.get("k", 4))
        if k % 2 or not 2 <= k < n:
            raise ValueError(f"WS neighbour count k={k} must be even and in [2, n)")
    else:
        raise ValueError(f"unknown generator {seg.model!r}")


def block_sizes(n: int, blocks: int) -> list[int]:
    base, extra = divmod(n, blocks)
    return [base + (1 if i < extra else 0) for i in range(blocks)]


def erdos_renyi(n: int, p: float, gen: np.random.Generator) -> np.ndarray:
    iu, ju = np.triu_indices(n, k=1)
    keep = gen.random(iu.size) < p
    return np.column_stack([iu[keep], ju[keep]])


def sbm(n: int, blocks, p_in: float, p_out: float, gen: np.random.Generator) -> np.ndarray:
    sizes = block_sizes(n, blocks) if isinstance(blocks, int) else list(blocks)
    label = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(label[iu] == label[ju], p_in, p_out)
    keep = gen.random(iu.size) < prob
    return np.column_stack([iu[keep], ju[keep]])


def barabasi_albert(n: int, m: int, gen: np.random.Generator) -> np.ndarray:
    """Star on m+1 nodes, then each new node attaches to m distinct nodes
    with probability proportional to degree. Edge count is m * (n - m)."""
    edges = [(0, i) for i in range(1, m + 1)]
    targets_pool = [0] * m + list(range(1, m + 1))  # node repeated once per degree unit
    for new in range(m + 1, n):
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(targets_pool[int(gen.integers(len(targets_pool)))])
        for v in sorted(chosen):
            edges.append((v, new))
            targets_pool.extend((v, new))
    return np.array(edges, dtype=np.int64)


def watts_strogatz(n: int, k: int, p: float, gen: np.random.Generator) -> np.ndarray:
    """Ring lattice with k nearest neighbours, each lattice edge rewired with probability p."""
    adj = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or gen.random() >= p:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(gen.integers(n))
            while w == u or w in adj[u]:
                w = int(gen.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def draw_graph(seg: Segment, n: int, t: int, gen: np.random.Generator) -> GraphSnapshot:
    p = seg.params
    if seg.model == "er":
        edges = erdos_renyi(n, float(p["p"]), gen)
    elif seg.model == "sbm":
        edges = sbm(n, p["blocks"], float(p["p_in"]), float(p["p_out"]), gen)
    elif seg.model == "ba":
        edges = barabasi_albert(n, int(p["m"]), gen)
    elif seg.model == "ws":
        edges = watts_strogatz(n, int(p.get("k", 4)), float(p["p"]), gen)
    else:
        raise ValueError(f"unknown generator {seg.model!r}")
    return GraphSnapshot(t=t, n=n, edges=edges)


def generate_sequence(spec: ScenarioSpec) -> tuple[list[GraphSnapshot], list[int]]:
    snaps = []
    for t in range(1, spec.T + 1):
        gen = _rng.substream(spec.seed, _rng.GRAPHS, t)
        snaps.append(draw_graph(spec.segment_at(t), spec.n, t, gen))
    return snaps, list(spec.change_points)


def write_scenario(spec: ScenarioSpec, path: str | Path) -> tuple[Path, Path]:
    """Write the JSONL stream and a ``<stem>.cps.json`` ground-truth sidecar."""
    path = Path(path)
    snaps, cps = generate_sequence(spec)
    dump_snapshot_stream(snaps, path)
    sidecar = path.with_suffix(".cps.json")
    sidecar.write_text(json.dumps({"change_points": cps}) + "\n", encoding="utf-8")
    return path, sidecar


def read_change_points(path: str | Path) -> list[int]:
    return list(json.loads(Path(path).read_text(encoding="utf-8"))["change_points"])


# Benchmark presets ---------------------------------------------------------


def er_scenario(seed=0, n=100, T=100, p0=0.1, p1=0.3, cp=50) -> ScenarioSpec:
    return ScenarioSpec("ER", n, T, (cp,), (Segment("er", {"p": p0}), Segment("er", {"p": p1})), seed)


def sbm_scenario(seed=0, n=100, T=100, p_in=0.3, p_out=0.02, cp=50) -> ScenarioSpec:
    segs = (
        Segment("sbm", {"blocks": 3, "p_in": p_in, "p_out": p_out}),
        Segment("sbm", {"blocks": 2, "p_in": p_in, "p_out": p_out}),
    )
    return ScenarioSpec("SBM", n, T, (cp,), segs, seed)


def ba_scenario(seed=0, n=100, T=100, m0=2, m1=5, cp=50) -> ScenarioSpec:
    return ScenarioSpec("BA", n, T, (cp,), (Segment("ba", {"m": m0}), Segment("ba", {"m": m1})), seed)


def ws_scenario(seed=0, n=100, T=100, p0=0.1, p1=0.5, k=4, cp=50) -> ScenarioSpec:
    segs = (Segment("ws", {"k": k, "p": p0}), Segment("ws", {"k": k, "p": p1}))
    return ScenarioSpec("WS", n, T, (cp,), segs, seed)


def multi_cp_scenario(seed=0, n=100, T=150) -> ScenarioSpec:
    segs = (
        Segment("er", {"p": 0.1}),
        Segment("er", {"p": 0.3}),
        Segment("sbm", {"blocks": 2, "p_in": 0.3, "p_out": 0.02}),
    )
    return ScenarioSpec("MultiCP", n, T, (50, 100), segs, seed)


def hard_er_scenario(seed=0, p2=0.2, n=50, T=100, p1=0.10, cp=50) -> ScenarioSpec:
    return ScenarioSpec("HardER", n, T, (cp,), (Segment("er", {"p": p1}), Segment("er", {"p": p2})), seed)


def hard_sbm_scenario(seed=0, p_out=0.05, n=60, T=100, p_in=0.30, cp=50) -> ScenarioSpec:
    segs = (
        Segment("sbm", {"blocks": 3, "p_in": p_in, "p_out": p_out}),
        Segment("sbm", {"blocks": 2, "p_in": p_in, "p_out": p_out}),
    )
    return ScenarioSpec("HardSBM", n, T, (cp,), segs, seed)


def null_er_scenario(seed=0, n=50, T=500, p=0.1) -> ScenarioSpec:
    return ScenarioSpec("ER", n, T, (), (Segment("er", {"p": p}),), seed)


PRESETS = {
    "ER": er_scenario,
    "SBM": sbm_scenario,
    "BA": ba_scenario,
    "WS": ws_scenario,
    "MultiCP": multi_cp_scenario,
    "HardER": hard_er_scenario,
    "HardSBM": hard_sbm_scenario,
}


def scenario_from_config(cfg: dict) -> ScenarioSpec:
    """Build a spec from a config mapping.

    Either ``{"preset": "ER", "seed": 3, ...preset kwargs}`` or a full
    ``{"family", "n", "T", "change_points", "segments": [{"model", ...}]}``.
    """
    cfg = dict(cfg)
    if "preset" in cfg:
        name = cfg.pop("preset")
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        return PRESETS[name](**cfg)
    segs = tuple(Segment(s["model"], {k: v for k, v in s.items() if k != "model"}) for s in cfg["segments"])
    return ScenarioSpec(
        family=cfg.get("family", "custom"),
        n=int(cfg["n"]),
        T=int(cfg["T"]),
        change_points=tuple(cfg.get("change_points", ())),
        segments=segs,
        seed=int(cfg.get("seed", 0)),
    )
