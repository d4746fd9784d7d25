"""Benchmark suites: synthetic F1 table, hard ER/SBM sweeps, ARL/ADD curves,
bin-width sweep, cascade ablation, k-sensitivity and SWORD design ablations.

Each suite returns ``{table_name: [record, ...]}`` and, given an output
directory, writes one CSV per table (long format, ready for plotting).
Probes are shared across each stream (see ``SHARING``); the probe seed
equals the graph seed.
"""

from __future__ import annotations

import csv
import logging
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable

import yaml

from . import synth
from .evaluate import (
    Run,
    evaluate_config,
    grid_search,
    k_sweep,
    make_runs,
    measure_arl_add,
    method_scorer,
    matched_add,
    null_quantile_thresholds,
    tune_threshold,
)

log = logging.getLogger(__name__)

SHARING = "shared"
K_CACHE = 50

# Best SWORD configurations per synthetic dataset (cross-validated over 10 graph seeds).
BEST_CONFIGS = {
    "ER": dict(theta=0.02, w=3, w_ref=3, k=2, c=5, mode="weighted_gamma"),
    "SBM": dict(theta=0.02, w=4, w_ref=4, k=2, c=7, mode="weighted_gamma"),
    "BA": dict(theta=0.05, w=2, w_ref=2, k=2, c=15, mode="weighted_gamma"),
    "WS": dict(theta=0.02, w=7, w_ref=7, k=3, c=15, mode="weighted_gamma"),
    "MultiCP": dict(theta=0.02, w=3, w_ref=3, k=2, c=5, mode="weighted_gamma"),
}
# Single configuration selected across the real-world datasets.
FIXED_CFG = dict(theta=0.005, w=2, w_ref=2, k=4, c=7, mode="weighted_gamma")
# Scaffold defaults for the controlled comparisons on hard ER.
SCPD_BASE = dict(stage="S0", n_bins=math.inf, k=8, contexts=(5, 10), w=2, w_ref=2, c=7)

HARD_ER_P2 = (0.15, 0.18, 0.20, 0.22, 0.25, 0.30, 0.40)
HARD_SBM_POUT = (0.02, 0.05, 0.08, 0.10, 0.15, 0.20, 0.25)
BIN_COUNTS = (8, 16, 32, 64, 128, 256, 512, 1024, math.inf)
ARL_LEVELS = (0.5, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995, 0.999)


def load_grid(name: str) -> dict:
    """Grid spec by bundled name (``sword``, ``cusum``, ...) or by file path."""
    path = Path(name)
    if path.suffix in (".yaml", ".yml") and path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        text = resources.files("sword.grids").joinpath(f"{name}.yaml").read_text(encoding="utf-8")
    spec = yaml.safe_load(text)
    for key in ("method", "axes"):
        if key not in spec:
            raise ValueError(f"grid spec {name!r} lacks required key {key!r}")
    return spec


@lru_cache(maxsize=64)
def _cached_runs(preset: str, kwargs: tuple, seeds: tuple, sharing: str) -> tuple[Run, ...]:
    specs = [synth.PRESETS[preset](seed=s, **dict(kwargs)) for s in seeds]
    return tuple(make_runs(specs, K=K_CACHE, sharing=sharing))


def runs_for(preset: str, seeds, sharing: str = SHARING, **kwargs) -> list[Run]:
    return list(_cached_runs(preset, tuple(sorted(kwargs.items())), tuple(seeds), sharing))


def write_table(records: list[dict], path: Path) -> None:
    if not records:
        path.write_text("", encoding="utf-8")
        return
    fields = list(records[0])
    for r in records[1:]:
        fields += [k for k in r if k not in fields]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in records:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return v


def _tuned(method: str, runs: list[Run], params: dict, delta: int = 5):
    scorer = method_scorer(method)
    scores = [scorer(r, params) for r in runs]
    return tune_threshold(scores, [r.change_points for r in runs], int(params.get("c", 1)), delta,
                          timesteps=[r.timesteps for r in runs])


def _best_from_grid(method: str, runs: list[Run], delta: int = 5):
    spec = load_grid(method)
    return grid_search(method, runs, spec["axes"], delta)[0]


# Suites --------------------------------------------------------------------


def suite_synthetic(n_seeds: int = 10, seed: int = 0, delta: int = 5, baselines=("cusum", "ewma", "scpd", "laddos", "lad")) -> dict:
    seeds = range(seed, seed + n_seeds)
    wide, long = [], []
    for name, cfg in BEST_CONFIGS.items():
        runs = runs_for(name, seeds)
        row = evaluate_config("sword", runs, cfg, delta)
        entries = [("sword", row)]
        for method in baselines:
            entries.append((method, _best_from_grid(method, runs, delta)))
        for method, r in entries:
            wide.append({"scenario": name, "method": method, "mean_f1": r.mean_f1, "std_f1": r.std_f1,
                         "total_fp": r.total_fp, "params": repr(r.params)})
            long += [{"scenario": name, "method": method, "seed": s, "f1": f} for s, f in zip(seeds, r.f1s)]
    return {"synthetic": wide, "synthetic_long": long}


def suite_hard_er(n_seeds: int = 20, seed: int = 0, p2_values=HARD_ER_P2, delta: int = 5) -> dict:
    seeds = range(seed, seed + n_seeds)
    rows = []
    for p2 in p2_values:
        runs = runs_for("HardER", seeds, p2=p2)
        rec = {"p2": p2}
        rec["sword_fixed"] = evaluate_config("sword", runs, FIXED_CFG, delta).mean_f1
        rec["sword_tuned"] = _tuned("sword", runs, FIXED_CFG, delta).mean_f1
        rec["scpd_S0_tuned"] = _tuned("scpd", runs, SCPD_BASE, delta).mean_f1
        rec["laddos_tuned"] = _tuned("laddos", runs, SCPD_BASE, delta).mean_f1
        rec["lad_tuned"] = _tuned("lad", runs, dict(r=6, windows=(5, 10), c=7), delta).mean_f1
        rec["cusum_tuned"] = _tuned("cusum", runs, dict(kappa=0.5, burn_in=4, c=7), delta).mean_f1
        rec["ewma_tuned"] = _tuned("ewma", runs, dict(lam=0.3, burn_in=4, c=7), delta).mean_f1
        rows.append(rec)
    return {"hard_er": rows}


def suite_hard_sbm(n_seeds: int = 20, seed: int = 0, p_out_values=HARD_SBM_POUT, delta: int = 5, family_seeds: int = 10) -> dict:
    """Each method uses its best configuration from a grid search on the main SBM benchmark."""
    family_runs = runs_for("SBM", range(seed, seed + family_seeds))
    best = {m: _best_from_grid(m, family_runs, delta).params for m in ("sword", "scpd", "lad", "cusum", "ewma")}
    rows = []
    for p_out in p_out_values:
        runs = runs_for("HardSBM", range(seed, seed + n_seeds), p_out=p_out)
        rec = {"p_out": p_out}
        for m, params in best.items():
            rec[m] = evaluate_config(m, runs, params, delta).mean_f1
        rows.append(rec)
    params = [{"method": m, "params": repr(p)} for m, p in best.items()]
    return {"hard_sbm": rows, "hard_sbm_params": params}


ARL_METHODS = {
    "sword": dict(BEST_CONFIGS["ER"]),
    "scpd": dict(SCPD_BASE, c=1),
    "laddos": dict(SCPD_BASE, c=1),
    "lad": dict(r=6, windows=(5, 10)),
    "cusum": dict(kappa=0.5, burn_in=6),
    "ewma": dict(lam=0.3, burn_in=6),
}


def suite_arl(n_seeds: int = 20, seed: int = 0, deltas_p=(0.05, 0.10), T_null: int = 500, T_change: int = 100,
              levels=ARL_LEVELS, methods=tuple(ARL_METHODS), target_arl0: float = 100.0) -> dict:
    null = [r for r in make_runs([synth.null_er_scenario(seed=10_000 + s, T=T_null) for s in range(seed, seed + n_seeds)],
                                 K=K_CACHE, sharing=SHARING)]
    curves, matched = [], []
    for dp in deltas_p:
        change = runs_for("HardER", range(seed, seed + n_seeds), p2=round(0.1 + dp, 10), T=T_change)
        for m in methods:
            params = ARL_METHODS[m]
            th = null_quantile_thresholds(m, params, null, levels)
            rep = measure_arl_add(m, params, null, change, th)
            for rec in rep.as_records():
                curves.append({"delta_p": dp, **rec})
            row = matched_add(rep, target_arl0)
            matched.append({"delta_p": dp, "method": m, "target_arl0": target_arl0, **row.__dict__})
    return {"arl_curves": curves, "arl_matched": matched}


def suite_bins(n_seeds: int = 20, seed: int = 0, p2: float = 0.20, bins=BIN_COUNTS, delta: int = 5) -> dict:
    from .scpd import dedupe_bins

    runs = runs_for("HardER", range(seed, seed + n_seeds), p2=p2)
    rows = []
    for b in dedupe_bins(bins):
        res = _tuned("scpd", runs, dict(SCPD_BASE, n_bins=b), delta)
        rows.append({"n_bins": b, "mean_f1": res.mean_f1, "std_f1": res.std_f1, "theta": res.theta})
    ref = _tuned("sword", runs, FIXED_CFG, delta)
    rows.append({"n_bins": "sword", "mean_f1": ref.mean_f1, "std_f1": ref.std_f1, "theta": ref.theta})
    return {"bins": rows}


def suite_cascade(n_seeds: int = 20, seed: int = 0, datasets=None, delta: int = 5) -> dict:
    from .scpd import STAGES

    datasets = datasets or {"HardER_dp0.10": ("HardER", {"p2": 0.20}), "HardER_dp0.05": ("HardER", {"p2": 0.15})}
    long, summary = [], []
    for label, (preset, kw) in datasets.items():
        runs = runs_for(preset, range(seed, seed + n_seeds), **kw)
        for stage in STAGES:
            res = _tuned("scpd", runs, dict(SCPD_BASE, stage=stage), delta)
            long += [{"stage": stage, "dataset": label, "seed": r.seed, "f1": f} for r, f in zip(runs, res.f1s)]
            summary.append({"stage": stage, "dataset": label, "mean_f1": res.mean_f1, "std_f1": res.std_f1})
    return {"cascade": long, "cascade_summary": summary}


def suite_ksweep(n_seeds: int = 20, seed: int = 0, p2: float = 0.20, k_values=tuple(range(1, 31)), delta: int = 5) -> dict:
    runs = runs_for("HardER", range(seed, seed + n_seeds), p2=p2)
    rows = []
    for source, base in (("estimated", dict(FIXED_CFG)), ("exact", dict(FIXED_CFG, exact=True))):
        for r in k_sweep(runs, base, k_values, delta):
            rows.append({"moments": source, "k": r.k, "mean_f1": r.mean_f1, "std_f1": r.std_f1})
    return {"ksweep": rows}


def suite_ablation(n_seeds: int = 10, seed: int = 0, p2: float = 0.15, delta: int = 5) -> dict:
    """Best F1 per distance mode and per window configuration from the SWORD grid."""
    runs = runs_for("HardER", range(seed, seed + n_seeds), p2=p2)
    rows = grid_search("sword", runs, load_grid("sword")["axes"], delta)
    modes = []
    for mode in ("mean_pairwise", "centroid", "weighted_gamma"):
        best = next(r for r in rows if r.params["mode"] == mode)
        modes.append({"mode": mode, "best_f1": best.mean_f1, "params": repr(best.params)})

    def window_kind(p):
        if p.get("weighting") == "exponential":
            return "exp-weighted"
        return "symmetric" if p["w"] == p["w_ref"] else "asymmetric"

    windows = []
    for kind in ("symmetric", "asymmetric", "exp-weighted"):
        best = next(r for r in rows if window_kind(r.params) == kind)
        windows.append({"window": kind, "best_f1": best.mean_f1, "params": repr(best.params)})
    top = [{"rank": i + 1, "mean_f1": r.mean_f1, "std_f1": r.std_f1, "total_fp": r.total_fp, **r.params}
           for i, r in enumerate(rows[:50])]
    return {"distance_ablation": modes, "window_ablation": windows, "sword_top50": top}


SUITES: dict[str, Callable[..., dict]] = {
    "synthetic": suite_synthetic,
    "hard-er": suite_hard_er,
    "hard-sbm": suite_hard_sbm,
    "arl": suite_arl,
    "bins": suite_bins,
    "cascade": suite_cascade,
    "ksweep": suite_ksweep,
    "ablation": suite_ablation,
}


def run_suite(name: str, out_dir: str | Path | None = None, **kwargs) -> dict:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available suites: {', '.join(SUITES)}")
    tables = SUITES[name](**kwargs)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for tname, recs in tables.items():
            write_table(recs, out / f"{tname}.csv")
    return tables

