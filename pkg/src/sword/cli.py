"""Command-line entry point: ``sword <command> ... --out DIR``.

Every command writes its artifacts plus a single ``manifest.json`` into
``--out``. All randomness derives from the one ``--seed`` flag, so a
manifest's argv reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import resource
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import bench, synth
from .baselines import cusum_detect, ewma_detect, lad_detect
from .detector import ConfigError, DetectorConfig, ScoreSeries, WindowSpec, detect_stream
from .evaluate import (
    grid_search,
    k_sweep,
    make_runs,
    match_detections,
    measure_arl_add,
    null_quantile_thresholds,
)
from .graph import feature_matrix, load_snapshot_stream
from .kpm import ProbeSet, estimate_stream_moments, exact_stream_moments, read_moment_cache, write_moment_cache
from .scpd import STAGES, CascadeConfig, laddos_variant, scpd_score_stream

log = logging.getLogger("sword")

METHODS = ("sword", "scpd", "laddos", "cusum", "ewma", "lad")


# config helpers ------------------------------------------------------------


def _coerce(text: str):
    v = yaml.safe_load(text)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def load_config(path: str | None, overrides: list[str] | None = None) -> dict:
    """YAML mapping from ``path`` with ``key=value`` overrides applied on top."""
    cfg = {}
    if path:
        cfg = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: config must be a key-value mapping")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        cfg[k.strip()] = _coerce(v)
    return cfg


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, args, config: dict, seeds, inputs, started: float) -> Path:
    outputs = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    # ru_maxrss is KiB on Linux
    peak_kib = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    manifest = {
        "command": args.command,
        "argv": list(args.argv),
        "config": _jsonable(config),
        "seeds": _jsonable(list(seeds)),
        "inputs": [str(p) for p in inputs],
        "outputs": {str(p.relative_to(out)): _sha256(p) for p in outputs},
        "wall_clock_s": round(time.perf_counter() - started, 3),
        "peak_rss_mib": round(peak_kib / 1024.0, 1),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# commands ------------------------------------------------------------------


def cmd_generate(args) -> tuple[dict, list]:
    cfg = load_config(args.config, args.set)
    if args.preset:
        cfg.setdefault("preset", args.preset)
    if "preset" not in cfg and "segments" not in cfg:
        cfg["preset"] = "ER"
    cfg["seed"] = args.seed
    spec = synth.scenario_from_config(cfg)
    synth.write_scenario(spec, args.out / "stream.jsonl")
    return cfg, [args.seed]


def _moments_for(snaps, K: int, R: int, seed: int, sharing: str, exact: bool) -> np.ndarray:
    if exact:
        return exact_stream_moments(snaps, K)
    return estimate_stream_moments(snaps, K, ProbeSet(R, seed, sharing))


def cmd_moments(args) -> tuple[dict, list]:
    snaps = load_snapshot_stream(args.input)
    mom = _moments_for(snaps, args.K, args.R, args.seed, args.sharing, args.exact)
    write_moment_cache(args.out / "moments.csv", [g.t for g in snaps], mom)
    cfg = {"K": args.K, "R": args.R, "sharing": args.sharing, "exact": args.exact}
    return cfg, [args.seed]


def _split_method(name: str, params: dict) -> str:
    # "scpd-S3half" is shorthand for method scpd with stage S3half
    if name.startswith("scpd-"):
        params["stage"] = name.split("-", 1)[1]
        return "scpd"
    if name not in METHODS:
        raise ConfigError(f"unknown method {name!r}; available: {', '.join(METHODS)} or scpd-<stage>")
    return name


def _window(p: dict) -> WindowSpec:
    w = int(p.get("w", 3))
    return WindowSpec(w, int(p.get("w_ref", w)), p.get("weighting", "uniform"), float(p.get("gamma", 0.7)))


def run_detect(method: str, p: dict, t, moments=None, snaps=None) -> ScoreSeries:
    cooldown = int(p.get("c", p.get("cooldown", 5 if method in ("sword", "scpd", "laddos") else 1)))
    theta = float(p.get("theta", p.get("threshold", math.inf if p.get("percentile") is None else 0.0)))
    if method == "sword":
        if p.get("percentile") is not None:
            cfg = DetectorConfig(threshold=None, percentile=float(p["percentile"]), calibration=p.get("calibration"),
                                 k=int(p.get("k", 2)), cooldown=cooldown, mode=p.get("mode", "mean_pairwise"),
                                 window=_window(p))
        else:
            cfg = DetectorConfig(threshold=theta, k=int(p.get("k", 2)), cooldown=cooldown,
                                 mode=p.get("mode", "mean_pairwise"), window=_window(p))
        return detect_stream(moments, cfg, t)
    if method in ("scpd", "laddos"):
        w = int(p.get("w", 3))
        cfg = CascadeConfig(
            stage=p.get("stage", "S0"),
            n_bins=float(p.get("n_bins", math.inf)),
            contexts=tuple(p.get("contexts", (5, 10))),
            k=int(p.get("k", 8)),
            w=w,
            w_ref=int(p.get("w_ref", w)),
            cooldown=cooldown,
            threshold=theta,
        )
        return laddos_variant(moments, cfg, t) if method == "laddos" else scpd_score_stream(moments, cfg, t)
    if snaps is None:
        raise ConfigError(f"method {method!r} needs a snapshot stream, not a moment cache")
    if method == "cusum":
        return cusum_detect(feature_matrix(snaps), float(p.get("kappa", 0.5)), theta, int(p.get("burn_in", 6)),
                            cooldown, t)
    if method == "ewma":
        return ewma_detect(feature_matrix(snaps), float(p.get("lam", 0.3)), theta, int(p.get("burn_in", 6)),
                           cooldown, t)
    return lad_detect(snaps, int(p.get("r", 6)), tuple(p.get("windows", (5, 10))), theta, cooldown)


def cmd_detect(args) -> tuple[dict, list]:
    params = load_config(args.config, args.set)
    method = _split_method(args.method, params)
    src = Path(args.input)
    if not src.exists():
        raise FileNotFoundError(src)
    snaps = moments = None
    if src.suffix == ".csv":
        t, moments = read_moment_cache(src)
    else:
        snaps = load_snapshot_stream(src)
        t = np.array([g.t for g in snaps])
        if method in ("sword", "scpd", "laddos"):
            moments = _moments_for(snaps, args.K, args.R, args.seed, args.sharing, args.exact)
    series = run_detect(method, params, t, moments, snaps)
    series.to_csv(args.out / "scores.csv")
    series.write_detections(args.out / "detections.json")
    if args.truth:
        rep = match_detections(synth.read_change_points(args.truth), series.detections, args.delta)
        (args.out / "match.json").write_text(json.dumps(rep.as_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"F1={rep.f1:.3f} TP={rep.tp} FP={rep.fp} FN={rep.fn}")
    print(json.dumps(series.detections))
    return {"method": method, **params}, [args.seed]


def cmd_bench(args) -> tuple[dict, list]:
    if args.suite not in bench.SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; available suites: {', '.join(bench.SUITES)}")
    kw = {"seed": args.seed}
    if args.seeds is not None:
        kw["n_seeds"] = args.seeds
    tables = bench.run_suite(args.suite, args.out, **kw)
    for name, recs in tables.items():
        print(f"{name}: {len(recs)} rows")
    return {"suite": args.suite, **kw}, list(range(args.seed, args.seed + kw.get("n_seeds", 0)))


def _grid_runs(spec: dict, seeds) -> list:
    scen = dict(spec.get("scenario", {"preset": "ER"}))
    specs = [synth.scenario_from_config({**scen, "seed": s}) for s in seeds]
    return make_runs(specs, K=bench.K_CACHE, sharing=spec.get("sharing", bench.SHARING))


def cmd_sweep(args) -> tuple[dict, list]:
    spec = bench.load_grid(args.grid)
    if args.scenario:
        spec["scenario"] = load_config(args.scenario)
    seeds = list(range(args.seed, args.seed + args.seeds)) if args.seeds else list(spec.get("seeds", range(10)))
    rows = grid_search(spec["method"], _grid_runs(spec, seeds), spec["axes"], int(spec.get("delta", 5)), top=args.top)
    recs = [{"rank": i + 1, "mean_f1": r.mean_f1, "std_f1": r.std_f1, "total_fp": r.total_fp, **r.params}
            for i, r in enumerate(rows)]
    bench.write_table(recs, args.out / "top_configs.csv")
    if rows:
        print(f"best mean F1 {rows[0].mean_f1:.3f} with {rows[0].params}")
    return spec, seeds


def cmd_arl(args) -> tuple[dict, list]:
    params = dict(bench.ARL_METHODS[args.method])
    params.update(load_config(args.config, args.set))
    seeds = list(range(args.seed, args.seed + args.seeds))
    null = make_runs([synth.null_er_scenario(seed=10_000 + s, T=args.T_null) for s in seeds], K=bench.K_CACHE,
                     sharing=bench.SHARING)
    change = make_runs([synth.hard_er_scenario(seed=s, p2=0.1 + args.delta_p, T=args.T_change) for s in seeds],
                       K=bench.K_CACHE, sharing=bench.SHARING)
    th = null_quantile_thresholds(args.method, params, null, bench.ARL_LEVELS)
    rep = measure_arl_add(args.method, params, null, change, th)
    bench.write_table(rep.as_records(), args.out / "arl_curve.csv")
    cfg = {"method": args.method, "params": params, "delta_p": args.delta_p, "T_null": args.T_null,
           "T_change": args.T_change}
    return cfg, seeds


def cmd_ksweep(args) -> tuple[dict, list]:
    base = dict(bench.FIXED_CFG)
    base.update(load_config(args.config, args.set))
    if args.exact:
        base["exact"] = True
    seeds = list(range(args.seed, args.seed + args.seeds))
    runs = bench.runs_for("HardER", seeds, p2=args.p2)
    rows = k_sweep(runs, base, list(range(args.k_min, args.k_max + 1)), per_seed=not args.common_theta)
    bench.write_table([{"k": r.k, "mean_f1": r.mean_f1, "std_f1": r.std_f1} for r in rows], args.out / "ksweep.csv")
    return {"base": base, "p2": args.p2}, seeds


# parser --------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, required=True, help="output directory (created)")
    p.add_argument("--seed", type=int, default=0, help="root seed for every random draw")


def _add_moment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, default=50, help="number of Chebyshev moments")
    p.add_argument("--R", type=int, default=30, help="Rademacher probes per snapshot")
    p.add_argument("--sharing", choices=("fresh", "shared"), default="fresh")
    p.add_argument("--exact", action="store_true", help="dense eigendecomposition instead of probes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sword", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic snapshot stream and its change points")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(synth.PRESETS))
    p.add_argument("--config", help="YAML scenario (preset + kwargs, or full segment list)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("moments", help="cache Chebyshev moments for a snapshot stream")
    _add_common(p)
    p.add_argument("--input", required=True)
    _add_moment_flags(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("detect", help="score a stream and emit detections")
    _add_common(p)
    p.add_argument("--input", required=True, help="moment cache (.csv) or snapshot stream (.jsonl)")
    p.add_argument("--method", default="sword", help=f"one of {', '.join(METHODS)} or scpd-<{'|'.join(STAGES)}>")
    p.add_argument("--config", help="YAML method parameters (theta, k, w, w_ref, c, mode, ...)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--truth", help="change-point sidecar (.cps.json) for a match report")
    p.add_argument("--delta", type=int, default=5, help="matching tolerance")
    _add_moment_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="run a benchmark suite end to end")
    p.add_argument("suite", help=f"one of {', '.join(bench.SUITES)}")
    _add_common(p)
    p.add_argument("--seeds", type=int, help="number of seeds (suite default otherwise)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="grid search from a grid spec")
    _add_common(p)
    p.add_argument("--grid", default="sword", help="bundled grid name or YAML path")
    p.add_argument("--scenario", help="YAML scenario overriding the grid's")
    p.add_argument("--seeds", type=int, help="number of seeds (grid's list otherwise)")
    p.add_argument("--top", type=int, default=50)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("arl", help="ARL0 / ADD sweep on ER n=50")
    _add_common(p)
    p.add_argument("--method", choices=sorted(bench.ARL_METHODS), default="sword")
    p.add_argument("--config", help="YAML method parameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--delta-p", dest="delta_p", type=float, default=0.10)
    p.add_argument("--T-null", dest="T_null", type=int, default=500)
    p.add_argument("--T-change", dest="T_change", type=int, default=100)
    p.set_defaults(func=cmd_arl)

    p = sub.add_parser("ksweep", help="F1 against moment order k on hard ER")
    _add_common(p)
    p.add_argument("--config", help="YAML base config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--p2", type=float, default=0.20)
    p.add_argument("--k-min", dest="k_min", type=int, default=1)
    p.add_argument("--k-max", dest="k_max", type=int, default=30)
    p.add_argument("--exact", action="store_true", help="use exact moments")
    p.add_argument("--common-theta", action="store_true", help="one threshold across seeds")
    p.set_defaults(func=cmd_ksweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = time.perf_counter()
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        config, seeds = args.func(args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"sword {args.command}: error: {exc}", file=sys.stderr)
        return 2
    inputs = [getattr(args, k) for k in ("input", "truth") if getattr(args, k, None)]
    write_manifest(args.out, args, config, seeds, inputs, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
