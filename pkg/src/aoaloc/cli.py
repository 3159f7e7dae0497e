"""aoaloc command line: simulate, estimate, gen-dataset, decode, evaluate,
bench.

Exit codes: 0 success, 1 runtime failure, 2 usage error. All angles on
flags are degrees, lengths meters (region half-extent in km), times
seconds. Every multi-file command writes its manifest before any sample
output; manifests carry the only timestamps, so reports and samples are
byte-reproducible from the same seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AoaLocError
from .estimators import (
    Method,
    PsoConfig,
    SourceEstimate,
    pls_estimate,
    pso_ml_estimate,
    wive_estimate,
)
from .metrics import (
    BENCH_METHODS,
    PIPELINES,
    benchmark_csv,
    benchmark_timings,
    evaluate_run,
    count_rmse,
    localization_rmse,
    match_estimates,
    monte_carlo,
    worker_count,
)
from .pgm import read_pgm, write_input_pgm, write_label_pgm
from .postprocess import ProbabilityMap, decode_probability_map
from .raster import DEFAULT_RESOLUTION, GridSpec, render_input, render_label
from .rng import derive_seed
from .scenario import (
    RANDOM,
    Scenario,
    ScenarioConfig,
    SourceSet,
    dump_json,
    load_scenario,
    save_scenario,
    simulate_scenario,
)
from .geometry import Region, WorldPoint

PAPER_SIGMA_GRID = [0.5, 1.0, 1.5, 2.0, 2.5]
PAPER_SOURCE_GRID = [1, 2, 3, 4, 5]


class UsageError(Exception):
    pass


def _config_from_args(args, sigma: float, sources: int, seed: int) -> ScenarioConfig:
    region = Region.square(args.region_km * 1000.0)
    config = ScenarioConfig(
        sigma_deg=sigma,
        num_sources=sources,
        speed=args.speed,
        heading_deg=RANDOM if args.heading_deg is None else args.heading_deg,
        period_s=RANDOM if args.period_s is None else args.period_s,
        duration_s=RANDOM if args.duration_s is None else args.duration_s,
        region=region,
        seed=seed,
    )
    if args.scale != 1.0:
        config = config.scaled(args.scale)
    return config


def _validate_common(args) -> None:
    if args.sigma_deg is not None:
        sigmas = args.sigma_deg if isinstance(args.sigma_deg, list) else [args.sigma_deg]
        if any(s <= 0 for s in sigmas):
            raise UsageError(f"--sigma-deg must be > 0, got {sigmas}")
    if getattr(args, "sources", None) is not None:
        counts = args.sources if isinstance(args.sources, list) else [args.sources]
        if any(not 1 <= s <= 5 for s in counts):
            raise UsageError(f"--sources must be in [1, 5], got {counts}")
    scale = getattr(args, "scale", 1.0)
    if not 0.0 < scale <= 1.0:
        raise UsageError(f"--scale must be in (0, 1], got {scale}")
    count = getattr(args, "count", 1)
    if count < 1:
        raise UsageError(f"--count must be >= 1, got {count}")
    if getattr(args, "region_km", 100.0) <= 0:
        raise UsageError(f"--region-km must be > 0, got {args.region_km}")
    if getattr(args, "speed", 250.0) <= 0:
        raise UsageError(f"--speed must be > 0, got {args.speed}")


def _manifest(args_dict: dict, outputs: dict) -> dict:
    return {
        "tool": "aoaloc",
        "version": __version__,
        "created_unix": time.time(),
        "args": args_dict,
        "outputs": outputs,
    }


def _prepare_out_dir(path: Path, force: bool) -> None:
    if path.exists():
        if not path.is_dir():
            raise AoaLocError(f"{path} exists and is not a directory")
        if any(path.iterdir()) and not force:
            raise AoaLocError(f"{path} is not empty (use --force to write anyway)")
    path.mkdir(parents=True, exist_ok=True)


def cmd_simulate(args) -> int:
    _validate_common(args)
    if args.count == 1:
        config = _config_from_args(args, args.sigma_deg, args.sources, args.seed)
        out = Path(args.out)
        if out.parent != Path("."):
            out.parent.mkdir(parents=True, exist_ok=True)
        save_scenario(out, simulate_scenario(config))
        print(f"wrote {out}")
        return 0
    out_dir = Path(args.out)
    _prepare_out_dir(out_dir, args.force)
    names = [f"scenario_{k:04d}.json" for k in range(args.count)]
    manifest = _manifest(
        {
            "command": "simulate",
            "sigma_deg": args.sigma_deg,
            "sources": args.sources,
            "seed": args.seed,
            "count": args.count,
        },
        {"scenarios": names},
    )
    (out_dir / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")
    for k, name in enumerate(names):
        config = _config_from_args(
            args, args.sigma_deg, args.sources, derive_seed(args.seed, k)
        )
        save_scenario(out_dir / name, simulate_scenario(config))
    print(f"wrote {args.count} scenarios to {out_dir}")
    return 0


def _results_payload(path: Path) -> dict:
    if path.exists():
        payload = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(payload.get("records"), list):
            raise AoaLocError(f"{path} is not a results file")
        return payload
    return {"records": []}


def _estimate_record(scenario: Scenario, est: SourceEstimate, source: str) -> dict:
    warnings = []
    if len(scenario.sources) > 1:
        warnings.append(
            f"single-source estimator applied to a {len(scenario.sources)}-source scenario"
        )
    return {
        "method": est.method.value,
        "scenario": source,
        "x": est.position.x,
        "y": est.position.y,
        "diagnostics": est.diagnostics,
        "warnings": warnings,
    }


def cmd_estimate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.method == "pls":
        est = pls_estimate(scenario.measurements)
    elif args.method == "wive":
        est = wive_estimate(scenario.measurements)
    else:
        cfg = PsoConfig(bounds=scenario.config.region, seed=scenario.config.seed)
        est = pso_ml_estimate(scenario.measurements, cfg)
    out = Path(args.out)
    payload = _results_payload(out)
    record = _estimate_record(scenario, est, args.scenario)
    payload["records"].append(record)
    out.write_text(dump_json(payload), encoding="utf-8")
    for w in record["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{args.method}: ({est.position.x:.1f}, {est.position.y:.1f}) -> {out}")
    return 0


def cmd_gen_dataset(args) -> int:
    _validate_common(args)
    if args.dot_radius < 0:
        raise UsageError(f"--dot-radius must be >= 0, got {args.dot_radius}")
    if args.marker_radius < 0:
        raise UsageError(f"--marker-radius must be >= 0, got {args.marker_radius}")
    out_dir = Path(args.out)
    _prepare_out_dir(out_dir, args.force)

    cells = [
        {"index": ci, "sigma_deg": sigma, "num_sources": s, "count": args.count}
        for ci, (sigma, s) in enumerate(
            (sigma, s) for sigma in args.sigma_deg for s in args.sources
        )
    ]
    manifest = _manifest(
        {
            "command": "gen-dataset",
            "seed": args.seed,
            "scale": args.scale,
            "resolution_m": args.resolution_m,
            "region_km": args.region_km,
            "dot_radius": args.dot_radius,
            "marker_radius": args.marker_radius,
            "seed_rule": "derive_seed(seed, sigma_deg, num_sources, k)",
        },
        {
            "cells": cells,
            "name_template": "sample_{cell:03d}_{k:05d}_{kind}",
        },
    )
    (out_dir / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")

    base = _config_from_args(args, args.sigma_deg[0], args.sources[0], 0)
    grid = GridSpec.from_region(base.region, args.resolution_m)

    def one(job) -> None:
        cell, k = job
        seed = derive_seed(args.seed, cell["sigma_deg"], cell["num_sources"], k)
        config = replace(
            base,
            sigma_deg=cell["sigma_deg"],
            num_sources=cell["num_sources"],
            seed=seed,
        )
        scenario = simulate_scenario(config)
        stem = f"sample_{cell['index']:03d}_{k:05d}"
        write_input_pgm(
            out_dir / f"{stem}_input.pgm",
            render_input(scenario, grid, marker_radius_px=args.marker_radius),
        )
        write_label_pgm(
            out_dir / f"{stem}_label.pgm",
            render_label(scenario.sources, grid, dot_radius_px=args.dot_radius),
        )
        save_scenario(out_dir / f"{stem}_scenario.json", scenario)

    jobs = [(cell, k) for cell in cells for k in range(args.count)]
    with ThreadPoolExecutor(max_workers=worker_count(args.threads)) as pool:
        list(pool.map(one, jobs))
    print(f"wrote {len(jobs)} sample triples to {out_dir}")
    return 0


def cmd_decode(args) -> int:
    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError(f"--threshold must be in [0, 1], got {args.threshold}")
    if args.min_area < 1:
        raise UsageError(f"--min-area must be >= 1, got {args.min_area}")
    if args.connectivity not in (4, 8):
        raise UsageError(f"--connectivity must be 4 or 8, got {args.connectivity}")
    # accepts 16-bit probability maps and 8-bit input/label images alike;
    # samples normalize by maxval either way
    pf = read_pgm(args.map)
    if pf.grid is None:
        raise AoaLocError(f"{args.map}: missing grid comment, world mapping unknown")
    values, grid = pf.samples.astype(np.float64) / pf.maxval, pf.grid
    estimates = decode_probability_map(
        ProbabilityMap(values=values, grid=grid),
        threshold=args.threshold,
        min_area=args.min_area,
        connectivity=args.connectivity,
        weighted_centroids=args.weighted_centroids,
    )
    out = Path(args.out)
    payload = _results_payload(out)
    payload["records"].append(
        {
            "method": Method.SEGNET.value,
            "map": args.map,
            "params": {
                "threshold": args.threshold,
                "min_area": args.min_area,
                "connectivity": args.connectivity,
                "weighted_centroids": args.weighted_centroids,
            },
            "s_hat": len(estimates),
            "estimates": [
                {"x": e.position.x, "y": e.position.y, "area": e.diagnostics["area"]}
                for e in estimates
            ],
        }
    )
    out.write_text(dump_json(payload), encoding="utf-8")
    print(f"decoded {len(estimates)} source(s) -> {out}")
    return 0


def _collect_positions(payload: dict) -> list[tuple[float, float]]:
    positions = []
    for record in payload["records"]:
        if "estimates" in record:
            positions.extend((e["x"], e["y"]) for e in record["estimates"])
        else:
            positions.append((record["x"], record["y"]))
    return positions


def cmd_evaluate(args) -> int:
    if args.results is not None:
        if args.truth is None:
            raise UsageError("--results requires --truth")
        payload = _results_payload(Path(args.results))
        scenario = load_scenario(args.truth)
        positions = _collect_positions(payload)
        estimates = [
            SourceEstimate(position=WorldPoint(x, y), method=Method.SEGNET)
            for x, y in positions
        ]
        record = evaluate_run(scenario, estimates)
        report = {
            "s_true": record.s_true,
            "s_hat": record.s_hat,
            "loc_rmse_m": localization_rmse([record]),
            "count_rmse": count_rmse([record]),
            "matched_pairs": len(record.matched_sq_errors),
        }
        text = dump_json(report)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        return 0

    _validate_common(args)
    if args.pipeline not in PIPELINES:
        raise UsageError(f"--pipeline must be one of {sorted(PIPELINES)}")
    if args.runs < 1:
        raise UsageError(f"--runs must be >= 1, got {args.runs}")
    base = _config_from_args(args, args.sigma_deg[0], args.sources[0], 0)
    report = monte_carlo(
        pipeline=args.pipeline,
        sigma_grid=args.sigma_deg,
        source_grid=args.sources,
        runs=args.runs,
        master_seed=args.seed,
        base_config=base,
        threads=args.threads,
    )
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        json_path = prefix.with_suffix(".json")
        csv_path = prefix.with_suffix(".csv")
        json_path.write_text(report.to_json(), encoding="utf-8")
        csv_path.write_text(report.to_csv(), encoding="utf-8")
        manifest = _manifest(
            {
                "command": "evaluate",
                "pipeline": args.pipeline,
                "sigma_deg": args.sigma_deg,
                "sources": args.sources,
                "runs": args.runs,
                "seed": args.seed,
            },
            {"report_json": json_path.name, "report_csv": csv_path.name},
        )
        prefix.with_suffix(".manifest.json").write_text(dump_json(manifest), encoding="utf-8")
        print(f"wrote {json_path} and {csv_path}")
    else:
        sys.stdout.write(report.to_csv())
    return 0


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError(f"--reps must be >= 1, got {args.reps}")
    unknown = [m for m in args.methods if m not in BENCH_METHODS]
    if unknown:
        raise UsageError(f"unknown methods {unknown}, have {list(BENCH_METHODS)}")
    config = ScenarioConfig(
        sigma_deg=args.sigma_deg,
        num_sources=1,
        period_s=3.0,
        duration_s=300.0,
        seed=args.seed,
    )
    scenario = simulate_scenario(config)
    rows = benchmark_timings(list(args.methods), scenario, repetitions=args.reps)
    csv_text = benchmark_csv(rows)
    payload = dump_json(
        {
            "scenario": {"sigma_deg": args.sigma_deg, "period_s": 3.0, "duration_s": 300.0, "seed": args.seed},
            "rows": rows,
            "created_unix": time.time(),
        }
    )
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".csv").write_text(csv_text, encoding="utf-8")
        prefix.with_suffix(".json").write_text(payload, encoding="utf-8")
        print(f"wrote {prefix.with_suffix('.csv')} and {prefix.with_suffix('.json')}")
    else:
        sys.stdout.write(csv_text)
    return 0


def _add_scenario_flags(p: argparse.ArgumentParser, multi: bool) -> None:
    if multi:
        p.add_argument("--sigma-deg", type=float, nargs="+", default=PAPER_SIGMA_GRID)
        p.add_argument("--sources", type=int, nargs="+", default=PAPER_SOURCE_GRID)
    else:
        p.add_argument("--sigma-deg", type=float, default=1.0)
        p.add_argument("--sources", type=int, default=1)
    p.add_argument("--speed", type=float, default=250.0, help="platform speed m/s")
    p.add_argument("--heading-deg", type=float, default=None)
    p.add_argument("--period-s", type=float, default=None)
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--region-km", type=float, default=100.0, help="region half extent")
    p.add_argument("--scale", type=float, default=1.0, help="geometric desk-scale factor")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoaloc",
        description="multi-source AoA localization workbench",
    )
    parser.add_argument("--version", action="version", version=f"aoaloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate scenario file(s)")
    _add_scenario_flags(p, multi=False)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="scenario.json")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate", help="run a classical estimator on a scenario")
    p.add_argument("scenario")
    p.add_argument("--method", required=True, choices=["pls", "wive", "pso-ml"])
    p.add_argument("--out", default="results.json")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("gen-dataset", help="write (input, label, scenario) triples")
    _add_scenario_flags(p, multi=True)
    p.add_argument("--count", type=int, default=1000, help="samples per grid cell")
    p.add_argument("--resolution-m", type=float, default=DEFAULT_RESOLUTION)
    p.add_argument("--dot-radius", type=int, default=0, help="label dot radius px")
    p.add_argument("--marker-radius", type=int, default=3, help="platform marker radius px")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_gen_dataset)

    p = sub.add_parser("decode", help="probability map -> source estimates")
    p.add_argument("map")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-area", type=int, default=1)
    p.add_argument("--connectivity", type=int, default=8)
    p.add_argument("--weighted-centroids", action="store_true")
    p.add_argument("--out", default="results.json")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("evaluate", help="metrics from results+truth or a seeded grid")
    p.add_argument("--results", default=None, help="results file (file mode)")
    p.add_argument("--truth", default=None, help="truth scenario file (file mode)")
    _add_scenario_flags(p, multi=True)
    p.add_argument("--pipeline", default="pls", help=f"one of {sorted(PIPELINES)}")
    p.add_argument("--runs", type=int, default=100, help="Monte-Carlo runs per cell")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="report path prefix")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("bench", help="method timing table")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--methods", nargs="+", default=list(BENCH_METHODS))
    p.add_argument("--sigma-deg", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path prefix")
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (AoaLocError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
