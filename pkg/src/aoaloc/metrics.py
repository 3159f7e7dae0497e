"""Truth/estimate matching, the two RMSE metrics, Monte-Carlo evaluation,
and wall-clock method benchmarks.

Localization RMSE pools squared distances over the optimally matched pairs
of every run; unmatched truths/estimates are excluded there because count
RMSE already charges for them. Undefined metrics (no pairs, no runs) are
reported as absent, never as zero.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AoaLocError
from .estimators import (
    PsoConfig,
    SourceEstimate,
    pls_estimate,
    pso_ml_estimate,
    wive_estimate,
)
from .postprocess import ProbabilityMap, decode_probability_map
from .raster import DEFAULT_RESOLUTION, GridSpec, render_input, render_label
from .rng import derive_seed
from .scenario import Scenario, ScenarioConfig, SourceSet, dump_json, simulate_scenario

THREADS_ENV = "AOA_THREADS"


@dataclass(frozen=True)
class MatchResult:
    pairs: list[tuple[int, int, float]]  # (truth idx, estimate idx, distance m)
    unmatched_truth: list[int]
    unmatched_estimates: list[int]

    @property
    def total_cost(self) -> float:
        return float(np.sum([d * d for _, _, d in self.pairs]))


def match_estimates(truth: SourceSet, estimates: list[SourceEstimate]) -> MatchResult:
    """Minimum total squared distance assignment over min(S, S-hat) pairs.

    Exact cost ties between swapping two pairs are canonicalized toward the
    lexicographically smallest (truth, estimate) mapping.
    """
    s = len(truth)
    s_hat = len(estimates)
    if s_hat == 0:
        return MatchResult(pairs=[], unmatched_truth=list(range(s)), unmatched_estimates=[])
    est_xy = np.array([[e.position.x, e.position.y] for e in estimates])
    d2 = (
        np.square(truth.xy[:, None, 0] - est_xy[None, :, 0])
        + np.square(truth.xy[:, None, 1] - est_xy[None, :, 1])
    )
    rows, cols = linear_sum_assignment(d2)
    assign = dict(zip(rows.tolist(), cols.tolist()))

    # pairwise-swap canonicalization for exact ties
    matched_truth = sorted(assign)
    changed = True
    while changed:
        changed = False
        for a_i in range(len(matched_truth)):
            for b_i in range(a_i + 1, len(matched_truth)):
                a, b = matched_truth[a_i], matched_truth[b_i]
                ja, jb = assign[a], assign[b]
                if ja > jb and d2[a, ja] + d2[b, jb] == d2[a, jb] + d2[b, ja]:
                    assign[a], assign[b] = jb, ja
                    changed = True

    pairs = [
        (i, assign[i], float(math.sqrt(d2[i, assign[i]]))) for i in matched_truth
    ]
    used_est = set(assign.values())
    return MatchResult(
        pairs=pairs,
        unmatched_truth=[i for i in range(s) if i not in assign],
        unmatched_estimates=[j for j in range(s_hat) if j not in used_est],
    )


@dataclass(frozen=True)
class RunRecord:
    scenario_id: str
    sigma_deg: float
    s_true: int
    s_hat: int
    matched_sq_errors: np.ndarray  # (P,) meters^2

    def __post_init__(self):
        if self.s_true < 1 or self.s_hat < 0:
            raise ValueError("need S >= 1 and S-hat >= 0")


def localization_rmse(runs: list[RunRecord]) -> float | None:
    """sqrt of the mean squared matched distance pooled over all runs;
    None when nothing was matched."""
    pooled = [r.matched_sq_errors for r in runs if r.matched_sq_errors.size]
    if not pooled:
        return None
    return float(np.sqrt(np.mean(np.concatenate(pooled))))


def count_rmse(runs: list[RunRecord]) -> float | None:
    """sqrt of the mean squared source-count error; None on empty input."""
    if not runs:
        return None
    err = np.array([r.s_true - r.s_hat for r in runs], dtype=np.float64)
    return float(np.sqrt(np.mean(np.square(err))))


@dataclass(frozen=True)
class CellResult:
    sigma_deg: float
    num_sources: int
    runs_requested: int
    runs_completed: int
    failures: int
    loc_rmse_m: float | None
    count_rmse: float | None


@dataclass(frozen=True)
class MetricsReport:
    pipeline: str
    master_seed: int
    cells: list[CellResult]
    overall_loc_rmse_m: float | None
    overall_count_rmse: float | None
    total_failures: int

    def to_json(self) -> str:
        return dump_json(
            {
                "pipeline": self.pipeline,
                "master_seed": self.master_seed,
                "cells": [
                    {
                        "sigma_deg": c.sigma_deg,
                        "num_sources": c.num_sources,
                        "runs_requested": c.runs_requested,
                        "runs_completed": c.runs_completed,
                        "failures": c.failures,
                        "loc_rmse_m": c.loc_rmse_m,
                        "count_rmse": c.count_rmse,
                    }
                    for c in self.cells
                ],
                "overall_loc_rmse_m": self.overall_loc_rmse_m,
                "overall_count_rmse": self.overall_count_rmse,
                "total_failures": self.total_failures,
            }
        )

    def to_csv(self) -> str:
        def cell_str(v):
            return "" if v is None else repr(v)

        lines = ["sigma_deg,S,M,loc_rmse_m,count_rmse,failures"]
        for c in self.cells:
            lines.append(
                f"{c.sigma_deg!r},{c.num_sources},{c.runs_requested},"
                f"{cell_str(c.loc_rmse_m)},{cell_str(c.count_rmse)},{c.failures}"
            )
        return "\n".join(lines) + "\n"


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        if threads < 1:
            raise ValueError(f"thread count must be >= 1, got {threads}")
        return threads
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        if not env.isdigit() or int(env) < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return int(env)
    return min(8, os.cpu_count() or 1)


# built-in estimator pipelines: Scenario -> list[SourceEstimate]


def _pls_pipeline(s: Scenario) -> list[SourceEstimate]:
    return [pls_estimate(s.measurements)]


def _wive_pipeline(s: Scenario) -> list[SourceEstimate]:
    return [wive_estimate(s.measurements)]


def _pso_pipeline(s: Scenario) -> list[SourceEstimate]:
    cfg = PsoConfig(bounds=s.config.region, seed=s.config.seed)
    return [pso_ml_estimate(s.measurements, cfg)]


def _label_oracle_pipeline(s: Scenario) -> list[SourceEstimate]:
    """Upper-bound reference: decode the ground-truth label image."""
    grid = GridSpec.from_region(s.config.region, DEFAULT_RESOLUTION)
    label = render_label(s.sources, grid)
    pm = ProbabilityMap(values=label.mask.astype(np.float64), grid=grid)
    return decode_probability_map(pm)


PIPELINES = {
    "pls": _pls_pipeline,
    "wive": _wive_pipeline,
    "pso-ml": _pso_pipeline,
    "label-oracle": _label_oracle_pipeline,
}


def evaluate_run(scenario: Scenario, estimates: list[SourceEstimate]) -> RunRecord:
    match = match_estimates(scenario.sources, estimates)
    return RunRecord(
        scenario_id=scenario.scenario_id,
        sigma_deg=scenario.config.sigma_deg,
        s_true=len(scenario.sources),
        s_hat=len(estimates),
        matched_sq_errors=np.array([d * d for _, _, d in match.pairs]),
    )


def monte_carlo(
    pipeline: str,
    sigma_grid: list[float],
    source_grid: list[int],
    runs: int,
    master_seed: int,
    base_config: ScenarioConfig | None = None,
    threads: int | None = None,
) -> MetricsReport:
    """Seeded grid evaluation; the report is a pure function of the
    arguments, independent of the worker count.

    Run k of cell (sigma, S) uses seed derive_seed(master, sigma, S, k), so
    any sub-grid reproduces the identical runs.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}, have {sorted(PIPELINES)}")
    fn = PIPELINES[pipeline]
    if base_config is None:
        base_config = ScenarioConfig(sigma_deg=1.0)

    jobs = [
        (ci, sigma, s, k)
        for ci, (sigma, s) in enumerate(
            (sigma, s) for sigma in sigma_grid for s in source_grid
        )
        for k in range(runs)
    ]

    def one(job):
        _, sigma, s, k = job
        seed = derive_seed(master_seed, sigma, s, k)
        config = replace(base_config, sigma_deg=sigma, num_sources=s, seed=seed)
        scenario = simulate_scenario(config)
        try:
            estimates = fn(scenario)
        except AoaLocError:
            return None
        return evaluate_run(scenario, estimates)

    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        results = list(pool.map(one, jobs))

    cells = []
    all_records: list[RunRecord] = []
    total_failures = 0
    idx = 0
    for sigma in sigma_grid:
        for s in source_grid:
            records = [r for r in results[idx : idx + runs] if r is not None]
            failures = runs - len(records)
            cells.append(
                CellResult(
                    sigma_deg=sigma,
                    num_sources=s,
                    runs_requested=runs,
                    runs_completed=len(records),
                    failures=failures,
                    loc_rmse_m=localization_rmse(records),
                    count_rmse=count_rmse(records),
                )
            )
            all_records.extend(records)
            total_failures += failures
            idx += runs

    return MetricsReport(
        pipeline=pipeline,
        master_seed=master_seed,
        cells=cells,
        overall_loc_rmse_m=localization_rmse(all_records),
        overall_count_rmse=count_rmse(all_records),
        total_failures=total_failures,
    )


BENCH_METHODS = ("preprocessing", "pls", "wive", "pso-ml")


def benchmark_timings(
    methods: list[str],
    scenario: Scenario,
    repetitions: int,
    warmup: int = 1,
) -> list[dict]:
    """Mean/std wall-clock milliseconds per method on one fixed scenario.

    "preprocessing" times the input-image render. Orderings, not absolute
    values, are the meaningful output.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    calls = {
        "preprocessing": lambda: render_input(scenario),
        "pls": lambda: pls_estimate(scenario.measurements),
        "wive": lambda: wive_estimate(scenario.measurements),
        "pso-ml": lambda: pso_ml_estimate(
            scenario.measurements,
            PsoConfig(bounds=scenario.config.region, seed=scenario.config.seed),
        ),
    }
    unknown = [m for m in methods if m not in calls]
    if unknown:
        raise ValueError(f"unknown methods {unknown}, have {sorted(calls)}")

    rows = []
    for name in methods:
        fn = calls[name]
        for _ in range(warmup):
            fn()
        samples = np.empty(repetitions)
        for i in range(repetitions):
            t0 = time.perf_counter()
            fn()
            samples[i] = time.perf_counter() - t0
        rows.append(
            {
                "method": name,
                "mean_ms": float(samples.mean() * 1e3),
                "std_ms": float(samples.std() * 1e3),
                "reps": repetitions,
            }
        )
    return rows


def benchmark_csv(rows: list[dict]) -> str:
    lines = ["method,mean_ms,std_ms,reps"]
    for r in rows:
        lines.append(f"{r['method']},{r['mean_ms']!r},{r['std_ms']!r},{r['reps']}")
    return "\n".join(lines) + "\n"
