"""Scenario simulation: platform trajectory, source placement, noisy bearings.

A scenario is a pure function of its configuration (the seed included), so
identical configs always reproduce bit-identical scenarios. Draw order from
the per-scenario stream is fixed: heading, period, duration, start position
(one pair per retry), source positions, then the bearing noise matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, TrajectoryFitError
from .geometry import DEFAULT_REGION, Region, WorldPoint, true_bearing, wrap_angle
from .rng import make_rng

RANDOM = "random"

#: heading is drawn from U(0, 360) degrees when unset
HEADING_RANGE = (0.0, 360.0)
#: measurement period range, seconds
PERIOD_RANGE = (3.0, 15.0)
#: measurement duration range, seconds
DURATION_RANGE = (180.0, 300.0)

START_RETRY_LIMIT = 100


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one scenario.

    Angles in degrees, lengths in meters, times in seconds. The string
    "random" defers heading/period/duration to the seeded stream.
    """

    sigma_deg: float
    num_sources: int = 1
    speed: float = 250.0
    heading_deg: float | str = RANDOM
    period_s: float | str = RANDOM
    duration_s: float | str = RANDOM
    region: Region = DEFAULT_REGION
    seed: int = 0
    start_margin: float = 80_000.0
    source_margin: float = 5_000.0
    max_sources: int = 5

    def __post_init__(self):
        if not self.sigma_deg > 0.0:
            raise ValueError(f"sigma_deg must be > 0, got {self.sigma_deg}")
        if not 1 <= self.num_sources <= self.max_sources:
            raise ValueError(
                f"num_sources must be in [1, {self.max_sources}], got {self.num_sources}"
            )
        if self.speed <= 0.0:
            raise ValueError(f"speed must be > 0, got {self.speed}")
        for name in ("heading_deg", "period_s", "duration_s"):
            value = getattr(self, name)
            if isinstance(value, str) and value != RANDOM:
                raise ValueError(f"{name} must be a number or '{RANDOM}', got {value!r}")
        if (
            not isinstance(self.period_s, str)
            and not isinstance(self.duration_s, str)
            and self.period_s > self.duration_s
        ):
            raise ValueError("period_s must not exceed duration_s")

    def scaled(self, factor: float) -> "ScenarioConfig":
        """Geometrically similar desk-scale config: all lengths (region,
        speed, margins) multiplied by `factor`; times and angles unchanged.
        Region bounds snap to whole meters so grids stay exact."""
        if not 0.0 < factor <= 1.0:
            raise ValueError(f"scale factor must be in (0, 1], got {factor}")
        region = Region(
            round(self.region.x_min * factor),
            round(self.region.x_max * factor),
            round(self.region.y_min * factor),
            round(self.region.y_max * factor),
        )
        return replace(
            self,
            region=region,
            speed=self.speed * factor,
            start_margin=self.start_margin * factor,
            source_margin=self.source_margin * factor,
        )


@dataclass(frozen=True)
class PlatformTrajectory:
    """Constant-speed straight-line platform track sampled at the
    measurement times."""

    times: np.ndarray  # (N,) seconds, strictly increasing
    positions: np.ndarray  # (N, 2) meters
    speed: float
    heading_deg: float

    def __post_init__(self):
        if self.times.ndim != 1 or self.positions.shape != (self.times.size, 2):
            raise ValueError("times and positions shapes disagree")
        if self.times.size > 1:
            dt = np.diff(self.times)
            if not np.all(dt > 0):
                raise ValueError("times must be strictly increasing")
            step = np.linalg.norm(np.diff(self.positions, axis=0), axis=1)
            expected = self.speed * dt
            if not np.allclose(step, expected, rtol=1e-6, atol=0.0):
                raise ValueError("positions violate the constant-speed law")

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> list[tuple[float, WorldPoint]]:
        return [
            (float(t), WorldPoint(float(x), float(y)))
            for t, (x, y) in zip(self.times, self.positions)
        ]


@dataclass(frozen=True)
class SourceSet:
    """Stationary emitter positions, shape (S, 2)."""

    xy: np.ndarray

    def __post_init__(self):
        if self.xy.ndim != 2 or self.xy.shape[1] != 2 or self.xy.shape[0] < 1:
            raise ValueError(f"source array must be (S>=1, 2), got {self.xy.shape}")

    def __len__(self) -> int:
        return self.xy.shape[0]

    @property
    def locations(self) -> list[WorldPoint]:
        return [WorldPoint(float(x), float(y)) for x, y in self.xy]


@dataclass(frozen=True)
class AoABearing:
    """One angle-of-arrival record. theta_true is simulation ground truth
    and is absent (None) on measurement sets loaded from files."""

    index: int
    t: float
    platform: WorldPoint
    theta_meas: float
    sigma: float
    theta_true: float | None = None


@dataclass(frozen=True)
class MeasurementSet:
    """The flat, unlabeled bearing list estimators operate on.

    Carries no source association and no true bearings; those live on the
    Scenario as diagnostics. Sorted by time, source-major within a time step.
    """

    times: np.ndarray  # (B,)
    platform_xy: np.ndarray  # (B, 2)
    theta_meas: np.ndarray  # (B,) radians
    sigma: np.ndarray  # (B,) radians

    def __post_init__(self):
        n = self.times.size
        if self.platform_xy.shape != (n, 2) or self.theta_meas.shape != (n,) or self.sigma.shape != (n,):
            raise ValueError("measurement array shapes disagree")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")

    def __len__(self) -> int:
        return self.times.size

    def bearings(self, theta_true: np.ndarray | None = None) -> list[AoABearing]:
        out = []
        for i in range(len(self)):
            out.append(
                AoABearing(
                    index=i,
                    t=float(self.times[i]),
                    platform=WorldPoint(*map(float, self.platform_xy[i])),
                    theta_meas=float(self.theta_meas[i]),
                    sigma=float(self.sigma[i]),
                    theta_true=None if theta_true is None else float(theta_true[i]),
                )
            )
        return out


@dataclass(frozen=True)
class Scenario:
    """Ground truth plus the measurement set derived from it.

    provenance[i] is the true source index of bearing i and theta_true[i]
    its noiseless bearing; both are diagnostic fields that estimator code
    must never read (None on scenarios loaded from files without them).
    """

    config: ScenarioConfig
    trajectory: PlatformTrajectory
    sources: SourceSet
    measurements: MeasurementSet
    provenance: np.ndarray | None = None
    theta_true: np.ndarray | None = None

    def __post_init__(self):
        expected = len(self.sources) * len(self.trajectory)
        if len(self.measurements) != expected:
            raise ValueError(
                f"bearing count {len(self.measurements)} != S*N = {expected}"
            )

    @property
    def scenario_id(self) -> str:
        return f"scn-{self.config.seed:016x}"


def _snap_to_degree_lattice(rad):
    """Sub-ulp shift onto values that survive rad -> deg file -> rad exactly.

    Two deg/rad passes are needed: the first lands on a degree value that is
    a fixpoint of deg(rad(.)), the second takes its radian preimage.
    """
    return np.radians(np.degrees(np.radians(np.degrees(rad))))


def perturb_bearing(theta: float, sigma: float, rng: np.random.Generator) -> float:
    """theta plus zero-mean Gaussian noise of std sigma, wrapped to (-pi, pi]."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return wrap_angle(theta + sigma * rng.standard_normal())


def _resolve(value: float | str, rng: np.random.Generator, lo: float, hi: float) -> float:
    if isinstance(value, str):
        return float(rng.uniform(lo, hi))
    return float(value)


def generate_trajectory(config: ScenarioConfig, rng: np.random.Generator) -> PlatformTrajectory:
    """Sample heading/period/duration as configured, then a start position
    uniform over the region shrunk by the start margin, rejecting starts
    whose full track leaves the region (up to START_RETRY_LIMIT)."""
    heading = _resolve(config.heading_deg, rng, *HEADING_RANGE)
    period = _resolve(config.period_s, rng, *PERIOD_RANGE)
    duration = _resolve(config.duration_s, rng, *DURATION_RANGE)
    if period <= 0 or duration < 0:
        raise ValueError("period must be > 0 and duration >= 0")

    count = int(math.floor(duration / period)) + 1
    times = np.arange(count, dtype=np.float64) * period
    heading_rad = math.radians(heading)
    direction = np.array([math.cos(heading_rad), math.sin(heading_rad)])

    region = config.region
    margin = min(config.start_margin, 0.499 * min(region.width, region.height))
    start_box = region.shrunk(margin)
    for _ in range(START_RETRY_LIMIT):
        start = np.array(
            [
                rng.uniform(start_box.x_min, start_box.x_max),
                rng.uniform(start_box.y_min, start_box.y_max),
            ]
        )
        positions = start[None, :] + config.speed * times[:, None] * direction[None, :]
        last = positions[-1]
        if region.contains(float(last[0]), float(last[1])):
            return PlatformTrajectory(
                times=times, positions=positions, speed=config.speed, heading_deg=heading
            )
    raise TrajectoryFitError(
        f"no start position kept the {config.speed * duration:.0f} m track inside "
        f"the region after {START_RETRY_LIMIT} attempts"
    )


def place_sources(config: ScenarioConfig, rng: np.random.Generator) -> SourceSet:
    """Sources uniform over the region shrunk by the source margin. No
    minimum-separation constraint: closely spaced sources are legal."""
    box = config.region.shrunk(min(config.source_margin, 0.499 * min(config.region.width, config.region.height)))
    xy = np.column_stack(
        [
            rng.uniform(box.x_min, box.x_max, config.num_sources),
            rng.uniform(box.y_min, box.y_max, config.num_sources),
        ]
    )
    return SourceSet(xy=xy)


def simulate_scenario(config: ScenarioConfig, rng: np.random.Generator | None = None) -> Scenario:
    """Full scenario: trajectory, sources, and one noisy bearing per
    (platform state, source), flattened time-major."""
    if rng is None:
        rng = make_rng(config.seed)
    trajectory = generate_trajectory(config, rng)
    sources = place_sources(config, rng)

    n_states = len(trajectory)
    n_sources = len(sources)
    # math.atan2 per pair, not np.arctan2: the vector routine differs from the
    # scalar one by an ulp on this platform and theta_true must agree with
    # true_bearing() exactly
    theta_true = np.empty((n_states, n_sources))
    for i in range(n_states):
        px, py = trajectory.positions[i]
        for j in range(n_sources):
            dx = float(sources.xy[j, 0] - px)
            dy = float(sources.xy[j, 1] - py)
            if dx == 0.0 and dy == 0.0:
                raise DegenerateGeometryError(
                    f"source {j} coincides with platform state {i}"
                )
            angle = math.atan2(dy, dx)
            theta_true[i, j] = math.pi if angle == -math.pi else angle

    sigma_rad = math.radians(config.sigma_deg)
    noise = sigma_rad * rng.standard_normal((n_states, n_sources))
    theta_meas = wrap_angle(theta_true + noise)
    theta_meas = _snap_to_degree_lattice(theta_meas)

    measurements = MeasurementSet(
        times=np.repeat(trajectory.times, n_sources),
        platform_xy=np.repeat(trajectory.positions, n_sources, axis=0),
        theta_meas=theta_meas.reshape(-1),
        sigma=np.full(n_states * n_sources, float(_snap_to_degree_lattice(sigma_rad))),
    )
    provenance = np.tile(np.arange(n_sources), n_states)
    return Scenario(
        config=config,
        trajectory=trajectory,
        sources=sources,
        measurements=measurements,
        provenance=provenance,
        theta_true=theta_true.reshape(-1),
    )


# ---------------------------------------------------------------------------
# scenario file format (JSON, degrees/meters/seconds)


def _config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "sigma_deg": config.sigma_deg,
        "num_sources": config.num_sources,
        "speed": config.speed,
        "heading_deg": config.heading_deg,
        "period_s": config.period_s,
        "duration_s": config.duration_s,
        "region": [config.region.x_min, config.region.x_max, config.region.y_min, config.region.y_max],
        "seed": config.seed,
        "start_margin": config.start_margin,
        "source_margin": config.source_margin,
        "max_sources": config.max_sources,
    }


def _config_from_dict(d: dict) -> ScenarioConfig:
    region = Region(*d["region"])
    return ScenarioConfig(
        sigma_deg=d["sigma_deg"],
        num_sources=d["num_sources"],
        speed=d["speed"],
        heading_deg=d["heading_deg"],
        period_s=d["period_s"],
        duration_s=d["duration_s"],
        region=region,
        seed=d["seed"],
        start_margin=d.get("start_margin", 80_000.0),
        source_margin=d.get("source_margin", 5_000.0),
        max_sources=d.get("max_sources", 5),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    m = scenario.measurements
    bearings = [
        [
            i,
            float(m.times[i]),
            float(m.platform_xy[i, 0]),
            float(m.platform_xy[i, 1]),
            math.degrees(float(m.theta_meas[i])),
            math.degrees(float(m.sigma[i])),
        ]
        for i in range(len(m))
    ]
    return {
        "config": _config_to_dict(scenario.config),
        "trajectory": [
            [float(t), float(x), float(y)]
            for t, (x, y) in zip(scenario.trajectory.times, scenario.trajectory.positions)
        ],
        "sources": [[float(x), float(y)] for x, y in scenario.sources.xy],
        "bearings": bearings,
        "provenance": [] if scenario.provenance is None else [int(s) for s in scenario.provenance],
    }


def scenario_from_dict(d: dict) -> Scenario:
    config = _config_from_dict(d["config"])
    traj = np.asarray(d["trajectory"], dtype=np.float64).reshape(-1, 3)
    bearings = np.asarray(d["bearings"], dtype=np.float64).reshape(-1, 6)
    trajectory = PlatformTrajectory(
        times=traj[:, 0].copy(),
        positions=traj[:, 1:].copy(),
        speed=config.speed,
        heading_deg=float("nan"),
    )
    sources = SourceSet(xy=np.asarray(d["sources"], dtype=np.float64).reshape(-1, 2))
    theta = np.radians(bearings[:, 4])
    theta[theta == -math.pi] = math.pi  # only a literal -180 deg maps here
    measurements = MeasurementSet(
        times=bearings[:, 1].copy(),
        platform_xy=bearings[:, 2:4].copy(),
        theta_meas=theta,
        sigma=np.radians(bearings[:, 5]),
    )
    provenance = np.asarray(d["provenance"], dtype=np.int64) if d.get("provenance") else None
    return Scenario(
        config=config,
        trajectory=trajectory,
        sources=sources,
        measurements=measurements,
        provenance=provenance,
        theta_true=None,
    )


def dump_json(payload: dict) -> str:
    """Canonical JSON so write/read/write round-trips byte-identically."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def save_scenario(path: str | Path, scenario: Scenario) -> None:
    Path(path).write_text(dump_json(scenario_to_dict(scenario)), encoding="utf-8")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
