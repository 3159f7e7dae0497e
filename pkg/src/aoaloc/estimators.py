"""Classical single-source AoA estimators: PLS, WIVE, and PSO-driven ML.

All three operate on a flat MeasurementSet and know nothing about sources
beyond the single-emitter assumption. Feeding them multi-source data is
legal and yields a single meaningless estimate; callers that care must
split the data first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DegenerateGeometryError,
    IllConditionedGeometryError,
    InsufficientDataError,
)
from .geometry import DEFAULT_REGION, Region, WorldPoint, wrap_angle
from .kernels import ml_cost_batch
from .rng import make_rng
from .scenario import MeasurementSet

#: rows whose bearing cosine is smaller than this are dropped from the
#: tan-form linear systems (tan blows up near +-90 deg)
COS_GUARD = 1e-6

#: condition number of the 2x2 normal matrix beyond which we refuse to solve
COND_LIMIT = 1e12

TAN_FORM = "tan"
SINCOS_FORM = "sincos"


class Method(str, Enum):
    PLS = "pls"
    WIVE = "wive"
    PSO_ML = "pso-ml"
    SEGNET = "segnet"


@dataclass(frozen=True)
class SourceEstimate:
    position: WorldPoint
    method: Method
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PseudoLinearSystem:
    """Rows [tan(theta_n), -1] (or the sin/cos equivalent) against
    b_n = x_n tan(theta_n) - y_n, guarded rows already excluded."""

    A: np.ndarray  # (K, 2)
    b: np.ndarray  # (K,)
    kept: np.ndarray  # (K,) indices into the originating MeasurementSet

    def __post_init__(self):
        if self.A.shape != (self.b.size, 2) or self.kept.size != self.b.size:
            raise ValueError("system shapes disagree")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("non-finite entries in linear system")


@dataclass(frozen=True)
class IvSystem:
    G: np.ndarray  # (K, 2) instrument rows from the estimated bearings
    W_diag: np.ndarray  # (K,) strictly positive weights
    R_hat: np.ndarray  # (K,) estimated ranges, > 0

    def __post_init__(self):
        if np.any(self.W_diag <= 0) or np.any(self.R_hat <= 0):
            raise ValueError("weights and ranges must be strictly positive")


def _rows(theta: np.ndarray, px: np.ndarray, py: np.ndarray, row_form: str):
    """A rows and b entries for the chosen parameterization."""
    if row_form == TAN_FORM:
        t = np.tan(theta)
        A = np.column_stack([t, -np.ones_like(t)])
        b = px * t - py
    elif row_form == SINCOS_FORM:
        s, c = np.sin(theta), np.cos(theta)
        A = np.column_stack([s, -c])
        b = s * px - c * py
    else:
        raise ValueError(f"unknown row form {row_form!r}")
    return A, b


def build_pls_system(m: MeasurementSet, row_form: str = TAN_FORM) -> PseudoLinearSystem:
    if row_form == TAN_FORM:
        usable = np.abs(np.cos(m.theta_meas)) >= COS_GUARD
    else:
        usable = np.ones(len(m), dtype=bool)
    kept = np.flatnonzero(usable)
    if kept.size < 2:
        raise InsufficientDataError(
            f"need >= 2 usable bearings, have {kept.size} "
            f"({len(m) - kept.size} near +-90 deg excluded)"
        )
    A, b = _rows(m.theta_meas[kept], m.platform_xy[kept, 0], m.platform_xy[kept, 1], row_form)
    return PseudoLinearSystem(A=A, b=b, kept=kept)


def _solve_2x2(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedGeometryError(
            f"{what} condition number {cond:.3e} exceeds {COND_LIMIT:.0e}"
        )
    return np.linalg.solve(M, rhs)


def pls_estimate(m: MeasurementSet, row_form: str = TAN_FORM) -> SourceEstimate:
    """u = (A^T A)^-1 A^T b via the explicit normal equations."""
    sys = build_pls_system(m, row_form)
    AtA = sys.A.T @ sys.A
    u = _solve_2x2(AtA, sys.A.T @ sys.b, "A^T A")
    residual = float(np.linalg.norm(sys.A @ u - sys.b))
    return SourceEstimate(
        position=WorldPoint(float(u[0]), float(u[1])),
        method=Method.PLS,
        diagnostics={
            "residual_norm": residual,
            "rows_used": int(sys.kept.size),
            "rows_excluded": int(len(m) - sys.kept.size),
        },
    )


def wive_estimate(
    m: MeasurementSet,
    weight_mode: str = "inverse",
    row_form: str = TAN_FORM,
) -> SourceEstimate:
    """Weighted instrumental variables: u = (G^T W A)^-1 G^T W b.

    Bearings and ranges for G and W are re-estimated from the PLS solution.
    weight_mode "inverse" uses W_nn = 1/(R_n^2 sigma_n^2), emphasizing
    close-range measurements; "literal" uses W_nn = R_n^2 sigma_n^2 as the
    defining equation prints it. The two disagree on purpose; "inverse" is
    the default because it matches the stated intent of the weighting.
    """
    if weight_mode not in ("inverse", "literal"):
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    pls = pls_estimate(m, row_form)
    ux, uy = pls.position.x, pls.position.y

    dx = ux - m.platform_xy[:, 0]
    dy = uy - m.platform_xy[:, 1]
    r_hat = np.hypot(dx, dy)
    if np.any(r_hat == 0.0):
        raise DegenerateGeometryError("PLS estimate coincides with a platform position")
    theta_hat = np.arctan2(dy, dx)

    usable = np.abs(np.cos(m.theta_meas)) >= COS_GUARD
    if row_form == TAN_FORM:
        usable &= np.abs(np.cos(theta_hat)) >= COS_GUARD
    kept = np.flatnonzero(usable) if row_form == TAN_FORM else np.arange(len(m))
    if kept.size < 2:
        raise InsufficientDataError(f"need >= 2 usable bearings, have {kept.size}")

    A, b = _rows(m.theta_meas[kept], m.platform_xy[kept, 0], m.platform_xy[kept, 1], row_form)
    G, _ = _rows(theta_hat[kept], m.platform_xy[kept, 0], m.platform_xy[kept, 1], row_form)
    variance = np.square(r_hat[kept]) * np.square(m.sigma[kept])
    w = 1.0 / variance if weight_mode == "inverse" else variance
    iv = IvSystem(G=G, W_diag=w, R_hat=r_hat[kept])

    GtWA = (iv.G * iv.W_diag[:, None]).T @ A
    u = _solve_2x2(GtWA, (iv.G * iv.W_diag[:, None]).T @ b, "G^T W A")
    return SourceEstimate(
        position=WorldPoint(float(u[0]), float(u[1])),
        method=Method.WIVE,
        diagnostics={
            "rows_used": int(kept.size),
            "rows_excluded": int(len(m) - kept.size),
            "weight_mode": weight_mode,
        },
    )


def ml_cost(candidate: WorldPoint, m: MeasurementSet) -> float:
    """Sum of squared wrapped bearing residuals at the candidate position.

    Scalar reference path (math.atan2): exact zero at the truth on
    noiseless data. The PSO hot loop uses the batch kernel instead.
    """
    total = 0.0
    for i in range(len(m)):
        dx = candidate.x - float(m.platform_xy[i, 0])
        dy = candidate.y - float(m.platform_xy[i, 1])
        if dx == 0.0 and dy == 0.0:
            raise DegenerateGeometryError(
                f"candidate coincides with platform position {i}"
            )
        r = wrap_angle(float(m.theta_meas[i]) - math.atan2(dy, dx))
        total += r * r
    return total


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 50
    iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    bounds: Region = DEFAULT_REGION
    seed: int = 0
    velocity_clamp: float = 0.2  # fraction of the bounds span per axis

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError(f"need >= 2 particles, got {self.particles}")
        if self.iterations < 1:
            raise ValueError(f"need >= 1 iteration, got {self.iterations}")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError(f"inertia must be in (0, 1), got {self.inertia}")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ValueError("velocity_clamp must be in (0, 1]")


def pso_ml_estimate(m: MeasurementSet, cfg: PsoConfig | None = None) -> SourceEstimate:
    """Global-best PSO over the 2-D search region, minimizing ml_cost.

    Deterministic given cfg.seed. Initial velocities are zero; per
    iteration the stream is consumed as r1 (M,2) then r2 (M,2). Ties in
    the global best resolve to the lowest particle index.
    """
    if cfg is None:
        cfg = PsoConfig()
    if len(m) < 2:
        raise InsufficientDataError(f"need >= 2 bearings, have {len(m)}")

    rng = make_rng("pso", cfg.seed)
    lo = np.array([cfg.bounds.x_min, cfg.bounds.y_min])
    hi = np.array([cfg.bounds.x_max, cfg.bounds.y_max])
    span = hi - lo
    vmax = cfg.velocity_clamp * span

    plat = np.ascontiguousarray(m.platform_xy)
    theta = np.ascontiguousarray(m.theta_meas)

    x = lo + rng.uniform(size=(cfg.particles, 2)) * span
    v = np.zeros_like(x)
    cost = ml_cost_batch(x, plat, theta)
    pbest_x = x.copy()
    pbest_cost = cost.copy()
    g = int(np.argmin(pbest_cost))
    gbest_x = pbest_x[g].copy()
    gbest_cost = float(pbest_cost[g])
    initial_best = gbest_cost

    for _ in range(cfg.iterations):
        r1 = rng.uniform(size=(cfg.particles, 2))
        r2 = rng.uniform(size=(cfg.particles, 2))
        v = (
            cfg.inertia * v
            + cfg.cognitive * r1 * (pbest_x - x)
            + cfg.social * r2 * (gbest_x[None, :] - x)
        )
        np.clip(v, -vmax, vmax, out=v)
        x = np.clip(x + v, lo, hi)
        cost = ml_cost_batch(x, plat, theta)
        improved = cost < pbest_cost
        pbest_x[improved] = x[improved]
        pbest_cost[improved] = cost[improved]
        g = int(np.argmin(pbest_cost))
        if float(pbest_cost[g]) < gbest_cost:
            gbest_x = pbest_x[g].copy()
            gbest_cost = float(pbest_cost[g])

    return SourceEstimate(
        position=WorldPoint(float(gbest_x[0]), float(gbest_x[1])),
        method=Method.PSO_ML,
        diagnostics={
            "cost": gbest_cost,
            "initial_best_cost": initial_best,
            "iterations": cfg.iterations,
            "particles": cfg.particles,
        },
    )
