import math

import numpy as np
import pytest

from aoaloc import (
    DEFAULT_REGION,
    MeasurementSet,
    Method,
    PsoConfig,
    Region,
    ScenarioConfig,
    WorldPoint,
    ml_cost,
    pls_estimate,
    pso_ml_estimate,
    simulate_scenario,
    wive_estimate,
)
from aoaloc.errors import (
    IllConditionedGeometryError,
    InsufficientDataError,
)
from aoaloc.estimators import SINCOS_FORM, build_pls_system
from aoaloc.rng import derive_seed


def meas(platforms, thetas, sigma=0.01):
    platforms = np.asarray(platforms, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    n = thetas.size
    return MeasurementSet(
        np.arange(n, dtype=np.float64), platforms, thetas, np.full(n, float(sigma))
    )


def noiseless(seed, num_sources=1):
    """Scenario measurements with the true bearings substituted in."""
    cfg = ScenarioConfig(
        sigma_deg=1.0, num_sources=num_sources, seed=seed, period_s=3.0, duration_s=300.0
    )
    scn = simulate_scenario(cfg)
    m = scn.measurements
    exact = MeasurementSet(m.times, m.platform_xy, scn.theta_true.copy(), m.sigma)
    return scn, exact


def err(est, truth):
    return math.hypot(est.position.x - truth.x, est.position.y - truth.y)


# --- PLS ---


def test_pls_two_ray_intersection():
    m = meas([[0.0, 0.0], [2000.0, 0.0]], [math.pi / 4, 3 * math.pi / 4])
    est = pls_estimate(m)
    assert est.method is Method.PLS
    assert est.position.x == pytest.approx(1000.0, abs=1e-6)
    assert est.position.y == pytest.approx(1000.0, abs=1e-6)


def test_pls_system_rows_match_hand_values():
    m = meas([[0.0, 0.0], [2000.0, 0.0]], [math.pi / 4, 3 * math.pi / 4])
    sys = build_pls_system(m)
    assert sys.A.shape == (2, 2)
    np.testing.assert_allclose(sys.A, [[1.0, -1.0], [-1.0, -1.0]], rtol=1e-12)
    np.testing.assert_allclose(sys.b, [0.0, -2000.0], rtol=1e-12, atol=1e-9)
    assert list(sys.kept) == [0, 1]


def test_pls_exact_on_noiseless_scenarios():
    for seed in range(10):
        scn, exact = noiseless(seed)
        e = err(pls_estimate(exact), scn.sources.locations[0])
        assert e < 1e-6


def test_pls_excludes_vertical_bearings():
    m = meas(
        [[0.0, 0.0], [2000.0, 0.0], [1000.0, -3000.0]],
        [math.pi / 4, 3 * math.pi / 4, math.pi / 2],
    )
    est = pls_estimate(m)
    assert est.diagnostics["rows_excluded"] == 1
    assert est.diagnostics["rows_used"] == 2
    assert est.position.x == pytest.approx(1000.0, abs=1e-6)


def test_pls_insufficient_rows_after_exclusion():
    m = meas(
        [[0.0, 0.0], [2000.0, 0.0], [4000.0, 0.0]],
        [math.pi / 4, math.pi / 2, -math.pi / 2],
    )
    with pytest.raises(InsufficientDataError):
        pls_estimate(m)


def test_pls_parallel_rays_ill_conditioned():
    m = meas(
        [[0.0, 0.0], [1000.0, 1000.0], [2000.0, 2000.0]],
        [math.pi / 4, math.pi / 4, math.pi / 4],
    )
    with pytest.raises(IllConditionedGeometryError):
        pls_estimate(m)


def test_pls_sincos_form_handles_vertical_bearings():
    # due-North rays are usable in the sin/cos row form
    m = meas([[0.0, 0.0], [2000.0, 0.0]], [math.pi / 2, 3 * math.pi / 4])
    est = pls_estimate(m, row_form=SINCOS_FORM)
    assert est.position.x == pytest.approx(0.0, abs=1e-6)
    assert est.position.y == pytest.approx(2000.0, abs=1e-6)


def test_pls_translation_equivariance():
    scn, exact = noiseless(3)
    shift = np.array([12_345.0, -8_000.0])
    moved = MeasurementSet(
        exact.times, exact.platform_xy + shift, exact.theta_meas, exact.sigma
    )
    a = pls_estimate(exact).position
    b = pls_estimate(moved).position
    assert b.x - a.x == pytest.approx(shift[0], abs=1e-5)
    assert b.y - a.y == pytest.approx(shift[1], abs=1e-5)


# --- WIVE ---


def test_wive_equals_pls_on_noiseless_small_scale():
    # sub-km coordinates keep the normal equations well conditioned, the
    # 1e-9 agreement bound only makes sense there (see notes ledger)
    src = WorldPoint(300.0, 420.0)
    plats = np.array([[0.0, 0.0], [500.0, -200.0], [-400.0, 100.0], [200.0, 600.0]])
    thetas = [
        math.atan2(src.y - p[1], src.x - p[0]) for p in plats
    ]
    m = meas(plats, thetas)
    p = pls_estimate(m).position
    w = wive_estimate(m).position
    assert math.hypot(w.x - p.x, w.y - p.y) < 1e-9


def test_wive_close_to_pls_on_noiseless_full_scale():
    for seed in range(5):
        _, exact = noiseless(seed)
        p = pls_estimate(exact).position
        w = wive_estimate(exact).position
        assert math.hypot(w.x - p.x, w.y - p.y) < 1e-5


def test_wive_uniform_weights_reduce_to_plain_iv():
    # symmetric noise keeps the pilot equidistant from both platforms, so
    # W is a multiple of I and WIVE must equal the unweighted IV solve
    delta = 0.03
    m = meas(
        [[0.0, 0.0], [2000.0, 0.0]],
        [math.pi / 4 + delta, 3 * math.pi / 4 - delta],
    )
    pls = pls_estimate(m).position
    r = np.hypot(pls.x - m.platform_xy[:, 0], pls.y - m.platform_xy[:, 1])
    assert r[0] == pytest.approx(r[1], rel=1e-9)

    theta_hat = np.arctan2(pls.y - m.platform_xy[:, 1], pls.x - m.platform_xy[:, 0])
    A = np.column_stack([np.tan(m.theta_meas), -np.ones(2)])
    G = np.column_stack([np.tan(theta_hat), -np.ones(2)])
    b = m.platform_xy[:, 0] * np.tan(m.theta_meas) - m.platform_xy[:, 1]
    plain_iv = np.linalg.solve(G.T @ A, G.T @ b)

    w = wive_estimate(m).position
    assert w.x == pytest.approx(plain_iv[0], abs=1e-9)
    assert w.y == pytest.approx(plain_iv[1], abs=1e-9)


def test_wive_weight_modes_differ_on_asymmetric_geometry():
    scn_cfg = ScenarioConfig(sigma_deg=2.0, seed=17, period_s=3.0, duration_s=300.0)
    scn = simulate_scenario(scn_cfg)
    m = scn.measurements
    a = wive_estimate(m, weight_mode="inverse").position
    b = wive_estimate(m, weight_mode="literal").position
    assert (a.x, a.y) != (b.x, b.y)


def test_wive_diagnostics_record_weight_mode():
    _, exact = noiseless(1)
    est = wive_estimate(exact)
    assert est.method is Method.WIVE
    assert est.diagnostics["weight_mode"] == "inverse"
    assert est.diagnostics["rows_excluded"] == 0


def test_wive_translation_equivariance():
    _, exact = noiseless(4)
    shift = np.array([-20_000.0, 15_000.0])
    moved = MeasurementSet(
        exact.times, exact.platform_xy + shift, exact.theta_meas, exact.sigma
    )
    a = wive_estimate(exact).position
    b = wive_estimate(moved).position
    assert b.x - a.x == pytest.approx(shift[0], abs=1e-4)
    assert b.y - a.y == pytest.approx(shift[1], abs=1e-4)


def test_wive_multi_source_input_is_legal():
    cfg = ScenarioConfig(sigma_deg=1.0, num_sources=3, seed=2)
    scn = simulate_scenario(cfg)
    est = wive_estimate(scn.measurements)
    assert math.isfinite(est.position.x) and math.isfinite(est.position.y)


# --- ML cost ---


def test_ml_cost_zero_at_truth():
    scn, exact = noiseless(6)
    assert ml_cost(scn.sources.locations[0], exact) == 0.0


def test_ml_cost_single_bearing_value():
    m = meas([[0.0, 0.0]], [0.0])
    c = ml_cost(WorldPoint(1000.0, 1000.0), m)
    assert c == (math.pi / 4) ** 2


def test_ml_cost_wrap_bound():
    # candidate due West of the platform, measured bearing due East
    m = meas([[0.0, 0.0]], [0.0])
    c = ml_cost(WorldPoint(-1000.0, 1.0), m)
    assert c <= math.pi**2


def test_ml_cost_invariant_to_2pi_shift():
    scn, exact = noiseless(7)
    cand = WorldPoint(10_000.0, -22_000.0)
    shifted = MeasurementSet(
        exact.times,
        exact.platform_xy,
        exact.theta_meas + 2 * math.pi,
        exact.sigma,
    )
    assert ml_cost(cand, exact) == pytest.approx(ml_cost(cand, shifted), rel=1e-12)


# --- PSO ---


def test_pso_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(particles=1)
    with pytest.raises(ValueError):
        PsoConfig(iterations=0)
    with pytest.raises(ValueError):
        PsoConfig(inertia=1.0)
    with pytest.raises(ValueError):
        PsoConfig(velocity_clamp=0.0)
    with pytest.raises(ValueError):
        PsoConfig(velocity_clamp=1.5)


def test_pso_defaults_match_contract():
    cfg = PsoConfig()
    assert cfg.particles == 50
    assert cfg.iterations == 200
    assert cfg.inertia == 0.729
    assert cfg.cognitive == 1.49445
    assert cfg.social == 1.49445


def test_pso_requires_two_bearings():
    m = meas([[0.0, 0.0]], [0.1])
    with pytest.raises(InsufficientDataError):
        pso_ml_estimate(m, PsoConfig(seed=0))


def test_pso_deterministic_and_improving():
    _, exact = noiseless(0)
    cfg = PsoConfig(seed=5, bounds=DEFAULT_REGION)
    a = pso_ml_estimate(exact, cfg)
    b = pso_ml_estimate(exact, cfg)
    assert (a.position.x, a.position.y) == (b.position.x, b.position.y)
    assert a.method is Method.PSO_ML
    assert a.diagnostics["cost"] <= a.diagnostics["initial_best_cost"]


def test_pso_default_budget_converges_on_canonical_scenario():
    scn, exact = noiseless(0)
    est = pso_ml_estimate(exact, PsoConfig(seed=0, bounds=DEFAULT_REGION))
    assert err(est, scn.sources.locations[0]) < 100.0


def test_pso_translation_equivariance_loose():
    # the swarm trajectory differs after a shift, only the converged
    # optimum is equivariant, so a generous tolerance is the honest check
    scn, exact = noiseless(0)
    shift = np.array([5_000.0, 5_000.0])
    moved = MeasurementSet(
        exact.times, exact.platform_xy + shift, exact.theta_meas, exact.sigma
    )
    cfg = PsoConfig(particles=400, iterations=600, seed=1, bounds=DEFAULT_REGION)
    a = pso_ml_estimate(exact, cfg)
    b = pso_ml_estimate(moved, cfg)
    assert b.position.x - a.position.x == pytest.approx(shift[0], abs=60.0)
    assert b.position.y - a.position.y == pytest.approx(shift[1], abs=60.0)


def test_pso_respects_bounds():
    _, exact = noiseless(2)
    tight = Region(-1000.0, 1000.0, -1000.0, 1000.0)
    est = pso_ml_estimate(exact, PsoConfig(seed=3, bounds=tight))
    assert tight.contains(est.position.x, est.position.y)


def test_pso_seed_changes_trajectory():
    _, exact = noiseless(8)
    a = pso_ml_estimate(exact, PsoConfig(seed=derive_seed("a"), bounds=DEFAULT_REGION))
    b = pso_ml_estimate(exact, PsoConfig(seed=derive_seed("b"), bounds=DEFAULT_REGION))
    # same basin, different swarm path; diagnostics expose the difference
    assert a.diagnostics["initial_best_cost"] != b.diagnostics["initial_best_cost"]
