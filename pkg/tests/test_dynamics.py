import math

import pytest

from domstab.errors import DivergenceError, KindError
from domstab.dynamics import fixed_points, iterate, resilience
from domstab.fitting import ModelFit
from domstab.models import ModelKind

LINEAR_405 = {"a": 1.551, "b": -0.033}
SINE_420 = {"K": -0.294, "a": -1.677, "r": 0.048}


def test_linear_fixed_point_location_and_multiplier():
    (point,) = fixed_points(ModelKind.LINEAR, LINEAR_405, (0.0, 100.0))
    assert point.location == pytest.approx(1.551 / 0.033, abs=1e-6)
    assert point.location == pytest.approx(47.0, abs=1e-6)
    # multiplier 1 + S + D S' with S = 0 at the root
    assert point.multiplier == pytest.approx(1.0 - 0.033 * 47.0, abs=1e-6)
    assert point.multiplier == pytest.approx(-0.551, abs=1e-3)
    assert point.verdict == "stable"


def test_linear_trajectories_converge_from_both_sides():
    target = 1.551 / 0.033
    for start in (30.0, 60.0):
        traj = iterate(ModelKind.LINEAR, LINEAR_405, start)
        assert traj.status == "converged"
        assert traj.values[-1] == pytest.approx(target, abs=1e-4)
        assert len(traj.values) <= 501


def test_trajectory_records_start_and_path():
    traj = iterate(ModelKind.LINEAR, LINEAR_405, 30.0)
    assert traj.start == 30.0
    assert traj.values[0] == 30.0
    # first step follows the map by hand
    s0 = 1.551 - 0.033 * 30.0
    assert traj.values[1] == pytest.approx(30.0 * (1.0 + s0), rel=1e-14)


def test_oscillating_orbit_detected():
    # period-doubled regime of the quadratic map: stable 2-cycle
    params = {"a": 2.2, "b": -0.01}
    traj = iterate(ModelKind.LINEAR, params, 150.0)
    assert traj.status == "oscillating"
    # the last two values alternate around the unstable fixed point at 220
    low, high = sorted(traj.values[-2:])
    assert low < 220.0 < high


def test_collapse_detected():
    traj = iterate(ModelKind.LINEAR, {"a": 0.5, "b": -0.1}, 20.0)
    assert traj.status == "collapsed"
    assert traj.values[-1] <= 0.0


def test_max_steps_when_convergence_is_slow():
    traj = iterate(ModelKind.LINEAR, {"a": 0.001, "b": -0.00001}, 50.0, max_steps=500)
    assert traj.status == "max-steps"
    assert len(traj.values) == 501


def test_divergence_raises():
    with pytest.raises(DivergenceError):
        iterate(ModelKind.LINEAR, {"a": 0.1, "b": 0.01}, 10.0)


def test_sine_roots_sit_on_sine_nodes():
    points = fixed_points(ModelKind.LOGISTIC_SINE, SINE_420, (1.0, 65.0))
    assert points, "expected roots on the sine nodes"
    pi2 = math.pi * math.pi
    for p in points:
        k = round(p.location / pi2)
        assert k >= 1
        assert p.location == pytest.approx(k * pi2, abs=1e-8)


def test_sine_pole_not_reported_as_root():
    # 1 + a e^{-rD} = 0 at D = ln(-a)/r ~ 10.77 for these parameters; the
    # sign change across the pole must not masquerade as a fixed point
    pole = math.log(1.677) / 0.048
    points = fixed_points(ModelKind.LOGISTIC_SINE, SINE_420, (1.0, 65.0))
    assert all(abs(p.location - pole) > 0.5 for p in points)


def test_logistic_without_roots_returns_empty():
    # K/(1 + a e^{-rD}) with K, a > 0 never touches zero
    points = fixed_points(ModelKind.LOGISTIC, {"K": 2.0, "a": 0.5, "r": -0.2}, (0.0, 80.0))
    assert points == []


def test_fixed_points_multiplier_signs():
    # rising line: S' > 0 at the root, multiplier above one
    (point,) = fixed_points(ModelKind.LINEAR, {"a": -1.0, "b": 0.02}, (0.0, 100.0))
    assert point.location == pytest.approx(50.0, abs=1e-8)
    assert point.multiplier == pytest.approx(2.0, abs=1e-6)
    assert point.verdict == "unstable"


def linear_fit(a: float, b: float) -> ModelFit:
    return ModelFit(
        kind=ModelKind.LINEAR,
        params={"a": a, "b": b},
        std_errors={"a": 0.1, "b": 0.01},
        r2=0.7,
        r2_adj=0.7,
        residual_ss=1.0,
        n=28,
        converged=True,
        iterations=0,
        pearson_r=0.84,
    )


def test_resilience_is_linear_slope():
    res = resilience(linear_fit(1.551, -0.033))
    assert res.slope == -0.033
    assert res.magnitude == 0.033


def test_resilience_rejects_other_kinds():
    fit = ModelFit(
        kind=ModelKind.LOGISTIC,
        params={"K": 1.0, "a": 0.1, "r": -0.1},
        std_errors={"K": 0.1, "a": 0.01, "r": 0.01},
        r2=0.8,
        r2_adj=0.8,
        residual_ss=1.0,
        n=28,
        converged=True,
        iterations=5,
    )
    with pytest.raises(KindError):
        resilience(fit)
