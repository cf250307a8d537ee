import math

import pytest
from hypothesis import given, strategies as st

from evasion_sim.evaluation import mph_to_mps
from evasion_sim.planning import VehiclePlant, brake_distance
from evasion_sim.vehicle import (EgoState, PidGains, PidMemory, PlannerConfig, PlannerMode, PlannerState,
                                 control_step, pid_step, plan, plant_step, stanley_step)

PLANT = VehiclePlant()
DT = 0.05
LIMITS = (-PLANT.max_decel_mps2, PLANT.max_accel_mps2)


def test_plan_cruise_without_track():
    cfg = PlannerConfig(11.18)
    out = plan(False, None, EgoState(0.0, 11.18), cfg, PlannerState())
    assert out.mode is PlannerMode.CRUISE and out.target_speed_mps == 11.18


def test_plan_holds_speed_limit_when_profile_above_it():
    cfg = PlannerConfig(11.18, stop_margin_m=0.0)
    out = plan(True, 30.0, EgoState(0.0, 11.18), cfg, PlannerState())
    assert math.sqrt(2 * 3.4 * 30) == pytest.approx(14.28, abs=0.01)
    assert out.mode is PlannerMode.STOPPING
    assert out.target_speed_mps == 11.18 and out.stop_target_m == 30.0


def test_plan_follows_profile_when_close():
    cfg = PlannerConfig(15.0, stop_margin_m=1.0)
    out = plan(True, 11.0, EgoState(5.0, 10.0), cfg, PlannerState())
    assert out.target_speed_mps == pytest.approx(math.sqrt(2 * 3.4 * 10.0))
    assert out.target_accel_mps2 == -3.4


def test_plan_reverts_without_latch_and_keeps_target_with_latch():
    stopping = PlannerState(PlannerMode.STOPPING, 40.0, 5.0, -3.4)
    ego = EgoState(30.0, 5.0)
    assert plan(False, None, ego, PlannerConfig(15.0), stopping).mode is PlannerMode.CRUISE
    latched = plan(False, None, ego, PlannerConfig(15.0, latch_stop=True), stopping)
    assert latched.mode is PlannerMode.STOPPING and latched.stop_target_m == 40.0


def test_plan_stopped_near_line():
    out = plan(True, 1.2, EgoState(10.0, 0.05), PlannerConfig(15.0), PlannerState())
    assert out.mode is PlannerMode.STOPPED and out.target_speed_mps == 0.0


def test_pid_basic_cases():
    g = PidGains(1.5, 0.0, 0.0)
    assert pid_step(PidGains(), 5.0, 5.0, DT, PidMemory(), LIMITS)[0] == 0.0
    assert pid_step(g, 6.0, 5.0, DT, PidMemory(), LIMITS)[0] == pytest.approx(1.5)
    assert pid_step(g, 0.0, 20.0, DT, PidMemory(), LIMITS)[0] == -6.0
    with pytest.raises(ValueError):
        pid_step(g, 1.0, 0.0, 0.0, PidMemory(), LIMITS)
    with pytest.raises(ValueError):
        PidGains(kp=-1.0)


def test_pid_anti_windup():
    mem = PidMemory()
    for _ in range(1000):
        _, mem = pid_step(PidGains(), 30.0, 0.0, DT, mem, LIMITS)
    assert abs(mem.integral) <= PidGains().integral_limit


def test_pid_step_response_settles_within_5s():
    ego, mem = EgoState(0.0, 0.0), PidMemory()
    settled_at = None
    for k in range(400):
        cmd, mem = pid_step(PidGains(), 10.0, ego.speed_mps, DT, mem, LIMITS)
        ego = plant_step(ego, cmd, DT, PLANT)
        inside = abs(ego.speed_mps - 10.0) <= 0.2
        if inside and settled_at is None:
            settled_at = (k + 1) * DT
        elif not inside:
            settled_at = None
    assert settled_at is not None and settled_at < 5.0


def test_stanley_cases():
    assert stanley_step(0.0, 0.0, 10.0) == 0.0
    assert stanley_step(0.0, 0.4, 10.0) == pytest.approx(-stanley_step(0.0, -0.4, 10.0))
    assert stanley_step(0.0, 0.4, 0.0) == pytest.approx(0.6)  # speed floor then steering clamp
    assert stanley_step(0.1, 0.0, 5.0) == pytest.approx(0.1)


def test_plant_step_examples():
    out = plant_step(EgoState(0.0, 10.0), -6.0, DT, PLANT)
    assert out.speed_mps == pytest.approx(9.7)
    # exact constant-acceleration travel (v0 + v1) / 2 * dt
    assert out.position_m == pytest.approx(0.4925)
    still = plant_step(EgoState(3.0, 0.0), -6.0, DT, PLANT)
    assert still.speed_mps == 0.0 and still.position_m == 3.0
    assert plant_step(EgoState(0.0, 10.0), -50.0, DT, PLANT).accel_mps2 == -6.0


@given(st.floats(0, 30), st.floats(-20, 20))
def test_plant_speed_non_negative(v, a):
    out = plant_step(EgoState(0.0, v), a, DT, PLANT)
    assert out.speed_mps >= 0.0
    assert out.accel_mps2 >= -PLANT.max_decel_mps2
    assert out.position_m >= 0.0


@pytest.mark.parametrize("mph", [25, 30, 35])
def test_full_brake_matches_closed_form(mph):
    v = mph_to_mps(mph)
    ego = EgoState(0.0, v)
    while ego.speed_mps > 0:
        ego = plant_step(ego, -6.0, DT, PLANT)
    assert ego.position_m == pytest.approx(brake_distance(v, 6.0), abs=0.1)


def test_full_brake_30mph_anchor():
    ego = EgoState(0.0, 13.411)
    while ego.speed_mps > 0:
        ego = plant_step(ego, -6.0, DT, PLANT)
    assert ego.position_m == pytest.approx(14.99, abs=0.1)


def test_straight_road_cross_track_stays_small():
    ego, mem = EgoState(0.0, 15.0, lateral_offset_m=0.0), PidMemory()
    state = PlannerState(PlannerMode.CRUISE, None, 15.0)
    worst = 0.0
    for _ in range(400):
        ego, mem, _ = control_step(ego, state, mem, PidGains(), PLANT, DT)
        worst = max(worst, abs(ego.lateral_offset_m))
    assert worst < 0.05


def test_stanley_recovers_from_offset():
    ego, mem = EgoState(0.0, 10.0, lateral_offset_m=0.5), PidMemory()
    state = PlannerState(PlannerMode.CRUISE, None, 10.0)
    for _ in range(200):
        ego, mem, _ = control_step(ego, state, mem, PidGains(), PLANT, DT)
    assert abs(ego.lateral_offset_m) < 0.05


@pytest.mark.parametrize("mph", [25, 30, 35])
def test_stopping_profile_stops_before_line(mph):
    # stopping continuously from a distance the comfort profile can cover
    v = mph_to_mps(mph)
    line = brake_distance(v, 3.4) + 2.0
    cfg = PlannerConfig(v)
    ego, mem, state = EgoState(0.0, v), PidMemory(), PlannerState()
    for _ in range(2000):
        state = plan(True, line - ego.position_m, ego, cfg, state)
        ego, mem, _ = control_step(ego, state, mem, PidGains(), PLANT, DT)
        if ego.speed_mps == 0.0:
            break
    assert ego.speed_mps == 0.0
    assert ego.position_m <= line + v * DT
