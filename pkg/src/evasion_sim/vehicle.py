"""Planner, longitudinal PID, Stanley lateral control and the vehicle plant.

All pieces run once per camera frame. The planner only reacts to a
confirmed track: it brakes along a constant-deceleration profile toward
the stop line while the track exists and returns to cruise when the
track is deleted, unless stop latching is enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from evasion_sim.planning import VehiclePlant

STOPPED_SPEED_MPS = 0.1
STOPPED_WINDOW_M = 0.5
STANLEY_SPEED_FLOOR = 0.1


class PlannerMode(str, Enum):
    CRUISE = "cruise"
    STOPPING = "stopping"
    STOPPED = "stopped"


@dataclass(frozen=True)
class PlannerConfig:
    speed_limit_mps: float
    plan_decel_mps2: float = 3.4
    stop_line_offset_m: float = 0.0
    # aim this far short of the line so tracking error does not carry us over it
    stop_margin_m: float = 1.0
    latch_stop: bool = False


@dataclass(frozen=True)
class PlannerState:
    mode: PlannerMode = PlannerMode.CRUISE
    stop_target_m: float | None = None
    target_speed_mps: float = 0.0
    target_accel_mps2: float = 0.0


@dataclass(frozen=True)
class EgoState:
    position_m: float = 0.0
    speed_mps: float = 0.0
    accel_mps2: float = 0.0
    lateral_offset_m: float = 0.0
    heading_error_rad: float = 0.0


@dataclass(frozen=True)
class PidGains:
    kp: float = 1.5
    ki: float = 0.2
    kd: float = 0.0
    integral_limit: float = 2.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd, self.integral_limit) < 0:
            raise ValueError("PID gains must be non-negative")


@dataclass(frozen=True)
class PidMemory:
    integral: float = 0.0
    prev_error: float | None = None


def plan(tracked: bool, track_distance_m: float | None, ego: EgoState, cfg: PlannerConfig,
         prev: PlannerState) -> PlannerState:
    """One planning cycle.

    With a confirmed track the stop line is re-estimated from the track
    distance and the target speed follows ``sqrt(2 * a_plan * d)``, capped
    at the speed limit. Without one the planner cruises, or keeps its last
    stop target when latching is on.
    """
    if tracked and track_distance_m is not None:
        stop_target = ego.position_m + track_distance_m + cfg.stop_line_offset_m
    elif cfg.latch_stop and prev.mode is not PlannerMode.CRUISE:
        stop_target = prev.stop_target_m
    else:
        return PlannerState(PlannerMode.CRUISE, None, cfg.speed_limit_mps, 0.0)

    to_line = stop_target - ego.position_m
    if ego.speed_mps < STOPPED_SPEED_MPS and to_line <= cfg.stop_margin_m + STOPPED_WINDOW_M:
        return PlannerState(PlannerMode.STOPPED, stop_target, 0.0, 0.0)

    remaining = max(to_line - cfg.stop_margin_m, 0.0)
    profile_speed = math.sqrt(2.0 * cfg.plan_decel_mps2 * remaining)
    if profile_speed < cfg.speed_limit_mps:
        return PlannerState(PlannerMode.STOPPING, stop_target, profile_speed, -cfg.plan_decel_mps2)
    return PlannerState(PlannerMode.STOPPING, stop_target, cfg.speed_limit_mps, 0.0)


def pid_step(gains: PidGains, target_mps: float, current_mps: float, dt: float, memory: PidMemory,
             accel_limits: tuple[float, float], feedforward_mps2: float = 0.0) -> tuple[float, PidMemory]:
    """PID on speed error; returns ``(accel_command, new_memory)``.

    ``accel_limits`` is ``(-max_decel, max_accel)``. The integrator is
    clamped to ``integral_limit`` and frozen while the output is saturated
    in the direction the error pushes. ``feedforward_mps2`` carries the
    planner's profile deceleration.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    lo, hi = accel_limits
    error = target_mps - current_mps
    deriv = 0.0 if memory.prev_error is None else (error - memory.prev_error) / dt
    integral = max(-gains.integral_limit, min(gains.integral_limit, memory.integral + error * dt))
    raw = feedforward_mps2 + gains.kp * error + gains.ki * integral + gains.kd * deriv
    if (raw > hi and error > 0) or (raw < lo and error < 0):
        integral = memory.integral
        raw = feedforward_mps2 + gains.kp * error + gains.ki * integral + gains.kd * deriv
    return max(lo, min(hi, raw)), PidMemory(integral, error)


def stanley_step(heading_error_rad: float, cross_track_error_m: float, speed_mps: float, gain_k: float = 1.0,
                 max_steer_rad: float = 0.6) -> float:
    """Stanley steering angle ``heading_error + atan(k * e / v)``.

    Errors are path minus vehicle, so a positive output steers back toward
    the path. Speeds below 0.1 m/s are floored to keep the arctangent finite.
    """
    v = max(speed_mps, STANLEY_SPEED_FLOOR)
    steer = heading_error_rad + math.atan(gain_k * cross_track_error_m / v)
    return max(-max_steer_rad, min(max_steer_rad, steer))


def plant_step(ego: EgoState, accel_command: float, dt: float, plant: VehiclePlant, steer_rad: float = 0.0,
               wheelbase_m: float = 2.8) -> EgoState:
    """Advance the plant by ``dt`` under a constant (clamped) acceleration.

    Travel within the step is integrated exactly. When braking would carry
    the speed below zero, the vehicle stops partway through the step and
    stays stopped; it never reverses.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = max(-plant.max_decel_mps2, min(plant.max_accel_mps2, accel_command))
    v0 = ego.speed_mps
    if v0 <= 0.0 and a <= 0.0:
        a, v1, travel = 0.0, 0.0, 0.0
    elif v0 + a * dt < 0.0:
        t_stop = -v0 / a
        v1, travel = 0.0, v0 * t_stop / 2.0
    else:
        v1 = v0 + a * dt
        travel = (v0 + v1) * dt / 2.0
    # lateral: kinematic bicycle about the straight reference line
    heading = -ego.heading_error_rad + travel / wheelbase_m * math.tan(steer_rad)
    lateral = ego.lateral_offset_m + travel * math.sin(heading)
    return EgoState(ego.position_m + travel, v1, a, lateral, -heading)


def control_step(ego: EgoState, planner: PlannerState, memory: PidMemory, gains: PidGains, plant: VehiclePlant,
                 dt: float, stanley_gain: float = 1.0) -> tuple[EgoState, PidMemory, float]:
    """PID + Stanley + plant for one frame; returns ``(ego, memory, steer)``."""
    accel, memory = pid_step(gains, planner.target_speed_mps, ego.speed_mps, dt, memory,
                             (-plant.max_decel_mps2, plant.max_accel_mps2), planner.target_accel_mps2)
    steer = stanley_step(ego.heading_error_rad, -ego.lateral_offset_m, ego.speed_mps, stanley_gain)
    return plant_step(ego, accel, dt, plant, steer), memory, steer

