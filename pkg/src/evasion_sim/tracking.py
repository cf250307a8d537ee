"""Single-object longitudinal Kalman tracker with an (H, R) lifecycle.

A track is born on the first detection, confirmed after ``H`` consecutive
detections and deleted after ``R`` consecutive misses. Only confirmed
tracks are visible to planning, so short bursts of misdetections are
absorbed by the tracker.

The state is ``[distance, closing_rate]``. Ego speed enters as a known
input, so ``closing_rate`` is the object's own speed toward the ego
vehicle (0 for a fixed sign). The filter runs on plain floats because it
sits inside the per-frame loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from evasion_sim.perception import Detection


class TrackStatus(str, Enum):
    EMPTY = "empty"
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"


@dataclass(frozen=True)
class TrackerParams:
    hits_to_confirm: int = 4
    misses_to_delete: int = 6
    process_noise_std: float = 0.5
    measurement_noise_std_m: float = 0.5
    gate_sigma: float = 3.0
    init_rate_std: float = 1.0

    def __post_init__(self):
        if self.hits_to_confirm < 1 or self.misses_to_delete < 1:
            raise ValueError("hits_to_confirm and misses_to_delete must be >= 1")
        if min(self.process_noise_std, self.measurement_noise_std_m, self.gate_sigma, self.init_rate_std) <= 0:
            raise ValueError("noise parameters and gate must be positive")


@dataclass(frozen=True)
class TrackState:
    status: TrackStatus = TrackStatus.EMPTY
    distance: float = 0.0
    closing_rate: float = 0.0
    # upper triangle of the 2x2 covariance
    p00: float = 1.0
    p01: float = 0.0
    p11: float = 1.0
    consecutive_hits: int = 0
    consecutive_misses: int = 0

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.distance, self.closing_rate])

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p01, self.p11]])


EMPTY_TRACK = TrackState()


def predict(state: TrackState, dt: float, ego_speed_mps: float, params: TrackerParams) -> TrackState:
    """Propagate a constant-velocity model over ``dt`` with ego motion as input."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.status is TrackStatus.EMPTY:
        return state
    q2 = params.process_noise_std ** 2
    dt2 = dt * dt
    p00 = state.p00 - 2.0 * dt * state.p01 + dt2 * state.p11 + q2 * dt2 * dt2 / 4.0
    p01 = state.p01 - dt * state.p11 - q2 * dt2 * dt / 2.0
    p11 = state.p11 + q2 * dt2
    return replace(state, distance=state.distance - (ego_speed_mps + state.closing_rate) * dt,
                   p00=p00, p01=p01, p11=p11)


def _new_track(z: float, params: TrackerParams) -> TrackState:
    status = TrackStatus.CONFIRMED if params.hits_to_confirm <= 1 else TrackStatus.TENTATIVE
    return TrackState(status, z, 0.0, params.measurement_noise_std_m ** 2, 0.0, params.init_rate_std ** 2, 1, 0)


def _miss(state: TrackState, params: TrackerParams) -> TrackState:
    misses = state.consecutive_misses + 1
    if misses >= params.misses_to_delete:
        return EMPTY_TRACK
    return replace(state, consecutive_hits=0, consecutive_misses=misses)


def innovation_gate(state: TrackState, z: float, params: TrackerParams) -> float:
    """Mahalanobis distance of measurement ``z`` from the predicted track."""
    s = state.p00 + params.measurement_noise_std_m ** 2
    return abs(z - state.distance) / s ** 0.5


def update(state: TrackState, detection: Detection, params: TrackerParams, observable: bool = True) -> TrackState:
    """Fold one frame's detection outcome into an already-predicted state.

    ``observable=False`` marks a frame in which the object cannot be in
    the image (closer than the out-of-sight distance); a miss in such a
    frame leaves the lifecycle counters untouched and the track coasts.
    """
    if not detection.detected:
        if state.status is TrackStatus.EMPTY or not observable:
            return state
        return _miss(state, params)

    z = detection.measured_distance_m
    if state.status is TrackStatus.EMPTY:
        return _new_track(z, params)
    if innovation_gate(state, z, params) > params.gate_sigma:
        return _miss(state, params)

    r = params.measurement_noise_std_m ** 2
    y = z - state.distance
    s = state.p00 + r
    k0 = state.p00 / s
    k1 = state.p01 / s
    # (I - K H) P, written out for the symmetric 2x2 case
    p00 = (1.0 - k0) * state.p00
    p01 = (1.0 - k0) * state.p01
    p11 = state.p11 - k1 * state.p01
    hits = state.consecutive_hits + 1
    status = state.status
    if status is TrackStatus.TENTATIVE and hits >= params.hits_to_confirm:
        status = TrackStatus.CONFIRMED
    return TrackState(status, state.distance + k0 * y, state.closing_rate + k1 * y, p00, p01, p11, hits, 0)


def is_tracked(state: TrackState) -> bool:
    return state.status is TrackStatus.CONFIRMED
