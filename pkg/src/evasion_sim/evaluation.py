"""Monte Carlo trial runner, violation metrics and significance testing."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

from evasion_sim.camera import CameraModel, ObjectKind, ObjectSpec
from evasion_sim.errors import ConfigError
from evasion_sim.perception import DetectionProfile, sample_detection
from evasion_sim.planning import VehiclePlant
from evasion_sim.stats import STREAM_DETECT, STREAM_INIT, RngStream, normal_cdf
from evasion_sim.tracking import EMPTY_TRACK, TrackerParams, TrackStatus, is_tracked, predict, update
from evasion_sim.vehicle import EgoState, PidGains, PidMemory, PlannerConfig, PlannerState, control_step, plan

MPH = 0.44704
MAX_SIM_TIME_S = 60.0
OVERRUN_M = 5.0


def mph_to_mps(mph: float) -> float:
    return mph * MPH


def mps_to_mph(mps: float) -> float:
    return mps / MPH


class Goal(str, Enum):
    STOP_LINE_VIOLATION = "stop_line_violation"
    PEDESTRIAN_COLLISION = "pedestrian_collision"


@dataclass(frozen=True)
class ScenarioConfig:
    profile: DetectionProfile
    speed_limit_mps: float
    object: ObjectSpec = field(default_factory=ObjectSpec)
    camera: CameraModel = field(default_factory=CameraModel)
    plant: VehiclePlant = field(default_factory=VehiclePlant)
    tracker: TrackerParams = field(default_factory=TrackerParams)
    pid: PidGains = field(default_factory=PidGains)
    road_length_m: float = 45.0
    init_band_m: tuple[float, float] = (46.0, 55.0)
    goal: Goal = Goal.STOP_LINE_VIOLATION
    trials: int = 100
    base_seed: int = 0
    plan_decel_mps2: float | None = None
    stop_line_offset_m: float = 0.0
    stop_margin_m: float = 1.0
    latch_stop: bool = False
    noise_std_m: float = 0.5
    violation_speed_mps: float = 0.5
    stanley_gain: float = 1.0
    initial_lateral_m: float = 0.0
    record_trajectory: bool = False
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "goal", Goal(self.goal))
        object.__setattr__(self, "init_band_m", tuple(float(x) for x in self.init_band_m))
        self.validate()

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.speed_limit_mps <= 0:
            raise ConfigError("speed limit must be positive")
        lo, hi = self.init_band_m
        if lo < 0 or hi < lo:
            raise ConfigError(f"bad initial position band {self.init_band_m}")
        if not math.isclose(self.plant.oos_distance_m, self.camera.oos_distance_m):
            raise ConfigError("plant and camera disagree on the out-of-sight distance")
        sensing = max((h for _, h, r in self.profile.ranges if r > 0), default=0.0)
        if self.road_length_m < sensing:
            raise ConfigError(f"road length {self.road_length_m} m is shorter than the sensing range {sensing} m")
        if self.plan_decel > self.plant.max_decel_mps2:
            raise ConfigError("planning deceleration exceeds the plant maximum")
        if self.noise_std_m < 0:
            raise ConfigError("noise_std_m must be >= 0")

    @property
    def plan_decel(self) -> float:
        return self.plant.comfort_decel_mps2 if self.plan_decel_mps2 is None else self.plan_decel_mps2

    @property
    def planner(self) -> PlannerConfig:
        return PlannerConfig(self.speed_limit_mps, self.plan_decel, self.stop_line_offset_m, self.stop_margin_m,
                             self.latch_stop)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TrialResult:
    violated: bool
    min_distance_to_line_m: float
    final_speed_at_line_mps: float | None
    track_confirm_frame: int | None
    track_delete_frames: tuple[int, ...]
    start_distance_m: float
    frames: int
    trajectory: tuple[tuple[float, float, float, bool], ...] | None = None


def _crossing_speed(v0: float, a: float, gap: float) -> float:
    # speed when covering ``gap`` metres from speed v0 at constant accel a
    return math.sqrt(max(v0 * v0 + 2.0 * a * gap, 0.0))


def run_trial(cfg: ScenarioConfig, seed: int) -> TrialResult:
    """Run one closed-loop approach. Deterministic in ``(cfg, seed)``.

    Per frame: ground truth -> keep/drop detection -> tracker predict and
    update -> planner -> PID/Stanley -> plant. The run ends when the
    vehicle stops, when it passes the line (or object) too fast, or once
    it is well past it.
    """
    init_rng = RngStream(seed, STREAM_INIT)
    det_rng = RngStream(seed, STREAM_DETECT)
    start = init_rng.uniform_range(*cfg.init_band_m)
    dt = cfg.camera.frame_dt
    pcfg = cfg.planner
    tparams = cfg.tracker
    collision = cfg.goal is Goal.PEDESTRIAN_COLLISION
    object_x = start
    # the pedestrian itself is the line that must not be reached
    line_x = object_x if collision else object_x + cfg.stop_line_offset_m
    threshold = 0.0 if collision else cfg.violation_speed_mps
    oos = cfg.camera.oos_distance_m

    ego = EgoState(0.0, cfg.speed_limit_mps, 0.0, cfg.initial_lateral_m, 0.0)
    track = EMPTY_TRACK
    planner = PlannerState(target_speed_mps=cfg.speed_limit_mps)
    memory = PidMemory()
    confirm_frame = None
    deletes: list[int] = []
    traj = [] if cfg.record_trajectory else None
    min_gap = line_x - ego.position_m
    crossing_speed = None
    violated = False
    max_frames = int(MAX_SIM_TIME_S / dt)

    frame = 0
    for frame in range(max_frames):
        true_d = object_x - ego.position_m
        if frame:
            track = predict(track, dt, ego.speed_mps, tparams)
        det = sample_detection(cfg.profile, true_d, cfg.camera, det_rng, cfg.noise_std_m, frame)
        observable = track.status is TrackStatus.EMPTY or track.distance >= oos
        was_confirmed = is_tracked(track)
        track = update(track, det, tparams, observable)
        tracked = is_tracked(track)
        if tracked and confirm_frame is None:
            confirm_frame = frame
        if was_confirmed and track.status is TrackStatus.EMPTY:
            deletes.append(frame)
        planner = plan(tracked, track.distance if tracked else None, ego, pcfg, planner)
        prev = ego
        ego, memory, _ = control_step(ego, planner, memory, cfg.pid, cfg.plant, dt, cfg.stanley_gain)
        if traj is not None:
            traj.append((round((frame + 1) * dt, 10), ego.position_m, ego.speed_mps, tracked))

        gap = line_x - ego.position_m
        min_gap = min(min_gap, gap)
        if crossing_speed is None and gap < 0.0 <= line_x - prev.position_m:
            crossing_speed = _crossing_speed(prev.speed_mps, ego.accel_mps2, line_x - prev.position_m)
            if crossing_speed > threshold:
                violated = True
                break
        if ego.speed_mps <= 0.0 or gap < -OVERRUN_M:
            break
    return TrialResult(violated, min_gap, crossing_speed, confirm_frame, tuple(deletes), start, frame + 1,
                       tuple(traj) if traj is not None else None)


@dataclass(frozen=True)
class SpeedResult:
    speed_mps: float
    violations: int
    trials: int
    p_value: float | None = None

    @property
    def rate(self) -> float:
        return self.violations / self.trials

    @property
    def speed_mph(self) -> float:
        return mps_to_mph(self.speed_mps)


@dataclass(frozen=True)
class EvaluationReport:
    label: str
    goal: Goal
    rows: tuple[SpeedResult, ...]
    base_seed: int = 0
    trials_by_speed: Mapping[float, tuple[TrialResult, ...]] = field(default_factory=dict, compare=False,
                                                                     repr=False)

    def row(self, speed_mps: float) -> SpeedResult:
        for r in self.rows:
            if math.isclose(r.speed_mps, speed_mps, abs_tol=1e-9):
                return r
        raise KeyError(speed_mps)

    def rate(self, speed_mps: float) -> float:
        return self.row(speed_mps).rate

    def violated_seeds(self, speed_mps: float) -> set[int]:
        results = self.trials_by_speed[_speed_key(speed_mps)]
        return {self.base_seed + i for i, r in enumerate(results) if r.violated}


def _speed_key(speed_mps: float) -> float:
    return round(speed_mps, 9)


def _trial_job(args):
    cfg, seed = args
    return run_trial(cfg, seed)


def _run_trials(cfg: ScenarioConfig, workers: int) -> tuple[TrialResult, ...]:
    seeds = [cfg.base_seed + i for i in range(cfg.trials)]
    if workers <= 1 or cfg.trials < 2:
        return tuple(run_trial(cfg, s) for s in seeds)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output is worker-count independent
        return tuple(pool.map(_trial_job, [(cfg, s) for s in seeds], chunksize=max(1, cfg.trials // (4 * workers))))


def run_eval(cfg: ScenarioConfig, speeds_mps: Sequence[float] | None = None, workers: int = 1,
             label: str | None = None) -> EvaluationReport:
    """Run ``cfg.trials`` trials (seeds ``base_seed + i``) at each speed."""
    speeds = list(speeds_mps) if speeds_mps else [cfg.speed_limit_mps]
    rows = []
    by_speed = {}
    for v in speeds:
        results = _run_trials(cfg.with_(speed_limit_mps=v), workers)
        by_speed[_speed_key(v)] = results
        rows.append(SpeedResult(v, sum(r.violated for r in results), len(results)))
    return EvaluationReport(label or cfg.label or cfg.profile.label, cfg.goal, tuple(rows), cfg.base_seed, by_speed)


def two_proportion_z(baseline: tuple[int, int], treatment: tuple[int, int]) -> float:
    """Two-sided p-value of the pooled two-proportion z-test.

    >>> round(two_proportion_z((0, 30), (3, 30)), 4)
    0.0755
    """
    x1, n1 = baseline
    x2, n2 = treatment
    if n1 < 1 or n2 < 1:
        raise ValueError("each group needs at least one trial")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValueError("successes must lie in [0, trials]")
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if var == 0.0 or p1 == p2:
        return 1.0
    z = abs(p2 - p1) / math.sqrt(var)
    return min(1.0, 2.0 * (1.0 - normal_cdf(z)))


def fisher_exact_p(baseline: tuple[int, int], treatment: tuple[int, int]) -> float:
    """Two-sided Fisher exact p-value, offered as a small-sample alternative."""
    from scipy.stats import fisher_exact

    x1, n1 = baseline
    x2, n2 = treatment
    return float(fisher_exact([[x1, n1 - x1], [x2, n2 - x2]]).pvalue)


SIGNIFICANCE_TESTS = {"z": two_proportion_z, "fisher": fisher_exact_p}


def compare(baseline: EvaluationReport, treatment: EvaluationReport, test: str = "z") -> EvaluationReport:
    """Copy of ``treatment`` with per-speed p-values against ``baseline``."""
    fn = SIGNIFICANCE_TESTS[test]
    base_speeds = [_speed_key(r.speed_mps) for r in baseline.rows]
    if base_speeds != [_speed_key(r.speed_mps) for r in treatment.rows]:
        raise ConfigError("reports cover different speeds")
    rows = tuple(replace(t, p_value=fn((b.violations, b.trials), (t.violations, t.trials)))
                 for b, t in zip(baseline.rows, treatment.rows))
    return replace(treatment, rows=rows)


def ablation_matrix(profiles: Mapping[str, DetectionProfile], base: ScenarioConfig, speeds_mps: Sequence[float],
                    baseline_label: str = "original", workers: int = 1,
                    test: str = "z") -> dict[str, EvaluationReport]:
    """Evaluate each labelled profile under common random numbers.

    Every profile reuses the same seeds, so trial ``i`` sees the same
    start position and per-frame uniforms under each label. Reports for
    non-baseline labels carry p-values against ``baseline_label``.
    """
    if not speeds_mps:
        raise ConfigError("no speeds given")
    reports = {label: run_eval(base.with_(profile=prof, label=label), speeds_mps, workers, label)
               for label, prof in profiles.items()}
    if baseline_label in reports:
        ref = reports[baseline_label]
        for label in reports:
            if label != baseline_label:
                reports[label] = compare(ref, reports[label], test)
    return reports


def default_object(kind: ObjectKind | str) -> ObjectSpec:
    kind = ObjectKind(kind)
    if kind is ObjectKind.PEDESTRIAN:
        return ObjectSpec(kind, 1.7, 0.0)
    return ObjectSpec(kind, 1.5, 3.0)
