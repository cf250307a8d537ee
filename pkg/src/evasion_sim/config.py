"""Scenario files: one ``[scenario]`` section of flat ``key = value`` pairs.

Profile references (``profile``, ``benign_profile``) are either paths,
relative to the scenario file, or names of shipped fixtures such as
``table3_y5_benign``. Unknown keys are rejected so typos do not silently
fall back to defaults.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from evasion_sim import fixtures
from evasion_sim.camera import CameraModel, ObjectSpec
from evasion_sim.errors import ConfigError
from evasion_sim.evaluation import ScenarioConfig, default_object, mph_to_mps
from evasion_sim.perception import DetectionProfile, load_profile
from evasion_sim.planning import DEFAULT_DMAX_THRESHOLD, VehiclePlant
from evasion_sim.tracking import TrackerParams
from evasion_sim.vehicle import PidGains


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


KEYS = {
    # object / camera
    "object_kind": str, "object_size_m": float, "lateral_offset_m": float,
    "focal_length_px": float, "capture_rate_hz": float, "oos_distance_m": float,
    # plant
    "max_decel_mps2": float, "comfort_decel_mps2": float, "max_accel_mps2": float,
    # tracker
    "hits_to_confirm": int, "misses_to_delete": int, "process_noise_std": float,
    "measurement_noise_std_m": float, "gate_sigma": float,
    # controller
    "kp": float, "ki": float, "kd": float, "integral_limit": float, "stanley_gain": float,
    # scenario
    "speeds_mph": _floats, "road_length_m": float, "init_band_m": _floats, "goal": str, "trials": int,
    "base_seed": int, "plan_decel_mps2": float, "stop_line_offset_m": float, "stop_margin_m": float,
    "latch_stop": _bool, "noise_std_m": float, "violation_speed_mps": float,
    "profile": str, "label": str,
    # attack planning
    "benign_profile": str, "d_max_threshold": float, "n_sizes": int,
}


@dataclass
class Scenario:
    """Parsed scenario file; turns into a :class:`ScenarioConfig` once a profile is chosen."""

    values: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def speeds_mps(self) -> list[float]:
        return [mph_to_mps(v) for v in self.values.get("speeds_mph", (25.0, 30.0, 35.0))]

    @property
    def object(self) -> ObjectSpec:
        base = default_object(self.get("object_kind", "stop_sign"))
        return ObjectSpec(base.kind, self.get("object_size_m", base.physical_size_m),
                          self.get("lateral_offset_m", base.lateral_offset_m))

    @property
    def camera(self) -> CameraModel:
        return CameraModel(self.get("focal_length_px", 1000.0), self.get("capture_rate_hz", 20.0),
                           self.get("oos_distance_m", 4.0))

    @property
    def plant(self) -> VehiclePlant:
        return VehiclePlant(self.get("max_decel_mps2", 6.0), self.get("comfort_decel_mps2", 3.4),
                            self.get("oos_distance_m", 4.0), self.get("max_accel_mps2", 3.0))

    @property
    def tracker(self) -> TrackerParams:
        d = TrackerParams()
        return TrackerParams(self.get("hits_to_confirm", d.hits_to_confirm),
                             self.get("misses_to_delete", d.misses_to_delete),
                             self.get("process_noise_std", d.process_noise_std),
                             self.get("measurement_noise_std_m", d.measurement_noise_std_m),
                             self.get("gate_sigma", d.gate_sigma))

    @property
    def d_max_threshold(self) -> float:
        return self.get("d_max_threshold", DEFAULT_DMAX_THRESHOLD)

    def resolve_profile(self, ref: str, base_dir: Path | str | None = None) -> DetectionProfile:
        """Resolve ``ref`` against ``base_dir`` (default: the scenario file's directory)."""
        return resolve_profile(ref, self.base_dir if base_dir is None else base_dir)

    def to_config(self, profile: DetectionProfile | None = None, **overrides) -> ScenarioConfig:
        if profile is None:
            ref = self.get("profile")
            if ref is None:
                raise ConfigError("no detection profile given (scenario key 'profile' or --profile)")
            profile = self.resolve_profile(ref)
        speeds = self.speeds_mps
        kwargs = dict(
            profile=profile, speed_limit_mps=speeds[0], object=self.object, camera=self.camera,
            plant=self.plant, tracker=self.tracker,
            pid=PidGains(self.get("kp", 1.5), self.get("ki", 0.2), self.get("kd", 0.0),
                         self.get("integral_limit", 2.0)),
        )
        for key in ("road_length_m", "goal", "trials", "base_seed", "plan_decel_mps2", "stop_line_offset_m",
                    "stop_margin_m", "latch_stop", "noise_std_m", "violation_speed_mps", "stanley_gain",
                    "label"):
            if key in self.values:
                kwargs[key] = self.values[key]
        if "init_band_m" in self.values:
            band = self.values["init_band_m"]
            if len(band) != 2:
                raise ConfigError("init_band_m needs two numbers")
            kwargs["init_band_m"] = band
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return ScenarioConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def resolve_profile(ref: str, base_dir: Path | str = ".") -> DetectionProfile:
    """Load a profile from ``ref``: an existing path, or a shipped fixture name."""
    path = Path(ref)
    if not path.is_absolute():
        path = Path(base_dir) / path
    if path.exists():
        return load_profile(path)
    if os.sep in ref or ref.endswith(".csv"):
        raise FileNotFoundError(ref)
    try:
        return fixtures.profile(ref)
    except KeyError:
        raise FileNotFoundError(f"no profile file or fixture named {ref!r}") from None


def parse_scenario(text: str, base_dir: Path | str = ".") -> Scenario:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"scenario parse error: {exc}") from None
    if not parser.has_section("scenario"):
        raise ConfigError("scenario file needs a [scenario] section")
    values = {}
    for key, raw in parser.items("scenario"):
        if key not in KEYS:
            raise ConfigError(f"unknown scenario key {key!r}")
        try:
            values[key] = KEYS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return Scenario(values, Path(base_dir))


def load_scenario(path: str | os.PathLike) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), path.parent)
