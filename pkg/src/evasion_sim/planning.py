"""Attack sampling plans: inverse-square size weights over the system-critical range.

The critical range runs from the distance where even maximum braking can
no longer stop before the line (``d_min``) out to the farthest distance at
which the benign object is still detected (``d_max``). Misdetections
outside it cannot change whether the vehicle stops.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, TextIO

import numpy as np

from evasion_sim.camera import CameraModel, ObjectSpec, size_at_distance
from evasion_sim.errors import ConfigError, InfeasibleError
from evasion_sim.perception import DetectionProfile

DEFAULT_DMAX_THRESHOLD = 0.05


@dataclass(frozen=True)
class VehiclePlant:
    max_decel_mps2: float = 6.0
    comfort_decel_mps2: float = 3.4
    oos_distance_m: float = 4.0
    max_accel_mps2: float = 3.0

    def __post_init__(self):
        if not 0 < self.comfort_decel_mps2 <= self.max_decel_mps2:
            raise ConfigError("need 0 < comfort_decel_mps2 <= max_decel_mps2")
        if self.max_accel_mps2 <= 0:
            raise ConfigError("max_accel_mps2 must be > 0")
        if self.oos_distance_m < 0:
            raise ConfigError("oos_distance_m must be >= 0")


@dataclass(frozen=True)
class SystemCriticalRange:
    d_min_m: float
    d_max_m: float
    s_min_px: float
    s_max_px: float

    def __post_init__(self):
        if not self.d_min_m < self.d_max_m:
            raise ConfigError(f"d_min {self.d_min_m} must be below d_max {self.d_max_m}")
        if not self.s_min_px < self.s_max_px:
            raise ConfigError("s_min must be below s_max")

    @classmethod
    def from_distances(cls, d_min_m: float, d_max_m: float, obj: ObjectSpec, cam: CameraModel):
        return cls(d_min_m, d_max_m, size_at_distance(obj, cam, d_max_m), size_at_distance(obj, cam, d_min_m))


def brake_distance(speed_mps: float, decel_mps2: float) -> float:
    """Stopping distance ``v**2 / (2a)`` under constant deceleration."""
    if decel_mps2 <= 0:
        raise ValueError(f"deceleration must be positive, got {decel_mps2}")
    if speed_mps < 0:
        raise ValueError(f"speed must be non-negative, got {speed_mps}")
    return speed_mps * speed_mps / (2.0 * decel_mps2)


def compute_d_max(benign_profile: DetectionProfile, threshold: float = DEFAULT_DMAX_THRESHOLD) -> float:
    """Far edge of the farthest range whose benign detection rate reaches ``threshold``."""
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    for lo, hi, rate in reversed(benign_profile.ranges):
        if rate >= threshold:
            return hi
    raise ConfigError(f"no range of {benign_profile.label!r} reaches detection rate {threshold}")


def compute_critical_range(plant: VehiclePlant, speed_mps: float, benign_profile: DetectionProfile,
                           obj: ObjectSpec, cam: CameraModel,
                           threshold: float = DEFAULT_DMAX_THRESHOLD) -> SystemCriticalRange:
    d_min = brake_distance(speed_mps, plant.max_decel_mps2)
    d_max = compute_d_max(benign_profile, threshold)
    if d_min >= d_max:
        raise InfeasibleError(
            f"attack infeasible at this speed: brake distance {d_min:.2f} m >= detection horizon {d_max:.2f} m")
    return SystemCriticalRange.from_distances(d_min, d_max, obj, cam)


def s1_weights(pixel_sizes: Sequence[float]) -> np.ndarray:
    """Normalised ``1/s**2`` weights for strictly increasing pixel sizes."""
    sizes = np.asarray(pixel_sizes, dtype=float)
    if sizes.size == 0:
        raise ValueError("need at least one pixel size")
    if np.any(sizes <= 0):
        raise ValueError("pixel sizes must be positive")
    if np.any(np.diff(sizes) <= 0):
        raise ValueError("pixel sizes must be strictly increasing")
    w = 1.0 / sizes ** 2
    return w / w.sum()


@dataclass(frozen=True)
class SamplingPlan:
    entries: tuple[tuple[float, float], ...]
    critical_range: SystemCriticalRange
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.entries])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.entries])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` pixel sizes, e.g. to feed an EoT transformation loop."""
        return rng.choice(self.sizes, size=n, p=self.probabilities)


def build_sampling_plan(critical_range: SystemCriticalRange, n_sizes: int,
                        provenance: dict | None = None) -> SamplingPlan:
    if n_sizes < 1:
        raise ValueError("n_sizes must be >= 1")
    s_lo, s_hi = critical_range.s_min_px, critical_range.s_max_px
    if n_sizes == 1 or math.isclose(s_lo, s_hi):
        entries = ((s_lo, 1.0),)
    else:
        sizes = np.linspace(s_lo, s_hi, n_sizes)
        entries = tuple(zip(sizes.tolist(), s1_weights(sizes).tolist()))
    return SamplingPlan(entries, critical_range, dict(provenance or {}))


def exact_s1_weights(pixel_sizes: Sequence[int | Fraction]) -> list[Fraction]:
    """Rational version of :func:`s1_weights` for integer or fractional sizes."""
    inv = [Fraction(1) / (Fraction(s) ** 2) for s in pixel_sizes]
    total = sum(inv)
    return [x / total for x in inv]


_HEADER_KEYS = ("d_min_m", "d_max_m", "s_min_px", "s_max_px")


def dump_plan(plan: SamplingPlan) -> str:
    """Plan as text: ``# key: value`` header lines then ``pixel_size,probability`` rows."""
    cr = plan.critical_range
    lines = [f"# {k}: {getattr(cr, k)!r}" for k in _HEADER_KEYS]
    lines += [f"# {k}: {v}" for k, v in sorted(plan.provenance.items())]
    lines.append("pixel_size,probability")
    lines += [f"{s!r},{p!r}" for s, p in plan.entries]
    return "\n".join(lines) + "\n"


def load_plan(source: TextIO | str) -> SamplingPlan:
    stream = io.StringIO(source) if isinstance(source, str) else source
    header: dict[str, str] = {}
    entries = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("#").partition(":")
            header[key.strip()] = value.strip()
        elif line != "pixel_size,probability":
            try:
                s, p = (float(x) for x in line.split(","))
            except ValueError:
                raise ConfigError(f"line {lineno}: expected pixel_size,probability") from None
            entries.append((s, p))
    try:
        cr = SystemCriticalRange(*(float(header.pop(k)) for k in _HEADER_KEYS))
    except KeyError as exc:
        raise ConfigError(f"plan header lacks {exc.args[0]}") from None
    return SamplingPlan(tuple(entries), cr, header)


def plan_for(plant: VehiclePlant, speed_mps: float, benign_profile: DetectionProfile, obj: ObjectSpec,
             cam: CameraModel, n_sizes: int, threshold: float = DEFAULT_DMAX_THRESHOLD,
             provenance: dict | None = None) -> SamplingPlan:
    cr = compute_critical_range(plant, speed_mps, benign_profile, obj, cam, threshold)
    prov = {"speed_mps": speed_mps, "benign_profile": benign_profile.label, "d_max_threshold": threshold,
            "n_sizes": n_sizes}
    prov.update(provenance or {})
    return build_sampling_plan(cr, n_sizes, prov)

