"""Per-range detection profiles and stochastic detection injection.

Profile files are comma-separated ``lo_m,hi_m,rate`` rows. Lines starting
with ``#`` are comments, except two directives::

    # label: Y5 FTE original
    # column: asr        (rates are attack success rates; stored as 1 - asr)
"""

from __future__ import annotations

import bisect
import csv
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from evasion_sim.camera import CameraModel
from evasion_sim.errors import ConfigError
from evasion_sim.stats import RngStream

_EPS = 1e-9


@dataclass(frozen=True)
class DetectionProfile:
    label: str
    ranges: tuple[tuple[float, float, float], ...]
    _los: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ranges = tuple((float(lo), float(hi), float(r)) for lo, hi, r in self.ranges)
        if not ranges:
            raise ConfigError("no ranges")
        for i, (lo, hi, rate) in enumerate(ranges):
            if not lo < hi:
                raise ConfigError(f"range {i + 1}: lo {lo} must be below hi {hi}")
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"range {i + 1}: rate {rate} outside [0, 1]")
            if i:
                prev_hi = ranges[i - 1][1]
                if lo < prev_hi - _EPS:
                    raise ConfigError(f"range {i + 1}: overlaps previous range ending at {prev_hi}")
                if lo > prev_hi + _EPS:
                    raise ConfigError(f"range {i + 1}: gap after previous range ending at {prev_hi}")
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "_los", tuple(r[0] for r in ranges))

    @property
    def lo(self) -> float:
        return self.ranges[0][0]

    @property
    def hi(self) -> float:
        return self.ranges[-1][1]

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(r for _, _, r in self.ranges)

    def rate_at(self, distance_m: float) -> float:
        return rate_at(self, distance_m)

    def dominated_by(self, other: "DetectionProfile") -> bool:
        """True if every range rate here is <= the matching rate in ``other``."""
        if [r[:2] for r in self.ranges] != [r[:2] for r in other.ranges]:
            return False
        return all(a <= b for a, b in zip(self.rates, other.rates))


def rate_at(profile: DetectionProfile, distance_m: float) -> float:
    """Detection rate of the half-open range ``[lo, hi)`` enclosing the distance; 0 outside."""
    i = bisect.bisect_right(profile._los, distance_m) - 1
    if i < 0:
        return 0.0
    lo, hi, rate = profile.ranges[i]
    return rate if distance_m < hi else 0.0


def _parse_rows(lines: Iterable[str]) -> tuple[list[tuple[float, float, float]], dict[str, str]]:
    rows = []
    meta: dict[str, str] = {}
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or not "".join(row).strip():
            continue
        first = row[0].strip()
        if first.startswith("#"):
            text = ",".join(row).lstrip("#").strip()
            key, sep, value = text.partition(":")
            if sep and key.strip() in ("label", "column"):
                meta[key.strip()] = value.strip()
            continue
        if first.lower() == "lo_m":
            continue
        if len(row) != 3:
            raise ConfigError(f"row {lineno}: expected 3 fields (lo_m,hi_m,rate), got {len(row)}")
        try:
            lo, hi, rate = (float(x) for x in row)
        except ValueError:
            raise ConfigError(f"row {lineno}: non-numeric field in {row!r}") from None
        if not 0.0 <= rate <= 1.0:
            raise ConfigError(f"row {lineno}: rate {rate} outside [0, 1]")
        if rows and lo < rows[-1][1] - _EPS:
            raise ConfigError(f"row {lineno}: range {lo}-{hi} overlaps previous range")
        if rows and lo > rows[-1][1] + _EPS:
            raise ConfigError(f"row {lineno}: gap between {rows[-1][1]} and {lo}")
        if not lo < hi:
            raise ConfigError(f"row {lineno}: lo {lo} must be below hi {hi}")
        rows.append((lo, hi, rate))
    return rows, meta


def load_profile(source: TextIO | str | os.PathLike, label: str | None = None) -> DetectionProfile:
    """Read a profile from an open text stream or a file path."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            rows, meta = _parse_rows(fh)
        default_label = os.path.splitext(os.path.basename(os.fspath(source)))[0]
    else:
        rows, meta = _parse_rows(source)
        default_label = "profile"
    if not rows:
        raise ConfigError("no ranges")
    label = label or meta.get("label", default_label)
    column = meta.get("column", "detection")
    if column == "asr":
        return asr_to_profile(rows, label=label)
    if column != "detection":
        raise ConfigError(f"unknown column kind {column!r}")
    return DetectionProfile(label, tuple(rows))


def loads_profile(text: str, label: str | None = None) -> DetectionProfile:
    return load_profile(io.StringIO(text), label=label)


def asr_to_profile(asr_rows: Sequence[tuple[float, float, float]], label: str = "profile") -> DetectionProfile:
    """Detection profile from per-range attack success rates (detection = 1 - ASR)."""
    rows = []
    for i, (lo, hi, asr) in enumerate(asr_rows, start=1):
        if not 0.0 <= asr <= 1.0:
            raise ConfigError(f"row {i}: attack success rate {asr} outside [0, 1]")
        # rounded so that e.g. 1 - 0.418 prints back as 0.582
        rows.append((lo, hi, round(1.0 - asr, 12)))
    return DetectionProfile(label, tuple(rows))


def dump_profile(profile: DetectionProfile) -> str:
    out = [f"# label: {profile.label}", "lo_m,hi_m,rate"]
    out += [f"{lo:g},{hi:g},{rate!r}" for lo, hi, rate in profile.ranges]
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Detection:
    detected: bool
    frame_index: int
    measured_distance_m: float | None = None

    def __post_init__(self):
        if self.detected and not (self.measured_distance_m and self.measured_distance_m > 0):
            raise ValueError("a detection needs a positive measured distance")


def sample_detection(profile: DetectionProfile, true_distance_m: float, cam: CameraModel, rng: RngStream,
                     noise_std_m: float = 0.5, frame_index: int = 0) -> Detection:
    """Keep or drop the ground-truth detection for one frame.

    Exactly three uniforms are consumed per call (one for the keep/drop
    decision, two for the noise) whether or not the object is detected, so
    runs under different profiles stay aligned on a shared stream.
    """
    u = rng.uniform()
    noise = rng.normal(0.0, noise_std_m)
    if true_distance_m < cam.oos_distance_m or not u < rate_at(profile, true_distance_m):
        return Detection(False, frame_index)
    return Detection(True, frame_index, max(true_distance_m + noise, 1e-3))
