"""Pinhole relations between object distance and on-image size.

Under uniform approach at speed ``v`` from ``D0`` the number of frames
captured while the object is at most ``s`` pixels tall is

    F(s) = (D0 - L*f/s) * eta / v

so per-frame sizes are distributed with density ``eta*L*f / (v*s**2)``.
Large (near) sizes are rare compared with small (far) ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from evasion_sim.stats import RngStream, histogram, l1_distance


class ObjectKind(str, Enum):
    STOP_SIGN = "stop_sign"
    PEDESTRIAN = "pedestrian"


@dataclass(frozen=True)
class CameraModel:
    focal_length_px: float = 1000.0
    capture_rate_hz: float = 20.0
    oos_distance_m: float = 4.0

    def __post_init__(self):
        if self.focal_length_px <= 0:
            raise ValueError(f"focal_length_px must be > 0, got {self.focal_length_px}")
        if self.capture_rate_hz <= 0:
            raise ValueError(f"capture_rate_hz must be > 0, got {self.capture_rate_hz}")
        if self.oos_distance_m < 0:
            raise ValueError(f"oos_distance_m must be >= 0, got {self.oos_distance_m}")

    @property
    def frame_dt(self) -> float:
        return 1.0 / self.capture_rate_hz


@dataclass(frozen=True)
class ObjectSpec:
    kind: ObjectKind = ObjectKind.STOP_SIGN
    physical_size_m: float = 1.5
    lateral_offset_m: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectKind(self.kind))
        if self.physical_size_m <= 0:
            raise ValueError(f"physical_size_m must be > 0, got {self.physical_size_m}")


def focal_length_px(focal_length_mm: float, pixel_pitch_mm: float) -> float:
    """Convert a lens focal length to pixel units given the sensor pixel pitch.

    >>> focal_length_px(25.0, 0.025)
    1000.0
    """
    if focal_length_mm <= 0 or pixel_pitch_mm <= 0:
        raise ValueError("focal length and pixel pitch must be positive")
    return focal_length_mm / pixel_pitch_mm


def size_at_distance(obj: ObjectSpec, cam: CameraModel, distance_m: float) -> float:
    """Pixel size of ``obj`` seen from ``distance_m`` along the travel direction."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return obj.physical_size_m * cam.focal_length_px / distance_m


def distance_at_size(obj: ObjectSpec, cam: CameraModel, pixel_size: float) -> float:
    if pixel_size <= 0:
        raise ValueError(f"pixel size must be positive, got {pixel_size}")
    return obj.physical_size_m * cam.focal_length_px / pixel_size


def frame_count_cdf(obj: ObjectSpec, cam: CameraModel, road_length_m: float, speed_mps: float,
                    pixel_size: float) -> float:
    """Frames accumulated, starting at ``road_length_m``, until the object
    reaches ``pixel_size`` pixels."""
    if speed_mps <= 0:
        raise ValueError(f"speed must be positive, got {speed_mps}")
    s0 = size_at_distance(obj, cam, road_length_m)
    # tolerate round-off at the starting size
    if pixel_size < s0 * (1.0 - 1e-12):
        raise ValueError(f"pixel size {pixel_size} is below the starting size {s0}")
    remaining = max(road_length_m - distance_at_size(obj, cam, pixel_size), 0.0)
    return remaining * cam.capture_rate_hz / speed_mps


def size_pdf(obj: ObjectSpec, cam: CameraModel, speed_mps: float, pixel_size: float) -> float:
    """Frames per pixel of size at ``pixel_size`` (derivative of the CDF)."""
    if speed_mps <= 0 or pixel_size <= 0:
        raise ValueError("speed and pixel size must be positive")
    return cam.capture_rate_hz * obj.physical_size_m * cam.focal_length_px / (speed_mps * pixel_size ** 2)


def uniform_motion_sizes(obj: ObjectSpec, cam: CameraModel, start_m: float, end_m: float,
                         speed_mps: float, phase: float = 0.0) -> list[float]:
    """Per-frame pixel sizes while driving at constant speed from ``start_m``
    toward the object, stopping once it is closer than ``end_m``.

    ``phase`` in [0, 1) shifts the first frame by a fraction of one frame's
    travel; averaging over phases removes the sampling-grid artefact.
    """
    if speed_mps <= 0:
        raise ValueError("speed must be positive")
    step = speed_mps * cam.frame_dt
    sizes = []
    d = start_m - phase * step
    while d >= end_m and d > 0:
        sizes.append(size_at_distance(obj, cam, d))
        d -= step
    return sizes


@dataclass(frozen=True)
class SizeDistribution:
    edges: np.ndarray
    counts: np.ndarray
    analytic_mass: np.ndarray  # expected frames per bin from the CDF
    analytic_pdf: np.ndarray  # density at bin centres
    runs: int

    @property
    def total_frames(self) -> int:
        return int(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2

    def l1(self) -> float:
        return l1_distance(self.counts, self.analytic_mass)


def size_distribution(obj: ObjectSpec, cam: CameraModel, road_length_m: float, speed_mps: float,
                      runs: int = 30, bins: int = 20, seed: int = 0) -> SizeDistribution:
    """Empirical per-frame size histogram over ``runs`` uniform-motion
    approaches (random sub-frame start phase), next to the analytic curve.

    Bins are equal-width in pixels between the sizes at ``road_length_m``
    and at the out-of-sight distance.
    """
    if runs < 1 or bins < 1:
        raise ValueError("runs and bins must be >= 1")
    if road_length_m <= cam.oos_distance_m or road_length_m <= 0:
        raise ValueError(f"road length {road_length_m} m leaves no frames before the object leaves view")
    near = max(cam.oos_distance_m, 1e-6)
    edges = np.linspace(size_at_distance(obj, cam, road_length_m), size_at_distance(obj, cam, near), bins + 1)
    rng = RngStream(seed, 0)
    samples = []
    for _ in range(runs):
        samples += uniform_motion_sizes(obj, cam, road_length_m, near, speed_mps, rng.uniform())
    counts = histogram(samples, edges)
    cdf = np.array([frame_count_cdf(obj, cam, road_length_m, speed_mps, s) for s in edges])
    pdf = np.array([size_pdf(obj, cam, speed_mps, s) for s in (edges[:-1] + edges[1:]) / 2])
    return SizeDistribution(edges, counts, np.diff(cdf) * runs, pdf, runs)
