"""Closed-loop simulation of object-evasion attacks on a driving pipeline.

The package couples per-range detection profiles with a Kalman tracker,
a stop-line planner and a longitudinal plant, and provides the size
weighting / critical-range math used to plan attack sampling.
"""

from evasion_sim.camera import CameraModel, ObjectSpec, distance_at_size, size_at_distance
from evasion_sim.perception import DetectionProfile, load_profile
from evasion_sim.planning import SamplingPlan, SystemCriticalRange, VehiclePlant

__all__ = [
    "CameraModel",
    "DetectionProfile",
    "ObjectSpec",
    "SamplingPlan",
    "SystemCriticalRange",
    "VehiclePlant",
    "distance_at_size",
    "load_profile",
    "size_at_distance",
]

__version__ = "0.1.0"
