"""Condition sweeps of the controllable testing protocol.

Counts per kind: pitch 30, yaw 30, lighting 20, mixture 108; the 2D kinds
draw ``count_2d`` warps at the neutral pose.
"""

from __future__ import annotations

from typing import List, Tuple

from facesim.renderer import sample_transform2d
from facesim.utils.seeding import make_rng
from facesim.utils.types import Condition, Lighting, ProtocolSpec, Viewpoint

# Integer degrees in [-15, 15] without the neutral angle.
SWEEP_ANGLES: Tuple[float, ...] = tuple(float(angle) for angle in range(-15, 16) if angle != 0)
# Interval 6 from -60; the +60 endpoint is dropped to keep 20 entries.
LIGHTING_AZIMUTHS: Tuple[float, ...] = tuple(float(azimuth) for azimuth in range(-60, 60, 6))
MIXTURE_ANGLES: Tuple[float, ...] = (-15.0, -9.0, -3.0, 3.0, 9.0, 15.0)
MIXTURE_AZIMUTHS: Tuple[float, ...] = (-40.0, 0.0, 40.0)

EXPECTED_COUNTS = {"pitch": 30, "yaw": 30, "lighting": 20, "mixture": 108}


def _draw_2d(spec: ProtocolSpec) -> List[Condition]:
    rng = make_rng(spec.rng_seed, f"protocol/{spec.kind}")
    conditions = []
    for _ in range(spec.count_2d):
        sigma = float(rng.uniform(0.0, spec.sigma_max))
        if spec.kind == "rotation2d":
            transforms = (sample_transform2d(sigma, rng, "rotation"),)
        elif spec.kind == "projective2d":
            transforms = (sample_transform2d(sigma, rng, "projective"),)
        else:
            transforms = (sample_transform2d(sigma, rng, "rotation"), sample_transform2d(sigma, rng, "projective"))
        conditions.append(Condition(transforms=transforms))
    return conditions


def enumerate_conditions(spec: ProtocolSpec) -> List[Condition]:
    """Ordered condition list for ``spec``; mixture is pitch-major, then yaw, then lighting."""
    if spec.kind == "pitch":
        return [Condition(viewpoint=Viewpoint(0.0, angle)) for angle in SWEEP_ANGLES]
    if spec.kind == "yaw":
        return [Condition(viewpoint=Viewpoint(angle, 0.0)) for angle in SWEEP_ANGLES]
    if spec.kind == "lighting":
        return [Condition(lighting=Lighting(azimuth_deg=azimuth)) for azimuth in LIGHTING_AZIMUTHS]
    if spec.kind == "mixture":
        return [
            Condition(viewpoint=Viewpoint(yaw, pitch), lighting=Lighting(azimuth_deg=azimuth))
            for pitch in MIXTURE_ANGLES
            for yaw in MIXTURE_ANGLES
            for azimuth in MIXTURE_AZIMUTHS
        ]
    if spec.kind in {"rotation2d", "projective2d", "mixture2d"}:
        return _draw_2d(spec)
    raise ValueError(f"unknown protocol kind '{spec.kind}'")
