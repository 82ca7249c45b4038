"""Candidate condition sets the attacks optimize over.

The default 3D set covers the evaluation ranges with 20 conditions: the pose
grid yaw {-15, -5, 0, 5, 15} x pitch {-15, 0, 15} without the neutral pose
(14 entries, pitch-major) followed by six lighting azimuths
{-60, -36, -12, 12, 36, 60} at the neutral pose.
"""

from __future__ import annotations

from typing import List

import numpy as np

from facesim.renderer import sample_transform2d
from facesim.utils.seeding import make_rng
from facesim.utils.types import AttackConfig, CandidateSet, Condition, Lighting, Viewpoint

GRID_YAWS = (-15.0, -5.0, 0.0, 5.0, 15.0)
GRID_PITCHES = (-15.0, 0.0, 15.0)
GRID_AZIMUTHS = (-60.0, -36.0, -12.0, 12.0, 36.0, 60.0)
EOT_SIGMA_MAX = 0.1


def _stratified_grid() -> List[Condition]:
    poses = [
        Condition(viewpoint=Viewpoint(yaw, pitch))
        for pitch in GRID_PITCHES
        for yaw in GRID_YAWS
        if (yaw, pitch) != (0.0, 0.0)
    ]
    lights = [Condition(lighting=Lighting(azimuth_deg=azimuth)) for azimuth in GRID_AZIMUTHS]
    return poses + lights


def stratified_candidates(count: int = 20) -> CandidateSet:
    grid = _stratified_grid()
    if not 1 <= count <= len(grid):
        raise ValueError(f"candidate count must lie in [1, {len(grid)}], got {count}")
    picks = [(index * len(grid)) // count for index in range(count)]
    return CandidateSet(conditions=tuple(grid[index] for index in picks))


def neutral_candidates() -> CandidateSet:
    return CandidateSet(conditions=(Condition(),))


def eot_candidates(count: int, rng: np.random.Generator, sigma_max: float = EOT_SIGMA_MAX) -> CandidateSet:
    """Neutral 3D condition with fixed 2D warps (rotation then projective), sigma ~ U(0, sigma_max)."""
    if count < 1:
        raise ValueError(f"candidate count must be >= 1, got {count}")
    conditions: List[Condition] = []
    while len(conditions) < count:
        sigma = float(rng.uniform(0.0, sigma_max))
        rotation = sample_transform2d(sigma, rng, "rotation")
        projective = sample_transform2d(sigma, rng, "projective")
        condition = Condition(transforms=(rotation, projective))
        if condition not in conditions:
            conditions.append(condition)
    return CandidateSet(conditions=tuple(conditions), transform2d_sigma=sigma_max)


def candidates_for_method(config: AttackConfig) -> CandidateSet:
    if config.method == "MIM":
        return neutral_candidates()
    if config.method == "EOT":
        return eot_candidates(config.candidate_count, make_rng(config.rng_seed, "eot-candidates"))
    return stratified_candidates(config.candidate_count)
