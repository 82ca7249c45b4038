"""Loss-driven importance sampling over candidate conditions.

Harder conditions (larger attack loss) are drawn more often: the sampling
distribution is a softmax over the current candidate losses.
"""

from __future__ import annotations

from typing import List

import numpy as np

from facesim.utils.types import ImportanceDistribution


def importance_probs(losses: np.ndarray) -> ImportanceDistribution:
    values = np.asarray(losses, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("losses must be a non-empty vector")
    if not np.all(np.isfinite(values)):
        raise ValueError("losses must be finite")
    # exp underflows to 0 past a loss gap of ~745; floor at the smallest normal float.
    weights = np.maximum(np.exp(values - values.max()), np.finfo(np.float64).tiny)
    return ImportanceDistribution(probs=weights / weights.sum())


def uniform_probs(count: int) -> ImportanceDistribution:
    if count < 1:
        raise ValueError("count must be >= 1")
    return ImportanceDistribution(probs=np.full(count, 1.0 / count))


def _draw(weights: np.ndarray, u: float) -> int:
    cumulative = np.cumsum(weights)
    index = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
    if index >= weights.size or weights[index] <= 0.0:
        # rounding pushed the draw past the last positive weight
        index = int(np.flatnonzero(weights > 0.0)[-1])
    return index


def sample_conditions(
    dist: ImportanceDistribution,
    count: int,
    rng: np.random.Generator,
    with_replacement: bool = False,
) -> List[int]:
    """Draw ``count`` candidate indices, one uniform variate per draw.

    Without replacement each draw is proportional to the probability mass of
    the candidates not yet chosen.
    """
    size = dist.probs.size
    if count < 1 or (not with_replacement and count > size):
        raise ValueError(f"cannot draw {count} conditions from {size} candidates")
    weights = np.array(dist.probs, dtype=np.float64)
    chosen: List[int] = []
    for _ in range(count):
        index = _draw(weights, float(rng.random()))
        chosen.append(index)
        if not with_replacement:
            weights[index] = 0.0
    return chosen
