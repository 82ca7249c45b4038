from __future__ import annotations

import math
from pathlib import Path


class NonFiniteError(RuntimeError):
    """An optimization produced a NaN or infinite loss or gradient."""

    def __init__(self, stage: str, iteration: int, value: float) -> None:
        self.stage = stage
        self.iteration = iteration
        self.value = value
        super().__init__(f"{stage}: non-finite value {value!r} at iteration {iteration}")


def check_finite(stage: str, iteration: int, value: float) -> float:
    if not math.isfinite(value):
        raise NonFiniteError(stage, iteration, value)
    return value


class ArtifactFormatError(RuntimeError):
    """A stored artifact exists but cannot be decoded."""

    def __init__(self, path: Path, problem: str) -> None:
        self.path = path
        self.problem = problem
        super().__init__(f"{path}: {problem}")
