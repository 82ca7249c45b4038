from __future__ import annotations

from typing import List


def get_command_catalog() -> List[str]:
    return [
        "synth",
        "render",
        "fit",
        "attack",
        "protocol",
        "bench",
        "audit",
        "doctor",
        "models",
        "command-catalog",
    ]
