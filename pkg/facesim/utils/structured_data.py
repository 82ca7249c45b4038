from __future__ import annotations

import json
from pathlib import Path
from typing import Any


def load_structured_file(path: Path) -> Any:
    if not path.exists():
        raise FileNotFoundError(f"Structured file not found: {path}")
    raw = path.read_text(encoding="utf-8")

    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass

    try:
        import yaml  # type: ignore

        return yaml.safe_load(raw)
    except Exception as exc:
        raise RuntimeError(
            f"Unable to parse structured file {path}. "
            "Provide JSON content or install PyYAML for full YAML support."
        ) from exc


def dump_json(data: Any) -> str:
    """Canonical JSON text used for every artifact, so reruns are byte-identical."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(data), encoding="utf-8")
