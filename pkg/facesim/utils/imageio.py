from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from .errors import ArtifactFormatError

logger = logging.getLogger(__name__)


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path: Path, image: np.ndarray) -> None:
    """Binary P6 file; grayscale inputs are replicated over three channels."""
    array = np.asarray(image, dtype=np.float64)
    if array.ndim == 2:
        array = np.repeat(array[:, :, None], 3, axis=2)
    if array.ndim != 3 or array.shape[2] != 3:
        raise ValueError(f"PPM export needs an (H, W, 3) or (H, W) array, got {array.shape}")
    height, width = array.shape[:2]
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + _to_uint8(array).tobytes())
    logger.debug("wrote %s (%dx%d)", path, width, height)


def _read_header_tokens(data: bytes, count: int) -> tuple[List[bytes], int]:
    tokens: List[bytes] = []
    position = 0
    while len(tokens) < count:
        while position < len(data) and data[position : position + 1].isspace():
            position += 1
        if data[position : position + 1] == b"#":
            while position < len(data) and data[position : position + 1] != b"\n":
                position += 1
            continue
        start = position
        while position < len(data) and not data[position : position + 1].isspace():
            position += 1
        tokens.append(data[start:position])
    # exactly one whitespace byte separates the header from the raster
    return tokens, position + 1


def read_ppm(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    data = path.read_bytes()
    try:
        tokens, offset = _read_header_tokens(data, 4)
        magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    except (IndexError, ValueError) as exc:
        raise ArtifactFormatError(path, "malformed PPM header") from exc
    if magic != b"P6" or maxval != 255:
        raise ArtifactFormatError(path, f"unsupported PPM variant {magic!r} maxval={maxval}")
    expected = width * height * 3
    if width < 1 or height < 1 or len(data) - offset < expected:
        raise ArtifactFormatError(path, f"PPM raster holds {max(len(data) - offset, 0)} bytes, header needs {expected}")
    raster = np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset)
    return raster.reshape(height, width, 3).astype(np.float64) / 255.0


def write_pgm16(path: Path, plane: np.ndarray, valid: np.ndarray | None = None) -> None:
    """16-bit P5 file, values min-max normalized over ``valid``; invalid pixels are white."""
    values = np.asarray(plane, dtype=np.float64)
    mask = np.isfinite(values) if valid is None else np.asarray(valid, dtype=bool)
    scaled = np.ones_like(values)
    if mask.any():
        low = float(values[mask].min())
        high = float(values[mask].max())
        span = high - low if high > low else 1.0
        scaled[mask] = (values[mask] - low) / span
    height, width = values.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{width} {height}\n65535\n".encode("ascii")
    raster = np.round(scaled * 65535.0).astype(">u2")
    path.write_bytes(header + raster.tobytes())
    logger.debug("wrote %s (%dx%d, 16-bit)", path, width, height)


def save_array(path: Path, values: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        np.save(handle, np.asarray(values, dtype=np.float64), allow_pickle=False)


def load_array(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"Array file not found: {path}")
    try:
        return np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise ArtifactFormatError(path, "malformed .npy array") from exc


def load_image(path: Path) -> np.ndarray:
    """Read an (H, W, 3) image from ``.npy`` (bit-exact) or ``.ppm``."""
    suffix = path.suffix.lower()
    if suffix == ".npy":
        image = load_array(path)
    elif suffix == ".ppm":
        image = read_ppm(path)
    else:
        raise ValueError(f"unsupported image format '{path.suffix}' (expected .npy or .ppm)")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ArtifactFormatError(path, f"image must be (H, W, 3), got {image.shape}")
    return image


def write_csv(path: Path, rows: Iterable[Dict[str, Any]], fieldnames: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.debug("wrote %s", path)


def read_csv(path: Path) -> List[Dict[str, str]]:
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
