from __future__ import annotations

from pathlib import Path
from typing import Dict

from facesim.utils.imageio import save_array, write_pgm16, write_ppm
from facesim.utils.types import RenderOutput


def write_render(render: RenderOutput, out_dir: Path, stem: str = "render") -> Dict[str, Path]:
    """Write image (PPM + raw float64), depth (16-bit PGM) and coverage for inspection."""
    paths = {
        "image_ppm": out_dir / f"{stem}.ppm",
        "image_npy": out_dir / f"{stem}.npy",
        "depth_pgm": out_dir / f"{stem}_depth.pgm",
        "coverage_ppm": out_dir / f"{stem}_coverage.ppm",
    }
    write_ppm(paths["image_ppm"], render.image)
    save_array(paths["image_npy"], render.image)
    write_pgm16(paths["depth_pgm"], render.depth, valid=render.coverage)
    write_ppm(paths["coverage_ppm"], render.coverage.astype(float))
    return paths
