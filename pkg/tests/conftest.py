import json
import math

import numpy as np
import pytest

from viewforge.geometry import intrinsics_from_hfov
from viewforge.oracle import FrontoPlane, SlantedPlane, Sphere, default_texture, realize
from viewforge.pfm import write_pfm
from viewforge.pipeline import save_image_rgb


def synth_frame(kind: int, size: int = 32, hfov_deg: float = 60.0, cells: int = 6):
    """Analytic source frame (image, depth, normals) for pipeline fixtures."""
    intrinsics = intrinsics_from_hfov(size, size, math.radians(hfov_deg))
    if kind % 3 == 0:
        scene = FrontoPlane(2.0 + 0.1 * kind, default_texture(cells))
    elif kind % 3 == 1:
        scene = SlantedPlane(np.array([0.0, 0.0, 2.5]),
                             np.array([0.2, 0.1, -1.0]), default_texture(cells))
    else:
        scene = Sphere(np.array([0.0, 0.0, 4.0]), 1.5, default_texture(cells))
    return realize(scene, intrinsics)


@pytest.fixture
def frame_factory(tmp_path):
    """Writes synthetic frames plus a manifest and config; returns their paths."""

    def build(n_entries: int, views: int = 2, size: int = 32, seed: int = 11,
              hfov_deg: float = 60.0, threads: int = 1, subdir: str = "inputs"):
        root = tmp_path / subdir
        root.mkdir(parents=True, exist_ok=True)
        lines = []
        for i in range(n_entries):
            image, depth, normals = synth_frame(i, size=size, hfov_deg=hfov_deg)
            entry_id = f"frame{i:03d}"
            image_path = root / f"{entry_id}.png"
            depth_path = root / f"{entry_id}.depth.pfm"
            normal_path = root / f"{entry_id}.normal.pfm"
            save_image_rgb(image_path, image)
            write_pfm(depth_path, depth)
            write_pfm(normal_path, normals)
            lines.append(json.dumps({
                "id": entry_id,
                "image_path": str(image_path),
                "depth_path": str(depth_path),
                "normal_path": str(normal_path),
                "hfov_deg": hfov_deg,
            }))
        manifest_path = root / "manifest.jsonl"
        manifest_path.write_text("\n".join(lines) + "\n")
        config_path = root / "config.json"
        config_path.write_text(json.dumps({
            "views_per_image": views,
            "seed": seed,
            "threads": threads,
            "output_dir": str(tmp_path / "default-out"),
        }))
        return manifest_path, config_path, root

    return build
