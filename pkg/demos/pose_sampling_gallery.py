"""Draw poses from the strategy mixture and tile the rendered results.

Every draw is keyed by (seed, image_id, view_index), so re-running this
script reproduces the same gallery bit for bit. Prints one line per view
with the routed strategy, then writes a contact sheet to demos/out/.
"""
import math
from collections import Counter
from pathlib import Path

import numpy as np

from viewforge.geometry import intrinsics_from_hfov
from viewforge.lifting import scene_stats, unproject
from viewforge.oracle import SlantedPlane, default_texture, realize
from viewforge.pipeline import save_image_rgb
from viewforge.rendering import render
from viewforge.sampling import RandomStream, SamplerConfig, sample_pose

OUT = Path(__file__).parent / "out"
SEED = 7
ROWS, COLS = 3, 4


def main():
    OUT.mkdir(exist_ok=True)
    size = 128
    hfov = math.radians(65.0)
    intrinsics = intrinsics_from_hfov(size, size, hfov)
    scene = SlantedPlane(np.array([0.0, 0.0, 2.2]),
                         np.array([0.25, -0.15, -1.0]), default_texture(8))
    image, depth, normals = realize(scene, intrinsics)
    cloud = unproject(image, depth, normals, intrinsics)
    stats = scene_stats(cloud)
    config = SamplerConfig()

    tiles = []
    tally = Counter()
    for k in range(ROWS * COLS):
        rng = RandomStream(SEED, "gallery", k)
        sampled = sample_pose(rng, cloud, stats, hfov, config)
        view = render(cloud, sampled.transform, intrinsics, config.eps_near)
        tally[sampled.strategy.value] += 1
        note = " (fell back)" if sampled.fell_back else ""
        print(f"view {k:2d}: {sampled.strategy.value}{note}, "
              f"coverage {view.mask.mean():6.1%}")
        tiles.append(view.image)

    rows = [np.concatenate(tiles[r * COLS:(r + 1) * COLS], axis=1) for r in range(ROWS)]
    save_image_rgb(OUT / "pose_gallery.png", np.concatenate(rows, axis=0))
    print(f"\nstrategy tally over {ROWS * COLS} draws: {dict(tally)}")
    print(f"wrote {OUT / 'pose_gallery.png'}")


if __name__ == "__main__":
    main()
