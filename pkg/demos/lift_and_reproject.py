"""Lift a single frame to a point cloud and reproject it from new viewpoints.

Walks the core loop once by hand: realize an analytic scene (so depth and
normals are exact), unproject it, then render the cloud under the identity,
a lateral translation, and a pure rotation. Writes a side-by-side strip to
demos/out/ and prints mask coverage for each pose.
"""
import math
from pathlib import Path

import numpy as np

from viewforge.geometry import (
    RigidTransform,
    identity_transform,
    intrinsics_from_hfov,
    look_at,
)
from viewforge.lifting import unproject
from viewforge.oracle import Sphere, default_texture, realize
from viewforge.pipeline import save_image_rgb
from viewforge.rendering import render

OUT = Path(__file__).parent / "out"


def main():
    OUT.mkdir(exist_ok=True)
    size = 192
    intrinsics = intrinsics_from_hfov(size, size, math.radians(70.0))
    scene = Sphere(np.array([0.0, 0.0, 3.0]), 1.0, default_texture(10))
    image, depth, normals = realize(scene, intrinsics)
    cloud = unproject(image, depth, normals, intrinsics)
    print(f"lifted {len(cloud)} points from a {size}x{size} frame")

    poses = {
        "identity": identity_transform(),
        # Camera displaced 0.4 m to the right: extrinsic translation is -d.
        "slide_right": RigidTransform(np.eye(3), np.array([-0.4, 0.0, 0.0])),
        # Pure rotation: look 12 degrees off the original axis.
        "glance_left": look_at(np.zeros(3), np.array([math.sin(math.radians(-12.0)),
                                                      0.0,
                                                      math.cos(math.radians(-12.0))])),
    }

    panels = [image]
    for name, pose in poses.items():
        view = render(cloud, pose, intrinsics)
        coverage = float(view.mask.mean())
        print(f"{name:12s} coverage {coverage:6.1%}  "
              f"depth range [{view.zbuffer[view.mask].min():.3f}, "
              f"{view.zbuffer[view.mask].max():.3f}] m")
        panels.append(view.image)

    strip = np.concatenate(panels, axis=1)
    save_image_rgb(OUT / "lift_and_reproject.png", strip)
    print(f"wrote {OUT / 'lift_and_reproject.png'} (source | identity | slide | glance)")


if __name__ == "__main__":
    main()
