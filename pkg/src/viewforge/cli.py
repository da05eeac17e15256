"""Command-line surface: generate, sample-poses, eval, oracle-check.

All data records go to stdout as line-delimited JSON; diagnostics go to
stderr. Thread count resolves as --threads, then the FORGE_THREADS
environment variable, then the config value.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import metrics, oracle, pipeline
from .errors import ConfigError, MissingCounterpart
from .geometry import PoseVector7, intrinsics_from_hfov
from .lifting import scene_stats, unproject
from .pfm import read_pfm
from .sampling import RandomStream, sample_pose


def _resolve_threads(args_threads, config_threads: int) -> int:
    if args_threads is not None:
        return args_threads
    env = os.environ.get("FORGE_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"forge: ignoring non-integer FORGE_THREADS={env!r}", file=sys.stderr)
    return config_threads


def cmd_generate(args) -> int:
    try:
        config = pipeline.load_config(args.config)
        entries = pipeline.load_manifest(args.manifest)
    except (ConfigError, OSError) as e:
        print(f"forge generate: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = pipeline.config_from_dict({**config.to_dict(), "seed": args.seed})
    out_dir = args.out if args.out is not None else config.output_dir
    threads = _resolve_threads(args.threads, config.threads)
    result = pipeline.generate_run(config, entries, out_dir, threads)
    print(json.dumps({
        "outputs": len(result.outputs),
        "failed_entries": sorted(f[0] for f in result.failures),
        "out_dir": str(out_dir),
    }, sort_keys=True))
    return 0 if result.ok else 1


def _synthetic_source(hfov_deg: float):
    """Built-in stats source: a textured fronto-parallel plane at 2 m."""
    intrinsics = intrinsics_from_hfov(64, 64, math.radians(hfov_deg))
    image, depth, normals = oracle.realize(oracle.FrontoPlane(2.0), intrinsics)
    return image, depth, normals, intrinsics


def cmd_sample_poses(args) -> int:
    try:
        config = pipeline.load_config(args.config) if args.config else pipeline.RunConfig()
    except (ConfigError, OSError) as e:
        print(f"forge sample-poses: {e}", file=sys.stderr)
        return 2
    if args.n < 1:
        print("forge sample-poses: --n must be >= 1", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else config.seed
    try:
        if args.depth:
            depth = read_pfm(args.depth)
            if args.normals:
                normals = read_pfm(args.normals)
            else:
                print("forge sample-poses: --depth requires --normals", file=sys.stderr)
                return 2
            image = np.zeros(depth.shape + (3,)) if not args.image \
                else pipeline.load_image_rgb(args.image)
            h, w = depth.shape
            intrinsics = intrinsics_from_hfov(w, h, math.radians(args.hfov_deg))
        else:
            image, depth, normals, intrinsics = _synthetic_source(args.hfov_deg)
        cloud = unproject(image, depth, normals, intrinsics)
    except (ValueError, OSError) as e:
        print(f"forge sample-poses: {e}", file=sys.stderr)
        return 2
    stats = scene_stats(cloud)
    hfov = math.radians(args.hfov_deg)
    for k in range(args.n):
        rng = RandomStream(seed, args.stream_id, k)
        sampled = sample_pose(rng, cloud, stats, hfov, config.sampler)
        pose = PoseVector7.from_transform(sampled.transform)
        print(json.dumps({
            "strategy": sampled.strategy.value,
            "fell_back": sampled.fell_back,
            "quaternion": [float(x) for x in pose.quaternion],
            "translation_m": [float(x) for x in pose.translation],
        }, sort_keys=True))
    return 0


def _match_frames(pred_dir: Path, gt_dir: Path):
    pred = {p.name for p in pred_dir.glob("*.png")}
    gt = {p.name for p in gt_dir.glob("*.png")}
    unmatched = sorted(pred ^ gt)
    return sorted(pred & gt), unmatched


def _evaluate_dir(pred_dir: Path, gt_dir: Path, frames) -> list[tuple]:
    per_frame = []
    for name in frames:
        a = pipeline.load_image_rgb(pred_dir / name)
        b = pipeline.load_image_rgb(gt_dir / name)
        per_frame.append((name, metrics.psnr(a, b), metrics.ssim(a, b)))
    return per_frame


def cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    frames, unmatched = _match_frames(pred_dir, gt_dir)
    for name in unmatched:
        print(f"forge eval: missing counterpart for {name}", file=sys.stderr)
    if not frames:
        print("forge eval: no matching frames to evaluate", file=sys.stderr)
        return 2

    best_scale = None
    if args.scale_sweep:
        if not args.render_cmd:
            print("forge eval: --scale-sweep requires --render-cmd", file=sys.stderr)
            return 2
        grid = [float(s) for s in args.scales.split(",")] if args.scales \
            else list(metrics.DEFAULT_SWEEP_GRID)

        def evaluate(scale: float) -> float:
            with tempfile.TemporaryDirectory(prefix="forge-sweep-") as tmp:
                cmd = args.render_cmd.format(scale=scale, out=tmp)
                proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
                if proc.returncode != 0:
                    raise RuntimeError(f"render command failed at scale {scale}: {proc.stderr}")
                sweep_frames, _ = _match_frames(Path(tmp), gt_dir)
                if not sweep_frames:
                    raise RuntimeError(f"render command produced no frames at scale {scale}")
                rows = _evaluate_dir(Path(tmp), gt_dir, sweep_frames)
                idx = 1 if args.sweep_metric == "psnr" else 2
                score = float(np.mean([r[idx] for r in rows]))
                print(json.dumps({"scale": scale, f"mean_{args.sweep_metric}": score},
                                 sort_keys=True))
                return score

        try:
            best_scale, _ = metrics.scale_sweep(evaluate, grid)
        except RuntimeError as e:
            print(f"forge eval: {e}", file=sys.stderr)
            return 2

    per_frame = _evaluate_dir(pred_dir, gt_dir, frames)
    for name, p, s in per_frame:
        print(json.dumps({"frame": name, "psnr": p, "ssim": s}, sort_keys=True))
    report = metrics.aggregate_report(per_frame, best_scale)
    summary = {"frames": len(frames), "mean_psnr": report.psnr, "mean_ssim": report.ssim}
    if best_scale is not None:
        summary["best_scale"] = best_scale
    print(json.dumps(summary, sort_keys=True))
    return 1 if unmatched else 0


def cmd_oracle_check(args) -> int:
    if args.trials < 1:
        print("forge oracle-check: --trials must be >= 1", file=sys.stderr)
        return 2
    failures, elapsed = oracle.run_equivalence_trials(args.trials, args.seed)
    if failures:
        first = failures[0]
        print(json.dumps({
            "status": "mismatch",
            "failures": len(failures),
            "reproducer": {"trial": first.trial, "seed": first.seed, "detail": first.detail},
        }, sort_keys=True))
        return 1
    print(json.dumps({"status": "ok", "trials": args.trials,
                      "seconds": round(elapsed, 3)}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Forge pseudo novel-view training pairs from single images.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render pseudo views for a manifest of frames")
    g.add_argument("--config", required=True, help="JSON run config")
    g.add_argument("--manifest", required=True, help="line-delimited JSON input manifest")
    g.add_argument("--out", default=None, help="output directory (defaults to config)")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: FORGE_THREADS or config)")
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.set_defaults(fn=cmd_generate)

    s = sub.add_parser("sample-poses", help="emit sampled relative poses as JSON lines")
    s.add_argument("--config", default=None, help="JSON run config (defaults built in)")
    s.add_argument("--n", type=int, required=True, help="number of poses to draw")
    s.add_argument("--hfov-deg", type=float, default=60.0, help="horizontal fov in degrees")
    s.add_argument("--depth", default=None, help="depth PFM to lift the scene from")
    s.add_argument("--normals", default=None, help="normal PFM matching --depth")
    s.add_argument("--image", default=None, help="optional RGB image matching --depth")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--stream-id", default="sample-poses", help="stream id for keying draws")
    s.set_defaults(fn=cmd_sample_poses)

    e = sub.add_parser("eval", help="PSNR/SSIM between two directories of frames")
    e.add_argument("pred", help="directory of predicted frames (*.png)")
    e.add_argument("gt", help="directory of ground-truth frames (*.png)")
    e.add_argument("--scale-sweep", action="store_true",
                   help="sweep a per-scene scale via --render-cmd")
    e.add_argument("--render-cmd", default=None,
                   help="command template with {scale} and {out} placeholders")
    e.add_argument("--scales", default=None, help="comma-separated sweep scales")
    e.add_argument("--sweep-metric", choices=("psnr", "ssim"), default="psnr")
    e.set_defaults(fn=cmd_eval)

    o = sub.add_parser("oracle-check", help="randomized fast-vs-brute-force equivalence")
    o.add_argument("--trials", type=int, required=True)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(fn=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
