"""Deterministic batch generation of pseudo novel-view training pairs.

A run is driven by a JSON config and a line-delimited JSON manifest of input
frames (image + metric depth + normals + horizontal fov). Every (image, view)
unit derives its randomness from (seed, image_id, view_index) alone, so
output trees are byte-identical across reruns and thread counts. Each unit
emits `<id>_<k>.target.png`, `<id>_<k>.mask.png`, and `<id>_<k>.meta.json`;
the run ends with a `run_manifest.json` listing everything produced.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image

from .errors import ConfigError
from .geometry import PoseVector7, intrinsics_from_hfov
from .lifting import scene_stats, unproject
from .pfm import read_pfm
from .rendering import PseudoView, render
from .sampling import RandomStream, SamplerConfig, sample_pose

log = logging.getLogger("viewforge")

RUN_MANIFEST_NAME = "run_manifest.json"


@dataclass(frozen=True)
class ManifestEntry:
    """One input frame: image, metric depth, normals, horizontal fov."""

    id: str
    image_path: str
    depth_path: str
    normal_path: str
    hfov_deg: float

    REQUIRED = ("id", "image_path", "depth_path", "normal_path", "hfov_deg")

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        unknown = set(d) - set(cls.REQUIRED)
        if unknown:
            raise ConfigError(f"unknown manifest fields: {sorted(unknown)}")
        missing = set(cls.REQUIRED) - set(d)
        if missing:
            raise ConfigError(f"missing manifest fields: {sorted(missing)}")
        if not d["id"]:
            raise ConfigError("manifest entry id must be non-empty")
        if not 0.0 < float(d["hfov_deg"]) < 180.0:
            raise ConfigError(f"hfov_deg {d['hfov_deg']} outside (0, 180)")
        return cls(str(d["id"]), str(d["image_path"]), str(d["depth_path"]),
                   str(d["normal_path"]), float(d["hfov_deg"]))


@dataclass(frozen=True)
class RunConfig:
    """Run-level knobs; the sampler carries the strategy hyperparameters."""

    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    views_per_image: int = 1
    seed: int = 0
    output_dir: str = "out"
    threads: int = 1
    loss_epsilon: float = 1e-6

    def validate(self) -> None:
        self.sampler.validate()
        if self.views_per_image < 1:
            raise ConfigError("views_per_image must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.loss_epsilon <= 0:
            raise ConfigError("loss_epsilon must be positive")

    def to_dict(self) -> dict:
        return {
            "sampler": self.sampler.to_dict(),
            "views_per_image": self.views_per_image,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "threads": self.threads,
            "loss_epsilon": self.loss_epsilon,
        }


_RUN_KEYS = {"sampler", "views_per_image", "seed", "output_dir", "threads", "loss_epsilon"}


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        sampler = SamplerConfig.from_dict(d.get("sampler", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad sampler config: {e}") from e
    cfg = RunConfig(
        sampler=sampler,
        views_per_image=int(d.get("views_per_image", 1)),
        seed=int(d.get("seed", 0)),
        output_dir=str(d.get("output_dir", "out")),
        threads=int(d.get("threads", 1)),
        loss_epsilon=float(d.get("loss_epsilon", 1e-6)),
    )
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return config_from_dict(raw)


def load_manifest(path) -> list[ManifestEntry]:
    """Parse a line-delimited JSON manifest; ids must be unique."""
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = ManifestEntry.from_dict(json.loads(line))
            except json.JSONDecodeError as e:
                raise ConfigError(f"manifest line {lineno} is not valid JSON: {e}") from e
            if entry.id in seen:
                raise ConfigError(f"duplicate manifest id {entry.id!r} (line {lineno})")
            seen.add(entry.id)
            entries.append(entry)
    return entries


def load_image_rgb(path) -> np.ndarray:
    """PNG (or any PIL-readable image) as float64 RGB in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return arr.astype(np.float64) / 255.0


def save_image_rgb(path, image: np.ndarray) -> None:
    arr = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_mask(path, mask: np.ndarray) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 127


@dataclass(frozen=True)
class RenderedView:
    """One generated pseudo view plus everything needed to reproduce it."""

    image_id: str
    view_index: int
    view: PseudoView
    pose: PoseVector7
    strategy: str
    fell_back: bool
    width: int
    height: int
    hfov_deg: float
    seed: int


def iter_views(image, depth, normals, hfov_deg: float, image_id: str,
               config: SamplerConfig, seed: int, views: int) -> Iterator[RenderedView]:
    """Stream pseudo views for one source frame without touching disk.

    The pose actually rendered is reconstructed from its serialized
    quaternion + translation, so a consumer re-rendering from the recorded
    metadata reproduces the view bit-for-bit.
    """
    h, w = np.asarray(depth).shape
    intrinsics = intrinsics_from_hfov(w, h, math.radians(hfov_deg))
    cloud = unproject(image, depth, normals, intrinsics)
    stats = scene_stats(cloud)
    hfov = math.radians(hfov_deg)
    for k in range(views):
        rng = RandomStream(seed, image_id, k)
        sampled = sample_pose(rng, cloud, stats, hfov, config)
        pose = PoseVector7.from_transform(sampled.transform)
        view = render(cloud, pose.to_transform(), intrinsics, config.eps_near)
        yield RenderedView(
            image_id=image_id,
            view_index=k,
            view=view,
            pose=pose,
            strategy=sampled.strategy.value,
            fell_back=sampled.fell_back,
            width=w,
            height=h,
            hfov_deg=float(hfov_deg),
            seed=int(seed),
        )


def meta_dict(rv: RenderedView) -> dict:
    return {
        "image_id": rv.image_id,
        "view_index": rv.view_index,
        "strategy": rv.strategy,
        "fell_back": rv.fell_back,
        "quaternion": [float(x) for x in rv.pose.quaternion],
        "translation_m": [float(x) for x in rv.pose.translation],
        "hfov_deg": rv.hfov_deg,
        "width": rv.width,
        "height": rv.height,
        "seed": rv.seed,
    }


def render_from_meta(meta: dict, image, depth, normals, eps_near: float = 1e-3) -> PseudoView:
    """Re-render a recorded view from its meta record and the source inputs."""
    intrinsics = intrinsics_from_hfov(
        int(meta["width"]), int(meta["height"]), math.radians(float(meta["hfov_deg"])))
    pose = PoseVector7(np.array(meta["translation_m"], dtype=float),
                       np.array(meta["quaternion"], dtype=float))
    cloud = unproject(image, depth, normals, intrinsics)
    return render(cloud, pose.to_transform(), intrinsics, eps_near)


@dataclass
class GenerateResult:
    outputs: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def _process_entry(entry: ManifestEntry, config: RunConfig, out_dir: Path) -> list[dict]:
    image = load_image_rgb(entry.image_path)
    depth = read_pfm(entry.depth_path)
    normals = read_pfm(entry.normal_path)
    if depth.ndim != 2:
        raise ConfigError(f"{entry.depth_path}: depth PFM must be single channel")
    if normals.ndim != 3:
        raise ConfigError(f"{entry.normal_path}: normal PFM must be 3 channel")
    records = []
    for rv in iter_views(image, depth, normals, entry.hfov_deg, entry.id,
                         config.sampler, config.seed, config.views_per_image):
        stem = f"{entry.id}_{rv.view_index}"
        save_image_rgb(out_dir / f"{stem}.target.png", rv.view.image)
        save_mask(out_dir / f"{stem}.mask.png", rv.view.mask)
        with open(out_dir / f"{stem}.meta.json", "w", encoding="utf-8") as f:
            json.dump(meta_dict(rv), f, sort_keys=True, indent=2)
            f.write("\n")
        records.append({
            "image_id": entry.id,
            "view_index": rv.view_index,
            "target": f"{stem}.target.png",
            "mask": f"{stem}.mask.png",
            "meta": f"{stem}.meta.json",
        })
    return records


def generate_run(config: RunConfig, entries: Sequence[ManifestEntry],
                 out_dir, threads: int | None = None) -> GenerateResult:
    """Render every (entry, view) unit and write the output tree.

    Per-entry failures (unreadable or malformed inputs) are logged and
    skipped; they do not abort the rest of the run. The run manifest lists
    only successful outputs, sorted, with paths relative to out_dir.
    """
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = threads if threads is not None else config.threads
    outputs, failures = [], []

    def unit(entry):
        return entry, _process_entry(entry, config, out_dir)

    if workers <= 1:
        for entry in entries:
            try:
                _, records = unit(entry)
                outputs.extend(records)
            except Exception as e:  # noqa: BLE001 - per-entry isolation is the contract
                log.error("entry %s failed: %s", entry.id, e)
                failures.append((entry.id, str(e)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(unit, entry): entry for entry in entries}
            for fut, entry in futs.items():
                try:
                    _, records = fut.result()
                    outputs.extend(records)
                except Exception as e:  # noqa: BLE001
                    log.error("entry %s failed: %s", entry.id, e)
                    failures.append((entry.id, str(e)))

    outputs.sort(key=lambda r: (r["image_id"], r["view_index"]))
    manifest = {
        "config": config.to_dict(),
        "outputs": outputs,
        "failed_entries": sorted(f[0] for f in failures),
    }
    with open(out_dir / RUN_MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    return GenerateResult(outputs=outputs, failures=failures)
