"""Relative-pose sampling for pseudo novel-view supervision.

Six strategies produce world-to-camera extrinsics relative to the source
camera (whose own extrinsic is the identity): exact identity, pure
translation with a depth-safety clamp, pure rotation bounded by the field of
view, a combination of both, a surface-normal-derived placement, and a
frontal-hemisphere placement around a scene anchor. A single categorical
draw routes among them.

All randomness flows through a RandomStream keyed by
(global_seed, image_id, view_index), so any (image, view) pair regenerates
bit-identically regardless of batching or thread schedule.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from .errors import DegenerateLookAt, EmptyCloud, InvalidRange
from .geometry import (
    RigidTransform,
    identity_transform,
    look_at,
    rotation_about_axis,
    UP,
)
from .lifting import PointCloud, SceneStats

MAX_ATTEMPTS = 16


class Strategy(Enum):
    IDENTITY = "identity"
    TRANSLATION = "translation"
    ROTATION = "rotation"
    COMBINED = "combined"
    NORMAL_DERIVED = "normal_derived"
    FRONTAL_HEMISPHERE = "frontal_hemisphere"


# Routing order of the categorical draw; field names of SamplerConfig match.
ROUTING = (
    Strategy.IDENTITY,
    Strategy.TRANSLATION,
    Strategy.ROTATION,
    Strategy.COMBINED,
    Strategy.NORMAL_DERIVED,
    Strategy.FRONTAL_HEMISPHERE,
)


@dataclass(frozen=True)
class SamplerConfig:
    """Strategy mixture weights and per-strategy hyperparameters.

    Defaults reproduce the published training configuration. delta is in
    radians. tau filters near-horizontal surfaces (|n_y| < tau) for the
    normal-derived strategy; eps_near is the near-plane safety margin in
    meters shared with the renderer.
    """

    prob_identity: float = 0.15
    prob_translation: float = 0.10
    prob_rotation: float = 0.10
    prob_combined: float = 0.35
    prob_normal_derived: float = 0.05
    prob_frontal_hemisphere: float = 0.25
    alpha_t: float = 1.0
    alpha_r: float = 1.0
    d_min: float = 0.75
    d_max: float = 1.5
    delta: float = math.radians(25.0)
    sigma_anchor: float = 0.02
    tau: float = 0.5
    eps_near: float = 1e-3

    def probabilities(self) -> np.ndarray:
        return np.array([
            self.prob_identity,
            self.prob_translation,
            self.prob_rotation,
            self.prob_combined,
            self.prob_normal_derived,
            self.prob_frontal_hemisphere,
        ])

    def validate(self) -> None:
        probs = self.probabilities()
        if np.any(probs < 0):
            raise ValueError("strategy probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > 1e-6:
            raise ValueError(f"strategy probabilities sum to {probs.sum()}, not 1")
        if not 0 < self.d_min <= self.d_max:
            raise ValueError("require 0 < d_min <= d_max")
        if not 0 <= self.delta < math.pi / 2:
            raise ValueError("delta must lie in [0, pi/2)")
        if self.sigma_anchor < 0:
            raise ValueError("sigma_anchor must be non-negative")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.alpha_t < 0 or self.alpha_r < 0:
            raise ValueError("alpha_t and alpha_r must be non-negative")
        if self.eps_near <= 0:
            raise ValueError("eps_near must be positive")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sampler fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class SampledPose:
    """A routed draw: the relative extrinsic plus its strategy tag."""

    transform: RigidTransform
    strategy: Strategy
    fell_back: bool = False


class RandomStream:
    """Deterministic random stream keyed by (global_seed, image_id, view_index).

    Built on a counter-based generator; uniform reals come straight from it
    and Gaussians are derived by Box-Muller, so a stream's draw sequence is
    reproducible bit-for-bit for a fixed key.
    """

    def __init__(self, global_seed: int, image_id: str = "", view_index: int = 0):
        digest = hashlib.sha256(image_id.encode("utf-8")).digest()
        id_words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
        seq = np.random.SeedSequence([int(global_seed) & (2**64 - 1), *id_words, int(view_index)])
        self._gen = np.random.Generator(np.random.Philox(seq))

    def random(self) -> float:
        """One uniform draw in [0, 1)."""
        return float(self._gen.random())

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def normal(self, sigma: float = 1.0) -> float:
        """One Gaussian draw via Box-Muller (consumes two uniforms)."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def log_uniform(rng, a: float, b: float) -> float:
    """Draw from exp(U(ln a, ln b)); a == b short-circuits to a exactly."""
    if a <= 0 or a > b:
        raise InvalidRange(f"log_uniform requires 0 < a <= b, got [{a}, {b}]")
    if a == b:
        return a
    return math.exp(rng.uniform(math.log(a), math.log(b)))


def sample_anchor(rng, cloud: PointCloud, eps_near: float = 1e-3,
                  eligible: np.ndarray | None = None) -> int:
    """Pick a cloud index with probability proportional to 1 / ||p||.

    Points closer to the origin than eps_near are excluded; `eligible` can
    further restrict candidates (boolean mask over the cloud). Returns the
    index into the original cloud.
    """
    norms = np.sqrt(np.sum(cloud.points * cloud.points, axis=1))
    ok = norms >= eps_near
    if eligible is not None:
        ok = ok & eligible
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        raise EmptyCloud("no eligible anchor points")
    weights = 1.0 / norms[idx]
    cum = np.cumsum(weights)
    r = rng.random() * cum[-1]
    return int(idx[np.searchsorted(cum, r, side="right").clip(0, idx.size - 1)])


def sample_translation(rng, stats: SceneStats, cfg: SamplerConfig) -> RigidTransform:
    """Pure translation with the near-depth safety clamp.

    A camera-center displacement d is drawn per axis from
    U[-alpha_t * sigma, +alpha_t * sigma]; d.z is clamped so every transformed
    depth stays >= eps_near (the clamp is nudged by ulps until the guarantee
    holds in floating point). The stored extrinsic translation is -d.
    """
    lim = cfg.alpha_t * stats.sigma
    d = np.array([
        rng.uniform(-lim[0], lim[0]),
        rng.uniform(-lim[1], lim[1]),
        rng.uniform(-lim[2], lim[2]),
    ])
    bound = stats.min_z - cfg.eps_near
    dz = min(d[2], bound)
    while stats.min_z - dz < cfg.eps_near:
        dz = np.nextafter(dz, -np.inf)
    d[2] = dz
    return RigidTransform(np.eye(3), -d)


def _forward_to_extrinsic(forward: np.ndarray) -> RigidTransform:
    """Zero-translation extrinsic whose camera looks along `forward`."""
    return look_at(np.zeros(3), forward)


def sample_rotation(rng, hfov: float, cfg: SamplerConfig) -> RigidTransform:
    """Pure rotation; the new forward axis deviates at most alpha_r * hfov/2.

    Polar angle theta ~ U[0, alpha_r * hfov/2] away from the original forward
    axis, azimuth phi ~ U[0, 2pi); the basis is re-orthonormalized against
    the global up axis. Draws landing (anti)parallel to up are resampled up
    to 16 times, then the identity is returned.
    """
    cap = cfg.alpha_r * hfov / 2.0
    for _ in range(MAX_ATTEMPTS):
        theta = rng.uniform(0.0, cap)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        st = math.sin(theta)
        forward = np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])
        try:
            return _forward_to_extrinsic(forward)
        except DegenerateLookAt:
            continue
    return identity_transform()


def sample_combined(rng, stats: SceneStats, hfov: float, cfg: SamplerConfig) -> RigidTransform:
    """Independent translation and rotation draws composed into one motion.

    Equals compose([R_r | 0], [I | t_t]): rotation R_r with translation
    R_r @ t_t. The translation is drawn first, then the rotation.
    """
    t = sample_translation(rng, stats, cfg)
    r = sample_rotation(rng, hfov, cfg)
    return RigidTransform(r.rotation, r.rotation @ t.translation)


def sample_normal_derived(rng, cloud: PointCloud, cfg: SamplerConfig) -> SampledPose:
    """Place the camera along a surface normal, looking back at the anchor.

    Anchors are drawn (weighted 1/||p||) among points with |n_y| < tau; the
    standoff distance is log-uniform in [d_min, d_max] * ||p||. When no point
    passes the filter, or look-at degenerates for every candidate in 16
    attempts, falls back to the identity with fell_back=True.
    """
    eligible = np.abs(cloud.normals[:, 1]) < cfg.tau
    if not eligible.any():
        return SampledPose(identity_transform(), Strategy.NORMAL_DERIVED, fell_back=True)
    for _ in range(MAX_ATTEMPTS):
        try:
            i = sample_anchor(rng, cloud, cfg.eps_near, eligible)
        except EmptyCloud:
            return SampledPose(identity_transform(), Strategy.NORMAL_DERIVED, fell_back=True)
        p = cloud.points[i]
        n = cloud.normals[i]
        dist = math.sqrt(float(p @ p))
        s = log_uniform(rng, cfg.d_min * dist, cfg.d_max * dist)
        camera = p + s * n
        try:
            return SampledPose(look_at(camera, p), Strategy.NORMAL_DERIVED)
        except DegenerateLookAt:
            continue
    return SampledPose(identity_transform(), Strategy.NORMAL_DERIVED, fell_back=True)


def perturb_direction(rng, direction: np.ndarray, delta: float) -> np.ndarray:
    """Rotate `direction` by azimuth then elevation, each U[-delta, delta].

    Azimuth turns about the local up axis, elevation about the local right
    axis; the local frame is built against the global up. The result deviates
    from `direction` by at most sqrt(2) * delta. Raises DegenerateLookAt when
    `direction` is (anti)parallel to the global up axis.
    """
    right = np.cross(UP, direction)
    norm = math.sqrt(float(right @ right))
    if norm < 1e-6:
        raise DegenerateLookAt("direction parallel to the up axis")
    right = right / norm
    up = np.cross(direction, right)
    azimuth = rng.uniform(-delta, delta)
    elevation = rng.uniform(-delta, delta)
    rot = rotation_about_axis(right, elevation) @ rotation_about_axis(up, azimuth)
    return rot @ direction


def sample_frontal_hemisphere(rng, cloud: PointCloud, cfg: SamplerConfig) -> RigidTransform:
    """Place the camera on the source-facing side of a jittered anchor.

    The anchor p is jittered by isotropic Gaussian noise of scale
    sigma_anchor * ||p||, the back-toward-source direction -p~ is perturbed
    within +-delta, and the camera sits at distance ||p|| * log-U[d_min, d_max]
    along that direction, looking at the jittered anchor. Degenerate draws are
    resampled up to 16 times, then the identity is returned.
    """
    for _ in range(MAX_ATTEMPTS):
        i = sample_anchor(rng, cloud, cfg.eps_near)
        p = cloud.points[i]
        dist = math.sqrt(float(p @ p))
        jitter = np.array([
            rng.normal(cfg.sigma_anchor * dist),
            rng.normal(cfg.sigma_anchor * dist),
            rng.normal(cfg.sigma_anchor * dist),
        ])
        anchor = p + jitter
        anchor_norm = math.sqrt(float(anchor @ anchor))
        if anchor_norm < 1e-9:
            continue
        toward_source = -anchor / anchor_norm
        try:
            direction = perturb_direction(rng, toward_source, cfg.delta)
        except DegenerateLookAt:
            continue
        standoff = dist * log_uniform(rng, cfg.d_min, cfg.d_max)
        camera = anchor + standoff * direction
        try:
            return look_at(camera, anchor)
        except DegenerateLookAt:
            continue
    return identity_transform()


def sample_pose(rng, cloud: PointCloud, stats: SceneStats, hfov: float,
                cfg: SamplerConfig | None = None) -> SampledPose:
    """Route one categorical draw over the strategy mixture."""
    if cfg is None:
        cfg = SamplerConfig()
    cfg.validate()
    r = rng.random()
    cum = np.cumsum(cfg.probabilities())
    choice = ROUTING[min(int(np.searchsorted(cum, r, side="right")), len(ROUTING) - 1)]
    if choice is Strategy.IDENTITY:
        return SampledPose(identity_transform(), Strategy.IDENTITY)
    if choice is Strategy.TRANSLATION:
        return SampledPose(sample_translation(rng, stats, cfg), Strategy.TRANSLATION)
    if choice is Strategy.ROTATION:
        return SampledPose(sample_rotation(rng, hfov, cfg), Strategy.ROTATION)
    if choice is Strategy.COMBINED:
        return SampledPose(sample_combined(rng, stats, hfov, cfg), Strategy.COMBINED)
    if choice is Strategy.NORMAL_DERIVED:
        return sample_normal_derived(rng, cloud, cfg)
    return SampledPose(sample_frontal_hemisphere(rng, cloud, cfg), Strategy.FRONTAL_HEMISPHERE)
