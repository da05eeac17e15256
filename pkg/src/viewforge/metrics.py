"""Image quality metrics and the best-scale sweep used for evaluation.

PSNR is capped at 99 dB so identical images compare cleanly. SSIM follows
the standard single-scale formulation: 11x11 Gaussian window with sigma 1.5,
K1 = 0.01, K2 = 0.03, computed per channel over valid window positions and
averaged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyGrid, TooSmall

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

DEFAULT_SWEEP_GRID = tuple(np.geomspace(0.25, 4.0, 25))


@dataclass(frozen=True)
class MetricReport:
    """Aggregate metrics; psnr/ssim are means of the per-frame values."""

    psnr: float
    ssim: float
    per_frame: tuple = field(default_factory=tuple)
    best_scale: float | None = None


def psnr(a, b, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped at 99."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    if max_val <= 0:
        raise ValueError("max_val must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(max_val * max_val / mse), PSNR_CAP)


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    g = g / g.sum()
    return np.outer(g, g)


def _windowed_mean(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    win = np.lib.stride_tricks.sliding_window_view(x, kernel.shape)
    return np.einsum("ijkl,kl->ij", win, kernel)


def _ssim_channel(a: np.ndarray, b: np.ndarray, kernel: np.ndarray,
                  c1: float, c2: float) -> float:
    mu_a = _windowed_mean(a, kernel)
    mu_b = _windowed_mean(b, kernel)
    e_aa = _windowed_mean(a * a, kernel)
    e_bb = _windowed_mean(b * b, kernel)
    e_ab = _windowed_mean(a * b, kernel)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, max_val: float = 1.0) -> float:
    """Mean local structural similarity over valid window positions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise TooSmall(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    kernel = _gaussian_kernel()
    c1 = (SSIM_K1 * max_val) ** 2
    c2 = (SSIM_K2 * max_val) ** 2
    scores = [_ssim_channel(a[..., k], b[..., k], kernel, c1, c2)
              for k in range(a.shape[2])]
    return float(np.mean(scores))


def scale_sweep(evaluate: Callable[[float], float],
                grid: Sequence[float] = DEFAULT_SWEEP_GRID) -> tuple[float, float]:
    """Maximize `evaluate` over candidate scales; ties go to the smallest.

    Returns (best_scale, best_score). Raises EmptyGrid for an empty grid.
    """
    scales = sorted(float(s) for s in grid)
    if not scales:
        raise EmptyGrid("scale sweep needs at least one candidate")
    best_scale, best_score = scales[0], float(evaluate(scales[0]))
    for s in scales[1:]:
        score = float(evaluate(s))
        if score > best_score:
            best_scale, best_score = s, score
    return best_scale, best_score


def aggregate_report(per_frame: Sequence[tuple], best_scale: float | None = None) -> MetricReport:
    """Build a MetricReport from (frame_id, psnr, ssim) tuples."""
    if not per_frame:
        raise ValueError("no frames to aggregate")
    return MetricReport(
        psnr=float(np.mean([f[1] for f in per_frame])),
        ssim=float(np.mean([f[2] for f in per_frame])),
        per_frame=tuple(per_frame),
        best_scale=best_scale,
    )
