"""Masked reconstruction losses over visibility-limited image pairs.

Reprojected pseudo-targets supervise only the pixels their mask marks
visible; every loss here reduces over mask-on pixels alone and normalizes by
3 * (number of mask-on pixels) + epsilon, so fully occluded pairs degrade to
zero instead of dividing by zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, ZeroFeature

DEFAULT_EPSILON = 1e-6
CHARBONNIER_EPS = 1e-3
FEATURE_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class MaskedImagePair:
    """Prediction/target rasters (H, W, 3) with a boolean visibility mask."""

    prediction: np.ndarray
    target: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prediction", np.asarray(self.prediction, dtype=float))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))
        if (self.prediction.shape != self.target.shape
                or self.prediction.ndim != 3
                or self.prediction.shape[2] != 3
                or self.mask.shape != self.prediction.shape[:2]):
            raise DimensionMismatch("prediction, target, and mask shapes disagree")


def _masked_reduce(pair: MaskedImagePair, elementwise, epsilon: float) -> float:
    diff = pair.prediction[pair.mask] - pair.target[pair.mask]
    denom = 3.0 * int(pair.mask.sum()) + epsilon
    return float(np.sum(elementwise(diff)) / denom)


def masked_mse(pair: MaskedImagePair, epsilon: float = DEFAULT_EPSILON) -> float:
    """Mean squared error over mask-on pixels and channels."""
    return _masked_reduce(pair, lambda d: d * d, epsilon)


def masked_l1(pair: MaskedImagePair, epsilon: float = DEFAULT_EPSILON) -> float:
    """Mean absolute error over mask-on pixels and channels."""
    return _masked_reduce(pair, np.abs, epsilon)


def masked_charbonnier(pair: MaskedImagePair, epsilon: float = DEFAULT_EPSILON,
                       eps_c: float = CHARBONNIER_EPS) -> float:
    """Smooth-L1 variant: sqrt(d^2 + eps_c^2) - eps_c per element.

    Behaves like d^2 / (2 eps_c) for |d| << eps_c and like |d| for
    |d| >> eps_c.
    """
    return _masked_reduce(pair, lambda d: np.sqrt(d * d + eps_c * eps_c) - eps_c, epsilon)


def masked_mse_grad(pair: MaskedImagePair, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Analytic gradient of masked_mse with respect to the prediction."""
    denom = 3.0 * int(pair.mask.sum()) + epsilon
    grad = 2.0 * (pair.prediction - pair.target) / denom
    grad[~pair.mask] = 0.0
    return grad


def masked_feature_cosine(pair: MaskedImagePair,
                          feature_fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """1 - cosine similarity between features of the masked images.

    The mask is applied multiplicatively to both rasters before feature
    extraction, so off-mask pixels cannot influence the embedding. Raises
    ZeroFeature when either embedding norm falls below 1e-12. Result lies in
    [0, 2].
    """
    m = pair.mask[..., None].astype(float)
    fa = np.asarray(feature_fn(pair.prediction * m), dtype=float).ravel()
    fb = np.asarray(feature_fn(pair.target * m), dtype=float).ravel()
    if fa.shape != fb.shape:
        raise DimensionMismatch("feature embeddings have different shapes")
    na = math.sqrt(float(fa @ fa))
    nb = math.sqrt(float(fb @ fb))
    if na < FEATURE_NORM_FLOOR or nb < FEATURE_NORM_FLOOR:
        raise ZeroFeature("feature embedding norm below 1e-12")
    cos = float(fa @ fb) / (na * nb)
    return 1.0 - min(1.0, max(-1.0, cos))
