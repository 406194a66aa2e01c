"""Image comparison metrics, masked to pixels that hold a surface.

``rmse = sqrt(mean((a - b)^2))`` and ``mean_abs = mean(|a - b|)`` over every
masked pixel and channel. Ensemble variance is the per-pixel population
variance across a stack of renders, averaged over masked pixels.
"""

from __future__ import annotations

import numpy as np


def _mask(shape, mask):
    if mask is None:
        return np.ones(shape[:2], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape[:2]):
        raise ValueError(f"mask shape {mask.shape} does not match image {shape[:2]}")
    return mask


def _pair(a, b, mask):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    m = _mask(a.shape, mask)
    if not m.any():
        raise ValueError("mask selects no pixels")
    return a[m], b[m]


def rmse(a, b, mask=None) -> float:
    a, b = _pair(a, b, mask)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mean_abs(a, b, mask=None) -> float:
    a, b = _pair(a, b, mask)
    return float(np.mean(np.abs(a - b)))


def max_abs(a, b, mask=None) -> float:
    a, b = _pair(a, b, mask)
    return float(np.max(np.abs(a - b)))


def pixel_variance(stack) -> np.ndarray:
    """Per-pixel variance over axis 0 of a (k, H, W[, C]) stack, channels averaged."""
    stack = np.asarray(stack, dtype=np.float64)
    var = stack.var(axis=0)
    return var.mean(axis=-1) if var.ndim == 3 else var


def ensemble_variance(stack, mask=None) -> float:
    var = pixel_variance(stack)
    return float(var[_mask(var.shape, mask)].mean())


def summary(a, b, mask=None) -> dict:
    a = np.asarray(a, dtype=np.float64)
    m = _mask(a.shape, mask)
    return {"rmse": rmse(a, b, m), "mean_abs": mean_abs(a, b, m), "max_abs": max_abs(a, b, m),
            "pixels": int(m.sum())}


def format_report(stats: dict) -> str:
    return "\n".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in stats.items())
