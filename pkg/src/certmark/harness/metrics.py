"""Embedding-quality metric."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core import as_array
from ..errors import ShapeMismatch

SSIM_WINDOW = 8
C1 = 0.01 ** 2
C2 = 0.03 ** 2


def ssim(x, y, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all 8x8 uniform windows and channels, for [0, 1] images."""
    a = as_array(x).astype(np.float64)
    b = as_array(y).astype(np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape[-2:]) < window:
        raise ShapeMismatch(f"images smaller than the {window}x{window} window")
    wa = sliding_window_view(a, (window, window), axis=(-2, -1))
    wb = sliding_window_view(b, (window, window), axis=(-2, -1))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = wa.var(axis=(-2, -1))
    var_b = wb.var(axis=(-2, -1))
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + C1) * (2 * cov + C2)
    den = (mu_a ** 2 + mu_b ** 2 + C1) * (var_a + var_b + C2)
    return float(np.mean(num / den))
