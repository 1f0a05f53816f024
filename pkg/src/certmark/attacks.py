"""Removal and forgery attacks: quality-factor compression, query-based
black-box boundary walk, white-box projected gradient descent and its adaptive
variant that mimics the smoothing process."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.fft import dctn, idctn

from .core import ImageTensor, Perturbation, Watermark, as_array, bitwise_accuracy
from .errors import InitNotAdversarial
from .kernels import mix64
from .smoothing import lower_median, noise_block

# Standard JPEG luminance quantization table (quality 50).
LUMA_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)


@dataclass(frozen=True)
class AttackBudget:
    R: float = 0.5
    n_iter: int = 500
    learning_rate: float = 1.0
    query_budget: int = 1000
    epsilon_stop: float = 0.05
    N_prime: int = 100
    margin: float = 0.05         # logit margin past which a bit stops contributing

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("R must be nonnegative")
        if self.n_iter < 1 or self.N_prime < 1:
            raise ValueError("n_iter and N_prime must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.query_budget < 0:
            raise ValueError("query_budget must be nonnegative")
        if not 0.0 < self.epsilon_stop < 1.0:
            raise ValueError("epsilon_stop must lie in (0, 1)")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    delta: Perturbation
    final_ba: float
    queries_used: int
    success: bool


# --------------------------------------------------------------------------
# quality-factor compression
# --------------------------------------------------------------------------

def quant_table(Q: int) -> np.ndarray:
    if not 1 <= Q <= 100:
        raise ValueError(f"quality factor must lie in [1, 100], got {Q}")
    scale = 5000.0 / Q if Q < 50 else 200.0 - 2.0 * Q
    return np.maximum(1.0, np.floor((LUMA_TABLE * scale + 50.0) / 100.0))


def quality_compress(x, Q: int) -> ImageTensor:
    """Blockwise 8x8 DCT quantization at quality ``Q`` (no entropy coding)."""
    arr = as_array(x)
    c, h, w = arr.shape
    ph, pw = -h % 8, -w % 8
    padded = np.pad(arr, ((0, 0), (0, ph), (0, pw)), mode="edge") * 255.0 - 128.0
    H, W = padded.shape[1:]
    blocks = padded.reshape(c, H // 8, 8, W // 8, 8).transpose(0, 1, 3, 2, 4)
    table = quant_table(Q)
    coef = dctn(blocks, axes=(-2, -1), norm="ortho")
    coef = np.round(coef / table) * table
    rec = idctn(coef, axes=(-2, -1), norm="ortho")
    rec = rec.transpose(0, 1, 3, 2, 4).reshape(c, H, W)[:, :h, :w]
    return ImageTensor((rec + 128.0) / 255.0)


def compression_init(x, is_adversarial: Callable, qualities=range(99, 0, -1)):
    """Highest quality whose compression of ``x`` is already adversarial."""
    for q in qualities:
        cand = quality_compress(x, q)
        if is_adversarial(cand.data):
            return cand, q
    return None, None


# --------------------------------------------------------------------------
# black-box boundary walk
# --------------------------------------------------------------------------

def blackbox_attack(x, oracle: Callable, goal: str, init, budget: AttackBudget,
                    seed: int = 0) -> AttackOutcome:
    """Shrink ``init - x`` while staying on the adversarial side of ``oracle``.

    ``oracle(image) -> bool`` is the detection API. For ``goal='removal'`` the
    adversarial side is "not detected", for ``'forgery'`` it is "detected".
    A binary search along the segment from ``x`` to ``init`` locates the
    boundary; then random steps orthogonal to the current perturbation,
    followed by a contraction toward ``x``, are accepted whenever they stay
    adversarial. Only improvements are kept, so the norm never increases.
    """
    if goal not in ("removal", "forgery"):
        raise ValueError("goal must be 'removal' or 'forgery'")
    x0 = as_array(x)
    start = as_array(init)
    want = goal == "forgery"
    used = 0

    def adversarial(img) -> bool:
        nonlocal used
        used += 1
        return bool(oracle(img)) == want

    if not adversarial(start):
        raise InitNotAdversarial(f"initial image is not adversarial for {goal}")
    best = start.copy()
    budget_left = lambda: used - 1 < budget.query_budget  # noqa: E731 - init check is free

    # boundary search along the segment
    lo, hi = 0.0, 1.0
    while budget_left() and hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        cand = x0 + mid * (start - x0)
        if adversarial(cand):
            hi = mid
            best = cand
        else:
            lo = mid

    rng = np.random.default_rng(seed)
    spherical, source = 0.05, 0.05
    while budget_left():
        d = best - x0
        dist = float(np.linalg.norm(d))
        if dist == 0.0:
            break
        eta = rng.standard_normal(x0.shape)
        eta -= np.vdot(eta, d) / dist ** 2 * d
        eta *= spherical * dist / max(np.linalg.norm(eta), 1e-300)
        rotated = d + eta
        rotated *= dist / np.linalg.norm(rotated)
        cand = np.clip(x0 + (1.0 - source) * rotated, 0.0, 1.0)
        if np.linalg.norm(cand - x0) < dist and adversarial(cand):
            best = cand
            spherical = min(spherical * 1.5, 0.5)
            source = min(source * 1.5, 0.5)
        else:
            spherical = max(spherical / 1.5, 1e-4)
            source = max(source / 1.5, 1e-4)

    success = bool(oracle(best)) == want
    if not success:  # pragma: no cover - every accepted point was adversarial
        best = start
    return AttackOutcome(Perturbation(best - x0), float("nan"), used, success)


# --------------------------------------------------------------------------
# white-box attacks
# --------------------------------------------------------------------------

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _loss_grad(D, img, target_bits: np.ndarray, margin: float) -> np.ndarray:
    """Gradient of the mean per-bit logistic loss against ``target_bits``.

    Bits already on the target side by more than ``margin`` are dropped, so
    the l2 budget is not spent pushing them further.
    """
    z = np.asarray(D.logits(img), dtype=np.float64)
    pending = (2.0 * target_bits - 1.0) * z < margin
    cot = (_sigmoid(z) - target_bits) * pending / target_bits.size
    return D.logit_vjp(img, cot)


def _project(delta: np.ndarray, x0: np.ndarray, R: float) -> np.ndarray:
    delta = np.clip(x0 + delta, 0.0, 1.0) - x0
    n = np.linalg.norm(delta)
    if n > R:
        delta = delta * (R / n) if n > 0 else delta
    return delta


def smooth_noise(x, D, w_T: Watermark, sigma: float, N_prime: int, seed: int) -> np.ndarray:
    """Noise whose decode has the (lower) median BA against ``w_T`` among N' draws."""
    if N_prime < 1:
        raise ValueError("N_prime must be positive")
    arr = as_array(x)
    eps = noise_block(arr.shape, sigma, seed, 0, N_prime)
    bits = (np.asarray(D.logits(arr[None] + eps)).reshape(N_prime, -1) > 0)
    ba = (bits == w_T.bits.astype(bool)).mean(axis=1)
    med = lower_median(ba)
    j = int(np.flatnonzero(ba == med)[0])
    return eps[j]


def _iter_seed(seed: int, it: int, slot: int) -> int:
    return mix64(mix64(seed) ^ mix64((it << 2) | slot))


def _gradient_attack(x, D, w_T: Watermark, budget: AttackBudget, sigma: float | None,
                     seed: int, is_adversarial: Callable | None) -> AttackOutcome:
    x0 = as_array(x)
    target = w_T.bits.astype(np.float64)
    delta = np.zeros_like(x0)
    used = 0
    final_ba = bitwise_accuracy(D.decode_bits(x0), w_T)
    if budget.R > 0:
        for it in range(budget.n_iter):
            point = x0 + delta
            if sigma is not None:
                point = point + smooth_noise(point, D, w_T, sigma, budget.N_prime, _iter_seed(seed, it, 0))
            used += 1
            delta = _project(delta - budget.learning_rate * _loss_grad(D, point, target, budget.margin), x0, budget.R)
            check = x0 + delta
            if sigma is not None:
                check = check + smooth_noise(check, D, w_T, sigma, budget.N_prime, _iter_seed(seed, it, 1))
            final_ba = bitwise_accuracy(D.decode_bits(check), w_T)
            if final_ba >= 1.0 - budget.epsilon_stop:
                break
    if is_adversarial is not None:
        success = bool(is_adversarial(x0 + delta))
    else:
        success = final_ba >= 1.0 - budget.epsilon_stop
    return AttackOutcome(Perturbation(delta), final_ba, used, success)


def whitebox_attack(x, D, w_T: Watermark, budget: AttackBudget,
                    is_adversarial: Callable | None = None) -> AttackOutcome:
    """Projected gradient descent pulling the decode of ``x + delta`` toward ``w_T``.

    ``success`` uses ``is_adversarial(image)`` when given (e.g. a detector
    flip), otherwise whether the target BA reached ``1 - epsilon_stop``.
    """
    return _gradient_attack(x, D, w_T, budget, None, 0, is_adversarial)


def adaptive_whitebox_attack(x, D, w_T: Watermark, sigma: float, budget: AttackBudget,
                             seed: int = 0, is_adversarial: Callable | None = None) -> AttackOutcome:
    """White-box attack that evaluates gradients at median-BA noisy copies."""
    return _gradient_attack(x, D, w_T, budget, sigma, seed, is_adversarial)


__all__ = [
    "AttackBudget", "AttackOutcome", "adaptive_whitebox_attack", "blackbox_attack",
    "compression_init", "quality_compress", "quant_table", "smooth_noise", "whitebox_attack",
]
