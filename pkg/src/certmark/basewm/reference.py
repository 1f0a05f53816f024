"""Linear spread-spectrum watermark with an exact noise model.

Each bit owns an orthonormal pattern. Embedding adds ``+strength * p_i`` for a
one bit and ``-strength * p_i`` for a zero bit; the logit of bit ``i`` is the
projection of the mean-centred image onto ``p_i``. Because the patterns are
orthonormal, the projection of isotropic Gaussian noise onto each pattern is an
independent N(0, sigma^2) variable, so bit-flip probabilities are known in
closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import ImageTensor, Watermark, as_array
from ..errors import ShapeMismatch, ShapeTooSmall
from ..stats import std_normal_cdf
from .contract import Decoder

DEFAULT_STRENGTH = 0.3


@dataclass(frozen=True, eq=False)
class PatternBank:
    seed: int
    patterns: np.ndarray  # (m, C, H, W)

    @property
    def m(self) -> int:
        return self.patterns.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.patterns.shape[1:]

    @property
    def matrix(self) -> np.ndarray:
        return self.patterns.reshape(self.m, -1)


@dataclass(frozen=True)
class SpreadSpectrumConfig:
    strength: float = DEFAULT_STRENGTH
    pattern_seed: int = 0

    def __post_init__(self):
        if not self.strength >= 0:
            raise ValueError("strength must be nonnegative")


@lru_cache(maxsize=32)
def _cached_bank(seed: int, m: int, shape: tuple[int, int, int]) -> PatternBank:
    dim = int(np.prod(shape))
    if m > dim:
        raise ShapeTooSmall(f"cannot fit {m} orthogonal patterns into {dim} pixels")
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((dim, m))
    q, r = np.linalg.qr(draws)
    # sign fix makes the QR result coincide with classical Gram-Schmidt
    q = q * np.sign(np.diag(r))[None, :]
    patterns = np.ascontiguousarray(q.T).reshape((m,) + tuple(shape))
    patterns.setflags(write=False)
    return PatternBank(seed=seed, patterns=patterns)


def gen_patterns(seed: int, m: int, shape) -> PatternBank:
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        shape = (1,) + shape
    return _cached_bank(int(seed), int(m), shape)


def embed(x, wt: Watermark, cfg: SpreadSpectrumConfig, bank: PatternBank | None = None) -> ImageTensor:
    arr = as_array(x)
    if bank is None:
        bank = gen_patterns(cfg.pattern_seed, wt.m, arr.shape)
    if bank.shape != arr.shape or bank.m != wt.m:
        raise ShapeMismatch("pattern bank does not match image/watermark")
    signs = 2.0 * wt.bits.astype(np.float64) - 1.0
    mark = np.tensordot(signs, bank.patterns, axes=1)
    return ImageTensor(arr + cfg.strength * mark)


def ss_logits(x, bank: PatternBank) -> np.ndarray:
    """Projections of ``x - 0.5`` onto the patterns; accepts (C,H,W) or a batch."""
    arr = as_array(x)
    single = arr.ndim == 3
    flat = arr.reshape(1 if single else arr.shape[0], -1)
    if flat.shape[1] != bank.matrix.shape[1]:
        raise ShapeMismatch(f"image has {flat.shape[1]} pixels, bank expects {bank.matrix.shape[1]}")
    z = (flat - 0.5) @ bank.matrix.T
    return z[0] if single else z


def analytic_bit_probability(x, i: int, sigma: float, bank: PatternBank) -> float:
    """Exact Pr(bit i decodes to 1) under N(0, sigma^2 I) noise."""
    return std_normal_cdf(float(ss_logits(x, bank)[i]) / sigma)


def topk_labels(logits, k_prime: int) -> set[int]:
    """Indices (0-based) of the k' largest logits, ties broken by lower index."""
    z = np.asarray(logits, dtype=np.float64)
    if not 1 <= k_prime <= z.size:
        raise ValueError(f"k' must lie in [1, {z.size}]")
    order = np.argsort(-z, kind="stable")
    return set(int(i) for i in order[:k_prime])


class ReferenceDecoder(Decoder):
    """In-process spread-spectrum decoder with analytic logit gradients."""

    def __init__(self, bank: PatternBank):
        self.bank = bank

    @classmethod
    def for_image(cls, seed: int, m: int, shape) -> "ReferenceDecoder":
        return cls(gen_patterns(seed, m, shape))

    @property
    def m(self) -> int:
        return self.bank.m

    def logits(self, x) -> np.ndarray:
        return ss_logits(x, self.bank)

    def logit_vjp(self, x, cotangent) -> np.ndarray:
        """Gradient of sum_i cotangent_i * Z_i(x) with respect to x."""
        cot = np.asarray(cotangent, dtype=np.float64)
        return np.tensordot(cot, self.bank.patterns, axes=1)
