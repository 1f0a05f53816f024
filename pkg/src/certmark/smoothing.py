"""Monte-Carlo noise sampling and the three smoothed-decoder point estimators."""
from __future__ import annotations

import enum
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DetectorConfig, ImageTensor, Watermark, as_array, bitwise_accuracy, detect
from .errors import DecoderError

DEFAULT_SIGMA = 0.1
DEFAULT_N = 10_000
EMPIRICAL_N = 100
RAW_BITS_LIMIT = 1000
_CHUNK_ELEMS = 1 << 18


class SmoothingMethod(str, enum.Enum):
    MULTI_CLASS = "multi_class"
    MULTI_LABEL = "multi_label"
    REGRESSION = "regression"


@dataclass(frozen=True)
class SmoothingConfig:
    sigma: float = DEFAULT_SIGMA
    N: int = DEFAULT_N
    master_seed: int = 0
    method: SmoothingMethod = SmoothingMethod.REGRESSION
    k: int | None = None         # multi-label output size; None -> ||wt||_1
    k_prime: int | None = None   # base top-k' size; None -> k
    threads: int = 1
    keep_raw: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", SmoothingMethod(self.method))
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.N < 1:
            raise ValueError("N must be positive")

    def label_sizes(self, wt: Watermark) -> tuple[int, int]:
        k = self.k if self.k is not None else max(1, wt.ones())
        kp = self.k_prime if self.k_prime is not None else k
        if not (1 <= k <= wt.m and 1 <= kp <= wt.m):
            raise ValueError(f"k={k}, k'={kp} must lie in [1, m={wt.m}]")
        return k, kp


def image_id_of(x) -> str:
    """Content-derived identifier, so seeding does not depend on image order."""
    return hashlib.blake2b(np.ascontiguousarray(as_array(x)).tobytes(), digest_size=16).hexdigest()


def stream_key(master_seed: int, image_id) -> int:
    h = hashlib.blake2b(str(image_id).encode(), digest_size=8).digest()
    return kernels.mix64(kernels.mix64(int(master_seed) & kernels._MASK) ^ int.from_bytes(h, "little"))


def sample_noise(shape, sigma: float, master_seed: int, image_id, j: int) -> np.ndarray:
    """The j-th Gaussian noise tensor of an image's stream."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    shape = tuple(shape)
    keys = kernels.sample_keys(stream_key(master_seed, image_id), j, 1)
    return kernels.gaussian_block(keys, int(np.prod(shape)), sigma).reshape(shape)


def noise_block(shape, sigma: float, key: int, start: int, count: int) -> np.ndarray:
    keys = kernels.sample_keys(key, start, count)
    return kernels.gaussian_block(keys, int(np.prod(shape)), sigma).reshape((count,) + tuple(shape))


@dataclass(frozen=True, eq=False)
class NoisyDecodeBatch:
    image_id: str
    N: int
    sigma: float
    bit_counts: np.ndarray     # ones per bit
    label_counts: np.ndarray   # top-k' membership per bit
    ba_samples: np.ndarray     # sorted nonincreasing
    k_prime: int
    raw_bits: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.bit_counts.size


def _chunk_size(dim: int) -> int:
    return max(1, min(256, _CHUNK_ELEMS // max(dim, 1)))


def collect_batch(x, D, wt: Watermark, cfg: SmoothingConfig, image_id=None) -> NoisyDecodeBatch:
    """Decode N noisy copies of ``x`` and accumulate all smoothing statistics."""
    arr = as_array(x)
    if image_id is None:
        image_id = image_id_of(arr)
    _, k_prime = cfg.label_sizes(wt)
    key = stream_key(cfg.master_seed, image_id)
    dim = arr.size
    cs = _chunk_size(dim)
    starts = list(range(0, cfg.N, cs))
    keep_raw = cfg.keep_raw and cfg.N <= RAW_BITS_LIMIT
    wt_bits = wt.bits

    def work(start):
        count = min(cs, cfg.N - start)
        noisy = arr[None] + noise_block(arr.shape, cfg.sigma, key, start, count)
        try:
            z = np.asarray(D.logits(noisy), dtype=np.float64).reshape(count, -1)
        except Exception as exc:
            raise DecoderError(f"decoder failed on samples {start}..{start + count - 1}: {exc}",
                               sample_index=start) from exc
        ones, labels, ba = kernels.accumulate_decodes(z, wt_bits, k_prime)
        raw = (z > 0).astype(np.uint8) if keep_raw else None
        return ones, labels, ba, raw

    if cfg.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]

    m = wt.m
    ones = np.zeros(m, dtype=np.int64)
    labels = np.zeros(m, dtype=np.int64)
    for o, l, _, _ in parts:
        ones += o
        labels += l
    ba = np.sort(np.concatenate([p[2] for p in parts]))[::-1].copy()
    raw = np.concatenate([p[3] for p in parts]) if keep_raw else None
    return NoisyDecodeBatch(image_id=str(image_id), N=cfg.N, sigma=cfg.sigma, bit_counts=ones,
                            label_counts=labels, ba_samples=ba, k_prime=k_prime, raw_bits=raw)


def smoothed_bits_multiclass(batch: NoisyDecodeBatch) -> Watermark:
    """Per-bit majority vote; an exact tie resolves to 0."""
    return Watermark((2 * batch.bit_counts > batch.N).astype(np.uint8))


def smoothed_bits_multilabel(batch: NoisyDecodeBatch, k: int) -> Watermark:
    counts = np.asarray(batch.label_counts)
    if not 1 <= k <= counts.size:
        raise ValueError(f"k must lie in [1, {counts.size}]")
    top = np.argsort(-counts, kind="stable")[:k]
    bits = np.zeros(counts.size, dtype=np.uint8)
    bits[top] = 1
    return Watermark(bits)


def lower_median(values) -> float:
    a = np.sort(np.asarray(values, dtype=np.float64))
    return float(a[(a.size - 1) // 2])


def smoothed_ba_regression(batch: NoisyDecodeBatch) -> float:
    """Median of the per-sample BAs; the lower central value for even N."""
    return lower_median(batch.ba_samples)


def smoothed_ba(batch: NoisyDecodeBatch, wt: Watermark, method, k: int | None = None) -> float:
    method = SmoothingMethod(method)
    if method is SmoothingMethod.REGRESSION:
        return smoothed_ba_regression(batch)
    if method is SmoothingMethod.MULTI_CLASS:
        return bitwise_accuracy(smoothed_bits_multiclass(batch), wt)
    if k is None:
        k = max(1, wt.ones())
    return bitwise_accuracy(smoothed_bits_multilabel(batch, k), wt)


class SmoothedDetector:
    """Detection oracle: smoothed BA against ``wt`` thresholded by ``detector``.

    Each query reuses the noise stream keyed by the queried image's content,
    so repeated queries of the same image give the same answer.
    """

    def __init__(self, D, wt: Watermark, cfg: SmoothingConfig, detector: DetectorConfig = DetectorConfig()):
        self.D = D
        self.wt = wt
        self.cfg = cfg
        self.detector = detector
        self.queries = 0

    def ba(self, x) -> float:
        batch = collect_batch(x, self.D, self.wt, self.cfg)
        k, _ = self.cfg.label_sizes(self.wt)
        return smoothed_ba(batch, self.wt, self.cfg.method, k)

    def __call__(self, x) -> bool:
        self.queries += 1
        return detect(self.ba(x), self.detector)


class BaseDetector:
    """Detection oracle on the unsmoothed decoder."""

    def __init__(self, D, wt: Watermark, detector: DetectorConfig = DetectorConfig()):
        self.D = D
        self.wt = wt
        self.detector = detector
        self.queries = 0

    def ba(self, x) -> float:
        return bitwise_accuracy(self.D.decode_bits(as_array(x)), self.wt)

    def __call__(self, x) -> bool:
        self.queries += 1
        return detect(self.ba(x), self.detector)


__all__ = [
    "DEFAULT_N", "DEFAULT_SIGMA", "EMPIRICAL_N", "BaseDetector", "ImageTensor", "NoisyDecodeBatch",
    "SmoothedDetector", "SmoothingConfig", "SmoothingMethod", "collect_batch", "image_id_of",
    "lower_median", "sample_noise", "smoothed_ba", "smoothed_ba_regression",
    "smoothed_bits_multiclass", "smoothed_bits_multilabel", "stream_key",
]
