"""Domain types, bitwise accuracy and the watermark detection rule."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LengthMismatch

DEFAULT_M = 30
DEFAULT_TAU = 0.83


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class Watermark:
    """An immutable m-bit string."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        if isinstance(bits, str):
            bits = [int(c) for c in bits.strip()]
        arr = np.asarray(bits)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("watermark must be a non-empty 1-D bit sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("watermark bits must be 0 or 1")
        object.__setattr__(self, "_bits", _frozen(arr.astype(np.uint8)))

    def __setattr__(self, name, value):
        raise AttributeError("Watermark is immutable")

    @classmethod
    def random(cls, m: int, rng: np.random.Generator | int | None = None) -> "Watermark":
        rng = np.random.default_rng(rng)
        return cls(rng.integers(0, 2, size=m))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def m(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, i):
        return int(self._bits[i])

    def flipped(self) -> "Watermark":
        return Watermark(1 - self._bits)

    __invert__ = flipped

    def ones(self) -> int:
        """Number of ones (the l1 norm)."""
        return int(self._bits.sum())

    def ones_indices(self) -> np.ndarray:
        return np.flatnonzero(self._bits)

    def __eq__(self, other):
        if not isinstance(other, Watermark):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash(self._bits.tobytes())

    def __str__(self):
        return "".join(str(int(b)) for b in self._bits)

    def __repr__(self):
        return f"Watermark('{self}')"


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """C x H x W image with values clamped into [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"image must be C x H x W, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", _frozen(np.clip(arr, 0.0, 1.0)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def perturbed(self, delta) -> "ImageTensor":
        delta = delta.delta if isinstance(delta, Perturbation) else delta
        return ImageTensor(self.data + delta)


def as_array(x) -> np.ndarray:
    """Return the raw (C, H, W) array of an ImageTensor or array-like."""
    if isinstance(x, ImageTensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Perturbation:
    delta: np.ndarray
    l2_norm: float = field(init=False)

    def __post_init__(self):
        d = _frozen(np.asarray(self.delta, dtype=np.float64))
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "l2_norm", float(np.linalg.norm(d.ravel())))


class DetectorMode(str, enum.Enum):
    SINGLE_TAILED = "single_tailed"
    DOUBLE_TAILED = "double_tailed"


@dataclass(frozen=True)
class DetectorConfig:
    tau: float = DEFAULT_TAU
    mode: DetectorMode = DetectorMode.DOUBLE_TAILED

    def __post_init__(self):
        object.__setattr__(self, "mode", DetectorMode(self.mode))
        if not 0.5 < self.tau <= 1.0:
            raise DomainError(f"tau must lie in (0.5, 1], got {self.tau}")


def _bits_of(w) -> np.ndarray:
    return w.bits if isinstance(w, Watermark) else np.asarray(w)


def bitwise_accuracy(w, wt) -> float:
    """Fraction of positions where ``w`` and ``wt`` agree."""
    a, b = _bits_of(w), _bits_of(wt)
    if a.shape != b.shape:
        raise LengthMismatch(f"watermark lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise LengthMismatch("watermarks must have at least one bit")
    return float(np.count_nonzero(a == b)) / a.size


def detect(ba: float, cfg: DetectorConfig) -> bool:
    if cfg.mode is DetectorMode.SINGLE_TAILED:
        return ba >= cfg.tau
    return ba >= cfg.tau or ba <= 1.0 - cfg.tau
