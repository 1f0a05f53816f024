"""The base-decoder contract every smoothed detector is built on."""
from __future__ import annotations

import numpy as np

from ..core import Watermark, as_array


class Decoder:
    """A bitstring watermark decoder exposing per-bit logits.

    Subclasses implement :meth:`logits` for a single (C, H, W) image or a
    (B, C, H, W) batch. Bit ``i`` decodes to 1 iff its logit is strictly
    positive. Decoders that support gradient-based attacks also implement
    :meth:`logit_vjp`.
    """

    m: int

    def logits(self, x) -> np.ndarray:
        raise NotImplementedError

    def decode_bits(self, x) -> np.ndarray:
        return (np.asarray(self.logits(as_array(x))) > 0).astype(np.uint8)

    def decode(self, x) -> Watermark:
        return Watermark(self.decode_bits(x))

    def logit_vjp(self, x, cotangent) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not expose gradients")

    @property
    def has_gradient(self) -> bool:
        return type(self).logit_vjp is not Decoder.logit_vjp
