"""Image file codecs: binary PGM (P5), binary PPM (P6) and raw float32 tensors.

Raw tensor layout: magic ``IMGF32\\0``, three little-endian uint32 dims
(C, H, W), then C*H*W little-endian float32 values in C-major order.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .core import ImageTensor, as_array
from .errors import ParseError, UnsupportedFormat

RAW_MAGIC = b"IMGF32\0"


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of header", start)
    return buf[start:pos], pos


def _parse_netpbm(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise ParseError(f"bad header field {tok!r}", pos - len(tok))
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"only 8-bit netpbm is supported (maxval={maxval})")
    if width < 1 or height < 1:
        raise ParseError("image dimensions must be positive", pos)
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ParseError("missing whitespace after header", pos)
    pos += 1
    need = width * height * channels
    if len(buf) - pos < need:
        raise ParseError(f"truncated pixel data: need {need} bytes, have {len(buf) - pos}", len(buf))
    pix = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return pix.reshape(height, width, channels).transpose(2, 0, 1).astype(np.float64) / 255.0


def _parse_raw(buf: bytes) -> np.ndarray:
    hdr = len(RAW_MAGIC) + 12
    if len(buf) < hdr:
        raise ParseError("truncated raw tensor header", len(buf))
    c, h, w = struct.unpack_from("<3I", buf, len(RAW_MAGIC))
    need = c * h * w * 4
    if min(c, h, w) < 1:
        raise ParseError("raw tensor dimensions must be positive", len(RAW_MAGIC))
    if len(buf) - hdr < need:
        raise ParseError(f"truncated raw tensor: need {need} bytes, have {len(buf) - hdr}", len(buf))
    data = np.frombuffer(buf, dtype="<f4", count=c * h * w, offset=hdr)
    return data.reshape(c, h, w).astype(np.float64)


def decode_image_bytes(buf: bytes) -> np.ndarray:
    """Parse image bytes into a raw (C, H, W) float64 array (no clamping)."""
    if buf.startswith(RAW_MAGIC):
        return _parse_raw(buf)
    if buf[:2] in (b"P5", b"P6"):
        return _parse_netpbm(buf)
    raise UnsupportedFormat(f"unrecognised image magic {buf[:8]!r}")


def load_image(path) -> ImageTensor:
    with open(path, "rb") as fh:
        buf = fh.read()
    return ImageTensor(decode_image_bytes(buf))


def load_array(path) -> np.ndarray:
    """Like :func:`load_image` but keeps out-of-range values (for noisy inputs)."""
    with open(path, "rb") as fh:
        return decode_image_bytes(fh.read())


def encode_raw(x) -> bytes:
    arr = as_array(x)
    if arr.ndim == 2:
        arr = arr[None]
    c, h, w = arr.shape
    return RAW_MAGIC + struct.pack("<3I", c, h, w) + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def encode_netpbm(x) -> bytes:
    arr = as_array(x)
    if arr.ndim == 2:
        arr = arr[None]
    c, h, w = arr.shape
    if c not in (1, 3):
        raise UnsupportedFormat(f"netpbm needs 1 or 3 channels, got {c}")
    pix = np.clip(np.rint(np.clip(arr, 0, 1) * 255.0), 0, 255).astype(np.uint8)
    magic = b"P5" if c == 1 else b"P6"
    return magic + f"\n{w} {h}\n255\n".encode() + pix.transpose(1, 2, 0).tobytes()


def save_image(x, path) -> None:
    """Write by extension: .pgm/.ppm as 8-bit netpbm, anything else as raw tensor."""
    ext = os.path.splitext(str(path))[1].lower()
    payload = encode_netpbm(x) if ext in (".pgm", ".ppm", ".pnm") else encode_raw(x)
    with open(path, "wb") as fh:
        fh.write(payload)


IMAGE_EXTENSIONS = (".pgm", ".ppm", ".pnm", ".f32", ".raw", ".imgf")


def list_images(directory) -> list[str]:
    names = sorted(n for n in os.listdir(directory) if os.path.splitext(n)[1].lower() in IMAGE_EXTENSIONS)
    return [os.path.join(directory, n) for n in names]
