import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from certmark.errors import ParseError, UnsupportedFormat
from certmark.imageio import (
    RAW_MAGIC,
    decode_image_bytes,
    encode_netpbm,
    encode_raw,
    list_images,
    load_array,
    load_image,
    save_image,
)


class TestNetpbm:
    def test_p5_scaling(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        img = load_image(p)
        assert img.shape == (1, 2, 2)
        np.testing.assert_array_equal(img.data.ravel(), [0, 1, 128 / 255, 64 / 255])

    def test_p6_channel_order(self):
        buf = b"P6 1 1 255\n" + bytes([10, 20, 30])
        arr = decode_image_bytes(buf)
        np.testing.assert_allclose(arr[:, 0, 0], np.array([10, 20, 30]) / 255)

    def test_header_comments(self):
        buf = b"P5\n# made by hand\n1 # width\n1\n255\n" + bytes([51])
        assert decode_image_bytes(buf)[0, 0, 0] == pytest.approx(0.2)

    def test_truncated_reports_offset(self):
        with pytest.raises(ParseError, match="offset"):
            decode_image_bytes(b"P5\n4 4\n255\n" + bytes(5))

    def test_truncated_header(self):
        with pytest.raises(ParseError):
            decode_image_bytes(b"P5\n4")

    def test_16_bit_unsupported(self):
        with pytest.raises(UnsupportedFormat):
            decode_image_bytes(b"P5\n1 1\n65535\n\x00\x00")

    def test_unknown_magic(self):
        with pytest.raises(UnsupportedFormat):
            decode_image_bytes(b"\x89PNG....")

    def test_roundtrip_quantized(self, rng):
        x = rng.integers(0, 256, size=(3, 5, 4)) / 255.0
        assert np.array_equal(decode_image_bytes(encode_netpbm(x)), x)


class TestRaw:
    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float32, st.tuples(st.integers(1, 3), st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(-4, 4, width=32)))
    def test_roundtrip_bit_identical(self, x):
        back = decode_image_bytes(encode_raw(x.astype(np.float64)))
        assert back.astype(np.float32).tobytes() == x.tobytes()

    def test_layout(self):
        buf = encode_raw(np.arange(6, dtype=float).reshape(1, 2, 3))
        assert buf.startswith(RAW_MAGIC)
        assert struct.unpack_from("<3I", buf, len(RAW_MAGIC)) == (1, 2, 3)
        assert len(buf) == len(RAW_MAGIC) + 12 + 6 * 4

    def test_truncated(self):
        buf = encode_raw(np.zeros((1, 4, 4)))
        with pytest.raises(ParseError):
            decode_image_bytes(buf[:-3])

    def test_load_array_keeps_range(self, tmp_path):
        p = tmp_path / "n.f32"
        save_image(np.full((1, 2, 2), 1.5), p)
        assert load_array(p).max() == 1.5
        assert load_image(p).data.max() == 1.0


def test_list_images_sorted_and_filtered(tmp_path):
    for name in ("b.pgm", "a.f32", "notes.txt"):
        (tmp_path / name).write_bytes(b"")
    assert [p.rsplit("/", 1)[-1] for p in list_images(tmp_path)] == ["a.f32", "b.pgm"]
