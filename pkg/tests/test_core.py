import numpy as np
import pytest
from hypothesis import given, strategies as st

from certmark.core import (
    DetectorConfig,
    DetectorMode,
    ImageTensor,
    Perturbation,
    Watermark,
    bitwise_accuracy,
    detect,
)
from certmark.errors import DomainError, LengthMismatch

bitstrings = st.lists(st.integers(0, 1), min_size=1, max_size=64)


class TestWatermark:
    def test_from_string_and_sequence_agree(self):
        assert Watermark("1011") == Watermark([1, 0, 1, 1])

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            Watermark([0, 2, 1])
        with pytest.raises(ValueError):
            Watermark([])

    def test_immutable(self):
        w = Watermark("0101")
        with pytest.raises(ValueError):
            w.bits[0] = 1
        with pytest.raises(AttributeError):
            w.foo = 1

    def test_ones_and_flip(self):
        w = Watermark("110010")
        assert w.ones() == 3
        assert list(w.ones_indices()) == [0, 1, 4]
        assert str(~w) == "001101"

    def test_random_is_seeded(self):
        assert Watermark.random(30, 5) == Watermark.random(30, 5)
        assert Watermark.random(30, 5).m == 30


class TestBitwiseAccuracy:
    @given(bitstrings)
    def test_identity_and_full_flip(self, bits):
        w = Watermark(bits)
        assert bitwise_accuracy(w, w) == 1.0
        assert bitwise_accuracy(~w, w) == 0.0

    def test_direct_count(self):
        assert bitwise_accuracy(Watermark("1100"), Watermark("1010")) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            bitwise_accuracy(Watermark("10"), Watermark("101"))

    @given(bitstrings, st.randoms())
    def test_complement_sums_to_one(self, bits, rnd):
        w = Watermark(bits)
        other = Watermark([rnd.randint(0, 1) for _ in bits])
        assert bitwise_accuracy(other, w) + bitwise_accuracy(~other, w) == pytest.approx(1.0)


class TestDetect:
    def test_threshold_inclusive_single(self):
        assert detect(0.83, DetectorConfig(0.83, DetectorMode.SINGLE_TAILED))

    def test_lower_tail_double(self):
        assert detect(0.10, DetectorConfig(0.83, DetectorMode.DOUBLE_TAILED))
        assert not detect(0.10, DetectorConfig(0.83, DetectorMode.SINGLE_TAILED))

    @pytest.mark.parametrize("mode", list(DetectorMode))
    def test_middle_never_detected(self, mode):
        assert not detect(0.5, DetectorConfig(0.83, mode))

    @pytest.mark.parametrize("tau", [0.5, 0.2, 1.01])
    def test_tau_domain(self, tau):
        with pytest.raises(DomainError):
            DetectorConfig(tau)

    def test_mode_from_string(self):
        assert DetectorConfig(0.9, "single_tailed").mode is DetectorMode.SINGLE_TAILED


class TestImageTensor:
    def test_clamps_and_adds_channel_axis(self):
        img = ImageTensor(np.array([[-1.0, 0.5], [2.0, 0.25]]))
        assert img.shape == (1, 2, 2)
        assert img.data.min() == 0.0 and img.data.max() == 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ImageTensor(np.array([[np.nan]]))

    def test_perturbed_clamps(self):
        img = ImageTensor(np.full((1, 2, 2), 0.9))
        out = img.perturbed(Perturbation(np.full((1, 2, 2), 0.5)))
        assert np.all(out.data == 1.0)

    def test_perturbation_norm(self):
        p = Perturbation(np.array([[[3.0, 4.0]]]))
        assert p.l2_norm == 5.0
