import numpy as np
import pytest

from certmark.basewm import ReferenceDecoder, SpreadSpectrumConfig, analytic_bit_probability, embed
from certmark.core import DetectorConfig, Watermark, bitwise_accuracy
from certmark.errors import DecoderError
from certmark.smoothing import (
    NoisyDecodeBatch,
    SmoothedDetector,
    SmoothingConfig,
    collect_batch,
    image_id_of,
    lower_median,
    sample_noise,
    smoothed_ba,
    smoothed_ba_regression,
    smoothed_bits_multiclass,
    smoothed_bits_multilabel,
)


def make_batch(bit_counts=(0,), label_counts=None, ba=(1.0,), N=None, k_prime=1):
    bit_counts = np.asarray(bit_counts)
    ba = np.sort(np.asarray(ba, dtype=float))[::-1]
    return NoisyDecodeBatch(
        image_id="t", N=N or ba.size, sigma=0.1, bit_counts=bit_counts,
        label_counts=np.asarray(label_counts if label_counts is not None else bit_counts),
        ba_samples=ba, k_prime=k_prime,
    )


class TestNoise:
    def test_deterministic(self):
        a = sample_noise((1, 8, 8), 0.1, 3, "img", 17)
        b = sample_noise((1, 8, 8), 0.1, 3, "img", 17)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_noise((1, 8, 8), 0.1, 3, "img", 18))
        assert not np.array_equal(a, sample_noise((1, 8, 8), 0.1, 4, "img", 17))

    def test_moments(self):
        sigma = 0.1
        z = np.concatenate([sample_noise((1, 100, 100), sigma, 0, "m", j).ravel() for j in range(100)])
        assert z.size == 10**6
        assert abs(z.mean()) <= 5 * sigma / 1e3
        assert abs(z.var() / sigma**2 - 1) < 0.01

    def test_sigma_domain(self):
        with pytest.raises(ValueError):
            sample_noise((1, 2, 2), 0.0, 0, "x", 0)


class TestCollectBatch:
    def test_thread_and_chunk_invariance(self, embedded16, wt16, decoder16):
        x = embedded16[0]
        a = collect_batch(x, decoder16, wt16, SmoothingConfig(N=700, threads=1))
        b = collect_batch(x, decoder16, wt16, SmoothingConfig(N=700, threads=4))
        assert np.array_equal(a.bit_counts, b.bit_counts)
        assert np.array_equal(a.label_counts, b.label_counts)
        assert np.array_equal(a.ba_samples, b.ba_samples)

    def test_samples_follow_noise_stream(self, embedded16, wt16, decoder16):
        x = embedded16[1]
        cfg = SmoothingConfig(sigma=0.3, N=40, master_seed=9, keep_raw=True)
        batch = collect_batch(x, decoder16, wt16, cfg)
        iid = image_id_of(x)
        for j in (0, 13, 39):
            expect = decoder16.decode_bits(x.data + sample_noise(x.shape, 0.3, 9, iid, j))
            assert np.array_equal(batch.raw_bits[j], expect)

    def test_single_sample(self, embedded16, wt16, decoder16):
        b = collect_batch(embedded16[0], decoder16, wt16, SmoothingConfig(N=1))
        assert set(b.bit_counts.tolist()) <= {0, 1}
        assert b.ba_samples.size == 1

    def test_vanishing_noise(self, embedded16, wt16, decoder16):
        x = embedded16[2]
        b = collect_batch(x, decoder16, wt16, SmoothingConfig(sigma=1e-9, N=50))
        base = bitwise_accuracy(decoder16.decode_bits(x), wt16)
        assert np.all(b.ba_samples == base)
        assert np.array_equal(b.bit_counts, 50 * decoder16.decode_bits(x))

    def test_counts_match_analytic(self, small_images, wt16, decoder16):
        N, sigma = 10_000, 0.1
        x = embed(small_images[3], wt16, SpreadSpectrumConfig(0.05), decoder16.bank)
        b = collect_batch(x, decoder16, wt16, SmoothingConfig(sigma=sigma, N=N))
        p = np.array([analytic_bit_probability(x, i, sigma, decoder16.bank) for i in range(16)], dtype=float)
        ok = np.abs(b.bit_counts / N - p) <= 3 * np.sqrt(p * (1 - p) / N) + 1e-12
        assert ok.mean() >= 0.95

    def test_decoder_failure_wrapped(self, embedded16, wt16):
        class Broken(ReferenceDecoder):
            def logits(self, x):
                raise RuntimeError("boom")

        D = Broken(ReferenceDecoder.for_image(0, 16, (1, 32, 32)).bank)
        with pytest.raises(DecoderError) as info:
            collect_batch(embedded16[0], D, wt16, SmoothingConfig(N=10))
        assert info.value.sample_index == 0

    def test_label_size_validation(self, embedded16, wt16, decoder16):
        with pytest.raises(ValueError):
            collect_batch(embedded16[0], decoder16, wt16, SmoothingConfig(N=5, k_prime=17))


class TestEstimators:
    def test_multiclass_unanimous_and_tie(self):
        b = make_batch(bit_counts=[4, 0, 2], ba=[1, 1, 1, 1])
        assert str(smoothed_bits_multiclass(b)) == "100"

    def test_multilabel(self):
        b = make_batch(label_counts=[5, 3, 9], bit_counts=[0, 0, 0])
        assert str(smoothed_bits_multilabel(b, 1)) == "001"
        assert str(smoothed_bits_multilabel(b, 3)) == "111"
        tie = make_batch(label_counts=[4, 4, 4], bit_counts=[0, 0, 0])
        assert str(smoothed_bits_multilabel(tie, 2)) == "110"

    @pytest.mark.parametrize("ba,expected", [([0.7], 0.7), ([1.0, 0.8, 0.6], 0.8), ([1.0, 0.9, 0.7, 0.5], 0.7)])
    def test_regression_lower_median(self, ba, expected):
        assert smoothed_ba_regression(make_batch(ba=ba)) == expected
        assert lower_median(ba) == expected

    def test_dispatch(self):
        wt = Watermark("101")
        b = make_batch(bit_counts=[3, 0, 0], label_counts=[3, 1, 2], ba=[1.0, 2 / 3, 2 / 3])
        assert smoothed_ba(b, wt, "multi_class") == pytest.approx(2 / 3)
        assert smoothed_ba(b, wt, "multi_label", k=2) == 1.0
        assert smoothed_ba(b, wt, "regression") == pytest.approx(2 / 3)


def test_smoothed_detector_repeatable(embedded16, wt16, decoder16):
    det = SmoothedDetector(decoder16, wt16, SmoothingConfig(N=100), DetectorConfig())
    x = embedded16[0]
    assert det.ba(x) == det.ba(x)
    assert det(x) and det.queries == 1
