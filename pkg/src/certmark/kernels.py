"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names (``gaussian_block``, ``accumulate_decodes``) dispatch to the
numba version unless ``CERTMARK_DISABLE_NUMBA`` is set. Both implementations
are always importable so they can be cross-checked and benchmarked.

Noise is produced by a counter-based generator: every normal deviate is a pure
function of a 64-bit per-sample key and the element index (splitmix64 mixing
followed by Box-Muller). That makes the noise for sample ``j`` independent of
how samples are chunked or scheduled across threads.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int (used for key derivation)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def sample_keys(stream_key: int, start: int, count: int) -> np.ndarray:
    """Per-sample keys for samples ``start .. start+count-1`` of a stream."""
    j = np.arange(start, start + count, dtype=np.uint64)
    return _mix64_np(np.uint64(stream_key) ^ _mix64_np((j + np.uint64(1)) * np.uint64(GAMMA)))


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def gaussian_block_numpy(keys: np.ndarray, dim: int, sigma: float) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    npairs = (dim + 1) // 2
    c = np.arange(npairs, dtype=np.uint64) * np.uint64(2)
    base = keys[:, None]
    h1 = _mix64_np(base + (c + np.uint64(1)) * np.uint64(GAMMA))
    h2 = _mix64_np(base + (c + np.uint64(2)) * np.uint64(GAMMA))
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u1)) * sigma
    t = _TWO_PI * u2
    out = np.empty((keys.shape[0], 2 * npairs))
    out[:, 0::2] = r * np.cos(t)
    out[:, 1::2] = r * np.sin(t)
    return out[:, :dim]


def accumulate_decodes_numpy(logits: np.ndarray, wt: np.ndarray, k_prime: int):
    """Per-bit ones counts, top-k' label counts and per-sample BA for a chunk."""
    bits = logits > 0
    ones = bits.sum(axis=0).astype(np.int64)
    m = logits.shape[1]
    # stable sort on -logits puts the lower index first among ties
    order = np.argsort(-logits, axis=1, kind="stable")[:, :k_prime]
    labels = np.bincount(order.ravel(), minlength=m).astype(np.int64)
    ba = (bits == wt.astype(bool)[None, :]).mean(axis=1)
    return ones, labels, ba


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _gaussian_block_nb(keys, dim, sigma, out):
    gamma = np.uint64(GAMMA)
    one = np.uint64(1)
    two = np.uint64(2)
    sh = np.uint64(11)
    npairs = (dim + 1) // 2
    for b in range(keys.shape[0]):
        k = keys[b]
        for p in range(npairs):
            c = np.uint64(p) * two
            h1 = _mix64_nb(k + (c + one) * gamma)
            h2 = _mix64_nb(k + (c + two) * gamma)
            u1 = (np.float64(h1 >> sh) + 1.0) * _INV_2_53
            u2 = np.float64(h2 >> sh) * _INV_2_53
            r = np.sqrt(-2.0 * np.log(u1)) * sigma
            t = _TWO_PI * u2
            out[b, 2 * p] = r * np.cos(t)
            if 2 * p + 1 < dim:
                out[b, 2 * p + 1] = r * np.sin(t)


def gaussian_block_numba(keys: np.ndarray, dim: int, sigma: float) -> np.ndarray:
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    out = np.empty((keys.shape[0], dim))
    _gaussian_block_nb(keys, dim, float(sigma), out)
    return out


@njit(cache=True, nogil=True)
def _accumulate_nb(logits, wt, k_prime, ones, labels, ba):
    n, m = logits.shape
    for j in range(n):
        row = logits[j]
        agree = 0
        for i in range(m):
            bit = 1 if row[i] > 0.0 else 0
            ones[i] += bit
            if bit == wt[i]:
                agree += 1
        ba[j] = agree / m
        order = np.argsort(-row, kind="mergesort")
        for r in range(k_prime):
            labels[order[r]] += 1


def accumulate_decodes_numba(logits: np.ndarray, wt: np.ndarray, k_prime: int):
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    m = logits.shape[1]
    ones = np.zeros(m, dtype=np.int64)
    labels = np.zeros(m, dtype=np.int64)
    ba = np.empty(logits.shape[0])
    _accumulate_nb(logits, np.ascontiguousarray(wt, dtype=np.uint8), int(k_prime), ones, labels, ba)
    return ones, labels, ba


if USE_NUMBA:
    gaussian_block = gaussian_block_numba
    accumulate_decodes = accumulate_decodes_numba
else:
    gaussian_block = gaussian_block_numpy
    accumulate_decodes = accumulate_decodes_numpy
