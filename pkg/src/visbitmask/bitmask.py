"""Visibility bitmasks over one hemisphere slice.

Sector ``k`` of an ``N``-sector mask covers the angle interval
``[-pi/2 + k*pi/N, -pi/2 + (k+1)*pi/N)`` relative to the projected normal. A
sample occluding the arc ``[lo, hi]`` sets every sector it covers by at least
half a sector width; exact half coverage counts as occluded.

Masks wider than 64 sectors are stored as little-endian arrays of uint64 words
(bit ``k`` lives in word ``k // 64``). Kernels work on these word arrays; the
:class:`VisibilityBitmask` value type wraps a Python int for the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit, resolve_backend

HALF_PI = 0.5 * math.pi
MAX_SECTORS = 4096

_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
_ONE = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)

# _LOW_MASKS[k] has the low k bits set, k = 0..64
_LOW_MASKS = np.array([(1 << k) - 1 for k in range(65)], dtype=np.uint64)


def n_words(n_sectors: int) -> int:
    return (n_sectors + 63) // 64


def _check_sectors(n_sectors):
    if not 1 <= n_sectors <= MAX_SECTORS:
        raise ValueError(f"sector count must lie in [1, {MAX_SECTORS}], got {n_sectors}")


# --- numba kernels ----------------------------------------------------------

@njit
def sector_range_nb(lo, hi, n_sectors):
    """Half-open sector index range ``[a, e)`` occluded by the arc ``[lo, hi]``."""
    scale = n_sectors / math.pi
    u0 = (lo + HALF_PI) * scale
    u1 = (hi + HALF_PI) * scale
    a = max(int(math.ceil(u0 - 0.5)), 0)
    e = min(int(math.floor(u1 + 0.5)), n_sectors)
    if e - a == 1:
        # lone candidate: both ends may sit inside it
        if min(u1, a + 1.0) - max(u0, float(a)) < 0.5:
            return a, a
    if e < a:
        e = a
    return a, e


@njit
def low_mask_nb(k):
    if k >= 64:
        return _ALL
    if k <= 0:
        return np.uint64(0)
    return (_ONE << np.uint64(k)) - _ONE


@njit
def set_range_nb(words, a, e):
    for w in range(words.shape[0]):
        lo_b = a - 64 * w
        hi_b = e - 64 * w
        if hi_b <= 0 or lo_b >= 64 or hi_b <= lo_b:
            continue
        words[w] |= low_mask_nb(hi_b) & ~low_mask_nb(lo_b)


@njit
def arc_words_nb(lo, hi, n_sectors, out):
    for w in range(out.shape[0]):
        out[w] = np.uint64(0)
    a, e = sector_range_nb(lo, hi, n_sectors)
    if e > a:
        set_range_nb(out, a, e)


@njit
def popcount_nb(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return int((x * _H01) >> np.uint64(56))


@njit
def count_words_nb(words):
    c = 0
    for w in range(words.shape[0]):
        c += popcount_nb(words[w])
    return c


@njit
def arc_words_batch_nb(lo, hi, n_sectors):
    out = np.zeros((lo.shape[0], (n_sectors + 63) // 64), dtype=np.uint64)
    for i in range(lo.shape[0]):
        arc_words_nb(lo[i], hi[i], n_sectors, out[i])
    return out


# --- numpy kernels ----------------------------------------------------------

def sector_range(lo, hi, n_sectors):
    """Vectorized :func:`sector_range_nb`."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    scale = n_sectors / math.pi
    u0 = (lo + HALF_PI) * scale
    u1 = (hi + HALF_PI) * scale
    a = np.maximum(np.ceil(u0 - 0.5), 0.0)
    e = np.minimum(np.floor(u1 + 0.5), float(n_sectors))
    lone = (e - a) == 1.0
    lone_short = lone & ((np.minimum(u1, a + 1.0) - np.maximum(u0, a)) < 0.5)
    e = np.where(lone_short, a, np.maximum(e, a))
    return a.astype(np.int64), e.astype(np.int64)


def range_words(a, e, n_sectors):
    """Word arrays (..., n_words) with bits ``[a, e)`` set."""
    base = 64 * np.arange(n_words(n_sectors), dtype=np.int64)
    lo_b = np.clip(np.asarray(a)[..., None] - base, 0, 64)
    hi_b = np.clip(np.asarray(e)[..., None] - base, 0, 64)
    return _LOW_MASKS[hi_b] & ~_LOW_MASKS[lo_b]


def popcount(words):
    """Per-word popcount as int64."""
    words = np.asarray(words, dtype=np.uint64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(words).astype(np.int64)
    x = words - ((words >> _ONE) & _M1)  # pragma: no cover - numpy < 2
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return ((x * _H01) >> np.uint64(56)).astype(np.int64)


def arc_words(theta_min, theta_max, n_sectors=32, backend=None):
    """Vectorized arc-to-words mapping; inputs are clamped to the hemisphere."""
    _check_sectors(n_sectors)
    lo = np.clip(np.asarray(theta_min, dtype=np.float64), -HALF_PI, HALF_PI)
    hi = np.clip(np.asarray(theta_max, dtype=np.float64), -HALF_PI, HALF_PI)
    lo, hi = np.broadcast_arrays(lo, hi)
    if resolve_backend(backend) == "numba":
        flat = arc_words_batch_nb(np.ascontiguousarray(lo.ravel()), np.ascontiguousarray(hi.ravel()), n_sectors)
        return flat.reshape(lo.shape + (n_words(n_sectors),))
    a, e = sector_range(lo, hi, n_sectors)
    return range_words(a, e, n_sectors)


# --- value type -------------------------------------------------------------

def words_to_int(words) -> int:
    return sum(int(w) << (64 * i) for i, w in enumerate(np.asarray(words, dtype=np.uint64).ravel()))


def int_to_words(bits: int, n_sectors: int) -> np.ndarray:
    return np.array([(bits >> (64 * i)) & 0xFFFFFFFFFFFFFFFF for i in range(n_words(n_sectors))],
                    dtype=np.uint64)


@dataclass(frozen=True)
class VisibilityBitmask:
    bits: int = 0
    n_sectors: int = 32

    def __post_init__(self):
        _check_sectors(self.n_sectors)
        if self.bits < 0 or self.bits >> self.n_sectors:
            raise ValueError("bits outside the low n_sectors positions are set")

    @classmethod
    def full(cls, n_sectors=32):
        return cls((1 << n_sectors) - 1, n_sectors)

    @classmethod
    def from_words(cls, words, n_sectors):
        return cls(words_to_int(words), n_sectors)

    def to_words(self) -> np.ndarray:
        return int_to_words(self.bits, self.n_sectors)

    def count(self) -> int:
        return self.bits.bit_count()

    def sectors(self) -> list[int]:
        return [k for k in range(self.n_sectors) if self.bits >> k & 1]

    def reflect(self) -> VisibilityBitmask:
        """Mirror the pattern about the projected normal (sector k <-> N-1-k)."""
        out = 0
        for k in self.sectors():
            out |= 1 << (self.n_sectors - 1 - k)
        return VisibilityBitmask(out, self.n_sectors)

    def __or__(self, other):
        return merge(self, other)

    def __contains__(self, other):
        return (other.bits & ~self.bits) == 0


def sectors_from_arc(theta_min, theta_max, n_sectors=32, backend=None) -> VisibilityBitmask:
    """Mask of every sector at least half covered by ``[theta_min, theta_max]``.

    Angles are radians relative to the projected normal.
    """
    if theta_min > theta_max:
        raise ValueError("theta_min must not exceed theta_max")
    words = arc_words(np.array([theta_min]), np.array([theta_max]), n_sectors, backend)
    return VisibilityBitmask.from_words(words[0], n_sectors)


def _same_width(a, b):
    if a.n_sectors != b.n_sectors:
        raise ValueError("bitmasks have different sector counts")


def merge(acc: VisibilityBitmask, sample: VisibilityBitmask) -> VisibilityBitmask:
    _same_width(acc, sample)
    return VisibilityBitmask(acc.bits | sample.bits, acc.n_sectors)


def newly_unoccluded_count(sample: VisibilityBitmask, acc: VisibilityBitmask) -> int:
    """Sectors ``sample`` occludes that ``acc`` still sees (its light contribution share)."""
    _same_width(acc, sample)
    return VisibilityBitmask(sample.bits & ~acc.bits, acc.n_sectors).count()


def visibility(acc: VisibilityBitmask) -> float:
    return 1.0 - acc.count() / acc.n_sectors
