"""Deterministic, counter-based random number streams.

All randomness in this package flows through :class:`Stream`, a stateless-at-heart
generator built on the SplitMix64 construction (Steele, Lea & Flood 2014; the
finalizer constants are Stafford's "Mix13" variant, as used by Vigna's
``splitmix64.c``).  The i-th raw output of a stream with 64-bit seed ``s`` is

    out_i = mix64((s + (i + 1) * GOLDEN) mod 2**64)

where ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` is the xor-shift/multiply
finalizer below.  Because ``out_i`` is a pure function of ``(s, i)``, any draw
can be reproduced from the seed and a counter alone, across processes and
implementations.

Child streams are derived, never forked:

    child(s, j) = mix64(s XOR mix64((j + 1) * GOLDEN mod 2**64))

so a seed plus a path of nonnegative integers (e.g. ``(config, row, model)``)
names a stream unambiguously.  Uniform doubles take the top 53 bits of the raw
output, giving values on [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV53 = 2.0**-53

_U64 = np.uint64
_V_GOLDEN = _U64(GOLDEN)
_V_MUL1 = _U64(_MUL1)
_V_MUL2 = _U64(_MUL2)
_V30, _V27, _V31, _V11 = _U64(30), _U64(27), _U64(31), _U64(11)


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x &= _MASK
    x ^= x >> 30
    x = (x * _MUL1) & _MASK
    x ^= x >> 27
    x = (x * _MUL2) & _MASK
    x ^= x >> 31
    return x


def split(seed: int, *path: int) -> int:
    """Derive a child seed from ``seed`` and a path of nonnegative indices."""
    s = seed & _MASK
    for j in path:
        if j < 0:
            raise ValueError("split path components must be nonnegative")
        s = mix64(s ^ mix64(((j + 1) * GOLDEN) & _MASK))
    return s


def _raw_block(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized outputs for counters [start, start + count)."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = _U64(seed) + idx * _V_GOLDEN
        x ^= x >> _V30
        x *= _V_MUL1
        x ^= x >> _V27
        x *= _V_MUL2
        x ^= x >> _V31
    return x


class Stream:
    """A seeded stream of reproducible draws.

    Scalar draws are served from an internal vectorized buffer; the value at
    logical counter ``i`` is always ``mix64(seed + (i+1)*GOLDEN)`` regardless
    of how draws are batched.
    """

    __slots__ = ("seed", "_ctr", "_buf", "_buf_start")
    _BLOCK = 1 << 12

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._ctr = 0
        self._buf = None
        self._buf_start = 0

    def spawn(self, *path: int) -> "Stream":
        """Independent child stream; does not consume from this stream."""
        return Stream(split(self.seed, *path))

    @property
    def counter(self) -> int:
        return self._ctr

    def uniform(self) -> float:
        """One double on [0, 1)."""
        buf = self._buf
        i = self._ctr - self._buf_start
        if buf is None or i < 0 or i >= len(buf):
            self._buf = buf = (_raw_block(self.seed, self._ctr, self._BLOCK)
                               >> _V11) * _INV53
            self._buf_start = self._ctr
            i = 0
        self._ctr += 1
        return buf[i]

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles on [0, 1) as a float64 array."""
        out = (_raw_block(self.seed, self._ctr, n) >> _V11) * _INV53
        self._ctr += n
        return out

    def uniform_range(self, low: float, high: float, size: int | None = None):
        if size is None:
            return low + (high - low) * self.uniform()
        return low + (high - low) * self.uniforms(size)

    def exponential(self, rate: float) -> float:
        """One Exponential(rate) variate (mean 1/rate)."""
        return -np.log1p(-self.uniform()) / rate

    def exponentials(self, rate: float, size: int) -> np.ndarray:
        return -np.log1p(-self.uniforms(size)) / rate

    def categorical(self, probs, size: int) -> np.ndarray:
        """``size`` integer draws from the distribution given by ``probs``."""
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise ValueError("probs must be a nonnegative 1-D array")
        cum = np.cumsum(p)
        if not np.isclose(cum[-1], 1.0, atol=1e-12):
            raise ValueError("probs must sum to 1")
        u = self.uniforms(size)
        return np.searchsorted(cum, u, side="right").astype(np.int64).clip(0, p.size - 1)

    def integers(self, n: int, size: int | None = None):
        """Integer draws uniform on [0, n)."""
        if size is None:
            return int(self.uniform() * n)
        return np.minimum((self.uniforms(size) * n).astype(np.int64), n - 1)
