"""Deterministic random numbers shared by every stochastic step in the package.

Data splits, shuffles, weight init, and token masking all draw from SplitMix64
run in counter mode: output ``i`` of a stream with seed ``s`` is
``mix64(s + (i + 1) * GOLDEN)`` where ``mix64`` is the SplitMix64 finalizer.
The generator is a few integer ops, so identical seeds give bit-identical
streams on every platform and NumPy build, which host-language PRNGs do not
guarantee across versions.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 2.0 ** -53


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


class Rng:
    """Counter-mode SplitMix64 stream with numpy conveniences.

    The stream position advances by the number of raw draws, so the sequence
    of values depends only on the seed and the order of calls.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            states = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
        return mix64(states)

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit values."""
        return self._raw(n)

    def random(self, size=None):
        """Uniform float64 in [0, 1): top 53 bits of a raw draw."""
        if size is None:
            return float(self._raw(1)[0] >> np.uint64(11)) * _TWO_NEG53
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        vals = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
        return vals.reshape(shape)

    def integers(self, high: int, size=None):
        """Uniform ints in [0, high), bias-free via rejection sampling."""
        if high <= 0:
            raise ValueError(f"high must be positive, got {high}")
        shape = () if size is None else ((size,) if isinstance(size, int) else tuple(size))
        n = int(np.prod(shape)) if shape else 1
        # largest multiple of high that fits in 64 bits; draws at or above it
        # would skew the modulo, so they are redrawn
        limit = np.uint64(((1 << 64) // high) * high - 1)
        out = self._raw(n)
        bad = out > limit
        while bad.any():
            out[bad] = self._raw(int(bad.sum()))
            bad = out > limit
        out = (out % np.uint64(high)).astype(np.int64)
        if size is None:
            return int(out[0])
        return out.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n): stable argsort of raw 64-bit keys."""
        return np.argsort(self._raw(n), kind="stable")

    def shuffled(self, items: list) -> list:
        return [items[i] for i in self.permutation(len(items))]

    def normal(self, size=None, scale: float = 1.0):
        """Standard normals via Box-Muller on pairs of uniforms."""
        shape = () if size is None else ((size,) if isinstance(size, int) else tuple(size))
        n = int(np.prod(shape)) if shape else 1
        half = (n + 1) // 2
        # u1 in (0, 1] keeps log finite; u2 in [0, 1)
        u1 = ((self._raw(half) >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG53
        u2 = (self._raw(half) >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * math.pi * u2), r * np.sin(2.0 * math.pi * u2)])[:n]
        z = z * scale
        if size is None:
            return float(z[0])
        return z.reshape(shape)

    def spawn(self, *keys) -> "Rng":
        """Child stream keyed by integers or short strings, independent of
        this stream's position."""
        s = np.uint64(self._seed)
        for k in keys:
            if isinstance(k, str):
                k = int.from_bytes(k.encode("utf-8")[:8].ljust(8, b"\0"), "little")
            with np.errstate(over="ignore"):
                s = mix64(np.uint64((s + np.uint64(_GOLDEN))) ^ np.uint64(int(k) & _MASK64))
        return Rng(int(s))
