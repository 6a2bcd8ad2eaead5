"""Seeded, platform-stable random streams.

Raw bits come from the Philox4x32-10 counter-based generator (numpy's
``Philox`` bit generator, keyed by ``(seed, stream)``).  Everything built on
top of the raw 64-bit words is done here with fixed, documented recipes so a
seed reproduces the same variates on any platform:

* uniform doubles: ``(word >> 11) * 2**-53`` in ``[0, 1)``
* normals: Box-Muller on consecutive uniform pairs
* gamma: Marsaglia-Tsang (shape >= 1) on the normals/uniforms above
* weighted discrete draws: Walker/Vose alias tables
"""
from __future__ import annotations

import hashlib

import numpy as np

from . import kernels

_TWO_M53 = 2.0**-53


def stream_id(*parts) -> int:
    """Map an arbitrary key tuple (e.g. an experiment cell) to a 64-bit stream id."""
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngState:
    """A single random stream.  Not thread-safe; give each worker its own.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    stream : int, default 0
        Unsigned 64-bit stream id; ``(seed, stream)`` pairs are independent.
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        seed = int(seed)
        stream = int(stream)
        if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed = seed
        self.stream = stream
        self._bits = np.random.Philox(key=seed | (stream << 64))

    def __repr__(self):
        return f"RngState(seed={self.seed}, stream={self.stream})"

    def spawn(self, *key) -> "RngState":
        """Independent child stream derived from this seed and ``key``."""
        return RngState(self.seed, stream_id(self.stream, *key))

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(int(size))

    def uniform(self, size: int) -> np.ndarray:
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def normal(self, size: int) -> np.ndarray:
        size = int(size)
        half = (size + 1) // 2
        u = self.uniform(2 * half)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))  # 1 - u in (0, 1]
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * half)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:size]

    def exponential(self, size: int) -> np.ndarray:
        return -np.log1p(-self.uniform(size))

    def gamma(self, shape: float, size: int) -> np.ndarray:
        """Unit-scale Gamma(shape) variates, shape >= 1."""
        if shape < 1.0:
            raise ValueError("gamma sampling requires shape >= 1")
        size = int(size)
        d = shape - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty(size)
        filled = 0
        while filled < size:
            batch = int(1.1 * (size - filled)) + 16
            x = self.normal(batch)
            u = self.uniform(batch)
            v = (1.0 + c * x) ** 3
            ok = v > 0
            with np.errstate(invalid="ignore", divide="ignore"):
                accept = ok & (np.log(u) < 0.5 * x * x + d - d * v + d * np.log(np.where(ok, v, 1.0)))
            got = d * v[accept]
            take = min(got.size, size - filled)
            out[filled:filled + take] = got[:take]
            filled += take
        return out

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def choice_weighted(self, weights, size: int) -> np.ndarray:
        """Indices drawn with replacement with probability proportional to ``weights``."""
        weights = np.asarray(weights, dtype=np.float64)
        prob, alias = kernels.build_alias(weights)
        n = weights.size
        u = self.uniform(size)
        scaled = u * n
        idx = np.minimum(scaled.astype(np.int64), n - 1)
        frac = scaled - idx
        return np.where(frac < prob[idx], idx, alias[idx])

    def dirichlet_ones(self, rows: int, k: int) -> np.ndarray:
        """``rows`` independent draws from Dirichlet(1, ..., 1) on ``k`` cells."""
        e = self.exponential(rows * k).reshape(rows, k)
        return e / e.sum(axis=1, keepdims=True)


def as_rng(rng) -> RngState:
    if isinstance(rng, RngState):
        return rng
    if rng is None:
        return RngState(0)
    return RngState(int(rng))
