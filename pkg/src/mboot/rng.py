"""Seed handling: per-replicate substreams and hierarchical seed derivation."""

from dataclasses import dataclass

import numpy as np

from . import _kernels

_MASK64 = (1 << 64) - 1


def derive_seed(seed, *path):
    """Deterministic 64-bit child seed for ``path`` under ``seed``.

    Children with different paths are statistically independent; the result
    is a pure function of its arguments.
    """
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def fresh_seed():
    """A new random 63-bit seed, for callers that did not supply one."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))


def resolve_seed(seed):
    return fresh_seed() if seed is None else int(seed) & _MASK64


def data_rng(seed, *path):
    """A numpy Generator for data generation, seeded from a derived seed."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *path)))


@dataclass(frozen=True)
class RngStream:
    """One independent substream: its content depends only on ``(seed, stream_index)``."""

    seed: int
    stream_index: int = 0

    @property
    def key(self):
        return int(
            _kernels.stream_key(np.uint64(self.seed & _MASK64), np.uint64(self.stream_index & _MASK64))
        )

    def integers(self, k, size):
        """``size`` i.i.d. uniform integers in ``[0, k)``."""
        out = np.empty(size, np.int64)
        key, ctr = np.uint64(self.key), 0
        for i in range(size):
            out[i], ctr = _kernels.bounded(key, ctr, k)
        return out

    def uniforms(self, size):
        out = np.empty(size)
        key, ctr = np.uint64(self.key), 0
        for i in range(size):
            out[i], ctr = _kernels.uniform01(key, ctr)
        return out
