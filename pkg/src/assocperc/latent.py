"""Counter-based latent randomness.

Every sampler in the package is a coordinatewise increasing function of
i.i.d. uniforms, each one addressed by an integer key (a tuple of
coordinates).  ``LatentBits`` turns ``(seed, key)`` into a uniform on [0, 1)
with a splitmix64-style mixer, so any bit can be recomputed in isolation and
trials need no shared generator state.  Comparing the same uniform against
different thresholds couples all parameters monotonically.

``seed`` may also be a numpy array of per-trial seeds, in which case every
query returns an array with one entry per trial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)

_GOLDEN_U = np.uint64(_GOLDEN)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def _mix_int(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_arr(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN_U
    z = (z ^ (z >> _S30)) * _M1_U
    z = (z ^ (z >> _S27)) * _M2_U
    return z ^ (z >> _S31)


def _as_u64(x) -> np.ndarray:
    a = np.asarray(x)
    if a.dtype == np.uint64:
        return a
    return a.astype(np.int64).astype(np.uint64)


def hash_key(seed, *coords):
    """Mix ``seed`` and integer coordinates into a 64-bit hash.

    Pure-int inputs take an exact Python-int path; any array input switches
    to a vectorised path that produces identical values elementwise.
    """
    if isinstance(seed, (int, np.integer)) and all(isinstance(c, (int, np.integer)) for c in coords):
        h = _mix_int((int(seed) ^ (len(coords) * _M2)) & MASK64)
        for c in coords:
            h = _mix_int(h ^ (int(c) & MASK64))
        return h
    with np.errstate(over="ignore"):
        h = _mix_arr(_as_u64(seed) ^ np.uint64((len(coords) * _M2) & MASK64))
        for c in coords:
            h = _mix_arr(h ^ _as_u64(c))
    return h


def derive_seed(master: int, index):
    """Seed of trial ``index`` under ``master``; ``index`` may be an array."""
    return hash_key(master, -1, index)


@dataclass(frozen=True)
class LatentBits:
    """Reproducible field of Bernoulli(``p``) bits indexed by integer keys."""

    seed: Any
    p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def with_p(self, p: float) -> "LatentBits":
        return LatentBits(self.seed, p)

    def uniform(self, *coords):
        h = hash_key(self.seed, *coords)
        if isinstance(h, int):
            return (h >> 11) * _INV53
        return (h >> _S11).astype(np.float64) * _INV53

    def bernoulli(self, q: float, *coords):
        return self.uniform(*coords) < q

    def bit(self, *coords):
        """Bernoulli(``p``) bit at a vertex; accepts ``bit(v)`` or ``bit(i, j)``."""
        if len(coords) == 1 and isinstance(coords[0], tuple):
            coords = coords[0]
        return self.uniform(*coords) < self.p

    @property
    def batch_size(self) -> int | None:
        s = np.asarray(self.seed)
        return None if s.ndim == 0 else s.shape[0]


def trial_bits(master: int, start: int, stop: int, p: float) -> LatentBits:
    """Batched latent bits for trials ``start..stop-1`` of a run."""
    return LatentBits(derive_seed(master, np.arange(start, stop, dtype=np.int64)), p)
