"""Deterministic randomness plumbing.

Two kinds of streams are used throughout the package:

* ordinary numpy generators derived from ``(seed, stream tag)`` for sampling
  that happens once per realization (atom counts, locations, sizes), and
* stateless keyed draws for lazily extended per-index coefficient maps,
  where a value must depend only on ``(seed, purpose, index)`` so that the
  query order and the worker count never matter.

The keyed construction hashes the key material through splitmix64-style
mixing rounds and maps the 53 high bits to a uniform in (0, 1), which the
inverse normal CDF turns into a Gaussian.  This is a fixed-point, platform
independent recipe: identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1

# Stream tags.  Distinct values keep independent uses of one master seed
# from colliding; the numbers themselves are arbitrary but frozen.
ATOM_STREAM = 0x41
BATCH_STREAM = 0x42
SAMPLE_STREAM = 0x43
REPLICATE_STREAM = 0x52

# Purposes for keyed per-index draws.
GAUSS_COEFF = 0x11
SMALL_JUMP_COEFF = 0x22

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def stream(seed: int, tag: int, *extra: int) -> np.random.Generator:
    """Generator for a named sampling stream derived from ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(tag, *extra))
    return np.random.default_rng(ss)


def replicate_seed(master_seed: int, replicate_id: int) -> int:
    """Derived 64-bit seed for one replicate of a Monte Carlo run."""
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & _MASK64,
        spawn_key=(REPLICATE_STREAM, int(replicate_id)),
    )
    return int(ss.generate_state(1, np.uint64)[0])


def _mix(h: np.ndarray) -> np.ndarray:
    h = (h ^ (h >> np.uint64(30))) * _M1
    h = (h ^ (h >> np.uint64(27))) * _M2
    return h ^ (h >> np.uint64(31))


def keyed_uniforms(seed: int, purpose: int, indices) -> np.ndarray:
    """Uniform(0,1) values keyed by (seed, purpose, multi-index).

    ``indices`` is an integer array of shape (n, d) (a 1-d array is treated
    as a single column).  The result depends only on the key material, not
    on the order or grouping of queries.
    """
    idx = np.asarray(indices, dtype=np.uint64)
    if idx.ndim == 1:
        idx = idx[:, None]
    with np.errstate(over="ignore"):
        h = np.full(idx.shape[0], np.uint64(int(seed) & _MASK64), dtype=np.uint64)
        h = _mix(h ^ (np.uint64(int(purpose) & _MASK64) * _GOLD))
        for j in range(idx.shape[1]):
            h = _mix(h ^ (idx[:, j] * _GOLD + np.uint64(j + 1)))
    # (value + 0.5) * 2^-53 lands strictly inside (0, 1).
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def keyed_normals(seed: int, purpose: int, indices) -> np.ndarray:
    """Standard normal values keyed by (seed, purpose, multi-index)."""
    return ndtri(keyed_uniforms(seed, purpose, indices))
