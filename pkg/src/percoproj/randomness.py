"""Counter-based random streams keyed by (seed, cell address).

Every survival coin in a realization is a pure function of
``(seed, depth, i, j)``: two rounds of the splitmix64 finalizer over the
address, salted by a per-(seed, depth) scalar.  This gives

* one independent uniform draw per cell,
* bit-reproducibility from the master seed alone,
* prefix coupling: refining a realization to a larger depth replays the
  exact same coins, so shallower trees are prefixes of deeper ones,
* order independence: disjoint subtrees can be generated in any order
  (or lazily, on demand) and always agree.

The scalar (`_int`) and vector (numpy uint64) code paths implement the
same arithmetic and are cross-checked in the test suite.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1

# splitmix64 finalizer multipliers, golden-ratio increment, two odd salts
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_GOLD = 0x9E3779B97F4A7C15
_K1 = 0xD1B54A32D192ED03
_K2 = 0x8CB92BA72F3D8DD7

_U64 = np.uint64


def mix64(value: int) -> int:
    """splitmix64 finalizer on a Python int (64-bit wraparound)."""
    v = value & _MASK
    v ^= v >> 30
    v = (v * _M1) & _MASK
    v ^= v >> 27
    v = (v * _M2) & _MASK
    v ^= v >> 31
    return v


def derive_seed(master_seed: int, *parts: int | str) -> int:
    """Derive a 64-bit sub-seed from a master seed and a label path.

    Used for experiment sub-streams (per-realization seeds, resampling
    seeds).  String parts are hashed through blake2b so labels cannot
    collide with integer indices.
    """
    h = mix64((master_seed & _MASK) ^ _GOLD)
    for part in parts:
        if isinstance(part, str):
            part = int.from_bytes(
                hashlib.blake2b(part.encode(), digest_size=8).digest(), "big"
            )
        h = mix64(h ^ ((part * _K1) & _MASK))
    return h


def _level_salt(seed: int, level: int) -> int:
    return mix64((seed & _MASK) ^ (((level + 1) * _GOLD) & _MASK))


def survival_threshold(p: float) -> int:
    """Integer threshold t such that a 53-bit draw u survives iff u < t."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"survival probability must be in (0,1), got {p}")
    return min(int(p * 2.0**53), (1 << 53) - 1)


def cell_hash(seed: int, level: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Vectorized 64-bit hash of cell addresses at one level."""
    h = _U64(_level_salt(seed, level))
    with np.errstate(over="ignore"):
        v = i.astype(np.uint64) * _U64(_K1) + h
        v = (v ^ (v >> _U64(30))) * _U64(_M1)
        v = (v ^ (v >> _U64(27))) * _U64(_M2)
        v ^= v >> _U64(31)
        v ^= j.astype(np.uint64) * _U64(_K2) + _U64(_GOLD)
        v = (v ^ (v >> _U64(30))) * _U64(_M1)
        v = (v ^ (v >> _U64(27))) * _U64(_M2)
        v ^= v >> _U64(31)
    return v


def survival_mask(
    seed: int, level: int, i: np.ndarray, j: np.ndarray, threshold: int
) -> np.ndarray:
    """Boolean survival coins for an array of same-level cells."""
    v = cell_hash(seed, level, i, j)
    return (v >> _U64(11)) < _U64(threshold)


def survives_one(seed: int, level: int, i: int, j: int, threshold: int) -> bool:
    """Scalar twin of `survival_mask` (exact same arithmetic)."""
    h = _level_salt(seed, level)
    v = ((i * _K1) + h) & _MASK
    v ^= v >> 30
    v = (v * _M1) & _MASK
    v ^= v >> 27
    v = (v * _M2) & _MASK
    v ^= v >> 31
    v ^= ((j * _K2) + _GOLD) & _MASK
    v &= _MASK
    v ^= v >> 30
    v = (v * _M1) & _MASK
    v ^= v >> 27
    v = (v * _M2) & _MASK
    v ^= v >> 31
    return (v >> 11) < threshold
