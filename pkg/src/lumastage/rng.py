"""Stateless counter-based uniforms (splitmix64 finalizer).

Every stochastic choice in the renderer is keyed on (seed, stream, lane,
counter) so renders are bit-identical for a given seed and safely
parallelizable: no generator state is shared or advanced.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def hash_u64(seed: int, stream: int, lane, counter) -> np.ndarray:
    """Vectorized 64-bit hash; lane/counter may be arrays.

    uint64 wraparound is intentional (the usual splitmix mixing)."""
    lane = np.asarray(lane, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN * np.uint64((stream + 1) & 0xFFFFFFFF)
        z = _mix(z + _GOLDEN * (lane + np.uint64(1)))
        z = _mix(z + _GOLDEN * (counter + np.uint64(1)))
    return z


def uniforms(seed: int, stream: int, lane, counter) -> np.ndarray:
    """U[0,1) doubles with 53-bit mantissas."""
    return (hash_u64(seed, stream, lane, counter) >> np.uint64(11)) * (2.0 ** -53)


def uniform_scalar(seed: int, stream: int, lane: int = 0, counter: int = 0) -> float:
    return float(uniforms(seed, stream, np.uint64(lane), np.uint64(counter)))


def string_key(s: str) -> int:
    """Stable 64-bit key for string ids (Python's hash is salted)."""
    import zlib
    return zlib.crc32(s.encode()) | (zlib.adler32(s.encode()) << 32)
