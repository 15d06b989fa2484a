"""64-bit FNV-1a checksums over raw pixel bytes.

Cheap byte-exact reproducibility checks for manifests.  The hot loop is
JIT-compiled; a pure-Python twin keeps the package importable without a
working numba and doubles as the oracle in tests.
"""

from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64_py(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK
    return h


try:
    from numba import njit

    @njit(cache=True)
    def _fnv1a64_jit(buf):  # pragma: no cover - thin jit wrapper
        h = np.uint64(FNV_OFFSET)
        p = np.uint64(FNV_PRIME)
        for i in range(buf.size):
            h = (h ^ np.uint64(buf[i])) * p
        return h

    def fnv1a64(data) -> int:
        """FNV-1a over bytes or a uint8 array; returns a 64-bit int."""
        if isinstance(data, np.ndarray):
            buf = np.ascontiguousarray(data, dtype=np.uint8).reshape(-1)
        else:
            buf = np.frombuffer(bytes(data), dtype=np.uint8)
        return int(_fnv1a64_jit(buf))

except ImportError:  # pragma: no cover

    def fnv1a64(data) -> int:
        if isinstance(data, np.ndarray):
            data = np.ascontiguousarray(data, dtype=np.uint8).tobytes()
        return fnv1a64_py(bytes(data))


def checksum_pixels(pixels: np.ndarray) -> int:
    """Checksum of an image's raw RGB bytes in row-major order."""
    return fnv1a64(pixels)
