"""Counter-based normal variates for reproducible, schedule-free simulation.

Every trajectory owns an independent stream keyed by ``(seed, index)``; the
variate used at step ``s`` for coordinate ``i`` is a pure function of
``(seed, index, s * d + i)``. The block cipher is Philox4x64-10 (Salmon et
al., Random123), bit-identical to ``numpy.random.Philox``; uniforms are turned
into normals with the Box-Muller transform, four normals per counter value.
"""

import math

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * math.pi

__all__ = ["philox4x64", "normal_block", "normals"]


@nb.njit(inline="always")
def _mulhilo(a, b):
    lo = a * b
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    t = a_lo * b_lo
    u = a_hi * b_lo + (t >> _S32)
    v = a_lo * b_hi + (u & _MASK32)
    hi = a_hi * b_hi + (u >> _S32) + (v >> _S32)
    return hi, lo


@nb.njit(nogil=True, cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with 10 rounds; all arguments and outputs are uint64."""
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@nb.njit(inline="always")
def _unit(x):
    # (0, 1) open interval, safe for log
    return (np.float64(x >> _S11) + 0.5) * _TWO_M53


@nb.njit(nogil=True, cache=True)
def normal_block(seed, index, block, out):
    """Write the four normals of counter ``block`` of stream ``(seed, index)``."""
    r0, r1, r2, r3 = philox4x64(
        np.uint64(block), np.uint64(0), np.uint64(0), np.uint64(0),
        np.uint64(seed), np.uint64(index),
    )
    rad = math.sqrt(-2.0 * math.log(_unit(r0)))
    ang = TWO_PI * _unit(r1)
    out[0] = rad * math.cos(ang)
    out[1] = rad * math.sin(ang)
    rad = math.sqrt(-2.0 * math.log(_unit(r2)))
    ang = TWO_PI * _unit(r3)
    out[2] = rad * math.cos(ang)
    out[3] = rad * math.sin(ang)


def normals(seed, index, start, count):
    """Normals ``start .. start+count-1`` of stream ``(seed, index)`` as an array."""
    if seed < 0 or index < 0 or start < 0:
        raise ValueError("seed, index and start must be non-negative")
    out = np.empty(count)
    buf = np.empty(4)
    first, last = start // 4, (start + count - 1) // 4
    pos = 0
    for block in range(first, last + 1):
        normal_block(seed, index, block, buf)
        lo = start - 4 * block if block == first else 0
        hi = min(4, start + count - 4 * block)
        out[pos:pos + hi - lo] = buf[lo:hi]
        pos += hi - lo
    return out
