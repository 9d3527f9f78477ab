"""Extended-precision building blocks: error-free float transforms,
double-double (hi, lo) vector arithmetic, compensated cumulative sums,
and integer fixed-point phase reduction modulo 2*pi.

Everything here is deterministic and vectorizes over numpy arrays.
The (hi, lo) pairs satisfy hi + lo = exact result, |lo| <= ulp(hi)/2,
giving ~106 effective mantissa bits.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1, Veltkamp split constant for binary64

PHASE_BITS = 192  # fixed-point fractional bits used for phase reduction

with mpmath.workprec(320):
    _TWO_PI_FIX = int(mpmath.floor(2 * mpmath.pi() * (1 << PHASE_BITS)))

TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16


def two_sum(a, b):
    """Error-free sum: returns (s, e) with s = fl(a+b), s + e = a + b."""
    s = a + b
    v = s - a
    e = (a - (s - v)) + (b - v)
    return s, e


def fast_two_sum(a, b):
    """Error-free sum assuming |a| >= |b| componentwise."""
    s = a + b
    e = b - (s - a)
    return s, e


def split(a):
    """Veltkamp split of a float into high and low 26-bit halves."""
    t = _SPLITTER * a
    hi = t - (t - a)
    lo = a - hi
    return hi, lo


def two_prod(a, b):
    """Error-free product: (p, e) with p = fl(a*b), p + e = a*b exactly."""
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dd_add(xh, xl, yh, yl):
    sh, se = two_sum(xh, yh)
    se = se + (xl + yl)
    return fast_two_sum(sh, se)


def dd_mul_f(xh, xl, f):
    """(xh, xl) * f with f a plain float (or float array)."""
    ph, pe = two_prod(xh, f)
    pe = pe + xl * f
    return fast_two_sum(ph, pe)


def dd_sum(values) -> float:
    """Exact-compensated sum of an iterable/array of floats (math.fsum)."""
    if isinstance(values, np.ndarray):
        return math.fsum(values.tolist())
    return math.fsum(values)


def compensated_cumsum(values: np.ndarray, block: int = 4096):
    """Cumulative sum with per-block exact bases.

    Within each block a plain float64 cumsum runs relative to an exactly
    (fsum-)accumulated base, so the error of entry k is bounded by
    block * eps * (block partial sums) + n_blocks * eps * total, far below
    a naive sequential cumsum.  Returns (cumsum, error_bound).
    """
    n = values.size
    if n == 0:
        return np.zeros(0), 0.0
    out = np.empty(n)
    eps = np.finfo(float).eps
    block_sums = []
    base = 0.0
    max_inblock = 0.0
    for start in range(0, n, block):
        chunk = values[start:start + block]
        local = np.cumsum(chunk)
        out[start:start + block] = base + local
        block_sums.append(math.fsum(chunk.tolist()))
        base = math.fsum(block_sums)  # exact to 1/2 ulp of the running total
        max_inblock = max(max_inblock, float(abs(local[-1])))
    total = abs(base)
    # in-block sequential cumsum + fsum rounding of each base + base+local add
    err = block * eps * max_inblock + 2.0 * eps * total
    return out, err


def reduce_mod_2pi(x_float: float, scale_int: int) -> float:
    """Reduce x * s mod 2*pi where x is an exact binary64 value and
    scale_int is an integer fixed-point number with PHASE_BITS fractional
    bits.  All arithmetic is integer, so the reduction itself is exact to
    2^-PHASE_BITS regardless of the product's magnitude."""
    m, e = math.frexp(x_float)  # x = m * 2**e, |m| in [0.5, 1)
    mi = int(m * (1 << 53))  # exact 53-bit integer
    # product scaled by 2**(PHASE_BITS + 53 - e)
    prod = mi * scale_int
    shift = 53 - e
    two_pi_scaled = _TWO_PI_FIX << shift
    r = prod % two_pi_scaled
    return r / float(1 << (PHASE_BITS + shift))


def log_fixed(x: float) -> int:
    """ln(x) as a PHASE_BITS fixed-point integer (round to nearest)."""
    with mpmath.workprec(PHASE_BITS + 64):
        return int(mpmath.nint(mpmath.log(mpmath.mpf(x)) * (1 << PHASE_BITS)))


def float_fixed(v: float) -> int:
    """Exact binary64 value as a PHASE_BITS fixed-point integer."""
    m, e = math.frexp(v)
    mi = int(m * (1 << 53))
    shift = PHASE_BITS + e - 53
    if shift >= 0:
        return mi << shift
    return mi >> (-shift)  # only used for values far above 2^-139


def phases_mod_2pi(gammas: np.ndarray, factor: float) -> np.ndarray:
    """gamma * factor mod 2*pi for each gamma, via integer fixed point.

    gammas are exact binary64 inputs; factor is promoted to PHASE_BITS
    fixed point through its exact binary expansion, so the only error is
    the final float64 rounding of the reduced phase (< 1 ulp of 2*pi).
    """
    fac_fix = float_fixed(factor)
    out = np.empty(gammas.size)
    gl = gammas.tolist()
    for i, g in enumerate(gl):
        out[i] = reduce_mod_2pi(g, fac_fix)
    return out


def phases_log_mod_2pi(gammas: np.ndarray, x: float) -> np.ndarray:
    """gamma * ln(x) mod 2*pi via >=192-bit fixed-point reduction."""
    lx = log_fixed(x)
    out = np.empty(gammas.size)
    gl = gammas.tolist()
    for i, g in enumerate(gl):
        out[i] = reduce_mod_2pi(g, lx)
    return out
