"""Fast simultaneous evaluation of trigonometric sums
F(y) = sum_j a_j e^{i gamma_j y} on integer grids, via rounding the
frequencies onto R-th roots of unity, a Chebyshev-interpolated correction
polynomial, and one FFT per polynomial degree; plus sinc*Logan bandlimited
interpolation with a certified truncation error, and the block-splitting
envelope scheme that trades pointwise values for per-block (min, max)
bounds to cut memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dd import phases_mod_2pi
from .kernels import MollifierParams, logan_ell
from .zeros import CoefficientSet

__all__ = [
    "GridSpec",
    "TrigSum",
    "ChebCorrection",
    "BandlimitSpec",
    "SampleSet",
    "BlockEnvelope",
    "AccuracyError",
    "build_grid_sum",
    "direct_eval",
    "eval_raw",
    "cheb_correction",
    "fft_multi_eval",
    "bandlimited_interp",
    "block_envelope_eval",
]

_EPS = np.finfo(float).eps
TWO_PI = 2.0 * math.pi


class AccuracyError(RuntimeError):
    """The requested accuracy cannot be certified (reported, not degraded)."""


@dataclass(frozen=True)
class GridSpec:
    """Logarithmic evaluation grid exp(y0 + k h), k in [-y_half, y_half]."""

    y0: float
    h: float
    y_half: int

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError(f"grid step must be positive, got {self.h}")
        if self.y_half < 1:
            raise ValueError(f"grid half-width must be >= 1, got {self.y_half}")

    @property
    def a(self) -> float:
        return math.exp(self.y0 - self.y_half * self.h)

    @property
    def b(self) -> float:
        return math.exp(self.y0 + self.y_half * self.h)

    @property
    def max_step(self) -> float:
        # exp step size on the t axis is largest at the top end
        return self.b * -math.expm1(-self.h)


@dataclass(frozen=True)
class TrigSum:
    """Frequencies reduced to [0, 2 pi) (valid on integer grids) with
    carrier-phase premultiplied complex coefficients."""

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        c = np.asarray(self.coeffs, dtype=complex)
        if f.shape != c.shape:
            raise ValueError("freqs and coeffs must have matching shapes")
        if f.size and (np.any(f < 0) or np.any(f >= TWO_PI)):
            raise ValueError("frequencies must lie in [0, 2 pi)")
        if f.size and not np.all(np.isfinite(np.abs(c))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_count(self) -> int:
        return int(self.freqs.size)

    def coeff_l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))


def build_grid_sum(coeffs: CoefficientSet, grid: GridSpec) -> TrigSum:
    """Scale frequencies by the grid step (reduced mod 2 pi in extended
    precision) and fold the grid-center carrier e^{i gamma y0} into the
    coefficients."""
    if coeffs.n == 0:
        return TrigSum(np.empty(0), np.empty(0, dtype=complex))
    f = phases_mod_2pi(coeffs.gammas, grid.h)
    f = np.where(f >= TWO_PI, f - TWO_PI, f)  # guard the closed end
    carrier = phases_mod_2pi(coeffs.gammas, grid.y0)
    a = coeffs.a * (np.cos(carrier) + 1j * np.sin(carrier))
    return TrigSum(f, a)


def eval_raw(freqs, coeffs, y):
    """Compensated direct summation sum a_j e^{i f_j y} for arbitrary real
    frequencies (no reduction): the reference semantics for equivalence
    tests and the block machinery."""
    freqs = np.asarray(freqs, dtype=float)
    coeffs = np.asarray(coeffs, dtype=complex)
    ph = freqs * y
    re = coeffs.real * np.cos(ph) - coeffs.imag * np.sin(ph)
    im = coeffs.real * np.sin(ph) + coeffs.imag * np.cos(ph)
    return complex(math.fsum(re.tolist()), math.fsum(im.tolist()))


def direct_eval(ts: TrigSum, y: float) -> complex:
    """Reference evaluation of the sum at a single (integer or real) point."""
    if ts.n_count == 0:
        return 0j
    return eval_raw(ts.freqs, ts.coeffs, y)


@dataclass(frozen=True)
class ChebCorrection:
    """Monomial coefficients of the Chebyshev interpolant of
    f(t) = exp(i t ratio) on [-1, 1] and its certified sup-norm error."""

    degree: int
    coeffs: np.ndarray
    err_bound: float
    ratio: float


def _cheb_err_bound(n: int, half_ratio: float) -> float:
    # (ratio/2)^{n+1} * sqrt(8) / (n+1)!
    if half_ratio == 0:
        return 0.0
    lg = (n + 1) * math.log(half_ratio) + 0.5 * math.log(8.0) - math.lgamma(n + 2)
    return math.exp(lg) if lg < 700 else math.inf


def cheb_correction(n: int, ratio: float) -> ChebCorrection:
    """Degree-<=n interpolant of exp(i t ratio) at the Chebyshev nodes
    cos((2k-1)pi/(2n+2)), converted to the monomial basis with exact
    integer Chebyshev coefficients and compensated accumulation."""
    if n < 0 or ratio < 0:
        raise ValueError("need degree >= 0 and ratio >= 0")
    k = np.arange(1, n + 2)
    ang = (2 * k - 1) * math.pi / (2 * n + 2)
    nodes = np.cos(ang)
    fvals = np.exp(1j * ratio * nodes)
    j = np.arange(n + 1)
    ct = np.cos(np.outer(j, ang))  # T_j(node_k)
    c = 2.0 / (n + 1) * ct @ fvals
    c[0] *= 0.5
    # exact integer monomial coefficients of T_k via the recurrence
    tcoefs = [[1], [0, 1]]
    for kk in range(2, n + 1):
        prev, prev2 = tcoefs[kk - 1], tcoefs[kk - 2]
        new = [0] * (kk + 1)
        for m, v in enumerate(prev):
            new[m + 1] += 2 * v
        for m, v in enumerate(prev2):
            new[m] -= v
        tcoefs.append(new)
    mono = np.zeros(n + 1, dtype=complex)
    for m in range(n + 1):
        re_terms = [c[kk].real * tcoefs[kk][m] for kk in range(m, n + 1) if m < len(tcoefs[kk])]
        im_terms = [c[kk].imag * tcoefs[kk][m] for kk in range(m, n + 1) if m < len(tcoefs[kk])]
        mono[m] = complex(math.fsum(re_terms), math.fsum(im_terms))
    return ChebCorrection(degree=n, coeffs=mono,
                          err_bound=_cheb_err_bound(n, ratio / 2.0), ratio=ratio)


def _pick_degree(N: int, half_ratio: float, a_l1: float, target: float) -> int:
    cap = math.ceil(math.log2(max(N, 3))) + 8
    for n in range(0, cap + 1):
        if _cheb_err_bound(n, half_ratio) * a_l1 <= target / 3.0:
            return n
    raise AccuracyError(
        f"Chebyshev degree cap {cap} cannot certify accuracy {target:.3e} "
        f"(N={N}, ratio={2*half_ratio:.3f}, sum|a|={a_l1:.3e})")


def fft_multi_eval(ts: TrigSum, y_half: int, accuracy_target: float):
    """F(y) for all integers y in [-Y, Y] with |output - exact| <=
    accuracy_target, by rounding each frequency onto the nearest R-th root
    of unity (R the power of two closest to N, ties toward even in the
    index rounding) and FFT-evaluating the moment sums of the Chebyshev
    correction.  Returns (values, certified_error)."""
    Y = int(y_half)
    if Y < 0:
        raise ValueError("y_half must be >= 0")
    N = ts.n_count
    ys = np.arange(-Y, Y + 1)
    if N == 0:
        return np.zeros(2 * Y + 1, dtype=complex), 0.0
    a_l1 = ts.coeff_l1()
    if N < 4:
        # closed-form path: the rounding scheme needs no machinery here
        vals = np.zeros(2 * Y + 1, dtype=complex)
        for f, a in zip(ts.freqs, ts.coeffs):
            vals += a * np.exp(1j * f * ys)
        return vals, 4.0 * _EPS * a_l1 * max(1, N)
    r_exp = int(round(math.log2(N)))
    R = 2 ** r_exp
    n_j = np.rint(ts.freqs * R / TWO_PI)  # round-half-even ties
    delta = ts.freqs - TWO_PI * n_j / R
    n_j = (n_j.astype(np.int64)) % R
    Yf = max(Y, 1)
    half_ratio = math.pi * Yf / (2.0 * R)
    degree = _pick_degree(N, half_ratio, a_l1, accuracy_target)
    corr = cheb_correction(degree, 2.0 * half_ratio)
    # moment arrays f_l(k) = sum_{n_j == k} a_j (R delta_j / (pi Y))^l,
    # one FFT per degree, consumed immediately (|hat_l| <= sum|a| Y^-l so
    # the ascending accumulation with explicit y^l powers cannot overflow)
    scale = delta * (R / (math.pi * Yf))
    idx = ys % R
    acc = np.zeros(2 * Y + 1, dtype=complex)
    ypow = np.ones(2 * Y + 1)
    w = ts.coeffs.copy()
    for ell in range(degree + 1):
        fl = np.bincount(n_j, weights=w.real, minlength=R) \
            + 1j * np.bincount(n_j, weights=w.imag, minlength=R)
        hat = R * np.fft.ifft(fl)  # sum_k f_l(k) e^{+2 pi i k y / R}
        acc += corr.coeffs[ell] * hat[idx] * ypow
        if ell < degree:
            w = w * scale
            ypow = ypow * ys
    cheb_part = corr.err_bound * a_l1
    round_part = _EPS * (r_exp + degree + 8) * a_l1 * float(np.sum(np.abs(corr.coeffs)))
    cert = cheb_part + round_part
    if cert > accuracy_target:
        raise AccuracyError(
            f"certified error {cert:.3e} exceeds target {accuracy_target:.3e}")
    return acc, cert


@dataclass(frozen=True)
class BandlimitSpec:
    """Sampling geometry for sinc*Logan interpolation: band edge lam,
    sampling rate beta (samples at pi n / beta), Logan window parameters,
    the coefficient l1 mass, and the actual max frequency tau."""

    lam: float
    beta: float
    kernel_c: float
    kernel_eps: float
    coeff_l1: float
    tau: float

    def __post_init__(self):
        if not (self.tau <= self.lam - self.kernel_eps
                < self.lam + self.kernel_eps <= self.beta):
            raise ValueError(
                "need tau <= lam - eps < lam + eps <= beta, got "
                f"tau={self.tau}, lam={self.lam}, eps={self.kernel_eps}, beta={self.beta}")

    @property
    def window_halfwidth(self) -> float:
        return self.kernel_c / self.kernel_eps

    def truncation_error(self) -> float:
        """Certified bound for the discarded |y - pi n/beta| > c/eps part:
        (2A/sinh c)(log(e(c+1))/pi + 2 eps/beta)."""
        c = self.kernel_c
        inv_sinh = 2.0 * math.exp(-c) / -math.expm1(-2.0 * c)
        return (2.0 * self.coeff_l1 * inv_sinh
                * (math.log(math.e * (c + 1.0)) / math.pi
                   + 2.0 * self.kernel_eps / self.beta))


@dataclass(frozen=True)
class SampleSet:
    """Values F(pi n / beta) for consecutive integers n in [n_lo, n_hi]."""

    n_lo: int
    values: np.ndarray
    sample_err: float = 0.0

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.values.size - 1


def bandlimited_interp(samples: SampleSet, spec: BandlimitSpec, y):
    """Reconstruct F at the points y from equispaced samples through the
    sinc * Logan window; returns (values, certified_error) where the error
    covers window truncation plus the samples' own accuracy."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    step = math.pi / spec.beta
    halfw = spec.window_halfwidth
    n_min = np.ceil((ys.min() - halfw) / step)
    n_max = np.floor((ys.max() + halfw) / step)
    if n_min < samples.n_lo or n_max > samples.n_hi:
        raise ValueError(
            f"samples cover n in [{samples.n_lo}, {samples.n_hi}], "
            f"interpolation needs [{int(n_min)}, {int(n_max)}]")
    kernel = MollifierParams(spec.kernel_c, spec.kernel_eps)
    out = np.empty(ys.size, dtype=complex)
    wsum_max = 0.0
    span = int(math.floor(halfw / step)) + 1
    for i, yv in enumerate(ys):
        nc = int(round(yv / step))
        lo = max(nc - span, samples.n_lo)
        hi = min(nc + span, samples.n_hi)
        n = np.arange(lo, hi + 1)
        d = yv - step * n
        inside = np.abs(d) <= halfw
        d = d[inside]
        vals = samples.values[lo - samples.n_lo: hi + 1 - samples.n_lo][inside]
        z = spec.lam * d
        zsafe = np.where(np.abs(z) > 1e-8, z, 1.0)
        sinc = np.where(np.abs(z) > 1e-8, np.sin(zsafe) / zsafe, 1.0 - z * z / 6.0)
        window = np.asarray(logan_ell(kernel, d), dtype=float)
        wts = (spec.lam / spec.beta) * sinc * window
        out[i] = np.dot(wts, vals)
        wsum_max = max(wsum_max, float(np.sum(np.abs(wts))))
    err = spec.truncation_error() + wsum_max * samples.sample_err
    if np.ndim(y) == 0:
        return complex(out[0]), err
    return out, err


@dataclass(frozen=True)
class BlockEnvelope:
    """Per-block carriers and retained (min, max) of the recombined real
    part, with the total certified interpolation/evaluation charge."""

    carriers: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    errors: np.ndarray
    block_size: int

    @property
    def lower(self) -> float:
        return float(np.sum(self.mins) - np.sum(self.errors))

    @property
    def upper(self) -> float:
        return float(np.sum(self.maxs) + np.sum(self.errors))


def block_envelope_eval(coeffs: CoefficientSet, grid: GridSpec,
                        block_exponent: float, x_scale: float | None = None,
                        accuracy_target: float = 1e-8,
                        kernel_c: float = 20.0) -> BlockEnvelope:
    """Split the zero sum into contiguous gamma blocks of size
    floor(x^eta), evaluate each block on its own coarse grid (FFT path),
    extend to the fine grid by bandlimited interpolation around the block
    carrier, and keep only per-block (min, max) of Re e^{i y tau_k} F_k(y).

    The returned envelope satisfies
    lower <= Re F(y) <= upper for every integer y in [-Y, Y]."""
    x0 = x_scale if x_scale is not None else math.exp(grid.y0)
    nb = max(1, int(x0 ** block_exponent))
    n = coeffs.n
    if n == 0:
        return BlockEnvelope(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), nb)
    Y = grid.y_half
    ys = np.arange(-Y, Y + 1)
    carriers, mins, maxs, errs = [], [], [], []
    n_blocks = (n + nb - 1) // nb
    acc_k = accuracy_target / max(n_blocks, 1)
    for k in range(n_blocks):
        sl = slice(k * nb, min((k + 1) * nb, n))
        g = coeffs.gammas[sl]
        carrier_ph = phases_mod_2pi(g, grid.y0)
        a = coeffs.a[sl] * (np.cos(carrier_ph) + 1j * np.sin(carrier_ph))
        tau_g = 0.5 * (g[0] + g[-1])
        shifted = (g - tau_g) * grid.h  # small real frequencies, no wrap
        w_band = float(np.max(np.abs(shifted))) if g.size > 1 else 0.0
        tau_scaled = tau_g * grid.h
        a_l1 = float(np.sum(np.abs(a)))
        if w_band < 1e-9:
            # constant block: G_k(y) = sum a (up to a negligible bandwidth)
            g0 = complex(np.sum(a))
            re = np.cos(tau_scaled * ys) * g0.real - np.sin(tau_scaled * ys) * g0.imag
            block_err = a_l1 * max(w_band, 0.0) * Y  # residual detuning
            carriers.append(tau_g)
            mins.append(float(np.min(re)))
            maxs.append(float(np.max(re)))
            errs.append(block_err)
            continue
        # lam - eps lands back on w_pad >= tau and beta is literally lam + eps,
        # so the spec inequalities survive float rounding
        w_pad = w_band * (1.0 + 1e-9)
        k_eps = 0.125 * w_pad
        lam = w_pad + k_eps
        beta = lam + k_eps
        spec = BandlimitSpec(lam=lam, beta=beta, kernel_c=kernel_c,
                             kernel_eps=k_eps, coeff_l1=a_l1, tau=w_band)
        step = math.pi / beta
        halfw = spec.window_halfwidth
        n_lo = int(math.floor((-Y - halfw) / step)) - 1
        n_hi = int(math.ceil((Y + halfw) / step)) + 1
        half_n = max(abs(n_lo), abs(n_hi))
        n_samples = 2 * half_n + 1
        if g.size * n_samples <= 2_000_000:
            # small workload: exact direct samples beat the FFT machinery
            sgrid = step * np.arange(-half_n, half_n + 1)
            sample_vals = np.exp(1j * np.outer(sgrid, shifted)) @ a
            fft_cert = 8.0 * _EPS * a_l1
        else:
            sample_freqs = np.mod(shifted * step, TWO_PI)
            sample_freqs = np.where(sample_freqs >= TWO_PI,
                                    sample_freqs - TWO_PI, sample_freqs)
            sample_ts = TrigSum(sample_freqs, a)
            sample_vals, fft_cert = fft_multi_eval(sample_ts, half_n, acc_k)
        samples = SampleSet(n_lo=-half_n, values=sample_vals, sample_err=fft_cert)
        gvals, interp_err = bandlimited_interp(samples, spec, ys.astype(float))
        re = (np.cos(tau_scaled * ys) * gvals.real
              - np.sin(tau_scaled * ys) * gvals.imag)
        # rounding of the split gamma*h = shifted + tau_scaled phases
        interp_err += a_l1 * 2.0 * _EPS * (abs(tau_scaled) + w_band) * Y
        carriers.append(tau_g)
        mins.append(float(np.min(re)))
        maxs.append(float(np.max(re)))
        errs.append(interp_err)
    return BlockEnvelope(np.array(carriers), np.array(mins), np.array(maxs),
                         np.array(errs), nb)
