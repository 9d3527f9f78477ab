"""Smoothing-kernel machinery: the modified Bessel function I0, Logan's
band-limited window, the mollifier density eta and its normalizer lambda,
the averaging kernels mu/nu with a certified Chebyshev cache, the boundary
mass M, and the principal-value logarithmic integral.

Normalization: eta_{c,eps} carries total mass 1 on [-eps, eps] (so the
window's transform equals the Logan window with value 1 at the origin,
mu has right-limit 1/2 at 0, and |nu(0)| ~ (2 pi c)^{-1/2}).  Everything
with a sinh(c) in the denominator is evaluated through exp(w - c) ratios,
so arbitrarily large c never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expi, i0e

__all__ = [
    "MollifierParams",
    "KernelCache",
    "bessel_i0",
    "logan_ell",
    "eta_density",
    "lambda_norm",
    "eta_weighted_integral",
    "build_cache",
    "mu_nu",
    "mu_plus",
    "mass_M",
    "log_integral",
]

_I0_SERIES_CUTOFF = 20.0
_EXP_OVERFLOW = 709.0


class KernelDomainError(ValueError):
    """Raised when an operation's own precondition fails."""


@dataclass(frozen=True)
class MollifierParams:
    """Sharpness c, log-scale half-width eps, and shift fraction alpha."""

    c: float
    eps: float
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise KernelDomainError(f"c must be positive and finite, got {self.c}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise KernelDomainError(f"eps must be positive and finite, got {self.eps}")
        if not (0.0 <= self.alpha < 1.0):
            raise KernelDomainError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def T(self) -> float:
        """Truncation height c/eps of the zero sum."""
        return self.c / self.eps

    def require_tail(self):
        # tail bounds need c >= 3 and eps <= 1e-3
        if self.c < 3.0:
            raise KernelDomainError(f"tail bound requires c >= 3, got c={self.c}")
        if self.eps > 1e-3:
            raise KernelDomainError(f"tail bound requires eps <= 1e-3, got {self.eps}")

    def require_zero_sum(self):
        # the Theta(2) explicit-formula constant is proven only for eps <= 1e-4
        if self.eps > 1e-4:
            raise KernelDomainError(
                f"explicit formula requires eps <= 1e-4, got {self.eps}")

    def require_mass(self):
        if self.eps >= 1e-2:
            raise KernelDomainError(f"boundary mass requires eps < 1e-2, got {self.eps}")


def bessel_i0(y):
    """I0(y) to <= 1e-14 relative error.

    Power series sum (y/2)^{2n} / (n!)^2 below y=20, scaled Bessel from
    scipy above.  Signals OverflowError once e^y is not representable.
    """
    if np.ndim(y) == 0:
        y = float(y)
        if y < 0 or not math.isfinite(y):
            raise KernelDomainError(f"bessel_i0 needs finite y >= 0, got {y}")
        if y > _EXP_OVERFLOW:
            raise OverflowError(f"I0({y}) exceeds binary64 range")
        if y <= _I0_SERIES_CUTOFF:
            return _i0_series(y)
        return float(i0e(y)) * math.exp(y)
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0):
        raise KernelDomainError("bessel_i0 needs y >= 0")
    if np.any(arr > _EXP_OVERFLOW):
        raise OverflowError("I0 argument exceeds binary64 range")
    small = arr <= _I0_SERIES_CUTOFF
    out = np.empty_like(arr)
    out[small] = [_i0_series(v) for v in arr[small]]
    out[~small] = i0e(arr[~small]) * np.exp(arr[~small])
    return out


def _i0_series(y: float) -> float:
    q = y * y / 4.0
    term = 1.0
    peak = 1.0
    terms = [1.0]
    n = 1
    while True:
        term *= q / (n * n)
        terms.append(term)
        peak = max(peak, term)
        if term < 1e-18 * peak and n > 2:
            break
        n += 1
    return math.fsum(terms)


def _c_over_sinh_c(c: float) -> float:
    # c / sinh(c) = 2 c e^{-c} / (1 - e^{-2c}), safe for any c > 0
    return 2.0 * c * math.exp(-c) / -math.expm1(-2.0 * c)


def logan_ell(params: MollifierParams, t):
    """Logan's window (c/sinh c) * sinh(sqrt(c^2-(eps t)^2)) / sqrt(...).

    Accepts real t (arrays allowed), where the analytic continuation past
    eps|t| = c turns sinh into sin, and complex t (the only cases used are
    t = i/2 and the off-critical-line offsets gamma - i(beta-1/2)).
    The sinh ratio is evaluated as exp(w - c) * (1-e^{-2w})/(1-e^{-2c}),
    never forming sinh(c) itself.
    """
    c, eps = params.c, params.eps
    if np.iscomplexobj(t) or isinstance(t, complex):
        z = c * c - (eps * complex(t)) ** 2
        w = np.sqrt(complex(z))
        val = _sinh_ratio_complex(w, c) * c
        if abs(complex(t).real) < 1e-300:  # purely imaginary argument: real value
            return val.real
        return val
    tt = np.asarray(t, dtype=float)
    z = c * c - (eps * tt) ** 2
    out = np.empty_like(z)
    pos = z >= 0
    w = np.sqrt(np.abs(z))
    cs = _c_over_sinh_c(c)
    v = w[~pos]  # oscillatory branch, v > 0 strictly here
    out[~pos] = cs * np.sin(v) / v
    wp = w[pos]
    big = wp > 1e-6
    safe = np.where(big, wp, 1.0)
    hyper = np.exp(safe - c) * (-np.expm1(-2.0 * safe)) / (-math.expm1(-2.0 * c)) * (c / safe)
    out[pos] = np.where(big, hyper, cs * (1.0 + wp * wp / 6.0))
    if np.ndim(t) == 0:
        return float(out)
    return out


def _sinh_ratio_complex(w, c):
    # c/sinh(c) * sinh(w)/w for complex w, overflow-safe
    if abs(w) < 1e-6:
        return _c_over_sinh_c(c) / c * (1.0 + w * w / 6.0)
    return np.exp(w - c) * (-np.expm1(-2.0 * w)) / (-math.expm1(-2.0 * c)) / w


def eta_density(params: MollifierParams, tau):
    """Mollifier density on [-eps, eps], zero outside (mass-1 normalized)."""
    c, eps = params.c, params.eps
    tt = np.asarray(tau, dtype=float)
    u = tt / eps
    inside = np.abs(u) <= 1.0
    z = c * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    # c/(2 eps sinh c) * I0(z), as i0e ratio: I0(z)/sinh(c) = 2 i0e(z) e^{z-c}/(1-e^{-2c})
    vals = c / eps * i0e(z) * np.exp(z - c) / -math.expm1(-2.0 * c)
    out = np.where(inside, vals, 0.0)
    if np.ndim(tau) == 0:
        return float(out)
    return out


@lru_cache(maxsize=8)
def _gl_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def eta_weighted_integral(params: MollifierParams, t0: float, t1: float, s: float,
                          nodes: int = 128):
    """integral_{t0}^{t1} eta_{c,eps}(tau) e^{s tau} d tau with an error
    bound from a doubled-node Gauss-Legendre check.  Limits are clipped to
    the support [-eps, eps]."""
    c, eps = params.c, params.eps
    t0 = max(t0, -eps)
    t1 = min(t1, eps)
    if t1 <= t0:
        return 0.0, 0.0
    u0, u1 = t0 / eps, t1 / eps

    def quad(n):
        # eta(eps u) e^{s eps u} eps du; eta/sinh(c) via scaled Bessel keeps
        # large c finite: c/2 * I0(z)/sinh(c) = c i0e(z) e^{z-c}/(1-e^{-2c})
        x, w = _gl_rule(n)
        u = 0.5 * (u1 - u0) * x + 0.5 * (u0 + u1)
        z = c * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
        f = c * i0e(z) * np.exp(z - c) / -math.expm1(-2.0 * c) * np.exp(s * eps * u)
        return 0.5 * (u1 - u0) * float(np.dot(w, f))

    v1 = quad(nodes)
    v2 = quad(2 * nodes)
    return v2, max(abs(v2 - v1), 5e-16 * abs(v2))


def lambda_norm(params: MollifierParams):
    """Normalizer lambda = integral eta e^{tau/2}; lies in [e^{-eps/2}, e^{eps/2}]."""
    val, err = eta_weighted_integral(params, -params.eps, params.eps, 0.5)
    return val


def lambda_norm_with_error(params: MollifierParams):
    return eta_weighted_integral(params, -params.eps, params.eps, 0.5)


def _eta1_cdf(c: float, t: float, nodes: int = 128) -> float:
    """H(t) = integral_{-1}^{t} eta_{c,1}, the unit-eps density CDF."""
    p1 = MollifierParams(c, 1.0)
    v, _ = eta_weighted_integral(p1, -1.0, t, 0.0, nodes)
    return v


def _nu_neg(c: float, t: float, nodes: int = 128) -> float:
    """nu(t) = -integral_{-1}^{t} (t - sigma) eta_{c,1}(sigma) d sigma for
    t in [-1, 0] (the Fubini collapse of the double integral of mu)."""
    if t <= -1.0:
        return 0.0
    x, w = _gl_rule(nodes)
    u = 0.5 * (t + 1.0) * x + 0.5 * (t - 1.0)
    z = c * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    dens = c * i0e(z) * np.exp(z - c) / -math.expm1(-2.0 * c)  # eta_{c,1}(u)
    return -0.5 * (t + 1.0) * float(np.dot(w, (t - u) * dens))


@dataclass(frozen=True)
class KernelCache:
    """Degree-64 Chebyshev interpolants of mu and nu on [-1, 0] for one c,
    with certified sup-norm error bounds and the lambda normalizer."""

    c: float
    eps: float
    lam: float
    lam_err: float
    quadrature_tol: float
    mu_cheb: object = field(repr=False)
    nu_cheb: object = field(repr=False)
    interp_err: float = 0.0

    def check(self, params: MollifierParams):
        if params.c != self.c:
            raise KernelDomainError(
                f"kernel cache built for c={self.c}, called with c={params.c}")


def build_cache(params: MollifierParams, degree: int = 64) -> KernelCache:
    """Build the mu/nu Chebyshev cache for params.c and certify its error
    against direct quadrature on a dense grid."""
    c = params.c
    Cheb = np.polynomial.chebyshev.Chebyshev
    mu_cheb = Cheb.interpolate(lambda ts: np.array([-_eta1_cdf(c, t) for t in np.atleast_1d(ts)]),
                               degree, domain=[-1.0, 0.0])
    nu_cheb = Cheb.interpolate(lambda ts: np.array([_nu_neg(c, t) for t in np.atleast_1d(ts)]),
                               degree, domain=[-1.0, 0.0])
    dense = np.linspace(-1.0, 0.0, 321)
    err_mu = max(abs(mu_cheb(t) - (-_eta1_cdf(c, t))) for t in dense)
    err_nu = max(abs(nu_cheb(t) - _nu_neg(c, t)) for t in dense)
    err = max(err_mu, err_nu, 1e-13)
    if err > 1e-10:
        raise KernelDomainError(f"kernel cache interpolation error {err:.2e} > 1e-10")
    lam, lam_err = lambda_norm_with_error(params)
    return KernelCache(c=c, eps=params.eps, lam=lam, lam_err=lam_err,
                       quadrature_tol=1e-12, mu_cheb=mu_cheb, nu_cheb=nu_cheb,
                       interp_err=err)


def mu_nu(cache: KernelCache, t: float):
    """(mu_c(t), nu_c(t)).  mu is odd with a jump at 0 (mu(0) = 0 by
    definition, right-limit 1/2); nu is even, <= 0, and vanishes off (-1, 1)."""
    if t == 0.0:
        return 0.0, float(cache.nu_cheb(0.0))
    a = -abs(t)
    if a <= -1.0:
        return 0.0, 0.0
    mu = float(cache.mu_cheb(a))
    nu = float(cache.nu_cheb(a))
    if t > 0:
        mu = -mu
    return mu, nu


def mu_plus(cache: KernelCache, alpha: float) -> float:
    """Right-limit (mu_c)_+(alpha); equals 1/2 at alpha = 0."""
    if alpha == 0.0:
        return 0.5
    mu, _ = mu_nu(cache, alpha)
    return mu


def mass_M(x: float, params: MollifierParams, t: float,
           cache: KernelCache | None = None):
    """Boundary mass M_{x,c,eps}(t) redistributing the prime-power weight
    log(t) across the smoothing window.  The indicator functions take the
    value 1/2 on interval boundaries; zero outside [e^-eps x, e^eps x]."""
    params.require_mass()
    if x <= 1.0:
        raise KernelDomainError("mass_M needs x > 1")
    eps = params.eps
    lo, hi = math.exp(-eps) * x, math.exp(eps) * x
    if t < lo or t > hi:
        return 0.0
    if cache is not None:
        cache.check(params)
        lam = cache.lam
    else:
        lam = lambda_norm(params)
    r = math.log(t / x)
    chi_up = _chi_star(t, x, hi)
    chi_dn = _chi_star(t, lo, x)
    up, _ = eta_weighted_integral(params, -eps, r, -0.5)
    dn, _ = eta_weighted_integral(params, r, eps, -0.5)
    return math.log(t) / lam * (chi_up * up - chi_dn * dn)


def mass_M_with_error(x: float, params: MollifierParams, t: float,
                      cache: KernelCache | None = None):
    """mass_M plus an upper bound on its quadrature/normalizer error."""
    params.require_mass()
    eps = params.eps
    lo, hi = math.exp(-eps) * x, math.exp(eps) * x
    if t < lo or t > hi:
        return 0.0, 0.0
    if cache is not None:
        cache.check(params)
        lam, lam_err = cache.lam, cache.lam_err
    else:
        lam, lam_err = lambda_norm_with_error(params)
    r = math.log(t / x)
    chi_up = _chi_star(t, x, hi)
    chi_dn = _chi_star(t, lo, x)
    up, e_up = eta_weighted_integral(params, -eps, r, -0.5)
    dn, e_dn = eta_weighted_integral(params, r, eps, -0.5)
    val = math.log(t) / lam * (chi_up * up - chi_dn * dn)
    err = math.log(t) / lam * (chi_up * e_up + chi_dn * e_dn
                               + (abs(up) + abs(dn)) * lam_err / lam)
    return val, abs(err) + 1e-15 * abs(val)


def _chi_star(t: float, a: float, b: float) -> float:
    if t < a or t > b:
        return 0.0
    if t == a or t == b:
        return 0.5
    return 1.0


def log_integral(x):
    """Principal-value logarithmic integral li(x) = PV int_0^x dt/log t
    (li(2) = 1.0451...), via Ei(log x).  Signals at the x = 1 divergence."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise KernelDomainError("log_integral needs x > 0")
    if np.any(arr == 1.0):
        raise KernelDomainError("log_integral diverges at x = 1")
    out = expi(np.log(arr))
    if np.ndim(x) == 0:
        return float(out)
    return out
