"""Truncated zero sum of the explicit formula for the mollified Chebyshev
function, with certified constant, tail, round-off, and input-accuracy
error terms.

The normalized value approximates (x - psi_{c,eps}(x)) / sqrt(x):

    value = (1/ell(i/2)) * 2 Re sum_{0 < gamma < T} ell(gamma) x^{i gamma} / rho

summed over critical-line zero pairs.  Phases gamma*log(x) are reduced
modulo 2 pi in >= 192-bit integer fixed point before any trigonometric
call, and the accumulation is exact (fsum), so the round-off ledger is
dominated by the per-term cos/sin rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dd import phases_log_mod_2pi
from .kernels import KernelDomainError, MollifierParams, logan_ell
from .zeros import CoefficientSet, OffLineZero, ZeroTable

__all__ = [
    "RemainderEstimate",
    "zero_sum_direct",
    "tail_beyond",
    "tail_rh_window",
    "remainder_estimate",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RemainderEstimate:
    """Approximation to (t - psi_{c,eps}(t))/sqrt(t) with its error budget."""

    value: float
    err_const: float          # the Theta(2)/sqrt(t) explicit-formula constant
    err_tail1: float          # zero-sum tail beyond c/eps, normalized
    err_tail2: float          # RH-window tail between the table height and c/eps
    err_round: float          # accumulated round-off bound
    err_zero_accuracy: float  # charge for the table's stated gamma accuracy

    @property
    def total_error(self) -> float:
        return (self.err_const + self.err_tail1 + self.err_tail2
                + self.err_round + self.err_zero_accuracy)


def _ell_i2(params: MollifierParams) -> float:
    return float(logan_ell(params, 0.5j))


def zero_sum_direct(x: float, coeffs: CoefficientSet,
                    off_line: tuple[OffLineZero, ...] = (),
                    off_line_gammas=None) -> float:
    """Normalized real zero sum at a single point (compensated, exact
    accumulation order independence).  Known-beta off-line entries are
    added individually with their x^{beta-1/2} weights; entries without a
    beta cannot produce a value and must go through remainder_estimate,
    which converts them into an error charge."""
    value, _, off_err = _zero_sum(x, coeffs, off_line, off_line_gammas)
    if off_err > 0:
        raise KernelDomainError(
            "off-line zeros without beta cannot be summed; use remainder_estimate")
    return value


def _zero_sum(x: float, coeffs: CoefficientSet,
              off_line: tuple[OffLineZero, ...] = (), off_line_gammas=None):
    if x < 10:
        raise KernelDomainError(f"zero sum requires x >= 10, got {x}")
    params = coeffs.params
    params.require_zero_sum()
    norm = _ell_i2(params)
    if coeffs.n == 0:
        main = 0.0
        round_bound = 0.0
    else:
        phases = phases_log_mod_2pi(coeffs.gammas, float(x))
        re_part = (coeffs.a.real * np.cos(phases) - coeffs.a.imag * np.sin(phases))
        main = 2.0 * math.fsum(re_part.tolist()) / norm
        term_budget = 2.0 * np.sum(np.abs(coeffs.a)) / norm
        round_bound = 6.0 * _EPS * float(term_budget)
    off_val = 0.0
    off_err = 0.0
    for i, oz in enumerate(off_line):
        g = float(off_line_gammas[i]) if off_line_gammas is not None else None
        if g is None:
            raise KernelDomainError("off-line entries need their gamma ordinates")
        if oz.beta is None:
            off_err += _off_line_worst_case(x, params, g, norm)
        else:
            off_val += _off_line_value(x, params, g, oz.beta, norm)
    return main + off_val, round_bound, off_err


def _off_line_value(x, params, gamma, beta, norm):
    # full quadruple for one flagged ordinate: rho = beta + i gamma and
    # 1 - conj(rho) = (1-beta) + i gamma, with their conjugates via 2 Re
    out = 0.0
    for b in (beta, 1.0 - beta):
        ell = logan_ell(params, gamma - 1j * (b - 0.5))
        rho = b + 1j * gamma
        out += 2.0 * (ell * x ** (b - 0.5) * np.exp(1j * gamma * math.log(x)) / rho).real
    return out / norm


def _off_line_worst_case(x, params, gamma, norm):
    # |x^{beta-1/2}| <= sqrt(x), |rho| >= gamma; |ell| bounded through the
    # positive-coefficient series sinh(sqrt(z))/sqrt(z): |f(z)| <= f(|z|)
    c, eps = params.c, params.eps
    z = abs(c * c - (eps * (gamma - 0.5j)) ** 2)
    w = math.sqrt(z)
    if w > 1e-6:
        ellmax = c * math.exp(w - c) * -math.expm1(-2.0 * w) / -math.expm1(-2.0 * c) / w
    else:
        ellmax = 2.0 * c * math.exp(-c) / -math.expm1(-2.0 * c) * (1.0 + w * w / 6.0)
    return 4.0 * ellmax * math.sqrt(x) / (gamma * norm)


def tail_beyond(params: MollifierParams, x: float) -> float:
    """Upper bound for the absolute zero-sum tail above height c/eps
    (unnormalized; divide by sqrt(x) for the remainder scale), rounded up."""
    params.require_tail()
    if x <= 1:
        raise KernelDomainError(f"tail bound requires x > 1, got {x}")
    c, eps = params.c, params.eps
    # 0.16 (x+1)/sinh(c) * e^{0.71 sqrt(c eps)} log(3c) log(c/eps)
    inv_sinh = 2.0 * math.exp(-c) / -math.expm1(-2.0 * c)
    v = 0.16 * (x + 1.0) * inv_sinh * math.exp(0.71 * math.sqrt(c * eps)) \
        * math.log(3.0 * c) * math.log(c / eps)
    return v * (1.0 + 1e-13)


def tail_rh_window(params: MollifierParams, x: float, a: float) -> float:
    """Upper bound for the zero-sum contribution of heights in
    (a c/eps, c/eps], valid when those zeros satisfy the Riemann
    Hypothesis (unnormalized: carries the sqrt(x) factor), rounded up."""
    params.require_tail()
    c, eps = params.c, params.eps
    if not (0.0 < a < 1.0):
        raise KernelDomainError(f"window fraction a must lie in (0,1), got {a}")
    if a * c / eps < 1e3:
        raise KernelDomainError(
            f"window bound needs a*c/eps >= 1e3, got {a * c / eps:.1f}")
    w = c * math.sqrt(1.0 - a * a)
    cosh_ratio = math.exp(w - c) * (1.0 + math.exp(-2.0 * w)) / -math.expm1(-2.0 * c)
    v = (1.0 + 11.0 * c * eps) / (math.pi * c * a * a) * math.log(c / eps) \
        * cosh_ratio * math.sqrt(x)
    return v * (1.0 + 1e-13)


def remainder_estimate(x: float, coeffs: CoefficientSet, table: ZeroTable,
                       rh_beyond_table: bool = True) -> RemainderEstimate:
    """Assemble the remainder approximation at x with every error field
    populated.  When the coefficients' truncation height T sits below
    c/eps, the gap (T, c/eps] is charged through the RH-window bound
    (rh_beyond_table asserts that window is known zero-free off the line,
    e.g. from published verification far above desk heights)."""
    params = coeffs.params
    off = table.off_line
    off_gammas = [table.gammas[oz.index - 1] for oz in off]
    value, err_round, off_err = _zero_sum(x, coeffs, off, off_gammas)
    sx = math.sqrt(x)
    err_const = 2.0 / sx
    T_cut = params.T
    err_tail1 = tail_beyond(params, x) / sx
    err_tail2 = 0.0
    if coeffs.T < T_cut * (1.0 - 1e-12):
        a_frac = coeffs.T / T_cut
        if not rh_beyond_table:
            raise KernelDomainError(
                "table height below c/eps and no RH assertion for the window")
        err_tail2 = tail_rh_window(params, x, a_frac) / sx
    err_zero_acc = _zero_accuracy_charge(x, coeffs, table.accuracy)
    return RemainderEstimate(value=value, err_const=err_const, err_tail1=err_tail1,
                             err_tail2=err_tail2, err_round=err_round + off_err,
                             err_zero_accuracy=err_zero_acc)


def _zero_accuracy_charge(x: float, coeffs: CoefficientSet, accuracy: float) -> float:
    """N * accuracy * max |d(a_rho x^{i gamma})/d gamma| in aggregate:
    each term's gamma-derivative is bounded by |ell'|/|rho| +
    |a|(|log x| + 1/|rho|)."""
    if coeffs.n == 0:
        return 0.0
    params = coeffs.params
    c, eps = params.c, params.eps
    g = coeffs.gammas
    norm = _ell_i2(params)
    u2 = c * c - (eps * g) ** 2
    u = np.sqrt(np.clip(u2, 0.0, None))
    inv_sinh = 2.0 * math.exp(-c) / -math.expm1(-2.0 * c)
    # |d/du sinh(u)/u| <= min(cosh(u)/u, 0.4 u); |du/dgamma| = eps^2 g / u
    big = u > 0.5
    safe_u = np.where(big, u, 1.0)
    cosh_ratio = np.exp(safe_u - c) * (1.0 + np.exp(-2.0 * safe_u)) / -math.expm1(-2.0 * c)
    gp = np.where(big, cosh_ratio / safe_u, 0.4 * u * inv_sinh)
    ell_prime = c * gp * (eps * eps * g / np.maximum(u, 1e-300))
    rho_abs = np.hypot(0.5, g)
    a_abs = np.abs(coeffs.a)
    per_term = ell_prime / rho_abs + a_abs * (abs(math.log(x)) + 1.0 / rho_abs)
    return 2.0 * accuracy * float(np.sum(per_term)) / norm
