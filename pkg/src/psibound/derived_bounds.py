"""Chaining certified psi-remainder bounds into bounds for theta, pi*, and
pi via Moebius truncation and partial summation.  Bound functions are
closed-form expression objects with explicit decimal constants (the
Rosser-Schoenfeld 1.03883 / 0.82 factors enter exactly as stated), so a
certificate can be re-evaluated and audited by hand.  Anchor constants are
always computed from the sieve/li oracles at the anchor point, never
copied from published tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import log_integral
from .sieve import SieveTables

__all__ = [
    "BoundCert",
    "ThetaBounds",
    "LiCountBounds",
    "PositivityCertificate",
    "ChainStage",
    "ChainReport",
    "lemma1_theta",
    "lemma2_pistar",
    "lemma3_pi",
    "positivity_certificate",
    "chain_theorem2",
]

PSI_UPPER_CHEB = 1.03883  # psi(x) < 1.03883 x for x > 0
PSI_LOWER = 0.82          # psi(x) >= 0.82 x for x >= 100


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class BoundCert:
    """c_lo <= (x - f(x))/sqrt(x) <= c_hi on [a, b] for f = psi or theta."""

    quantity: str  # "psi" | "theta"
    a: float
    b: float
    c_lo: float
    c_hi: float
    provenance: str = ""

    def __post_init__(self):
        if self.quantity not in ("psi", "theta"):
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if not (2 <= self.a < self.b):
            raise HypothesisError(f"need 2 <= a < b, got [{self.a}, {self.b}]")
        if not (self.c_lo < self.c_hi):
            raise HypothesisError("empty certificate")


@dataclass(frozen=True)
class ThetaBounds:
    """Closed-form bounds for (x - theta(x))/sqrt(x) on [a^2, b], derived
    from a psi certificate with constants (c, C):

      upper(x) = C + 1 - c x^{-1/4} + 1.03883 (x^{1/3}+x^{1/5}+2 log(x) x^{1/13})/sqrt(x)
      lower(x) = c + 1 - C x^{-1/4}
    """

    c: float
    C: float
    a: float
    b: float
    provenance: str = ""

    def upper(self, x):
        x = np.asarray(x, dtype=float)
        extra = PSI_UPPER_CHEB * (x ** (1 / 3) + x ** 0.2
                                  + 2.0 * np.log(x) * x ** (1 / 13)) / np.sqrt(x)
        return self.C + 1.0 - self.c * x ** -0.25 + extra

    def lower(self, x):
        x = np.asarray(x, dtype=float)
        return self.c + 1.0 - self.C * x ** -0.25

    def describe(self) -> str:
        return (f"theta bounds on [{self.a:.6g}, {self.b:.6g}] from psi cert "
                f"(c={self.c!r}, C={self.C!r}): "
                f"upper(x) = {self.C!r} + 1 - ({self.c!r}) x^-1/4 + "
                f"{PSI_UPPER_CHEB} (x^(1/3)+x^(1/5)+2 log(x) x^(1/13))/sqrt(x); "
                f"lower(x) = {self.c!r} + 1 - ({self.C!r}) x^-1/4")


@dataclass(frozen=True)
class LiCountBounds:
    """Closed-form bounds for (li(x) - g(x)) log(x)/sqrt(x) on
    [max(a, 1e7), b], where g is pi* (from a psi cert) or pi (from a theta
    cert):

      upper(x) = C + (2C/log x)(1 + 5/log x) + A log(x)/sqrt(x)
      lower(x) = c + (2c/log x)(1 + 5/log x) + A log(x)/sqrt(x)

    with the anchor A = g-excess at a computed from oracles and c <= 0 <= C
    (a positive certified lower bound is clamped to 0: the remainder
    integral is only upper-bounded, so its sign must be given away)."""

    target: str  # "pi_star" | "pi"
    c: float
    C: float
    A: float
    anchor: float
    a: float
    b: float
    provenance: str = ""

    def upper(self, x):
        x = np.asarray(x, dtype=float)
        lg = np.log(x)
        return self.C + 2.0 * self.C / lg * (1.0 + 5.0 / lg) + self.A * lg / np.sqrt(x)

    def lower(self, x):
        x = np.asarray(x, dtype=float)
        lg = np.log(x)
        return self.c + 2.0 * self.c / lg * (1.0 + 5.0 / lg) + self.A * lg / np.sqrt(x)

    def describe(self) -> str:
        return (f"(li - {self.target}) log x/sqrt x bounds on "
                f"[{self.a:.6g}, {self.b:.6g}]: C={self.C!r}, c={self.c!r}, "
                f"A={self.A!r} (anchor {self.anchor:.6g})")


def lemma1_theta(cert: BoundCert) -> ThetaBounds:
    """psi certificate on [a, b] -> theta bounds on [a^2, b]."""
    if cert.quantity != "psi":
        raise HypothesisError("lemma1 needs a psi certificate")
    if not (1 < cert.a < cert.b):
        raise HypothesisError("need 1 < a < b")
    if cert.a * cert.a >= cert.b:
        raise HypothesisError(f"empty range: a^2 = {cert.a**2:.4g} >= b = {cert.b:.4g}")
    return ThetaBounds(c=cert.c_lo, C=cert.c_hi, a=cert.a * cert.a, b=cert.b,
                       provenance=f"lemma1({cert.provenance})")


def _anchor(excess_fn, a: float) -> float:
    return float(excess_fn(a))


def lemma2_pistar(cert: BoundCert, anchor_a: float, oracle: SieveTables) -> LiCountBounds:
    """psi certificate -> bounds for (li - pi*) log x / sqrt x on
    [max(a, 1e7), b], with A = pi*(a) - li(a) + (a - psi(a))/log(a) from
    the sieve and li oracles."""
    if cert.quantity != "psi":
        raise HypothesisError("lemma2 needs a psi certificate")
    if not (cert.b > 1e7 and 12 < anchor_a < cert.b):
        raise HypothesisError("need b > 1e7 and 12 < a < b")
    if anchor_a < cert.a:
        raise HypothesisError("anchor below the certificate range")
    A = (oracle.pi_star(anchor_a) - log_integral(anchor_a)
         + (anchor_a - oracle.psi(anchor_a)) / math.log(anchor_a))
    return LiCountBounds(target="pi_star", c=min(cert.c_lo, 0.0),
                         C=max(cert.c_hi, 0.0), A=A, anchor=anchor_a,
                         a=max(anchor_a, 1e7), b=cert.b,
                         provenance=f"lemma2({cert.provenance}, a={anchor_a})")


def lemma3_pi(cert_theta: BoundCert, anchor_a: float, oracle: SieveTables) -> LiCountBounds:
    """theta certificate -> bounds for (li - pi) log x / sqrt x on
    [max(a, 1e7), b], with A = pi(a) - li(a) + (a - theta(a))/log(a)."""
    if cert_theta.quantity != "theta":
        raise HypothesisError("lemma3 needs a theta certificate")
    if not (cert_theta.b > 1e7 and 12 < anchor_a < cert_theta.b):
        raise HypothesisError("need b > 1e7 and 12 < a < b")
    if anchor_a < cert_theta.a:
        raise HypothesisError("anchor below the certificate range")
    A = (oracle.prime_pi(anchor_a) - log_integral(anchor_a)
         + (anchor_a - oracle.theta(anchor_a)) / math.log(anchor_a))
    return LiCountBounds(target="pi", c=min(cert_theta.c_lo, 0.0),
                         C=max(cert_theta.c_hi, 0.0), A=A, anchor=anchor_a,
                         a=max(anchor_a, 1e7), b=cert_theta.b,
                         provenance=f"lemma3({cert_theta.provenance}, a={anchor_a})")


@dataclass(frozen=True)
class PositivityCertificate:
    """li(t) - pi(t) > 0 on [2, T], chained from theta positivity."""

    T: float
    anchor_margin: float  # li(10) - pi(10) - (10 - theta(10))/log(10), > 0.1
    small_range_checked: bool

    def describe(self) -> str:
        return (f"li - pi > 0 on [2, {self.T:.6g}] "
                f"(anchor margin {self.anchor_margin:.6f}, [2,10] checked directly)")


def positivity_certificate(theta_positive_T: float, oracle: SieveTables) -> PositivityCertificate:
    """From t - theta(t) > 0 on [2, T] conclude li(t) - pi(t) > 0 there.

    Partial summation from the anchor a=10 gives li(x) - pi(x) =
    [li(10) - pi(10) - (10 - theta(10))/log 10] + (x - theta(x))/log x +
    int_10^x (t - theta(t))/(t log^2 t) dt; the bracket exceeds 0.1 and
    the other terms are positive under the hypothesis.  [2, 10] is checked
    directly against the oracle."""
    margin = (log_integral(10.0) - oracle.prime_pi(10)
              - (10.0 - oracle.theta(10.0)) / math.log(10.0))
    if margin <= 0.1:
        raise HypothesisError(f"anchor margin {margin} unexpectedly small")
    # direct check of [2, 10]: li - pi minimized just after prime jumps
    for p in (2, 3, 5, 7):
        if log_integral(float(p)) - oracle.prime_pi(p) <= 0:
            raise HypothesisError(f"li - pi <= 0 at {p}")
    return PositivityCertificate(T=theta_positive_T, anchor_margin=margin,
                                 small_range_checked=True)


@dataclass(frozen=True)
class ChainStage:
    cert: BoundCert
    theta: ThetaBounds
    active_lo: float
    active_hi: float
    sup_upper: float
    inf_lower: float


@dataclass(frozen=True)
class ChainReport:
    stages: tuple[ChainStage, ...]
    covered_lo: float
    covered_hi: float
    sup_upper: float
    inf_lower: float
    direct_ranges: tuple[tuple[float, float], ...]

    def describe(self) -> str:
        lines = [f"theta-bound chain on [{self.covered_lo:.6g}, {self.covered_hi:.6g}]:"]
        for s in self.stages:
            lines.append(
                f"  stage [{s.active_lo:.6g}, {s.active_hi:.6g}] from psi cert "
                f"(+{s.cert.c_hi!r}/{s.cert.c_lo!r}): sup upper = {s.sup_upper:.6f}, "
                f"inf lower = {s.inf_lower:.6f}")
        lines.append(f"  uniform: upper <= {self.sup_upper:.6f}, lower >= {self.inf_lower:.6f}")
        for lo, hi in self.direct_ranges:
            lines.append(f"  direct computation still required on [{lo:.6g}, {hi:.6g}]")
        return "\n".join(lines)


def _stage_extrema(tb: ThetaBounds, lo: float, hi: float) -> tuple[float, float]:
    # upper is decreasing and lower increasing on the ranges used (x >= 1e4);
    # evaluate on a log grid and verify monotonicity rather than assume it
    xs = np.geomspace(lo, hi, 257)
    up = tb.upper(xs)
    lw = tb.lower(xs)
    if not (np.all(np.diff(up) <= 1e-12) and np.all(np.diff(lw) >= -1e-12)):
        return float(np.max(up)), float(np.min(lw))
    return float(up[0]), float(lw[0])


def chain_theorem2(certs: list[BoundCert], target_lo: float | None = None,
                   target_hi: float | None = None) -> ChainReport:
    """Reproduce the stage-switching derivation: each psi certificate
    yields theta bounds on [a_i^2, b_i]; consecutive stages take over where
    the previous one ends, and the report carries the strongest uniform
    constants on the union plus the ranges still needing direct computation."""
    if not certs:
        raise HypothesisError("no certificates")
    certs = sorted(certs, key=lambda c: c.b)
    for c in certs:
        if c.quantity != "psi":
            raise HypothesisError("chain consumes psi certificates")
    for prev, nxt in zip(certs[:-1], certs[1:]):
        if nxt.a > prev.b:
            raise HypothesisError(
                f"gap between certificate ranges: {prev.b} < {nxt.a}")
    stages = []
    covered_lo = certs[0].a ** 2
    if target_lo is not None:
        covered_lo = max(covered_lo, target_lo)
    cursor = covered_lo
    covered_hi = certs[-1].b if target_hi is None else min(certs[-1].b, target_hi)
    for cert in certs:
        tb = lemma1_theta(cert)
        lo = max(cursor, tb.a)
        hi = min(tb.b, covered_hi)
        if hi <= lo:
            continue
        s, i = _stage_extrema(tb, lo, hi)
        stages.append(ChainStage(cert=cert, theta=tb, active_lo=lo,
                                 active_hi=hi, sup_upper=s, inf_lower=i))
        cursor = hi
    if not stages:
        raise HypothesisError("no stage covers the target range")
    direct = []
    if target_lo is not None and target_lo < stages[0].active_lo:
        direct.append((target_lo, stages[0].active_lo))
    return ChainReport(stages=tuple(stages), covered_lo=stages[0].active_lo,
                       covered_hi=cursor,
                       sup_upper=max(s.sup_upper for s in stages),
                       inf_lower=min(s.inf_lower for s in stages),
                       direct_ranges=tuple(direct))
