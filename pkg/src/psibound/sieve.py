"""Segmented Eratosthenes ground truth at desk scale: exact prime and
prime-power tables, the Chebyshev sums psi/psi0/theta, the counting
functions pi and pi*, direct evaluation of the mollified psi, and exact
extrema of the normalized remainder (t - psi(t))/sqrt(t).

psi is a right-continuous step function, constant between prime powers,
and t -> (t - C)/sqrt(t) is increasing, so interval extrema are attained
at prime-power left-limits (sup side) or at the prime powers and the left
endpoint (inf side); the scan evaluates exactly those candidates, no
epsilon-stepping involved.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dd import compensated_cumsum
from .kernels import KernelCache, MollifierParams, mass_M_with_error

__all__ = ["SieveTables", "sieve_range", "RANGE_GUARD"]

RANGE_GUARD = 10 ** 10  # desk-scale memory/time guard
_DEFAULT_SEGMENT = 1 << 20  # odd numbers per segment


class SieveRangeError(ValueError):
    pass


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def _sieve_odd_segment(base: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Primes in [lo, hi) among odd numbers (2 handled by the caller)."""
    start = lo | 1
    if start < 3:
        start = 3
    n_odd = (hi - start + 1) // 2
    if n_odd <= 0:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(n_odd, dtype=bool)
    for p in base[1:]:  # skip 2
        p = int(p)
        first = max(p * p, ((start + p - 1) // p) * p)
        if first % 2 == 0:
            first += p
        if first >= hi:
            continue
        mask[(first - start) // 2::p] = False
    return start + 2 * np.flatnonzero(mask).astype(np.int64)


@dataclass(frozen=True)
class SieveTables:
    lo: int
    hi: int
    primes: np.ndarray          # primes in [lo, hi]
    prime_powers: np.ndarray    # p^m in [lo, hi], m >= 2
    pp_base_log: np.ndarray     # log p per prime power
    pp_m: np.ndarray            # exponent per prime power
    q: np.ndarray               # merged jump points (primes and powers)
    q_logp: np.ndarray          # psi jump at q
    q_m: np.ndarray             # exponent at q (1 for primes)
    psi_cum: np.ndarray | None  # psi(q_i), only for from-zero tables
    theta_cum: np.ndarray | None
    err_bound: float
    segment_size: int

    # ---------------------------------------------------------- queries

    @property
    def cumulative(self) -> bool:
        return self.psi_cum is not None

    def _require_cumulative(self, x: float):
        if not self.cumulative:
            raise SieveRangeError("tables sieved on a window; cumulative sums need lo=0")
        if not (0 <= x <= self.hi):
            raise SieveRangeError(f"x={x} outside sieved range [0, {self.hi}]")

    def psi(self, x: float) -> float:
        """Chebyshev psi(x) = sum of log p over prime powers <= x."""
        self._require_cumulative(x)
        i = int(np.searchsorted(self.q, math.floor(x), side="right")) - 1
        return float(self.psi_cum[i]) if i >= 0 else 0.0

    def psi0(self, x: float) -> float:
        """psi normalized at jumps: psi(x) - Lambda(x)/2 when x is a prime power."""
        self._require_cumulative(x)
        v = self.psi(x)
        if x == int(x):
            i = int(np.searchsorted(self.q, int(x)))
            if i < self.q.size and self.q[i] == int(x):
                v -= 0.5 * float(self.q_logp[i])
        return v

    def chebyshev_psi(self, x: float) -> tuple[float, float]:
        return self.psi(x), self.psi0(x)

    def theta(self, x: float) -> float:
        """theta(x) = sum of log p over primes <= x."""
        self._require_cumulative(x)
        i = int(np.searchsorted(self.primes, math.floor(x), side="right")) - 1
        return float(self.theta_cum[i]) if i >= 0 else 0.0

    def prime_pi(self, x: float) -> int:
        self._require_cumulative(x)
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def pi_star(self, x: float) -> float:
        """pi*(x) = sum_k pi(x^(1/k))/k (finite: stops once x^(1/k) < 2)."""
        self._require_cumulative(x)
        total = 0.0
        k = 1
        while True:
            r = _kth_root_floor(x, k)
            if r < 2:
                break
            total += self.prime_pi(r) / k
            k += 1
        return total

    def psi_ceps_direct(self, x: float, params: MollifierParams,
                        cache: KernelCache | None = None) -> tuple[float, float]:
        """Mollified psi by direct summation: psi0(x) plus the boundary
        masses of prime powers inside (e^-eps x, e^eps x), each weighted
        1/m.  Returns (value, error_charge)."""
        eps = params.eps
        lo_w = math.exp(-eps) * x
        hi_w = math.exp(eps) * x
        if hi_w > self.hi:
            raise SieveRangeError(f"window top {hi_w} beyond sieved range {self.hi}")
        v = self.psi0(x)
        err = self.err_bound
        i0 = int(np.searchsorted(self.q, math.ceil(lo_w)))
        for i in range(i0, self.q.size):
            t = float(self.q[i])
            if not (lo_w < t < hi_w):
                if t >= hi_w:
                    break
                continue
            m_val, m_err = mass_M_with_error(x, params, t, cache)
            v += m_val / float(self.q_m[i])
            err += m_err / float(self.q_m[i])
        return v, err

    def remainder_extrema(self, a: float, b: float):
        """Exact inf/sup of (t - psi(t))/sqrt(t) over [a, b] with argmin/argmax.

        Sup candidates: left-limits at prime powers in (a, b] and the value
        at t=b; inf candidates: values at prime powers in [a, b) and at t=a.
        """
        return self._extrema(a, b, self.q, self.q_logp, self.psi_cum, self.psi)

    def theta_remainder_extrema(self, a: float, b: float):
        """Same scan for (t - theta(t))/sqrt(t) (jumps at primes only)."""
        logs = self.theta_cum - np.concatenate(([0.0], self.theta_cum[:-1]))
        return self._extrema(a, b, self.primes, logs, self.theta_cum, self.theta)

    def _extrema(self, a: float, b: float, q, jumps, cum, fval):
        self._require_cumulative(b)
        if not (0 < a < b):
            raise SieveRangeError(f"need 0 < a < b, got [{a}, {b}]")
        i0 = int(np.searchsorted(q, math.ceil(a)))
        i1 = int(np.searchsorted(q, math.floor(b), side="right"))
        qq = q[i0:i1].astype(float)
        keep = (qq >= a) & (qq <= b)
        qq = qq[keep]
        sq = np.sqrt(qq)
        cum_at = cum[i0:i1][keep]
        cum_before = cum_at - jumps[i0:i1][keep]
        # left-limit at a jump point q is the sup of values on (prev, q),
        # attained inside [a, b] only when q > a
        strict = qq > a
        sup_c = ((qq - cum_before) / sq)[strict]
        sup_q = qq[strict]
        inf_c = (qq - cum_at) / sq              # values at jump points
        r_a = (a - fval(a)) / math.sqrt(a)
        r_b = (b - fval(b)) / math.sqrt(b)
        sup_vals = np.concatenate([sup_c, [r_b]])
        sup_args = np.concatenate([sup_q, [b]])
        inf_vals = np.concatenate([inf_c, [r_a]])
        inf_args = np.concatenate([qq, [a]])
        i_sup = int(np.argmax(sup_vals))
        i_inf = int(np.argmin(inf_vals))
        return (float(inf_vals[i_inf]), float(sup_vals[i_sup]),
                float(inf_args[i_inf]), float(sup_args[i_sup]))

    def theta_integer_sup(self, a: int, b: int):
        """max of (n - theta(n))/sqrt(n) over integers n in [a, b] (the
        continuous sup differs: it is approached at prime left-limits)."""
        self._require_cumulative(b)
        pr = self.primes
        i0 = int(np.searchsorted(pr, a, side="right"))
        i1 = int(np.searchsorted(pr, b, side="right"))
        cumb = self.theta_cum - np.log(pr.astype(float))
        # candidates: n = p - 1 for primes p in (a, b], plus n = a and n = b
        n_c = pr[i0:i1].astype(float) - 1.0
        keep = n_c >= a
        vals = ((n_c - cumb[i0:i1]) / np.sqrt(n_c))[keep]
        cands = [(float(v), float(n)) for v, n in zip(vals, n_c[keep])]
        for n in (a, b):
            cands.append(((n - self.theta(n)) / math.sqrt(n), float(n)))
        v, arg = max(cands)
        return v, arg

    def self_check(self, rng=None, samples: int = 100):
        """Trial-division spot check of the prime table."""
        rng = rng or np.random.default_rng(0)
        lo = max(self.lo, 2)
        cand = rng.integers(lo, self.hi + 1, samples)
        for n in cand:
            n = int(n)
            is_p = _trial_division(n)
            in_table = bool(np.searchsorted(self.primes, n) < self.primes.size
                            and self.primes[np.searchsorted(self.primes, n)] == n)
            if is_p != in_table:
                raise AssertionError(f"prime table disagrees with trial division at {n}")
        return True


def _trial_division(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _kth_root_floor(x: float, k: int) -> int:
    if k == 1:
        return int(math.floor(x))
    r = int(round(x ** (1.0 / k)))
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def sieve_range(lo: int, hi: int, segment_size: int = _DEFAULT_SEGMENT,
                threads: int = 1) -> SieveTables:
    """Sieve primes and prime powers in [lo, hi].  With lo = 0 the tables
    also carry compensated cumulative log-sums enabling psi/theta/pi
    queries; a window (lo > 0) only supports membership and counting
    within the window."""
    lo, hi = int(lo), int(hi)
    if hi > RANGE_GUARD:
        raise SieveRangeError(f"hi={hi} beyond the desk-scale guard {RANGE_GUARD}")
    if lo < 0 or hi < lo:
        raise SieveRangeError(f"bad range [{lo}, {hi}]")
    base = _simple_sieve(int(math.isqrt(hi)) + 1)
    segs = []
    start = max(lo, 3)
    bounds = [(s, min(s + 2 * segment_size, hi + 1))
              for s in range(start, hi + 1, 2 * segment_size)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            segs = list(ex.map(lambda b: _sieve_odd_segment(base, b[0], b[1]), bounds))
    else:
        segs = [_sieve_odd_segment(base, s, e) for s, e in bounds]
    parts = []
    if lo <= 2 <= hi:
        parts.append(np.array([2], dtype=np.int64))
    parts.extend(segs)
    primes = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    # prime powers p^m in [lo, hi], m >= 2
    pp, pp_log, pp_m = [], [], []
    for p in base:
        p = int(p)
        pk = p * p
        m = 2
        while pk <= hi:
            if pk >= lo:
                pp.append(pk)
                pp_log.append(math.log(p))
                pp_m.append(m)
            pk *= p
            m += 1
    prime_powers = np.array(pp, dtype=np.int64)
    pp_base_log = np.array(pp_log)
    pp_m_arr = np.array(pp_m, dtype=np.int32)
    if prime_powers.size:
        order = np.argsort(prime_powers, kind="stable")
        prime_powers = prime_powers[order]
        pp_base_log = pp_base_log[order]
        pp_m_arr = pp_m_arr[order]

    # merged jump table
    q = np.concatenate([primes, prime_powers])
    q_logp = np.concatenate([np.log(primes.astype(float)) if primes.size else np.empty(0),
                             pp_base_log])
    q_m = np.concatenate([np.ones(primes.size, dtype=np.int32), pp_m_arr])
    order = np.argsort(q, kind="stable")
    q, q_logp, q_m = q[order], q_logp[order], q_m[order]

    psi_cum = theta_cum = None
    err = 0.0
    if lo == 0:
        psi_cum, err_psi = compensated_cumsum(q_logp)
        theta_cum, err_th = compensated_cumsum(
            np.log(primes.astype(float)) if primes.size else np.empty(0))
        err = max(err_psi, err_th)
    return SieveTables(lo=lo, hi=hi, primes=primes, prime_powers=prime_powers,
                       pp_base_log=pp_base_log, pp_m=pp_m_arr, q=q, q_logp=q_logp,
                       q_m=q_m, psi_cum=psi_cum, theta_cum=theta_cum,
                       err_bound=err, segment_size=segment_size)
