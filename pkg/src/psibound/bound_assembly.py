"""Assembly of certified interval bounds for (t - psi(t))/sqrt(t): the
smoothing penalty A, grid extension of pointwise bounds, the E1/E2/E3
error budget, the parameter recipe, and the end-to-end pipeline from a
zero table to certified (M-, M+) on [x0, L x0].

Two proof regimes are kept in one table and never mixed: the literal
constants (1.001 grid / 1.01 final) require interval start a >= 1e9;
a desk regime with the re-derived constants (1.004 / 1.04) covers
a >= 1e7 and labels its output "desk-certified".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .explicit_formula import _ell_i2, _zero_accuracy_charge, tail_beyond
from .kernels import (KernelCache, KernelDomainError, MollifierParams,
                      build_cache, mu_nu, mu_plus)
from .trig_eval import GridSpec, block_envelope_eval, build_grid_sum, fft_multi_eval
from .zeros import ZeroTable, make_coefficients, rvm_estimate, validate_completeness

__all__ = [
    "PipelineConfig",
    "ErrorBudget",
    "IntervalBounds",
    "InfeasibleError",
    "SignAssumptionError",
    "prop1_A",
    "grid_extend",
    "fundamental_bounds",
    "choose_parameters",
    "run_pipeline",
    "REGIMES",
]

# regime name -> (min interval start a, grid-extension constant, final factor)
REGIMES = {
    "certified": (1.0e9, 1.001, 1.01),
    "desk-certified": (1.0e7, 1.004, 1.04),
}


class InfeasibleError(RuntimeError):
    def __init__(self, msg, needed_height=None):
        super().__init__(msg)
        self.needed_height = needed_height


class SignAssumptionError(RuntimeError):
    """The grid estimates did not change sign (no certified bound possible:
    the interval bounds are assumed positive above / negative below)."""


@dataclass(frozen=True)
class PipelineConfig:
    x0: float
    L: float = 2.0
    theta: float = 0.5
    delta: float = 0.5
    t_available: float = math.inf
    eta2: float = 1.0       # scale of the eps recipe
    eta4: float = 1.0       # scale of the grid-step recipe
    eta_block: float = 0.35  # block exponent when splitting is forced
    mem_limit: int = 4 << 30
    threads: int = 1

    def __post_init__(self):
        if not self.L > 1:
            raise ValueError(f"L must exceed 1, got {self.L}")
        if not (0 < self.theta <= 0.5):
            raise ValueError(f"theta must lie in (0, 1/2], got {self.theta}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.x0 >= 100:
            raise ValueError(f"x0 must be >= 100, got {self.x0}")


@dataclass(frozen=True)
class ErrorBudget:
    e1: float = 0.0
    e2: float = 0.0
    e3: float = 0.0
    tail: float = 0.0
    const: float = 0.0
    round: float = 0.0
    zero_acc: float = 0.0
    split_envelope: float = 0.0

    def __post_init__(self):
        for name in ("e1", "e2", "e3", "tail", "const", "round", "zero_acc",
                     "split_envelope"):
            if getattr(self, name) < 0:
                raise ValueError(f"budget field {name} negative")

    def total(self) -> float:
        return (self.e1 + self.e2 + self.e3 + self.tail + self.const
                + self.round + self.zero_acc + self.split_envelope)


@dataclass(frozen=True)
class IntervalBounds:
    a: float
    b: float
    m_minus: float
    m_plus: float
    budget: ErrorBudget
    params: MollifierParams
    grid: GridSpec
    zeros_meta: dict
    regime: str

    def __post_init__(self):
        if not (self.m_minus < 0 < self.m_plus):
            raise SignAssumptionError(
                f"certified bounds must straddle 0, got [{self.m_minus}, {self.m_plus}]")


def _pick_regime(a: float) -> tuple[str, float, float]:
    # 1% slack: the grid may start a hair below the nominal x0 and the
    # stored desk constants absorb far more than that
    for name, (a_min, k_grid, k_final) in REGIMES.items():
        if a >= 0.99 * a_min:
            return name, k_grid, k_final
    raise KernelDomainError(
        f"interval start {a:.3e} below every proof regime (need >= 1e7)")


def prop1_A(x: float, params: MollifierParams, cache: KernelCache,
            require_b10: bool = False) -> float:
    """Smoothing penalty A(x, c, eps, alpha) bounding |psi - psi_{c,eps}|
    shifts, rounded up."""
    cache.check(params)
    if x <= 100:
        raise KernelDomainError(f"shift penalty needs x > 100, got {x}")
    params.require_mass()  # eps < 1e-2
    eps, alpha = params.eps, params.alpha
    _, nu_a = mu_nu(cache, alpha)
    mp_a = mu_plus(cache, alpha)
    B = eps * x * math.exp(-eps) * abs(nu_a) / (2.0 * mp_a)
    if B <= 1.0:
        raise KernelDomainError(f"shift penalty inapplicable: B={B:.3g} <= 1")
    if require_b10 and B <= 10.0:
        raise KernelDomainError(f"fundamental-bound usage needs B > 10, got {B:.3g}")
    A = math.exp(2 * eps) * math.log(math.exp(eps) * x) * (
        2.0 * eps * x * abs(nu_a) / math.log(B)
        + 2.01 * eps * math.sqrt(x)
        + 0.5 * math.log(math.log(2.0 * x * x)))
    return A * (1.0 + 1e-13)


def grid_extend(m_grid: float, M_grid: float, a: float, b: float,
                delta_max: float) -> tuple[float, float, str]:
    """Extend pointwise bounds on a dissection with max step delta_max to
    the whole interval [a, b]; returns (m, M, regime label)."""
    regime, k_grid, _ = _pick_regime(a)
    if not (a < b):
        raise KernelDomainError(f"need a < b, got [{a}, {b}]")
    if not (10.0 <= delta_max <= 1e-5 * a):
        raise KernelDomainError(
            f"step size {delta_max} outside [10, 1e-5 a] = [10, {1e-5 * a:.4g}]")
    if not (M_grid > 0 > m_grid):
        raise SignAssumptionError(
            f"grid bounds must straddle 0, got [{m_grid}, {M_grid}]")
    corr = (math.log(a) / math.sqrt(a)) * (
        delta_max / math.log(delta_max) + math.log(math.log(a * a)))
    return (k_grid * (m_grid - corr), k_grid * (M_grid + corr), regime)


def _e2_term(params: MollifierParams, cache: KernelCache, a: float, b: float) -> float:
    eps, alpha = params.eps, params.alpha
    _, nu_a = mu_nu(cache, alpha)
    mp_a = mu_plus(cache, alpha)
    B_b = eps * b * abs(nu_a) / (2.0 * mp_a)
    if B_b <= 1.0:
        raise KernelDomainError(f"E2 undefined: B={B_b:.3g} <= 1")
    return 2.02 * math.log(b) * (
        eps * math.sqrt(b) * abs(nu_a) / math.log(B_b)
        + eps
        + math.log(math.log(2.0 * a * a)) / (4.0 * math.sqrt(a)))


def _e3_term(a: float, delta_max: float, k_grid: float) -> float:
    return k_grid * (math.log(a) / math.sqrt(a)) * (
        delta_max / math.log(delta_max) + math.log(math.log(a * a)))


def fundamental_bounds(m_grid: float, M_grid: float, a: float, b: float,
                       delta_max: float, params: MollifierParams,
                       cache: KernelCache):
    """Turn grid bounds on (x_k - psi_{c,eps}(x_k))/sqrt(x_k) into interval
    bounds on (y - psi(y))/sqrt(y):

        M = k (M_grid + E1 + E2 + E3)   on [e^{alpha eps} a, b]
        m = k (m_grid - E1 - E2 - E3)   on [a, e^{-alpha eps} b]

    Returns ((m, M), ErrorBudget-partial, regime)."""
    cache.check(params)
    eps, alpha = params.eps, params.alpha
    if eps >= 1e-4 * (1 + 1e-12):
        raise KernelDomainError(f"fundamental bounds need eps < 1e-4, got {eps}")
    regime, k_grid, k_final = _pick_regime(a / math.exp(alpha * eps))
    if not (10.0 <= delta_max <= 1e-5 * a):
        raise KernelDomainError(
            f"step size {delta_max} outside [10, 1e-5 a] = [10, {1e-5 * a:.4g}]")
    if not (M_grid > 0 > m_grid):
        raise SignAssumptionError(
            f"grid bounds must straddle 0, got [{m_grid}, {M_grid}]")
    # B > 10 at the left end (B grows with x)
    _, nu_a = mu_nu(cache, alpha)
    B_a = eps * a * abs(nu_a) / (2.0 * mu_plus(cache, alpha))
    if B_a <= 10.0:
        raise KernelDomainError(f"need eps x nu/(2 mu+) > 10 on the interval, "
                                f"got {B_a:.3g} at x=a")
    e1 = 1.001 * alpha * eps * math.sqrt(b)
    e2 = _e2_term(params, cache, a, b)
    e3 = _e3_term(a, delta_max, k_grid)
    M = k_final * (M_grid + e1 + e2 + e3)
    m = k_final * (m_grid - e1 - e2 - e3)
    return (m, M), (e1, e2, e3), regime


def choose_parameters(config: PipelineConfig, cache: KernelCache | None = None):
    """Parameter recipe: c from the theta log x0 expansion, eps capped so
    the predicted E2 stays within delta/2 (hard cap 1e-4), grid step so E3
    stays within delta/6.  Emits the predicted budget before any heavy
    work.  Returns (params, grid, plan, predicted_budget, cache)."""
    x0, L, th, dl = config.x0, config.L, config.theta, config.delta
    lx = math.log(x0)
    c = th * lx + math.log(lx) + math.log(math.log(lx)) - math.log(dl / 40.0)
    a_est = x0 * math.exp(-1e-6)
    b_est = L * x0 * math.exp(1e-6)
    if cache is None or cache.c != c:
        probe = MollifierParams(c, 1e-4)
        cache = build_cache(probe)
    eps_cap = min(config.eta2 * x0 ** (-th) * math.sqrt(lx), 1e-4 * (1 - 1e-9))

    def e2_of(eps):
        try:
            return _e2_term(MollifierParams(c, eps), cache, a_est, b_est)
        except KernelDomainError:
            return math.inf

    # the fundamental bounds also need eps a |nu|/(2 mu+) > 10 at the left end
    _, nu0 = mu_nu(cache, 0.0)
    eps_floor = 12.0 * 2.0 * mu_plus(cache, 0.0) / (a_est * abs(nu0))
    if eps_floor > eps_cap:
        raise InfeasibleError("x0 too small for the smoothing precondition")
    eps = eps_cap
    if e2_of(eps) > dl / 2.0:
        lo, hi = eps_floor, eps_cap
        if e2_of(lo) > dl / 2.0:
            raise InfeasibleError("no eps achieves the E2 budget")
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if e2_of(mid) > dl / 2.0:
                hi = mid
            else:
                lo = mid
        eps = lo
    params = MollifierParams(c, eps)
    T = params.T
    if T > config.t_available:
        raise InfeasibleError(
            f"required zero height T=c/eps={T:.4g} exceeds available "
            f"{config.t_available:.4g} (deficit {T - config.t_available:.4g})",
            needed_height=T)
    # grid step: largest Delta in [10, 1e-5 a] with E3 <= delta/6
    regime, k_grid, k_final = _pick_regime(a_est)
    d_hi = min(0.995e-5 * a_est, config.eta4 * L * x0 ** (1 - th) / lx)
    d_hi = max(d_hi, 10.0)
    if _e3_term(a_est, 10.0, k_grid) > dl / 6.0:
        raise InfeasibleError("even the minimal grid step cannot meet the E3 budget")
    delta_t = d_hi
    if _e3_term(a_est, delta_t, k_grid) > dl / 6.0:
        lo, hi = 10.0, d_hi
        for _ in range(100):
            mid = math.sqrt(lo * hi)
            if _e3_term(a_est, mid, k_grid) > dl / 6.0:
                hi = mid
            else:
                lo = mid
        delta_t = lo
    h = delta_t / b_est
    y0 = math.log(math.sqrt(L) * x0)
    y_half = int(math.ceil(math.log(math.sqrt(L)) / h)) + 1
    grid = GridSpec(y0=y0, h=h, y_half=y_half)
    # memory plan: direct FFT path needs the R-length moment arrays
    n_est = max(rvm_estimate(T), 1.0)
    R = 2 ** int(round(math.log2(max(n_est, 4))))
    direct_bytes = 16 * (3 * R + 4 * (2 * y_half + 1) + 4 * n_est)
    plan = {"mode": "direct", "eta": None,
            "direct_bytes": int(direct_bytes), "R": R}
    if direct_bytes > config.mem_limit:
        plan = {"mode": "blocks", "eta": config.eta_block,
                "direct_bytes": int(direct_bytes), "R": R}
    predicted = ErrorBudget(
        e1=1.001 * params.alpha * eps * math.sqrt(b_est),
        e2=e2_of(eps),
        e3=_e3_term(a_est, delta_t, k_grid),
        tail=tail_beyond(params, b_est) / math.sqrt(b_est),
        const=2.0 / math.sqrt(a_est),
        round=1e-6,
        zero_acc=0.0,
    )
    return params, grid, plan, predicted, cache


def run_pipeline(config: PipelineConfig, table: ZeroTable) -> IntervalBounds:
    """End-to-end: choose parameters, build the grid trig sum, evaluate the
    normalized zero sum on the grid (FFT path, or block envelopes when the
    memory plan demands), and return certified interval bounds whose slack
    over the true extrema is at most ~delta x0^{1/2-theta}."""
    cfg = config
    if table.t_max < math.inf:
        cfg = replace(config, t_available=min(config.t_available, table.t_max))
    params, grid, plan, predicted, cache = choose_parameters(cfg)
    T = params.T
    validate_completeness(table, T)
    coeffs = make_coefficients(table, params, T)
    norm = _ell_i2(params)
    a, b = grid.a, grid.b
    delta_max = grid.max_step
    # per-point certified error fields (uniform tail/const evaluated
    # conservatively at the worst end of the interval)
    acc_target = 4e-7 * norm / 2.0
    zero_acc = _zero_accuracy_charge(b, coeffs, table.accuracy)
    tail_n = tail_beyond(params, b) / math.sqrt(b)
    const_n = 2.0 / math.sqrt(a)
    split_env = 0.0
    if plan["mode"] == "direct":
        ts = build_grid_sum(coeffs, grid)
        vals, cert = fft_multi_eval(ts, grid.y_half, acc_target)
        est = 2.0 * vals.real / norm
        round_n = 2.0 * cert / norm
        terr = const_n + tail_n + round_n + zero_acc
        M_grid = float(np.max(est)) + terr
        m_grid = float(np.min(est)) - terr
    else:
        env = block_envelope_eval(coeffs, grid, plan["eta"], x_scale=cfg.x0,
                                  accuracy_target=acc_target)
        # env.lower/upper already absorb the per-block interpolation errors;
        # split_envelope only reports that share of the certified width
        split_env = 2.0 * float(np.sum(env.errors)) / norm
        round_n = 0.0
        terr = const_n + tail_n + zero_acc
        M_grid = 2.0 * env.upper / norm + terr
        m_grid = 2.0 * env.lower / norm - terr
    if not (M_grid > 0 > m_grid):
        raise SignAssumptionError(
            f"zero-sum grid estimates do not straddle 0: [{m_grid}, {M_grid}]")
    (m, M), (e1, e2, e3), regime = fundamental_bounds(
        m_grid, M_grid, a, b, delta_max, params, cache)
    budget = ErrorBudget(e1=e1, e2=e2, e3=e3, tail=tail_n, const=const_n,
                         round=round_n, zero_acc=zero_acc,
                         split_envelope=split_env)
    meta = {"T": T, "count": coeffs.n, "accuracy": table.accuracy,
            "t_max": table.t_max, "off_line": len(table.off_line),
            "plan": plan["mode"]}
    return IntervalBounds(a=a, b=b, m_minus=m, m_plus=M, budget=budget,
                          params=params, grid=grid, zeros_meta=meta,
                          regime=regime)
