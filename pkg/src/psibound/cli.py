"""Command-line orchestration.

Subcommands: `bounds` (run the certified pipeline and write a manifest +
CSV), `verify` (sieve-side ground-truth checks and manifest validation),
`derive` (chain psi certificates into theta/pi*/pi bound certificates),
and `zeros validate`.

Output files are deterministic: identical inputs give byte-identical
manifests and CSVs (wall time goes to stderr only).  All decimal values
are echoed with up to 30 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bound_assembly import (InfeasibleError, IntervalBounds, PipelineConfig,
                             SignAssumptionError, run_pipeline)
from .derived_bounds import (BoundCert, chain_theorem2, lemma2_pistar,
                             lemma3_pi, positivity_certificate)
from .kernels import KernelDomainError, log_integral
from .sieve import SieveRangeError, sieve_range
from .zeros import ZeroTableError, load_zeros, rvm_band, rvm_estimate, validate_completeness

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_SIGN = 5
EXIT_COMPARISON = 6


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".30g")
    return str(v)


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path: Path, entries: dict):
    lines = [f"{k}={_fmt(v)}" for k, v in sorted(entries.items())]
    path.write_text("\n".join(lines) + "\n")


def _read_manifest(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        k, v = line.split("=", 1)
        out[k] = v
    return out


# ------------------------------------------------------------------ bounds

def cmd_bounds(args) -> int:
    t0 = time.time()
    zeros_path = Path(args.zeros)
    if not zeros_path.exists():
        print(f"zero table not found: {zeros_path}", file=sys.stderr)
        return EXIT_IO
    try:
        table = load_zeros(zeros_path)
        config = PipelineConfig(x0=args.x0, L=args.L, theta=args.theta,
                                delta=args.delta, t_available=args.t_available,
                                eta2=args.eta2, eta4=args.eta4,
                                eta_block=args.eta_block,
                                mem_limit=args.mem_limit, threads=args.threads)
    except (ValueError, ZeroTableError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_pipeline(config, table)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SignAssumptionError as exc:
        print(f"sign assumption violated: {exc}", file=sys.stderr)
        return EXIT_SIGN
    except (KernelDomainError, ZeroTableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = {
        "config.x0": config.x0, "config.L": config.L,
        "config.theta": config.theta, "config.delta": config.delta,
        "config.t_available": config.t_available,
        "config.eta2": config.eta2, "config.eta4": config.eta4,
        "config.eta_block": config.eta_block,
        "config.mem_limit": config.mem_limit, "config.threads": config.threads,
        "zeros.digest": _digest(zeros_path),
        "zeros.count_used": result.zeros_meta["count"],
        "zeros.T": result.zeros_meta["T"],
        "zeros.accuracy": result.zeros_meta["accuracy"],
        "zeros.off_line": result.zeros_meta["off_line"],
        "version.psibound": __version__,
        "version.numpy": np.__version__,
        "params.c": result.params.c, "params.eps": result.params.eps,
        "params.alpha": result.params.alpha,
        "grid.y0": result.grid.y0, "grid.h": result.grid.h,
        "grid.y_half": result.grid.y_half,
        "interval.a": result.a, "interval.b": result.b,
        "interval.max_step": result.grid.max_step,
        "regime": result.regime,
        "plan": result.zeros_meta["plan"],
        "bounds.m_minus": result.m_minus, "bounds.m_plus": result.m_plus,
        "budget.e1": result.budget.e1, "budget.e2": result.budget.e2,
        "budget.e3": result.budget.e3, "budget.tail": result.budget.tail,
        "budget.const": result.budget.const, "budget.round": result.budget.round,
        "budget.zero_acc": result.budget.zero_acc,
        "budget.split_envelope": result.budget.split_envelope,
    }
    _write_manifest(outdir / "manifest.txt", entries)
    with open(outdir / "bounds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "L", "m_minus", "m_plus", "e1", "e2", "e3", "tail",
                    "const", "round", "zero_acc", "split_envelope"])
        b = result.budget
        w.writerow([_fmt(config.x0), _fmt(config.L), _fmt(result.m_minus),
                    _fmt(result.m_plus), _fmt(b.e1), _fmt(b.e2), _fmt(b.e3),
                    _fmt(b.tail), _fmt(b.const), _fmt(b.round),
                    _fmt(b.zero_acc), _fmt(b.split_envelope)])
    print(f"[{result.regime}] {result.m_minus:.6f} <= (t-psi(t))/sqrt(t) <= "
          f"{result.m_plus:.6f} on [{result.a:.7g}, {result.b:.7g}]")
    print(f"wrote {outdir/'manifest.txt'} and {outdir/'bounds.csv'}")
    print(f"wall time: {time.time()-t0:.1f}s", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ verify

def _parse_range(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


ALL_CHECKS = ("eratosthenes-081", "psi-094", "theta-195", "theta-005",
              "pistar-sqrtx", "pi-positive", "pi-upper", "identities")


def cmd_verify(args) -> int:
    t0 = time.time()
    lo, hi = _parse_range(args.range)
    checks = ALL_CHECKS if args.check == "all" else tuple(args.check.split(","))
    try:
        tables = sieve_range(0, int(math.ceil(hi)), threads=args.threads)
    except SieveRangeError as exc:
        print(f"range error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    failures = []

    def report(name, ok, detail):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failures.append(name)

    for name in checks:
        if name == "eratosthenes-081":
            a = max(lo, 100.0)
            inf, sup, ai, asup = tables.remainder_extrema(a, hi)
            ok = inf >= -0.8 and sup <= 0.81
            report(name, ok, f"R_psi in [{inf:.6f}, {sup:.6f}] on [{a:.4g}, {hi:.4g}]"
                   f" (inf at {ai:.0f}, sup at {asup:.0f})")
        elif name == "psi-094":
            a = max(lo, 11.0)
            inf, sup, ai, asup = tables.remainder_extrema(a, hi)
            ok = max(-inf, sup) <= 0.94
            report(name, ok, f"|x-psi| <= {max(-inf, sup):.6f} sqrt(x) on ({a:.4g}, {hi:.4g}]")
        elif name == "theta-195":
            a = int(max(lo, 1423))
            v, arg = tables.theta_integer_sup(a, int(hi))
            ok = v <= 1.95
            report(name, ok, f"max_n (n-theta(n))/sqrt(n) = {v:.6f} at n={arg:.0f} "
                   f"(integer arguments; continuous sup is larger near 1427)")
        elif name == "theta-005":
            a = max(lo, 1.0)
            tinf, _, targ, _ = tables.theta_remainder_extrema(max(a, 2.0), hi)
            edge = min((n - tables.theta(n)) / math.sqrt(n) for n in (1.0, 1.5, 2.0))
            val = min(tinf, edge if a < 2 else tinf)
            ok = val > 0.05
            report(name, ok, f"inf (x-theta)/sqrt(x) = {val:.6f} (at {targ:.0f})")
        elif name == "pistar-sqrtx":
            ok, worst, arg = _check_pistar(tables, max(lo, 2.0), hi)
            report(name, ok, f"max |li-pi*| log-normalized = {worst:.6f} at {arg:.6g}")
        elif name == "pi-positive":
            ok, worst, arg = _check_li_pi_positive(tables, max(lo, 2.0), hi)
            report(name, ok, f"min li-pi = {worst:.6f} at {arg:.6g}")
        elif name == "pi-upper":
            ok, worst, arg = _check_pi_upper(tables, max(lo, 2.0), hi)
            report(name, ok, f"max slack used {worst:.6f} at {arg:.6g}")
        elif name == "identities":
            ok, detail = _check_identities(tables, hi)
            report(name, ok, detail)
        else:
            print(f"unknown check {name!r}", file=sys.stderr)
            return EXIT_CONFIG
    if args.against:
        man = _read_manifest(Path(args.against))
        a, b = float(man["interval.a"]), float(man["interval.b"])
        mm, mp_ = float(man["bounds.m_minus"]), float(man["bounds.m_plus"])
        inf, sup, ai, asup = tables.remainder_extrema(max(a, lo), min(b, hi))
        ok = mm <= inf and sup <= mp_
        report("against-manifest", ok,
               f"certified [{mm:.6f}, {mp_:.6f}] vs exact [{inf:.6f}, {sup:.6f}]"
               + ("" if ok else f"; witness t={asup if sup > mp_ else ai:.0f}"))
    print(f"wall time: {time.time()-t0:.1f}s", file=sys.stderr)
    return EXIT_COMPARISON if failures else EXIT_OK


def _check_pistar(tables, lo, hi):
    """|li - pi*| < sqrt(x)/log(x) on [lo, hi]: extremes sit at prime-power
    jumps (li - pi* rises between jumps, drops at them)."""
    q = tables.q
    i0, i1 = np.searchsorted(q, lo), np.searchsorted(q, hi, side="right")
    qq = q[i0:i1].astype(float)
    li_q = log_integral(qq)
    inv_m = 1.0 / tables.q_m[i0:i1].astype(float)
    pistar_at = np.cumsum(inv_m) + tables.pi_star(float(q[i0])) - inv_m[0]
    rel_at = (li_q - pistar_at) * np.log(qq) / np.sqrt(qq)       # after jump (minima)
    rel_before = (li_q - (pistar_at - inv_m)) * np.log(qq) / np.sqrt(qq)  # left limits
    worst_i = int(np.argmax(np.abs(np.concatenate([rel_at, rel_before]))))
    vals = np.concatenate([rel_at, rel_before])
    args_ = np.concatenate([qq, qq])
    worst = float(np.abs(vals[worst_i]))
    ok = bool(np.all(np.abs(vals) < 1.0))
    # boundary points
    for x in (lo, hi):
        v = abs((log_integral(x) - tables.pi_star(x)) * math.log(x) / math.sqrt(x))
        if v >= 1.0:
            ok = False
        worst = max(worst, v)
    return ok, worst, float(args_[worst_i])


def _check_li_pi_positive(tables, lo, hi):
    pr = tables.primes
    i0, i1 = np.searchsorted(pr, lo), np.searchsorted(pr, hi, side="right")
    pp = pr[i0:i1].astype(float)
    li_p = log_integral(pp)
    pi_at = np.arange(i0 + 1, i1 + 1, dtype=float)
    vals = li_p - pi_at  # minima right after each prime jump
    i = int(np.argmin(vals))
    worst = float(vals[i])
    ok = worst > 0 and (log_integral(lo) - tables.prime_pi(lo)) > 0
    return ok, worst, float(pp[i])


def _check_pi_upper(tables, lo, hi):
    """li - pi <= sqrt(x)/log(x) (1.95 + 3.9/log x + 19.5/log^2 x): the
    difference grows between jumps, so check prime left-limits and ends."""
    pr = tables.primes
    i0, i1 = np.searchsorted(pr, lo), np.searchsorted(pr, hi, side="right")
    pp = pr[i0:i1].astype(float)
    li_p = log_integral(pp)
    pi_before = np.arange(i0, i1, dtype=float)  # pi just below the prime
    lg = np.log(pp)
    bound = np.sqrt(pp) / lg * (1.95 + 3.9 / lg + 19.5 / lg ** 2)
    slack = (li_p - pi_before) / bound
    for x in (lo, hi):
        lgx = math.log(x)
        bx = math.sqrt(x) / lgx * (1.95 + 3.9 / lgx + 19.5 / lgx ** 2)
        sx = (log_integral(x) - tables.prime_pi(x)) / bx
        slack = np.concatenate([slack, [sx]])
        pp = np.concatenate([pp, [x]])
    i = int(np.argmax(slack))
    return bool(np.all(slack <= 1.0)), float(slack[i]), float(pp[i])


def _check_identities(tables, hi, samples: int = 100):
    rng = np.random.default_rng(20260809)
    xs = rng.uniform(100.0, float(hi), samples)
    tol = 2.0 * tables.err_bound + 1e-7
    for x in xs:
        lhs = tables.psi(x)
        rhs = 0.0
        k = 1
        while 2.0 ** k <= x:
            rhs += tables.theta(x ** (1.0 / k))
            k += 1
        if abs(lhs - rhs) > tol:
            return False, f"psi identity off by {abs(lhs-rhs):.2e} at x={x:.6g}"
        ps = tables.pi_star(x)
        direct = sum(tables.prime_pi(x ** (1.0 / k)) / k
                     for k in range(1, int(math.log2(x)) + 1))
        if abs(ps - direct) > 1e-9:
            return False, f"pi* identity off at x={x:.6g}"
    return True, f"psi/pi* identities hold at {samples} random points (tol {tol:.1e})"


# ------------------------------------------------------------------ derive

def cmd_derive(args) -> int:
    certs = []
    for spec_str in args.psi_cert or []:
        try:
            a, b, c_lo, c_hi = (float(s) for s in spec_str.split(","))
            certs.append(BoundCert("psi", a, b, c_lo, c_hi, "cli"))
        except (ValueError, Exception) as exc:  # noqa: BLE001
            print(f"bad --psi-cert {spec_str!r}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if args.from_sieve:
        lo, hi = _parse_range(args.from_sieve)
        tables = sieve_range(0, int(math.ceil(hi)), threads=args.threads)
        inf, sup, _, _ = tables.remainder_extrema(lo, hi)
        certs.append(BoundCert("psi", lo, hi, inf * (1 + 1e-9) - 1e-12,
                               sup * (1 + 1e-9) + 1e-12, "sieve"))
    if args.manifest:
        man = _read_manifest(Path(args.manifest))
        certs.append(BoundCert("psi", float(man["interval.a"]),
                               float(man["interval.b"]),
                               float(man["bounds.m_minus"]),
                               float(man["bounds.m_plus"]), "manifest"))
    if not certs:
        print("no certificates given", file=sys.stderr)
        return EXIT_CONFIG
    try:
        t_lo, t_hi = _parse_range(args.target) if args.target else (None, None)
        report = chain_theorem2(certs, t_lo, t_hi)
    except Exception as exc:  # HypothesisError and friends
        print(f"derivation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [report.describe()]
    # pi* and pi stages need anchors computed from a small sieve
    anchor_hi = int(max(args.anchor_pistar, args.anchor_pi) * 2)
    oracle = sieve_range(0, max(anchor_hi, 4000))
    widest = max(certs, key=lambda c: c.b)
    try:
        if widest.b > 1e7:
            l2 = lemma2_pistar(widest, args.anchor_pistar, oracle)
            lines.append(l2.describe())
            tcert = BoundCert("theta", report.covered_lo, report.covered_hi,
                              report.inf_lower, report.sup_upper, "chain")
            l3 = lemma3_pi(tcert, args.anchor_pi, oracle)
            lines.append(l3.describe())
        if report.inf_lower > 0:
            pos = positivity_certificate(report.covered_hi, oracle)
            lines.append(pos.describe())
    except Exception as exc:  # noqa: BLE001
        print(f"derivation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = "\n".join(lines) + "\n"
    (out / "certificates.txt").write_text(text)
    with open(out / "certificates.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "active_lo", "active_hi", "sup_upper", "inf_lower"])
        for i, s in enumerate(report.stages):
            w.writerow([i, _fmt(s.active_lo), _fmt(s.active_hi),
                        _fmt(s.sup_upper), _fmt(s.inf_lower)])
    print(text)
    print(f"wrote {out/'certificates.txt'}")
    return EXIT_OK


# ------------------------------------------------------------------ zeros

def cmd_zeros_validate(args) -> int:
    path = Path(args.zeros)
    if not path.exists():
        print(f"zero table not found: {path}", file=sys.stderr)
        return EXIT_IO
    try:
        table = load_zeros(path)
        msg = (f"{table.count} zeros, t_max={_fmt(table.t_max)}, "
               f"accuracy={_fmt(table.accuracy)}, off_line={len(table.off_line)}")
        if args.T is not None:
            n = validate_completeness(table, args.T)
            msg += (f"; count(<= {args.T:g}) = {n}, estimate "
                    f"{rvm_estimate(args.T):.3f} +- {rvm_band(args.T):.3f}")
        print("OK " + msg)
        return EXIT_OK
    except ZeroTableError as exc:
        print(f"INVALID {exc}", file=sys.stderr)
        return EXIT_COMPARISON


# -------------------------------------------------------------------- main

def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="psibound", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="certified interval bounds from a zero table")
    b.add_argument("--x0", type=float, required=True)
    b.add_argument("--L", type=float, default=2.0)
    b.add_argument("--theta", type=float, default=0.5)
    b.add_argument("--delta", type=float, default=0.5)
    b.add_argument("--zeros", required=True)
    b.add_argument("--t-available", type=float, default=math.inf)
    b.add_argument("--eta2", type=float, default=1.0)
    b.add_argument("--eta4", type=float, default=1.0)
    b.add_argument("--eta-block", type=float, default=0.35)
    b.add_argument("--mem-limit", type=int, default=4 << 30)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", default="out")
    b.set_defaults(fn=cmd_bounds)

    v = sub.add_parser("verify", help="sieve ground-truth verification")
    v.add_argument("--range", required=True, help="A:B")
    v.add_argument("--check", default="all",
                   help=f"comma list from {', '.join(ALL_CHECKS)} or 'all'")
    v.add_argument("--against", default=None, help="manifest file to compare")
    v.add_argument("--threads", type=int, default=1)
    v.set_defaults(fn=cmd_verify)

    d = sub.add_parser("derive", help="chain psi certificates to theta/pi*/pi")
    d.add_argument("--psi-cert", action="append",
                   help="a,b,lo,hi (repeatable)")
    d.add_argument("--from-sieve", default=None, help="A:B exact psi cert via sieve")
    d.add_argument("--manifest", default=None, help="pipeline manifest as cert")
    d.add_argument("--target", default=None, help="LO:HI target range")
    d.add_argument("--anchor-pistar", type=float, default=100.0)
    d.add_argument("--anchor-pi", type=float, default=1500.0)
    d.add_argument("--threads", type=int, default=1)
    d.add_argument("--out", default="out")
    d.set_defaults(fn=cmd_derive)

    z = sub.add_parser("zeros", help="zero-table utilities")
    zsub = z.add_subparsers(dest="zcommand", required=True)
    zv = zsub.add_parser("validate")
    zv.add_argument("--zeros", required=True)
    zv.add_argument("--T", type=float, default=None)
    zv.set_defaults(fn=cmd_zeros_validate)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
