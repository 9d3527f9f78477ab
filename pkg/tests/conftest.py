import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from psibound.sieve import sieve_range
from psibound.zeros import ZeroTable, load_zeros

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def first_zeros():
    """First 30 zeta-zero ordinates from mpmath (independent oracle)."""
    with mp.workdps(25):
        return np.array([float(mp.im(mp.zetazero(n))) for n in range(1, 31)])


@pytest.fixture(scope="session")
def small_table(first_zeros):
    # t_max just below gamma_30 so the completeness claim is honest
    return ZeroTable(first_zeros, accuracy=1e-12, t_max=float(first_zeros[-1]))


@pytest.fixture(scope="session")
def desk_table():
    path = DATA / "zeros_desk.ztab"
    if not path.exists():
        pytest.skip("desk zero table not generated (scripts/make_zero_table.py)")
    return load_zeros(path)


@pytest.fixture(scope="session")
def sieve_small():
    return sieve_range(0, 1_200_000)


@pytest.fixture(scope="session")
def sieve_1e8():
    return sieve_range(0, 100_000_000)


@pytest.fixture(scope="session")
def desk_pipeline(desk_table):
    from psibound.bound_assembly import PipelineConfig, run_pipeline
    cfg = PipelineConfig(x0=1e7, L=2.0, theta=0.5, delta=0.5)
    return run_pipeline(cfg, desk_table)


def quad_pv_li(x: float, n: int = 300) -> float:
    """Principal-value quadrature oracle for li(x): u = log t substitution
    with the singular piece taken as int (e^u - 1)/u du on [-d, d]."""
    d = 0.5
    u_hi = math.log(x)

    def gl(f, a, b, nn):
        xs, ws = np.polynomial.legendre.leggauss(nn)
        u = 0.5 * (b - a) * xs + 0.5 * (a + b)
        return 0.5 * (b - a) * float(np.dot(ws, f(u)))

    assert u_hi > -d and u_hi != 0, "oracle restricted to x in (e^-1/2, 1) u (1, inf)"
    total = gl(lambda u: np.exp(u) / u, -40.0, -d, n)
    total += gl(lambda u: np.expm1(u) / u, -d, min(d, u_hi), n)
    if u_hi > d:
        # split the growing branch for quadrature accuracy
        total += gl(lambda u: np.exp(u) / u, d, u_hi, 4 * n)
    else:
        # PV of the 1/u part over [-d, u_hi] survives as log|u_hi|/d
        total += math.log(abs(u_hi) / d)
    return total
