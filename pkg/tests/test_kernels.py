import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psibound import kernels as K
from tests.conftest import quad_pv_li


def series_i0(y):
    """Independent series oracle at 40 digits (adaptive term count)."""
    with mp.workdps(40):
        q = (mp.mpf(y) / 2) ** 2
        term = mp.mpf(1)
        total = mp.mpf(1)
        peak = mp.mpf(1)
        n = 1
        while True:
            term *= q / n ** 2
            total += term
            peak = max(peak, term)
            if term < peak * mp.mpf(10) ** -45 and n > 3:
                break
            n += 1
        return float(total)


class TestBesselI0:
    def test_at_zero(self):
        assert K.bessel_i0(0.0) == 1.0

    @pytest.mark.parametrize("y", [1.0, 10.0, 19.5, 20.5, 100.0, 650.0])
    def test_against_series_oracle(self, y):
        ref = series_i0(y)
        assert abs(K.bessel_i0(y) - ref) <= 1e-14 * ref

    def test_branch_consistency_at_crossover(self):
        for y in np.linspace(19.0, 21.0, 11):
            ref = series_i0(y)
            assert abs(K.bessel_i0(float(y)) - ref) <= 1e-14 * ref

    def test_overflow_signaled(self):
        with pytest.raises(OverflowError):
            K.bessel_i0(800.0)

    def test_known_decimals(self):
        # oracle-computed: series summed to machine tolerance
        assert K.bessel_i0(1.0) == pytest.approx(1.2660658777520084, rel=1e-14)
        assert K.bessel_i0(10.0) == pytest.approx(2815.716628466254, rel=1e-13)


class TestLoganEll:
    def test_value_at_zero_exact(self):
        p = K.MollifierParams(5.0, 1e-4)
        assert K.logan_ell(p, 0.0) == 1.0

    def test_removable_singularity(self):
        # t = c/eps: value c/sinh(c); decimal from direct high-precision eval
        p = K.MollifierParams(5.0, 1e-4)
        with mp.workdps(40):
            ref = float(5 / mp.sinh(5))
        assert K.logan_ell(p, 5.0 / 1e-4) == pytest.approx(ref, rel=1e-12)
        assert ref == pytest.approx(0.06738252915294544, rel=1e-13)

    def test_imag_half_argument(self):
        # ell(i/2) = (c/sinh c) sinh(sqrt(c^2+eps^2/4))/sqrt(...), barely above 1
        p = K.MollifierParams(18.0, 1e-4)
        v = K.logan_ell(p, 0.5j)
        with mp.workdps(50):
            w = mp.sqrt(mp.mpf(18) ** 2 + mp.mpf(1e-4) ** 2 / 4)
            ref = float(18 / mp.sinh(18) * mp.sinh(w) / w)
        assert v == pytest.approx(ref, abs=1e-14)
        assert 1.0 < v < 1.0 + 1e-10

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_even_in_t(self, t):
        p = K.MollifierParams(7.0, 1e-3)
        assert K.logan_ell(p, t) == K.logan_ell(p, -t)

    def test_decay_bound_beyond_band(self):
        # |ell(t)| <= (c/sinh c) min(1, 1/(eps|t| - c)) for eps|t| > c
        for c in (3.0, 10.0, 18.0):
            p = K.MollifierParams(c, 1e-3)
            cs = 2 * c * math.exp(-c) / -math.expm1(-2 * c)
            ts = np.linspace(c / 1e-3 * 1.0001, c / 1e-3 * 50, 2001)
            vals = np.abs(K.logan_ell(p, ts))
            bound = cs * np.minimum(1.0, 1.0 / (1e-3 * ts - c))
            assert np.all(vals <= bound * (1 + 1e-12))

    def test_large_c_log_space(self):
        # sinh(700) would overflow; the ratio form must stay finite
        p = K.MollifierParams(700.0, 1e-4)
        assert K.logan_ell(p, 0.0) == 1.0
        v = K.logan_ell(p, 0.3 * p.T)
        assert 0 < v < 1

    def test_mpmath_cross_check(self):
        p = K.MollifierParams(18.0, 1e-4)
        for t in (10.0, 5e4, 1.7e5, 1.95e5):
            with mp.workdps(40):
                z = mp.mpc(mp.mpf(18) ** 2 - (mp.mpf(1e-4) * t) ** 2)
                w = mp.sqrt(z)
                ref = float(mp.re(18 / mp.sinh(18) * mp.sinh(w) / w))
            assert K.logan_ell(p, t) == pytest.approx(ref, rel=1e-12)


class TestEtaDensity:
    def test_boundary_value(self):
        # eta(+-eps) = c/(2 eps sinh c), I0(0) = 1 (mass-1 normalization)
        p = K.MollifierParams(5.0, 1e-3)
        ref = 5.0 / (2 * 1e-3 * math.sinh(5.0))
        assert K.eta_density(p, 1e-3) == pytest.approx(ref, rel=1e-13)
        assert ref == pytest.approx(33.69126457647272, rel=1e-12)

    def test_outside_support(self):
        p = K.MollifierParams(5.0, 1e-3)
        assert K.eta_density(p, 2e-3) == 0.0
        assert K.eta_density(p, -1.1e-3) == 0.0

    def test_even(self):
        p = K.MollifierParams(18.0, 1e-4)
        taus = np.linspace(0, 1e-4, 50)
        assert np.allclose(K.eta_density(p, taus), K.eta_density(p, -taus), rtol=0, atol=0)

    @pytest.mark.parametrize("c", [3.0, 10.0, 18.0, 31.0])
    @pytest.mark.parametrize("eps", [1e-3, 1e-4])
    def test_unit_mass(self, c, eps):
        # identity: int_0^1 I0(c sqrt(1-u^2)) du = sinh(c)/c makes the mass 1
        p = K.MollifierParams(c, eps)
        mass, err = K.eta_weighted_integral(p, -eps, eps, 0.0)
        assert abs(mass - 1.0) <= 1e-10
        assert err <= 1e-12


class TestLambdaNorm:
    @pytest.mark.parametrize("c,eps", [(5.0, 1e-4), (18.0, 1e-4), (3.0, 1e-3)])
    def test_bracket(self, c, eps):
        lam = K.lambda_norm(K.MollifierParams(c, eps))
        assert math.exp(-eps / 2) <= lam <= math.exp(eps / 2)

    def test_doubled_node_agreement(self):
        p = K.MollifierParams(3.0, 1e-3)
        v1, _ = K.eta_weighted_integral(p, -1e-3, 1e-3, 0.5, nodes=128)
        v2, _ = K.eta_weighted_integral(p, -1e-3, 1e-3, 0.5, nodes=256)
        assert abs(v1 - v2) <= 1e-12

    def test_near_one(self):
        lam = K.lambda_norm(K.MollifierParams(18.0, 1e-4))
        assert abs(lam - 1.0) < 1e-4


class TestMuNu:
    @pytest.fixture(scope="class")
    def cache18(self):
        return K.build_cache(K.MollifierParams(18.0, 1e-4))

    def test_mu_at_zero(self, cache18):
        mu, _ = K.mu_nu(cache18, 0.0)
        assert mu == 0.0

    def test_mu_right_limit_half(self, cache18):
        mu, _ = K.mu_nu(cache18, 1e-9)
        assert mu == pytest.approx(0.5, abs=1e-6)
        assert K.mu_plus(cache18, 0.0) == 0.5

    def test_nu_zero_asymptotics_c50(self):
        cache = K.build_cache(K.MollifierParams(50.0, 1e-4))
        _, nu0 = K.mu_nu(cache, 0.0)
        target = 1.0 / math.sqrt(2 * math.pi * 50.0)
        assert abs(abs(nu0) - target) <= 0.1 * target
        # exact identity |nu(0)| = I1(c)/(2 sinh c)
        with mp.workdps(30):
            ref = float(mp.besseli(1, 50) / (2 * mp.sinh(50)))
        assert abs(nu0) == pytest.approx(ref, abs=1e-10)

    def test_mu_odd_and_bounded(self, cache18):
        ts = np.linspace(-1.2, 1.2, 241)
        vals = np.array([K.mu_nu(cache18, float(t))[0] for t in ts])
        rev = np.array([K.mu_nu(cache18, float(-t))[0] for t in ts])
        assert np.allclose(vals, -rev, atol=1e-12)
        assert np.max(np.abs(vals)) <= 0.5 + 1e-12

    def test_nu_sign_support_min(self, cache18):
        ts = np.linspace(-1.5, 1.5, 301)
        nus = np.array([K.mu_nu(cache18, float(t))[1] for t in ts])
        assert np.all(nus <= 1e-13)
        assert K.mu_nu(cache18, -1.0)[1] == 0.0
        assert K.mu_nu(cache18, -1.2)[1] == 0.0
        nu0 = K.mu_nu(cache18, 0.0)[1]
        assert nu0 == min(nus)

    def test_cache_mismatch_signals(self, cache18):
        with pytest.raises(K.KernelDomainError):
            cache18.check(K.MollifierParams(17.0, 1e-4))

    def test_interpolation_certificate(self, cache18):
        assert cache18.interp_err <= 1e-10


class TestMassM:
    def test_outside_window(self):
        p = K.MollifierParams(18.0, 1e-4)
        assert K.mass_M(1e5, p, 1e5 * math.exp(2e-4)) == 0.0

    def test_upper_boundary_half_weight(self):
        # t = e^eps x: upper indicator 1/2, lower integral empty
        p = K.MollifierParams(18.0, 1e-4)
        x = 1e5
        t = math.exp(1e-4) * x
        lam = K.lambda_norm(p)
        full, _ = K.eta_weighted_integral(p, -1e-4, 1e-4, -0.5)
        ref = math.log(t) / lam * 0.5 * full
        assert K.mass_M(x, p, t) == pytest.approx(ref, rel=1e-12)

    def test_two_quadratures_agree(self):
        # t strictly inside (x, e^eps x): upper indicator 1, lower 0
        p = K.MollifierParams(18.0, 1e-4)
        x = 1e5
        t = x * math.exp(0.5e-4)
        v1 = K.mass_M(x, p, t)
        r = math.log(t / x)
        lam2, _ = K.eta_weighted_integral(p, -1e-4, 1e-4, 0.5, nodes=192)
        up, _ = K.eta_weighted_integral(p, -1e-4, r, -0.5, nodes=192)
        v2 = math.log(t) / lam2 * up
        assert abs(v1 - v2) <= 1e-10

    def test_interior_point_below_x(self):
        # t in (e^-eps x, x): only the lower indicator contributes, sign -
        p = K.MollifierParams(18.0, 1e-4)
        x = 1e5
        t = x * math.exp(-0.3e-4)
        r = math.log(t / x)
        lam = K.lambda_norm(p)
        dn, _ = K.eta_weighted_integral(p, r, 1e-4, -0.5)
        assert K.mass_M(x, p, t) == pytest.approx(-math.log(t) / lam * dn, rel=1e-12)

    def test_precondition(self):
        with pytest.raises(K.KernelDomainError):
            K.mass_M(1e5, K.MollifierParams(5.0, 2e-2), 1e5)


class TestLogIntegral:
    def test_root(self):
        # root located by bisection over the quadrature oracle
        lo, hi = 1.2, 1.8
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if quad_pv_li(mid) < 0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        assert root == pytest.approx(1.4513692348833811, abs=1e-9)
        assert abs(K.log_integral(root)) <= 1e-9

    def test_li2_against_quadrature(self):
        assert K.log_integral(2.0) == pytest.approx(quad_pv_li(2.0), abs=1e-11)
        assert K.log_integral(2.0) == pytest.approx(1.0451637801174927, abs=1e-12)

    def test_li_1e6(self, sieve_small):
        v = K.log_integral(1e6)
        assert v == pytest.approx(quad_pv_li(1e6), rel=1e-11)
        assert v == pytest.approx(78627.54915740229, rel=1e-10)
        assert sieve_small.prime_pi(1e6) == 78498 < v

    def test_two_resolution_agreement(self):
        for x in (2.0, 17.0, 1e4, 1e8):
            assert quad_pv_li(x, 200) == pytest.approx(quad_pv_li(x, 400), rel=1e-10)
            assert K.log_integral(x) == pytest.approx(quad_pv_li(x, 400), rel=1e-10)

    def test_signals(self):
        with pytest.raises(K.KernelDomainError):
            K.log_integral(1.0)
        with pytest.raises(K.KernelDomainError):
            K.log_integral(0.0)
