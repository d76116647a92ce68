"""Limit laws: closed forms, samplers, and their independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma as G

import nlcsbp.limit_laws as L
from nlcsbp.errors import DomainError
from nlcsbp.rng import RngStream


class TestChiTail:
    def test_arcsine_closed_form(self):
        # at index 1/2 the tail is (2/pi) arcsin(z^(-1/2))
        for z in (1.5, 2.0, 5.0, 100.0):
            want = 2.0 / math.pi * math.asin(z ** -0.5)
            assert abs(L.chi_tail(0.5, z) - want) < 1e-10
        assert abs(L.chi_tail(0.5, 2.0) - 0.5) < 1e-12

    def test_boundaries(self):
        for a in (0.0, 0.3, 0.5, 1.0):
            assert L.chi_tail(a, 1.0) == 1.0
            assert L.chi_tail(a, 0.5) == 1.0
        assert L.chi_tail(1.0, 2.0) == 0.0
        assert L.chi_tail(0.0, 1e9) == 1.0

    def test_monotone_grid(self):
        for a in (0.25, 0.5, 0.75):
            z = np.geomspace(1.0, 1e6, 60)
            vals = [L.chi_tail(a, v) for v in z]
            assert all(b <= x for x, b in zip(vals, vals[1:]))
            # tail decays like z^-a (power tail, heavy for small a)
            assert vals[-1] < 2.0 * z[-1] ** -a

    def test_domain(self):
        with pytest.raises(DomainError):
            L.chi_tail(1.5, 2.0)


class TestChiSample:
    def test_support_and_tail_match(self):
        rng = RngStream(11, 0)
        n = 100_000
        draws = np.array([L.chi_sample(0.5, rng) for _ in range(n)])
        assert (draws >= 1.0).all()
        emp = (draws > 2.0).mean()
        se = math.sqrt(0.25 / n)
        assert abs(emp - 0.5) <= 3.0 * se
        med = np.median(draws)
        assert abs(med - 2.0) < 0.05

    def test_methods_agree_in_law(self):
        from nlcsbp.experiments import ks_two_sample

        rng = RngStream(13, 0)
        rep = np.array([L.chi_sample(0.4, rng) for _ in range(4000)])
        inv = np.array([L.chi_sample(0.4, rng, method="invcdf")
                        for _ in range(400)])
        # two-sample threshold at ~99.9% for (4000, 400)
        assert ks_two_sample(rep, inv) < 1.95 * math.sqrt(1 / 4000 + 1 / 400)

    def test_degenerate_rejected(self):
        rng = RngStream(1, 0)
        for a in (0.0, 1.0):
            with pytest.raises(DomainError):
                L.chi_sample(a, rng)


class TestChiLaplace:
    def test_at_zero(self):
        assert L.chi_laplace(0.5, 0.0) == 1.0

    def test_monotone_and_bounded(self):
        vals = [L.chi_laplace(0.5, a) for a in (0.1, 0.5, 1.0, 2.0)]
        assert all(b < x for x, b in zip(vals, vals[1:]))
        for a, v in zip((0.1, 0.5, 1.0, 2.0), vals):
            assert 0.0 < v <= math.exp(-a)  # support starts at 1

    def test_against_monte_carlo(self):
        rng = RngStream(17, 0)
        n = 100_000
        draws = np.array([L.chi_sample(0.5, rng) for _ in range(n)])
        for a in (0.5, 1.0):
            mc = np.exp(-a * draws)
            assert abs(L.chi_laplace(0.5, a) - mc.mean()) <= 3.0 * mc.std() / math.sqrt(n)


class TestRhoMoments:
    def test_first_moment_gamma_value(self):
        got = L.rho_moment(0.5, 1.5, 1.0, 1)
        assert abs(got - 1.1283791671) < 1e-9
        assert abs(got - 2.0 / math.sqrt(math.pi)) < 1e-14

    def test_exponential_case(self):
        # at index 0 the law is exponential with mean beta: n-th moment n! beta^n
        assert abs(L.rho_moment(0.0, 1.0, 1.0, 2) - 2.0) < 1e-12
        assert abs(L.rho_moment(0.0, 2.0, 0.5, 3) - math.factorial(3) * 2.0 ** 3 / 1.0) < 1e-9

    def test_zeroth_moment(self):
        assert L.rho_moment(0.3, 0.9, 2.0, 0) == 1.0

    def test_weibull_moments_identity(self):
        # with c0 (beta-alpha) = 1 and beta = 1 the product telescopes to
        # Gamma(1 + n(1-alpha)) -- the Weibull moments
        for a in (0.0, 0.25, 0.5, 0.75):
            for n in range(1, 7):
                got = L.rho_moment(a, 1.0, 1.0 / (1.0 - a), n)
                want = G(1.0 + n * (1.0 - a))
                assert abs(got - want) <= 1e-10 * want

    def test_prefactor_scales_with_nth_power(self):
        # doubling c0 divides the n-th moment by 2^n (the recursion-consistent
        # prefactor), not by 2
        for n in (1, 2, 3):
            r = L.rho_moment(0.5, 1.5, 2.0, n) / L.rho_moment(0.5, 1.5, 1.0, n)
            assert abs(r - 0.5 ** n) < 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            L.rho_moment(0.5, 0.5, 1.0, 1)
        with pytest.raises(DomainError):
            L.rho_moment(0.5, 1.5, 1.0, -1)


class TestRhoMgf:
    def test_at_zero(self):
        assert L.rho_mgf(0.5, 1.5, 0.0) == 1.0

    def test_geometric_case(self):
        assert abs(L.rho_mgf(0.0, 1.0, 0.5) - 2.0) < 1e-12

    def test_weibull_quadrature_oracle(self):
        for a in (0.25, 0.5, 0.75):
            for th in (-0.5, 0.5):
                oracle = quad(lambda w: math.exp(th * w ** (1 - a) - w), 0,
                              math.inf, epsabs=1e-14, epsrel=1e-12, limit=300)[0]
                assert abs(L.rho_mgf(a, 1.0, th) - oracle) <= 1e-8 * abs(oracle)

    def test_series_consistent_with_moments(self):
        a, b = 0.5, 1.5
        th = 0.4
        total = 1.0
        for n in range(1, 60):
            total += th ** n / math.factorial(n) \
                * L.rho_moment(a, b, 1.0 / (b - a), n)
        assert abs(L.rho_mgf(a, b, th) - total) < 1e-12 * total

    def test_domain_radius(self):
        with pytest.raises(DomainError):
            L.rho_mgf(0.5, 1.5, 1.0)  # |theta| >= 1/beta


class TestWeibullCdf:
    def test_values(self):
        assert L.weibull_cdf(0.5, 0.0) == 0.0
        assert abs(L.weibull_cdf(0.5, 1.0) - (1 - math.exp(-1))) < 1e-12
        assert abs(L.weibull_cdf(0.0, 2.0) - (1 - math.exp(-2))) < 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            L.weibull_cdf(0.5, -1.0)


class TestLdpRate:
    def test_values(self):
        assert abs(L.rho_ldp_rate(0.5, 1.5, 1.0) - 0.5) < 1e-14
        assert abs(L.rho_ldp_rate(0.5, 1.0, 1.0) - 0.25) < 1e-14

    @given(c0=st.floats(0.5, 2.0), alpha=st.floats(0.1, 0.9))
    @settings(max_examples=25, deadline=None)
    def test_homogeneity_in_c0(self, c0, alpha):
        r1 = L.rho_ldp_rate(alpha, 1.5, c0)
        r2 = L.rho_ldp_rate(alpha, 1.5, 2.0 * c0)
        assert abs(r2 / r1 - 2.0 ** (1.0 / (1.0 - alpha))) < 1e-9

    def test_domain(self):
        with pytest.raises(DomainError):
            L.rho_ldp_rate(1.0, 1.5, 1.0)


class TestCase1Sampler:
    def test_degenerate_alpha_one(self):
        rng = RngStream(1, 0)
        assert L.case1_limit_sample(1.0, 1.5, rng) == 1.0

    def test_nonnegative(self):
        rng = RngStream(5, 0)
        draws = [L.case1_limit_sample(0.5, 1.5, rng.spawn(i)) for i in range(50)]
        assert all(v >= 0 for v in draws)

    def test_beta_one_exponential_factor(self):
        # at beta = 1, rho^(1/(1-alpha)) alone is standard exponential
        from nlcsbp import csbp, mechanisms

        n = 4000
        a = 0.5
        model = mechanisms.Model(
            mechanisms.StableSubordinator(c0=1.0 / (1.0 - a), alpha=a),
            mechanisms.RateFunction(1.0, 1.0), 1.0)
        rng = RngStream(7, 0)
        draws = np.array([
            csbp.simulate_explosion(model, rng.spawn(i)).t_inf_estimate
            ** (1.0 / (1.0 - a)) for i in range(n)])
        se_m = draws.std() / math.sqrt(n)
        assert abs(draws.mean() - 1.0) <= 3.0 * se_m
        p = (draws > 1.0).mean()
        assert abs(p - math.exp(-1.0)) <= 3.0 * math.sqrt(p * (1 - p) / n)
