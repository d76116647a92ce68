"""Time-change layer: eta arithmetic, explosion draws, classical closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import nlcsbp.csbp as C
import nlcsbp.mechanisms as M
from nlcsbp.errors import (ContractError, DivergesError, DomainError,
                           NonExplosiveError)
from nlcsbp.rng import RngStream

ST = M.StableSubordinator(1.0, 0.5)
PD = M.PureDriftSubordinator(1.0)
LT = M.LogTailSubordinator(2.0)
R1 = M.RateFunction(1.0, 1.0)
R15 = M.RateFunction(1.0, 1.5)
R2 = M.RateFunction(1.0, 2.0)


class TestEtaIncrement:
    def test_infinite_horizon(self):
        assert C.eta_increment(R2, 1.0, 1.0, math.inf) == 1.0

    def test_constant_segment(self):
        assert C.eta_increment(R2, 2.0, 0.0, 3.0) == 3.0 / 4.0

    def test_log_form(self):
        got = C.eta_increment(R1, 2.0, 0.5, 4.0)
        assert abs(got - math.log(2.0) / 0.5) < 1e-14

    @given(level0=st.floats(0.5, 10.0), slope=st.floats(0.1, 3.0),
           dt=st.floats(0.1, 5.0), beta=st.floats(0.5, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_matches_quadrature(self, level0, slope, dt, beta):
        rate = M.RateFunction(1.0, beta)
        want = quad(lambda s: 1.0 / float(rate(level0 + slope * s)), 0.0, dt,
                    epsabs=1e-13, epsrel=1e-11)[0]
        got = C.eta_increment(rate, level0, slope, dt)
        assert abs(got - want) <= 1e-8 * want

    def test_errors(self):
        with pytest.raises(DomainError):
            C.eta_increment(R2, 1.0, -1.0, 2.0)  # segment hits zero
        with pytest.raises(DivergesError):
            C.eta_increment(R1, 1.0, 1.0, math.inf)  # beta = 1 tail diverges


class TestSimulateExplosion:
    def test_pure_drift_deterministic(self):
        s = C.simulate_explosion(M.Model(PD, R2, 1.0), RngStream(1, 0))
        assert s.t_inf_estimate == 1.0
        assert s.tail_bound == 0.0 and s.events_used == 0

    def test_non_explosive_rejected(self):
        bad = M.Model(M.StableSubordinator(1.0, 0.7), M.RateFunction(1.0, 0.5), 1.0)
        with pytest.raises(ContractError):
            C.simulate_explosion(bad, RngStream(1, 0))

    def test_tail_bound_contract(self):
        model = M.Model(ST, R15, 1.0)
        for i in range(25):
            s = C.simulate_explosion(model, RngStream(3, i), tail_tol=1e-3)
            assert s.tail_bound <= 1e-3 * s.t_inf_estimate
            assert s.events_used > 0 and s.final_level > 1.0

    def test_mean_matches_potential_oracle(self):
        model = M.Model(ST, R15, 1.0)
        n = 1500
        draws = np.array([
            C.simulate_explosion(model, RngStream(9, i)).t_inf_estimate
            for i in range(n)])
        want = C.expected_eta_via_potential(0.5, 1.5, 1.0)
        assert abs(draws.mean() - want) <= 3.0 * draws.std() / math.sqrt(n)

    def test_halved_tail_tol_consistency(self):
        # refining the stopping rule shifts each path by less than the
        # removed tail bound
        model = M.Model(ST, R15, 1.0)
        for i in range(20):
            coarse = C.simulate_explosion(model, RngStream(21, i), tail_tol=1e-3)
            fine = C.simulate_explosion(model, RngStream(21, i), tail_tol=5e-4)
            assert fine.t_inf_estimate >= coarse.t_inf_estimate - 1e-12
            assert fine.t_inf_estimate - coarse.t_inf_estimate \
                <= coarse.tail_bound + 1e-12

    def test_smd_rejection_sampling_runs(self):
        model = M.Model(M.StableMinusDrift(1.0, 0.5, 1.0),
                        M.RateFunction(1.0, 1.5), 1.0)
        s = C.simulate_explosion(model, RngStream(31, 2))
        assert s.t_inf_estimate > 0 and s.final_level > 0


class TestPreExplosion:
    def test_pure_drift_closed_form(self):
        model = M.Model(PD, R2, 1.0)
        pe = C.pre_explosion_value(model, 0.1, RngStream(1, 0))
        assert abs(pe.x_value - 10.0) < 1e-12

    def test_boundary_convention(self):
        model = M.Model(PD, R2, 1.0)
        pe = C.pre_explosion_value(model, 5.0, RngStream(1, 0))  # t >= 1
        assert pe.x_value == 1.0

    def test_stable_lookback_consistent_with_kernel(self):
        from nlcsbp import _kernels

        model = M.Model(ST, R1, 1.0)
        for i in range(12):
            pe = C.pre_explosion_value(model, 0.05, RngStream(41, i))
            out = _kernels.stable_eta_batch(
                41, i, 1, 0.5, 1.0, 1.0, 1.0, 1.0, C.ETA_Q_STEP,
                C.residual_coefficient(0.5, 1.0), C.RESIDUAL_MARGIN, 1e-3,
                1e-3 * 0.05 / (C.RESIDUAL_MARGIN * C.residual_coefficient(0.5, 1.0)),
                np.array([0.05]), True, 10 ** 7)
            assert abs(pe.x_value - out[4][0, 0]) <= 1e-9 * out[4][0, 0]

    def test_renormalization_fields(self):
        model = M.Model(ST, R1, 1.0)
        pe = C.pre_explosion_value(model, 0.05, RngStream(43, 1))
        pt = M.phi_table(model)
        assert abs(pe.renormalized - pe.x_value / pt.inverse(0.05)) < 1e-9


class TestCumulants:
    def test_initial_condition(self):
        assert C.cumulant_u(ST, 1.7, 0.0) == 1.7

    def test_stable_closed_form(self):
        assert abs(C.cumulant_u(ST, 1.0, 1.0) - 2.25) < 1e-12

    def test_linear_exponential_growth(self):
        assert abs(C.cumulant_u(PD, 2.0, 1.0) - 2.0 * math.e) < 1e-12

    def test_quadrature_route_round_trip(self):
        u = C.cumulant_u(LT, 1.0, 0.5)
        back = quad(lambda v: 1.0 / -M.psi_eval(LT, v), 1.0, u,
                    epsabs=1e-13, epsrel=1e-11)[0]
        assert abs(back - 0.5) < 1e-7

    def test_semigroup_property(self):
        for mech in (ST, PD):
            for t, s, lam in [(0.3, 0.7, 1.0), (1.0, 2.0, 0.5), (0.1, 0.1, 2.0)]:
                lhs = C.cumulant_u(mech, lam, t + s)
                rhs = C.cumulant_u(mech, C.cumulant_u(mech, lam, s), t)
                assert abs(lhs - rhs) <= 1e-9 * lhs

    def test_semigroup_property_quadrature_family(self):
        lhs = C.cumulant_u(LT, 1.0, 0.5)
        rhs = C.cumulant_u(LT, C.cumulant_u(LT, 1.0, 0.2), 0.3)
        assert abs(lhs - rhs) <= 1e-6 * lhs

    def test_u0_values(self):
        assert abs(C.cumulant_u0(ST, 2.0) - 1.0) < 1e-12
        assert abs(C.cumulant_u0(ST, 1.0) - 0.25) < 1e-12

    def test_u0_non_explosive(self):
        with pytest.raises(NonExplosiveError):
            C.cumulant_u0(PD, 1.0)

    def test_u0_quadrature_family_round_trip(self):
        u = C.cumulant_u0(LT, 0.5)
        back = quad(lambda w: math.exp(-w) / -M.psi_eval(LT, math.exp(-w)),
                    -math.log(u), 50.0, epsabs=1e-13, epsrel=1e-9, limit=300)[0]
        assert abs(back - 0.5) < 1e-6


class TestDynkin:
    def test_verdicts(self):
        assert C.dynkin_test(ST).converged
        assert not C.dynkin_test(PD).converged
        assert C.dynkin_test(LT).converged
        assert not C.dynkin_test(M.NeveuMechanism()).converged


class TestClassicalCdf:
    def test_values(self):
        assert C.classical_explosion_cdf(ST, 1.0, 0.0) == 0.0
        want = 1.0 - math.exp(-1.0)
        assert abs(C.classical_explosion_cdf(ST, 1.0, 2.0) - want) < 1e-12

    def test_monotone_in_t_and_x(self):
        ts = [0.5, 1.0, 2.0, 4.0]
        vals = [C.classical_explosion_cdf(ST, 1.0, t) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        xs = [0.5, 1.0, 2.0]
        vals = [C.classical_explosion_cdf(ST, x, 1.0) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_requires_subordinator(self):
        with pytest.raises(DomainError):
            C.classical_explosion_cdf(M.StableMinusDrift(1.0, 0.5, 1.0), 1.0, 1.0)


class TestPotentialOracle:
    def test_beta_closed_form(self):
        from scipy.special import gamma as G

        for a, b, c0 in [(0.5, 1.5, 1.0), (0.25, 1.0, 2.0), (0.7, 2.2, 0.5)]:
            got = C.expected_eta_via_potential(a, b, c0)
            want = G(b - a) / (c0 * G(b))
            assert abs(got - want) <= 1e-9 * want

    def test_equals_first_moment(self):
        import nlcsbp.limit_laws as L

        for a, b in [(0.5, 1.5), (0.3, 0.9)]:
            assert abs(C.expected_eta_via_potential(a, b, 1.0)
                       - L.rho_moment(a, b, 1.0, 1)) < 1e-9

    def test_decreasing_in_beta(self):
        vals = [C.expected_eta_via_potential(0.5, b, 1.0)
                for b in (1.0, 1.5, 2.5, 4.0)]
        assert all(y < x for x, y in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            C.expected_eta_via_potential(0.5, 0.4, 1.0)


def test_residual_coefficient_values():
    from scipy.special import gamma as G

    assert abs(C.residual_coefficient(0.5, 1.5) - G(2.0) / G(1.5)) < 1e-14
    assert C.residual_coefficient(1.0, 1.0) == 1.0
    assert abs(C.residual_coefficient(0.5, 0.5) - 1.0 / G(0.5)) < 1e-14
    with pytest.raises(DomainError):
        C.residual_coefficient(0.9, 0.5)
