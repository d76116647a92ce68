"""Experiment harness: the KS statistic, reports, determinism, verdicts."""

import math

import numpy as np
import pytest

import nlcsbp.experiments as E
import nlcsbp.mechanisms as M
from nlcsbp import _kernels, suite
from nlcsbp.errors import ContractError, DomainError

UNIFORM = lambda x: np.clip(np.asarray(x, float), 0.0, 1.0)


class TestKsStatistic:
    def test_hand_example(self):
        # six step gaps of {.25,.5,.75} against F(x)=x: the largest is 0.25
        assert E.ks_statistic(np.array([0.25, 0.5, 0.75]), UNIFORM) == 0.25

    def test_self_ecdf_bound(self):
        x = np.sort(np.random.default_rng(0).random(100))

        def ecdf(v):
            return np.searchsorted(x, v, side="right") / x.size

        assert E.ks_statistic(x, ecdf) <= 1.0 / x.size + 1e-12

    def test_range(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            v = E.ks_statistic(rng.random(50), UNIFORM)
            assert 0.0 <= v <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            E.ks_statistic(np.array([]), UNIFORM)

    def test_bad_cdf_rejected(self):
        with pytest.raises(DomainError):
            E.ks_statistic(np.array([0.5, 1.5]), lambda x: np.asarray(x))

    def test_meta_uniform_quantile(self):
        # 100 seeded repetitions of n = 1e4 uniforms: at least 95 land below
        # the stated quantile of the statistic
        n = 10_000
        below = 0
        for rep in range(100):
            u = _kernels.uniform_words(424242, rep, 0, n)
            below += E.ks_statistic(u, UNIFORM) < 0.0193
        assert below >= 95

    def test_two_sample(self):
        a = np.array([0.1, 0.2, 0.3])
        b = np.array([0.15, 0.25, 0.35])
        assert abs(E.ks_two_sample(a, b) - 1.0 / 3.0) < 1e-12


class TestReports:
    def test_rows_schema(self):
        rep = E.run_exit_experiment(M.StableMinusDrift(1.0, 0.5, 1.0), 2.0,
                                    1.0, 500, seed=5)
        rows = rep.rows()
        assert rows[0][0] == "exit_probability"
        assert len(rows[0]) == 8
        d = rep.to_json_dict()
        assert d["verdict"] in ("Pass", "Fail")
        assert d["runtime_seconds"] >= 0.0

    def test_csv_deterministic_across_runs_and_workers(self, tmp_path):
        rep1 = E.run_rho_experiment(0.5, 1.5, 1.0, 800, seed=3, workers=1)
        rep2 = E.run_rho_experiment(0.5, 1.5, 1.0, 800, seed=3, workers=1)
        rep4 = E.run_rho_experiment(0.5, 1.5, 1.0, 800, seed=3, workers=4)
        paths = []
        for i, rep in enumerate((rep1, rep2, rep4)):
            p = tmp_path / f"r{i}.csv"
            suite.write_csv([rep], p)
            paths.append(p.read_bytes())
        assert paths[0] == paths[1] == paths[2]

    def test_seed_changes_values(self):
        a = E.run_rho_experiment(0.5, 1.5, 1.0, 400, seed=1)
        b = E.run_rho_experiment(0.5, 1.5, 1.0, 400, seed=2)
        assert a.estimates[0].value != b.estimates[0].value


class TestRho:
    def test_pass_at_moderate_n(self):
        rep = E.run_rho_experiment(0.5, 1.5, 1.0, 4000, seed=11)
        assert rep.verdict == "Pass"
        assert abs(rep.estimates[0].target - 1.1283791671) < 1e-9

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            E.run_rho_experiment(0.5, 1.5, 1.0, 0, seed=1)


class TestOvershoot:
    def test_drift_degenerate(self):
        rep = E.run_overshoot_experiment(M.PureDriftSubordinator(1.0), 10.0,
                                         100, seed=1)
        assert rep.verdict == "Pass"
        assert rep.estimates[0].value == 0.0

    def test_stable_moderate(self):
        rep = E.run_overshoot_experiment(M.StableSubordinator(1.0, 0.5), 1e3,
                                         4000, seed=7, ks_threshold=0.04)
        assert rep.verdict == "Pass"

    def test_logcritical_qualitative(self):
        rep = E.run_overshoot_experiment(M.LogCriticalSubordinator(2.0), 1e4,
                                         800, seed=9)
        assert rep.verdict in ("Qualitative", "Fail")


class TestRegime:
    def test_case_tag_mismatch(self):
        model = M.Model(M.StableSubordinator(1.0, 0.5), M.RateFunction(1.0, 1.0), 1.0)
        with pytest.raises(ContractError):
            E.run_regime_experiment(model, E.CASE3, (0.05,), 100, seed=1)

    def test_case1_general_beta_two_sample(self):
        # the two-sample route has no closed oracle; the lookback must sit
        # deep enough that the renormalizer dwarfs the start (phi_inv ~ 500)
        model = M.Model(M.StableSubordinator(1.0, 0.5),
                        M.RateFunction(1.0, 1.5), 1.0)
        rep = E.run_regime_experiment(model, E.CASE1, (0.002,), 2000, seed=13)
        assert rep.ks[0].threshold == pytest.approx(1.36 * math.sqrt(2 / 2000))
        assert rep.verdict == "Pass"

    def test_case2_reports_diagnostics(self):
        model = M.Model(M.LogCriticalSubordinator(2.0),
                        M.RateFunction(1.0, 1.0), 1.0)
        rep = E.run_regime_experiment(model, E.CASE2, (0.3, 0.2), 150, seed=3)
        labels = [e.label for e in rep.estimates]
        assert any("iqr_t=" in l for l in labels)
        assert any("start_atom" in l for l in labels)
        assert rep.verdict in ("Qualitative", "Fail")


class TestClassicalCdf:
    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            E.run_classical_cdf_experiment(0.5, 1.0, 1.0, (), 100, seed=1)

    def test_moderate_run(self):
        rep = E.run_classical_cdf_experiment(0.5, 1.0, 1.0, (0.5, 1.0), 2500,
                                             seed=17, ks_threshold=0.04,
                                             renorm_threshold=0.05,
                                             renorm_x0s=(100.0,))
        assert rep.verdict == "Pass"
        # finite-start gap is identically zero for the pure power family
        gap = [e for e in rep.estimates if "gap" in e.label][0]
        assert gap.value <= 1e-12


class TestExit:
    def test_nominal(self):
        rep = E.run_exit_experiment(M.StableMinusDrift(1.0, 0.5, 1.0), 2.0,
                                    1.0, 3000, seed=23)
        assert rep.verdict == "Pass"
        assert abs(rep.estimates[0].target - math.exp(-1.0)) < 1e-12

    def test_p_four_variant(self):
        rep = E.run_exit_experiment(M.StableMinusDrift(2.0, 0.5, 1.0), 1.25,
                                    1.0, 3000, seed=29)
        assert rep.verdict == "Pass"
        assert abs(rep.estimates[0].target - math.exp(-1.0)) < 1e-12

    def test_immediate_crossing_limit(self):
        rep = E.run_exit_experiment(M.StableMinusDrift(1.0, 0.5, 1.0), 1.005,
                                    1.0, 800, seed=31)
        assert rep.estimates[0].value > 0.95

    def test_domain(self):
        with pytest.raises(DomainError):
            E.run_exit_experiment(M.StableSubordinator(1.0, 0.5), 2.0, 1.0,
                                  10, seed=1)


class TestClassification:
    def test_full_table(self):
        rep = E.run_classification_suite(suite.classification_table(), seed=0)
        assert rep.verdict == "Pass"
        assert len(rep.estimates) == 6

    def test_mismatch_detected(self):
        table = [(M.Model(M.StableSubordinator(1.0, 0.7),
                          M.RateFunction(1.0, 0.5), 1.0), "explosive", None)]
        rep = E.run_classification_suite(table, seed=0)
        assert rep.verdict == "Fail"
