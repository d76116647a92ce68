"""The acceptance battery: every verified claim as one runnable experiment.

``run_all`` executes the full battery with a fixed seed and returns the
reports in a fixed order; ``write_csv``/``write_json`` emit the
deterministic result files (runtimes live only in the JSON mirror).
Criterion 8 (critical-regime dispersion contraction at the declared
lookback grid) is structurally red at desk scale; see the README notes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from . import csbp, limit_laws, mechanisms
from .experiments import (CASE1, CASE2, CASE3, Estimate, ExperimentReport,
                          VERDICT_FAIL, VERDICT_PASS, ks_statistic,
                          run_classical_cdf_experiment,
                          run_classification_suite, run_exit_experiment,
                          run_overshoot_experiment, run_regime_experiment,
                          run_rho_experiment)
from .mechanisms import (LogCriticalSubordinator, LogTailSubordinator, Model,
                         NeveuMechanism, PureDriftSubordinator, RateFunction,
                         StableMinusDrift, StableSubordinator)
from .rng import RngStream

DEFAULT_SEED = 20260808


def check_weibull_identity(seed=0):
    """MGF partial sums against quadrature of the stretched-exponential CDF
    (1e-8 relative)."""
    import time
    from scipy.integrate import quad

    t0 = time.time()
    rep = ExperimentReport("weibull_mgf_identity", {}, 0, seed)
    worst = 0.0
    for alpha in (0.25, 0.5, 0.75):
        for theta in (-0.5, 0.0, 0.5):
            got = limit_laws.rho_mgf(alpha, 1.0, theta)
            oracle = quad(lambda w: math.exp(theta * w ** (1.0 - alpha) - w),
                          0.0, math.inf, epsabs=1e-14, epsrel=1e-12,
                          limit=300)[0]
            rel = abs(got - oracle) / abs(oracle)
            worst = max(worst, rel)
            rep.estimates.append(Estimate(
                f"mgf_rel_err_a={alpha:g}_th={theta:g}", rel, 0.0, 0.0, 1e-8))
    rep.verdict = VERDICT_PASS if all(e.ok for e in rep.estimates) else VERDICT_FAIL
    rep.runtime_seconds = time.time() - t0
    return rep


def check_deterministic_closed_forms(seed=0):
    """Pure-drift explosion exactly 1, lookback exactly 1/t, the inverse
    round trip of the tail integral, and the hand-counted KS value."""
    import time

    t0 = time.time()
    rep = ExperimentReport("deterministic_closed_forms", {}, 0, seed)
    rng = RngStream(seed, 0)
    model = Model(PureDriftSubordinator(1.0), RateFunction(1.0, 2.0), 1.0)
    s = csbp.simulate_explosion(model, rng)
    rep.estimates.append(Estimate("pure_drift_explosion_time",
                                  s.t_inf_estimate, 0.0, 1.0, 1e-12))
    for t in (0.1, 0.01):
        pe = csbp.pre_explosion_value(model, t, rng)
        rep.estimates.append(Estimate(f"pure_drift_lookback_t={t:g}",
                                      pe.x_value, 0.0, 1.0 / t, 1e-12 / t))
    m = Model(StableSubordinator(1.0, 0.5), RateFunction(1.0, 1.0), 1.0)
    for t in (0.25, 1.0, 4.0):
        x = mechanisms.phi_integral_inverse(m, t)
        back = mechanisms.phi_integral(m, x)
        rep.estimates.append(Estimate(f"phi_round_trip_t={t:g}", back, 0.0,
                                      t, 1e-10 * t))
    ks = ks_statistic(np.array([0.25, 0.5, 0.75]),
                      lambda x: np.clip(np.asarray(x, float), 0.0, 1.0))
    rep.estimates.append(Estimate("ks_hand_example", ks, 0.0, 0.25, 0.0))
    rep.verdict = VERDICT_PASS if all(e.ok for e in rep.estimates) else VERDICT_FAIL
    rep.runtime_seconds = time.time() - t0
    return rep


def classification_table():
    """Six rows covering every branch, both critical verdicts included."""
    r1 = RateFunction(1.0, 1.0)
    return [
        (Model(StableSubordinator(1.0, 0.7), RateFunction(1.0, 0.5), 1.0),
         "non-explosive", None),
        (Model(StableSubordinator(1.0, 0.9), RateFunction(1.0, 0.3), 1.0),
         "non-explosive", None),
        (Model(StableSubordinator(1.0, 0.5), RateFunction(1.0, 1.5), 1.0),
         "explosive", None),
        (Model(LogTailSubordinator(2.0), r1, 1.0), "explosive", None),
        (Model(LogCriticalSubordinator(2.0), r1, 1.0), "critical", True),
        (Model(NeveuMechanism(), r1, 1.0), "critical", False),
    ]


def run_all(seed=DEFAULT_SEED, workers=1, scale=1.0):
    """The full battery, in criterion order.  ``scale`` shrinks sample
    counts for smoke runs (1.0 = the declared sizes)."""
    def sz(n):
        return max(8, int(round(n * scale)))

    reports = []
    reports.append(run_rho_experiment(0.5, 1.5, 1.0, sz(20000), seed,
                                      workers=workers))
    reports.append(check_weibull_identity(seed))
    reports.append(run_overshoot_experiment(StableSubordinator(1.0, 0.5),
                                            1e3, sz(20000), seed,
                                            workers=workers))
    reports.append(run_overshoot_experiment(LogTailSubordinator(2.0), 1e6,
                                            sz(20000), seed, workers=workers))
    reports.append(run_classical_cdf_experiment(
        0.5, 1.0, 1.0, (0.5, 1.0, 2.0), sz(10000), seed, workers=workers))
    reports.append(run_regime_experiment(
        Model(StableSubordinator(1.0, 0.5), RateFunction(1.0, 1.0), 1.0),
        CASE1, (0.1, 0.05), sz(10000), seed, workers=workers))
    reports.append(run_regime_experiment(
        Model(LogTailSubordinator(2.0), RateFunction(1.0, 1.0), 1.0),
        CASE3, (0.05, 0.02, 0.01), sz(5000), seed, workers=workers))
    reports.append(run_regime_experiment(
        Model(LogCriticalSubordinator(2.0), RateFunction(1.0, 1.0), 1.0),
        CASE2, (0.1, 0.05, 0.02), sz(800), seed, workers=workers))
    reports.append(run_exit_experiment(StableMinusDrift(1.0, 0.5, 1.0), 2.0,
                                       1.0, sz(10000), seed, workers=workers))
    reports.append(run_classification_suite(classification_table(), seed))
    reports.append(check_deterministic_closed_forms(seed))
    return reports


def rows_of(reports):
    header = ("experiment", "label", "value", "se_or_threshold", "target",
              "n", "seed", "verdict")
    rows = [header]
    for rep in reports:
        rows.extend(rep.rows())
    return rows


def _format_cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=False)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(reports, path):
    lines = [",".join(_format_cell(c) for c in row) for row in rows_of(reports)]
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def write_json(reports, path):
    payload = [rep.to_json_dict() for rep in reports]
    _atomic_write(path, (json.dumps(payload, indent=2, default=str) + "\n").encode())


def worst_verdict(reports):
    if any(r.verdict == VERDICT_FAIL for r in reports):
        return VERDICT_FAIL
    if all(r.verdict == VERDICT_PASS for r in reports):
        return VERDICT_PASS
    return "Qualitative"
