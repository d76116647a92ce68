"""Batch engines: backend agreement and statistical conformance."""

import numpy as np
import pytest

from nlcsbp import _kernels
from nlcsbp._kernels import fallback
from nlcsbp.csbp import residual_coefficient

BACKENDS = [fallback]
IDS = ["python"]
if _kernels.HAVE_COMPILED:
    BACKENDS.append(_kernels.get_backend_module("cython"))
    IDS.append("cython")


@pytest.fixture(params=BACKENDS, ids=IDS)
def backend(request):
    return request.param


def test_stable_increment_laplace(backend):
    n = 100_000
    bits = backend.philox4x64(2, np.uint64(0), np.arange(n, dtype=np.uint64))
    u = backend.bits_to_uniform(bits[:, 0])
    w = -np.log(backend.bits_to_uniform(bits[:, 1]))
    z = backend.stable_increment_std(0.5, u, w)
    assert (z > 0).all()
    est = np.exp(-2.0 * z).mean()
    se = np.exp(-2.0 * z).std() / np.sqrt(n)
    assert abs(est - np.exp(-np.sqrt(2.0))) <= 3.0 * se


def test_passage_degenerate_start(backend):
    tau, pre, post, steps = backend.stable_passage_batch(
        1, 0, 4, 0.5, 1.0, 0.0, 8.0, 4.0, 0.005, 5e-5, 10 ** 6)
    assert np.all(tau == 0.0) and np.all(pre == 8.0) and np.all(post == 8.0)
    assert np.all(steps == 0)


def test_passage_monotone_crossing(backend):
    tau, pre, post, steps = backend.stable_passage_batch(
        3, 0, 512, 0.5, 1.0, 0.0, 0.0, 100.0, 0.005, 5e-5, 10 ** 6)
    assert np.all(post > 100.0)
    assert np.all(pre <= 100.0 + 1e-12)
    assert np.all(tau > 0) and np.all(steps > 0)


def test_cpp_passage_overshoot_exact(backend):
    tau, pre, post, steps = backend.cpp_passage_batch(
        5, 0, 512, 1.0, _kernels.JUMP_LOGTAIL, np.array([2.0]), np.empty(0),
        np.empty(0), 0.0, 1000.0, 10 ** 6)
    assert np.all(post > 1000.0) and np.all(pre <= 1000.0)
    # inter-jump times at unit rate: mean total time ~ steps
    assert abs((tau / steps).mean() - 1.0) < 0.1


def test_eta_batch_matches_reference_moment(backend):
    n = 4000
    c1 = residual_coefficient(0.5, 1.5)
    eta, vend, steps, budget, X = backend.stable_eta_batch(
        7, 0, n, 0.5, 1.0, 1.0, 1.5, 1.0, 0.05, c1, 4.0, 1e-3, np.inf,
        np.empty(0), True, 10 ** 6)
    assert not budget.any()
    se = eta.std() / np.sqrt(n)
    assert abs(eta.mean() - 1.1283791670955126) <= 3.0 * se


@pytest.mark.skipif(not _kernels.HAVE_COMPILED, reason="compiled core not built")
class TestBackendAgreement:
    """Same streams, same paths: the backends agree to FP rounding."""

    def test_passage_paths_agree(self):
        args = (21, 0, 1500, 0.5, 1.0, 0.0, 0.0, 1000.0, 0.005, 5e-5, 10 ** 6)
        core = _kernels.get_backend_module("cython")
        ra = fallback.stable_passage_batch(*args)
        rb = core.stable_passage_batch(*args)
        same = ra[3] == rb[3]
        assert same.mean() > 0.999  # rare boundary flips from 1-ulp diffs
        for a, b in zip(ra[:3], rb[:3]):
            np.testing.assert_allclose(a[same], b[same], rtol=1e-12)

    def test_eta_paths_agree(self):
        c1 = residual_coefficient(0.5, 1.0)
        args = (23, 0, 800, 0.5, 1.0, 1.0, 1.0, 1.0, 0.05, c1, 4.0, 1e-3,
                np.inf, np.array([0.1, 0.05]), True, 10 ** 6)
        core = _kernels.get_backend_module("cython")
        ea = fallback.stable_eta_batch(*args)
        eb = core.stable_eta_batch(*args)
        same = ea[2] == eb[2]
        assert same.mean() > 0.999
        np.testing.assert_allclose(ea[0][same], eb[0][same], rtol=1e-12)
        match = (ea[4][same] == eb[4][same]).mean()
        assert match > 0.9  # lookback segment choice can flip at FP boundaries

    def test_cpp_eta_agree(self):
        from nlcsbp.mechanisms import (LogTailSubordinator, Model,
                                       RateFunction, phi_table)

        mech = LogTailSubordinator(2.0)
        model = Model(mech, RateFunction(1.0, 1.0), 1.0)
        pt = phi_table(model)
        rate, kind, params, lu, lz = mech._jump_spec()
        c1 = residual_coefficient(0.0, 1.0)
        args = (29, 0, 400, rate, kind, params, lu, lz, 1.0, 1.0, 1.0,
                pt.logx, pt.logphi, c1, 4.0, 1e-3, np.inf, np.array([0.05]),
                True, 10 ** 6)
        core = _kernels.get_backend_module("cython")
        ea = fallback.cpp_eta_batch(*args)
        eb = core.cpp_eta_batch(*args)
        same = ea[2] == eb[2]
        assert same.mean() > 0.99
        np.testing.assert_allclose(ea[0][same], eb[0][same], rtol=1e-10)

    def test_smd_exit_agree(self):
        args = (31, 0, 2000, 0.5, 1.0, 1.0, 2.0, 1.0, 41.0, 0.1, 1e-3, 10 ** 6)
        core = _kernels.get_backend_module("cython")
        ca, ta, sa = fallback.smd_exit_batch(*args)
        cb, tb, sb = core.smd_exit_batch(*args)
        assert (ca == cb).mean() > 0.999


def test_benchmark_smoke(capsys):
    from nlcsbp import benchmark

    benchmark.main()
    out = capsys.readouterr().out
    assert "philox" in out and "passage" in out
