import math

import numpy as np
import pytest

from lagmmse import _rng
from lagmmse.errors import InvalidParameter, McBudgetExceeded
from lagmmse.model import OuParams
from lagmmse.ou import cmmse_ou, lmmse_ou, mmse_ou
from lagmmse.sim import (DiscreteKalmanModel, McConfig, McEstimate, adaptive, burn_in_steps,
                         fixed_lag_variance, jump_smoothed_variance, kalman_fixed_lag, lag_steps,
                         ou_lmmse_mc, simulate_jump_channel, simulate_ou, summarize)

P = OuParams(0.5)
QUICK = McConfig(seed=2, paths=128, step=1e-2, path_time=50.0)


def rts_fixed_lag(model: DiscreteKalmanModel, lag: int, past: int = 4000):
    """Time-varying filter from the prior plus an RTS pass: variance of x[past]."""
    A, Q, H, R = model.ar_coeff, model.proc_noise, model.obs_gain, model.obs_noise
    pf, pp = [], []
    Pv = model.stationary_variance
    for k in range(past + lag + 1):
        if k:
            Pv = A * A * Pv + Q
        pp.append(Pv)
        Pv = Pv - Pv * Pv * H * H / (H * H * Pv + R)
        pf.append(Pv)
    ps = pf[-1]
    for k in range(past + lag - 1, past - 1, -1):
        J = pf[k] * A / pp[k + 1]
        ps = pf[k] + J * J * (ps - pp[k + 1])
    return ps


class TestDiscreteModel:
    def test_exact_ar1(self):
        m = DiscreteKalmanModel.from_ou(P, 1.0, 0.1)
        assert m.ar_coeff == pytest.approx(math.exp(-0.05))
        assert m.stationary_variance == pytest.approx(P.var0, rel=1e-14)

    @pytest.mark.parametrize("lag", [0, 1, 50, 300])
    def test_fixed_lag_variance_matches_rts(self, lag):
        m = DiscreteKalmanModel.from_ou(P, 1.0, 1e-2)
        assert fixed_lag_variance(m, lag) == pytest.approx(rts_fixed_lag(m, lag), rel=1e-10)

    def test_first_order_convergence(self):
        bias = []
        for step in (2e-3, 1e-3):
            m = DiscreteKalmanModel.from_ou(P, 1.0, step)
            bias.append(m.steady_state().p_filt - cmmse_ou(P, 1.0))
        assert bias[0] / bias[1] == pytest.approx(2.0, rel=1e-2)
        assert abs(bias[1]) < 5e-4

    @pytest.mark.parametrize("d", [0.5, math.inf])
    def test_fixed_lag_converges(self, d):
        m = DiscreteKalmanModel.from_ou(P, 1.0, 1e-3)
        lag = lag_steps(d, 1e-3, m.steady_state())
        assert fixed_lag_variance(m, lag) == pytest.approx(lmmse_ou(P, 1.0, d), abs=5e-4)

    def test_lag_steps(self):
        g = DiscreteKalmanModel.from_ou(P, 1.0, 1e-2).steady_state()
        assert lag_steps(0.5, 1e-2, g) == 50
        assert lag_steps(math.inf, 1e-2, g) == burn_in_steps(g)
        with pytest.raises(InvalidParameter):
            lag_steps(-0.5, 1e-2, g)


class TestSimulation:
    def test_ou_paths_stationary(self):
        x, y = simulate_ou(P, 1.0, 2000, 1e-2, np.random.default_rng(0), n_paths=2000)
        assert x[:, 0].var() == pytest.approx(P.var0, rel=0.1)
        assert x[:, -1].var() == pytest.approx(P.var0, rel=0.1)
        lag1 = np.mean(x[:, 1000] * x[:, 1100])
        assert lag1 == pytest.approx(P.var0 * math.exp(-0.5), abs=0.08)

    def test_fixed_lag_estimates(self):
        m = DiscreteKalmanModel.from_ou(P, 1.0, 1e-2)
        x, y = simulate_ou(P, 1.0, 20000, 1e-2, np.random.default_rng(1), n_paths=20)
        est = kalman_fixed_lag(m, y, [0, 50])
        burn = 2000
        for L in (0, 50):
            err = x[:, burn:burn + 15000] - est[L][:, burn:burn + 15000]
            assert np.mean(err ** 2) == pytest.approx(fixed_lag_variance(m, L), rel=0.05)

    def test_mc_report(self):
        rep = ou_lmmse_mc(P, 1.0, [0.0, 1.0, math.inf], QUICK)
        exact = [fixed_lag_variance(DiscreteKalmanModel.from_ou(P, 1.0, 1e-2), L)
                 for L in rep.lag_samples]
        for est, e in zip(rep.estimates, exact):
            assert abs(est.value - e) <= 4 * est.stderr
        assert rep.estimates[0].value > rep.estimates[1].value > rep.estimates[2].value

    def test_matched_assumption_changes_nothing(self):
        a = ou_lmmse_mc(P, 1.0, [0.5], QUICK).estimates[0]
        b = ou_lmmse_mc(P, 1.0, [0.5], QUICK, assumed=OuParams(0.5)).estimates[0]
        assert a == b

    def test_mismatch_costs(self):
        good = ou_lmmse_mc(P, 1.0, [0.5], QUICK, tag="m").estimates[0]
        bad = ou_lmmse_mc(P, 1.0, [0.5], QUICK, assumed=OuParams(5.0), tag="m").estimates[0]
        assert bad.value > good.value

    def test_rejects_coarse_step(self):
        with pytest.raises(InvalidParameter):
            ou_lmmse_mc(P, 1.0, [0.0], McConfig(paths=100, step=0.1))

    def test_jump_channel(self):
        mc = McConfig(seed=4, paths=1024, step=1e-2)
        est = simulate_jump_channel(P, 1.0, 0.5, 0.3, 0.7, mc)
        exact = jump_smoothed_variance(P, 1.0, 0.5, 0.3, 0.7, mc.step)
        assert abs(est.value - exact) <= 4 * est.stderr


class TestMcHarness:
    def test_config_validation(self):
        for kw in (dict(paths=10), dict(step=0.0), dict(target_stderr=-1.0),
                   dict(paths=1000, sample_cap=500), dict(path_time=0.0)):
            with pytest.raises(InvalidParameter):
                McConfig(**kw)

    def test_estimate_unpacks(self):
        value, stderr = summarize([1.0, 2.0, 3.0])
        assert value == 2.0 and stderr == pytest.approx(1.0 / math.sqrt(3))
        assert isinstance(summarize([1.0, 2.0]), McEstimate)

    def test_adaptive_meets_target(self):
        def draw(rng, n):
            return rng.standard_normal((n, 1))

        out = adaptive(draw, McConfig(paths=100, target_stderr=0.02), "t", 64)
        assert out.std(ddof=1) / math.sqrt(out.shape[0]) <= 0.02

    def test_budget_exceeded(self):
        def draw(rng, n):
            return rng.standard_normal((n, 1))

        with pytest.raises(McBudgetExceeded):
            adaptive(draw, McConfig(paths=100, target_stderr=1e-4, sample_cap=400), "t", 64)

    def test_streams_are_counter_based(self):
        a = _rng.stream(1, "x", 3).standard_normal(4)
        b = _rng.stream(1, "x", 3).standard_normal(4)
        c = _rng.stream(1, "x", 4).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, c)

    def test_thread_count_does_not_change_results(self, monkeypatch):
        monkeypatch.setenv("LAGMMSE_THREADS", "1")
        serial = ou_lmmse_mc(P, 1.0, [0.5], QUICK).estimates[0]
        monkeypatch.setenv("LAGMMSE_THREADS", "4")
        threaded = ou_lmmse_mc(P, 1.0, [0.5], QUICK).estimates[0]
        assert serial == threaded

    def test_block_sizes(self):
        assert _rng.block_sizes(600, 256) == [256, 256, 88]
        assert _rng.block_sizes(512, 256) == [256, 256]
