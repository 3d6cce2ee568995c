"""Brute-force oracle: exact OU discretization, discrete Kalman fixed-lag smoothing, MC harness.

The sampled channel at step ``dt`` is

    x[k+1] = A x[k] + w[k],     w ~ N(0, Q),  A = exp(-alpha dt)
    y[k]   = sqrt(snr) dt x[k] + v[k],  v ~ N(0, dt)

which is the exact AR(1) law of the OU process and the usual increment form
of the channel. Errors of the discrete estimators differ from the
continuous-time values by O(dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, signal

from . import _rng
from .errors import InvalidParameter, McBudgetExceeded, NonConvergence
from .model import OuParams


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    ``paths`` is the number of independent replicas. For the long-path OU
    estimators each replica runs for ``path_time`` time units after burn-in.
    With ``target_stderr`` set, replicas are added in blocks until the
    standard error meets the target or ``sample_cap`` replicas were used.
    """

    seed: int = 0
    paths: int = 10000
    step: float = 1e-3
    target_stderr: Optional[float] = None
    sample_cap: int = 1_000_000
    path_time: float = 200.0

    def __post_init__(self):
        if int(self.paths) < 100:
            raise InvalidParameter("paths", "need at least 100 replicas")
        if not self.step > 0:
            raise InvalidParameter("step", "must be positive")
        if self.target_stderr is not None and not self.target_stderr > 0:
            raise InvalidParameter("target_stderr", "must be positive")
        if self.sample_cap < self.paths:
            raise InvalidParameter("sample_cap", "must be at least paths")
        if not self.path_time > 0:
            raise InvalidParameter("path_time", "must be positive")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int

    def __iter__(self):
        # unpacks as (value, stderr)
        yield self.value
        yield self.stderr


def summarize(per_replica) -> McEstimate:
    x = np.asarray(per_replica, dtype=float)
    n = x.size
    return McEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n)


def adaptive(draw, mc: McConfig, tag: str, block: int):
    """Run ``draw(rng, n) -> (n, ...) array`` block by block under the MC budget.

    Returns the stacked per-replica array.
    """
    sizes = _rng.block_sizes(mc.paths, block)
    parts = _rng.run_blocks(draw, mc.seed, tag, sizes)
    used = sum(sizes)
    while mc.target_stderr is not None:
        arr = np.concatenate(parts, axis=0)
        se = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])
        worst = float(np.max(se))
        if worst <= mc.target_stderr:
            return arr
        if used >= mc.sample_cap:
            raise McBudgetExceeded(worst, mc.target_stderr, used)
        more = min(used, mc.sample_cap - used)
        extra = _rng.block_sizes(more, block)
        parts += _rng.run_blocks(draw, mc.seed, tag, extra, first_block=len(parts))
        used += more
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class DiscreteKalmanModel:
    ar_coeff: float
    proc_noise: float
    obs_gain: float
    obs_noise: float

    @classmethod
    def from_ou(cls, params: OuParams, snr: float, step: float) -> "DiscreteKalmanModel":
        a = math.exp(-params.alpha * step)
        q = params.beta ** 2 * -math.expm1(-2.0 * params.alpha * step) / (2.0 * params.alpha)
        return cls(a, q, math.sqrt(snr) * step, step)

    @property
    def stationary_variance(self) -> float:
        return self.proc_noise / (1.0 - self.ar_coeff ** 2)

    def steady_state(self) -> "SteadyGains":
        A, Q, H, R = self.ar_coeff, self.proc_noise, self.obs_gain, self.obs_noise
        if H == 0.0:
            P = self.stationary_variance
        else:
            P = float(linalg.solve_discrete_are([[A]], [[H]], [[Q]], [[R]])[0, 0])
        S = H * H * P + R
        K = P * H / S
        Pf = P * (1.0 - K * H)
        F = A * (1.0 - K * H)
        return SteadyGains(P, Pf, K, S, F, H * A * Pf / S)


@dataclass(frozen=True)
class SteadyGains:
    """Steady-state predicted/filtered variances, gain, innovation variance,
    closed-loop coefficient F and the first fixed-lag coefficient c1."""

    p_pred: float
    p_filt: float
    gain: float
    innov_var: float
    closed_loop: float
    c1: float


def lag_steps(d: float, step: float, gains: SteadyGains, tol: float = 1e-12) -> int:
    """Lag in samples; d = inf maps to the lag where F^(2L) drops below tol."""
    if d == math.inf:
        F = abs(gains.closed_loop)
        return max(1, math.ceil(math.log(tol) / (2.0 * math.log(F)))) if F > 0 else 1
    if d < 0:
        raise InvalidParameter("d", "fixed-lag smoothing needs d >= 0")
    return int(round(d / step))


def fixed_lag_variance(model: DiscreteKalmanModel, lag: int) -> float:
    """Error variance of the matched steady-state fixed-lag smoother."""
    g = model.steady_state()
    if lag == 0:
        return g.p_filt
    F = g.closed_loop
    # sum_{j=1}^{L} (H A Pf F^(j-1))^2 / S
    head = (model.obs_gain * model.ar_coeff * g.p_filt) ** 2 / g.innov_var
    geom = lag if F * F == 1.0 else -math.expm1(lag * math.log(F * F)) / (1.0 - F * F)
    return g.p_filt - head * geom


def simulate_ou(params: OuParams, snr: float, n_steps: int, step: float,
                rng: np.random.Generator, n_paths: int = 1):
    """Stationary OU samples and channel increments, shape (n_paths, n_steps)."""
    m = DiscreteKalmanModel.from_ou(params, snr, step)
    e = rng.standard_normal((n_paths, n_steps))
    e[:, 0] *= math.sqrt(params.var0)
    e[:, 1:] *= math.sqrt(m.proc_noise)
    x = signal.lfilter([1.0], [1.0, -m.ar_coeff], e, axis=1)
    y = m.obs_gain * x + math.sqrt(m.obs_noise) * rng.standard_normal((n_paths, n_steps))
    return x, y


def kalman_fixed_lag(model: DiscreteKalmanModel, y: np.ndarray, lags):
    """Steady-state fixed-lag estimates x_hat[k | k + L] for each lag L.

    ``model`` is the filter's (possibly mismatched) model. Returns a dict
    lag -> array of shape (n_paths, n_steps - L); entry k estimates x[k].
    """
    g = model.steady_state()
    A, H, F = model.ar_coeff, model.obs_gain, g.closed_loop
    y = np.atleast_2d(y)
    pred = signal.lfilter([0.0, A * g.gain], [1.0, -F], y, axis=1)
    innov = y - H * pred
    filt = pred + g.gain * innov
    anti = signal.lfilter([0.0, g.c1], [1.0, -F], innov[:, ::-1], axis=1)[:, ::-1]
    n = y.shape[1]
    out = {}
    for L in lags:
        L = int(L)
        if L == 0:
            out[L] = filt
            continue
        est = filt[:, : n - L] + anti[:, : n - L] - F ** L * anti[:, L:]
        out[L] = est
    return out


def burn_in_steps(gains: SteadyGains, tol: float = 1e-12) -> int:
    F = abs(gains.closed_loop)
    if F == 0:
        return 1
    return math.ceil(math.log(tol) / (2.0 * math.log(F)))


@dataclass(frozen=True)
class LagReport:
    d: np.ndarray
    estimates: list
    steps_to_steady_state: int
    lag_samples: list


def ou_lmmse_mc(params: OuParams, snr: float, d_values, mc: McConfig, *,
                assumed: Optional[OuParams] = None, tag: str = "ou-lag") -> LagReport:
    """MC fixed-lag error of the discrete Kalman smoother for every d in d_values.

    With ``assumed`` the smoother uses that OU model while data come from
    ``params`` (mismatched filtering). All lags share the same paths.
    """
    if mc.step > 1e-2:
        raise InvalidParameter("step", "OU oracles need step <= 1e-2")
    d_values = np.atleast_1d(np.asarray(d_values, dtype=float))
    filt_model = DiscreteKalmanModel.from_ou(assumed or params, snr, mc.step)
    gains = filt_model.steady_state()
    lags = [lag_steps(d, mc.step, gains) for d in d_values]
    burn = burn_in_steps(gains)
    body = int(math.ceil(mc.path_time / mc.step))
    n_steps = burn + body + max(lags)
    if body < 10:
        raise NonConvergence("path too short to reach steady state and average")
    block = max(1, min(_rng.BLOCK, 4_000_000 // n_steps))

    def draw(rng, n):
        x, y = simulate_ou(params, snr, n_steps, mc.step, rng, n)
        est = kalman_fixed_lag(filt_model, y, set(lags))
        out = np.empty((n, len(lags)))
        for i, L in enumerate(lags):
            err = x[:, burn: burn + body] - est[L][:, burn: burn + body]
            out[:, i] = np.mean(err * err, axis=1)
        return out

    per = adaptive(draw, mc, f"{tag}:{params.alpha}:{snr}", block)
    ests = [summarize(per[:, i]) for i in range(len(lags))]
    return LagReport(d_values, ests, burn, lags)


def simulate_jump_channel(params: OuParams, snr_past: float, gamma_future: float,
                          d: float, l: float, mc: McConfig, *, tag: str = "jump"
                          ) -> McEstimate:
    """MC estimate of Var(X_d | Y up to l + d) with SNR snr_past up to 0, gamma_future after.

    The filter starts at t = 0 in its steady state for the past SNR (drawn
    exactly), runs a time-varying Kalman filter over (0, l + d] and an RTS
    pass back to d.
    """
    if d < 0 or l < 0 or not math.isfinite(d + l):
        raise InvalidParameter("d/l", "need finite non-negative d and l")
    past = DiscreteKalmanModel.from_ou(params, snr_past, mc.step).steady_state()
    fut = DiscreteKalmanModel.from_ou(params, gamma_future, mc.step)
    A, Q, H, R = fut.ar_coeff, fut.proc_noise, fut.obs_gain, fut.obs_noise
    n = int(round((d + l) / mc.step))
    m = int(round(d / mc.step))
    var0 = params.var0

    # deterministic covariance recursion, shared by every path
    p_filt = np.empty(n + 1)
    p_pred = np.empty(n + 1)
    gain = np.zeros(n + 1)
    p_filt[0] = past.p_filt
    p_pred[0] = np.nan
    for k in range(1, n + 1):
        p_pred[k] = A * A * p_filt[k - 1] + Q
        gain[k] = p_pred[k] * H / (H * H * p_pred[k] + R)
        p_filt[k] = p_pred[k] * (1.0 - gain[k] * H)

    def draw(rng, npath):
        xhat = math.sqrt(max(var0 - past.p_filt, 0.0)) * rng.standard_normal(npath)
        x = xhat + math.sqrt(past.p_filt) * rng.standard_normal(npath)
        filt = np.empty((n + 1, npath))
        filt[0] = xhat
        x_target = x.copy() if m == 0 else None
        for k in range(1, n + 1):
            x = A * x + math.sqrt(Q) * rng.standard_normal(npath)
            y = H * x + math.sqrt(R) * rng.standard_normal(npath)
            pred = A * filt[k - 1]
            filt[k] = pred + gain[k] * (y - H * pred)
            if k == m:
                x_target = x.copy()
        smooth = filt[n]
        for k in range(n - 1, m - 1, -1):
            J = p_filt[k] * A / p_pred[k + 1]
            smooth = filt[k] + J * (smooth - A * filt[k])
        return (x_target - smooth) ** 2

    per = adaptive(draw, mc, f"{tag}:{params.alpha}:{snr_past}:{gamma_future}:{d}:{l}",
                   _rng.BLOCK * 4)
    return summarize(per)


def jump_smoothed_variance(params: OuParams, snr_past: float, gamma_future: float,
                           d: float, l: float, step: float) -> float:
    """Deterministic discrete counterpart of :func:`simulate_jump_channel`."""
    past = DiscreteKalmanModel.from_ou(params, snr_past, step).steady_state()
    fut = DiscreteKalmanModel.from_ou(params, gamma_future, step)
    A, Q, H, R = fut.ar_coeff, fut.proc_noise, fut.obs_gain, fut.obs_noise
    n = int(round((d + l) / step))
    m = int(round(d / step))
    pf, pp = [past.p_filt], [np.nan]
    for _ in range(n):
        p = A * A * pf[-1] + Q
        pp.append(p)
        pf.append(p - p * p * H * H / (H * H * p + R))
    ps = pf[n]
    for k in range(n - 1, m - 1, -1):
        J = pf[k] * A / pp[k + 1]
        ps = pf[k] + J * J * (ps - pp[k + 1])
    return ps
