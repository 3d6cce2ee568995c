"""Closed-form filtering, smoothing and lookahead errors for the OU process.

Notation: ``gamma`` (or ``snr``) is the channel SNR, ``tau = sqrt(alpha^2 + gamma beta^2)``
is the rate at which the Kalman-Bucy error settles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numerics import bisect, clamped_exp
from .errors import DegenerateCase, InvalidParameter, NoSolution, NumericalFailure
from .model import LmmseCurve, OuParams


def tau_rate(params: OuParams, gamma: float) -> float:
    return math.sqrt(params.alpha ** 2 + gamma * params.beta ** 2)


def _check_snr(snr: float, name: str = "snr") -> float:
    snr = float(snr)
    if not snr > 0 or not math.isfinite(snr):
        raise InvalidParameter(name, f"must be positive and finite, got {snr}")
    return snr


@dataclass(frozen=True)
class RiccatiSolution:
    e0: float
    gamma: float
    tau_rate: float
    rho: float
    lambda_d: float
    t: float
    value: float


def riccati_solution(params: OuParams, gamma: float, e0: float, t: float) -> RiccatiSolution:
    """Solve de/dt = -2 alpha e - gamma e^2 + beta^2 from e(0) = e0.

    ``rho`` carries its sign: it is negative when e0 lies below the steady
    state, which turns Lambda into the form used for a known initial state.
    ``rho = inf`` when e0 already equals the steady state.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise InvalidParameter("gamma", "must be non-negative")
    if e0 < 0:
        raise InvalidParameter("e0", "must be non-negative")
    if t < 0:
        raise InvalidParameter("t", "must be non-negative")
    a, b2 = params.alpha, params.beta ** 2
    tau = tau_rate(params, gamma)
    x0 = gamma * e0 + a
    q = (x0 - tau) / (x0 + tau)  # 1/rho, always in (-1, 1)
    rho = math.inf if q == 0.0 else 1.0 / q
    if math.isinf(t):
        value = b2 / (tau + a)
        lam = 1.0
    else:
        # tanh form stays finite as gamma -> 0 where (Lambda tau - alpha)/gamma cancels
        th = math.tanh(tau * t)
        value = (tau * e0 + (b2 - a * e0) * th) / (tau + x0 * th)
        decay = q * float(clamped_exp(-2.0 * tau * t))
        lam = (1.0 + decay) / (1.0 - decay)
    return RiccatiSolution(e0=float(e0), gamma=gamma, tau_rate=tau, rho=rho,
                           lambda_d=lam, t=float(t), value=value)


def riccati_error(params: OuParams, gamma: float, e0: float, t: float) -> float:
    """Kalman-Bucy error variance after observing for time t, starting from e0."""
    return riccati_solution(params, gamma, e0, t).value


def ed_ou(params: OuParams, gamma: float, d: float) -> float:
    """Var(X_0 | Y_0^d): one-sided window of length d starting from the prior."""
    return riccati_error(params, gamma, params.var0, d)


def cmmse_ou(params: OuParams, snr: float) -> float:
    snr = _check_snr(snr)
    # beta^2/(tau+alpha) == (tau-alpha)/snr without the cancellation at small snr
    return params.beta ** 2 / (tau_rate(params, snr) + params.alpha)


def mmse_ou(params: OuParams, snr: float) -> float:
    snr = _check_snr(snr)
    return params.beta ** 2 / (2.0 * tau_rate(params, snr))


def fuse(e_past, e_future, var0):
    """Var(X_0 | past, future) for a Gauss-Markov X_0 separating the two records."""
    return 1.0 / (1.0 / e_past + 1.0 / e_future - 1.0 / var0)


def finite_window_error(params: OuParams, l: float, d: float, gamma: float) -> float:
    """Var(X_0 | Y_{-l}^{d}); l and d may be inf."""
    if l < 0 or d < 0:
        raise InvalidParameter("l/d", "window lengths must be non-negative")
    gamma = _check_snr(gamma, "gamma")
    r0 = params.var0
    el = ed_ou(params, gamma, l)
    ed = ed_ou(params, gamma, d)
    return el * ed * r0 / (r0 * (el + ed) - el * ed)


def lmmse_ou(params: OuParams, snr: float, d: float) -> float:
    """MMSE of X_0 from Y_{-inf}^{d}; d may be +-inf."""
    snr = _check_snr(snr)
    d = float(d)
    if d == math.inf:
        return mmse_ou(params, snr)
    if d == -math.inf:
        return params.var0
    c = cmmse_ou(params, snr)
    if d >= 0:
        decay = float(clamped_exp(-2.0 * d * tau_rate(params, snr)))
        m = mmse_ou(params, snr)
        return m + decay * (c - m)
    decay = float(clamped_exp(-2.0 * params.alpha * abs(d)))
    return decay * c + params.var0 * (1.0 - decay)


def lmmse_curve(params: OuParams, snr: float, d_grid) -> LmmseCurve:
    d_grid = np.asarray(d_grid, dtype=float)
    values = [lmmse_ou(params, snr, d) for d in d_grid]
    return LmmseCurve(d_grid, values, cmmse_ou(params, snr), mmse_ou(params, snr), params.var0)


def pd_ratio(params: OuParams, snr: float, d: float) -> float:
    """(lmmse(d) - mmse) / (cmmse - mmse) for d >= 0."""
    if d < 0:
        raise InvalidParameter("d", "p_d is defined for non-negative lookahead")
    c, m = cmmse_ou(params, snr), mmse_ou(params, snr)
    if c <= m:
        raise DegenerateCase("filtering and smoothing errors coincide")
    if d == math.inf:
        return 0.0
    return (lmmse_ou(params, snr, d) - m) / (c - m)


@dataclass(frozen=True)
class TradeoffResult:
    gamma_star: float
    gamma_inf: float
    d_star: float


def gamma_inf(params: OuParams, snr: float) -> float:
    """SNR at which the smoothing error equals cmmse(snr)."""
    c = cmmse_ou(params, snr)
    b2 = params.beta ** 2
    return (b2 * b2 / (4.0 * c * c) - params.alpha ** 2) / b2


def d_star(params: OuParams, snr: float) -> float:
    """Negative lookahead where the noiseless prediction error reaches cmmse(snr)."""
    ratio = cmmse_ou(params, snr) / params.var0
    return math.log1p(-ratio) / (2.0 * params.alpha)


def gamma_star(params: OuParams, snr: float, d: float) -> float:
    """SNR giving lmmse(d, .) equal to cmmse(snr)."""
    snr = _check_snr(snr)
    if d == 0:
        return snr
    target = cmmse_ou(params, snr)
    if d == math.inf:
        return gamma_inf(params, snr)
    ds = d_star(params, snr)
    if d <= ds:
        raise NoSolution(f"no SNR reaches cmmse({snr}) at lookahead {d} <= d* = {ds:.6g}")

    def residual(g):
        return lmmse_ou(params, g, d) - target

    if d > 0:
        return bisect(residual, gamma_inf(params, snr), snr)
    hi = 2.0 * snr
    for _ in range(2000):
        if residual(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericalFailure("could not bracket gamma* for negative lookahead")
    return bisect(residual, snr, hi)


def tradeoff(params: OuParams, snr: float, d: float) -> TradeoffResult:
    return TradeoffResult(gamma_star(params, snr, d), gamma_inf(params, snr), d_star(params, snr))


def scaled_process_lmmse(params: OuParams, a: float, snr: float, d: float, *,
                         check: bool = True) -> float:
    """lmmse of X_{a t}, computed as the OU law (a alpha, sqrt(a) beta).

    With ``check`` the result is compared against lmmse_X(a d, snr / a).
    """
    a = _check_snr(a, "a")
    scaled = OuParams(a * params.alpha, math.sqrt(a) * params.beta)
    direct = lmmse_ou(scaled, snr, d)
    if check:
        other = lmmse_ou(params, snr / a, a * d)
        if abs(direct - other) > 1e-10 * max(1.0, abs(other)):
            raise NumericalFailure(f"time-scaling identity violated: {direct!r} vs {other!r}")
    return direct
