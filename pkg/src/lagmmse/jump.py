"""Observation channel whose SNR jumps from ``snr`` to ``gamma`` at t = 0.

f(snr, gamma, d, l) = Var(X_d | Y up to l + d). For OU inputs the past
record reaches time 0 with the stationary filtering error cmmse(snr); the
forward filter carries it to d, an independent backward filter covers
(d, d + l], and the two Gaussian-Markov estimates fuse in information form.
Averaging f over a rectangle of (gamma, l) recovers cmmse(snr).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numerics import gauss_legendre, tensor_gauss_legendre
from .errors import InvalidParameter
from .model import Dtmc, MixingMeasure, OuParams
from .ou import cmmse_ou, riccati_error
from .sim import McConfig, McEstimate, simulate_jump_channel


@dataclass(frozen=True)
class JumpChannelSpec:
    snr_past: float
    gamma_future: float
    horizon_T: float = 1.0

    def __post_init__(self):
        if not self.snr_past > 0:
            raise InvalidParameter("snr_past", "must be positive")
        if not self.gamma_future >= 0:
            raise InvalidParameter("gamma_future", "must be non-negative")
        if not self.horizon_T > 0:
            raise InvalidParameter("horizon_T", "must be positive")


@dataclass(frozen=True)
class JumpError:
    d: float
    l: float
    value: float


def _riccati_vec(alpha, b2, gamma, e0, t):
    # vectorized tanh form of the Riccati solution (finite t)
    tau = np.sqrt(alpha * alpha + gamma * b2)
    th = np.tanh(tau * t)
    return (tau * e0 + (b2 - alpha * e0) * th) / (tau + (gamma * e0 + alpha) * th)


def _fuse(e_fwd, e_bwd, var0):
    return 1.0 / (1.0 / e_fwd + 1.0 / e_bwd - 1.0 / var0)


def jump_f_ou(params: OuParams, spec: JumpChannelSpec, d: float, l: float) -> JumpError:
    if d < 0 or l < 0 or math.isnan(d) or math.isnan(l):
        raise InvalidParameter("d/l", "jump-channel windows need d, l >= 0")
    g = spec.gamma_future
    e_fwd = riccati_error(params, g, cmmse_ou(params, spec.snr_past), d)
    e_bwd = riccati_error(params, g, params.var0, l)
    return JumpError(float(d), float(l), _fuse(e_fwd, e_bwd, params.var0))


def jump_f_ou_grid(params: OuParams, snr: float, gamma, d, l):
    """Vectorized f(snr, gamma, d, l) over broadcast arrays (finite d, l)."""
    b2, a, r0 = params.beta ** 2, params.alpha, params.var0
    gamma, d, l = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (gamma, d, l)))
    e_fwd = _riccati_vec(a, b2, gamma, cmmse_ou(params, snr), d)
    e_bwd = _riccati_vec(a, b2, gamma, r0, l)
    return _fuse(e_fwd, e_bwd, r0)


@dataclass(frozen=True)
class Theorem1Result:
    lhs: float
    rhs: float
    abs_err: float
    nodes: int


def theorem1_check(params: OuParams, snr: float, T: float, *, n_start: int = 16,
                   tol: float = 1e-6, n_max: int = 256) -> Theorem1Result:
    """cmmse(snr) against (1/(T snr)) int_0^snr int_0^T f(snr, g, T - l, l) dl dg."""
    if not snr > 0 or not T > 0:
        raise InvalidParameter("snr/T", "must be positive")

    def integrand(g, l):
        return jump_f_ou_grid(params, snr, g, T - l, l)

    val, n = tensor_gauss_legendre(integrand, ((0.0, snr), (0.0, T)), n_start=n_start,
                                   tol=tol * snr * T, n_max=n_max)
    rhs = val / (snr * T)
    lhs = cmmse_ou(params, snr)
    return Theorem1Result(lhs, rhs, abs(lhs - rhs), n)


def jump_f_mc(spec, jump: JumpChannelSpec, d: float, l: float, mc: McConfig, *,
              hist_len: int = 50) -> McEstimate:
    """Simulated f for OU, OU-mixture or shifted-chain inputs."""
    if isinstance(spec, OuParams):
        return simulate_jump_channel(spec, jump.snr_past, jump.gamma_future, d, l, mc)
    if isinstance(spec, MixingMeasure):
        parts = [simulate_jump_channel(OuParams(float(a)), jump.snr_past, jump.gamma_future,
                                       d, l, mc) for a in spec.alphas]
        w = spec.weights
        return McEstimate(float(sum(wi * p.value for wi, p in zip(w, parts))),
                          float(math.sqrt(sum((wi * p.stderr) ** 2 for wi, p in zip(w, parts)))),
                          sum(p.samples for p in parts))
    if isinstance(spec, Dtmc):
        from .markov import jump_f_markov

        return jump_f_markov(spec, jump.snr_past, jump.gamma_future, d, l,
                             hist_len=hist_len, mc=mc)
    raise InvalidParameter("spec", f"no simulator for {type(spec).__name__}")


def theorem1_mc(spec, snr: float, T: float, mc: McConfig, *, nodes: int = 4,
                hist_len: int = 50) -> McEstimate:
    """MC version of the rectangle average, Gauss-Legendre nodes in (gamma, l)."""
    gs, wg = gauss_legendre(nodes, 0.0, snr)
    ls, wl = gauss_legendre(nodes, 0.0, T)
    total, var, n = 0.0, 0.0, 0
    for g, a in zip(gs, wg):
        for l, b in zip(ls, wl):
            est = jump_f_mc(spec, JumpChannelSpec(snr, float(g), T), float(T - l), float(l), mc,
                            hist_len=hist_len)
            w = a * b / (snr * T)
            total += w * est.value
            var += (w * est.stderr) ** 2
            n += est.samples
    return McEstimate(total, math.sqrt(var), n)
