"""Information utility of lookahead for Gaussian inputs.

U(t) is the extra mutual information about X_0 carried by the next t time
units of channel output, given the whole past. For a Gaussian input
lmmse(t) = cmmse * exp(-2 U(t)); for OU every piece is in closed form.
All quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from ._numerics import clamped_exp
from .errors import InvalidParameter, QuadratureFailure
from .model import LmmseCurve, MixingMeasure, OuParams
from .ou import cmmse_ou, mmse_ou, tau_rate


@dataclass(frozen=True)
class ConditionedRiccati:
    """Error of X_t given Y_0^t and X_0 (initial error zero) for an OU law."""

    params: OuParams
    gamma: float

    @property
    def rho_hat(self) -> float:
        tau = tau_rate(self.params, self.gamma)
        return (tau + self.params.alpha) / (tau - self.params.alpha)

    def __call__(self, t):
        return e_hat_ou(self.params, self.gamma, t)


def e_hat_ou(params: OuParams, gamma: float, t):
    """beta^2 (1 - E) / ((tau + alpha) + (tau - alpha) E) with E = exp(-2 tau t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParameter("t", "must be non-negative")
    tau, a = tau_rate(params, gamma), params.alpha
    E = clamped_exp(-2.0 * tau * t)
    out = params.beta ** 2 * (1.0 - E) / ((tau + a) + (tau - a) * E)
    return float(out) if out.ndim == 0 else out


def utility_ou(params: OuParams, snr: float, tau):
    """Closed-form U(tau) = -1/2 log(E + (1 - E)(t + alpha)/(2 t)), t the Riccati rate."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise InvalidParameter("tau", "must be non-negative")
    rate, a = tau_rate(params, snr), params.alpha
    one_minus_E = -np.expm1(-2.0 * rate * np.minimum(tau, 1e300))
    out = -0.5 * np.log1p(-one_minus_E * (rate - a) / (2.0 * rate))
    return float(out) if out.ndim == 0 else out


def utility_integral(params: OuParams, snr: float, tau: float, tol: float = 1e-12) -> float:
    """U(tau) = (snr/2) (tau cmmse - int_0^tau e_hat), integral by adaptive quadrature."""
    if tau < 0:
        raise InvalidParameter("tau", "must be non-negative")
    if tau == 0:
        return 0.0
    val, err = integrate.quad(lambda s: e_hat_ou(params, snr, s), 0.0, tau,
                              epsabs=tol, epsrel=1e-13, limit=200)
    if err > 1e3 * tol:
        raise QuadratureFailure(f"utility integral error estimate {err:.2g}")
    return 0.5 * snr * (tau * cmmse_ou(params, snr) - val)


def utility_prime(params: OuParams, snr: float, tau):
    return 0.5 * snr * (cmmse_ou(params, snr) - e_hat_ou(params, snr, tau))


def lmmse_from_utility(params: OuParams, snr: float, d):
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise InvalidParameter("d", "utility recovery covers d >= 0")
    out = cmmse_ou(params, snr) * np.exp(-2.0 * utility_ou(params, snr, d))
    return float(out) if np.ndim(out) == 0 else out


def mutual_info_rate(snr: float, cmmse: float) -> float:
    """I(snr) = snr * cmmse(snr) / 2 nats per unit time."""
    return 0.5 * snr * cmmse


@dataclass(frozen=True)
class InfoUtilityCurve:
    tau_grid: np.ndarray
    u_values: np.ndarray
    u_prime: np.ndarray
    u_prime0: float
    mutual_info_rate: float


def utility_curve(params: OuParams, snr: float, tau_grid) -> InfoUtilityCurve:
    tau_grid = np.asarray(tau_grid, dtype=float)
    return InfoUtilityCurve(tau_grid, np.atleast_1d(utility_ou(params, snr, tau_grid)),
                            np.atleast_1d(utility_prime(params, snr, tau_grid)),
                            float(utility_prime(params, snr, 0.0)),
                            mutual_info_rate(snr, cmmse_ou(params, snr)))


def entropy_power_check(curve: LmmseCurve, n_x0_given_past: float, u_values,
                        tol: float = 1e-9) -> bool:
    """True iff lmmse(d) >= N(X_0 | past) exp(-2 U(d)) on every grid point."""
    u_values = np.asarray(u_values, dtype=float)
    if u_values.shape != curve.values.shape:
        raise InvalidParameter("u_values", "one utility value per curve point required")
    bound = n_x0_given_past * np.exp(-2.0 * u_values)
    return bool(np.all(curve.values >= bound - tol))


def mixture_entropy_power(mix: MixingMeasure, snr: float) -> float:
    """N(X_0 | past) for an OU mixture: the rate is known from the infinite past,
    so the conditional entropy is the weighted Gaussian one."""
    return float(math.exp(sum(w * math.log(cmmse_ou(OuParams(float(a)), snr))
                              for a, w in zip(mix.alphas, mix.weights))))


def mixture_utility(mix: MixingMeasure, snr: float, tau):
    return sum(w * utility_ou(OuParams(float(a)), snr, tau)
               for a, w in zip(mix.alphas, mix.weights))


def cmmse_by_integration(mmse_fn: Callable[[float], float], snr: float,
                         tol: float = 1e-11) -> float:
    """(1/snr) int_0^snr mmse(g) dg by adaptive quadrature."""
    if not snr > 0:
        raise InvalidParameter("snr", "must be positive")
    val, err = integrate.quad(mmse_fn, 0.0, snr, epsabs=tol, epsrel=1e-13, limit=200)
    if err > 1e3 * tol:
        raise QuadratureFailure(f"SNR integral error estimate {err:.2g}")
    return val / snr


def mmse_ou_extended(params: OuParams, gamma: float) -> float:
    """Smoothing error including gamma = 0 (the stationary variance)."""
    return params.var0 if gamma == 0 else mmse_ou(params, gamma)
