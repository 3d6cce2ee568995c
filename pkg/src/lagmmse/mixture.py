"""Mixtures of OU laws: exact mixture errors and bounds for the matching Gaussian process."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter
from .model import MixingMeasure, OuParams
from .ou import lmmse_ou
from .sim import McConfig, ou_lmmse_mc
from .spectral import mixture_spectrum  # noqa: F401  (re-exported)


def mixture_lmmse(mix: MixingMeasure, snr: float, d: float) -> float:
    """Weighted sum of the component OU errors."""
    return float(sum(w * lmmse_ou(OuParams(float(a)), snr, d)
                     for a, w in zip(mix.alphas, mix.weights)))


def mixture_autocorr(mix: MixingMeasure, tau):
    """R_G(tau) = sum_k w_k exp(-alpha_k |tau|) / (2 alpha_k)."""
    tau = np.abs(np.asarray(tau, dtype=float))
    a = mix.alphas[:, None] if tau.ndim else mix.alphas
    w = mix.weights[:, None] if tau.ndim else mix.weights
    return np.sum(w * np.exp(-a * tau) / (2.0 * a), axis=0)


def gaussian_lower_bound(mix: MixingMeasure, snr: float, d: float) -> float:
    """Lower bound on the Gaussian process with spectrum sum_k w_k S_alpha_k."""
    return mixture_lmmse(mix, snr, d)


def mismatched_lmmse(alpha_true: float, beta_assumed: float, snr: float, d: float,
                     mc: McConfig) -> tuple[float, float]:
    """MC error of the OU(beta_assumed) fixed-lag smoother run on OU(alpha_true) data."""
    if d < 0:
        raise InvalidParameter("d", "mismatched smoothing needs d >= 0")
    rep = ou_lmmse_mc(OuParams(alpha_true), snr, [d], mc, assumed=OuParams(beta_assumed),
                      tag="mismatch")
    est = rep.estimates[0]
    return est.value, est.stderr


def mismatched_curve(mix: MixingMeasure, beta: float, snr: float, d_values,
                     mc: McConfig):
    """mu-weighted mismatched errors for all d at once; returns (values, stderrs)."""
    d_values = np.atleast_1d(np.asarray(d_values, dtype=float))
    val = np.zeros(d_values.size)
    var = np.zeros(d_values.size)
    for a, w in zip(mix.alphas, mix.weights):
        rep = ou_lmmse_mc(OuParams(float(a)), snr, d_values, mc, assumed=OuParams(beta),
                          tag="mismatch")  # same paths for every beta
        val += w * np.array([e.value for e in rep.estimates])
        var += (w * np.array([e.stderr for e in rep.estimates])) ** 2
    return val, np.sqrt(var)


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    upper_stderr: float = 0.0
    beta: Optional[float] = None

    def __post_init__(self):
        if self.lower > self.upper + 3.0 * self.upper_stderr:
            raise InvalidParameter("bounds", f"lower {self.lower} above upper {self.upper}")


def default_beta_grid(mix: MixingMeasure) -> list[float]:
    """Mixture rates plus the geometric means of each pair."""
    a = sorted(float(x) for x in mix.alphas)
    grid = set(a)
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            grid.add(math.sqrt(a[i] * a[j]))
    return sorted(grid)


def gaussian_upper_bounds(mix: MixingMeasure, snr: float, d_values,
                          beta_grid: Optional[Sequence[float]], mc: McConfig) -> list[BoundPair]:
    """Sandwich for each d: exact lower bound and min over beta of the mismatched error."""
    beta_grid = list(beta_grid) if beta_grid is not None else default_beta_grid(mix)
    if not beta_grid:
        raise InvalidParameter("beta_grid", "must not be empty")
    d_values = np.atleast_1d(np.asarray(d_values, dtype=float))
    curves = [mismatched_curve(mix, b, snr, d_values, mc) for b in beta_grid]
    out = []
    for i, d in enumerate(d_values):
        k = int(np.argmin([c[0][i] for c in curves]))
        out.append(BoundPair(gaussian_lower_bound(mix, snr, d), float(curves[k][0][i]),
                             float(curves[k][1][i]), beta_grid[k]))
    return out


def gaussian_upper_bound(mix: MixingMeasure, snr: float, d: float,
                         beta_grid: Optional[Sequence[float]], mc: McConfig) -> BoundPair:
    return gaussian_upper_bounds(mix, snr, [d], beta_grid, mc)[0]
