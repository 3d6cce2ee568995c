"""Wiener-Hopf factorization and fixed-lag Wiener errors for Gaussian inputs.

Two pipelines share one error formula, lmmse(d) = mmse + int_{-inf}^{-d} h(t)^2 dt,
where h is the impulse response of sqrt(snr) S_X / S_Y^-:

* rational spectra are factored exactly from polynomial roots, and h is a
  finite sum of exponentials given by a partial-fraction expansion;
* tabulated spectra are factored on an FFT grid with the cepstral method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from ._numerics import clamped_exp
from .errors import (GridResolutionError, InsufficientData, InvalidParameter, MarginalRoot,
                     QuadratureFailure, RepeatedPole, RootFindingFailure)
from .model import LmmseCurve, MixingMeasure, RationalSpectrum, TabulatedSpectrum

Spectrum = Union[RationalSpectrum, TabulatedSpectrum]


def polished_roots(coeffs) -> np.ndarray:
    """Companion-matrix roots followed by one Newton step each."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size < 2:
        return np.zeros(0, dtype=complex)
    roots = np.roots(coeffs).astype(complex)
    deriv = np.polyder(coeffs)
    for i, r in enumerate(roots):
        dp = np.polyval(deriv, r)
        if dp != 0:
            roots[i] = r - np.polyval(coeffs, r) / dp
    scale = np.array([np.polyval(np.abs(coeffs), abs(r)) for r in roots])
    resid = np.abs(np.polyval(coeffs, roots)) / scale
    if np.any(~np.isfinite(roots)) or np.any(resid > 1e-12):
        raise RootFindingFailure(f"polynomial roots not resolved (worst residual {resid.max():.2g})")
    return roots


def _stable_sqrt(u_roots: np.ndarray, what: str) -> np.ndarray:
    """Right-half-plane square roots q of s^2 = u; the stable factor is (s + q)."""
    q = np.sqrt(u_roots.astype(complex))
    if np.any(q.real < 1e-9):
        raise MarginalRoot(f"{what} root within 1e-9 of the imaginary axis")
    return q


@dataclass(frozen=True)
class FactoredSpectrum:
    """S_Y^+(s) = gain * prod(s - z) / prod(s - p) with every z, p in the left half-plane."""

    plus_zeros: np.ndarray
    plus_poles: np.ndarray
    gain: float = 1.0

    def plus(self, s):
        s = np.asarray(s, dtype=complex)
        num = np.prod([s - z for z in self.plus_zeros], axis=0) if self.plus_zeros.size else 1.0
        den = np.prod([s - p for p in self.plus_poles], axis=0) if self.plus_poles.size else 1.0
        return self.gain * num / den

    def minus(self, s):
        return self.plus(-np.asarray(s, dtype=complex))


def factorize_rational(sx: RationalSpectrum, snr: float) -> FactoredSpectrum:
    """Split S_Y = 1 + snr S_X into its stable causal factor."""
    if not snr > 0:
        raise InvalidParameter("snr", "must be positive")
    den = sx.den_coeffs
    num = np.zeros_like(den)
    num[den.size - sx.num_coeffs.size:] = snr * sx.gain * sx.num_coeffs
    out_num = den + num
    zeros_u = polished_roots(out_num)
    poles_u = polished_roots(den)
    gain = math.sqrt(out_num[0] / den[0])
    return FactoredSpectrum(-_stable_sqrt(zeros_u, "output-spectrum zero"),
                            -_stable_sqrt(poles_u, "spectrum pole"), gain)


@dataclass(frozen=True)
class PartialFractionExpansion:
    """H(s) = sum u/(s - p) over Re p > 0  +  sum v/(s - c) over Re c < 0.

    ``constant_c`` is the total energy of h, i.e. the lookahead error at
    d = -inf minus the smoothing error; for d < 0 the error is
    mmse + constant_c - (causal energy beyond |d|).
    """

    anticausal_poles: np.ndarray
    anticausal_residues: np.ndarray
    causal_poles: np.ndarray
    causal_residues: np.ndarray
    constant_c: float

    @property
    def anticausal_terms(self):
        return list(zip(self.anticausal_poles, self.anticausal_residues))

    @property
    def causal_terms(self):
        return list(zip(self.causal_poles, self.causal_residues))

    def evaluate(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for p, u in self.anticausal_terms:
            out = out + u / (s - p)
        for c, v in self.causal_terms:
            out = out + v / (s - c)
        return out

    def impulse_response(self, t):
        """h(t): causal part for t > 0, anticausal part for t < 0, midpoint at t = 0."""
        t = np.asarray(t, dtype=float)
        h = np.zeros(t.shape, dtype=complex)
        neg, pos, zero = t < 0, t > 0, t == 0
        for p, u in self.anticausal_terms:
            h[neg] -= u * np.exp(p * t[neg])
            h[zero] -= 0.5 * u
        for c, v in self.causal_terms:
            h[pos] += v * np.exp(c * t[pos])
            h[zero] += 0.5 * v
        return h.real

    def anticausal_energy(self, d: float = 0.0) -> float:
        """int_{-inf}^{-d} h^2 for d >= 0."""
        p, u = self.anticausal_poles, self.anticausal_residues
        if p.size == 0 or d == math.inf:
            return 0.0
        ps = p[:, None] + p[None, :]
        return float(np.sum(np.outer(u, u) * clamped_exp(-ps * d) / ps).real)

    def causal_energy(self, upto: float = math.inf) -> float:
        """int_0^{upto} h^2."""
        c, v = self.causal_poles, self.causal_residues
        if c.size == 0:
            return 0.0
        rates = -(c[:, None] + c[None, :])
        frac = 1.0 if upto == math.inf else -np.expm1(-rates * upto)
        return float(np.sum(np.outer(v, v) * frac / rates).real)


def _check_simple(poles: np.ndarray):
    for i in range(poles.size):
        for j in range(i + 1, poles.size):
            if abs(poles[i] - poles[j]) <= 1e-9 * max(1.0, abs(poles[i])):
                raise RepeatedPole(f"repeated pole near {poles[i]:.6g}")


def wiener_transfer(sx: RationalSpectrum, fact: FactoredSpectrum, snr: float
                    ) -> PartialFractionExpansion:
    """Partial fractions of H(s) = sqrt(snr) S_X(s) / S_Y^-(s)."""
    # D(s^2) = lead * prod (s + q)(s - q); the (s - q) factors cancel against S_Y^-
    # up to a sign that appears twice, leaving
    # H = sqrt(snr) g N(s^2) / (lead gain_Y prod(s + q_pole) prod(s - q_zero)).
    lead = sx.den_coeffs[0]
    causal = fact.plus_poles.copy()
    anticausal = -fact.plus_zeros
    poles = np.concatenate([anticausal, causal])
    _check_simple(poles)
    scale = math.sqrt(snr) * sx.gain / (lead * fact.gain)

    def residue(k):
        r = poles[k]
        others = np.delete(poles, k)
        return scale * np.polyval(sx.num_coeffs, r * r) / np.prod(r - others)

    res = np.array([residue(k) for k in range(poles.size)], dtype=complex)
    n_anti = anticausal.size
    pfe = PartialFractionExpansion(anticausal, res[:n_anti], causal, res[n_anti:], 0.0)
    total = pfe.anticausal_energy(0.0) + pfe.causal_energy()
    return PartialFractionExpansion(anticausal, res[:n_anti], causal, res[n_anti:], total)


def wiener_h_direct(sx: RationalSpectrum, fact: FactoredSpectrum, snr: float, s):
    """H(s) straight from its definition (no partial fractions)."""
    s = np.asarray(s, dtype=complex)
    return math.sqrt(snr) * sx.at_s(s) / fact.minus(s)


def lmmse_rational(pfe: PartialFractionExpansion, mmse: float, d: float) -> float:
    d = float(d)
    if d >= 0:
        return mmse + pfe.anticausal_energy(d)
    if d == -math.inf:
        return mmse + pfe.constant_c
    return mmse + pfe.constant_c - (pfe.causal_energy() - pfe.causal_energy(-d))


def _tabulated_wiener(sx: TabulatedSpectrum, snr: float) -> float:
    # exact integral of f/(1 + snr f) for piecewise-linear f
    w, f = sx.omega_grid, sx.s_values
    dw = np.diff(w)
    f0, f1 = f[:-1], f[1:]
    slope = (f1 - f0) / dw
    flat = np.abs(slope) * dw < 1e-12 * (1.0 + np.abs(f0))
    with np.errstate(divide="ignore", invalid="ignore"):
        curved = (dw - np.log1p(snr * (f1 - f0) / (1.0 + snr * f0)) / (snr * slope)) / snr
    seg = np.where(flat, dw * 0.5 * (f0 + f1) / (1.0 + snr * 0.5 * (f0 + f1)), curved)
    return float(np.sum(seg) / np.pi)


def wiener_mmse(sx: Spectrum, snr: float, tol: float = 1e-8) -> float:
    """Smoothing error (1/2pi) int S_X / (1 + snr S_X) d omega."""
    if snr < 0:
        raise InvalidParameter("snr", "must be non-negative")
    if isinstance(sx, TabulatedSpectrum):
        if snr == 0:
            return float(np.trapezoid(sx.s_values, sx.omega_grid) / np.pi)
        return _tabulated_wiener(sx, snr)

    def integrand(w):
        s = sx(w)
        return s / (1.0 + snr * s)

    # split at the spectral corner so quad sees the bulk of the mass
    corner = float(np.max(np.abs(polished_roots(sx.den_coeffs)) ** 0.5))
    total, err = 0.0, 0.0
    for lo, hi in ((0.0, corner), (corner, np.inf)):
        val, e = integrate.quad(integrand, lo, hi, epsabs=tol * 1e-3, epsrel=1e-13, limit=500)
        total += val
        err += e
    if err > tol or not np.isfinite(total):
        raise QuadratureFailure(f"Wiener integral error estimate {err:.2g} above {tol}")
    return total / np.pi


@dataclass(frozen=True)
class RationalPipeline:
    """Everything the rational route produces for one (spectrum, snr)."""

    spectrum: RationalSpectrum
    snr: float
    factor: FactoredSpectrum
    pfe: PartialFractionExpansion
    mmse: float

    @property
    def cmmse(self) -> float:
        return lmmse_rational(self.pfe, self.mmse, 0.0)

    @property
    def var0(self) -> float:
        return self.mmse + self.pfe.constant_c

    def lmmse(self, d: float) -> float:
        return lmmse_rational(self.pfe, self.mmse, d)

    def curve(self, d_grid) -> LmmseCurve:
        d_grid = np.asarray(d_grid, dtype=float)
        return LmmseCurve(d_grid, [self.lmmse(d) for d in d_grid], self.cmmse, self.mmse, self.var0)


def rational_pipeline(sx: RationalSpectrum, snr: float) -> RationalPipeline:
    fact = factorize_rational(sx, snr)
    pfe = wiener_transfer(sx, fact, snr)
    return RationalPipeline(sx, float(snr), fact, pfe, wiener_mmse(sx, snr))


def mixture_spectrum(mix: MixingMeasure) -> RationalSpectrum:
    """sum_k w_k / (alpha_k^2 - s^2) over a common denominator."""
    factors = [np.array([-1.0, a * a]) for a in mix.alphas]
    den = np.array([1.0])
    for f in factors:
        den = np.polymul(den, f)
    num = np.zeros(den.size - 1)
    for k, w in enumerate(mix.weights):
        part = np.array([w])
        for j, f in enumerate(factors):
            if j != k:
                part = np.polymul(part, f)
        num[num.size - part.size:] += part
    return RationalSpectrum(num, den)


def _two_ou_roots(alpha1: float, alpha2: float, snr: float):
    s2 = alpha1 ** 2 + alpha2 ** 2
    b = s2 + snr
    c = 0.5 * snr * s2 + alpha1 ** 2 * alpha2 ** 2
    disc = math.sqrt(b * b - 4.0 * c)
    x1 = 0.5 * (b + disc)
    x2 = c / x1
    return math.sqrt(x1), math.sqrt(x2)


def two_ou_closed_form(alpha1: float, alpha2: float, snr: float, d: float,
                       mmse: float | None = None) -> float:
    """Lookahead error of the Gaussian process with spectrum (S_a1 + S_a2)/2.

    Written out term by term from the four-pole expansion of H; used as the
    reference for the generic rational pipeline.
    """
    if alpha1 <= 0 or alpha2 <= 0 or alpha1 == alpha2:
        raise InvalidParameter("alpha", "need two distinct positive rates")
    p1, p2 = _two_ou_roots(alpha1, alpha2, snr)
    a1, a2 = alpha1, alpha2
    g = math.sqrt(snr)

    def numer(s):
        return 0.5 * g * (a1 * a1 + a2 * a2) - g * s * s

    u1 = numer(p1) / ((p1 - p2) * (p1 + a1) * (p1 + a2))
    u2 = numer(p2) / ((p2 - p1) * (p2 + a1) * (p2 + a2))
    v1 = numer(-a1) / ((-a1 - p1) * (-a1 - p2) * (a2 - a1))
    v2 = numer(-a2) / ((-a2 - p1) * (-a2 - p2) * (a1 - a2))
    if mmse is None:
        mmse = wiener_mmse(mixture_spectrum(MixingMeasure([a1, a2], [0.5, 0.5])), snr)
    if d == math.inf:
        return mmse

    def anti(dd):
        return (u1 * u1 / (2 * p1) * math.exp(-2 * p1 * dd)
                + u2 * u2 / (2 * p2) * math.exp(-2 * p2 * dd)
                + 2 * u1 * u2 / (p1 + p2) * math.exp(-(p1 + p2) * dd))

    if d >= 0:
        return mmse + anti(d)
    causal_total = v1 * v1 / (2 * a1) + v2 * v2 / (2 * a2) + 2 * v1 * v2 / (a1 + a2)
    c_const = anti(0.0) + causal_total
    if d == -math.inf:
        return mmse + c_const
    return mmse + c_const - (v1 * v1 / (2 * a1) * math.exp(2 * a1 * d)
                             + v2 * v2 / (2 * a2) * math.exp(2 * a2 * d)
                             + 2 * v1 * v2 / (a1 + a2) * math.exp((a1 + a2) * d))


@dataclass(frozen=True)
class NumericFactorization:
    """Cepstral factorization sampled on an FFT grid.

    ``t`` and ``h`` are in natural order (fftshifted), ``omega`` and
    ``s_plus`` in FFT order.
    """

    snr: float
    omega: np.ndarray
    s_plus: np.ndarray
    t: np.ndarray
    h: np.ndarray
    mmse: float
    var0: float
    _tail_t: np.ndarray
    _tail: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def anticausal_energy(self, d: float) -> float:
        """int_{-inf}^{-d} h^2 (d >= 0), interpolated between grid times."""
        if d < 0:
            raise InvalidParameter("d", "numeric pipeline reports non-negative lookahead only")
        return float(np.interp(-d, self._tail_t, self._tail))

    def lmmse(self, d: float) -> float:
        if d == math.inf:
            return self.mmse
        return self.mmse + self.anticausal_energy(d)

    @property
    def cmmse(self) -> float:
        return self.lmmse(0.0)

    def pd(self, d):
        """Self-normalized convergence ratio: the shared mmse cancels."""
        d = np.atleast_1d(np.asarray(d, dtype=float))
        return np.array([self.anticausal_energy(x) for x in d]) / self.anticausal_energy(0.0)

    def curve(self, d_grid) -> LmmseCurve:
        d_grid = np.asarray(d_grid, dtype=float)
        return LmmseCurve(d_grid, [self.lmmse(d) for d in d_grid], self.cmmse, self.mmse,
                          self.var0)


def factorize_numeric(sx: Spectrum, snr: float, *, grid_size: int = 2 ** 16,
                      omega_max: float = 64.0, rms_tol: float = 1e-4) -> NumericFactorization:
    """Cepstral spectral factorization and the Wiener impulse response on a grid."""
    from ._numerics import is_power_of_two

    if not is_power_of_two(grid_size) or grid_size < 16:
        raise InvalidParameter("grid_size", "must be a power of two >= 16")
    if not snr > 0:
        raise InvalidParameter("snr", "must be positive")
    n = grid_size
    d_omega = 2.0 * omega_max / n
    omega = np.fft.fftfreq(n, d=1.0 / n) * d_omega
    sxw = np.asarray(sx(omega), dtype=float)
    sy = 1.0 + snr * sxw
    if np.any(sy <= 0):
        raise GridResolutionError("output spectrum not strictly positive on the grid")

    cep = np.fft.ifft(np.log(sy)).real
    fold = np.zeros(n)
    fold[0] = 0.5 * cep[0]
    fold[1:n // 2] = cep[1:n // 2]
    fold[n // 2] = 0.5 * cep[n // 2]
    s_plus = np.exp(np.fft.fft(fold))
    rms = float(np.sqrt(np.mean((np.abs(s_plus) ** 2 - sy) ** 2)))
    if rms > rms_tol:
        raise GridResolutionError(f"|S_Y+|^2 misses S_Y by {rms:.2g} RMS")

    h_ratio = math.sqrt(snr) * sxw / np.conj(s_plus)
    dt = 2.0 * math.pi / (n * d_omega)
    h = np.fft.fftshift(np.fft.ifft(h_ratio).real / dt)
    t = (np.arange(n) - n // 2) * dt

    neg = t <= 0
    t_neg, h_neg = t[neg], h[neg]
    seg = 0.5 * (h_neg[1:] ** 2 + h_neg[:-1] ** 2) * dt
    tail = np.concatenate([[0.0], np.cumsum(seg)])

    if isinstance(sx, RationalSpectrum):
        mmse = wiener_mmse(sx, snr)
        from .model import stationary_variance

        var0 = stationary_variance(sx)
    else:
        mmse = wiener_mmse(sx, snr)
        var0 = wiener_mmse(sx, 0.0)
    return NumericFactorization(float(snr), omega, s_plus, t, h, mmse, var0, t_neg, tail)


@dataclass(frozen=True)
class DecayFit:
    kind: str
    exponent: float
    residual_exponential: float
    residual_polynomial: float


def decay_rate(curve: LmmseCurve) -> DecayFit:
    """Classify how p_d reaches zero: exp(-k d) or d^s.

    For the exponential kind ``exponent`` is the rate k > 0; for the
    polynomial kind it is the log-log slope s < 0. The better straight-line
    fit (smaller RMS residual) wins.
    """
    d, v = curve.d, curve.values
    keep = (d > 0) & np.isfinite(d) & (v > curve.mmse + 1e-12)
    if keep.sum() < 8:
        raise InsufficientData(f"need >= 8 lookaheads with error above mmse, got {keep.sum()}")
    d, v = d[keep], v[keep]
    logp = np.log((v - curve.mmse) / (curve.cmmse - curve.mmse))

    def fit(x):
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, logp, rcond=None)
        resid = logp - A @ coef
        return coef[0], float(np.sqrt(np.mean(resid ** 2)))

    slope_e, res_e = fit(d)
    slope_p, res_p = fit(np.log(d))
    if res_e <= res_p:
        return DecayFit("exponential", -float(slope_e), res_e, res_p)
    return DecayFit("polynomial", float(slope_p), res_e, res_p)
