"""Channel model, process specifications and the shared curve type.

Every input process is one of five immutable value types:

==================  ======================  =============================
variant name        type                    meaning
==================  ======================  =============================
``ou``              :class:`OuParams`       Ornstein-Uhlenbeck law
``ou_mixture``      :class:`MixingMeasure`  discrete mixture of OU laws
``rational_gaussian``  :class:`RationalSpectrum`  Gaussian, rational PSD
``tabulated_gaussian`` :class:`TabulatedSpectrum` Gaussian, sampled PSD
``shifted_markov``  :class:`Dtmc`           randomly shifted piecewise-constant chain
==================  ======================  =============================

``ProcessSpec`` is the union of these. Lookaheads are plain floats; ``inf``
and ``-inf`` select the smoothing and stationary-variance anchors.
Variances are always in signal units squared, time in the unit implied by
``alpha`` and SNR is an intensity per unit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate

from .errors import InvalidParameter, NumericalFailure


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise InvalidParameter(name, f"must be positive and finite, got {value}")
    return value


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelSpec:
    snr: float

    def __post_init__(self):
        _positive("snr", self.snr)


@dataclass(frozen=True)
class OuParams:
    """dX = -alpha X dt + beta dB, stationary, zero mean."""

    alpha: float
    beta: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("beta", self.beta)
        if self.mu != 0.0:
            raise InvalidParameter("mu", "only zero-mean processes are supported")

    @property
    def var0(self) -> float:
        return self.beta ** 2 / (2.0 * self.alpha)

    def spectrum(self, omega):
        return self.beta ** 2 / (self.alpha ** 2 + np.asarray(omega, dtype=float) ** 2)

    def autocorr(self, tau):
        return self.var0 * np.exp(-self.alpha * np.abs(tau))


@dataclass(frozen=True)
class MixingMeasure:
    """Discrete probability measure over OU rates (each component has beta=1)."""

    alphas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        alphas = _frozen(self.alphas).ravel()
        weights = _frozen(self.weights).ravel()
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "weights", weights)
        if alphas.size == 0:
            raise InvalidParameter("alphas", "mixture must have at least one component")
        if alphas.shape != weights.shape:
            raise InvalidParameter("weights", "must have one weight per alpha")
        if np.any(~np.isfinite(alphas)) or np.any(alphas <= 0):
            raise InvalidParameter("alphas", "must be positive and finite")
        if np.any(weights <= 0):
            raise InvalidParameter("weights", "must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameter("weights", f"must sum to 1, got {float(weights.sum())!r}")
        if np.unique(alphas).size != alphas.size:
            raise InvalidParameter("alphas", "must be distinct")

    @classmethod
    def from_density(cls, density, lo: float, hi: float, nodes: int = 32) -> "MixingMeasure":
        """Discretize a density on [lo, hi] with Gauss-Legendre nodes (renormalized)."""
        from ._numerics import gauss_legendre

        if not 0 < lo < hi:
            raise InvalidParameter("interval", "need 0 < lo < hi")
        x, w = gauss_legendre(nodes, lo, hi)
        mass = w * np.asarray(density(x), dtype=float)
        if np.any(mass <= 0):
            raise InvalidParameter("density", "must be positive on the interval")
        mass = mass / mass.sum()
        mass[-1] = 1.0 - mass[:-1].sum()
        return cls(x, mass)

    def components(self):
        return [OuParams(float(a)) for a in self.alphas]

    @property
    def var0(self) -> float:
        return float(np.sum(self.weights / (2.0 * self.alphas)))


@dataclass(frozen=True)
class RationalSpectrum:
    """S_X(s) = gain * N(s^2) / D(s^2), coefficients highest power first.

    On the imaginary axis s = j*omega, so S_X(omega) = gain * N(-omega^2) / D(-omega^2).
    The OU law with rate a is ``RationalSpectrum([1.0], [-1.0, a**2])``.
    """

    num_coeffs: np.ndarray
    den_coeffs: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        num = np.trim_zeros(_frozen(self.num_coeffs).ravel(), "f")
        den = np.trim_zeros(_frozen(self.den_coeffs).ravel(), "f")
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "num_coeffs", num)
        object.__setattr__(self, "den_coeffs", den)
        _positive("gain", self.gain)
        if num.size == 0:
            raise InvalidParameter("num_coeffs", "numerator is identically zero")
        if num.size >= den.size:
            raise InvalidParameter("num_coeffs", "numerator degree must be below denominator degree")
        for r in np.roots(den):
            if abs(r.imag) <= 1e-12 * max(1.0, abs(r)) and r.real <= 0:
                raise InvalidParameter("den_coeffs", f"denominator vanishes on the frequency axis (s^2={r.real:.6g})")
        probe = self(np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 257)]))
        if np.any(probe < 0):
            raise InvalidParameter("num_coeffs", "spectrum is negative somewhere on the frequency axis")

    def at_s(self, s):
        u = np.asarray(s, dtype=complex) ** 2
        return self.gain * np.polyval(self.num_coeffs, u) / np.polyval(self.den_coeffs, u)

    def __call__(self, omega):
        u = -np.asarray(omega, dtype=float) ** 2
        return self.gain * np.polyval(self.num_coeffs, u) / np.polyval(self.den_coeffs, u)

    @classmethod
    def ou(cls, alpha: float, beta: float = 1.0) -> "RationalSpectrum":
        return cls([beta ** 2], [-1.0, alpha ** 2])


@dataclass(frozen=True)
class TabulatedSpectrum:
    """Sampled even spectrum; linear interpolation in between, zero beyond the last sample.

    Samples may be one-sided (omega >= 0) or symmetric; symmetric input is folded.
    """

    omega_grid: np.ndarray
    s_values: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega_grid, dtype=float).ravel()
        s = np.array(self.s_values, dtype=float).ravel()
        if omega.shape != s.shape or omega.size < 2:
            raise InvalidParameter("omega_grid", "need matching omega/s arrays with >= 2 samples")
        if np.any(~np.isfinite(s)) or np.any(s < 0):
            raise InvalidParameter("s_values", "spectrum samples must be finite and non-negative")
        if np.any(np.diff(omega) <= 0):
            raise InvalidParameter("omega_grid", "must be strictly increasing")
        if omega[0] < 0:
            neg = omega < 0
            mirror = np.interp(-omega[neg], omega[~neg], s[~neg], right=0.0)
            if not np.allclose(mirror, s[neg], rtol=1e-9, atol=1e-12):
                raise InvalidParameter("s_values", "spectrum must be symmetric in omega")
            omega, s = omega[~neg], s[~neg]
        if omega[0] > 0:
            raise InvalidParameter("omega_grid", "grid must include omega = 0")
        object.__setattr__(self, "omega_grid", _frozen(omega))
        object.__setattr__(self, "s_values", _frozen(s))

    def __call__(self, omega):
        return np.interp(np.abs(np.asarray(omega, dtype=float)), self.omega_grid, self.s_values,
                         right=0.0)

    @classmethod
    def triangular(cls, samples: int = 4097, bandwidth: float = 1.0) -> "TabulatedSpectrum":
        """(1 - |omega|/bandwidth) on |omega| <= bandwidth, zero elsewhere.

        ``bandwidth=2*pi`` reads the frequency axis in cycles per unit time.
        """
        bandwidth = _positive("bandwidth", bandwidth)
        omega = np.linspace(0.0, bandwidth, samples)
        return cls(omega, 1.0 - omega / bandwidth)


@dataclass(frozen=True)
class Dtmc:
    """Finite-alphabet stationary Markov chain; ``transition[i, j] = P(next=j | now=i)``."""

    values: np.ndarray
    transition: np.ndarray
    stationary: np.ndarray = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values).ravel()
        P = _frozen(self.transition)
        n = values.size
        if P.shape != (n, n):
            raise InvalidParameter("transition", f"must be {n}x{n} to match values")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise InvalidParameter("transition", "rows must be probability vectors")
        if self.stationary is None:
            from .markov import dtmc_stationary

            mu = dtmc_stationary(P)
        else:
            mu = _frozen(self.stationary).ravel()
            if mu.shape != (n,) or np.max(np.abs(mu @ P - mu)) > 1e-10:
                raise InvalidParameter("stationary", "not invariant under the transition matrix")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "stationary", _frozen(mu))

    @property
    def var0(self) -> float:
        m = self.stationary @ self.values
        return float(self.stationary @ self.values ** 2 - m * m)


ProcessSpec = Union[OuParams, MixingMeasure, RationalSpectrum, TabulatedSpectrum, Dtmc]

VARIANTS = {
    "ou": OuParams,
    "ou_mixture": MixingMeasure,
    "rational_gaussian": RationalSpectrum,
    "tabulated_gaussian": TabulatedSpectrum,
    "shifted_markov": Dtmc,
}


def variant_name(spec: ProcessSpec) -> str:
    for name, cls in VARIANTS.items():
        if isinstance(spec, cls):
            return name
    raise InvalidParameter("variant", f"unsupported process type {type(spec).__name__}")


def validate(spec: ProcessSpec) -> ProcessSpec:
    """Return ``spec`` unchanged if it is a well-formed process specification.

    The value types check their own invariants on construction, so this
    re-runs the constructor on the stored fields; anything built by mutating
    frozen internals is caught here too.
    """
    name = variant_name(spec)
    cls = VARIANTS[name]
    if name == "ou":
        cls(spec.alpha, spec.beta, spec.mu)
    elif name == "ou_mixture":
        cls(spec.alphas, spec.weights)
    elif name == "rational_gaussian":
        cls(spec.num_coeffs, spec.den_coeffs, spec.gain)
    elif name == "tabulated_gaussian":
        cls(spec.omega_grid, spec.s_values)
    else:
        cls(spec.values, spec.transition)
    return spec


def stationary_variance(spec: ProcessSpec) -> float:
    """R_X(0) for any process specification."""
    spec = validate(spec)
    if isinstance(spec, (OuParams, MixingMeasure, Dtmc)):
        return spec.var0
    if isinstance(spec, RationalSpectrum):
        val, err = integrate.quad(spec, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=400,
                                  full_output=False)[:2]
        if not np.isfinite(val) or err > 1e-8:
            raise NumericalFailure(f"spectrum integral did not converge (error estimate {err:.2g})")
        return val / np.pi
    # piecewise-linear tabulation: trapezoid is exact on the interpolant
    return float(np.trapezoid(spec.s_values, spec.omega_grid) / np.pi)


@dataclass(frozen=True)
class LmmseCurve:
    """Sampled lookahead-error curve with its three anchors."""

    d: np.ndarray
    values: np.ndarray
    cmmse: float
    mmse: float
    var0: float

    def __post_init__(self):
        d = _frozen(self.d).ravel()
        v = _frozen(self.values).ravel()
        if d.shape != v.shape:
            raise InvalidParameter("values", "one value per lookahead required")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise InvalidParameter("d", "lookaheads must be strictly increasing")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.d.size

    def violations(self, tol: float = 1e-9) -> list[str]:
        out = []
        if self.d.size > 1 and np.any(np.diff(self.values) > tol):
            out.append("values increase with lookahead")
        if np.any(self.values < self.mmse - tol):
            out.append("value below the smoothing error")
        if np.any(self.values > self.var0 + tol):
            out.append("value above the stationary variance")
        at0 = self.d == 0.0
        if np.any(at0) and abs(self.values[at0][0] - self.cmmse) > tol:
            out.append("value at d=0 differs from the filtering error")
        return out

    def check(self, tol: float = 1e-9) -> "LmmseCurve":
        problems = self.violations(tol)
        if problems:
            raise NumericalFailure("; ".join(problems))
        return self


def spec_to_config(spec: ProcessSpec) -> dict:
    """Plain-dict form of a spec using the documented JSON field names."""
    name = variant_name(spec)
    if name == "ou":
        return {"variant": name, "alpha": spec.alpha, "beta": spec.beta}
    if name == "ou_mixture":
        return {"variant": name, "alphas": spec.alphas.tolist(), "weights": spec.weights.tolist()}
    if name == "rational_gaussian":
        out = {"variant": name, "num_coeffs": spec.num_coeffs.tolist(),
               "den_coeffs": spec.den_coeffs.tolist()}
        if spec.gain != 1.0:
            out["gain"] = spec.gain
        return out
    if name == "tabulated_gaussian":
        return {"variant": name, "omega_grid": spec.omega_grid.tolist(),
                "s_values": spec.s_values.tolist()}
    return {"variant": name, "values": spec.values.tolist(),
            "transition": spec.transition.tolist()}


def spec_from_config(cfg: dict) -> ProcessSpec:
    """Inverse of :func:`spec_to_config`; an optional ``snr`` key is ignored here."""
    try:
        name = cfg["variant"]
    except KeyError:
        raise InvalidParameter("variant", "missing") from None
    try:
        if name == "ou":
            return OuParams(cfg["alpha"], cfg.get("beta", 1.0))
        if name == "ou_mixture":
            return MixingMeasure(cfg["alphas"], cfg["weights"])
        if name == "rational_gaussian":
            return RationalSpectrum(cfg["num_coeffs"], cfg["den_coeffs"], cfg.get("gain", 1.0))
        if name == "tabulated_gaussian":
            return TabulatedSpectrum(cfg["omega_grid"], cfg["s_values"])
        if name == "shifted_markov":
            return Dtmc(cfg["values"], cfg["transition"])
    except KeyError as exc:
        raise InvalidParameter(str(exc.args[0]), f"required for variant {name!r}") from None
    raise InvalidParameter("variant", f"unknown variant {name!r}")
