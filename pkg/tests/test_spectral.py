import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, linalg

from lagmmse.errors import (GridResolutionError, InsufficientData, InvalidParameter,
                            RepeatedPole)
from lagmmse.model import LmmseCurve, MixingMeasure, OuParams, RationalSpectrum, TabulatedSpectrum
from lagmmse.ou import cmmse_ou, lmmse_ou, mmse_ou
from lagmmse.spectral import (decay_rate, factorize_numeric, factorize_rational, lmmse_rational,
                              mixture_spectrum, polished_roots, rational_pipeline,
                              two_ou_closed_form, wiener_h_direct, wiener_mmse, wiener_transfer)

PAIR = MixingMeasure([0.75, 0.25], [0.5, 0.5])

SPECTRA = {
    "ou": RationalSpectrum.ou(0.5),
    "two-ou": mixture_spectrum(PAIR),
    "three-ou": mixture_spectrum(MixingMeasure([0.3, 1.0, 2.5], [0.2, 0.5, 0.3])),
    "oscillator": RationalSpectrum([1.0], [1.0, 2.0 * (1.0 - 2.0 * 0.3 ** 2), 1.0]),
    "finite-zero": RationalSpectrum([-1.0, 0.5], [1.0, -5.0, 4.0]),
}


def pair_state_space(a1, a2, snr):
    """G = (X1 + X2)/sqrt(2) with independent unit-beta OU components."""
    A = np.diag([-a1, -a2])
    c = np.array([1.0, 1.0]) / math.sqrt(2.0)
    C = math.sqrt(snr) * c[None, :]
    P = linalg.solve_continuous_are(A.T, C.T, np.eye(2), np.eye(1))
    Sigma = np.diag([1.0 / (2 * a1), 1.0 / (2 * a2)])
    return A, c, P, Sigma


def direct_mmse(sx, snr):
    val, _ = integrate.quad(lambda w: sx(w) / (1 + snr * sx(w)), 0, np.inf,
                            epsabs=1e-13, epsrel=1e-13, limit=500)
    return val / math.pi


class TestRoots:
    def test_polished_roots(self):
        r = polished_roots([1.0, -6.0, 11.0, -6.0])
        np.testing.assert_allclose(np.sort(r.real), [1.0, 2.0, 3.0], atol=1e-14)

    def test_constant(self):
        assert polished_roots([2.0]).size == 0


class TestFactorization:
    @pytest.mark.parametrize("name", sorted(SPECTRA))
    def test_plus_factor_reproduces_output_spectrum(self, name):
        sx = SPECTRA[name]
        fact = factorize_rational(sx, 2.0)
        w = np.linspace(-20, 20, 801)
        np.testing.assert_allclose(np.abs(fact.plus(1j * w)) ** 2, 1 + 2.0 * sx(w), rtol=1e-12)
        assert np.all(fact.plus_zeros.real < 0) and np.all(fact.plus_poles.real < 0)

    def test_ou_factor(self):
        fact = factorize_rational(RationalSpectrum.ou(0.5), 1.0)
        assert fact.plus_zeros[0] == pytest.approx(-math.sqrt(1.25))
        assert fact.plus_poles[0] == pytest.approx(-0.5)

    def test_rejects_zero_snr(self):
        with pytest.raises(InvalidParameter):
            factorize_rational(RationalSpectrum.ou(0.5), 0.0)


class TestPartialFractions:
    @pytest.mark.parametrize("name", sorted(SPECTRA))
    def test_reassembly_matches_transfer(self, name):
        sx = SPECTRA[name]
        fact = factorize_rational(sx, 1.5)
        pfe = wiener_transfer(sx, fact, 1.5)
        s = 1j * np.linspace(-7, 7, 57) + 0.05
        np.testing.assert_allclose(pfe.evaluate(s), wiener_h_direct(sx, fact, 1.5, s),
                                   rtol=1e-10, atol=1e-13)

    @pytest.mark.parametrize("name", sorted(SPECTRA))
    def test_parseval_tail(self, name):
        pipe = rational_pipeline(SPECTRA[name], 1.0)
        val, _ = integrate.quad(lambda t: pipe.pfe.impulse_response(t) ** 2, -np.inf, 0.0,
                                epsabs=1e-13, epsrel=1e-12, limit=400)
        assert val == pytest.approx(pipe.pfe.anticausal_energy(0.0), rel=1e-9)
        assert val == pytest.approx(pipe.cmmse - pipe.mmse, rel=1e-9)

    @pytest.mark.parametrize("name", sorted(SPECTRA))
    def test_total_energy_is_var0_minus_mmse(self, name):
        from lagmmse.model import stationary_variance

        pipe = rational_pipeline(SPECTRA[name], 1.0)
        assert pipe.var0 == pytest.approx(stationary_variance(SPECTRA[name]), rel=1e-9)

    def test_ou_residues(self):
        pipe = rational_pipeline(RationalSpectrum.ou(0.5), 1.0)
        tau = math.sqrt(1.25)
        assert pipe.pfe.anticausal_poles[0] == pytest.approx(tau)
        assert pipe.pfe.anticausal_residues[0].real == pytest.approx(-1.0 / (0.5 + tau))

    def test_repeated_pole(self):
        sx = RationalSpectrum([1.0], [1.0, -0.5, 0.0625])  # 1/(0.25 + w^2)^2
        with pytest.raises(RepeatedPole):
            rational_pipeline(sx, 1.0)


class TestOuAgreement:
    @given(st.floats(0.05, 5.0), st.floats(0.05, 20.0), st.floats(-6.0, 6.0))
    def test_pipeline_equals_closed_form(self, alpha, snr, d):
        pipe = rational_pipeline(RationalSpectrum.ou(alpha), snr)
        assert pipe.lmmse(d) == pytest.approx(lmmse_ou(OuParams(alpha), snr, d), rel=1e-9,
                                              abs=1e-12)

    def test_anchors(self):
        pipe = rational_pipeline(RationalSpectrum.ou(0.5), 1.0)
        assert pipe.cmmse == pytest.approx(cmmse_ou(OuParams(0.5), 1.0), rel=1e-12)
        assert pipe.mmse == pytest.approx(mmse_ou(OuParams(0.5), 1.0), rel=1e-10)
        assert lmmse_rational(pipe.pfe, pipe.mmse, math.inf) == pipe.mmse


class TestGaussianPair:
    """The equal-weight pair (0.75, 0.25) against a two-state Kalman-Bucy oracle."""

    def test_cmmse_against_care(self):
        A, c, P, _ = pair_state_space(0.75, 0.25, 1.0)
        pipe = rational_pipeline(mixture_spectrum(PAIR), 1.0)
        assert pipe.cmmse == pytest.approx(float(c @ P @ c), rel=1e-10)
        assert pipe.cmmse == pytest.approx(0.67458880, abs=1e-8)

    def test_prediction_against_care(self):
        A, c, P, Sigma = pair_state_space(0.75, 0.25, 1.0)
        E = linalg.expm(A * 0.7)
        pred = Sigma - E @ (Sigma - P) @ E.T
        pipe = rational_pipeline(mixture_spectrum(PAIR), 1.0)
        assert pipe.lmmse(-0.7) == pytest.approx(float(c @ pred @ c), rel=1e-10)
        assert pipe.lmmse(-0.7) == pytest.approx(0.91967369, abs=1e-8)

    def test_mmse(self):
        sx = mixture_spectrum(PAIR)
        assert wiener_mmse(sx, 1.0) == pytest.approx(direct_mmse(sx, 1.0), rel=1e-10)
        assert wiener_mmse(sx, 1.0) == pytest.approx(0.45682825, abs=1e-8)

    def test_roots(self):
        fact = factorize_rational(mixture_spectrum(PAIR), 1.0)
        np.testing.assert_allclose(np.sort(-fact.plus_zeros.real), [0.50347096, 1.17111784],
                                   atol=1e-8)

    @pytest.mark.parametrize("d", [-math.inf, -3.0, -0.7, 0.0, 0.4, 2.0, math.inf])
    def test_closed_form_agrees(self, d):
        pipe = rational_pipeline(mixture_spectrum(PAIR), 1.0)
        assert two_ou_closed_form(0.75, 0.25, 1.0, d) == pytest.approx(pipe.lmmse(d), abs=1e-12)

    def test_closed_form_rejects_equal_rates(self):
        with pytest.raises(InvalidParameter):
            two_ou_closed_form(0.5, 0.5, 1.0, 0.0)


class TestTabulated:
    def test_exact_integral_matches_quadrature(self):
        tri = TabulatedSpectrum.triangular(samples=33)
        val, _ = integrate.quad(lambda w: tri(w) / (1 + 2.0 * tri(w)), 0, 1,
                                points=tri.omega_grid[1:-1], limit=200, epsabs=1e-14)
        assert wiener_mmse(tri, 2.0) == pytest.approx(val / math.pi, rel=1e-10)

    def test_zero_snr_is_variance(self):
        tri = TabulatedSpectrum.triangular()
        assert wiener_mmse(tri, 0.0) == pytest.approx(1.0 / (2 * math.pi))


class TestNumericFactorization:
    def test_ou_impulse_response(self):
        sx = RationalSpectrum.ou(0.5)
        num = factorize_numeric(sx, 1.0)
        pipe = rational_pipeline(sx, 1.0)
        keep = np.abs(num.t) < 10
        ref = pipe.pfe.impulse_response(num.t[keep])
        assert np.sqrt(np.mean((num.h[keep] - ref) ** 2)) < 1e-3

    @pytest.mark.parametrize("name", ["ou", "two-ou"])
    def test_lmmse_matches_rational(self, name):
        num = factorize_numeric(SPECTRA[name], 1.0)
        pipe = rational_pipeline(SPECTRA[name], 1.0)
        for d in (0.0, 0.5, 2.0):
            assert num.lmmse(d) == pytest.approx(pipe.lmmse(d), abs=2e-4)

    def test_pd_self_normalized(self):
        num = factorize_numeric(TabulatedSpectrum.triangular(), 1.0)
        pd = num.pd([0.0, 1.0, 3.0])
        assert pd[0] == 1.0 and 1.0 > pd[1] > pd[2] > 0

    def test_grid_checks(self):
        with pytest.raises(InvalidParameter):
            factorize_numeric(RationalSpectrum.ou(0.5), 1.0, grid_size=1000)
        with pytest.raises(GridResolutionError):
            factorize_numeric(RationalSpectrum.ou(0.5), 1.0, rms_tol=1e-30)
        with pytest.raises(InvalidParameter):
            factorize_numeric(RationalSpectrum.ou(0.5), 1.0).lmmse(-1.0)

    def test_flat_spectrum_is_memoryless(self):
        flat = TabulatedSpectrum([0.0, 64.0], [1.0, 1.0])
        num = factorize_numeric(flat, 1.0, grid_size=2 ** 12)
        peak = np.argmax(np.abs(num.h))
        assert abs(num.t[peak]) <= num.dt


class TestDecayRate:
    @given(st.floats(0.05, 5.0), st.floats(0.05, 20.0))
    def test_ou_exponent(self, alpha, snr):
        p = OuParams(alpha)
        fit = decay_rate(rational_pipeline(RationalSpectrum.ou(alpha), snr)
                         .curve(np.linspace(0.05, 1.0, 20)))
        assert fit.kind == "exponential"
        assert fit.exponent == pytest.approx(1.0 / mmse_ou(p, snr), rel=1e-6)

    def test_pair_asymptotic_exponent(self):
        pipe = rational_pipeline(mixture_spectrum(PAIR), 1.0)
        fit = decay_rate(pipe.curve(np.linspace(10, 20, 21)))
        slow = float(np.min(-factorize_rational(mixture_spectrum(PAIR), 1.0).plus_zeros.real))
        assert fit.kind == "exponential"
        assert fit.exponent == pytest.approx(2 * slow, rel=1e-2)

    @pytest.mark.parametrize("snr", [1.0, 4.0])
    def test_triangular_polynomial(self, snr):
        tri = TabulatedSpectrum.triangular(bandwidth=2 * math.pi)
        fit = decay_rate(factorize_numeric(tri, snr).curve(np.linspace(1, 5, 41)))
        assert fit.kind == "polynomial" and abs(fit.exponent + 3) <= 0.7

    def test_pure_power_law(self):
        d = np.linspace(1, 5, 20)
        fit = decay_rate(LmmseCurve(d, 1.0 + 0.5 * d ** -3.0, 1.5, 1.0, 2.0))
        assert fit.kind == "polynomial" and fit.exponent == pytest.approx(-3.0)

    def test_insufficient(self):
        d = np.linspace(1, 2, 5)
        with pytest.raises(InsufficientData):
            decay_rate(LmmseCurve(d, 1.0 + np.exp(-d), 2.0, 1.0, 3.0))
