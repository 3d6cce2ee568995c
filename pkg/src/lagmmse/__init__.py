"""Minimum mean-squared error with finite lookahead on the continuous-time Gaussian channel."""

from .errors import (AssertionFailed, DegenerateCase, GridResolutionError, InsufficientData,
                     InvalidParameter, LagMmseError, MarginalRoot, McBudgetExceeded,
                     NoSolution, NonConvergence, NumericalFailure, QuadratureFailure,
                     ReducibleChain, RepeatedPole, RootFindingFailure)
from .model import (ChannelSpec, Dtmc, LmmseCurve, MixingMeasure, OuParams, RationalSpectrum,
                    TabulatedSpectrum, stationary_variance, validate)
from .ou import (cmmse_ou, finite_window_error, gamma_star, lmmse_curve, lmmse_ou, mmse_ou,
                 pd_ratio, riccati_error, scaled_process_lmmse, tradeoff)

__all__ = [
    "AssertionFailed", "ChannelSpec", "DegenerateCase", "Dtmc", "GridResolutionError",
    "InsufficientData", "InvalidParameter", "LagMmseError", "LmmseCurve", "MarginalRoot",
    "McBudgetExceeded", "MixingMeasure", "NoSolution", "NonConvergence", "NumericalFailure",
    "OuParams", "QuadratureFailure", "RationalSpectrum", "ReducibleChain", "RepeatedPole",
    "RootFindingFailure", "TabulatedSpectrum", "cmmse_ou", "finite_window_error", "gamma_star",
    "lmmse_curve", "lmmse_ou", "mmse_ou", "pd_ratio", "riccati_error", "scaled_process_lmmse",
    "stationary_variance", "tradeoff", "validate",
]

__version__ = "0.1.0"
