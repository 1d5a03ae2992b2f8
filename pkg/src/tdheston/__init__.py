"""Heston pricing and calibration with piecewise-constant time-dependent parameters.

The package composes closed-form characteristic-function coefficients across
parameter periods, prices spot and forward-start vanillas by Fourier
inversion, bootstraps the parameter term structure to a market vol surface,
extracts forward-skew surfaces, and cross-validates everything against an
Euler Monte Carlo oracle.
"""

from .errors import (
    DataError,
    DegenerateForwardError,
    NoSolutionError,
    NumericalSingularityError,
    OutOfHorizonError,
    ParameterDomainError,
    QuadratureError,
    TdHestonError,
)
from .heston_cf import CfCoeffs, PeriodParams, evaluate_cf, period_coeffs
from .term_structure import (
    Period,
    TermStructure,
    cf_coeffs_to,
    format_tenor,
    marginal_cf,
    parse_tenor,
)
from .transform_pricing import (
    InversionConfig,
    VanillaSpec,
    black_scholes_price,
    implied_vol,
    tail_probability,
    tilted_tail_probability,
    vanilla_price,
)
from .forward_start import (
    ForwardStartSpec,
    SkewSurface,
    forward_skew,
    forward_start_coeffs,
    forward_start_price,
)
from .calibration import (
    Bounds,
    CalibrationResult,
    ForwardCurve,
    Quote,
    QuoteGrid,
    VolSurface,
    bootstrap_calibrate,
    nelder_mead_minimize,
    objective,
    param_transform,
    param_transform_inverse,
    quotes_from_surface,
)
from .mc_oracle import McConfig, McResult, mc_vanilla_price, simulate_terminal

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "CalibrationResult",
    "CfCoeffs",
    "DataError",
    "DegenerateForwardError",
    "ForwardCurve",
    "ForwardStartSpec",
    "InversionConfig",
    "McConfig",
    "McResult",
    "NoSolutionError",
    "NumericalSingularityError",
    "OutOfHorizonError",
    "ParameterDomainError",
    "Period",
    "PeriodParams",
    "QuadratureError",
    "Quote",
    "QuoteGrid",
    "SkewSurface",
    "TdHestonError",
    "TermStructure",
    "VanillaSpec",
    "VolSurface",
    "black_scholes_price",
    "bootstrap_calibrate",
    "cf_coeffs_to",
    "evaluate_cf",
    "format_tenor",
    "forward_skew",
    "forward_start_coeffs",
    "forward_start_price",
    "implied_vol",
    "marginal_cf",
    "mc_vanilla_price",
    "nelder_mead_minimize",
    "objective",
    "param_transform",
    "param_transform_inverse",
    "parse_tenor",
    "period_coeffs",
    "quotes_from_surface",
    "simulate_terminal",
    "tail_probability",
    "tilted_tail_probability",
    "vanilla_price",
]
