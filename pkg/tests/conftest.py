"""Shared case-study data and fixtures.

The module-level tables are the published Eurostoxx 50 case study: the spot
vol surface, the forward curve, the two calibrated parameter panels, the
preprocessed quote prices (basis points of the base forward) and the quoted
calibration errors.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tdheston import Period, PeriodParams, TermStructure

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

SPOT = 3868.64
BASE_FORWARD = 4107.9
TENORS = (1 / 12, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0)
TENOR_LABELS = ("1m", "3m", "6m", "9m", "1y", "2y", "3y", "4y", "5y", "10y")
FORWARDS = (3870.6, 3874.4, 3880.3, 3886.0, 3892.0, 3915.3, 3938.9, 3962.6, 3986.5, 4107.9)
MONEYNESS = (0.85, 0.90, 0.95, 1.00, 1.05, 1.10, 1.15)

VOLS = np.array([
    [23.0, 18.7, 18.5, 18.6, 19.1, 19.7, 20.6, 21.5, 22.2, 25.8],
    [18.9, 16.7, 17.0, 17.2, 17.8, 18.8, 19.8, 20.8, 21.5, 25.3],
    [15.2, 14.7, 15.5, 16.0, 16.6, 17.8, 19.0, 20.0, 20.8, 24.7],
    [12.2, 13.2, 14.1, 14.8, 15.5, 16.9, 18.2, 19.3, 20.2, 24.2],
    [11.6, 12.3, 13.1, 13.9, 14.4, 16.1, 17.5, 18.7, 19.5, 23.7],
    [13.3, 12.3, 12.6, 13.2, 13.7, 15.4, 16.9, 18.1, 19.0, 23.2],
    [15.6, 12.9, 12.4, 12.7, 13.2, 14.8, 16.3, 17.5, 18.5, 22.7],
]) / 100.0

# Published preprocessed quote prices, bp of the base forward, undiscounted.
QUOTES_BP = np.array([
    [0.4, 12.8, 60.1, 115, 181, 412, 632, 850, 1045, 1958],
    [3.7, 36.8, 115, 190, 271, 537, 780, 1011, 1216, 2166],
    [25.3, 100, 213, 308, 401, 694, 953, 1194, 1405, 2384],
    [138, 255, 383, 488, 584, 887, 1155, 1399, 1614, 2612],
    [11.7, 79.7, 189, 295, 396, 747, 1074, 1378, 1653, 2851],
    [0.7, 18.5, 72.2, 144, 220, 532, 846, 1145, 1418, 2742],
    [0.0, 4.3, 25.5, 63.7, 111, 362, 652, 938, 1205, 2532],
], dtype=float)

# Published calibration errors (market - model, bp), constrained panel.
ERRORS_CONSTRAINED_BP = np.array([
    [1, 1, -2, 0, 1, -4, 0, -1, -3, -4],
    [2, 1, -1, -1, 0, 0, 0, 1, 0, -1],
    [-1, -1, 1, 0, 0, 1, 0, 0, 0, -1],
    [0, 0, -1, 0, 0, 1, 0, 0, 1, 2],
    [0, 0, 0, 0, -1, -1, 0, 0, -2, 1],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, -2],
    [0, 0, 0, -2, 4, 3, -1, 1, 4, -8],
], dtype=float)

# Published calibrated parameter panels (2-decimal prints).
CONSTRAINED_V0 = 0.0174
CONSTRAINED_THETA = (0.01, 0.03, 0.03, 0.03, 0.05, 0.05, 0.07, 0.12, 0.14, 0.31)
CONSTRAINED_KAPPA = (0.61, 7.33, 6.25, 6.46, 4.20, 2.78, 1.97, 0.84, 0.61, 0.29)
CONSTRAINED_SIGMA = (0.60, 0.56, 1.13, 1.15, 1.09, 1.26, 1.18, 1.14, 1.12, 1.14)
CONSTRAINED_RHO = (-0.42, -0.46, -0.59, -0.63, -0.90, -0.67, -0.75, -0.77, -0.79, -0.84)

UNCONSTRAINED_V0 = 0.0175
UNCONSTRAINED_THETA = (0.01, 0.03, 0.03, 0.03, 0.05, 0.05, 0.06, 0.09, 0.11, 0.21)
UNCONSTRAINED_KAPPA = (0.84, 4.75, 3.08, 5.21, 4.87, 4.82, 3.81, 3.89, 4.51, 3.02)
UNCONSTRAINED_SIGMA = (0.61, 0.35, 0.77, 0.83, 1.54, 1.58, 1.88, 3.35, 5.24, 6.70)
UNCONSTRAINED_RHO = (-0.42, -0.57, -0.56, -0.68, -0.77, -0.78, -0.80, -0.85, -0.88, -0.92)


def _build_structure(v0, thetas, kappas, sigmas, rhos):
    periods = tuple(
        Period(t, PeriodParams(kappa=k, theta=th, sigma=s, rho=r, mu=0.0))
        for t, th, k, s, r in zip(TENORS, thetas, kappas, sigmas, rhos)
    )
    return TermStructure(v0, periods)


@pytest.fixture(scope="session")
def constrained_structure():
    """Term structure from the published constrained parameter panel."""
    return _build_structure(CONSTRAINED_V0, CONSTRAINED_THETA, CONSTRAINED_KAPPA,
                            CONSTRAINED_SIGMA, CONSTRAINED_RHO)


@pytest.fixture(scope="session")
def unconstrained_structure():
    """Term structure from the published unconstrained parameter panel."""
    return _build_structure(UNCONSTRAINED_V0, UNCONSTRAINED_THETA, UNCONSTRAINED_KAPPA,
                            UNCONSTRAINED_SIGMA, UNCONSTRAINED_RHO)


@pytest.fixture(scope="session")
def case_surface():
    from tdheston import VolSurface

    return VolSurface(spot=SPOT, tenors=TENORS, moneyness=MONEYNESS, vols=VOLS)


@pytest.fixture(scope="session")
def case_curve():
    from tdheston import ForwardCurve

    return ForwardCurve(tenors=TENORS, forwards=FORWARDS)


@pytest.fixture(scope="session")
def calibrated_constrained(case_surface, case_curve):
    """Bootstrap fit with the constrained box (shared: it is expensive)."""
    from tdheston import Bounds, bootstrap_calibrate

    return bootstrap_calibrate(case_surface, case_curve, Bounds.constrained())


@pytest.fixture(scope="session")
def calibrated_unconstrained(case_surface, case_curve):
    """Bootstrap fit with the unconstrained box (shared: it is expensive)."""
    from tdheston import Bounds, bootstrap_calibrate

    return bootstrap_calibrate(case_surface, case_curve, Bounds.unconstrained())
