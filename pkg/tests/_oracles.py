"""Independent numerical oracles used by the test suite.

The Riccati oracle integrates the coefficient ODE system with a
step-size-controlled Runge-Kutta method (as a real 4-dimensional system, so
it shares nothing with the closed forms under test).
"""

import numpy as np
from scipy.integrate import solve_ivp


def riccati_ode_coeffs(tau, x, c0, d0, params, rtol=1e-11, atol=1e-13):
    """Integrate C' = i mu X + kappa theta D, D' = -(A D^2 + B D + M).

    A = -sigma^2/2, B = kappa - i X sigma rho, M = X(i + X)/2, from the
    terminal conditions C(0) = c0, D(0) = d0.  Returns (C(tau), D(tau)).
    """
    x = complex(x)
    a_coef = -0.5 * params.sigma**2
    b_coef = params.kappa - 1j * x * params.sigma * params.rho
    m_coef = 0.5 * x * (1j + x)

    def rhs(_t, y):
        c = y[0] + 1j * y[1]
        d = y[2] + 1j * y[3]
        dd = -(a_coef * d * d + b_coef * d + m_coef)
        dc = 1j * x * params.mu + params.kappa * params.theta * d
        return [dc.real, dc.imag, dd.real, dd.imag]

    y0 = [complex(c0).real, complex(c0).imag, complex(d0).real, complex(d0).imag]
    sol = solve_ivp(rhs, [0.0, tau], y0, method="DOP853", rtol=rtol, atol=atol)
    assert sol.success, sol.message
    y = sol.y[:, -1]
    return y[0] + 1j * y[1], y[2] + 1j * y[3]


def riccati_ode_chain(segments, x, rtol=1e-11, atol=1e-13):
    """Chain the ODE oracle across calendar-ordered (tau, params) segments.

    Matches the backward composition: the latest segment is integrated first
    from (0, 0) and each earlier one from the accumulated values.
    """
    c, d = 0.0 + 0.0j, 0.0 + 0.0j
    for tau, params in reversed(list(segments)):
        c, d = riccati_ode_coeffs(tau, x, c, d, params, rtol=rtol, atol=atol)
    return c, d


def normal_cdf(x):
    from math import erfc, sqrt

    return 0.5 * erfc(-x / sqrt(2.0))
