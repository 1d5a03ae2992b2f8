"""Closed-form Heston characteristic-function coefficients for one parameter period.

The log-underlying x_t and its variance v_t follow

    dx_t = (mu - v_t/2) dt + sqrt(v_t) dW_t
    dv_t = kappa (theta - v_t) dt + sigma sqrt(v_t) dY_t,   d<W, Y>_t = rho dt.

Over a period of length tau with constant parameters, the conditional
expectation E[exp(C0 + D0 v_T + i X x_T) | x_t, v_t] equals
exp(C(tau) + D(tau) v_t + i X x_t) where (C, D) solve the Riccati system

    D' = (sigma^2/2) D^2 - (kappa - i rho sigma X) D - X(i + X)/2,   D(0) = D0,
    C' = i mu X + kappa theta D,                                     C(0) = C0.

The closed form implemented here uses the decaying-exponential branch: the
discriminant root d = sqrt(b^2 + sigma^2 X(i + X)) with b = kappa - i rho
sigma X is taken as the principal square root (Re d >= 0), so exp(-d tau)
never grows with maturity and the complex logarithm stays on its principal
branch without rotation corrections.

Compared to the textbook arrangement in terms of g = (b - d)/(b + d), the
formulas below are algebraically identical but reorganized so that no
intermediate divides by (b + d), by the g-denominator, or by sigma^2 times a
cancelling difference.  This keeps the evaluation finite and accurate at the
otherwise delicate points: tau = 0, X in {0, -i}, d -> 0, and the
near-deterministic limit sigma -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalSingularityError, ParameterDomainError

__all__ = ["PeriodParams", "CfCoeffs", "period_coeffs", "evaluate_cf"]

# sigma below this is rejected: the closed form divides by sigma^2 and the
# near-deterministic limit is exercised with small-but-positive sigma instead.
SIGMA_MIN = 1e-8

# |2 + gnum*tau*f| below this means the D/C denominator is numerically gone.
_DENOM_TOL = 1e-13


@dataclass(frozen=True)
class PeriodParams:
    """Heston parameters holding on one period.

    kappa : mean-reversion rate of the variance (1/year)
    theta : long-run variance (vol^2 units, 1/year)
    sigma : volatility of the variance process
    rho   : correlation between the underlying and variance drivers
    mu    : risk-neutral drift of the underlying (r - q); 0 for options
            quoted directly on a forward
    """

    kappa: float
    theta: float
    sigma: float
    rho: float
    mu: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.kappa, self.theta, self.sigma, self.rho, self.mu])):
            raise ParameterDomainError(f"non-finite Heston parameters: {self}")
        if self.kappa < 0:
            raise ParameterDomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.theta < 0:
            raise ParameterDomainError(f"theta must be >= 0, got {self.theta}")
        if self.sigma < SIGMA_MIN:
            raise ParameterDomainError(
                f"sigma must be >= {SIGMA_MIN} (closed form divides by sigma^2), got {self.sigma}"
            )
        if abs(self.rho) > 1:
            raise ParameterDomainError(f"rho must lie in [-1, 1], got {self.rho}")

    @property
    def feller_satisfied(self) -> bool:
        """Whether 2 kappa theta > sigma^2 (variance cannot reach zero)."""
        return 2.0 * self.kappa * self.theta > self.sigma**2


@dataclass(frozen=True)
class CfCoeffs:
    """Affine exponent of a characteristic function: exp(c + d2*v + d1*x).

    For the Heston family d1 = i*X identically; only c and d2 evolve when
    periods are composed.  Fields are complex scalars in the public contract
    but the pricing engine threads numpy arrays through them unchanged.
    """

    c: complex
    d2: complex
    d1: complex


def _em1(z):
    """(1 - exp(-z))/z for complex z, series-protected near z = 0."""
    out = np.empty_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1 - zs / 2 + zs * zs / 6 - zs**3 / 24
    zb = z[~small]
    out[~small] = (1 - np.exp(-zb)) / zb
    return out


def _log1p(w):
    """Principal log(1 + w) for complex w, series-protected near w = 0."""
    out = np.empty_like(w)
    small = np.abs(w) < 1e-5
    ws = w[small]
    out[small] = ws * (1 - ws / 2 + ws * ws / 3 - ws**3 / 4)
    out[~small] = np.log(1 + w[~small])
    return out


def _coeffs_raw(tau: float, x, c0, d0, p: PeriodParams):
    """Vectorized (C, D) over one period; x, c0, d0 broadcast as arrays."""
    x, c0, d0 = np.broadcast_arrays(
        np.atleast_1d(np.asarray(x, dtype=complex)),
        np.atleast_1d(np.asarray(c0, dtype=complex)),
        np.atleast_1d(np.asarray(d0, dtype=complex)),
    )

    s2 = p.sigma * p.sigma
    m2 = x * (1j + x)
    b = p.kappa - 1j * p.rho * p.sigma * x
    d = np.sqrt(b * b + s2 * m2)

    # b - d with the cancellation-free identity (b - d)(b + d) = -sigma^2 m2,
    # picking whichever of the two forms avoids subtractive cancellation.
    bpd = b + d
    naive = b - d
    use_ratio = np.abs(naive) < np.abs(bpd)
    safe = np.where(use_ratio, bpd, 1.0)
    bmd = np.where(use_ratio, -s2 * m2 / safe, naive)

    z = d * tau
    e = np.exp(-z)
    f = _em1(z)

    gnum = bmd - s2 * d0
    w = gnum * tau * f
    lam = 2.0 + w
    if np.any(np.abs(lam) < _DENOM_TOL):
        raise NumericalSingularityError(
            f"characteristic-function denominator within {_DENOM_TOL} of zero "
            f"(tau={tau}, params={p})"
        )

    d_out = (d0 * (1 + e) - tau * f * (m2 + b * d0)) / lam
    c_out = c0 + 1j * p.mu * x * tau + (p.kappa * p.theta / s2) * (bmd * tau - 2 * _log1p(w / 2))

    if not (np.isfinite(c_out).all() and np.isfinite(d_out).all()):
        raise NumericalSingularityError(
            f"non-finite characteristic-function coefficients (tau={tau}, params={p})"
        )
    return c_out, d_out


def period_coeffs(tau: float, x_arg, c0, d0, params: PeriodParams) -> CfCoeffs:
    """Solve the one-period Riccati system in closed form.

    Parameters
    ----------
    tau : float
        Period length in years, >= 0.
    x_arg : complex or ndarray
        Transform argument of the log-underlying.  Complex arguments are
        admitted (analytic continuation); pricing uses X - i and -i.
    c0, d0 : complex or ndarray
        Initial conditions C(0) and D(0).  (0, 0) gives the plain marginal
        coefficients; d0 = i*V gives the joint transform in variance; feeding
        a later period's d2 back in composes periods.
    params : PeriodParams

    Returns
    -------
    CfCoeffs
        (c, d2, d1) with d1 = i*x_arg.  Scalar inputs give complex scalars;
        array inputs give arrays.
    """
    if not np.isfinite(tau) or tau < 0:
        raise ParameterDomainError(f"period length must be a finite year-fraction >= 0, got {tau}")
    c, d = _coeffs_raw(tau, x_arg, c0, d0, params)
    if np.ndim(x_arg) == 0 and np.ndim(c0) == 0 and np.ndim(d0) == 0:
        return CfCoeffs(c=c.item(), d2=d.item(), d1=1j * complex(x_arg))
    shape = np.broadcast_shapes(np.shape(x_arg), np.shape(c0), np.shape(d0))
    return CfCoeffs(
        c=c.reshape(shape),
        d2=d.reshape(shape),
        d1=1j * np.broadcast_to(np.asarray(x_arg, dtype=complex), shape),
    )


def evaluate_cf(coeffs: CfCoeffs, x0, v0):
    """Evaluate exp(c + d2*v0 + d1*x0) for coefficients from period_coeffs."""
    return np.exp(coeffs.c + coeffs.d2 * v0 + coeffs.d1 * x0)
