"""Piecewise-constant parameter term structure and multi-period composition.

A term structure is an initial variance plus an ordered list of periods, each
with its own Heston parameter set, the first period starting at time 0.  The
characteristic function out to a maturity t is built by a backward recursion:
starting from the latest period covering t with initial conditions
(0, i*v_arg), each earlier period receives the accumulated (C, D) of the
later ones as its terminal condition.  Because the exponent is affine in the
state, this recursion reproduces the law of the full time-inhomogeneous
process exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfHorizonError, ParameterDomainError
from .heston_cf import CfCoeffs, PeriodParams, _coeffs_raw

__all__ = [
    "Period",
    "TermStructure",
    "cf_coeffs_to",
    "marginal_cf",
    "parse_tenor",
    "format_tenor",
]

# Period boundaries closer than this (years) are treated as coincident.
_TIME_EPS = 1e-12


@dataclass(frozen=True)
class Period:
    """One parameter period, ending at ``end_time`` (years from now)."""

    end_time: float
    params: PeriodParams


@dataclass(frozen=True)
class TermStructure:
    """Initial variance plus ordered parameter periods starting at time 0."""

    v0: float
    periods: tuple[Period, ...]

    def __post_init__(self):
        if not np.isfinite(self.v0) or self.v0 < 0:
            raise ParameterDomainError(f"initial variance must be >= 0, got {self.v0}")
        if not self.periods:
            raise ParameterDomainError("term structure needs at least one period")
        object.__setattr__(self, "periods", tuple(self.periods))
        prev = 0.0
        for per in self.periods:
            if not np.isfinite(per.end_time) or per.end_time <= prev + _TIME_EPS:
                raise ParameterDomainError(
                    f"period end times must be strictly increasing from 0, got {per.end_time} after {prev}"
                )
            prev = per.end_time

    @property
    def horizon(self) -> float:
        return self.periods[-1].end_time

    def segments(self, t_start: float, t_end: float) -> list[tuple[float, PeriodParams]]:
        """Period slices covering (t_start, t_end], truncated at the window.

        Returned in calendar order as (length, params) pairs; maturities
        strictly inside a period shorten that period's contribution.
        """
        if t_start < -_TIME_EPS or t_end < t_start - _TIME_EPS:
            raise ParameterDomainError(f"invalid time window [{t_start}, {t_end}]")
        if t_end > self.horizon * (1 + 1e-12) + _TIME_EPS:
            raise OutOfHorizonError(
                f"maturity {t_end} lies beyond the term structure horizon {self.horizon}"
            )
        out = []
        lo = 0.0
        for per in self.periods:
            hi = min(per.end_time, t_end)
            seg_lo = max(lo, t_start)
            if hi > seg_lo + _TIME_EPS:
                out.append((hi - seg_lo, per.params))
            lo = per.end_time
            if lo >= t_end - _TIME_EPS:
                break
        return out

    def extended_to(self, t: float) -> "TermStructure":
        """Copy with the last period stretched to cover maturity t."""
        if t <= self.horizon:
            return self
        last = self.periods[-1]
        return TermStructure(self.v0, self.periods[:-1] + (Period(t, last.params),))


def _compose(segments, x, c0, d0):
    """Backward recursion over calendar-ordered (length, params) segments."""
    c, d = np.asarray(c0, dtype=complex), np.asarray(d0, dtype=complex)
    for tau, params in reversed(segments):
        c, d = _coeffs_raw(tau, x, c, d, params)
    return c, d


def cf_coeffs_to(ts: TermStructure, t: float, x_arg, v_arg=0.0) -> CfCoeffs:
    """Composed exponent coefficients of the joint transform at maturity t.

    Runs the backward recursion over all periods covering [0, t] with the
    accumulator initialized to (0, i*v_arg).  v_arg is the transform argument
    in the variance; pricing uses v_arg = 0 (marginal of the log-underlying).
    """
    if not np.isfinite(t) or t <= 0:
        raise ParameterDomainError(f"maturity must be > 0, got {t}")
    segs = ts.segments(0.0, t)
    c, d = _compose(segs, np.asarray(x_arg, dtype=complex), 0.0, 1j * np.asarray(v_arg, dtype=complex))
    if np.ndim(x_arg) == 0 and np.ndim(v_arg) == 0:
        return CfCoeffs(c=c.item(), d2=d.item(), d1=1j * complex(x_arg))
    shape = np.broadcast_shapes(np.shape(x_arg), np.shape(v_arg))
    return CfCoeffs(
        c=c.reshape(shape),
        d2=d.reshape(shape),
        d1=1j * np.broadcast_to(np.asarray(x_arg, dtype=complex), shape),
    )


def marginal_cf(ts: TermStructure, t: float, x_arg, x0: float, v0_override: float | None = None):
    """Marginal characteristic function E[exp(i*x_arg*x_t)] given x0, v0."""
    v0 = ts.v0 if v0_override is None else v0_override
    coeffs = cf_coeffs_to(ts, t, x_arg, 0.0)
    return np.exp(coeffs.c + coeffs.d2 * v0 + coeffs.d1 * x0)


def parse_tenor(text: str) -> float:
    """Tenor string to year-fraction: '<n>m' is n/12, '<n>y' is n years."""
    s = text.strip().lower()
    try:
        if s.endswith("m"):
            return int(s[:-1]) / 12.0
        if s.endswith("y"):
            return float(int(s[:-1]))
        return float(s)
    except ValueError:
        raise ParameterDomainError(f"cannot parse tenor {text!r}; use e.g. '3m', '2y' or a year-fraction") from None


def format_tenor(t: float) -> str:
    """Year-fraction back to the closest '<n>m'/'<n>y' label."""
    months = t * 12.0
    if abs(months - round(months)) < 1e-9 and round(months) % 12 == 0:
        return f"{int(round(months)) // 12}y"
    if abs(months - round(months)) < 1e-9:
        return f"{int(round(months))}m"
    return f"{t:.6g}"
