"""Fourier inversion of characteristic functions to probabilities and prices.

Tail probabilities come from the inversion formula

    P(x > a) = 1/2 + (1/pi) * integral_0^inf Re( phi(X) e^{-iXa} / (iX) ) dX,

valid whenever phi(-X) is the complex conjugate of phi(X).  The integrand's
apparent singularity at X = 0 is removable: its real part tends to the finite
limit Im(phi'(0)) - a, so the first sliver [0, min_arg] is handled by a
one-term Taylor panel and never divides by a tiny X.

A call is then priced as discount * (F * Ptilde - K * P) where F = phi(-i) is
the forward and Ptilde is the tail probability under the share measure
phi(X - i)/phi(-i); puts follow from parity.

Quadrature is direct adaptive Gauss-Legendre: the band [min_arg, max_arg] is
split into panels, each integrated at the configured order with a half-order
companion rule as error estimate, failing panels bisected; past max_arg the
band is extended in doubling windows until a whole window contributes less
than abs_tol.  Several strikes sharing one characteristic function are
integrated in a single pass over shared evaluation nodes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateForwardError,
    NoSolutionError,
    ParameterDomainError,
    QuadratureError,
)
from .term_structure import TermStructure, _compose

__all__ = [
    "InversionConfig",
    "VanillaSpec",
    "tail_probability",
    "tilted_tail_probability",
    "vanilla_price",
    "black_scholes_price",
    "implied_vol",
]

log = logging.getLogger(__name__)

# Total adaptive-panel budget per inversion call and tail-window doubling cap.
_MAX_PANELS = 4000
_MAX_WINDOWS = 24


@dataclass(frozen=True)
class InversionConfig:
    """Quadrature controls for the inversion integral."""

    abs_tol: float = 1e-9
    max_arg: float = 200.0
    panel_order: int = 32
    min_arg: float = 1e-8

    def __post_init__(self):
        if self.abs_tol <= 0:
            raise ParameterDomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not 0 < self.min_arg < self.max_arg:
            raise ParameterDomainError(
                f"need 0 < min_arg < max_arg, got {self.min_arg}, {self.max_arg}"
            )
        if self.panel_order < 2:
            raise ParameterDomainError(f"panel_order must be >= 2, got {self.panel_order}")


DEFAULT_INVERSION = InversionConfig()


@dataclass(frozen=True)
class VanillaSpec:
    """A European vanilla option: strike, maturity, side, discount factor."""

    strike: float
    maturity: float
    is_call: bool
    discount: float = 1.0

    def __post_init__(self):
        if self.strike <= 0:
            raise ParameterDomainError(f"strike must be > 0, got {self.strike}")
        if self.maturity <= 0:
            raise ParameterDomainError(f"maturity must be > 0, got {self.maturity}")
        if not 0 < self.discount <= 1:
            raise ParameterDomainError(f"discount must lie in (0, 1], got {self.discount}")


@lru_cache(maxsize=16)
def _gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached Gauss-Legendre nodes/weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(order)


class _PanelBudgetExceeded(Exception):
    """Internal: carries a best-effort window estimate for QuadratureError."""

    def __init__(self, best_effort: np.ndarray):
        self.best_effort = best_effort


def _panel_integrals(cf, panels: np.ndarray, order: int, a: np.ndarray) -> np.ndarray:
    """Integral of Re(phi e^{-iXa}/(iX)) on each panel, per strike.

    panels: (m, 2) bounds; returns (m, n_strikes).  One vectorized cf call
    serves all panels and strikes.
    """
    nodes, weights = _gauss_rule(order)
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    phi = np.asarray(cf(x), dtype=complex)
    # Re(z/(iX)) = Im(z)/X for real X
    h = np.imag(phi[:, None] * np.exp(-1j * np.outer(x, a))) / x[:, None]
    h = h.reshape(len(panels), order, len(a))
    return half[:, None] * np.einsum("j,kja->ka", weights, h)


def _adaptive_window(cf, lo: float, hi: float, a: np.ndarray, tol: float,
                     order: int, budget: list[int], phase_rate: float) -> np.ndarray:
    """Adaptively integrate one window for all strikes; shares cf nodes."""
    width = hi - lo
    osc = width * (phase_rate + 0.25) / (2 * math.pi)
    n0 = int(np.clip(math.ceil(osc / 4), 8, 64))
    edges = np.linspace(lo, hi, n0 + 1)
    panels = np.column_stack([edges[:-1], edges[1:]])
    half_order = max(order // 2, 4)

    acc = np.zeros(len(a))
    while len(panels):
        budget[0] -= len(panels)
        i_hi = _panel_integrals(cf, panels, order, a)
        if budget[0] < 0:
            raise _PanelBudgetExceeded(acc + i_hi.sum(axis=0))
        i_lo = _panel_integrals(cf, panels, half_order, a)
        err = np.max(np.abs(i_hi - i_lo), axis=1)
        tol_k = np.maximum(tol * (panels[:, 1] - panels[:, 0]) / width, 1e-16)
        ok = err <= tol_k
        acc += i_hi[ok].sum(axis=0)
        bad = panels[~ok]
        if len(bad) == 0:
            break
        mids = 0.5 * (bad[:, 0] + bad[:, 1])
        panels = np.vstack(
            [np.column_stack([bad[:, 0], mids]), np.column_stack([mids, bad[:, 1]])]
        )
    return acc


def _tail_probabilities(cf, log_strikes, config: InversionConfig) -> np.ndarray:
    """P(x > a) for every a in log_strikes, sharing cf evaluations."""
    a = np.atleast_1d(np.asarray(log_strikes, dtype=float))
    if __debug__:
        phi_zero = complex(np.asarray(cf(np.array([0.0])), dtype=complex).ravel()[0])
        assert abs(phi_zero - 1.0) <= 1e-9, f"cf(0) = {phi_zero}, expected 1"

    # One-term Taylor panel over [0, min_arg]: width * finite limit of the
    # integrand, evaluated at min_arg (= Im(phi m e^{-ima}) exactly).
    phi_m = np.asarray(cf(np.array([config.min_arg])), dtype=complex).ravel()[0]
    total = np.imag(phi_m * np.exp(-1j * config.min_arg * a))

    # The integrand's oscillation rate is |a - E[x]|, not |a|: phi itself
    # carries the phase exp(iX E[x]).  Estimate the mean from phi near zero
    # to size the initial panels; adaptivity corrects any underestimate.
    mean_est = float(np.imag(np.log(phi_m)) / config.min_arg) if phi_m != 0 else 0.0
    if not np.isfinite(mean_est):
        mean_est = 0.0
    phase_rate = float(np.max(np.abs(a - mean_est)))

    budget = [_MAX_PANELS]
    try:
        total = total + _adaptive_window(
            cf, config.min_arg, config.max_arg, a, config.abs_tol,
            config.panel_order, budget, phase_rate,
        )
        lo = config.max_arg
        for _ in range(_MAX_WINDOWS):
            contrib = _adaptive_window(
                cf, lo, 2 * lo, a, config.abs_tol, config.panel_order, budget, phase_rate
            )
            total = total + contrib
            if np.max(np.abs(contrib)) < config.abs_tol:
                break
            lo = 2 * lo
        else:
            partial = np.clip(0.5 + total / math.pi, 0.0, 1.0)
            raise QuadratureError(
                f"inversion integral still contributing above abs_tol={config.abs_tol} "
                f"after extending to X = {2 * lo}",
                partial=partial[0] if partial.size == 1 else partial,
            )
    except _PanelBudgetExceeded as exc:
        partial = np.clip(0.5 + (total + exc.best_effort) / math.pi, 0.0, 1.0)
        raise QuadratureError(
            f"adaptive panel budget ({_MAX_PANELS}) exhausted",
            partial=partial[0] if partial.size == 1 else partial,
        ) from None
    return np.clip(0.5 + total / math.pi, 0.0, 1.0)


def tail_probability(cf, a: float, config: InversionConfig | None = None) -> float:
    """P(x > a) by Fourier inversion of a marginal characteristic function.

    cf must be vectorized: given a real ndarray of transform arguments it
    returns the corresponding complex ndarray, with cf(0) = 1 and conjugate
    symmetry cf(-X) = conj(cf(X)).
    """
    cfg = config or DEFAULT_INVERSION
    return float(_tail_probabilities(cf, [a], cfg)[0])


def _tilted(cf):
    """Share-measure cf X -> cf(X - i)/cf(-i); checks the normalizer."""
    f_u = complex(np.asarray(cf(np.array([-1j])), dtype=complex).ravel()[0])
    if not np.isfinite(f_u) or abs(f_u) < 1e-300:
        raise DegenerateForwardError(f"phi(-i) = {f_u}; cannot normalize the tilted measure")

    def tilted_cf(x):
        return np.asarray(cf(np.asarray(x) - 1j), dtype=complex) / f_u

    return tilted_cf, f_u


def tilted_tail_probability(cf, a: float, config: InversionConfig | None = None) -> float:
    """Tail probability under the share measure phi(X - i)/phi(-i).

    cf must accept complex arguments (it is evaluated at X - i).
    """
    cfg = config or DEFAULT_INVERSION
    tilted_cf, _ = _tilted(cf)
    return float(_tail_probabilities(tilted_cf, [a], cfg)[0])


def _marginal_evaluator(ts: TermStructure, t: float, x0: float, v0: float):
    """Vectorized marginal cf of the log-underlying at maturity t."""
    segments = ts.segments(0.0, t)

    def phi(x):
        x = np.asarray(x, dtype=complex)
        c, d = _compose(segments, x, 0.0, 0.0)
        return np.exp(c + d * v0 + 1j * x * x0)

    return phi


def _clamped(raw: float, scale: float, abs_tol: float, what: str) -> float:
    if raw < 0:
        if raw < -abs_tol * scale:
            log.warning("%s clamped to 0 from %g (beyond quadrature tolerance)", what, raw)
        return 0.0
    return raw


def _vanilla_prices(ts: TermStructure, maturity: float, strikes, is_calls, discount: float,
                    x0: float, v0: float, config: InversionConfig) -> np.ndarray:
    """Batch vanilla pricing for one maturity; strikes share cf evaluations."""
    strikes = np.asarray(strikes, dtype=float)
    is_calls = np.asarray(is_calls, dtype=bool)
    phi = _marginal_evaluator(ts, maturity, x0, v0)
    tilted_cf, f_fwd = _tilted(phi)
    forward = f_fwd.real
    a = np.log(strikes)
    p_tilde = _tail_probabilities(tilted_cf, a, config)
    p_plain = _tail_probabilities(phi, a, config)
    calls = discount * (forward * p_tilde - strikes * p_plain)
    prices = np.where(is_calls, calls, calls - discount * (forward - strikes))
    return np.array(
        [_clamped(p, max(forward, k), config.abs_tol, "vanilla price")
         for p, k in zip(prices, strikes)]
    )


def vanilla_price(ts: TermStructure, spec: VanillaSpec, x0: float, v0: float,
                  config: InversionConfig | None = None) -> float:
    """Price a European vanilla under the term structure.

    Calls are discount * (F * Ptilde - K * P) with F = phi(-i); puts follow
    from put-call parity (one pair of inversions either way).
    """
    cfg = config or DEFAULT_INVERSION
    return float(
        _vanilla_prices(ts, spec.maturity, [spec.strike], [spec.is_call],
                        spec.discount, x0, v0, cfg)[0]
    )


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def black_scholes_price(forward: float, strike: float, vol: float, t: float,
                        discount: float = 1.0, is_call: bool = True) -> float:
    """Black formula on a forward: discount * Black(F, K, vol, t)."""
    stdev = vol * math.sqrt(t) if t > 0 else 0.0
    if stdev <= 0:
        intrinsic = forward - strike if is_call else strike - forward
        return discount * max(intrinsic, 0.0)
    d1 = math.log(forward / strike) / stdev + 0.5 * stdev
    d2 = d1 - stdev
    if is_call:
        return discount * (forward * _norm_cdf(d1) - strike * _norm_cdf(d2))
    return discount * (strike * _norm_cdf(-d2) - forward * _norm_cdf(-d1))


# Bracket for the implied-vol search; prices at the cap are treated as
# unattainable rather than extrapolated.
_VOL_MAX = 5.0


def implied_vol(price: float, forward: float, strike: float, t: float,
                discount: float = 1.0, is_call: bool = True) -> float:
    """Invert the Black formula for the annualized volatility.

    The root is bracketed on vol in [0, 5]; the zero-vol endpoint prices to
    discounted intrinsic exactly, so prices arbitrarily close to intrinsic
    resolve to vanishing vols.  Prices outside the no-arbitrage band raise
    NoSolutionError.
    """
    if forward <= 0 or strike <= 0 or t <= 0 or not 0 < discount <= 1:
        raise ParameterDomainError(
            f"invalid implied-vol inputs: forward={forward}, strike={strike}, t={t}, discount={discount}"
        )
    intrinsic = discount * max(forward - strike if is_call else strike - forward, 0.0)
    upper = discount * (forward if is_call else strike)
    slack = 1e-12 * max(forward, strike)
    if price < intrinsic - slack or price > upper + slack:
        raise NoSolutionError(
            f"price {price} outside no-arbitrage bounds [{intrinsic}, {upper}]"
        )

    def gap(vol: float) -> float:
        return black_scholes_price(forward, strike, vol, t, discount, is_call) - price

    if gap(0.0) >= 0:
        return 0.0
    if gap(_VOL_MAX) < 0:
        raise NoSolutionError(f"price {price} above the vol = {_VOL_MAX} bracket")
    return float(brentq(gap, 0.0, _VOL_MAX, xtol=1e-15, rtol=8.9e-16, maxiter=200))
