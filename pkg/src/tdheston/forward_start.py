"""Forward-start vanilla pricing and forward-skew extraction.

A forward-start vanilla pays (e^{x_v} - K e^{x_u})^+ where the strike ratio K
is fixed at t_u and the option expires at t_v.  Conditioning on the state at
t_u and normalizing by the forward F_u = E[e^{x_u}] turns the premium into

    price = discount * F_u * Etilde[(e^{xr} - K)^+],

an ordinary vanilla expectation on the return xr = x_v - x_u under a tilted
measure whose characteristic function is again exponential-affine: the
[t_u, t_v] coefficients are computed first, then composed through [0, t_u]
with the log-asset argument pinned at -i and the variance coefficient carried
as initial condition.  The vanilla inversion machinery then applies verbatim
with the ratio forward Etilde[e^{xr}] = phi_tilde(-i) = F_v/F_u.

The exponent constant returned here nets out the log-spot entirely (F_u is
evaluated at zero log-spot), so phi_tilde(X) = exp(c_tilde + d_tilde * v0)
and forward-start prices are exactly linear in the spot e^{x0}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateForwardError, NoSolutionError, ParameterDomainError
from .term_structure import TermStructure, _compose
from .transform_pricing import (
    DEFAULT_INVERSION,
    InversionConfig,
    _clamped,
    _tail_probabilities,
    _tilted,
    implied_vol,
)

__all__ = ["ForwardStartSpec", "SkewSurface", "forward_start_coeffs",
           "forward_start_price", "forward_skew"]


@dataclass(frozen=True)
class ForwardStartSpec:
    """Payoff (e^{x_v} - strike_ratio * e^{x_u})^+ fixing at t_u, expiring at t_v."""

    strike_ratio: float
    fix_time: float
    expiry: float
    discount: float = 1.0

    def __post_init__(self):
        if self.strike_ratio <= 0:
            raise ParameterDomainError(f"strike ratio must be > 0, got {self.strike_ratio}")
        if not 0 <= self.fix_time < self.expiry:
            raise ParameterDomainError(
                f"need 0 <= fix_time < expiry, got {self.fix_time}, {self.expiry}"
            )
        if not 0 < self.discount <= 1:
            raise ParameterDomainError(f"discount must lie in (0, 1], got {self.discount}")


@dataclass
class SkewSurface:
    """Forward implied-vol grid at a fixed tenor over (forward term, moneyness)."""

    tenor: float
    forward_terms: tuple[float, ...]
    moneyness: tuple[float, ...]
    vols: np.ndarray  # (n_terms, n_moneyness); NaN where inversion failed

    def __post_init__(self):
        self.forward_terms = tuple(self.forward_terms)
        self.moneyness = tuple(self.moneyness)
        self.vols = np.asarray(self.vols, dtype=float)
        if self.vols.shape != (len(self.forward_terms), len(self.moneyness)):
            raise ParameterDomainError(
                f"vols shape {self.vols.shape} does not match the grid "
                f"({len(self.forward_terms)} terms x {len(self.moneyness)} strikes)"
            )


def _return_cf_pieces(ts: TermStructure, t_u: float, t_v: float, v0: float):
    """Exponent pieces of the tilted return cf, plus ln F_u at zero log-spot.

    Returns (pieces, ln_fu) where pieces(X) -> (c_tilde, d_tilde) arrays.
    """
    if not 0 <= t_u < t_v:
        raise ParameterDomainError(f"need 0 <= fix {t_u} < expiry {t_v}")
    segs_uv = ts.segments(t_u, t_v)
    segs_0u = ts.segments(0.0, t_u)
    if segs_0u:
        c_u, d_u = _compose(segs_0u, np.asarray(-1j), 0.0, 0.0)
        ln_fu = (c_u + d_u * v0).item()
        if not np.isfinite(ln_fu):
            raise DegenerateForwardError(f"forward at fix date is degenerate: ln F_u = {ln_fu}")
    else:
        ln_fu = 0.0 + 0.0j

    def pieces(x):
        x = np.asarray(x, dtype=complex)
        c, d = _compose(segs_uv, x, 0.0, 0.0)
        if segs_0u:
            c, d = _compose(segs_0u, np.asarray(-1j), c, d)
        return c - ln_fu, d

    return pieces, ln_fu


def forward_start_coeffs(ts: TermStructure, t_u: float, t_v: float, x_arg):
    """Exponent (c_tilde, d_tilde) of the tilted return cf over [t_u, t_v].

    The tilted cf of the return x_v - x_u is exp(c_tilde + d_tilde * v0) with
    v0 = ts.v0; the log-spot cancels and does not appear.  Scalar x_arg gives
    complex scalars, arrays give arrays.
    """
    pieces, _ = _return_cf_pieces(ts, t_u, t_v, ts.v0)
    c, d = pieces(x_arg)
    if np.ndim(x_arg) == 0:
        return c.item(), d.item()
    return c.reshape(np.shape(x_arg)), d.reshape(np.shape(x_arg))


def _forward_start_prices(ts: TermStructure, t_u: float, t_v: float, ratios,
                          discount: float, x0: float, v0: float,
                          config: InversionConfig) -> np.ndarray:
    """Batch forward-start prices for one (t_u, t_v), sharing cf evaluations."""
    ratios = np.asarray(ratios, dtype=float)
    pieces, ln_fu = _return_cf_pieces(ts, t_u, t_v, v0)

    def phi(x):
        c, d = pieces(x)
        return np.exp(c + d * v0)

    tilted_cf, ratio_fwd_c = _tilted(phi)
    ratio_fwd = ratio_fwd_c.real
    f_u = float(np.exp(x0) * np.exp(ln_fu).real)
    a = np.log(ratios)
    p_tilde = _tail_probabilities(tilted_cf, a, config)
    p_plain = _tail_probabilities(phi, a, config)
    raw = discount * f_u * (ratio_fwd * p_tilde - ratios * p_plain)
    return np.array(
        [_clamped(p, f_u * max(ratio_fwd, k), config.abs_tol, "forward-start price")
         for p, k in zip(raw, ratios)]
    )


def forward_start_price(ts: TermStructure, spec: ForwardStartSpec, x0: float, v0: float,
                        config: InversionConfig | None = None) -> float:
    """Price a forward-start vanilla: discount * F_u * (R*Ptilde - K*P).

    R = phi_tilde(-i) is the ratio forward F_v/F_u (1 under zero drift), and
    the two probabilities come from the same inversion machinery as spot
    vanillas, applied to the tilted return cf at log-strike ln K.
    """
    cfg = config or DEFAULT_INVERSION
    return float(
        _forward_start_prices(ts, spec.fix_time, spec.expiry, [spec.strike_ratio],
                              spec.discount, x0, v0, cfg)[0]
    )


def forward_skew(ts: TermStructure, tenor: float, forward_terms, moneyness,
                 x0: float, v0: float, config: InversionConfig | None = None) -> SkewSurface:
    """Forward implied-vol surface for a fixed tenor over (t_u, strike ratio).

    Each option is priced forward-start and inverted through the Black
    formula on the ratio forward R = F_v/F_u (F_u is the numeraire scale, so
    the normalized price R*Ptilde - K*P is what the Black call must match).
    Cells whose implied vol does not exist are reported as NaN.
    """
    cfg = config or DEFAULT_INVERSION
    terms = tuple(float(t) for t in forward_terms)
    ratios = tuple(float(k) for k in moneyness)
    vols = np.full((len(terms), len(ratios)), np.nan)
    for i, t_u in enumerate(terms):
        t_v = t_u + tenor
        # x0 = 0 prices are already per unit of the fix-date forward F_u
        prices = _forward_start_prices(ts, t_u, t_v, ratios, 1.0, 0.0, v0, cfg)
        pieces, _ = _return_cf_pieces(ts, t_u, t_v, v0)
        c, d = pieces(np.asarray(-1j))
        ratio_fwd = float(np.exp(c + d * v0).real.item())
        for j, k in enumerate(ratios):
            try:
                vols[i, j] = implied_vol(float(prices[j]), ratio_fwd, k, tenor,
                                         1.0, is_call=True)
            except NoSolutionError:
                vols[i, j] = np.nan
    return SkewSurface(tenor=tenor, forward_terms=terms, moneyness=ratios, vols=vols)
