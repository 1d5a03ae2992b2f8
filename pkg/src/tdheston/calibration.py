"""Quote preprocessing, bounded-parameter transform, simplex minimizer and
the bootstrap calibration of the parameter term structure.

Market vanilla quotes on the spot are restated as undiscounted options on the
forward delivered at the last maturity P: a quote with strike K and maturity
T_i becomes an option on F^P with adjusted strike K * F0P / F0Ti, the same
implied volatility, and a target price normalized by F0P in basis points.
Calls are used above F0P, puts below.

Calibration is a bootstrap: period boundaries sit at the quoted maturities;
the first period fits (v0, theta, kappa, sigma, rho) to the first maturity's
quotes, v0 is then frozen, and every later period fits (theta, kappa, sigma,
rho) to its own maturity with all earlier periods fixed.  Each fit minimizes
the weighted mean-square price error (normalized bp) with a Nelder-Mead
simplex running in tanh-transformed coordinates, so box bounds never bind.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterDomainError, TdHestonError
from .heston_cf import SIGMA_MIN, PeriodParams
from .term_structure import Period, TermStructure
from .transform_pricing import (
    DEFAULT_INVERSION,
    InversionConfig,
    _vanilla_prices,
    black_scholes_price,
)

__all__ = [
    "VolSurface",
    "ForwardCurve",
    "Quote",
    "QuoteGrid",
    "Bounds",
    "CalibrationResult",
    "quotes_from_surface",
    "param_transform",
    "param_transform_inverse",
    "objective",
    "nelder_mead_minimize",
    "bootstrap_calibrate",
]

log = logging.getLogger(__name__)

# ATM-outward weights per moneyness-index distance from the ATM column.
DEFAULT_WEIGHT_TIERS = (100.0, 45.0, 35.0, 5.0)

# Finite stand-in for a failed pricing inside the objective: the simplex
# needs comparable values, not exceptions.
_PENALTY = 1e12


@dataclass(frozen=True)
class VolSurface:
    """Implied-vol grid (decimals) over moneyness rows and tenor columns."""

    spot: float
    tenors: tuple[float, ...]
    moneyness: tuple[float, ...]
    vols: np.ndarray  # shape (len(moneyness), len(tenors))

    def __post_init__(self):
        object.__setattr__(self, "tenors", tuple(float(t) for t in self.tenors))
        object.__setattr__(self, "moneyness", tuple(float(m) for m in self.moneyness))
        object.__setattr__(self, "vols", np.asarray(self.vols, dtype=float))
        if self.spot <= 0:
            raise DataError(f"spot must be > 0, got {self.spot}")
        if self.vols.shape != (len(self.moneyness), len(self.tenors)):
            raise DataError(
                f"vol grid shape {self.vols.shape} does not match "
                f"{len(self.moneyness)} moneyness rows x {len(self.tenors)} tenors"
            )
        if not (self.vols > 0).all():
            raise DataError("implied vols must all be > 0")
        if any(b <= a for a, b in zip(self.tenors, self.tenors[1:])) or self.tenors[0] <= 0:
            raise DataError(f"tenors must be positive and increasing, got {self.tenors}")

    @property
    def atm_index(self) -> int:
        return int(np.argmin(np.abs(np.asarray(self.moneyness) - 1.0)))


@dataclass(frozen=True)
class ForwardCurve:
    """Forwards of the underlying delivered at each tenor; last one is F0P."""

    tenors: tuple[float, ...]
    forwards: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tenors", tuple(float(t) for t in self.tenors))
        object.__setattr__(self, "forwards", tuple(float(f) for f in self.forwards))
        if len(self.tenors) != len(self.forwards):
            raise DataError("forward curve tenors and values differ in length")
        if not all(f > 0 for f in self.forwards):
            raise DataError("forwards must be > 0")

    @property
    def base(self) -> float:
        """The delivery forward F0P used for strike adjustment and normalization."""
        return self.forwards[-1]

    def forward_at(self, tenor: float) -> float:
        for t, f in zip(self.tenors, self.forwards):
            if abs(t - tenor) < 1e-9:
                return f
        raise DataError(f"no forward quoted for tenor {tenor}")


@dataclass(frozen=True)
class Quote:
    """One forward-measure vanilla target (undiscounted, bp of the base forward)."""

    maturity: float
    adjusted_strike: float
    is_call: bool
    target_bp: float
    weight: float


@dataclass(frozen=True)
class QuoteGrid:
    """Preprocessed calibration quotes plus the normalizing base forward."""

    base_forward: float
    quotes: tuple[Quote, ...]

    def by_maturity(self) -> dict[float, list[Quote]]:
        out: dict[float, list[Quote]] = {}
        for q in self.quotes:
            out.setdefault(q.maturity, []).append(q)
        return dict(sorted(out.items()))


def quotes_from_surface(surface: VolSurface, curve: ForwardCurve,
                        weight_scheme=None) -> QuoteGrid:
    """Restate a spot vol surface as adjusted-strike quotes on the base forward.

    For each (tenor, moneyness): strike = moneyness * spot on the spot quote,
    adjusted_strike = strike * F0P / F0Ti, side = call iff the adjusted strike
    exceeds F0P, and the target is the undiscounted Black price on F0P at the
    quoted vol, normalized by F0P and expressed in basis points.

    weight_scheme, when given, is a list of weights parallel to the surface's
    moneyness rows; the default applies the ATM-outward tiers.
    """
    if weight_scheme is not None:
        if len(weight_scheme) != len(surface.moneyness):
            raise DataError("weight scheme length must match the moneyness rows")
        weights = [float(w) for w in weight_scheme]
        if any(w <= 0 for w in weights):
            raise DataError("weights must be > 0")
    else:
        atm = surface.atm_index
        weights = [
            DEFAULT_WEIGHT_TIERS[min(abs(i - atm), len(DEFAULT_WEIGHT_TIERS) - 1)]
            for i in range(len(surface.moneyness))
        ]

    base = curve.base
    quotes = []
    for j, tenor in enumerate(surface.tenors):
        f_i = curve.forward_at(tenor)
        for i, m in enumerate(surface.moneyness):
            strike = m * surface.spot
            adjusted = strike * base / f_i
            is_call = adjusted > base
            vol = float(surface.vols[i, j])
            price = black_scholes_price(base, adjusted, vol, tenor, 1.0, is_call)
            quotes.append(
                Quote(
                    maturity=tenor,
                    adjusted_strike=adjusted,
                    is_call=is_call,
                    target_bp=price / base * 1e4,
                    weight=weights[i],
                )
            )
    return QuoteGrid(base_forward=base, quotes=tuple(quotes))


# ---------------------------------------------------------------------------
# bounded-parameter transform


def param_transform(p_tilde: float, lo: float, hi: float, m: float = 100.0) -> float:
    """Map an unbounded value into (lo, hi) via a soft tanh squash.

    p = lo + (hi - lo)/2 * (1 + tanh(p_tilde/m)); the transition constant m
    flattens the squash so simplex steps in the unbounded coordinate remain
    informative.  The result is nudged strictly inside the interval even when
    tanh saturates in floating point.
    """
    if not lo < hi:
        raise ParameterDomainError(f"need lo < hi, got [{lo}, {hi}]")
    if m <= 0:
        raise ParameterDomainError(f"transition constant must be > 0, got {m}")
    p = lo + 0.5 * (hi - lo) * (1.0 + math.tanh(p_tilde / m))
    return min(max(p, np.nextafter(lo, hi)), np.nextafter(hi, lo))


def param_transform_inverse(p: float, lo: float, hi: float, m: float = 100.0) -> float:
    """Inverse of param_transform for p strictly inside (lo, hi)."""
    if not lo < hi:
        raise ParameterDomainError(f"need lo < hi, got [{lo}, {hi}]")
    if not lo < p < hi:
        raise ParameterDomainError(f"{p} is not strictly inside ({lo}, {hi})")
    return m * math.atanh(2.0 * (p - lo) / (hi - lo) - 1.0)


@dataclass(frozen=True)
class Bounds:
    """Box bounds per parameter plus the tanh transition constant."""

    v0: tuple[float, float] = (0.0, 1.0)
    theta: tuple[float, float] = (0.0, 1.0)
    kappa: tuple[float, float] = (0.0, 20.0)
    sigma: tuple[float, float] = (0.0, 1.5)
    rho: tuple[float, float] = (-1.0, 1.0)
    m: float = 100.0

    def __post_init__(self):
        for name in ("v0", "theta", "kappa", "sigma", "rho"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ParameterDomainError(f"{name} bounds must satisfy lo < hi, got [{lo}, {hi}]")
        if not (-1 <= self.rho[0] < self.rho[1] <= 1):
            raise ParameterDomainError(f"rho bounds must lie within [-1, 1], got {self.rho}")
        if self.m <= 0:
            raise ParameterDomainError(f"transition constant must be > 0, got {self.m}")

    @classmethod
    def constrained(cls) -> "Bounds":
        """Narrow search box (notably sigma <= 1.5, kappa <= 20)."""
        return cls()

    @classmethod
    def unconstrained(cls) -> "Bounds":
        """Wide search box: all positive parameters up to 100."""
        return cls(v0=(0.0, 100.0), theta=(0.0, 100.0), kappa=(0.0, 100.0),
                   sigma=(0.0, 100.0), rho=(-1.0, 1.0))


# ---------------------------------------------------------------------------
# objective and minimizer


def objective(candidate: PeriodParams, fixed_prefix: TermStructure | None,
              quotes, x0: float, *, v0: float, end_time: float, base_forward: float,
              config: InversionConfig | None = None) -> float:
    """Weighted mean-square price error (bp^2) of one period candidate.

    All quotes must share one maturity inside the candidate period; earlier
    periods come frozen in fixed_prefix.  Pricing failures return a large
    finite penalty so the simplex can keep moving.
    """
    cfg = config or DEFAULT_INVERSION
    quotes = list(quotes)
    maturities = {q.maturity for q in quotes}
    if len(maturities) != 1:
        raise ParameterDomainError(f"objective expects a single maturity, got {sorted(maturities)}")
    maturity = maturities.pop()
    prefix_periods = fixed_prefix.periods if fixed_prefix is not None else ()
    try:
        ts = TermStructure(v0, prefix_periods + (Period(end_time, candidate),))
        prices = _vanilla_prices(
            ts, maturity,
            [q.adjusted_strike for q in quotes],
            [q.is_call for q in quotes],
            1.0, x0, v0, cfg,
        )
    except TdHestonError:
        return _PENALTY
    model_bp = prices / base_forward * 1e4
    w = np.array([q.weight for q in quotes])
    target = np.array([q.target_bp for q in quotes])
    return float(np.sum(w * (model_bp - target) ** 2) / np.sum(w))


def nelder_mead_minimize(f, start, *, max_iter: int = 5000, x_tol: float = 1e-8,
                         f_tol: float = 1e-12, initial_step: float = 0.05):
    """Derivative-free simplex minimization (reflect/expand/contract/shrink).

    Runs until the simplex diameter falls below x_tol or the best-worst value
    spread falls below f_tol, else until max_iter iterations.  Deterministic
    for a given start.  Returns (best point, best value).
    """
    x0 = np.asarray(start, dtype=float)
    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        step = initial_step * abs(x0[i]) if x0[i] != 0 else 0.00025
        vertex = x0.copy()
        vertex[i] += step
        simplex.append(vertex)
    simplex = np.asarray(simplex)
    values = np.array([f(v) for v in simplex])
    if not np.isfinite(values[0]):
        raise ParameterDomainError("objective is not finite at the starting point")

    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        if diameter < x_tol or values[-1] - values[0] < f_tol:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        reflected = centroid + (centroid - worst)
        f_r = f(reflected)
        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_e = f(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        else:
            if f_r < values[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
                f_c = f(contracted)
                accept = f_c <= f_r
            else:
                contracted = centroid - 0.5 * (centroid - worst)
                f_c = f(contracted)
                accept = f_c < values[-1]
            if accept:
                simplex[-1], values[-1] = contracted, f_c
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [f(v) for v in simplex[1:]]

    best = int(np.argmin(values))
    return simplex[best].copy(), float(values[best])


# ---------------------------------------------------------------------------
# bootstrap


@dataclass
class CalibrationResult:
    """Fitted term structure plus per-quote errors and diagnostics."""

    term_structure: TermStructure
    quote_grid: QuoteGrid
    errors_bp: np.ndarray  # (n_moneyness, n_tenors), market - model
    objective_trace: list[float] = field(default_factory=list)
    feller_flags: list[bool] = field(default_factory=list)

    @property
    def max_abs_error_bp(self) -> float:
        return float(np.max(np.abs(self.errors_bp)))


def _vector_to_params(vec, bounds: Bounds, with_v0: bool):
    """Transformed coordinates -> (v0 or None, PeriodParams)."""
    names = ("v0", "theta", "kappa", "sigma", "rho") if with_v0 else ("theta", "kappa", "sigma", "rho")
    raw = {
        name: param_transform(val, *getattr(bounds, name), bounds.m)
        for name, val in zip(names, vec)
    }
    v0 = raw.pop("v0", None)
    raw["sigma"] = max(raw["sigma"], SIGMA_MIN)
    return v0, PeriodParams(kappa=raw["kappa"], theta=raw["theta"],
                            sigma=raw["sigma"], rho=raw["rho"], mu=0.0)


def _params_to_vector(v0, params: PeriodParams, bounds: Bounds):
    vals = ([("v0", v0)] if v0 is not None else []) + [
        ("theta", params.theta), ("kappa", params.kappa),
        ("sigma", params.sigma), ("rho", params.rho),
    ]
    out = []
    for name, value in vals:
        lo, hi = getattr(bounds, name)
        width = hi - lo
        clipped = min(max(value, lo + 1e-12 * width), hi - 1e-12 * width)
        out.append(param_transform_inverse(clipped, lo, hi, bounds.m))
    return np.asarray(out)


def bootstrap_calibrate(surface: VolSurface, curve: ForwardCurve, bounds: Bounds,
                        weights=None, seeds=None, *,
                        config: InversionConfig | None = None,
                        restarts: int = 2, jitter_seed: int = 0,
                        nm_max_iter: int = 300, nm_x_tol: float = 1e-4,
                        nm_f_tol: float = 1e-8) -> CalibrationResult:
    """Fit the full parameter term structure to a vol surface, maturity by maturity.

    seeds, when given, is a list of (v0, PeriodParams) for the first period and
    PeriodParams for later periods, used as starting points instead of the
    previous period's fit.  Two jittered restarts (deterministic via
    jitter_seed) guard against simplex stalls; the best run wins.

    The per-period simplex is deliberately local: a bounded iteration budget
    and tolerances far below a basis point in price terms.  The objective is
    multi-modal in the over-parametrized Heston box (a near-zero v0 with a
    large theta*kappa pump fits one maturity just as well); a local search
    from a sensible start stays with the economically meaningful solution,
    and chasing the objective floor to machine precision trades minutes of
    runtime for price changes orders of magnitude below the quoted errors.
    """
    cfg = config or DEFAULT_INVERSION
    grid = quotes_from_surface(surface, curve, weights)
    by_maturity = grid.by_maturity()
    x0 = math.log(grid.base_forward)
    rng = np.random.default_rng(jitter_seed)

    atm_vol = float(surface.vols[surface.atm_index, 0])
    v0_guess = atm_vol**2
    start_params = PeriodParams(kappa=2.0, theta=v0_guess, sigma=0.5, rho=-0.5, mu=0.0)

    fitted_v0: float | None = None
    periods: tuple[Period, ...] = ()
    trace: list[float] = []

    for idx, (maturity, quotes) in enumerate(by_maturity.items()):
        first = idx == 0
        prefix = TermStructure(fitted_v0, periods) if periods else None
        if seeds is not None and idx < len(seeds) and seeds[idx] is not None:
            seed = seeds[idx]
            start_vec = (_params_to_vector(seed[0], seed[1], bounds) if first
                         else _params_to_vector(None, seed, bounds))
        elif first:
            start_vec = _params_to_vector(v0_guess, start_params, bounds)
        else:
            start_vec = _params_to_vector(None, periods[-1].params, bounds)

        def make_objective():
            def fn(vec):
                v0_c, params_c = _vector_to_params(vec, bounds, with_v0=first)
                v0_eff = v0_c if first else fitted_v0
                try:
                    return objective(params_c, prefix, quotes, x0,
                                     v0=v0_eff, end_time=maturity,
                                     base_forward=grid.base_forward, config=cfg)
                except TdHestonError:
                    return _PENALTY
            return fn

        fn = make_objective()
        best_vec, best_val = nelder_mead_minimize(
            fn, start_vec, max_iter=nm_max_iter, x_tol=nm_x_tol, f_tol=nm_f_tol)
        for _ in range(restarts):
            jittered = start_vec + rng.normal(scale=0.05 * bounds.m, size=start_vec.size)
            vec, val = nelder_mead_minimize(
                fn, jittered, max_iter=nm_max_iter, x_tol=nm_x_tol, f_tol=nm_f_tol)
            if val < best_val:
                best_vec, best_val = vec, val

        v0_c, params_c = _vector_to_params(best_vec, bounds, with_v0=first)
        if first:
            fitted_v0 = v0_c
        periods = periods + (Period(maturity, params_c),)
        trace.append(best_val)
        log.info("calibrated period %d (T=%.4g): objective %.4g bp^2", idx + 1, maturity, best_val)

    ts = TermStructure(fitted_v0, periods)
    errors = _repricing_errors(ts, grid, surface, cfg)
    feller = [p.params.feller_satisfied for p in ts.periods]
    return CalibrationResult(term_structure=ts, quote_grid=grid, errors_bp=errors,
                             objective_trace=trace, feller_flags=feller)


def _repricing_errors(ts: TermStructure, grid: QuoteGrid, surface: VolSurface,
                      config: InversionConfig) -> np.ndarray:
    """market - model in bp, arranged as the surface grid (moneyness x tenor)."""
    x0 = math.log(grid.base_forward)
    errors = np.zeros((len(surface.moneyness), len(surface.tenors)))
    by_maturity = grid.by_maturity()
    for j, (maturity, quotes) in enumerate(by_maturity.items()):
        prices = _vanilla_prices(
            ts, maturity,
            [q.adjusted_strike for q in quotes],
            [q.is_call for q in quotes],
            1.0, x0, ts.v0, config,
        )
        model_bp = prices / grid.base_forward * 1e4
        for i, q in enumerate(quotes):
            errors[i, j] = q.target_bp - model_bp[i]
    return errors
