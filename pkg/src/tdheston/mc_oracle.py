"""Euler Monte Carlo of the Heston SDE with piecewise-constant parameters.

Serves as an independent validation oracle for the transform pricing.  Two
discretizations of the square-root variance are available:

euler_full_truncation
    The raw variance state may go negative; drift and diffusion use max(v, 0).
    Small bias, the scheme trusted for oracle duty when the Feller condition
    holds.

euler_absorbing
    The variance state is clamped at zero after every step.  This mimics an
    absorbing boundary poorly on a discrete grid and systematically overprices
    long-dated options once the Feller condition fails; it exists to
    demonstrate that bias, never as an oracle.

Steps are shortened to land exactly on period boundaries so a parameter
switch is never smeared across a step.  Paths are generated in fixed-size
blocks with independently seeded streams; the block-ordered reduction makes
results identical for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ParameterDomainError
from .term_structure import TermStructure
from .transform_pricing import VanillaSpec

__all__ = ["McConfig", "McResult", "simulate_terminal", "mc_vanilla_price"]

_SCHEMES = ("euler_full_truncation", "euler_absorbing")
_BLOCK = 1 << 16


@dataclass(frozen=True)
class McConfig:
    """Simulation controls: path count, step, scheme, seed, antithetics."""

    n_paths: int
    dt: float = 1.0 / 365.0
    scheme: str = "euler_full_truncation"
    seed: int = 0
    antithetic: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.n_paths < 2:
            raise ParameterDomainError(f"n_paths must be >= 2, got {self.n_paths}")
        if self.dt <= 0:
            raise ParameterDomainError(f"dt must be > 0, got {self.dt}")
        if self.scheme not in _SCHEMES:
            raise ParameterDomainError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if self.antithetic and self.n_paths % 2:
            raise ParameterDomainError("antithetic sampling needs an even n_paths")
        if self.threads < 1:
            raise ParameterDomainError(f"threads must be >= 1, got {self.threads}")


@dataclass
class McResult:
    """Terminal samples (and optional snapshot) with basic accessors.

    With antithetic sampling, mirrored pairs sit at adjacent indices (2k,
    2k+1) and standard errors are computed from pair averages.
    """

    x: np.ndarray
    v: np.ndarray
    antithetic: bool
    snapshot: tuple[np.ndarray, np.ndarray] | None = None

    def _units(self, values: np.ndarray) -> np.ndarray:
        if self.antithetic:
            return values.reshape(-1, 2).mean(axis=1)
        return values

    def mean_and_se(self, values: np.ndarray) -> tuple[float, float]:
        """Sample mean and standard error honoring antithetic pairing."""
        units = self._units(np.asarray(values, dtype=float))
        return float(units.mean()), float(units.std(ddof=1) / np.sqrt(units.size))

    def mean_exp_x(self) -> tuple[float, float]:
        """Mean and SE of e^{x_t} (martingale checks)."""
        return self.mean_and_se(np.exp(self.x))


def _step_plan(ts: TermStructure, t: float, dt: float, snapshot_at: float | None):
    """(step, params, record_after) triples landing exactly on boundaries."""
    marks = {0.0, t}
    for per in ts.periods:
        if 0.0 < per.end_time < t:
            marks.add(per.end_time)
    if snapshot_at is not None and 0.0 < snapshot_at <= t:
        marks.add(snapshot_at)
    marks = sorted(marks)
    plan = []
    for lo, hi in zip(marks[:-1], marks[1:]):
        params = None
        for per in ts.periods:
            if per.end_time >= hi - 1e-12:
                params = per.params
                break
        if params is None:
            params = ts.periods[-1].params
        n = max(1, int(np.ceil((hi - lo) / dt - 1e-12)))
        h = (hi - lo) / n
        for k in range(n):
            record = snapshot_at is not None and k == n - 1 and abs(hi - snapshot_at) < 1e-12
            plan.append((h, params, record))
    return plan


def _simulate_block(plan, x0: float, v0: float, n: int, seed_seq, antithetic: bool,
                    scheme: str):
    rng = np.random.default_rng(seed_seq)
    x = np.full(n, float(x0))
    v = np.full(n, float(v0))
    snapshot = None
    full_truncation = scheme == "euler_full_truncation"

    def normals():
        if antithetic:
            half = rng.standard_normal(n // 2)
            out = np.empty(n)
            out[0::2] = half
            out[1::2] = -half
            return out
        return rng.standard_normal(n)

    for h, p, record in plan:
        z1 = normals()
        z2 = p.rho * z1 + np.sqrt(1.0 - p.rho**2) * normals()
        vp = np.maximum(v, 0.0)
        root = np.sqrt(vp * h)
        x += (p.mu - 0.5 * vp) * h + root * z1
        v = v + p.kappa * (p.theta - vp) * h + p.sigma * root * z2
        if not full_truncation:
            np.maximum(v, 0.0, out=v)
        if record:
            snapshot = (x.copy(), np.maximum(v, 0.0))
    return x, v, snapshot


def simulate_terminal(ts: TermStructure, t: float, x0: float, config: McConfig,
                      snapshot_at: float | None = None) -> McResult:
    """Simulate (x_t, v_t) under the term structure; optionally record an
    intermediate snapshot (x_s, v_s) for s = snapshot_at.

    Reported variance samples are clipped at zero (the full-truncation state
    itself may be negative between steps).
    """
    if not 0 < t <= ts.horizon * (1 + 1e-12) + 1e-12:
        raise ParameterDomainError(f"t must lie in (0, horizon={ts.horizon}], got {t}")
    plan = _step_plan(ts, t, config.dt, snapshot_at)

    sizes = []
    remaining = config.n_paths
    while remaining > 0:
        size = min(_BLOCK, remaining)
        if config.antithetic and size % 2:
            size -= 1
        sizes.append(size)
        remaining -= size
    seed_seqs = np.random.SeedSequence(config.seed).spawn(len(sizes))

    def run(args):
        size, seq = args
        return _simulate_block(plan, x0, ts.v0, size, seq, config.antithetic, config.scheme)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            blocks = list(pool.map(run, zip(sizes, seed_seqs)))
    else:
        blocks = [run(a) for a in zip(sizes, seed_seqs)]

    x = np.concatenate([b[0] for b in blocks])
    v = np.maximum(np.concatenate([b[1] for b in blocks]), 0.0)
    snapshot = None
    if snapshot_at is not None:
        snapshot = (
            np.concatenate([b[2][0] for b in blocks]),
            np.concatenate([b[2][1] for b in blocks]),
        )
    return McResult(x=x, v=v, antithetic=config.antithetic, snapshot=snapshot)


def mc_vanilla_price(ts: TermStructure, spec: VanillaSpec, x0: float,
                     config: McConfig) -> tuple[float, float]:
    """Monte Carlo vanilla price and its standard error."""
    result = simulate_terminal(ts, spec.maturity, x0, config)
    s_t = np.exp(result.x)
    payoff = np.maximum(s_t - spec.strike, 0.0) if spec.is_call else np.maximum(spec.strike - s_t, 0.0)
    mean, se = result.mean_and_se(payoff)
    return spec.discount * mean, spec.discount * se
