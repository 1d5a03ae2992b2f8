"""Command-line orchestration: calibrate, price, forward-skew, check.

File formats (UTF-8, comma-separated, '.' decimal point):

surface.csv
    Header row: label cell then tenor strings (1m, 3m, ..., 10y); each data
    row: moneyness then implied vols in percent.  Mirrors the usual published
    vol-surface table so one pastes straight in.

forwards.csv
    Header row of tenor strings, one data row of forwards.  The last column
    is the delivery forward used for strike adjustment and normalization.

term_structure.json
    { "spot_or_forward_base": ..., "v0": ...,
      "periods": [ { "end_tenor": "1m", "end_years": ..., "kappa": ...,
                     "theta": ..., "sigma": ..., "rho": ..., "mu": ... } ],
      "metadata": { "bounds_used": ..., "weights": [...], "feller": [...] } }

Vols are percent on disk and decimals in memory.  Prices print both in
currency units and in basis points of the base forward.

The environment variable TDHESTON_LOG sets the logging level.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .calibration import (
    Bounds,
    ForwardCurve,
    VolSurface,
    bootstrap_calibrate,
    quotes_from_surface,
)
from .errors import DataError, NoSolutionError, TdHestonError
from .forward_start import ForwardStartSpec, forward_start_price, forward_skew
from .heston_cf import PeriodParams
from .mc_oracle import McConfig, mc_vanilla_price
from .term_structure import (
    Period,
    TermStructure,
    format_tenor,
    marginal_cf,
    parse_tenor,
)
from .transform_pricing import InversionConfig, VanillaSpec, implied_vol, vanilla_price

log = logging.getLogger(__name__)

__all__ = ["main"]


# ---------------------------------------------------------------------------
# CSV / JSON input and output


def _read_csv_rows(path: str) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [line.split(",") for line in text.splitlines() if line.strip()]
    if not rows:
        raise DataError(f"{path}: file is empty")
    return rows


def _parse_cell(path: str, line: int, col: int, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"{path} line {line}, column {col}: cannot parse {text!r} as a number"
        ) from None


def read_surface_csv(path: str, spot: float) -> VolSurface:
    """Parse a moneyness-by-tenor vol grid (percent on disk)."""
    rows = _read_csv_rows(path)
    if len(rows) < 2 or len(rows[0]) < 2:
        raise DataError(f"{path}: need a tenor header row and at least one moneyness row")
    tenors = [parse_tenor(cell) for cell in rows[0][1:]]
    moneyness, vols = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(tenors) + 1:
            raise DataError(f"{path} line {i}: expected {len(tenors) + 1} cells, got {len(row)}")
        moneyness.append(_parse_cell(path, i, 1, row[0]))
        vols.append([_parse_cell(path, i, j + 2, c) / 100.0 for j, c in enumerate(row[1:])])
    return VolSurface(spot=spot, tenors=tuple(tenors), moneyness=tuple(moneyness),
                      vols=np.asarray(vols))


def read_forwards_csv(path: str) -> ForwardCurve:
    """Parse the tenor-header/forwards-row curve table."""
    rows = _read_csv_rows(path)
    if len(rows) != 2:
        raise DataError(f"{path}: expected a header row and one forwards row, got {len(rows)} rows")
    tenors = [parse_tenor(cell) for cell in rows[0]]
    if len(rows[1]) != len(tenors):
        raise DataError(f"{path} line 2: expected {len(tenors)} cells, got {len(rows[1])}")
    forwards = [_parse_cell(path, 2, j + 1, c) for j, c in enumerate(rows[1])]
    return ForwardCurve(tenors=tuple(tenors), forwards=tuple(forwards))


def read_grid_csv(path: str) -> tuple[list[str], list[str], np.ndarray]:
    """Generic grid reader: (column labels, row labels, values)."""
    rows = _read_csv_rows(path)
    cols = rows[0][1:]
    row_labels, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        row_labels.append(row[0])
        values.append([_parse_cell(path, i, j + 2, c) for j, c in enumerate(row[1:])])
    return cols, row_labels, np.asarray(values)


def write_grid_csv(path: str, corner: str, col_labels, row_labels, values: np.ndarray,
                   fmt: str = "%.6f") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([corner] + [str(c) for c in col_labels]) + "\n")
        for label, row in zip(row_labels, np.asarray(values)):
            fh.write(",".join([str(label)] + [fmt % v for v in row]) + "\n")


def term_structure_to_dict(ts: TermStructure, base: float, metadata: dict | None = None) -> dict:
    return {
        "spot_or_forward_base": base,
        "v0": ts.v0,
        "periods": [
            {
                "end_tenor": format_tenor(p.end_time),
                "end_years": p.end_time,
                "kappa": p.params.kappa,
                "theta": p.params.theta,
                "sigma": p.params.sigma,
                "rho": p.params.rho,
                "mu": p.params.mu,
            }
            for p in ts.periods
        ],
        "metadata": metadata or {},
    }


def term_structure_from_dict(doc: dict) -> tuple[TermStructure, float, dict]:
    try:
        base = float(doc["spot_or_forward_base"])
        periods = tuple(
            Period(
                end_time=float(p["end_years"]) if "end_years" in p else parse_tenor(p["end_tenor"]),
                params=PeriodParams(
                    kappa=float(p["kappa"]), theta=float(p["theta"]),
                    sigma=float(p["sigma"]), rho=float(p["rho"]),
                    mu=float(p.get("mu", 0.0)),
                ),
            )
            for p in doc["periods"]
        )
        ts = TermStructure(v0=float(doc["v0"]), periods=periods)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed term-structure document: {exc}") from None
    return ts, base, doc.get("metadata", {})


def load_structure(path: str) -> tuple[TermStructure, float, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return term_structure_from_dict(doc)


# ---------------------------------------------------------------------------
# subcommands


def _inversion_config(args) -> InversionConfig:
    if args.abs_tol is None:
        return InversionConfig()
    return InversionConfig(abs_tol=args.abs_tol)


def _bounds_from_arg(text: str) -> tuple[Bounds, str]:
    if text == "constrained":
        return Bounds.constrained(), "constrained"
    if text == "unconstrained":
        return Bounds.unconstrained(), "unconstrained"
    try:
        with open(text, encoding="utf-8") as fh:
            doc = json.load(fh)
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return Bounds(**kwargs), text
    except OSError as exc:
        raise DataError(f"cannot read bounds file {text}: {exc}") from None
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"bad bounds file {text}: {exc}") from None


def cmd_calibrate(args) -> int:
    surface = read_surface_csv(args.surface, args.spot)
    curve = read_forwards_csv(args.forwards)
    bounds, bounds_name = _bounds_from_arg(args.bounds)
    weights = [float(w) for w in args.weights.split(",")] if args.weights else None
    cfg = _inversion_config(args)

    result = bootstrap_calibrate(
        surface, curve, bounds, weights=weights, config=cfg,
        restarts=args.restarts, jitter_seed=args.seed,
    )
    ts = result.term_structure

    os.makedirs(args.out_dir, exist_ok=True)
    tenor_labels = [format_tenor(t) for t in surface.tenors]
    metadata = {
        "bounds_used": bounds_name,
        "weights": [
            result.quote_grid.quotes[i].weight for i in range(len(surface.moneyness))
        ],
        "feller": result.feller_flags,
    }
    ts_path = os.path.join(args.out_dir, "term_structure.json")
    with open(ts_path, "w", encoding="utf-8") as fh:
        json.dump(term_structure_to_dict(ts, curve.base, metadata), fh, indent=2)
        fh.write("\n")
    errors_path = os.path.join(args.out_dir, "errors.csv")
    write_grid_csv(errors_path, "K\\Mat", tenor_labels,
                   [f"{m:g}" for m in surface.moneyness], result.errors_bp, fmt="%.4f")

    report_path = os.path.join(args.out_dir, "report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(_calibration_report(result, tenor_labels, bounds_name))
    print(f"calibrated {len(ts.periods)} periods; v0 = {ts.v0:.6f}; "
          f"max |market - model| = {result.max_abs_error_bp:.2f} bp")
    print(f"wrote {ts_path}, {errors_path}, {report_path}")
    return 0


def _calibration_report(result, tenor_labels, bounds_name: str) -> str:
    ts = result.term_structure
    lines = [
        f"bootstrap calibration ({bounds_name} bounds)",
        f"v0 = {ts.v0:.6f}",
        "",
        "parameter".ljust(8) + "".join(lbl.rjust(9) for lbl in tenor_labels),
    ]
    for name in ("theta", "kappa", "sigma", "rho"):
        vals = [getattr(p.params, name) for p in ts.periods]
        lines.append(name.ljust(8) + "".join(f"{v:9.3f}" for v in vals))
    lines.append("feller".ljust(8) + "".join(
        ("ok" if ok else "violated").rjust(9) for ok in result.feller_flags))
    lines.append("")
    lines.append("objective per period (weighted bp^2): "
                 + ", ".join(f"{v:.3g}" for v in result.objective_trace))
    lines.append(f"max |market - model| = {result.max_abs_error_bp:.3f} bp")
    lines.append("")
    return "\n".join(lines) + "\n"


def _print_price_line(label: str, price: float, base: float, iv: float | None) -> None:
    bp = price / base * 1e4
    iv_text = f"{iv * 100:.4f}%" if iv is not None else "n/a"
    print(f"{label}: price = {price:.6f} ({bp:.2f} bp of base {base:g}), implied vol = {iv_text}")


def cmd_price(args) -> int:
    ts, base, _ = load_structure(args.structure)
    cfg = _inversion_config(args)
    x0 = math.log(base)

    if args.surface:
        if not args.forwards or args.spot is None:
            raise DataError("batch pricing needs --surface, --forwards and --spot together")
        surface = read_surface_csv(args.surface, args.spot)
        curve = read_forwards_csv(args.forwards)
        grid = quotes_from_surface(surface, curve)
        if args.extend:
            ts = ts.extended_to(max(q.maturity for q in grid.quotes))
        rows = []
        for q in grid.quotes:
            price = vanilla_price(
                ts, VanillaSpec(q.adjusted_strike, q.maturity, q.is_call, args.discount),
                x0, ts.v0, cfg,
            )
            try:
                iv = implied_vol(price, base, q.adjusted_strike, q.maturity,
                                 args.discount, q.is_call)
            except NoSolutionError:
                iv = float("nan")
            rows.append((format_tenor(q.maturity), q.adjusted_strike,
                         "call" if q.is_call else "put", price, price / base * 1e4,
                         iv * 100))
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("tenor,adjusted_strike,side,price,price_bp,implied_vol_pct\n")
                for r in rows:
                    fh.write(f"{r[0]},{r[1]:.6f},{r[2]},{r[3]:.8f},{r[4]:.4f},{r[5]:.6f}\n")
            print(f"wrote {len(rows)} prices to {args.csv}")
        else:
            for r in rows:
                print(f"{r[0]:>4} K={r[1]:.2f} {r[2]:>4}: {r[3]:.4f} ({r[4]:.1f} bp, iv {r[5]:.2f}%)")
        return 0

    if args.kind == "vanilla":
        if args.strike is None or args.maturity is None:
            raise DataError("vanilla pricing needs --strike and --maturity")
        t = parse_tenor(args.maturity)
        if args.extend:
            ts = ts.extended_to(t)
        spec = VanillaSpec(args.strike, t, not args.put, args.discount)
        price = vanilla_price(ts, spec, x0, ts.v0, cfg)
        try:
            iv = implied_vol(price, base, args.strike, t, args.discount, spec.is_call)
        except NoSolutionError:
            iv = None
        _print_price_line(f"vanilla {'put' if args.put else 'call'} {args.maturity}", price, base, iv)
    else:
        if args.ratio is None or args.fix is None or args.expiry is None:
            raise DataError("forward-start pricing needs --ratio, --fix and --expiry")
        t_u, t_v = parse_tenor(args.fix), parse_tenor(args.expiry)
        if args.extend:
            ts = ts.extended_to(t_v)
        spec = ForwardStartSpec(args.ratio, t_u, t_v, args.discount)
        price = forward_start_price(ts, spec, x0, ts.v0, cfg)
        try:
            # Black vol on the return: normalize by the fix-date forward
            f_u = float(marginal_cf(ts, t_u, -1j, x0).real) if t_u > 0 else base
            ratio_fwd = float(marginal_cf(ts, t_v, -1j, x0).real) / f_u
            iv = implied_vol(price / (args.discount * f_u), ratio_fwd, args.ratio,
                             t_v - t_u, 1.0, True)
        except (NoSolutionError, TdHestonError):
            iv = None
        _print_price_line(f"forward-start {args.fix}->{args.expiry} K={args.ratio}", price, base, iv)
    return 0


def cmd_forward_skew(args) -> int:
    ts, base, _ = load_structure(args.structure)
    cfg = _inversion_config(args)
    tenor = parse_tenor(args.tenor)
    terms = [parse_tenor(t) for t in args.forward_terms.split(",")]
    moneyness = [float(m) for m in args.moneyness.split(",")]
    if args.extend:
        ts = ts.extended_to(max(terms) + tenor)
    term_labels = [format_tenor(t) for t in terms]

    if args.diff:
        other, _, _ = load_structure(args.diff)
        if args.extend:
            other = other.extended_to(max(terms) + tenor)
        x0 = math.log(base)
        diffs = np.zeros((len(terms), len(moneyness)))
        for i, t_u in enumerate(terms):
            for j, k in enumerate(moneyness):
                spec = ForwardStartSpec(k, t_u, t_u + tenor, 1.0)
                p_a = forward_start_price(ts, spec, x0, ts.v0, cfg)
                p_b = forward_start_price(other, spec, x0, other.v0, cfg)
                diffs[i, j] = (p_a - p_b) / base * 1e4
        write_grid_csv(args.out, "forward_term", [f"{m:g}" for m in moneyness],
                       term_labels, diffs, fmt="%.4f")
        print(f"wrote price differences (bp of {base:g}) to {args.out}")
        return 0

    surface = forward_skew(ts, tenor, terms, moneyness, 0.0, ts.v0, cfg)
    write_grid_csv(args.out, "forward_term", [f"{m:g}" for m in moneyness],
                   term_labels, surface.vols * 100.0, fmt="%.4f")
    print(f"wrote forward skew (vol %) to {args.out}")
    return 0


def cmd_check(args) -> int:
    ts, base, _ = load_structure(args.structure)
    x0 = math.log(base)
    print(f"term structure: {len(ts.periods)} periods, horizon {format_tenor(ts.horizon)}, "
          f"v0 = {ts.v0:.6f}, base = {base:g}")
    print("\nper-period Feller condition (2 kappa theta > sigma^2):")
    for p in ts.periods:
        status = "ok" if p.params.feller_satisfied else "VIOLATED"
        print(f"  {format_tenor(p.end_time):>4}: {status}  "
              f"(2kt = {2 * p.params.kappa * p.params.theta:.4f}, s^2 = {p.params.sigma ** 2:.4f})")
    print("\nnormalization and martingale residuals:")
    worst_n, worst_m = 0.0, 0.0
    for p in ts.periods:
        t = p.end_time
        phi0 = marginal_cf(ts, t, 0.0, x0)
        mart = marginal_cf(ts, t, -1j, x0)
        res_n = abs(phi0 - 1.0)
        res_m = abs(mart - math.exp(x0)) / math.exp(x0)
        worst_n, worst_m = max(worst_n, res_n), max(worst_m, res_m)
        print(f"  {format_tenor(t):>4}: |phi(0) - 1| = {res_n:.3e},  "
              f"|phi(-i) - F|/F = {res_m:.3e}")
    print(f"  worst: normalization {worst_n:.3e}, martingale {worst_m:.3e}")

    if args.mc:
        config = McConfig(n_paths=args.mc_paths, dt=args.mc_dt, scheme=args.scheme,
                          seed=args.seed, threads=args.threads)
        spec = VanillaSpec(base, ts.horizon, True, 1.0)
        analytic = vanilla_price(ts, spec, x0, ts.v0, _inversion_config(args))
        mc, se = mc_vanilla_price(ts, spec, x0, config)
        sigmas = abs(mc - analytic) / se if se > 0 else float("inf")
        print(f"\nMC check (ATM call at horizon, {args.scheme}, {args.mc_paths} paths, dt={args.mc_dt:g}):")
        print(f"  analytic = {analytic:.4f}, MC = {mc:.4f} +/- {se:.4f}  ({sigmas:.2f} SE)")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdheston",
        description="Heston pricing and calibration with piecewise-constant parameters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="bootstrap-calibrate a term structure to a vol surface")
    cal.add_argument("--surface", required=True, help="moneyness-by-tenor vol CSV (percent)")
    cal.add_argument("--forwards", required=True, help="tenor-header forwards CSV")
    cal.add_argument("--spot", type=float, required=True, help="spot of the underlying")
    cal.add_argument("--bounds", default="constrained",
                     help="constrained | unconstrained | path to a bounds JSON")
    cal.add_argument("--weights", default=None,
                     help="comma list of weights parallel to the moneyness rows")
    cal.add_argument("--out-dir", required=True)
    cal.add_argument("--seed", type=int, default=0, help="restart-jitter seed")
    cal.add_argument("--restarts", type=int, default=2)
    cal.add_argument("--abs-tol", type=float, default=None, help="inversion tolerance")
    cal.set_defaults(func=cmd_calibrate)

    pr = sub.add_parser("price", help="price a vanilla or forward-start option")
    pr.add_argument("--structure", required=True, help="term_structure.json")
    pr.add_argument("--kind", choices=["vanilla", "forward-start"], default="vanilla")
    pr.add_argument("--strike", type=float, default=None)
    pr.add_argument("--maturity", default=None, help="tenor string or year fraction")
    pr.add_argument("--ratio", type=float, default=None, help="forward-start strike ratio")
    pr.add_argument("--fix", default=None, help="forward-start fixing tenor")
    pr.add_argument("--expiry", default=None, help="forward-start expiry tenor")
    pr.add_argument("--put", action="store_true", help="price a put (vanilla only)")
    pr.add_argument("--discount", type=float, default=1.0)
    pr.add_argument("--surface", default=None, help="batch mode: vol surface CSV")
    pr.add_argument("--forwards", default=None, help="batch mode: forwards CSV")
    pr.add_argument("--spot", type=float, default=None, help="batch mode: spot")
    pr.add_argument("--csv", default=None, help="batch mode: output CSV path")
    pr.add_argument("--extend", action="store_true",
                    help="extend the last period to cover maturities beyond the horizon")
    pr.add_argument("--abs-tol", type=float, default=None)
    pr.set_defaults(func=cmd_price)

    sk = sub.add_parser("forward-skew", help="forward implied-vol surface at a fixed tenor")
    sk.add_argument("--structure", required=True)
    sk.add_argument("--tenor", required=True)
    sk.add_argument("--forward-terms", required=True, help="comma list of tenors, e.g. 0,3m,9m,2y")
    sk.add_argument("--moneyness", required=True, help="comma list of strike ratios")
    sk.add_argument("--out", required=True, help="output CSV")
    sk.add_argument("--diff", default=None,
                    help="second structure: emit price differences in bp instead of vols")
    sk.add_argument("--extend", action="store_true")
    sk.add_argument("--abs-tol", type=float, default=None)
    sk.set_defaults(func=cmd_forward_skew)

    ck = sub.add_parser("check", help="diagnostics: Feller, normalization, martingale, MC")
    ck.add_argument("--structure", required=True)
    ck.add_argument("--mc", action="store_true", help="add an MC-vs-analytic comparison")
    ck.add_argument("--mc-paths", type=int, default=100_000)
    ck.add_argument("--mc-dt", type=float, default=1.0 / 365.0)
    ck.add_argument("--scheme", choices=["euler_full_truncation", "euler_absorbing"],
                    default="euler_full_truncation")
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument("--threads", type=int, default=1)
    ck.add_argument("--abs-tol", type=float, default=None)
    ck.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TDHESTON_LOG", "WARNING").upper())
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TdHestonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
