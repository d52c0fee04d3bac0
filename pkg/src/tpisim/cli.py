"""Command-line interface: scan, fit, reproduce, count, selftest.

Exit codes: 0 success, 2 configuration/parse error, 3 fit non-convergence,
4 internal invariant violation (including selftest failures).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, configio, scan
from .coincidence import count_cross, count_self_delayed, expected_accidentals
from .errors import (AliasingError, ConfigError, DegenerateWavelengthError,
                     FitConvergenceError, InvariantViolation, NoBaselineError,
                     SpanError, StreamError)
from .events import read_event_dump
from .selftest import run_selftest

_USAGE_ERRORS = (ConfigError, StreamError, NoBaselineError,
                 DegenerateWavelengthError)
_FIT_ERRORS = (FitConvergenceError, AliasingError, SpanError)


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=12345, help="master seed")
    p.add_argument("--mode", choices=scan.MODES, default="analytic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpisim",
        description="Two-photon interference simulator and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="run one delta-x scan and emit CSV")
    _add_common(p)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.add_argument("--randomize-phase", action="store_true")
    p.add_argument("--duration", type=float, default=60.0,
                   help="acquisition per point, s")
    p.add_argument("--range", nargs=3, type=float,
                   default=list(scan.COARSE_RANGE_UM),
                   metavar=("MIN", "MAX", "STEP"), help="coarse grid, um")
    p.add_argument("--fine", nargs=3, type=float, default=None,
                   metavar=("CENTER", "HALF_WIDTH", "STEP"),
                   help="optional phase-resolved window, um")
    p.add_argument("--channels", default=",".join(analysis.CHANNELS),
                   help="comma-separated channel subset")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", help="fit a normalized channel of a scan CSV")
    p.add_argument("input", help="scan CSV produced by 'scan' or 'reproduce'")
    p.add_argument("--kind", required=True,
                   choices=["oscillation", "spi_coarse", "envelope",
                            "self_peak", "self_fringe", "beat",
                            "cross_fringe"])
    p.add_argument("--channel", required=True, choices=analysis.CHANNELS)
    p.add_argument("--config", help="config file (hints and normalization)")
    p.add_argument("--out", help="fit report CSV path")
    p.add_argument("--period-hint", type=float, default=None,
                   help="period hint, um")
    p.add_argument("--window", type=float, default=None,
                   help="fit only |delta_x| <= WINDOW um (after normalizing "
                        "against the full scan's baseline)")
    p.add_argument("--unweighted", action="store_true",
                   help="skip Poisson weights even for integer counts")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce", help="regenerate a reference-figure bundle")
    _add_common(p)
    p.add_argument("--figure", required=True, choices=["3", "4", "5"])
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--duration", type=float, default=60.0)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("count", help="recount coincidences from an event dump")
    p.add_argument("input", help="event dump written by the simulator")
    p.add_argument("--window-ns", type=float, default=10.0)
    p.add_argument("--delay-ns", type=float, default=None,
                   help="count delayed self pairs on one detector")
    p.add_argument("--detector", default="D1", choices=["D1", "D2"],
                   help="detector for --delay-ns mode")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def _load_config(path):
    if path is None:
        return configio.reference_config()
    return configio.load_config(path)


def cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    channels = tuple(c.strip() for c in args.channels.split(",") if c.strip())
    plan = scan.ScanPlan(
        mode=args.mode, range_um=tuple(args.range),
        fine_window_um=tuple(args.fine) if args.fine else None,
        randomize_phase=args.randomize_phase,
        duration_per_point_s=args.duration, channels=channels,
        master_seed=args.seed)
    rows = scan.run_scan(plan, cfg)
    csv_text = scan.rows_to_csv(rows)
    if args.out == "-":
        sys.stdout.write(csv_text)
    else:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _fit_dispatch(args, cfg, norm):
    pair = cfg.filters
    x, y, sig = norm.delta_x_um, norm.values, norm.sigma
    if args.window is not None:
        keep = np.abs(x) <= args.window
        x, y = x[keep], y[keep]
        sig = sig[keep] if sig is not None else None
    lam1_nm = pair.f1.center_wavelength_nm
    lam2_nm = pair.f2.center_wavelength_nm
    arm2 = args.channel in ("singles2", "self2")
    lam_nm = lam2_nm if arm2 else lam1_nm
    sig_um = pair.f2.sigma_um if arm2 else pair.f1.sigma_um
    kind = args.kind
    if kind == "oscillation":
        return analysis.fit_oscillation(
            x, y, period_hint_um=args.period_hint or lam_nm * 1e-3, sigma=sig)
    if kind == "spi_coarse":
        return analysis.fit_spi_coarse(x, y, lam_nm, sig_um, sigma=sig)
    if kind == "envelope":
        return analysis.fit_envelope(x, y, kind="spi", sigma=sig)
    if kind == "self_peak":
        return analysis.fit_envelope(x, y, kind="self_peak", sigma=sig)
    if kind == "self_fringe":
        return analysis.fit_self_oscillation(
            x, y, period_hint_um=args.period_hint or lam_nm * 1e-3, sigma=sig)
    if kind == "beat":
        return analysis.fit_beat(
            x, y, period_hint_um=args.period_hint or pair.beat_period_um,
            sigma12_hint_um=pair.sigma12_um, sigma=sig)
    if kind == "cross_fringe":
        return analysis.fit_cross_fringe(
            x, y, lam1_nm, lam2_nm, pair.f1.sigma_um, pair.f2.sigma_um,
            v1_hint=cfg.v1, v2_hint=cfg.v2, sigma=sig)
    raise ConfigError(f"unknown fit kind '{kind}'")


def fit_report_csv(fit: analysis.FitResult) -> str:
    lines = [scan.FIT_CSV_HEADER]
    for param, value, err in fit.iter_report_rows():
        lines.append(f"{fit.kind},{param},{value!r},{err!r}")
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    rows = scan.read_scan_csv(args.input)
    counts_integral = all(
        float(getattr(r, analysis._CHANNEL_ATTR[args.channel])).is_integer()
        for r in rows)
    norm = analysis.normalize(rows, args.channel, cfg.filters.sigma12_um,
                              with_poisson_sigma=counts_integral
                              and not args.unweighted)
    fit = _fit_dispatch(args, cfg, norm)
    print(f"fit kind={fit.kind} channel={args.channel} "
          f"points={norm.values.size}")
    for param, value, err in fit.iter_report_rows():
        print(f"  {param:<12} = {value:.6g} +/- {err:.3g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(fit_report_csv(fit))
        print(f"wrote report to {args.out}")
    return 0


def cmd_reproduce(args) -> int:
    cfg = _load_config(args.config)
    datasets = scan.reproduce_figure(
        args.figure, cfg=cfg, mode=args.mode, master_seed=args.seed,
        duration_per_point_s=args.duration, out_dir=args.out)
    for name, rows in datasets.items():
        print(f"fig{args.figure}_{name}.csv: {len(rows)} rows "
              f"({rows[0].delta_x_um} .. {rows[-1].delta_x_um} um)")
    if args.figure == "5":
        configured = cfg.filters.beat_period_um
        ref = configio.REFERENCE_MEASUREMENTS["beat_period_um"]
        print(f"beat period: configured filters {configured:.2f} um, "
              f"reference measurement {ref:.2f} um "
              f"({100 * abs(configured - ref) / configured:.1f}% apart)")
    return 0


def cmd_count(args) -> int:
    streams, seed = read_event_dump(args.input)
    if args.delay_ns is not None:
        if args.detector not in streams:
            raise StreamError(f"dump has no detector {args.detector}")
        res = count_self_delayed(streams[args.detector], args.delay_ns,
                                 args.window_ns)
        print(f"self pairs on {args.detector}: {res.pair_count} "
              f"(delay {res.delay_ns} ns, window {res.window_ns} ns, "
              f"rate {res.rate_cps:.3f} cps, seed {seed})")
        return 0
    if set(streams) != {"D1", "D2"}:
        raise StreamError("cross counting needs both D1 and D2 in the dump")
    res = count_cross(streams["D1"], streams["D2"], args.window_ns)
    exp = expected_accidentals(streams["D1"], streams["D2"], args.window_ns)
    print(f"cross pairs: {res.pair_count} (window {res.window_ns} ns, "
          f"rate {res.rate_cps:.3f} cps, accidental expectation {exp:.1f}, "
          f"seed {seed})")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(verbose=True)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 4 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _FIT_ERRORS as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
