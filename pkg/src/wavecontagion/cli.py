"""Batch command line: ingest, coherence, wcorr, contagion, simulate.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Options may also come from a ``key=value`` file given with ``--config``;
command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from datetime import date, time, timedelta
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import export, ingest
from .coherence import significance_mc, wavelet_coherence
from .cwt import make_scale_grid
from .errors import DataError, NumericError
from .modwt import get_filter
from .synth import SeedSpec, gen_ar1, gen_correlated_pair, session_prices
from .wcorr import contagion_test, wavelet_correlation

log = logging.getLogger("wavecontagion")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(Fraction(text)) if "/" in text else float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _clock(text: str) -> time:
    try:
        return time.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HH:MM, got {text}") from None


def _rho_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with default option values")
    p.add_argument("--out-dir", required=True, type=Path, help="directory for outputs")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_session(p: argparse.ArgumentParser) -> None:
    p.add_argument("--open", type=_clock, default=time(9, 30), help="session open, HH:MM")
    p.add_argument("--close", type=_clock, default=time(16, 0), help="session close, HH:MM")
    p.add_argument("--tz", default="Europe/Prague", help="IANA time zone of the session")
    p.add_argument("--bar-minutes", type=_positive_float, default=5.0)


def _add_pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", required=True, type=Path, help="returns CSV of the first series")
    p.add_argument("--y", required=True, type=Path, help="returns CSV of the second series")


def _add_modwt(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filter", default="la8", help="haar, d4 or la8")
    p.add_argument("--J", type=int, default=8, help="number of MODWT levels")
    p.add_argument("--alpha", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavecontagion", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="align price CSVs and compute intraday log returns")
    _add_common(p)
    _add_session(p)
    p.add_argument("inputs", nargs="+", type=Path, help="price CSV files (timestamp,price)")
    p.add_argument("--symbols", help="comma-separated symbols (default: file stems)")
    p.add_argument("--time-col", default="timestamp")
    p.add_argument("--price-col", default="price")

    p = sub.add_parser("coherence", help="wavelet coherence with Monte Carlo significance")
    _add_common(p)
    _add_pair(p)
    p.add_argument("--omega0", type=_positive_float, default=6.0)
    p.add_argument("--s0", type=_positive_float, default=None, help="smallest scale in bars (default 2)")
    p.add_argument("--dj", type=_positive_float, default=Fraction(1, 12), help="octave fraction, e.g. 1/12")
    p.add_argument("--n-scales", type=int, default=None)
    p.add_argument("--n-sim", type=int, default=300)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bar-minutes", type=_positive_float, default=5.0)
    p.add_argument("--svg", action="store_true", help="also write coherence.svg")

    p = sub.add_parser("wcorr", help="MODWT wavelet correlation per scale")
    _add_common(p)
    _add_pair(p)
    _add_modwt(p)
    p.add_argument("--bar-minutes", type=_positive_float, default=5.0)

    p = sub.add_parser("contagion", help="two-window wavelet correlation test")
    _add_common(p)
    _add_pair(p)
    _add_modwt(p)
    p.add_argument("--bar-minutes", type=_positive_float, default=5.0)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--break", dest="break_at", help="ISO-8601 timestamp opening window II")
    g.add_argument("--break-index", type=int, help="observation index opening window II")

    p = sub.add_parser("simulate", help="write synthetic session price CSVs")
    _add_common(p)
    _add_session(p)
    p.add_argument("--kind", choices=["ar1", "correlated", "contagion"], default="correlated")
    p.add_argument("--days", type=int, default=450)
    p.add_argument("--start", type=date.fromisoformat, default=date(2008, 1, 2))
    p.add_argument("--symbols", default="X,Y")
    p.add_argument("--phi", type=float, default=0.0, help="AR(1) coefficient for --kind ar1")
    p.add_argument("--rho", type=_rho_list, default=[0.5] * 8, help="per-scale correlations")
    p.add_argument("--rho-after", type=_rho_list, default=None,
                   help="per-scale correlations after the break (--kind contagion)")
    p.add_argument("--break-day", type=int, default=None, help="first day of window II")
    p.add_argument("--vol", type=_positive_float, default=1e-3, help="return st.dev")
    p.add_argument("--filter", default="la8")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in values.items():
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                values[key] = value.lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def _validate(args: argparse.Namespace) -> None:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if hasattr(args, "alpha") and not 0.0 < args.alpha < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    if hasattr(args, "J") and args.J < 1:
        raise UsageError("--J must be >= 1")
    if hasattr(args, "filter"):
        try:
            get_filter(args.filter)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.command == "coherence":
        if args.n_sim < 100:
            raise UsageError("--n-sim must be >= 100")
        if args.n_scales is not None and args.n_scales < 1:
            raise UsageError("--n-scales must be >= 1")
        if args.s0 is not None and args.s0 < 2:
            raise UsageError("--s0 must be at least 2 bars")
    if args.command in ("ingest", "simulate"):
        try:
            args.session = ingest.SessionSpec(args.open, args.close, args.tz,
                                              timedelta(minutes=args.bar_minutes))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.command == "simulate":
        if args.days < 1:
            raise UsageError("--days must be >= 1")
        if any(abs(r) > 1 for r in args.rho + (args.rho_after or [])):
            raise UsageError("correlations must lie in [-1, 1]")
        if not -1.0 < args.phi < 1.0:
            raise UsageError("--phi must lie in (-1, 1)")


def _symbol(path: Path) -> str:
    return path.stem.removesuffix("_returns")


def _load_pair(args) -> tuple[ingest.ReturnSeries, ingest.ReturnSeries]:
    x = ingest.read_returns_csv(args.x, _symbol(args.x))
    y = ingest.read_returns_csv(args.y, _symbol(args.y))
    if x.timestamps != y.timestamps:
        raise DataError(f"{args.x} and {args.y} do not share the same timestamps; "
                        "run them through `ingest` together")
    return x, y


def cmd_ingest(args) -> None:
    symbols = args.symbols.split(",") if args.symbols else [p.stem for p in args.inputs]
    if len(symbols) != len(args.inputs):
        raise UsageError("--symbols must name every input")
    prices = [ingest.load_price_csv(p, args.time_col, args.price_col, s)
              for p, s in zip(args.inputs, symbols)]
    aligned = ingest.align_sessions(prices, args.session)
    stats, notes = {}, []
    for series in aligned:
        rets = ingest.log_returns(series, args.session)
        ingest.write_returns_csv(rets, args.out_dir / f"{series.symbol}_returns.csv")
        stats[series.symbol] = {**ingest.descriptive_stats(rets).to_dict(),
                                "n_days": rets.n_days}
        notes.extend(rets.warnings)
    export.write_json({
        "schema": export.SCHEMA_VERSION,
        "session": {"open": args.open.isoformat(), "close": args.close.isoformat(),
                    "timezone": args.tz, "bar_minutes": args.bar_minutes,
                    "returns_per_day": args.session.returns_per_day},
        "stats": stats,
        "warnings": notes,
    }, args.out_dir / "stats.json")


def cmd_coherence(args) -> None:
    x, y = _load_pair(args)
    n = len(x)
    grid = make_scale_grid(1.0, args.s0, float(args.dj), args.n_scales, omega0=args.omega0, n=n)
    field = wavelet_coherence(x.returns, y.returns, grid, args.threads)
    sig = significance_mc(x.returns, y.returns, grid, args.n_sim, args.alpha, args.seed,
                          r2=field.r2, threads=args.threads, workers=args.threads)
    field = replace(field, significant=sig.mask, alpha=args.alpha, thresholds=sig.thresholds)
    meta = {"x": x.symbol, "y": y.symbol, "bar_minutes": args.bar_minutes,
            "start": x.timestamps[0].isoformat(), "end": x.timestamps[-1].isoformat()}
    export.write_coherence(field, args.out_dir, sig, meta)
    if args.svg:
        from .plotting import coherence_svg

        coherence_svg(field, args.out_dir / "coherence.svg", f"{x.symbol} - {y.symbol}",
                      args.bar_minutes)


def cmd_wcorr(args) -> None:
    x, y = _load_pair(args)
    wc = wavelet_correlation(x.returns, y.returns, args.filter, args.J, args.alpha)
    export.write_wcorr(wc, args.out_dir, args.bar_minutes, _day_minutes(x, args.bar_minutes),
                       {"x": x.symbol, "y": y.symbol, "J": args.J, "n": len(x)})


def _day_minutes(series: ingest.ReturnSeries, bar_minutes: float) -> float:
    counts = np.bincount(series.day_index)
    return float(np.max(counts)) * bar_minutes if len(counts) else 385.0


def cmd_contagion(args) -> None:
    x, y = _load_pair(args)
    if args.break_at is not None:
        try:
            when = ingest.parse_timestamp(args.break_at)
        except ValueError as exc:
            raise UsageError(f"--break: {exc}") from None
        report = contagion_test(x.returns, y.returns, when, args.filter, args.J, args.alpha,
                                timestamps=x.timestamps)
    else:
        report = contagion_test(x.returns, y.returns, args.break_index, args.filter, args.J,
                                args.alpha)
    idx = report.break_index
    m = report.window_length
    meta = {
        "x": x.symbol, "y": y.symbol, "J": args.J,
        "window_I": [x.timestamps[idx - m].isoformat(), x.timestamps[idx - 1].isoformat()],
        "window_II": [x.timestamps[idx].isoformat(), x.timestamps[idx + m - 1].isoformat()],
    }
    export.write_contagion(report, args.out_dir, args.bar_minutes,
                           _day_minutes(x, args.bar_minutes), meta)


def cmd_simulate(args) -> None:
    spec = args.session
    total = args.days * spec.returns_per_day
    symbols = args.symbols.split(",")
    if args.kind == "ar1":
        if len(symbols) < 1:
            raise UsageError("--symbols must name at least one series")
        rets = np.array([gen_ar1(total, args.phi, 1.0, SeedSpec(args.seed, i))
                         for i in range(len(symbols))])
    else:
        if len(symbols) != 2:
            raise UsageError(f"--kind {args.kind} produces exactly two series")
        if args.kind == "correlated":
            x, y = gen_correlated_pair(total, args.rho, args.filter, args.seed)
        else:
            after = args.rho_after if args.rho_after is not None else [0.0] * len(args.rho)
            if len(after) != len(args.rho):
                raise UsageError("--rho and --rho-after need the same length")
            split = (args.break_day if args.break_day is not None else args.days // 2)
            if not 0 < split < args.days:
                raise UsageError("--break-day must fall inside the simulated days")
            n1 = split * spec.returns_per_day
            x1, y1 = gen_correlated_pair(n1, args.rho, args.filter, SeedSpec(args.seed, 0))
            x2, y2 = gen_correlated_pair(total - n1, after, args.filter, SeedSpec(args.seed, 1))
            x, y = np.concatenate([x1, x2]), np.concatenate([y1, y2])
        rets = np.array([x, y])
    rets = rets / rets.std(axis=1, keepdims=True) * args.vol
    prices = session_prices(rets, spec, args.start, symbols, args.seed)
    for series in prices:
        ingest.write_prices_csv(series, args.out_dir / f"{series.symbol}.csv")
    export.write_json({
        "schema": export.SCHEMA_VERSION, "kind": args.kind, "days": args.days,
        "start": args.start.isoformat(), "symbols": symbols, "seed": args.seed,
        "returns_per_day": spec.returns_per_day,
    }, args.out_dir / "simulate.json")


COMMANDS = {
    "ingest": cmd_ingest,
    "coherence": cmd_coherence,
    "wcorr": cmd_wcorr,
    "contagion": cmd_contagion,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"wavecontagion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"wavecontagion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"wavecontagion: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"wavecontagion: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
