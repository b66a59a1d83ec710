"""Command-line front end.

Exit status: 0 on success, 1 for bad input or configuration, 2 when an
estimate or test cannot be produced.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import arima, changepoint, ingest, reachability, report, series_stats, trend
from .errors import AnalysisError, ConfigError, InputError, StatisticalError

log = logging.getLogger("asgrowth")

FIT_SIG = 6


def _read_series_csv(path) -> ingest.AnnualCountSeries:
    """``year,count`` rows (header optional) or a single column of counts."""
    years, counts = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            try:
                nums = [float(c) for c in row]
            except ValueError:
                if years or counts:
                    raise InputError(f"{path}: non-numeric row {row!r}") from None
                continue  # header
            if len(nums) >= 2:
                years.append(int(nums[0]))
                counts.append(nums[1])
            else:
                counts.append(nums[0])
    if not counts:
        raise InputError(f"{path}: no values")
    if years and any(b != a + 1 for a, b in zip(years, years[1:])):
        raise InputError(f"{path}: years must be consecutive")
    start = years[0] if years else 0
    values = tuple(int(c) if float(c).is_integer() else c for c in counts)
    return ingest.AnnualCountSeries(Path(path).stem, start, values)


def load_records(path):
    if not path:
        raise ConfigError("--input is required")
    with open(path, "rb") as fh:
        return ingest.parse_delegated(fh)


def load_series(args) -> ingest.AnnualCountSeries:
    if getattr(args, "series", None):
        s = _read_series_csv(args.series)
    else:
        country = None if args.country in (None, "ALL") else args.country.upper()
        s = ingest.build_annual_series(load_records(args.input), country, args.resource_type,
                                       args.end_year, max_asn=args.max_asn)
    if args.first_year is not None:
        s = s.window(first_year=args.first_year)
    return s


def emit(rows, fmt: str, out=None, sig=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(report.ReportBundle({"rows": list(rows)}).to_json())
    else:
        out.write(report.rows_to_csv(list(rows), sig))


# ------------------------------------------------------------------ commands

def cmd_ingest(args):
    s = load_series(args)
    return [{"label": s.label, "year": int(y), "count": c} for y, c in zip(s.years, s.counts)]


def cmd_characterize(args):
    s = load_series(args)
    x = s.values
    if args.iaav:
        x = series_stats.iaav(x)
    elif args.diff:
        x = series_stats.difference(x, args.diff)
    ch = series_stats.characterize(x, min(args.max_lag, x.size - 1), args.df_trend)
    rows = []
    for lag, v in zip(ch["acf"].lags, ch["acf"].values):
        rows.append({"kind": "acf", "lag": int(lag), "value": v, "bound": ch["acf"].conf_bound})
    for lag, v in zip(ch["pacf"].lags, ch["pacf"].values):
        rows.append({"kind": "pacf", "lag": int(lag), "value": v,
                     "bound": ch["pacf"].conf_bound})
    for name in ("dickey_fuller", "jarque_bera", "shapiro_wilk"):
        t = ch.get(name)
        if t is not None:
            rows.append({"kind": name, "value": t.statistic, "p_value": t.p_value,
                         "p_bracket": t.p_bracket, "reject_null": t.reject_null})
    return rows


def cmd_fit(args):
    s = load_series(args)
    y = s.values[:args.train_len] if args.train_len else s.values
    f = arima.fit(y, arima.ArimaSpec.parse(args.spec), method=args.method)
    checks = report.residual_checks(f)
    rows = []
    for (name, coef, z, sig), se in zip(arima.coefficient_significance(f), f.coeff_se):
        rows.append({"model": f.spec.label, "coef": name, "estimate": coef, "se": float(se),
                     "z": z, "significant": sig, "sigma2": f.sigma2, "loglik": f.loglik,
                     "aicc": f.aicc, "jb_p": checks["jb_p"], "sw_p": checks["sw_p"]})
    if not rows:
        rows.append({"model": f.spec.label, "sigma2": f.sigma2, "loglik": f.loglik,
                     "aicc": f.aicc, "jb_p": checks["jb_p"], "sw_p": checks["sw_p"]})
    return rows


def cmd_forecast(args):
    s = load_series(args)
    n_train = args.train_len or len(s)
    if n_train > len(s):
        raise ConfigError(f"train_len {n_train} exceeds series length {len(s)}")
    f = arima.fit(s.values[:n_train], arima.ArimaSpec.parse(args.spec))
    fc = arima.forecast(f, args.horizon, args.confidence)
    rows = fc.rows(s.start_year + n_train - 1)
    observed = s.values[n_train:n_train + args.horizon]
    for row in rows:
        k = row["h"] - 1
        row["observed"] = float(observed[k]) if k < observed.size else None
    if observed.size == args.horizon:
        rmse = arima.holdout_rmse(observed, fc.points)
        for row in rows:
            row["rmse"] = rmse
    return rows


def cmd_trend(args):
    records = load_records(args.input)
    data = {}
    labels = ([args.region_label] if args.region_label else []) + [c.upper() for c in args.countries]
    for label in labels:
        code = None if label == args.region_label else label
        s = ingest.build_annual_series(records, code, args.resource_type, args.end_year,
                                       max_asn=args.max_asn)
        if args.first_year is not None:
            s = s.window(first_year=args.first_year)
        data[label] = (s.values, s.start_year)
    return trend.trend_table(data, args.region_label)


def cmd_compare(args):
    if args.z1 is not None:
        res = trend.compare_fisher_z(args.z1, args.n1, args.z2, args.n2 or args.n1)
    elif args.r1 is not None:
        res = trend.compare_correlations(args.r1, args.n1, args.r2, args.n2 or args.n1)
    else:
        if not args.triple:
            raise ConfigError("give --z1/--z2, --r1/--r2 or --triple BASE/WITHIN/ACROSS")
        base, within, across = (c.upper() for c in args.triple.split("/"))
        records = load_records(args.input)
        fits = {}
        for code in (base, within, across):
            s = ingest.build_annual_series(records, code, args.resource_type, args.end_year,
                                           max_asn=args.max_asn)
            if args.first_year is not None:
                s = s.window(first_year=args.first_year)
            fits[code] = trend.rw_drift_trend(s.values, s.start_year)
        r1, n1 = trend.trend_correlation(fits[base], fits[within])
        r2, n2 = trend.trend_correlation(fits[base], fits[across])
        res = trend.compare_correlations(r1, n1, r2, n2)
    return [{"r1": res.r1, "r2": res.r2, "n1": res.n1, "n2": res.n2, "z1": res.z1,
             "z2": res.z2, "zd": res.zd, "p_value": res.p_value,
             "reject_equal": res.reject_equal}]


def cmd_changepoint(args):
    s = load_series(args)
    x = series_stats.iaav(s.values)
    origin = s.start_year + 1
    if args.iaav_diff == 2:
        x = np.abs(np.diff(x))
        origin += 1
    pen = changepoint.PenaltySpec.parse(args.penalty, args.params_per_cp)
    methods = ("binseg", "segneigh") if args.method == "both" else (args.method,)
    results = {}
    if "binseg" in methods:
        results["binseg"] = changepoint.binseg(x, pen, args.max_cps)
    if "segneigh" in methods:
        results["segneigh"] = changepoint.segneigh(x, pen, args.Q)
    rows = [{"method": r.method, "penalty": pen.kind, "beta": r.beta,
             "changepoints": r.changepoints, "years": r.years(origin),
             "segment_variances": r.segment_variances, "total_cost": r.total_cost}
            for r in results.values()]
    if len(results) == 2:
        common = changepoint.match_changepoints(results["binseg"].changepoints,
                                                results["segneigh"].changepoints)
        rows.append({"method": "consensus", "penalty": pen.kind, "changepoints": common,
                     "years": [origin + t for t in common]})
    return rows


def cmd_reachability(args):
    if not args.snapshots:
        raise ConfigError("--snapshots is required")
    records = load_records(args.input)
    snaps = ingest.load_snapshot_dir(args.snapshots)
    stats = reachability.reachability_table(records, snaps, [c.upper() for c in args.countries],
                                            region_label=args.region_label)
    return [st.row() for st in stats]


def cmd_report(args):
    overrides = {k: getattr(args, k, None) for k in
                 ("snapshots", "region_label", "train_len", "horizon", "confidence",
                  "penalty", "end_year", "first_year", "max_asn")}
    if args.input:
        overrides["delegated"] = args.input
    if args.countries:
        overrides["countries"] = [c.upper() for c in args.countries]
    overrides["format"] = args.format
    config = report.load_config(args.config, **overrides)
    bundle = report.run_pipeline(config)
    if args.out:
        for path in bundle.write(args.out, args.format):
            log.info("wrote %s", path)
        return None
    if args.format == "json":
        sys.stdout.write(bundle.to_json())
    else:
        for name, text in bundle.to_csv().items():
            sys.stdout.write(f"# {name}\n{text}\n")
    return None


# ------------------------------------------------------------------ parser

def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps subcommand copies from clobbering values given before the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", default=argparse.SUPPRESS, help="delegated statistics file")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    p.add_argument("--config", default=argparse.SUPPRESS, help="flat key=value config file")
    return p


def _series_args(p):
    p.add_argument("--country", help="two-letter code, or ALL for the whole registry")
    p.add_argument("--series", help="CSV of year,count instead of a delegated file")
    p.add_argument("--resource-type", default="asn", choices=ingest.RESOURCE_TYPES)
    p.add_argument("--first-year", type=int)
    p.add_argument("--end-year", type=int)
    p.add_argument("--max-asn", type=int)


def build_parser(config_defaults=None) -> argparse.ArgumentParser:
    config_defaults = config_defaults or {}
    parser = argparse.ArgumentParser(prog="asgrowth", description=__doc__.splitlines()[0])
    parser.add_argument("--input", help="delegated statistics file")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    common = _common()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="cumulative annual ASN counts")
    _series_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("characterize", parents=[common], help="ACF, PACF and unit-root/normality tests")
    _series_args(p)
    p.add_argument("--diff", type=int, default=0)
    p.add_argument("--iaav", action="store_true", help="analyse absolute first differences")
    p.add_argument("--max-lag", type=int, default=12)
    p.add_argument("--df-trend", default="constant", choices=("none", "constant", "constant_trend"))
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("fit", parents=[common], help="fit one ARIMA model")
    _series_args(p)
    p.add_argument("--spec", default="1,1,2", help="p,d,q[,drift]")
    p.add_argument("--method", default="css-ml", choices=("css-ml", "css"))
    p.add_argument("--train-len", type=int)
    p.set_defaults(func=cmd_fit, sig=FIT_SIG)

    p = sub.add_parser("forecast", parents=[common], help="holdout forecast with intervals")
    _series_args(p)
    p.add_argument("--spec", default="1,1,2")
    p.add_argument("--train-len", type=int, default=14)
    p.add_argument("--horizon", type=int, default=5)
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_forecast, sig=FIT_SIG)

    p = sub.add_parser("trend", parents=[common], help="drift and linear growth per country")
    _series_args(p)
    p.add_argument("--countries", nargs="+", default=[])
    p.add_argument("--region-label", help="label for the whole-registry series")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("compare", parents=[common], help="Fisher-z test of two correlations")
    _series_args(p)
    p.add_argument("--z1", type=float)
    p.add_argument("--z2", type=float)
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--triple", help="BASE/WITHIN/ACROSS country codes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("changepoint", parents=[common], help="variance changepoints in IAAV")
    _series_args(p)
    p.add_argument("--method", default="both", choices=("binseg", "segneigh", "both"))
    p.add_argument("--penalty", default="sic", help="aic, sic or manual=<value>")
    p.add_argument("--params-per-cp", type=int, default=2)
    p.add_argument("--max-cps", type=int, default=5)
    p.add_argument("--Q", type=int, default=5)
    p.add_argument("--iaav-diff", type=int, default=1, choices=(1, 2))
    p.set_defaults(func=cmd_changepoint)

    p = sub.add_parser("reachability", parents=[common], help="assigned vs advertised ASNs")
    p.add_argument("--snapshots", help="directory of dated ASN snapshot files")
    p.add_argument("--countries", nargs="+", default=[])
    p.add_argument("--region-label")
    p.set_defaults(func=cmd_reachability)

    p = sub.add_parser("report", parents=[common], help="full pipeline over a config")
    p.add_argument("--snapshots")
    p.add_argument("--countries", nargs="+")
    p.add_argument("--region-label")
    p.add_argument("--train-len", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--penalty")
    p.add_argument("--first-year", type=int)
    p.add_argument("--end-year", type=int)
    p.add_argument("--max-asn", type=int)
    p.add_argument("--out", help="directory for report files (default: stdout)")
    p.set_defaults(func=cmd_report)

    if config_defaults:
        for action in sub.choices.values():
            dests = {a.dest for a in action._actions} - {"input", "format", "config"}
            action.set_defaults(**{k: v for k, v in config_defaults.items() if k in dests})
    return parser


_CONFIG_TO_DEST = {"delegated": "input"}


def _config_defaults(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    values = report.parse_config_text(Path(known.config).read_text())
    out = {_CONFIG_TO_DEST.get(k, k): v for k, v in values.items()}
    if "candidate_specs" in out:
        out.pop("candidate_specs")
    if out.get("countries"):
        out.setdefault("country", out["countries"][0])
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _config_defaults(argv)
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
        for key in ("input", "format"):
            if key in defaults and getattr(args, key, None) in (None, parser.get_default(key)):
                setattr(args, key, defaults[key])
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        rows = args.func(args)
        if rows is not None:
            emit(rows, args.format, sig=getattr(args, "sig", None) if args.format == "csv" else None)
    except StatisticalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
