"""End-to-end analysis: configuration, per-country pipeline and report tables."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import arima, changepoint, ingest, reachability, series_stats, trend
from .errors import AnalysisError, ConfigError

log = logging.getLogger(__name__)

DEFAULT_SPECS = ("1,1,1", "1,1,2", "2,1,3")


@dataclass
class AnalysisConfig:
    delegated: Optional[str] = None
    snapshots: Optional[str] = None
    countries: list = field(default_factory=list)
    region_label: Optional[str] = None
    resource_type: str = "asn"
    first_year: Optional[int] = None
    end_year: Optional[int] = None
    max_asn: Optional[int] = None
    train_len: int = 14
    horizon: int = 5
    confidence: float = 0.95
    candidate_specs: list = field(default_factory=lambda: [arima.ArimaSpec.parse(s)
                                                            for s in DEFAULT_SPECS])
    max_lag: int = 12
    df_trend: str = "constant"
    penalty: str = "sic"
    params_per_cp: int = 2
    max_cps: int = 5
    Q: int = 5
    iaav_diff: int = 1
    compare: list = field(default_factory=list)
    drop_threshold: float = 30.0
    format: str = "csv"

    def validate(self):
        if not 0 < self.confidence < 1:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence}")
        if self.train_len < 3 or self.horizon < 1:
            raise ConfigError("train_len must be >= 3 and horizon >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.iaav_diff not in (1, 2):
            raise ConfigError("iaav_diff must be 1 or 2")
        for triple in self.compare:
            if len(triple) != 3:
                raise ConfigError(f"compare entries are base/within/across, got {triple!r}")
        if not self.countries and not self.region_label:
            raise ConfigError("no countries and no region label configured")

    @property
    def labels(self) -> list:
        return ([self.region_label] if self.region_label else []) + list(self.countries)


_LIST_KEYS = {"countries", "candidate_specs", "compare"}


def _convert(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(AnalysisConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown configuration key {name!r}")
    raw = raw.strip()
    if name in _LIST_KEYS:
        # specs contain commas themselves, so they are separated by ';'
        sep = ";" if name == "candidate_specs" else ","
        items = [t.strip() for t in raw.split(sep) if t.strip()]
        if name == "countries":
            return [c.upper() for c in items]
        if name == "candidate_specs":
            return [arima.ArimaSpec.parse(t) for t in items]
        return [tuple(x.strip().upper() for x in t.split("/")) for t in items]
    kind = kinds[name]
    if raw.lower() in ("", "none", "null"):
        return None
    if "int" in str(kind):
        return int(raw)
    if "float" in str(kind):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` comments and blank lines ignored."""
    out = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise ConfigError(f"config line {number}: expected key = value")
        key = key.strip().replace("-", "_")
        out[key] = _convert(key, value)
    return out


def load_config(path, **overrides) -> AnalysisConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return AnalysisConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ------------------------------------------------------------------ pipeline

@dataclass
class ReportBundle:
    tables: dict = field(default_factory=dict)

    def add(self, name: str, rows) -> None:
        self.tables.setdefault(name, []).extend(rows)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.tables), indent=2, allow_nan=True) + "\n"

    def to_csv(self) -> dict:
        return {name: rows_to_csv(rows) for name, rows in self.tables.items()}

    def write(self, out_dir, fmt: str = "csv") -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out / "report.json"
            path.write_text(self.to_json())
            return [path]
        paths = []
        for name, text in self.to_csv().items():
            path = out / f"{name}.csv"
            path.write_text(text)
            paths.append(path)
        return paths


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    return obj


def format_cell(value, sig: Optional[int] = None) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if sig is not None and math.isfinite(value):
            return f"{float(value):.{sig}g}"
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ";".join(format_cell(v, sig) for v in value)
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return str(value)


def rows_to_csv(rows, sig: Optional[int] = None) -> str:
    buf = io.StringIO()
    columns = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c), sig) for c in columns])
    return buf.getvalue()


def build_series(records, config: AnalysisConfig) -> dict:
    out = {}
    for label in config.labels:
        code = None if label == config.region_label else label
        s = ingest.build_annual_series(records, code, config.resource_type, config.end_year,
                                       label=label, max_asn=config.max_asn)
        if config.first_year is not None:
            s = s.window(first_year=config.first_year)
        out[label] = s
    return out


def residual_checks(fit: arima.ArimaFit, max_lag: int = 12) -> dict:
    e = fit.residuals
    out = {"jb_p": None, "sw_p": None, "acf_ok": None}
    if e.size >= 8:
        try:
            out["jb_p"] = series_stats.jarque_bera(e).p_value
            out["sw_p"] = series_stats.shapiro_wilk(e).p_value
        except AnalysisError:
            pass
    lag = min(max_lag, e.size - 1)
    if lag >= 1:
        try:
            out["acf_ok"] = not series_stats.acf(e, lag).significant_lags()
        except AnalysisError:
            pass
    out["passed"] = (out["jb_p"] is not None and out["jb_p"] > series_stats.ALPHA
                     and out["sw_p"] is not None and out["sw_p"] > series_stats.ALPHA
                     and bool(out["acf_ok"]))
    return out


def select_model(candidates: list) -> Optional[int]:
    """Index of the preferred candidate: residual tests passed, then RMSE, then AICc."""
    def key(item):
        i, c = item
        rmse = c.get("rmse")
        return (not c.get("passed", False),
                math.inf if rmse is None else rmse,
                c.get("aicc", math.inf), i)
    ok = [(i, c) for i, c in enumerate(candidates) if c.get("aicc") is not None]
    return min(ok, key=key)[0] if ok else None


def _analyse_models(label, s: ingest.AnnualCountSeries, config, bundle):
    y = s.values
    n_train = config.train_len
    observed = y[n_train:n_train + config.horizon]
    candidates = []
    for spec in config.candidate_specs:
        info = {"spec": spec}
        try:
            full = arima.fit(y, spec)
            info.update(aicc=full.aicc, fit=full, **residual_checks(full, config.max_lag))
            train = arima.fit(y[:n_train], spec)
            fc = arima.forecast(train, config.horizon, config.confidence)
            info["forecast"] = fc
            if observed.size == config.horizon:
                info["rmse"] = arima.holdout_rmse(observed, fc.points)
        except AnalysisError as exc:
            bundle.add("errors", [{"label": label, "stage": spec.label, "error": str(exc)}])
            continue
        candidates.append(info)
    best = select_model(candidates)
    for i, c in enumerate(candidates):
        f = c["fit"]
        for name, coef, z, sig in arima.coefficient_significance(f):
            j = f.coef_names.index(name)
            bundle.add("models", [{
                "label": label, "model": c["spec"].label, "coef": name,
                "estimate": coef, "se": float(f.coeff_se[j]), "z": z, "significant": sig,
                "aicc": f.aicc, "sigma2": f.sigma2, "loglik": f.loglik,
                "jb_p": c["jb_p"], "sw_p": c["sw_p"], "residual_acf_ok": c["acf_ok"],
                "residuals_ok": c["passed"], "rmse": c.get("rmse"), "selected": i == best,
            }])
        origin = s.start_year + n_train - 1
        for row in c["forecast"].rows(origin):
            k = row["h"] - 1
            row["observed"] = float(observed[k]) if k < observed.size else None
            bundle.add("forecasts", [{"label": label, "model": c["spec"].label,
                                      "selected": i == best, **row}])
    return candidates


def _analyse_changepoints(label, s, config, bundle):
    x = series_stats.iaav(s.values)
    origin = s.start_year + 1
    if config.iaav_diff == 2:
        x = np.abs(np.diff(x))
        origin += 1
    pen = changepoint.PenaltySpec.parse(config.penalty, config.params_per_cp)
    bs = changepoint.binseg(x, pen, config.max_cps)
    sn = changepoint.segneigh(x, pen, config.Q)
    common = changepoint.match_changepoints(bs.changepoints, sn.changepoints)
    rows = []
    for res in (bs, sn):
        rows.append({"label": label, "method": res.method, "penalty": pen.kind,
                     "beta": res.beta, "changepoints": res.changepoints,
                     "years": res.years(origin), "segment_variances": res.segment_variances,
                     "total_cost": res.total_cost})
    bundle.add("changepoints", rows)
    summary = {"label": label, "iaav_diff": config.iaav_diff,
               "consensus_years": [origin + t for t in common]}
    if common:
        cp = common[0]
        try:
            before, after = changepoint.iaav_growth_rates(x, cp)
            summary.update(growth_before_pct=before, growth_after_pct=after,
                           slope_before=changepoint.segment_growth(x[:cp + 1])[1],
                           slope_after=changepoint.segment_growth(x[cp + 1:])[1])
        except AnalysisError as exc:
            summary["note"] = str(exc)
    else:
        try:
            rate, slope = changepoint.segment_growth(x)
            summary.update(growth_pct=rate, slope=slope)
        except AnalysisError as exc:
            summary["note"] = str(exc)
    bundle.add("changepoint_summary", [summary])


def run_pipeline(config: AnalysisConfig, records=None, snapshots=None) -> ReportBundle:
    config.validate()
    if records is None:
        if not config.delegated:
            raise ConfigError("no delegated statistics file configured")
        with open(config.delegated, "rb") as fh:
            records = ingest.parse_delegated(fh)
    series = build_series(records, config)
    need = config.train_len + config.horizon
    for label, s in series.items():
        if len(s) < need:
            raise ConfigError(f"{label}: train_len + horizon = {need} exceeds series "
                              f"length {len(s)}")

    bundle = ReportBundle()
    for label, s in series.items():
        bundle.add("series", [{"label": label, "year": int(yr), "count": c}
                              for yr, c in zip(s.years, s.counts)])

    for label, s in series.items():
        stage = "characterize"
        try:
            ch = series_stats.characterize(s.values, min(config.max_lag, len(s) - 1),
                                           config.df_trend)
            for lag, v in zip(ch["acf"].lags, ch["acf"].values):
                p = ch["pacf"].at(int(lag)) if lag >= 1 else None
                bundle.add("correlogram", [{"label": label, "lag": int(lag), "acf": v,
                                            "pacf": p, "bound": ch["acf"].conf_bound}])
            for name in ("dickey_fuller", "jarque_bera", "shapiro_wilk"):
                t = ch.get(name)
                if t is not None:
                    bundle.add("tests", [{"label": label, "test": name, "statistic": t.statistic,
                                          "p_value": t.p_value, "p_bracket": t.p_bracket,
                                          "reject_null": t.reject_null}])
            stage = "models"
            _analyse_models(label, s, config, bundle)
            stage = "changepoint"
            _analyse_changepoints(label, s, config, bundle)
        except AnalysisError as exc:
            log.warning("%s: %s stage failed: %s", label, stage, exc)
            bundle.add("errors", [{"label": label, "stage": stage, "error": str(exc)}])

    trend_input = {label: (s.values, s.start_year) for label, s in series.items()}
    try:
        bundle.add("trend", trend.trend_table(trend_input, config.region_label))
    except AnalysisError as exc:
        bundle.add("errors", [{"label": "*", "stage": "trend", "error": str(exc)}])

    _correlations(series, config, bundle)

    if config.snapshots or snapshots is not None:
        if snapshots is None:
            snapshots = ingest.load_snapshot_dir(config.snapshots)
        _reachability(records, snapshots, config, bundle)
    return bundle


def _correlations(series, config, bundle):
    fits = {label: trend.rw_drift_trend(s.values, s.start_year) for label, s in series.items()}
    cache = {}

    def corr(a, b):
        if (a, b) not in cache:
            r, n = trend.trend_correlation(fits[a], fits[b])
            cache[(a, b)] = (r, n)
            bundle.add("correlations", [{"a": a, "b": b, "r": r, "n": n,
                                         "z": trend.fisher_z(r) if abs(r) < 1 else None}])
        return cache[(a, b)]

    for base, within, across in config.compare:
        try:
            r1, n1 = corr(base, within)
            r2, n2 = corr(base, across)
            res = trend.compare_correlations(r1, n1, r2, n2)
        except (AnalysisError, KeyError) as exc:
            bundle.add("errors", [{"label": base, "stage": "compare", "error": str(exc)}])
            continue
        bundle.add("comparisons", [{"base": base, "within": within, "across": across,
                                    "r1": r1, "r2": r2, "n1": n1, "n2": n2, "z1": res.z1,
                                    "z2": res.z2, "zd": res.zd, "p_value": res.p_value,
                                    "reject_equal": res.reject_equal}])


def _reachability(records, snapshots, config, bundle):
    try:
        stats = reachability.reachability_table(records, snapshots, list(config.countries),
                                                region_label=config.region_label)
    except AnalysisError as exc:
        bundle.add("errors", [{"label": "*", "stage": "reachability", "error": str(exc)}])
        return
    bundle.add("reachability", [s.row() for s in stats])
    if len(snapshots) < 2:
        return
    for label in config.labels:
        code = None if label == config.region_label else label
        daily = reachability.daily_counts(snapshots, records, code)
        for day, drop in reachability.drop_events(daily, config.drop_threshold):
            bundle.add("drop_events", [{"label": label, "date": day, "drop_pct": drop}])
