"""Command-line front end.

Every run writes its artifacts plus ``manifest.json`` into ``--output``.
Exit codes: 0 success, 1 usage error, 2 data validation error, 3 numerical
failure (a diagnostic ``error.json`` is written alongside).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cox import build_risk_intervals, fit_cox, wlw_pooled_fit
from .data import (STANDARD_COVARIATES, SpellDataset, dataset_to_json, expand_person_period,
                   ingest_csv, spells_to_csv)
from .datasets import DERIVED_COHORTS, published_curves
from .exceptions import DataValidationError, NumericalError
from .frailty import fit_frailty
from .logistic import fit_logit, residuals
from .nonparametric import generalized_km, kaplan_meier, wang_chang
from .prediction import predict_counts, prediction_csv
from .simulate import SimConfig, generate
from .svg import residual_svg, survival_svg
from .workflow import (compare_aic, dependence_check, estimate_all_models, format_model_table,
                       screen_covariates)

log = logging.getLogger("recsurv")

COMMANDS = ("ingest", "km", "survfit", "logrank", "depcheck", "coxfit", "logit", "models",
            "predict", "simulate")
ESTIMATOR_TAGS = {"km": "KM", "wc": "WangChang", "gkm": "GeneralizedKM", "frailty": "Frailty"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def _round(obj):
    """Round floats to 6 significant digits for stable JSON output."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if not np.isfinite(f) else float(format(f, ".6g"))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False) + "\n"


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for r in rows:
        w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


class Run:
    """Collects artifacts for one invocation and writes them with a manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.output)
        self.artifacts: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.artifacts[name] = text

    def add_table(self, stem: str, rows: list[dict], payload=None):
        if self.args.format == "json":
            self.add(stem + ".json", _dumps(payload if payload is not None else rows))
        else:
            self.add(stem + ".csv", _rows_csv(rows))

    def write(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.artifacts.items():
            (self.out / name).write_text(text, encoding="utf-8")
        self._manifest(sorted(self.artifacts))

    def _manifest(self, outputs):
        inputs = []
        for attr in ("input", "cohorts", "config"):
            p = getattr(self.args, attr, None)
            if p:
                digest = hashlib.sha256(Path(p).read_bytes()).hexdigest()
                inputs.append({"path": str(p), "sha256": digest})
        options = {k: v for k, v in sorted(vars(self.args).items())
                   if k not in ("command", "output", "func", "input", "cohorts", "config")}
        manifest = {"command": self.args.command, "inputs": inputs, "options": options,
                    "seed": self.args.seed, "tool_version": __version__,
                    "outputs": outputs}
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                                encoding="utf-8")


def _load(path) -> SpellDataset:
    return ingest_csv(path)


def _read_durations(path):
    """``(time, status)`` pairs and gap histories from a spell or duration CSV.

    A file without ``year_set`` is read as bare durations with columns
    ``duration`` (or ``time``), ``status`` and optionally ``event_id``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    header = [h.strip() for h in header]
    if "year_set" in header:
        data = _load(path)
        t, d = data.durations()
        return np.column_stack([t, d]), data.gap_histories()
    tcol = "duration" if "duration" in header else "time"
    if tcol not in header or "status" not in header:
        raise DataValidationError("duration file needs columns duration (or time) and status", 1)
    groups: dict[str, list] = {}
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            try:
                t = float(row[tcol])
                s = row["status"].strip()
                d = 1 if s.lower() in ("1", "broken") else 0 if s.lower() in ("0", "censored") \
                    else None
            except (ValueError, KeyError):
                raise DataValidationError("malformed row", i) from None
            if d is None:
                raise DataValidationError(f"bad status {s!r}", i)
            pairs.append((t, d))
            groups.setdefault(row.get("event_id") or f"row{i}", []).append((t, d))
    hist = [(np.array([g for g, _ in v]), np.array([s for _, s in v])) for v in groups.values()]
    return np.array(pairs, dtype=float).reshape(-1, 2), hist


def _covariate_list(text: str | None) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()] if text else []


def cmd_ingest(args, run: Run):
    data = _load(args.input)
    if args.format == "json":
        run.add("dataset.json", dataset_to_json(data) + "\n")
    else:
        run.add("dataset.csv", spells_to_csv(data))
    summary = {"n_spells": len(data), "n_broken": data.n_broken, "n_censored": data.n_censored,
               "n_events": len(data.by_event()), "missing": data.missing_counts()}
    run.add("summary.json", _dumps(summary))


def _curve_payload(curve):
    return curve.to_dict()


def _emit_curve(run: Run, stem: str, curve, svg: bool, title: str):
    if run.args.format == "json":
        run.add(stem + ".json", _dumps(_curve_payload(curve)))
    else:
        run.add(stem + ".csv", curve.to_csv())
    if svg:
        run.add(stem + ".svg", survival_svg({curve.estimator: curve}, title))


def cmd_km(args, run: Run):
    pairs, _ = _read_durations(args.input)
    _emit_curve(run, "km", kaplan_meier(pairs), args.svg, "Kaplan-Meier")


def cmd_survfit(args, run: Run):
    pairs, hist = _read_durations(args.input)
    tag = ESTIMATOR_TAGS[args.estimator]
    if tag == "KM":
        curve = kaplan_meier(pairs)
    elif tag == "WangChang":
        curve = wang_chang(hist)
    elif tag == "GeneralizedKM":
        curve = generalized_km(hist)
    else:
        fit = fit_frailty(hist, alpha_fixed=args.alpha_fixed)
        curve = fit.curve()
        run.add("frailty_fit.json", _dumps(json.loads(fit.to_json())))
    _emit_curve(run, f"survfit_{args.estimator}", curve, args.svg, f"{tag} survival")


def cmd_logrank(args, run: Run):
    data = _load(args.input)
    specs = STANDARD_COVARIATES
    if args.covariate:
        by_name = {s.name: s for s in STANDARD_COVARIATES}
        unknown = [c for c in args.covariate if c not in by_name]
        if unknown:
            raise UsageError(f"unknown covariate(s) {unknown}")
        specs = [by_name[c] for c in args.covariate]
    report = screen_covariates(data, specs)
    run.add_table("screening", report.to_rows(),
                  {"level": report.level, "covariates": report.to_rows()})


def cmd_depcheck(args, run: Run):
    data = _load(args.input)
    n_lo = args.n_min if args.n_min is not None else args.lag + 1
    report = dependence_check(data, range(n_lo, args.n_max + 1), args.lag, args.subset,
                              _covariate_list(args.covariates))
    run.add_table("dependence", report.to_rows(), {"cells": report.to_rows()})


def cmd_coxfit(args, run: Run):
    data = _load(args.input)
    covs = _covariate_list(args.covariates)
    scheme = args.scheme.upper().replace("-", "_")
    sub = data.complete_cases(covs)
    intervals = build_risk_intervals(sub, scheme, covs, data.calendar)
    if scheme == "WLW" and args.per_stratum:
        fits = wlw_pooled_fit(intervals, covs, per_stratum=True)
        run.add("coxfit.json", _dumps({str(k): f.to_dict() for k, f in fits.items()}))
        return
    robust = "none" if args.no_cluster else "by_cluster_key"
    fit = fit_cox(intervals, covs, scheme, robust)
    run.add("coxfit.json", _dumps(fit.to_dict()))


def cmd_logit(args, run: Run):
    data = _load(args.input)
    covs = _covariate_list(args.covariates)
    rows = expand_person_period(data.complete_cases(covs), data.calendar)
    fit = fit_logit(rows, covs, include_time_terms=not args.no_time_terms)
    run.add("logit.json", _dumps(fit.to_dict()))
    res = residuals(fit)
    run.add("residuals.csv", _rows_csv([
        {"record_key": f"{k[0]}#{k[1]}", "category": c, "residual": r} for k, c, r in res]))
    if args.svg:
        run.add("residuals.svg", residual_svg(res))


def cmd_models(args, run: Run):
    data = _load(args.input)
    covs = _covariate_list(args.covariates)
    if not covs:
        covs = screen_covariates(data).kept
    results = estimate_all_models(data, covs)
    ranking = compare_aic(results)
    run.add("models.txt", format_model_table(results))
    run.add("models.json", _dumps({"models": [r.to_dict() for r in results],
                                   "aic_ranking": [{"model": n, "aic": a} for n, a in ranking]}))


def _read_cohorts(path) -> dict[int, int]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out[int(row["year_set"])] = int(row["count"])
            except (KeyError, ValueError):
                raise DataValidationError("cohort file needs integer year_set,count", i) from None
    return out


def cmd_predict(args, run: Run):
    cohorts = _read_cohorts(args.cohorts) if args.cohorts else dict(DERIVED_COHORTS)
    if args.input:
        _, hist = _read_durations(args.input)
        curves = {"WangChang": wang_chang(hist), "GeneralizedKM": generalized_km(hist),
                  "Frailty": fit_frailty(hist).curve()}
    else:
        pub = published_curves()
        curves = {k: pub[k] for k in ("WangChang", "GeneralizedKM", "Frailty")}
    tables = predict_counts(curves, cohorts, args.year)
    if args.format == "json":
        run.add("predictions.json", _dumps({
            name: {"rows": [vars(r) for r in t.rows], "total": t.total,
                   "excluded": list(t.excluded)} for name, t in tables.items()}))
    else:
        run.add("predictions.csv", prediction_csv(tables))


def cmd_simulate(args, run: Run):
    cfg = SimConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        cfg = SimConfig(**{**vars(cfg), "seed": args.seed})
    data = generate(cfg)
    if args.format == "json":
        run.add("simulated.json", dataset_to_json(data) + "\n")
    else:
        run.add("simulated.csv", spells_to_csv(data))


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, top):
        # subcommands must not overwrite values given before the subcommand
        dflt = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=dflt(None))
        parser.add_argument("--output", default=dflt("."), help="directory for artifacts")
        parser.add_argument("--format", choices=("csv", "json"), default=dflt("csv"))

    p = _Parser(prog="recsurv", description="Recurrent-event survival analysis of record spells.")
    global_flags(p, True)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        global_flags(sp, False)
        sp.set_defaults(func=func)
        return sp

    sp = cmd("ingest", cmd_ingest, "validate a record CSV and report missing values")
    sp.add_argument("--input", required=True)

    sp = cmd("km", cmd_km, "Kaplan-Meier curve of record durations")
    sp.add_argument("--input", required=True)
    sp.add_argument("--svg", action="store_true")

    sp = cmd("survfit", cmd_survfit, "survival curve by estimator")
    sp.add_argument("--input", required=True)
    sp.add_argument("--estimator", choices=sorted(ESTIMATOR_TAGS), default="km")
    sp.add_argument("--alpha-fixed", type=float, default=None)
    sp.add_argument("--svg", action="store_true")

    sp = cmd("logrank", cmd_logrank, "log-rank covariate screening")
    sp.add_argument("--input", required=True)
    sp.add_argument("--covariate", action="append")

    sp = cmd("depcheck", cmd_depcheck, "lagged-duration dependence tests")
    sp.add_argument("--input", required=True)
    sp.add_argument("--lag", type=int, choices=(1, 2), default=1)
    sp.add_argument("--subset", choices=("all", "track_field", "swimming"), default="all")
    sp.add_argument("--n-min", type=int, default=None)
    sp.add_argument("--n-max", type=int, default=12)
    sp.add_argument("--covariates", default="")

    sp = cmd("coxfit", cmd_coxfit, "fit one recurrent-event Cox model")
    sp.add_argument("--input", required=True)
    sp.add_argument("--scheme", choices=("ag", "pwp-tt", "pwp-gt", "wlw"), default="ag")
    sp.add_argument("--covariates", required=True)
    sp.add_argument("--per-stratum", action="store_true")
    sp.add_argument("--no-cluster", action="store_true")

    sp = cmd("logit", cmd_logit, "discrete-time logistic model")
    sp.add_argument("--input", required=True)
    sp.add_argument("--covariates", default="")
    sp.add_argument("--no-time-terms", action="store_true")
    sp.add_argument("--svg", action="store_true")

    sp = cmd("models", cmd_models, "fit all five models and rank them by AIC")
    sp.add_argument("--input", required=True)
    sp.add_argument("--covariates", default="")

    sp = cmd("predict", cmd_predict, "expected record breaks at a future Games")
    sp.add_argument("--year", type=int, default=2012)
    sp.add_argument("--cohorts", default=None)
    sp.add_argument("--input", default=None, help="estimate curves from data instead")

    sp = cmd("simulate", cmd_simulate, "simulate a record CSV")
    sp.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "recsurv: error: a subcommand is required")
        run = Run(args)
        args.func(args, run)
        run.write()
        return 0
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"recsurv: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"recsurv: numerical failure: {exc}", file=sys.stderr)
        out = Path(getattr(args, "output", "."))
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(
            {"command": args.command, "error": type(exc).__name__, "message": str(exc)},
            indent=2) + "\n", encoding="utf-8")
        return 3
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
