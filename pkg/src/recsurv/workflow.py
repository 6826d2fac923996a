"""End-to-end analysis: screening, dependence checks, model fitting, AIC ranking."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .cox import build_risk_intervals, fit_cox, fit_cox_arrays
from .data import (CATEGORIES, STANDARD_COVARIATES, CovariateSpec, SpellDataset,
                   build_lagged_dataset, dichotomize, expand_person_period)
from .exceptions import RecsurvError
from .logistic import fit_logit
from .nonparametric import log_rank

SCREEN_LEVEL = 0.05
RETAIN_LEVEL = 0.10

SUBSETS = {
    "all": None,
    "track_field": ("Track", "Field"),
    "swimming": ("Swimming",),
}

# (label, scheme); scheme None marks the logistic model
MODELS = (
    ("Andersen-Gill", "AG"),
    ("Prentice Elapsed Time", "PWP_TT"),
    ("Prentice Gap Time", "PWP_GT"),
    ("Wei", "WLW"),
    ("Logistic", None),
)


@dataclass(frozen=True)
class ScreeningEntry:
    name: str
    label: str
    p_value: float | None
    statistic: float | None
    df: int | None
    keep: bool
    threshold: float | None = None
    note: str = ""


@dataclass(frozen=True)
class ScreeningReport:
    entries: tuple[ScreeningEntry, ...]
    level: float = SCREEN_LEVEL

    @property
    def kept(self) -> list[str]:
        return [e.name for e in self.entries if e.keep]

    def to_rows(self) -> list[dict]:
        return [{"covariate": e.label, "p_value": e.p_value, "keep": e.keep,
                 "threshold": e.threshold, "note": e.note} for e in self.entries]

    def to_json(self) -> str:
        return json.dumps({"level": self.level, "covariates": self.to_rows()}, indent=2)


def _screen_one(data: SpellDataset, spec: CovariateSpec, level: float) -> ScreeningEntry:
    threshold = None
    label = spec.name
    if spec.kind == "Categorical" and spec.name == "Category":
        keys = [s.category for s in data]
    else:
        raw = [s.value(spec.name) for s in data]
        if spec.kind == "Quantitative":
            label = spec.name + "Cat"
            try:
                raw, threshold = dichotomize(raw)
            except RecsurvError as exc:
                return ScreeningEntry(spec.name, label, None, None, None, False, None,
                                      f"untestable: {exc}")
        keys = raw
    groups: dict = {}
    for s, key in zip(data, keys):
        if key is None:
            continue
        groups.setdefault(key, []).append((s.duration, s.event))
    if len(groups) < 2:
        return ScreeningEntry(spec.name, label, None, None, None, False, threshold,
                              "untestable: fewer than two observed levels")
    order = [c for c in CATEGORIES if c in groups] if spec.name == "Category" else sorted(groups)
    try:
        res = log_rank([groups[g] for g in order])
    except RecsurvError as exc:
        return ScreeningEntry(spec.name, label, None, None, None, False, threshold,
                              f"untestable: {exc}")
    return ScreeningEntry(spec.name, label, res.p_value, res.statistic, res.df,
                          res.p_value < level, threshold)


def screen_covariates(data: SpellDataset, covariate_specs: Sequence[CovariateSpec] = STANDARD_COVARIATES,
                      level: float = SCREEN_LEVEL) -> ScreeningReport:
    """Log-rank screen of each covariate on record durations.

    Binary covariates split records into two groups, quantitative ones are
    first split at their mean, and ``Category`` gives a five-group test. A
    covariate is kept when its p-value is below ``level``; covariates with
    fewer than two observed levels are reported as untestable.
    """
    return ScreeningReport(tuple(_screen_one(data, s, level) for s in covariate_specs), level)


@dataclass(frozen=True)
class DependenceCell:
    n: int
    k: int
    subset: str
    p_value: float | None
    coefficient: float | None = None
    n_rows: int = 0
    reason: str = ""


@dataclass(frozen=True)
class DependenceReport:
    cells: tuple[DependenceCell, ...]

    def p_values(self) -> dict[int, float | None]:
        return {c.n: c.p_value for c in self.cells}

    def to_rows(self) -> list[dict]:
        return [{"n": c.n, "k": c.k, "subset": c.subset, "p_value": c.p_value,
                 "coefficient": c.coefficient, "n_rows": c.n_rows, "reason": c.reason}
                for c in self.cells]

    def to_json(self) -> str:
        return json.dumps({"cells": self.to_rows()}, indent=2)


def subset_dataset(data: SpellDataset, subset: str) -> SpellDataset:
    if subset not in SUBSETS:
        raise ValueError(f"unknown subset {subset!r}; choose from {sorted(SUBSETS)}")
    cats = SUBSETS[subset]
    return data if cats is None else data.filter(lambda s: s.category in cats)


def lag_test(data: SpellDataset, n: int, k: int, covariates: Sequence[str] = (),
             subset: str = "all") -> DependenceCell:
    """Wald test of the lagged-duration coefficient for record ``n``."""
    try:
        rows = build_lagged_dataset(data, n, k, min_events=2)
    except RecsurvError as exc:
        return DependenceCell(n, k, subset, None, reason=str(exc))
    X, t, d = [], [], []
    for r in rows:
        vals = [r.outcome.value(c) for c in covariates]
        if any(v is None for v in vals):
            continue
        X.append([r.lag_duration] + vals)
        t.append(r.duration)
        d.append(r.event)
    if len(X) < 2 or sum(d) == 0:
        return DependenceCell(n, k, subset, None, n_rows=len(X), reason="too few events")
    try:
        fit = fit_cox_arrays(t, d, np.array(X), ("lag",) + tuple(covariates))
    except RecsurvError as exc:
        return DependenceCell(n, k, subset, None, n_rows=len(X), reason=str(exc))
    z = fit.coefficients[0] / fit.model_se[0]
    return DependenceCell(n, k, subset, float(2.0 * stats.norm.sf(abs(z))),
                          float(fit.coefficients[0]), len(X))


def dependence_check(data: SpellDataset, n_range: Sequence[int], k: int,
                     subset: str = "all", covariates: Sequence[str] = ()) -> DependenceReport:
    """Lagged-duration dependence tests over a range of record numbers.

    For each ``n`` the ``n``-th records of all qualifying events are regressed
    (plain Cox model) on the duration of record ``n - k`` plus ``covariates``.
    Cells that cannot be fitted carry ``p_value=None`` and a reason.
    """
    if k not in (1, 2):
        raise ValueError("lag k must be 1 or 2")
    sub = subset_dataset(data, subset)
    return DependenceReport(tuple(lag_test(sub, n, k, covariates, subset) for n in n_range))


@dataclass(frozen=True, eq=False)
class ModelResult:
    name: str
    scheme: str | None
    initial_covariates: tuple[str, ...]
    final_covariates: tuple[str, ...] = ()
    fit: object = None
    initial_fit: object = field(default=None, repr=False)
    error: str | None = None

    @property
    def aic(self) -> float | None:
        return None if self.fit is None else float(self.fit.aic)

    def estimates(self) -> dict[str, tuple[float, float, float]]:
        """name -> (estimate, reported SE, p-value); robust SEs for Cox models."""
        if self.fit is None:
            return {}
        f = self.fit
        se = f.robust_se if self.scheme else f.se
        return {n: (float(b), float(s), float(p))
                for n, b, s, p in zip(f.names, f.coefficients, se, f.p_values)}

    def to_dict(self) -> dict:
        return {"model": self.name, "scheme": self.scheme or "Logistic",
                "initial_covariates": list(self.initial_covariates),
                "final_covariates": list(self.final_covariates),
                "fit": None if self.fit is None else self.fit.to_dict(),
                "error": self.error}


def _fit_model(data: SpellDataset, scheme, covariates):
    sub = data.complete_cases(covariates)
    if scheme is None:
        return fit_logit(expand_person_period(sub, data.calendar), covariates,
                         include_time_terms=True)
    intervals = build_risk_intervals(sub, scheme, covariates, data.calendar)
    return fit_cox(intervals, covariates, scheme, "by_cluster_key")


def _significant(fit, scheme, names, level) -> tuple[str, ...]:
    p = fit.p_values
    return tuple(n for n, pv in zip(fit.names, p) if n in names and pv < level)


def _estimate_one(data, label, scheme, covariates, level) -> ModelResult:
    covariates = tuple(covariates)
    try:
        first = _fit_model(data, scheme, covariates)
    except RecsurvError as exc:
        return ModelResult(label, scheme, covariates, error=str(exc))
    keep = _significant(first, scheme, covariates, level)
    if keep == covariates:
        return ModelResult(label, scheme, covariates, keep, first, first)
    try:
        final = _fit_model(data, scheme, keep)
    except RecsurvError as exc:
        return ModelResult(label, scheme, covariates, keep, None, first, str(exc))
    return ModelResult(label, scheme, covariates, keep, final, first)


def estimate_all_models(data: SpellDataset, kept_covariates: Sequence[str],
                        level: float = RETAIN_LEVEL, parallel: bool = False) -> list[ModelResult]:
    """Fit the four Cox schemes and the logistic model, then prune once.

    Every model starts from ``kept_covariates``. Covariates not significant at
    ``level`` (robust Wald test for Cox models, plain for logistic) are dropped
    and the model is refitted a single time. A failing model is reported with
    its error message and does not stop the others.
    """
    jobs = [(label, scheme) for label, scheme in MODELS]
    if parallel:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            futures = [pool.submit(_estimate_one, data, lab, sch, kept_covariates, level)
                       for lab, sch in jobs]
            return [f.result() for f in futures]
    return [_estimate_one(data, lab, sch, kept_covariates, level) for lab, sch in jobs]


def compare_aic(results: Sequence[ModelResult]) -> list[tuple[str, float]]:
    """Models with an AIC, best (lowest) first; ties broken by model name."""
    ranked = [(r.name, r.aic) for r in results if r.aic is not None]
    return sorted(ranked, key=lambda x: (x[1], x[0]))


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.10 else ""


def format_model_table(results: Sequence[ModelResult], width: int = 16) -> str:
    """Plain-text table: one estimate row and one (SE) row per covariate."""
    names: list[str] = []
    for r in results:
        for n in r.initial_covariates:
            if n not in names:
                names.append(n)
    header = ["Variable"] + [r.name for r in results]
    lines = ["".join(h.ljust(width) if i == 0 else h.rjust(width + 6) for i, h in enumerate(header))]
    lines.append("-" * len(lines[0]))
    for n in names:
        est_row, se_row = [n], [""]
        for r in results:
            e = r.estimates().get(n)
            if e is None:
                est_row.append("-")
                se_row.append("")
            else:
                est_row.append(f"{e[0]:.6g}{_stars(e[2])}")
                se_row.append(f"({e[1]:.6g})")
        for row in (est_row, se_row):
            lines.append(row[0].ljust(width) + "".join(c.rjust(width + 6) for c in row[1:]))
    lines.append("-" * len(lines[0]))
    aic = ["AIC"] + ["-" if r.aic is None else f"{r.aic:.6g}" for r in results]
    lines.append(aic[0].ljust(width) + "".join(c.rjust(width + 6) for c in aic[1:]))
    errs = [f"{r.name}: {r.error}" for r in results if r.error]
    if errs:
        lines.append("")
        lines.extend(errs)
    lines.append("*, **, *** : significant at 10, 5, 1 percent; robust SEs for Cox models.")
    return "\n".join(lines) + "\n"


