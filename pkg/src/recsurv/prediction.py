"""Expected numbers of records broken at a future Games.

A record that has stood ``t`` years falls within the next ``horizon`` years
with probability ``(S(t) - S(t + horizon)) / S(t)``. Multiplying by the number
of standing records set in each year and summing gives the expected count.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass
from typing import Mapping

from .exceptions import DataValidationError
from .nonparametric import SurvivalCurve

log = logging.getLogger(__name__)

ESTIMATOR_LABELS = {
    "KM": "Kaplan-Meier",
    "WangChang": "Wang-Chang",
    "GeneralizedKM": "Generalized KM",
    "Frailty": "MLE Frailty",
}


def conditional_break_probability(curve: SurvivalCurve, t: float, horizon: float = 4) -> float:
    """``P(T <= t + horizon | T > t)`` from a step survival curve.

    ``S(0) = 1``. Raises when ``S(t) = 0`` or when ``t + horizon`` lies past
    the last support point of the curve, where the estimate is unreliable.
    """
    if t < 0:
        raise DataValidationError("t must be non-negative")
    if t + horizon > curve.max_time:
        raise DataValidationError(
            f"t + horizon = {t + horizon:g} exceeds the curve support ({curve.max_time:g})")
    s_t = curve(t)
    if s_t <= 0:
        raise DataValidationError(f"S({t:g}) = 0; conditional probability undefined")
    return (s_t - curve(t + horizon)) / s_t


@dataclass(frozen=True)
class CohortPrediction:
    year_set: int
    at_risk_count: int
    survived_years: float
    conditional_probability: float
    expected_breaks: float


@dataclass(frozen=True)
class PredictionTable:
    estimator: str
    games_year: int
    rows: tuple[CohortPrediction, ...]
    excluded: tuple[int, ...] = ()

    @property
    def total(self) -> float:
        return sum(r.expected_breaks for r in self.rows)

    def cell(self, year_set: int) -> float:
        for r in self.rows:
            if r.year_set == year_set:
                return r.expected_breaks
        raise KeyError(year_set)


def predict_counts(curves: Mapping[str, SurvivalCurve], cohorts: Mapping[int, int],
                   games_year: int, horizon: float = 4) -> dict[str, PredictionTable]:
    """Expected breaks per cohort for each survival estimator.

    Parameters
    ----------
    curves : mapping of estimator name to curve
    cohorts : mapping of year set to number of standing records
    games_year : the Games being forecast; a record set in year ``y`` has
        survived ``games_year - horizon - y`` years when that Games begins.

    Cohorts whose window runs past a curve's support are left out with a
    warning.
    """
    out = {}
    for name, curve in curves.items():
        rows, excluded = [], []
        for year in sorted(cohorts, reverse=True):
            count = int(cohorts[year])
            t = games_year - horizon - year
            try:
                p = conditional_break_probability(curve, t, horizon)
            except DataValidationError as exc:
                msg = f"{name}: cohort {year} excluded ({exc})"
                warnings.warn(msg, stacklevel=2)
                log.warning(msg)
                excluded.append(year)
                continue
            rows.append(CohortPrediction(year, count, float(t), p, count * p))
        out[name] = PredictionTable(name, games_year, tuple(rows), tuple(excluded))
    return out


def prediction_csv(tables: Mapping[str, PredictionTable], fmt: str = ".6g") -> str:
    """Estimators as rows, cohort years as columns, then the total."""
    years = sorted({r.year_set for t in tables.values() for r in t.rows}, reverse=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["estimator"] + [str(y) for y in years] + ["Total"])
    for name, table in tables.items():
        cells = []
        for y in years:
            try:
                cells.append(format(table.cell(y), fmt))
            except KeyError:
                cells.append("")
        w.writerow([ESTIMATOR_LABELS.get(name, name)] + cells + [format(table.total, fmt)])
    return buf.getvalue()
