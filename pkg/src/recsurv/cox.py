"""Cox partial-likelihood regression for recurrent record spells.

Four risk-set schemes turn record spells into ``(start, stop]`` intervals:

``AG``
    Andersen-Gill counting process on the calendar axis (origin = first
    Games), one common stratum.
``PWP_TT``
    Prentice-Williams-Peterson total time: AG intervals stratified by the
    record's sequence number.
``PWP_GT``
    PWP gap time: the clock restarts at zero when a record is set.
``WLW``
    Wei-Lin-Weissfeld marginal model: every record enters the risk set at the
    origin and leaves at its calendar stop time, stratified by sequence.

Ties are handled with the Breslow approximation. Robust standard errors use the
Lin-Wei sandwich with score residuals summed within clusters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .data import DEFAULT_CALENDAR, GamesCalendar, RecordSpell, SpellDataset
from ._newton import inverse_information, newton_raphson
from .exceptions import ConvergenceError, DataValidationError

SCHEMES = ("AG", "PWP_TT", "PWP_GT", "WLW")
MAX_STRATUM = 12


@dataclass(frozen=True, eq=False)
class RiskInterval:
    unit_key: tuple
    cluster_key: object
    stratum: int
    start: float
    stop: float
    status: int
    covariates: np.ndarray

    def __post_init__(self):
        if not self.start < self.stop:
            raise DataValidationError(f"interval {self.unit_key}: start must precede stop")
        if self.status not in (0, 1):
            raise DataValidationError("status must be 0 or 1")
        object.__setattr__(self, "covariates", np.asarray(self.covariates, dtype=float))


def _normalize_scheme(scheme: str) -> str:
    s = scheme.upper().replace("-", "_")
    if s not in SCHEMES:
        raise DataValidationError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return s


def build_risk_intervals(spells: SpellDataset | Iterable[RecordSpell], scheme: str,
                         covariates: Sequence[str] = (),
                         calendar: GamesCalendar | None = None,
                         max_stratum: int = MAX_STRATUM) -> list[RiskInterval]:
    """Translate record spells into risk intervals for ``scheme``.

    Spells missing any of ``covariates`` are dropped (complete-case analysis)
    after the sequence structure has been checked on the full input.
    """
    scheme = _normalize_scheme(scheme)
    if calendar is None:
        calendar = spells.calendar if isinstance(spells, SpellDataset) else DEFAULT_CALENDAR
    spells = list(spells)
    origin = calendar.origin
    present = {s.key for s in spells}
    out = []
    for s in spells:
        if scheme != "AG" and s.sequence > 1 and (s.event_id, s.sequence - 1) not in present:
            raise DataValidationError(
                f"event {s.event_id!r}: record {s.sequence} has no predecessor")
        x = [s.value(n) for n in covariates]
        if any(v is None for v in x):
            continue
        stratum = min(s.sequence, max_stratum)
        if scheme == "AG":
            start, stop, stratum = s.year_set - origin, s.end - origin, 0
        elif scheme == "PWP_TT":
            start, stop = s.year_set - origin, s.end - origin
        elif scheme == "PWP_GT":
            start, stop = 0, s.duration
        else:
            start, stop = 0, s.end - origin
        out.append(RiskInterval(s.key, s.event_id, stratum, float(start), float(stop),
                                s.event, np.array(x, dtype=float)))
    return out


class CoxData:
    """Array form of a list of risk intervals with precomputed risk sets."""

    def __init__(self, start, stop, status, X, strata=None, clusters=None):
        self.start = np.asarray(start, dtype=float)
        self.stop = np.asarray(stop, dtype=float)
        self.status = np.asarray(status, dtype=int)
        X = np.asarray(X, dtype=float)
        self.X = X.reshape(len(self.stop), -1) if X.ndim < 2 else X
        n = len(self.stop)
        self.strata = np.zeros(n, dtype=int) if strata is None else np.asarray(strata)
        self.clusters = np.arange(n) if clusters is None else np.asarray(clusters, dtype=object)
        if not (len(self.start) == n == len(self.status) == self.X.shape[0] == len(self.strata)):
            raise DataValidationError("interval arrays have mismatched lengths")
        if np.any(np.isnan(self.X)):
            raise DataValidationError("covariate matrix has missing values")
        # one (risk set, event set) pair per distinct event time and stratum
        self.risk_sets = []
        for st in np.unique(self.strata):
            in_st = self.strata == st
            ev_times = np.unique(self.stop[in_st & (self.status == 1)])
            for t in ev_times:
                risk = np.flatnonzero(in_st & (self.start < t) & (self.stop >= t))
                dead = np.flatnonzero(in_st & (self.stop == t) & (self.status == 1))
                self.risk_sets.append((risk, dead))
        self.n_events = int(self.status.sum())

    @classmethod
    def from_intervals(cls, intervals: Sequence[RiskInterval]) -> "CoxData":
        if not intervals:
            raise DataValidationError("no risk intervals")
        return cls([iv.start for iv in intervals], [iv.stop for iv in intervals],
                   [iv.status for iv in intervals],
                   np.vstack([iv.covariates.reshape(1, -1) for iv in intervals]),
                   [iv.stratum for iv in intervals], [iv.cluster_key for iv in intervals])

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def log_partial_likelihood(beta, data: CoxData, derivatives: bool = True):
    """Breslow log partial likelihood, with score and Hessian if requested."""
    beta = np.asarray(beta, dtype=float)
    eta = data.X @ beta
    p = data.n_features
    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    for risk, dead in data.risk_sets:
        e_r = eta[risk]
        c = e_r.max()
        w = np.exp(e_r - c)
        s0 = w.sum()
        d = len(dead)
        ll += eta[dead].sum() - d * (c + math.log(s0))
        if derivatives:
            xr = data.X[risk]
            xbar = w @ xr / s0
            grad += data.X[dead].sum(axis=0) - d * xbar
            s2 = (xr * w[:, None]).T @ xr / s0
            hess -= d * (s2 - np.outer(xbar, xbar))
    if derivatives:
        return ll, grad, hess
    return ll


def score_residuals(beta, data: CoxData) -> np.ndarray:
    """Per-interval score residuals under Breslow ties; rows sum to the score."""
    eta = data.X @ np.asarray(beta, dtype=float)
    resid = np.zeros_like(data.X)
    for risk, dead in data.risk_sets:
        e_r = eta[risk]
        w = np.exp(e_r - e_r.max())
        s0 = w.sum()
        xr = data.X[risk]
        xbar = w @ xr / s0
        resid[dead] += data.X[dead] - xbar
        resid[risk] -= (len(dead) * w / s0)[:, None] * (xr - xbar)
    return resid


@dataclass(frozen=True, eq=False)
class CoxFit:
    scheme: str
    names: tuple[str, ...]
    coefficients: np.ndarray
    model_se: np.ndarray
    robust_se: np.ndarray
    model_cov: np.ndarray = field(repr=False)
    robust_cov: np.ndarray = field(repr=False)
    score_residuals: np.ndarray = field(repr=False)
    log_partial_likelihood: float = 0.0
    iterations: int = 0
    converged: bool = True
    n_intervals: int = 0
    n_events: int = 0

    @property
    def aic(self) -> float:
        return -2.0 * self.log_partial_likelihood + 2.0 * len(self.coefficients)

    @property
    def z(self) -> np.ndarray:
        return self.coefficients / self.robust_se

    @property
    def p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    def model_p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.coefficients / self.model_se))

    def coefficient_table(self) -> list[dict]:
        return [
            {"name": n, "estimate": float(b), "model_se": float(m), "robust_se": float(r),
             "z": float(z), "p": float(p)}
            for n, b, m, r, z, p in zip(self.names, self.coefficients, self.model_se,
                                        self.robust_se, self.z, self.p_values)
        ]

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "coefficients": self.coefficient_table(),
                "log_likelihood": self.log_partial_likelihood, "aic": self.aic,
                "iterations": self.iterations, "converged": self.converged,
                "n_intervals": self.n_intervals, "n_events": self.n_events}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fit_arrays(data: CoxData, names, scheme, robust_cluster, max_iter, tol) -> CoxFit:
    p = data.n_features
    if p == 0:
        raise DataValidationError("Cox model needs at least one covariate")
    if data.n_events == 0:
        raise DataValidationError("Cox model needs at least one event")
    beta, ll, grad, hess, it, ok = newton_raphson(
        lambda b: log_partial_likelihood(b, data), np.zeros(p), max_iter, tol)
    if not ok:
        raise ConvergenceError(f"Newton-Raphson did not converge in {max_iter} iterations")
    cov = inverse_information(hess)
    resid = score_residuals(beta, data)
    if robust_cluster in ("by_cluster_key", "cluster"):
        _, inv = np.unique(np.asarray([str(c) for c in data.clusters]), return_inverse=True)
        U = np.zeros((inv.max() + 1, p))
        np.add.at(U, inv, resid)
    elif robust_cluster == "none":
        U = resid
    else:
        raise DataValidationError(f"unknown robust_cluster option {robust_cluster!r}")
    rcov = cov @ (U.T @ U) @ cov
    rcov = (rcov + rcov.T) / 2.0
    return CoxFit(scheme=scheme, names=tuple(names), coefficients=beta,
                  model_se=np.sqrt(np.diag(cov)), robust_se=np.sqrt(np.diag(rcov)),
                  model_cov=cov, robust_cov=rcov, score_residuals=resid,
                  log_partial_likelihood=float(ll), iterations=it, converged=ok,
                  n_intervals=len(data.stop), n_events=data.n_events)


def fit_cox(intervals: Sequence[RiskInterval], names: Sequence[str] | None = None,
            scheme: str = "AG", robust_cluster: str = "by_cluster_key",
            max_iter: int = 100, tol: float = 1e-9) -> CoxFit:
    """Fit a stratified Cox model by Newton-Raphson.

    Parameters
    ----------
    intervals : list of RiskInterval
    names : covariate labels for reporting
    scheme : label stored on the fit
    robust_cluster : ``"by_cluster_key"`` sums score residuals within each
        cluster before forming the sandwich; ``"none"`` treats every interval
        as its own cluster.

    Raises
    ------
    MonotoneLikelihoodError, SingularMatrixError, ConvergenceError
    """
    data = CoxData.from_intervals(intervals)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(data.n_features))
    return _fit_arrays(data, names, _normalize_scheme(scheme), robust_cluster, max_iter, tol)


def fit_cox_arrays(time, status, X, names=None, strata=None, start=None, clusters=None,
                   robust_cluster="none", max_iter=100, tol=1e-9) -> CoxFit:
    """Convenience wrapper for plain right-censored data."""
    time = np.asarray(time, dtype=float)
    start = np.zeros_like(time) if start is None else start
    data = CoxData(start, time, status, X, strata, clusters)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(data.n_features))
    return _fit_arrays(data, names, "AG", robust_cluster, max_iter, tol)


def hazard_ratio(fit: CoxFit, xi, xj) -> float:
    """``exp(beta . (xi - xj))``."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != fit.coefficients.shape or xj.shape != fit.coefficients.shape:
        raise DataValidationError(
            f"covariate vectors must have length {len(fit.coefficients)}")
    return float(np.exp(fit.coefficients @ (xi - xj)))


def wlw_pooled_fit(intervals: Sequence[RiskInterval], names=None, per_stratum: bool = False,
                   max_iter: int = 100, tol: float = 1e-9):
    """WLW marginal fit with one coefficient vector shared across strata.

    With ``per_stratum=True`` each sequence stratum is refitted on its own and
    a ``{stratum: CoxFit}`` mapping is returned instead.
    """
    if not per_stratum:
        return fit_cox(intervals, names, "WLW", "by_cluster_key", max_iter, tol)
    out = {}
    for st in sorted({iv.stratum for iv in intervals}):
        sub = [iv for iv in intervals if iv.stratum == st]
        out[st] = fit_cox(sub, names, "WLW", "by_cluster_key", max_iter, tol)
    return out
