"""Discrete-time logistic model for repeated record breaks.

Each person-period row is one Games at which a record could fall. The model
sets the log-odds of a break to an intercept plus covariate effects, with
optional ``Time`` and ``Time2`` (years since the record was set, and its
square) columns to let the per-Games hazard bend over time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from ._newton import inverse_information, newton_raphson
from .data import PersonPeriodRow
from .exceptions import ConvergenceError, DataValidationError

TIME_TERMS = ("Time", "Time2")


def log_likelihood(beta, X, y, derivatives=True):
    """Bernoulli log-likelihood of a logit model (score and Hessian optional)."""
    eta = X @ np.asarray(beta, dtype=float)
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    if not derivatives:
        return ll
    p = expit(eta)
    grad = X.T @ (y - p)
    hess = -(X * (p * (1.0 - p))[:, None]).T @ X
    return ll, grad, hess


@dataclass(frozen=True, eq=False)
class LogisticFit:
    names: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    intercept_se: float
    se: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    fitted_probabilities: np.ndarray = field(repr=False)
    include_time_terms: bool = False
    covariate_names: tuple[str, ...] = ()
    record_keys: tuple = field(default=(), repr=False)
    categories: tuple = field(default=(), repr=False)
    terms: np.ndarray = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return 1 + len(self.coefficients)

    @property
    def aic(self) -> float:
        return -2.0 * self.log_likelihood + 2.0 * self.n_params

    @property
    def z(self) -> np.ndarray:
        return self.coefficients / self.se

    @property
    def p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    def coefficient_table(self) -> list[dict]:
        rows = [{"name": "(Intercept)", "estimate": self.intercept, "se": self.intercept_se,
                 "z": self.intercept / self.intercept_se,
                 "p": float(2.0 * stats.norm.sf(abs(self.intercept / self.intercept_se)))}]
        for n, b, s, z, p in zip(self.names, self.coefficients, self.se, self.z, self.p_values):
            rows.append({"name": n, "estimate": float(b), "se": float(s), "z": float(z),
                         "p": float(p)})
        return rows

    def to_dict(self) -> dict:
        return {"scheme": "Logistic", "intercept": self.intercept,
                "coefficients": self.coefficient_table(),
                "log_likelihood": self.log_likelihood, "aic": self.aic,
                "iterations": self.iterations, "converged": self.converged,
                "n_rows": len(self.fitted_probabilities)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def fit_logit_arrays(X, y, names=None, max_iter=100, tol=1e-9) -> LogisticFit:
    """Fit ``logit P(y=1) = a + X b`` by maximum likelihood (intercept added here)."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise DataValidationError("need at least one row with term=1 and one with term=0")
    if np.any(np.isnan(X)):
        raise DataValidationError("design matrix has missing values")
    D = np.column_stack([np.ones(len(y)), X])
    if np.linalg.matrix_rank(D) < D.shape[1]:
        raise DataValidationError("design matrix is rank deficient")
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    beta, ll, grad, hess, it, ok = newton_raphson(
        lambda b: log_likelihood(b, D, y), np.zeros(D.shape[1]), max_iter, tol)
    if not ok:
        raise ConvergenceError(f"logistic fit did not converge in {max_iter} iterations")
    se = np.sqrt(np.diag(inverse_information(hess)))
    return LogisticFit(names=tuple(names), intercept=float(beta[0]), coefficients=beta[1:],
                       intercept_se=float(se[0]), se=se[1:], log_likelihood=ll,
                       converged=ok, iterations=it, fitted_probabilities=expit(D @ beta),
                       terms=y)


def design_rows(rows: Sequence[PersonPeriodRow], covariate_names: Sequence[str],
                include_time_terms: bool):
    """Complete-case design matrix for person-period rows."""
    names = list(covariate_names) + (list(TIME_TERMS) if include_time_terms else [])
    keep, X = [], []
    for r in rows:
        vals = [r.value(n) for n in names]
        if any(v is None for v in vals):
            continue
        keep.append(r)
        X.append(vals)
    return keep, np.array(X, dtype=float).reshape(len(keep), len(names)), names


def fit_logit(rows: Sequence[PersonPeriodRow], covariate_names: Sequence[str] = (),
              include_time_terms: bool = True, max_iter: int = 100,
              tol: float = 1e-9) -> LogisticFit:
    """Maximum-likelihood discrete-time hazard model on person-period rows.

    Rows missing any requested covariate are dropped before fitting.
    """
    kept, X, names = design_rows(rows, covariate_names, include_time_terms)
    if not kept:
        raise DataValidationError("no complete person-period rows")
    y = np.array([r.term for r in kept], dtype=float)
    fit = fit_logit_arrays(X, y, names, max_iter, tol)
    return replace(fit, include_time_terms=include_time_terms,
                   covariate_names=tuple(covariate_names),
                   record_keys=tuple(r.record_key for r in kept),
                   categories=tuple(r.category for r in kept))


def linear_predictor(fit: LogisticFit, covariates: Mapping[str, float], time: float | None = None):
    vals = []
    for n in fit.covariate_names:
        v = covariates.get(n)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            raise DataValidationError(f"missing covariate {n!r}")
        vals.append(float(v))
    if fit.include_time_terms:
        if time is None:
            raise DataValidationError("the fit uses time terms; supply time")
        vals += [float(time), float(time) ** 2]
    return fit.intercept + float(np.dot(fit.coefficients, vals))


def predict_break_probability(fit: LogisticFit, covariates: Mapping[str, float],
                              time: float | None = None) -> float:
    """Probability that a record surviving to ``time`` falls at the next Games."""
    return float(expit(linear_predictor(fit, covariates, time)))


def residuals(fit: LogisticFit, rows: Sequence[PersonPeriodRow] | None = None):
    """Pearson residuals ``(term - P) / sqrt(P (1 - P))`` per row.

    Returns ``(record_key, category, residual)`` triples. Without ``rows`` the
    fitting rows are used.
    """
    if rows is None:
        p = fit.fitted_probabilities
        r = (fit.terms - p) / np.sqrt(p * (1.0 - p))
        return list(zip(fit.record_keys, fit.categories, (float(v) for v in r)))
    out = []
    for row in rows:
        covs = {n: row.value(n) for n in fit.covariate_names}
        if any(v is None for v in covs.values()):
            continue
        p = predict_break_probability(fit, covs, row.time)
        out.append((row.record_key, row.category, (row.term - p) / math.sqrt(p * (1.0 - p))))
    return out
