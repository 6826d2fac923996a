"""Shared gamma-frailty model for marginal survival of recurrent gap times.

Gaps of unit ``i`` are independent given a frailty ``w_i ~ Gamma(alpha,
1/alpha)`` (mean one) and have hazard ``w_i * lambda0(t)``. Integrating the
frailty out gives the marginal survival ``[alpha / (alpha + Lambda0(t))]**alpha``.

The baseline is a step cumulative hazard with jumps at the distinct complete
gap times. It is fitted by EM; the frailty parameter is refreshed once per
outer iteration by a one-dimensional search on the profile likelihood.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataValidationError
from .nonparametric import SurvivalCurve, _histories

ALPHA_BOUNDS = (1e-3, 1e6)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class FrailtyFit:
    alpha: float
    time: np.ndarray
    cum_hazard: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    at_risk: np.ndarray = field(default=None, repr=False)
    events: np.ndarray = field(default=None, repr=False)
    loglik_trace: tuple[float, ...] = field(default=(), repr=False)

    def survival_at(self, t):
        return survival_at(self, t)

    def curve(self) -> SurvivalCurve:
        s = _marginal_survival(self.alpha, self.cum_hazard)
        n = len(self.time)
        r = self.at_risk if self.at_risk is not None else np.full(n, np.nan)
        d = self.events if self.events is not None else np.full(n, np.nan)
        return SurvivalCurve(self.time, s, r, d, "Frailty")

    def to_json(self) -> str:
        return json.dumps({
            "alpha": self.alpha,
            "hazard_steps": [{"time": float(t), "cum_hazard": float(h)}
                             for t, h in zip(self.time, self.cum_hazard)],
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        }, indent=2)


def _marginal_survival(alpha, cum_hazard):
    cum_hazard = np.asarray(cum_hazard, dtype=float)
    return np.exp(-alpha * np.log1p(cum_hazard / alpha))


def survival_at(fit: FrailtyFit, t):
    """Marginal survival ``[a / (a + Lambda0(t))]**a`` with a step ``Lambda0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DataValidationError("survival_at needs t >= 0")
    idx = np.searchsorted(fit.time, t_arr, side="right") - 1
    lam = np.where(idx >= 0, np.asarray(fit.cum_hazard)[np.clip(idx, 0, None)], 0.0) \
        if len(fit.time) else np.zeros_like(t_arr)
    s = _marginal_survival(fit.alpha, lam)
    return float(s) if np.ndim(t) == 0 else s


class _Problem:
    """Sufficient statistics of the gap data on the support grid."""

    def __init__(self, hist):
        complete = np.concatenate([g[s == 1] for g, s in hist])
        self.support = np.unique(complete)
        self.D = np.array([np.count_nonzero(complete == u) for u in self.support], dtype=float)
        # A[i, k]: number of gaps of unit i still at risk at support point k
        self.A = np.array([[np.count_nonzero(g >= u) for u in self.support] for g, _ in hist],
                          dtype=float)
        self.N = np.array([int(s.sum()) for _, s in hist])
        self.max_n = int(self.N.max()) if len(self.N) else 0

    def loglik(self, h, alpha):
        H = self.A @ h
        pos = self.D > 0
        ll = float(np.sum(self.D[pos] * np.log(h[pos])))
        # log Gamma(a+N)/Gamma(a) - N log(a+H) - a log(1+H/a), written to stay
        # accurate as a grows large
        m = np.arange(self.max_n)
        mask = m[None, :] < self.N[:, None]
        terms = np.log1p((m[None, :] - H[:, None]) / (alpha + H[:, None]))
        ll += float(np.sum(np.where(mask, terms, 0.0)))
        ll -= float(np.sum(alpha * np.log1p(H / alpha)))
        return ll

    def em_step(self, h, alpha):
        H = self.A @ h
        w = (alpha + self.N) / (alpha + H)
        return self.D / (w @ self.A)


def _search_alpha(prob, h, lo, hi, n_grid=41, tol=1e-6):
    """Maximize the log-likelihood over log(alpha) in [lo, hi]."""
    grid = np.linspace(math.log(lo), math.log(hi), n_grid)
    vals = [prob.loglik(h, math.exp(x)) for x in grid]
    j = int(np.argmax(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, n_grid - 1)]
    f = lambda x: -prob.loglik(h, math.exp(x))  # noqa: E731
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    best = max([(prob.loglik(h, math.exp(x)), x), (vals[j], grid[j])])
    return math.exp(best[1]), best[0]


def fit_frailty(event_histories, alpha_fixed: float | None = None,
                max_iter: int = 500, tol: float = 1e-8) -> FrailtyFit:
    """Fit the gamma-frailty marginal survival model.

    Parameters
    ----------
    event_histories : sequence of (gaps, status)
        Gap times and completion flags for each unit (Olympic event).
    alpha_fixed : float, optional
        Hold the frailty parameter fixed and estimate only the baseline.
    max_iter : int
        Outer iterations before giving up; the last iterate is returned with
        ``converged=False``.
    tol : float
        Relative change in log-likelihood that counts as convergence.
    """
    hist = _histories(event_histories)
    if len(hist) < 2:
        raise DataValidationError("frailty fit needs at least two units")
    if sum(int(s.sum()) for _, s in hist) == 0:
        raise DataValidationError("frailty fit needs at least one complete gap")
    if alpha_fixed is not None and not alpha_fixed > 0:
        raise DataValidationError("alpha_fixed must be positive")

    prob = _Problem(hist)
    h = prob.D / prob.A.sum(axis=0)  # pooled Nelson-Aalen increments
    alpha = float(alpha_fixed) if alpha_fixed is not None else 1.0
    ll = prob.loglik(h, alpha)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        h = prob.em_step(h, alpha)
        if alpha_fixed is None:
            cand, ll_cand = _search_alpha(prob, h, *ALPHA_BOUNDS)
            if ll_cand > prob.loglik(h, alpha):
                alpha = cand
        ll_new = prob.loglik(h, alpha)
        trace.append(ll_new)
        if abs(ll_new - ll) < tol * max(abs(ll), 1.0):
            ll = ll_new
            converged = True
            break
        ll = ll_new
    return FrailtyFit(alpha=alpha, time=prob.support.copy(), cum_hazard=np.cumsum(h),
                      log_likelihood=ll, iterations=it, converged=converged,
                      at_risk=prob.A.sum(axis=0), events=prob.D.copy(),
                      loglik_trace=tuple(trace))
