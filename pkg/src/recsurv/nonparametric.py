"""Product-limit survival estimators and the log-rank test.

All estimators return a :class:`SurvivalCurve`, a right-continuous step
function with ``S(t) = 1`` before its first support point. At tied times
events are taken to precede censorings, so a record censored at ``t`` is still
counted at risk for breaks at ``t``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .exceptions import DataValidationError

ESTIMATORS = ("KM", "WangChang", "GeneralizedKM", "Frailty")


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    time: np.ndarray
    estimate: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    estimator: str = "KM"

    def __post_init__(self):
        for name in ("time", "estimate", "at_risk", "events"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.time)
        if not (len(self.estimate) == len(self.at_risk) == len(self.events) == n):
            raise ValueError("curve columns must have equal length")
        if np.any(np.diff(self.time) <= 0):
            raise ValueError("curve times must be strictly increasing")
        if np.any(np.diff(self.estimate) > 1e-12):
            raise ValueError("survival estimates must be non-increasing")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator tag {self.estimator!r}")

    @classmethod
    def from_values(cls, times, estimates, estimator="KM") -> "SurvivalCurve":
        """Curve from published survival values; risk and event counts unknown."""
        n = len(times)
        return cls(times, estimates, np.full(n, np.nan), np.full(n, np.nan), estimator)

    def __len__(self):
        return len(self.time)

    @property
    def max_time(self) -> float:
        return float(self.time[-1]) if len(self.time) else 0.0

    def __call__(self, t):
        """Evaluate the step function at ``t`` (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.time, t_arr, side="right") - 1
        vals = np.where(idx >= 0, self.estimate[np.clip(idx, 0, None)] if len(self.time) else 1.0, 1.0)
        return float(vals) if np.ndim(t) == 0 else vals

    def to_csv(self, fmt=".6g") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "estimate", "at_risk", "events"])
        for row in zip(self.time, self.estimate, self.at_risk, self.events):
            w.writerow([_fmt(v, fmt) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "points": [
                {"time": float(t), "estimate": float(s),
                 "at_risk": None if np.isnan(r) else float(r),
                 "events": None if np.isnan(d) else float(d)}
                for t, s, r, d in zip(self.time, self.estimate, self.at_risk, self.events)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_csv(cls, text: str, estimator="KM") -> "SurvivalCurve":
        rows = list(csv.DictReader(io.StringIO(text)))
        col = lambda k: [float(r[k]) if r.get(k, "") != "" else np.nan for r in rows]  # noqa: E731
        return cls(col("time"), col("estimate"), col("at_risk"), col("events"), estimator)


def _fmt(v: float, fmt: str) -> str:
    return "" if np.isnan(v) else format(float(v), fmt)


def _as_observations(durations) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(durations, dtype=float)
    if arr.size == 0:
        raise DataValidationError("no observations")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataValidationError("expected (time, status) pairs")
    t, d = arr[:, 0], arr[:, 1]
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise DataValidationError("times must be positive and finite")
    if not np.all(np.isin(d, (0, 1))):
        raise DataValidationError("status must be 0 or 1")
    return t, d.astype(int)


def product_limit(times, events, at_risk, estimator="KM") -> SurvivalCurve:
    """Running product of ``1 - d_j / r_j`` from tabulated counts."""
    d = np.asarray(events, dtype=float)
    r = np.asarray(at_risk, dtype=float)
    if np.any(d > r) or np.any(r <= 0):
        raise DataValidationError("need 0 < r_j and d_j <= r_j")
    return SurvivalCurve(times, np.cumprod(1.0 - d / r), r, d, estimator)


def kaplan_meier(durations) -> SurvivalCurve:
    """Kaplan-Meier estimate from ``(time, status)`` pairs.

    Parameters
    ----------
    durations : array-like of shape (n, 2)
        Observed time and status (1 = record broken, 0 = censored).
    """
    t, d = _as_observations(durations)
    event_times = np.unique(t[d == 1])
    r = np.array([np.count_nonzero(t >= s) for s in event_times], dtype=float)
    e = np.array([np.count_nonzero((t == s) & (d == 1)) for s in event_times], dtype=float)
    return SurvivalCurve(event_times, np.cumprod(1.0 - e / r), r, e, "KM")


def nelson_aalen(durations) -> tuple[np.ndarray, np.ndarray]:
    """Nelson-Aalen cumulative hazard at the distinct event times."""
    t, d = _as_observations(durations)
    event_times = np.unique(t[d == 1])
    r = np.array([np.count_nonzero(t >= s) for s in event_times], dtype=float)
    e = np.array([np.count_nonzero((t == s) & (d == 1)) for s in event_times], dtype=float)
    return event_times, np.cumsum(e / r)


def _histories(event_histories):
    out = []
    for gaps, status in event_histories:
        g = np.asarray(gaps, dtype=float)
        s = np.asarray(status, dtype=int)
        if g.shape != s.shape or g.ndim != 1:
            raise DataValidationError("gap and status arrays must match")
        if g.size and (np.any(g <= 0) or not np.all(np.isfinite(g))):
            raise DataValidationError("gap times must be positive")
        out.append((g, s))
    if not out or all(g.size == 0 for g, _ in out):
        raise DataValidationError("no event histories")
    return out


def generalized_km(event_histories) -> SurvivalCurve:
    """Product-limit estimate treating every gap time as an i.i.d. observation.

    ``N(dw)`` counts complete gaps equal to ``w`` and ``Y(w)`` counts gaps
    (complete or censored) of length at least ``w``.
    """
    hist = _histories(event_histories)
    gaps = np.concatenate([g for g, _ in hist])
    status = np.concatenate([s for _, s in hist])
    order = np.argsort(gaps, kind="stable")
    gaps, status = gaps[order], status[order]
    complete = np.sort(gaps[status == 1])
    support = np.unique(complete)
    # counting-process form: jumps of N and the at-risk process Y
    n_jump = (np.searchsorted(complete, support, side="right")
              - np.searchsorted(complete, support, side="left")).astype(float)
    y = (len(gaps) - np.searchsorted(gaps, support, side="left")).astype(float)
    return SurvivalCurve(support, np.cumprod(1.0 - n_jump / y), y, n_jump, "GeneralizedKM")


def wang_chang(event_histories) -> SurvivalCurve:
    """Recurrent-event survival estimate with per-unit weights.

    Unit ``i`` with ``K_i`` complete gaps receives weight ``1 / max(K_i, 1)``.
    The weighted event count at ``s`` sums the weights of complete gaps equal
    to ``s``; the weighted risk set sums the weights of all gaps (a censored
    final gap included) of length at least ``s``. A unit therefore contributes
    at most one to either sum, which keeps heavily recurring units from
    dominating the estimate.
    """
    hist = _histories(event_histories)
    weights = [1.0 / max(int(s.sum()), 1) for _, s in hist]
    complete = np.concatenate([g[s == 1] for g, s in hist])
    support = np.unique(complete)
    d_star = np.zeros(len(support))
    r_star = np.zeros(len(support))
    for a, (g, s) in zip(weights, hist):
        done = g[s == 1]
        d_star += a * np.array([np.count_nonzero(done == u) for u in support])
        r_star += a * np.array([np.count_nonzero(g >= u) for u in support])
    return SurvivalCurve(support, np.cumprod(1.0 - d_star / r_star), r_star, d_star, "WangChang")


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    df: int
    p_value: float
    observed: tuple[float, ...]
    expected: tuple[float, ...]

    @property
    def per_group(self) -> list[tuple[float, float]]:
        return list(zip(self.observed, self.expected))


def log_rank(groups: Sequence) -> LogRankResult:
    """k-sample log-rank test with hypergeometric variance.

    Parameters
    ----------
    groups : sequence of array-like (n_g, 2)
        ``(time, status)`` observations for each group.
    """
    if len(groups) < 2:
        raise DataValidationError("log-rank needs at least two groups")
    obs = []
    for i, g in enumerate(groups):
        if len(g) == 0:
            raise DataValidationError(f"group {i} has no observations")
        obs.append(_as_observations(g))
    times = np.concatenate([t for t, _ in obs])
    status = np.concatenate([d for _, d in obs])
    event_times = np.unique(times[status == 1])
    if event_times.size == 0:
        raise DataValidationError("no events in any group; log-rank undefined")
    k = len(obs)
    O = np.zeros(k)
    E = np.zeros(k)
    V = np.zeros((k, k))
    for s in event_times:
        r_g = np.array([np.count_nonzero(t >= s) for t, _ in obs], dtype=float)
        d_g = np.array([np.count_nonzero((t == s) & (d == 1)) for t, d in obs], dtype=float)
        r, dd = r_g.sum(), d_g.sum()
        O += d_g
        E += dd * r_g / r
        if r > 1:
            p = r_g / r
            V += dd * (r - dd) / (r - 1) * (np.diag(p) - np.outer(p, p))
    z = (O - E)[:-1]
    Vs = V[:-1, :-1]
    stat = float(z @ np.linalg.pinv(Vs) @ z) if np.any(Vs) else 0.0
    stat = max(stat, 0.0)
    df = k - 1
    return LogRankResult(stat, df, float(stats.chi2.sf(stat, df)), tuple(O), tuple(E))
