import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recsurv import SimConfig, generate
from recsurv.data import PersonPeriodRow, expand_person_period
from recsurv.exceptions import DataValidationError, MonotoneLikelihoodError
from recsurv.logistic import (fit_logit, fit_logit_arrays, linear_predictor,
                              predict_break_probability, residuals)


def rows_from(terms, x=None):
    out = []
    for i, t in enumerate(terms):
        cov = {} if x is None else {"x": x[i]}
        out.append(PersonPeriodRow(("E", i + 1), 1, 4.0, 16.0, int(t), cov, "Track", 4, int(t)))
    return out


def test_intercept_only_closed_form():
    fit = fit_logit(rows_from([1, 1, 1] + [0] * 7), include_time_terms=False)
    assert fit.intercept == pytest.approx(math.log(3 / 7), abs=1e-10)
    assert np.allclose(fit.fitted_probabilities, 0.3)
    assert fit.n_params == 1
    assert fit.aic == -2 * fit.log_likelihood + 2


def test_balanced_zero_covariate_gives_zero_intercept():
    fit = fit_logit_arrays(np.zeros((10, 0)), [1] * 5 + [0] * 5)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)


def test_loglik_matches_definition():
    sim = generate(SimConfig(n_events=40, covariate_effects=(0.7,), seed=2))
    fit = fit_logit(expand_person_period(sim, sim.calendar), ["X1"])
    p, y = fit.fitted_probabilities, fit.terms
    ll = np.sum(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert fit.log_likelihood == pytest.approx(ll, rel=1e-10)
    assert np.all((p > 0) & (p < 1))
    assert fit.names == ("X1", "Time", "Time2")
    assert fit.aic == -2 * fit.log_likelihood + 2 * 4


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_fitted_probabilities_sum_to_events(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 2))
    y = (rng.random(60) < 1 / (1 + np.exp(-(X @ [0.5, -0.5])))).astype(float)
    if y.sum() in (0, 60):
        return
    try:
        fit = fit_logit_arrays(X, y)
    except MonotoneLikelihoodError:
        return
    assert abs(fit.fitted_probabilities.sum() - y.sum()) <= 1e-6
    # the score is zero at the optimum: residuals are orthogonal to the design
    assert np.allclose(X.T @ (y - fit.fitted_probabilities), 0, atol=1e-6)


def test_standard_errors_match_inverse_information():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 1))
    y = (rng.random(200) < 0.4).astype(float)
    fit = fit_logit_arrays(X, y)
    D = np.column_stack([np.ones(200), X])
    p = fit.fitted_probabilities
    cov = np.linalg.inv((D * (p * (1 - p))[:, None]).T @ D)
    assert fit.se[0] == pytest.approx(math.sqrt(cov[1, 1]), rel=1e-8)
    assert fit.intercept_se == pytest.approx(math.sqrt(cov[0, 0]), rel=1e-8)


def test_errors():
    with pytest.raises(DataValidationError):
        fit_logit_arrays(np.zeros((4, 0)), [1, 1, 1, 1])
    with pytest.raises(DataValidationError):
        fit_logit_arrays(np.ones((4, 1)), [1, 0, 1, 0])
    with pytest.raises(MonotoneLikelihoodError):
        fit_logit_arrays(np.array([[0.], [0.], [1.], [1.]]), [0, 0, 1, 1])
    with pytest.raises(DataValidationError):
        fit_logit(rows_from([1, 0], x=[None, None]), ["x"], include_time_terms=False)


def test_prediction_values():
    fit = fit_logit(rows_from([1, 0, 1, 0], x=[1.0, 0.0, 0.0, 1.0]), ["x"],
                    include_time_terms=False)
    fit = type(fit)(**{**fit.__dict__, "intercept": 0.0, "coefficients": np.array([math.log(3)])})
    assert predict_break_probability(fit, {"x": 0.0}) == 0.5
    assert predict_break_probability(fit, {"x": 1.0}) == pytest.approx(0.75)
    with pytest.raises(DataValidationError):
        predict_break_probability(fit, {})


def test_prediction_with_time_terms():
    sim = generate(SimConfig(n_events=30, seed=4))
    fit = fit_logit(expand_person_period(sim, sim.calendar), [])
    eta = fit.intercept + fit.coefficients[0] * 8 + fit.coefficients[1] * 64
    assert linear_predictor(fit, {}, 8) == pytest.approx(eta)
    with pytest.raises(DataValidationError):
        linear_predictor(fit, {})


def test_pearson_residuals():
    fit = fit_logit(rows_from([1, 0, 1, 0]), include_time_terms=False)
    res = residuals(fit)
    assert [r[2] for r in res] == pytest.approx([1.0, -1.0, 1.0, -1.0])
    assert res[0][0] == ("E", 1) and res[0][1] == "Track"


def test_json_shape():
    fit = fit_logit(rows_from([1, 0, 0, 1, 1], x=[1., 0., 1., 1., 0.]), ["x"],
                    include_time_terms=False)
    obj = json.loads(fit.to_json())
    assert obj["scheme"] == "Logistic"
    assert obj["coefficients"][0]["name"] == "(Intercept)"
    assert obj["aic"] == pytest.approx(-2 * obj["log_likelihood"] + 4)
