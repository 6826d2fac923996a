"""Recurrent-event survival analysis for the durations of Olympic records."""

__version__ = "0.1.0"

from .cox import (CoxFit, RiskInterval, build_risk_intervals, fit_cox, hazard_ratio,  # noqa: E402
                  wlw_pooled_fit)
from .data import (DEFAULT_CALENDAR, CovariateSpec, GamesCalendar, PersonPeriodRow,  # noqa: E402
                   RecordSpell, SpellDataset, build_lagged_dataset, dichotomize,
                   expand_person_period, ingest_csv)
from .exceptions import (ConvergenceError, DataValidationError, MonotoneLikelihoodError,  # noqa: E402
                         NumericalError, SingularMatrixError)
from .frailty import FrailtyFit, fit_frailty, survival_at  # noqa: E402
from .logistic import LogisticFit, fit_logit, predict_break_probability, residuals  # noqa: E402
from .nonparametric import (LogRankResult, SurvivalCurve, generalized_km,  # noqa: E402
                            kaplan_meier, log_rank, wang_chang)
from .prediction import PredictionTable, conditional_break_probability, predict_counts  # noqa: E402
from .simulate import SimConfig, generate  # noqa: E402
from .workflow import (compare_aic, dependence_check, estimate_all_models,  # noqa: E402
                       screen_covariates)
