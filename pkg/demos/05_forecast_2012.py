"""
How many Olympic records fall in 2012?
======================================

A record set at Games y that is still standing at the 2008 Games has already
survived 2008 - y years. The chance it falls within the next four years is
(S(t) - S(t + 4)) / S(t) with t its survived time. Summing these over the
standing records, grouped by the year they were set, gives the expected count.

Run from the repository root::

    python demos/05_forecast_2012.py
"""

from pathlib import Path

from recsurv import fit_frailty, generalized_km, ingest_csv, predict_counts, wang_chang
from recsurv.datasets import DERIVED_COHORTS, published_curves
from recsurv.prediction import prediction_csv

# %%
# With the published survival values.
pub = published_curves()
curves = {k: pub[k] for k in ("WangChang", "GeneralizedKM", "Frailty")}
print("standing records by year set:", dict(DERIVED_COHORTS))
print(prediction_csv(predict_counts(curves, DERIVED_COHORTS, 2012)), end="")

# %%
# The same forecast with curves estimated from the sample records. The
# standing records are those censored in the sample; as above, only the five
# most recent cohorts are counted, since older ones run past the curves.
data = ingest_csv(Path(__file__).parent / "data" / "sample_records.csv")
hist = data.gap_histories()
cohorts: dict[int, int] = {}
for s in data:
    if s.event == 0 and s.year_set >= 1992:
        cohorts[s.year_set] = cohorts.get(s.year_set, 0) + 1
fitted = {"WangChang": wang_chang(hist), "GeneralizedKM": generalized_km(hist),
          "Frailty": fit_frailty(hist).curve()}
tables = predict_counts(fitted, cohorts, 2012)
for name, t in tables.items():
    print(f"{name:<14} expected breaks {t.total:6.2f} of {sum(cohorts.values())} standing")
