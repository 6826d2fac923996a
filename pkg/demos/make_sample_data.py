"""
A schema-compatible sample of Olympic record spells
===================================================

The original record histories are not public, so this script builds a
stand-in with the same columns: 63 events across the five categories, a
handful of binary and quantitative covariates, and a few missing values.
Two of the covariates carry a real effect on how fast records fall.

Run from the repository root::

    python demos/make_sample_data.py

It rewrites ``demos/data/sample_records.csv``,
``demos/data/km_table5.csv`` and ``demos/data/cohorts_2012.csv``.
"""

import csv
from pathlib import Path

import numpy as np

from recsurv import SimConfig, generate
from recsurv.data import RecordSpell, spells_to_csv, validate_spells
from recsurv.datasets import DERIVED_COHORTS, km_table_observations

OUT = Path(__file__).parent / "data"
OUT.mkdir(exist_ok=True)

# %%
# Simulate the spell skeleton. X1 will become SameAthlete (records held by an
# athlete who already held the previous one fall faster) and X2 WorldRecord
# (world-record marks last longer).
base = generate(SimConfig(n_events=63, frailty_alpha=2.0, baseline_rate=0.12,
                          covariate_effects=(0.6, -0.7), seed=2012))

# %%
# Attach quantitative covariates. PCC and TRI are pure noise, MRI drifts with
# the sequence number. About 3% of the quantitative values go missing.
rng = np.random.default_rng(7)
spells = []
for s in base:
    covs = {
        "Gender": float(rng.integers(0, 2)),
        "SameAthlete": s.value("X1"),
        "WorldRecord": s.value("X2"),
        "PCC": round(float(rng.normal(1.5, 4.0)), 2),
        "MRI": round(float(rng.gamma(2.0, 1.4) + 0.05 * s.sequence), 2),
        "TRI": round(float(rng.normal(4.0, 2.5)), 2),
    }
    for name in ("PCC", "MRI", "TRI"):
        if rng.random() < 0.03:
            covs[name] = None
    spells.append(RecordSpell.build(s.event_id, s.category, s.sequence, s.year_set,
                                    s.year_end, s.status, covs))
names = ["Gender", "SameAthlete", "WorldRecord", "PCC", "MRI", "TRI"]
data = validate_spells(spells, covariate_names=names)
(OUT / "sample_records.csv").write_text(spells_to_csv(data))
print(f"{len(data)} spells, {data.n_censored} censored, missing: {data.missing_counts()}")

# %%
# The pooled durations behind the published Kaplan-Meier risk table, as a
# bare duration/status file for ``recsurv km`` and ``recsurv survfit``.
with open(OUT / "km_table5.csv", "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["duration", "status"])
    for t, d in km_table_observations():
        w.writerow([int(t), int(d)])

# %%
# Standing records per year set, for ``recsurv predict --cohorts``.
with open(OUT / "cohorts_2012.csv", "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["year_set", "count"])
    for year, count in DERIVED_COHORTS.items():
        w.writerow([year, count])
