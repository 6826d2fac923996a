"""Small fixtures rebuilt from published Olympic-record summaries.

The raw record data are not public, so these fixtures carry only what the
published tables determine: the Kaplan-Meier risk table, four survival curves,
the worked person-period example, and cohort sizes for the 2012 forecast.
"""

from __future__ import annotations

import numpy as np

from ..data import BROKEN, CENSORED, RecordSpell, SpellDataset, validate_spells
from ..nonparametric import SurvivalCurve

# (t_j, d_j, r_j) of the Kaplan-Meier risk table, through 16 years
KM_TABLE = ((2, 3, 750), (4, 412, 747), (6, 2, 256), (8, 142, 254),
            (10, 1, 95), (12, 43, 94), (16, 12, 44))
KM_TABLE_ESTIMATES = (.996, .4467, .4432, .1954, .1934, .1049, .0763)

SURVIVAL_TIMES = (2, 4, 6, 8, 10, 12, 16, 20)
SURVIVAL_ESTIMATES = {
    "KM": (.9960, .4467, .4432, .1954, .1934, .1049, .0763, .0528),
    "WangChang": (.9898, .3823, .3755, .1255, .1209, .0501, .0259, .0075),
    "GeneralizedKM": (.9960, .4467, .4432, .1954, .1934, .1049, .0763, .0528),
    "Frailty": (.9960, .5738, .5694, .3256, .3222, .2039, .1552, .1141),
}

# Standing records per year set, recovered by dividing each published
# forecast cell by its conditional break probability.
DERIVED_COHORTS = {2008: 33, 2004: 6, 2000: 4, 1996: 6, 1992: 2}

PREDICTED_2012 = {
    "WangChang": {2008: 20.38, 2004: 4.03, 2000: 2.40, 1996: 2.90, 1992: 1.42},
    "GeneralizedKM": {2008: 18.26, 2004: 3.38, 2000: 1.85, 1996: 1.64, 1992: .62},
    "Frailty": {2008: 14.06, 2004: 2.60, 2000: 1.50, 1996: 1.43, 1992: .53},
}
PREDICTED_2012_TOTALS = {"WangChang": 31.14, "GeneralizedKM": 25.74, "Frailty": 20.12}

# Worked example: ID, DUR, CENSOR, SEQ
PERSON_PERIOD_INPUT = ((1, 4, 1, 1), (1, 8, 1, 2), (1, 8, 1, 3), (1, 12, 1, 4))
# ID, DUR, CENSOR, SEQ, Time, Term
PERSON_PERIOD_OUTPUT = (
    (1, 4, 1, 1, 4, 1),
    (1, 8, 1, 2, 4, 0),
    (1, 8, 1, 2, 8, 1),
    (1, 8, 1, 3, 4, 0),
    (1, 8, 1, 3, 8, 1),
    (1, 12, 1, 4, 4, 0),
    (1, 12, 1, 4, 8, 0),
    (1, 12, 1, 4, 12, 1),
)


def km_table_observations() -> np.ndarray:
    """750 ``(time, status)`` pairs reproducing the Kaplan-Meier risk table.

    Censorings between event times are implied by the drops in ``r_j`` not
    explained by ``d_j``. Beyond 16 years the table is silent; the tail
    places 8 breaks at 20 (matching the published S(20)), 4 at 24 and 34
    censorings so that the totals come to 627 broken and 123 censored.
    """
    rows = []
    add = lambda t, n, s: rows.extend([(t, s)] * n)  # noqa: E731
    add(2, 3, 1)
    add(4, 412, 1)
    add(4, 79, 0)
    add(6, 2, 1)
    add(8, 142, 1)
    add(8, 17, 0)
    add(10, 1, 1)
    add(12, 43, 1)
    add(12, 7, 0)
    add(16, 12, 1)
    add(16, 6, 0)
    add(20, 8, 1)
    add(20, 14, 0)
    add(24, 4, 1)
    return np.array(rows, dtype=float)


def published_curves() -> dict[str, SurvivalCurve]:
    """The four published survival curves evaluated at 2, 4, ..., 20 years."""
    return {name: SurvivalCurve.from_values(SURVIVAL_TIMES, est, name)
            for name, est in SURVIVAL_ESTIMATES.items()}


def person_period_example() -> SpellDataset:
    """The four-record worked example as calendar spells starting in 1948."""
    year = 1948
    spells = []
    for event_id, dur, censor, seq in PERSON_PERIOD_INPUT:
        spells.append(RecordSpell.build(str(event_id), "Track", seq, year, year + dur,
                                        BROKEN if censor else CENSORED))
        year += dur
    return validate_spells(spells)
