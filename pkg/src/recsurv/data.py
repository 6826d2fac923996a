"""Record-spell data model, CSV ingestion and dataset reshaping.

A *spell* is the life of one Olympic record: it is set at one Games and either
broken at a later Games or censored. Spells of one event form a recurrent-event
history ordered by ``sequence``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import DataValidationError

log = logging.getLogger(__name__)

CATEGORIES = ("Track", "Field", "Canoeing", "Cycling", "Swimming")
CATEGORY_CODES = {name: i + 1 for i, name in enumerate(CATEGORIES)}

BROKEN = "Broken"
CENSORED = "Censored"

REQUIRED_COLUMNS = ("event_id", "category", "sequence", "year_set", "year_end", "status")

_DEFAULT_YEARS = (
    (1896, 1900, 1904, 1906, 1908, 1912)
    + tuple(range(1920, 1937, 4))
    + tuple(range(1948, 2009, 4))
)


@dataclass(frozen=True)
class GamesCalendar:
    """Years in which Summer Games took place.

    ``horizon`` is the year at which still-standing records are censored. It
    defaults to the Games after the last calendar entry, so a record set at the
    final observed Games still has a positive censored duration.
    """

    games_years: tuple[int, ...] = _DEFAULT_YEARS
    horizon: int | None = None

    def __post_init__(self):
        years = tuple(int(y) for y in self.games_years)
        if not years:
            raise ValueError("calendar needs at least one Games year")
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("Games years must be strictly increasing")
        object.__setattr__(self, "games_years", years)
        horizon = years[-1] + 4 if self.horizon is None else int(self.horizon)
        if horizon <= years[-1]:
            raise ValueError("horizon must come after the last Games year")
        object.__setattr__(self, "horizon", horizon)

    @property
    def origin(self) -> int:
        return self.games_years[0]

    @property
    def last(self) -> int:
        return self.games_years[-1]

    def __contains__(self, year) -> bool:
        i = bisect_left(self.games_years, year)
        return i < len(self.games_years) and self.games_years[i] == year

    def __len__(self):
        return len(self.games_years)

    def between(self, lo: int, hi: int, include_hi: bool = True) -> list[int]:
        """Games years in ``(lo, hi]`` (or ``(lo, hi)``)."""
        i = bisect_right(self.games_years, lo)
        j = bisect_right(self.games_years, hi) if include_hi else bisect_left(self.games_years, hi)
        return list(self.games_years[i:j])

    def next_games(self, year: float) -> int | None:
        """First Games year >= ``year``, or None past the calendar end."""
        i = bisect_left(self.games_years, year)
        return self.games_years[i] if i < len(self.games_years) else None

    def is_valid_end(self, year: int, status: str) -> bool:
        if status == CENSORED and year == self.horizon:
            return True
        return year in self


DEFAULT_CALENDAR = GamesCalendar()


@dataclass(frozen=True)
class CovariateSpec:
    name: str
    kind: str  # "Binary" | "Quantitative" | "Categorical"
    dichotomize_threshold: float | None = None

    def __post_init__(self):
        if self.kind not in ("Binary", "Quantitative", "Categorical"):
            raise ValueError(f"unknown covariate kind {self.kind!r}")
        if self.dichotomize_threshold is not None and self.kind != "Quantitative":
            raise ValueError("only quantitative covariates carry a threshold")


# Covariates recorded for each Olympic record.
STANDARD_COVARIATES = (
    CovariateSpec("Gender", "Binary"),
    CovariateSpec("Category", "Categorical"),
    CovariateSpec("SameAthlete", "Binary"),
    CovariateSpec("SameCountry", "Binary"),
    CovariateSpec("HostCountry", "Binary"),
    CovariateSpec("Medal", "Binary"),
    CovariateSpec("WorldRecord", "Binary"),
    CovariateSpec("Age", "Quantitative"),
    CovariateSpec("PCA", "Quantitative"),
    CovariateSpec("PCC", "Quantitative"),
    CovariateSpec("dGDP", "Quantitative"),
    CovariateSpec("dPOP", "Quantitative"),
    CovariateSpec("MC", "Quantitative"),
    CovariateSpec("NR", "Quantitative"),
    CovariateSpec("MRI", "Quantitative"),
    CovariateSpec("TRI", "Quantitative"),
    CovariateSpec("WRI", "Quantitative"),
)


@dataclass(frozen=True, eq=True)
class RecordSpell:
    event_id: str
    category: str
    sequence: int
    year_set: int
    year_end: int | None
    status: str
    duration: int
    covariates: Mapping[str, float | None] = field(default_factory=dict, hash=False)

    @classmethod
    def build(cls, event_id, category, sequence, year_set, year_end, status,
              covariates=None, calendar: GamesCalendar = DEFAULT_CALENDAR) -> "RecordSpell":
        """Construct a spell, deriving ``duration`` and checking calendar membership."""
        status = _parse_status(status)
        category = _parse_category(category)
        sequence = int(sequence)
        if sequence < 1:
            raise DataValidationError(f"sequence must be positive, got {sequence}")
        year_set = int(year_set)
        if year_set not in calendar:
            raise DataValidationError(f"year_set {year_set} is not a Games year")
        if year_end is None:
            if status == BROKEN:
                raise DataValidationError("a broken record needs year_end")
            end = calendar.horizon
        else:
            end = int(year_end)
            if not calendar.is_valid_end(end, status):
                raise DataValidationError(f"year_end {end} is not a Games year")
        duration = end - year_set
        if duration <= 0:
            raise DataValidationError(
                f"duration must be positive (set {year_set}, end {end})")
        return cls(str(event_id), category, sequence, year_set,
                   None if year_end is None else end, status, duration,
                   dict(covariates or {}))

    @property
    def key(self) -> tuple[str, int]:
        return (self.event_id, self.sequence)

    @property
    def event(self) -> int:
        return int(self.status == BROKEN)

    @property
    def end(self) -> int:
        """Year the spell leaves observation (break or censoring)."""
        return self.year_set + self.duration

    def value(self, name: str) -> float | None:
        """Covariate value; ``Category`` resolves to its numeric code."""
        if name == "Category":
            return float(CATEGORY_CODES[self.category])
        v = self.covariates.get(name)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None
        return float(v)


def _parse_status(s) -> str:
    t = str(s).strip().lower()
    if t == "broken":
        return BROKEN
    if t == "censored":
        return CENSORED
    raise DataValidationError(f"status must be Broken or Censored, got {s!r}")


def _parse_category(c) -> str:
    t = str(c).strip()
    for name in CATEGORIES:
        if t.lower() == name.lower():
            return name
    if t in {str(v) for v in CATEGORY_CODES.values()}:
        return CATEGORIES[int(t) - 1]
    raise DataValidationError(f"unknown category {c!r}")


@dataclass(frozen=True)
class SpellDataset:
    """An immutable, validated collection of record spells."""

    spells: tuple[RecordSpell, ...]
    covariate_names: tuple[str, ...] = ()
    calendar: GamesCalendar = DEFAULT_CALENDAR

    def __len__(self):
        return len(self.spells)

    def __iter__(self) -> Iterator[RecordSpell]:
        return iter(self.spells)

    def __getitem__(self, i):
        return self.spells[i]

    @property
    def n_censored(self) -> int:
        return sum(1 for s in self.spells if s.status == CENSORED)

    @property
    def n_broken(self) -> int:
        return len(self.spells) - self.n_censored

    def missing_counts(self) -> dict[str, int]:
        return {name: sum(1 for s in self.spells if s.value(name) is None)
                for name in self.covariate_names}

    def by_event(self) -> dict[str, list[RecordSpell]]:
        groups: dict[str, list[RecordSpell]] = defaultdict(list)
        for s in self.spells:
            groups[s.event_id].append(s)
        return {k: sorted(v, key=lambda s: s.sequence) for k, v in sorted(groups.items())}

    def durations(self) -> tuple[np.ndarray, np.ndarray]:
        """(duration, event indicator) arrays in dataset order."""
        t = np.array([s.duration for s in self.spells], dtype=float)
        d = np.array([s.event for s in self.spells], dtype=int)
        return t, d

    def gap_histories(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-event (gap times, event indicators) ordered by sequence."""
        out = []
        for spells in self.by_event().values():
            out.append((np.array([s.duration for s in spells], dtype=float),
                        np.array([s.event for s in spells], dtype=int)))
        return out

    def filter(self, predicate) -> "SpellDataset":
        return SpellDataset(tuple(s for s in self.spells if predicate(s)),
                            self.covariate_names, self.calendar)

    def complete_cases(self, names: Sequence[str]) -> "SpellDataset":
        return self.filter(lambda s: all(s.value(n) is not None for n in names))

    def design(self, names: Sequence[str]) -> np.ndarray:
        """Covariate matrix with NaN for missing values."""
        X = np.full((len(self.spells), len(names)), np.nan)
        for i, s in enumerate(self.spells):
            for j, n in enumerate(names):
                v = s.value(n)
                if v is not None:
                    X[i, j] = v
        return X


def validate_spells(spells: Iterable[RecordSpell],
                    calendar: GamesCalendar = DEFAULT_CALENDAR,
                    covariate_names: Sequence[str] | None = None,
                    lines: Mapping[tuple[str, int], int] | None = None) -> SpellDataset:
    """Check cross-spell invariants and wrap the spells in a dataset.

    Sequence numbers within an event must be consecutive, and spells of one
    event may not overlap in calendar time.
    """
    spells = tuple(spells)
    lines = lines or {}
    groups: dict[str, list[RecordSpell]] = defaultdict(list)
    for s in spells:
        groups[s.event_id].append(s)
    for event_id, group in groups.items():
        group.sort(key=lambda s: s.sequence)
        for a, b in zip(group, group[1:]):
            if b.sequence == a.sequence:
                raise DataValidationError(
                    f"duplicate sequence {a.sequence} in event {event_id!r}",
                    lines.get(b.key))
            if b.sequence != a.sequence + 1:
                raise DataValidationError(
                    f"event {event_id!r} jumps from sequence {a.sequence} to {b.sequence}",
                    lines.get(b.key))
            if b.year_set < a.end:
                raise DataValidationError(
                    f"event {event_id!r}: spell {b.sequence} starts in {b.year_set} "
                    f"before spell {a.sequence} ends in {a.end}", lines.get(b.key))
    if covariate_names is None:
        names: list[str] = []
        for s in spells:
            for n in s.covariates:
                if n not in names:
                    names.append(n)
        covariate_names = names
    return SpellDataset(spells, tuple(covariate_names), calendar)


def _parse_number(text: str, column: str, line: int) -> float | None:
    text = text.strip()
    if text == "" or text.upper() in ("NA", "NAN"):
        return None
    try:
        return float(text)
    except ValueError:
        raise DataValidationError(f"column {column!r}: {text!r} is not a number", line) from None


def read_spells_csv(stream, calendar: GamesCalendar = DEFAULT_CALENDAR) -> SpellDataset:
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataValidationError("empty CSV file", 1) from None
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise DataValidationError(f"header lacks columns {missing}", 1)
    idx = {c: header.index(c) for c in REQUIRED_COLUMNS}
    cov_cols = [(j, h) for j, h in enumerate(header) if h not in REQUIRED_COLUMNS]
    spells = []
    lines = {}
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataValidationError(
                f"expected {len(header)} fields, found {len(row)}", line)
        try:
            end_text = row[idx["year_end"]].strip()
            spell = RecordSpell.build(
                event_id=row[idx["event_id"]].strip(),
                category=row[idx["category"]],
                sequence=_int_field(row[idx["sequence"]], "sequence", line),
                year_set=_int_field(row[idx["year_set"]], "year_set", line),
                year_end=None if end_text == "" else _int_field(end_text, "year_end", line),
                status=row[idx["status"]],
                covariates={h: _parse_number(row[j], h, line) for j, h in cov_cols},
                calendar=calendar,
            )
        except DataValidationError as exc:
            if exc.line is None:
                raise DataValidationError(str(exc), line) from None
            raise
        spells.append(spell)
        lines[spell.key] = line
    data = validate_spells(spells, calendar, [h for _, h in cov_cols], lines)
    for name, n in data.missing_counts().items():
        if n:
            log.info("covariate %s: %d of %d values missing", name, n, len(data))
    return data


def _int_field(text: str, column: str, line: int) -> int:
    try:
        value = float(text)
    except ValueError:
        raise DataValidationError(f"column {column!r}: {text!r} is not an integer", line) from None
    if not value.is_integer():
        raise DataValidationError(f"column {column!r}: {text!r} is not an integer", line)
    return int(value)


def ingest_csv(path, calendar: GamesCalendar = DEFAULT_CALENDAR) -> SpellDataset:
    """Read and validate a record-spell CSV file.

    The header must contain ``event_id, category, sequence, year_set,
    year_end, status``; every other column is a covariate. Empty cells are
    missing values and an empty ``year_end`` marks a record still standing.

    Raises
    ------
    DataValidationError
        With the offending line number for malformed rows, years outside the
        calendar, non-positive durations and overlapping spells.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return read_spells_csv(fh, calendar)


def format_number(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def spells_to_csv(data: SpellDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(REQUIRED_COLUMNS) + list(data.covariate_names))
    for s in data.spells:
        w.writerow([s.event_id, s.category, s.sequence, s.year_set,
                    "" if s.year_end is None else s.year_end, s.status]
                   + [format_number(s.value(n)) for n in data.covariate_names])
    return buf.getvalue()


def write_csv(data: SpellDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(spells_to_csv(data))


def dataset_to_json(data: SpellDataset) -> str:
    rows = []
    for s in data.spells:
        rows.append({
            "event_id": s.event_id, "category": s.category, "sequence": s.sequence,
            "year_set": s.year_set, "year_end": s.year_end, "status": s.status,
            "duration": s.duration,
            "covariates": {n: s.value(n) for n in data.covariate_names},
        })
    return json.dumps({"covariate_names": list(data.covariate_names),
                       "games_years": list(data.calendar.games_years),
                       "horizon": data.calendar.horizon,
                       "spells": rows}, indent=2)


def dataset_from_json(text: str) -> SpellDataset:
    obj = json.loads(text)
    calendar = GamesCalendar(tuple(obj["games_years"]), obj.get("horizon"))
    spells = [RecordSpell.build(r["event_id"], r["category"], r["sequence"], r["year_set"],
                                r["year_end"], r["status"], r["covariates"], calendar)
              for r in obj["spells"]]
    return validate_spells(spells, calendar, obj["covariate_names"])


def dichotomize(values: Sequence[float | None]) -> tuple[list[int | None], float]:
    """Split a quantitative covariate at its sample mean.

    Returns the 0/1 codes (``1`` iff value >= mean, missing stays ``None``)
    and the threshold used.
    """
    present = [float(v) for v in values
               if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not present:
        raise DataValidationError("cannot dichotomize: every value is missing")
    threshold = math.fsum(present) / len(present)
    out: list[int | None] = []
    for v in values:
        if v is None or (isinstance(v, float) and math.isnan(v)):
            out.append(None)
        else:
            out.append(int(float(v) >= threshold))
    return out, threshold


@dataclass(frozen=True)
class PersonPeriodRow:
    """One Games at which a record was at risk of being broken."""

    record_key: tuple[str, int]
    period_index: int
    time: float
    time_sq: float
    term: int
    covariates: Mapping[str, float | None] = field(default_factory=dict, hash=False)
    category: str = ""
    duration: int = 0
    censor: int = 1  # 1 when the spell ended in a break

    def value(self, name: str) -> float | None:
        if name == "Time":
            return self.time
        if name == "Time2":
            return self.time_sq
        if name == "Category":
            return float(CATEGORY_CODES[self.category])
        v = self.covariates.get(name)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None
        return float(v)


def expand_person_period(spells: Iterable[RecordSpell],
                         calendar: GamesCalendar = DEFAULT_CALENDAR) -> list[PersonPeriodRow]:
    """Rewrite spells as one row per Games at risk.

    A broken spell is at risk at every Games in ``(year_set, year_end]`` and
    breaks at the last of them. A censored spell is at risk at the Games
    strictly before its censoring year and never breaks. Cancelled Games
    produce no rows.
    """
    rows = []
    for s in spells:
        broken = s.status == BROKEN
        years = calendar.between(s.year_set, s.end, include_hi=broken)
        for i, y in enumerate(years, start=1):
            t = float(y - s.year_set)
            rows.append(PersonPeriodRow(
                record_key=s.key, period_index=i, time=t, time_sq=t * t,
                term=int(broken and i == len(years)),
                covariates=s.covariates, category=s.category,
                duration=s.duration, censor=s.event))
    return rows


@dataclass(frozen=True)
class LaggedRow:
    event_id: str
    outcome: RecordSpell
    lag_duration: float

    @property
    def duration(self) -> float:
        return float(self.outcome.duration)

    @property
    def event(self) -> int:
        return self.outcome.event


def build_lagged_dataset(data: SpellDataset | Iterable[RecordSpell], n: int, k: int,
                         min_events: int = 1) -> list[LaggedRow]:
    """Pair the ``n``-th spell of each event with the duration of spell ``n - k``.

    Events with fewer than ``n`` spells are skipped. Raises when fewer than
    ``min_events`` events qualify.
    """
    if not (n > k >= 1):
        raise DataValidationError(f"need n > k >= 1, got n={n}, k={k}")
    if not isinstance(data, SpellDataset):
        data = validate_spells(data)
    rows = []
    for event_id, spells in data.by_event().items():
        by_seq = {s.sequence: s for s in spells}
        if n in by_seq and (n - k) in by_seq:
            rows.append(LaggedRow(event_id, by_seq[n], float(by_seq[n - k].duration)))
    if len(rows) < max(min_events, 1):
        raise DataValidationError(
            f"only {len(rows)} event(s) have a record {n} with lag {k}; need {max(min_events, 1)}")
    return rows
