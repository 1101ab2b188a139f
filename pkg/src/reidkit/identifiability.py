"""Population-uniqueness estimation for demographic keys.

The closed-form model assumes birth dates are uniform and independent within
a (zip, gender, age-window) bin of N persons: the chance that a given person's
date is shared by none of the other N-1 members is (1 - 1/D)^(N-1), where D
counts distinguishable date values at the key's generalization level. This is
a model choice, documented as such; tests hold it to a Monte-Carlo simulation
of the same process.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from datetime import date

from .core import (
    _BIRTH_RANK,
    _ZIP_RANK,
    BirthDate,
    BirthLevel,
    DemographicKey,
    Gender,
    ValidationError,
    ZipCode,
    ZipLevel,
    require_uniform_level,
)
from .ingestion import PopulationTable

DEFAULT_AGE_WINDOW = 90

FLAG_KNOWN = "known"
FLAG_UNKNOWN = "unknown-bin"


class DomainError(ValidationError):
    """Population or date-space argument outside the model's domain."""


def date_space(level: BirthLevel, window: int) -> int:
    """Distinguishable birth-date values at a generalization level over `window` years.

    Full dates use 365.25 days/year rounded half up, so a 10-year window has
    3653 values.
    """
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    if level is BirthLevel.FULL:
        return int(365.25 * window + 0.5)
    if level is BirthLevel.YEAR_MONTH:
        return 12 * window
    if level is BirthLevel.YEAR_ONLY:
        return window
    return 1


def p_unique(population: int, dates: int) -> float:
    """Probability a person's birth date is unshared among `population` bin members.

    Uniform independent dates over `dates` values: (1 - 1/dates)^(population-1).
    """
    if population < 1 or dates < 1:
        raise DomainError(f"need population >= 1 and dates >= 1, got ({population}, {dates})")
    return (1.0 - 1.0 / dates) ** (population - 1)


@dataclass(frozen=True)
class UniquenessSummary:
    fraction_unique: float
    histogram: dict[int, int]


def empirical_uniqueness(records) -> UniquenessSummary:
    """Fraction of records whose key bin has size one, plus the bin-size histogram.

    The histogram maps bin size -> number of records living in bins of that
    size, so its values sum to the record count. All keys must share one
    generalization level.
    """
    keys = [r if isinstance(r, DemographicKey) else r.key for r in records]
    if not keys:
        raise ValidationError("no records to summarize")
    require_uniform_level(keys, "records")
    sizes = Counter(keys)
    histogram: dict[int, int] = {}
    unique = 0
    for size in sizes.values():
        histogram[size] = histogram.get(size, 0) + size
        if size == 1:
            unique += 1
    return UniquenessSummary(fraction_unique=unique / len(keys), histogram=histogram)


@dataclass(frozen=True)
class RiskCell:
    population: int
    date_space: int
    expected_bin: float
    p_unique: float
    flag: str


@dataclass(frozen=True)
class RiskReport:
    """Grid of uniqueness estimates over (birth level, zip level) cells.

    Cells exist only for levels at or coarser than the input key's own levels;
    the `focal` pair names the cell matching what the key currently exposes.
    """

    zip: ZipCode
    gender: Gender
    birth: BirthDate | None
    window: int
    as_of_year: int
    focal: tuple[BirthLevel, ZipLevel]
    cells: dict[tuple[BirthLevel, ZipLevel], RiskCell]

    @property
    def focal_cell(self) -> RiskCell:
        return self.cells[self.focal]

    def to_dict(self) -> dict:
        return {
            "zip": self.zip.digits,
            "gender": self.gender.value,
            "birth": self.birth.isoformat() if self.birth else None,
            "window": self.window,
            "as_of_year": self.as_of_year,
            "focal": _cell_key(self.focal),
            "cells": {
                _cell_key(level): {
                    "population": cell.population,
                    "date_space": cell.date_space,
                    "expected_bin": cell.expected_bin,
                    "p_unique": cell.p_unique,
                    "flag": cell.flag,
                }
                for level, cell in self.cells.items()
            },
        }


def _cell_key(level: tuple[BirthLevel, ZipLevel]) -> str:
    return f"{level[0].value}/{level[1].value}"


def parse_cell_key(text: str) -> tuple[BirthLevel, ZipLevel]:
    try:
        birth_text, zip_text = text.split("/", 1)
        return BirthLevel(birth_text), ZipLevel(zip_text)
    except ValueError:
        raise ValidationError(f"bad level pair {text!r}; expected e.g. 'YearOnly/Zip3'") from None


def risk_report(
    zip_code: ZipCode,
    gender: Gender,
    birth: BirthDate | None,
    table: PopulationTable,
    window: int | None = None,
    as_of_year: int | None = None,
) -> RiskReport:
    """Uniqueness grid for one person's demographics against a census table.

    For each (birth level, zip level) at or coarser than the inputs: N is the
    bin population at that zip level (3- and 2-digit zips aggregate by prefix
    over the table), D is the date space at that birth level over the age
    window, and p_unique is the closed-form estimate. The age window defaults
    to the matched census band's width, then to 90 years. Bins the table does
    not cover are flagged and report p_unique = 1.0: absence of evidence must
    warn, not reassure.
    """
    if as_of_year is None:
        as_of_year = date.today().year
    age = as_of_year - birth.year if birth is not None else None
    if age is not None and age < 0:
        age = None

    effective_window = window
    if effective_window is None and age is not None and zip_code.level is ZipLevel.ZIP5:
        effective_window = table.band_width(zip_code.digits, gender, age)
    if effective_window is None:
        effective_window = DEFAULT_AGE_WINDOW

    birth_levels = [lv for lv in BirthLevel if _BIRTH_RANK[lv] >= _BIRTH_RANK[birth.level if birth else BirthLevel.ABSENT]]
    zip_levels = [lv for lv in ZipLevel if _ZIP_RANK[lv] >= _ZIP_RANK[zip_code.level]]

    cells: dict[tuple[BirthLevel, ZipLevel], RiskCell] = {}
    for bl in birth_levels:
        cell_age = age if bl is not BirthLevel.ABSENT else None
        for zl in zip_levels:
            prefix = zip_code.digits[: {ZipLevel.ZIP5: 5, ZipLevel.ZIP3: 3, ZipLevel.ZIP2: 2, ZipLevel.ABSENT: 0}[zl]]
            if zl is ZipLevel.ZIP5:
                population, known = table.lookup(prefix, gender, cell_age)
            else:
                population, known = table.lookup_prefix(prefix, gender, cell_age)
            if age is None and bl is not BirthLevel.ABSENT:
                known = False  # cannot place the person in an age band
            dates = date_space(bl, effective_window)
            if known and population >= 1:
                cells[(bl, zl)] = RiskCell(
                    population=population,
                    date_space=dates,
                    expected_bin=population / dates,
                    p_unique=p_unique(population, dates),
                    flag=FLAG_KNOWN,
                )
            else:
                cells[(bl, zl)] = RiskCell(
                    population=population,
                    date_space=dates,
                    expected_bin=0.0,
                    p_unique=1.0,
                    flag=FLAG_UNKNOWN,
                )
    return RiskReport(
        zip=zip_code,
        gender=gender,
        birth=birth,
        window=effective_window,
        as_of_year=as_of_year,
        focal=(birth.level if birth else BirthLevel.ABSENT, zip_code.level),
        cells=cells,
    )


def _canonical_value(value):
    if isinstance(value, float):
        return float(format(value, ".6g"))
    if isinstance(value, dict):
        return {k: _canonical_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical_value(v) for v in value]
    return value


def canonical_json(payload) -> str:
    """Serialize with sorted keys and floats at 6 significant digits.

    The service, CLI, and library all emit this form, so their outputs can be
    compared byte for byte.
    """
    return json.dumps(_canonical_value(payload), sort_keys=True, separators=(",", ":"))
