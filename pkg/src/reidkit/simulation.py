"""Synthetic-world generator and end-to-end experiment harness.

A world is a population with known ground truth. A registry snapshot degrades
it the way a purchased voter file degrades reality: only a sampling fraction
of people appear, some have moved to a different ZIP since the profile data
was recorded, and some are listed under a nickname. Profiles always cover the
whole world; degradation applies to the registry side only.

Everything is driven by explicit seeds; a (world seed, snapshot seed) pair
fully determines an experiment result.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from datetime import date, timedelta
from functools import lru_cache
from importlib import resources

import numpy as np

from .core import (
    BirthDate,
    DemographicKey,
    Gender,
    MatchMode,
    NicknameTable,
    PersonName,
    ValidationError,
    ZipCode,
    names_match,
)
from .identifiability import canonical_json
from .ingestion import Profile, RegistryRecord
from .linkage import (
    CombinedCandidate,
    Conflict,
    MatchOutcome,
    OverlapMatrix,
    ScoreReport,
    build_index,
    combine,
    link,
    overlap_matrix,
    score,
)

# Fixed epoch for birth-date windows so generated worlds never depend on the
# wall clock.
REFERENCE_YEAR = 2010

DEFAULT_ZIP_WEIGHTS = (
    ("10001", 3.0),
    ("10002", 2.0),
    ("10003", 2.0),
    ("10004", 1.0),
    ("10005", 1.0),
)


@lru_cache(maxsize=1)
def bundled_given_names() -> tuple[str, ...]:
    text = resources.files("reidkit.data").joinpath("given_names.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@lru_cache(maxsize=1)
def bundled_surnames() -> tuple[str, ...]:
    text = resources.files("reidkit.data").joinpath("surnames.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def _rank_weights(n: int) -> np.ndarray:
    # Heavier mass on early (more common) names, roughly Zipf-shaped.
    w = 1.0 / (np.arange(n) + 10.0)
    return w / w.sum()


@dataclass(frozen=True)
class WorldConfig:
    population_size: int
    zip_weights: tuple[tuple[str, float], ...] = DEFAULT_ZIP_WEIGHTS
    age_window: int = 50
    gender_split: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ValidationError("population_size must be >= 1")
        if not self.zip_weights:
            raise ValidationError("need at least one zip weight")
        if any(w <= 0 for _, w in self.zip_weights):
            raise ValidationError("zip weights must be positive")
        if not 0.0 <= self.gender_split <= 1.0:
            raise ValidationError("gender_split must be in [0, 1]")
        if self.age_window < 1:
            raise ValidationError("age_window must be >= 1")


@dataclass(frozen=True)
class Person:
    name: PersonName
    key: DemographicKey


@dataclass(frozen=True)
class World:
    persons: tuple[Person, ...]
    config: WorldConfig


def generate_world(cfg: WorldConfig) -> World:
    """Draw a population: rank-weighted names, uniform birth dates, weighted zips."""
    rng = np.random.default_rng(cfg.seed)
    givens = bundled_given_names()
    surnames = bundled_surnames()
    zips = [z for z, _ in cfg.zip_weights]
    zw = np.array([w for _, w in cfg.zip_weights], dtype=float)
    zw /= zw.sum()

    n = cfg.population_size
    given_idx = rng.choice(len(givens), size=n, p=_rank_weights(len(givens)))
    surname_idx = rng.choice(len(surnames), size=n, p=_rank_weights(len(surnames)))
    female = rng.random(n) < cfg.gender_split
    zip_idx = rng.choice(len(zips), size=n, p=zw)
    window_start = date(REFERENCE_YEAR - cfg.age_window, 1, 1)
    window_days = (date(REFERENCE_YEAR, 1, 1) - window_start).days
    day_offsets = rng.integers(0, window_days, size=n)

    persons = []
    for i in range(n):
        given = givens[given_idx[i]]
        surname = surnames[surname_idx[i]]
        born = window_start + timedelta(days=int(day_offsets[i]))
        persons.append(
            Person(
                name=PersonName(given, surname, f"{given} {surname}"),
                key=DemographicKey(
                    BirthDate(born.year, born.month, born.day),
                    Gender.FEMALE if female[i] else Gender.MALE,
                    ZipCode(zips[zip_idx[i]]),
                ),
            )
        )
    return World(tuple(persons), cfg)


@dataclass(frozen=True)
class SnapshotConfig:
    sampling_fraction: float = 1.0
    mobility_rate: float = 0.0
    nickname_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for label, rate in (
            ("sampling_fraction", self.sampling_fraction),
            ("mobility_rate", self.mobility_rate),
            ("nickname_rate", self.nickname_rate),
        ):
            if not 0.0 <= rate <= 1.0:
                raise ValidationError(f"{label} must be in [0, 1], got {rate}")


def snapshot_registry(
    world: World,
    cfg: SnapshotConfig,
    nicknames: NicknameTable | None = None,
) -> list[RegistryRecord]:
    """Sample a registry from the world with mobility and nickname noise.

    Each person is kept with probability `sampling_fraction`. Kept persons
    move to a different weighted-random zip with probability `mobility_rate`
    (their profile keeps the original zip: the registry is the newer dataset).
    With probability `nickname_rate`, a person whose given name has table
    alternatives is listed under one of them.
    """
    if nicknames is None:
        nicknames = NicknameTable.bundled()
    rng = np.random.default_rng(cfg.seed)
    zips = [z for z, _ in world.config.zip_weights]
    zw = np.array([w for _, w in world.config.zip_weights], dtype=float)
    zw /= zw.sum()

    n = len(world.persons)
    keep = rng.random(n) < cfg.sampling_fraction
    move = rng.random(n) < cfg.mobility_rate
    nick = rng.random(n) < cfg.nickname_rate

    records: list[RegistryRecord] = []
    for i, person in enumerate(world.persons):
        if not keep[i]:
            continue
        key = person.key
        if move[i] and len(zips) > 1:
            new_zip = key.zip.digits
            while new_zip == key.zip.digits:
                new_zip = zips[rng.choice(len(zips), p=zw)]
            key = DemographicKey(key.birth, key.gender, ZipCode(new_zip))
        name = person.name
        if nick[i]:
            alternatives = sorted(nicknames.alternatives(name.given))
            if alternatives:
                alias = alternatives[rng.integers(len(alternatives))]
                name = PersonName(alias, name.surname, f"{alias} {name.surname}")
        records.append(RegistryRecord(name, key))
    return records


def world_profiles(world: World) -> list[Profile]:
    """The de-identified side: every world member, synthetic ids, empty payloads."""
    return [
        Profile(id=f"p{i:06d}", key=person.key)
        for i, person in enumerate(world.persons, start=1)
    ]


def world_truth(world: World) -> dict[str, PersonName]:
    return {
        f"p{i:06d}": person.name for i, person in enumerate(world.persons, start=1)
    }


@dataclass
class ExperimentResult:
    unique_rate: float
    precision: float | None
    recall: float
    score: ScoreReport
    overlap: OverlapMatrix
    combined: list[CombinedCandidate]
    conflicts: list[Conflict]
    outcomes: dict[str, list[MatchOutcome]]

    def to_dict(self) -> dict:
        return {
            "unique_rate": self.unique_rate,
            "precision": self.precision,
            "recall": self.recall,
            "mode": self.score.mode.value,
            "score": [
                {
                    "source": row.source,
                    "wrong": row.wrong,
                    "total": row.total,
                    "correct_pct": row.correct_pct,
                }
                for row in list(self.score.rows) + [self.score.combined]
            ],
            "overlap": {
                "sources": list(self.overlap.sources),
                "cells": [list(row) for row in self.overlap.cells],
            },
            "conflicts": [
                {
                    "profile_id": c.profile_id,
                    "names": [e.name.canonical for e in c.entries],
                }
                for c in self.conflicts
            ],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def run_experiment(
    world: World,
    snapshot_cfgs: Mapping[str, SnapshotConfig],
    mode: MatchMode = MatchMode.EXACT,
    nicknames: NicknameTable | None = None,
) -> ExperimentResult:
    """Link world profiles against one registry snapshot per source and score.

    Precision is the fraction of named profiles whose combined entry set
    contains the true name (in the given matching mode); recall divides by
    all profiles instead. With a perfect snapshot (f=1, m=0, no nicknames)
    precision is exactly 1 and recall equals the world's unique-key fraction.
    """
    if nicknames is None:
        nicknames = NicknameTable.bundled()
    profiles = world_profiles(world)
    truth = world_truth(world)

    candidate_lists: dict[str, list] = {}
    outcomes: dict[str, list[MatchOutcome]] = {}
    for label, cfg in snapshot_cfgs.items():
        registry = snapshot_registry(world, cfg, nicknames)
        result = link(profiles, build_index(registry), label)
        candidate_lists[label] = result.candidates
        outcomes[label] = result.outcomes

    combined, conflicts = combine(candidate_lists, nicknames)
    named = {entry.profile_id for entry in combined}
    correct = {
        entry.profile_id
        for entry in combined
        if names_match(entry.name, truth[entry.profile_id], mode, nicknames)
    }
    unique_rate = len(named) / len(profiles)
    precision = len(correct) / len(named) if named else None
    recall = len(correct) / len(profiles)
    return ExperimentResult(
        unique_rate=unique_rate,
        precision=precision,
        recall=recall,
        score=score(candidate_lists, truth, mode, nicknames),
        overlap=overlap_matrix(candidate_lists),
        combined=combined,
        conflicts=conflicts,
        outcomes=outcomes,
    )
