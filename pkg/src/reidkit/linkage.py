"""Registry indexing and the unique-match linkage attack.

A registry snapshot is indexed by demographic key; a profile re-identifies
when its key's bucket holds exactly one distinct person name. Multiple attack
strategies' candidate lists can be combined, cross-tabulated into an overlap
matrix, and scored against ground truth in exact or nickname-tolerant mode.
"""

from __future__ import annotations

import csv
import enum
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import (
    _BIRTH_RANK,
    _ZIP_RANK,
    BirthLevel,
    DemographicKey,
    MatchMode,
    MixedGeneralizationError,
    NicknameTable,
    PersonName,
    ValidationError,
    ZipLevel,
    names_match,
)
from .ingestion import Diagnostic, Profile, RegistryRecord


class MatchStatus(enum.Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"
    NONE = "none"


@dataclass(frozen=True)
class MatchOutcome:
    """Linkage result for one profile.

    A unique outcome carries exactly one name; an ambiguous outcome carries
    only the bucket size, never the names.
    """

    profile_id: str
    status: MatchStatus
    name: PersonName | None = None
    candidate_count: int = 0

    def __post_init__(self):
        if self.status is MatchStatus.UNIQUE and self.name is None:
            raise ValidationError("unique outcome requires a name")
        if self.status is not MatchStatus.UNIQUE and self.name is not None:
            raise ValidationError("only unique outcomes carry a name")


@dataclass(frozen=True)
class NameCandidate:
    """A (profile, name) assertion produced by one attack strategy."""

    profile_id: str
    name: PersonName
    source: str


@dataclass(frozen=True)
class CombinedCandidate:
    """A cross-strategy name assertion with every agreeing source noted."""

    profile_id: str
    name: PersonName
    sources: tuple[str, ...]


@dataclass(frozen=True)
class Conflict:
    """Two or more strategies named the same profile with non-matching names."""

    profile_id: str
    entries: tuple[CombinedCandidate, ...]


@dataclass
class KeyIndex:
    """Demographic key -> distinct person names, at one generalization level."""

    buckets: dict[DemographicKey, list[PersonName]]
    level: tuple[BirthLevel, ZipLevel]
    duplicates: list[Diagnostic] = field(default_factory=list)
    total: int = 0

    def names_for(self, key: DemographicKey) -> list[PersonName]:
        return self.buckets.get(key, [])


def build_index(
    registry: Sequence[RegistryRecord],
    level: tuple[BirthLevel, ZipLevel] | None = None,
) -> KeyIndex:
    """Index registry records by key, collapsing exact name+key duplicates.

    All records must share one generalization level (full precision for an
    ingested registry; coarser when the caller generalized both sides). Two
    records with the same key but distinct normalized names share a bucket;
    the same normalized name twice collapses with a duplicate diagnostic.
    """
    seen_level = None
    buckets: dict[DemographicKey, list[PersonName]] = {}
    seen_names: dict[DemographicKey, set[str]] = {}
    duplicates: list[Diagnostic] = []
    for position, record in enumerate(registry, start=1):
        if seen_level is None:
            seen_level = record.key.level
        elif record.key.level != seen_level:
            raise MixedGeneralizationError(
                f"registry record {position} at {_level_label(record.key.level)}, "
                f"index at {_level_label(seen_level)}"
            )
        names = seen_names.setdefault(record.key, set())
        if record.name.canonical in names:
            duplicates.append(
                Diagnostic(position, "warning", f"duplicate record for {record.name.canonical!r} collapsed")
            )
            continue
        names.add(record.name.canonical)
        buckets.setdefault(record.key, []).append(record.name)
    if seen_level is None:
        seen_level = level if level is not None else (BirthLevel.FULL, ZipLevel.ZIP5)
    if level is not None and seen_level != level:
        raise MixedGeneralizationError(
            f"records at {_level_label(seen_level)}, requested {_level_label(level)}"
        )
    return KeyIndex(buckets=buckets, level=seen_level, duplicates=duplicates, total=len(registry))


def _level_label(level: tuple[BirthLevel, ZipLevel]) -> str:
    return f"{level[0].value}/{level[1].value}"


@dataclass
class LinkResult:
    outcomes: list[MatchOutcome]
    candidates: list[NameCandidate]
    diagnostics: list[Diagnostic]


def link(profiles: Sequence[Profile], index: KeyIndex, source: str) -> LinkResult:
    """Match each profile's key against the index using the unique-match rule.

    Bucket size one yields a unique outcome plus a name candidate; two or
    more, an ambiguous outcome; zero, none. Profiles whose keys are coarser
    than the index level (partial demographics) are skipped with a "key
    incomplete" diagnostic; a key finer than the index level is a usage error
    because the caller should have generalized it first.
    """
    birth_rank = _BIRTH_RANK[index.level[0]]
    zip_rank = _ZIP_RANK[index.level[1]]
    outcomes: list[MatchOutcome] = []
    candidates: list[NameCandidate] = []
    diagnostics: list[Diagnostic] = []
    for position, profile in enumerate(profiles, start=1):
        key = profile.key
        if key.level != index.level:
            if _BIRTH_RANK[key.birth_level] < birth_rank or _ZIP_RANK[key.zip_level] < zip_rank:
                raise MixedGeneralizationError(
                    f"profile {profile.id!r} key at {_level_label(key.level)} is finer than "
                    f"index level {_level_label(index.level)}"
                )
            diagnostics.append(Diagnostic(position, "skip", f"key incomplete for profile {profile.id!r}"))
            continue
        names = index.names_for(key)
        if len(names) == 1:
            outcomes.append(MatchOutcome(profile.id, MatchStatus.UNIQUE, names[0], 1))
            candidates.append(NameCandidate(profile.id, names[0], source))
        elif names:
            outcomes.append(MatchOutcome(profile.id, MatchStatus.AMBIGUOUS, None, len(names)))
        else:
            outcomes.append(MatchOutcome(profile.id, MatchStatus.NONE, None, 0))
    return LinkResult(outcomes, candidates, diagnostics)


class Linker(BaseEstimator):
    """Estimator wrapper: fit on a registry, predict match outcomes for profiles.

    Parameters
    ----------
    source : str
        Strategy label stamped onto emitted name candidates.
    """

    def __init__(self, source: str = "registry"):
        self.source = source

    def fit(self, registry: Sequence[RegistryRecord], y=None) -> "Linker":
        self.index_ = build_index(registry)
        return self

    def _check_fitted(self):
        if not hasattr(self, "index_"):
            raise NotFittedError("Linker must be fit on a registry before predicting")

    def predict(self, profiles: Sequence[Profile]) -> list[MatchOutcome]:
        self._check_fitted()
        return self.link(profiles).outcomes

    def link(self, profiles: Sequence[Profile]) -> LinkResult:
        self._check_fitted()
        return link(profiles, self.index_, self.source)


def _as_source_lists(candidate_lists) -> list[tuple[str, list[NameCandidate]]]:
    """Normalize per-source input: mapping label->list, or bare lists."""
    out: list[tuple[str, list[NameCandidate]]] = []
    if isinstance(candidate_lists, Mapping):
        items = candidate_lists.items()
    else:
        items = ((None, lst) for lst in candidate_lists)
    for label, lst in items:
        lst = list(lst)
        sources = {c.source for c in lst}
        if label is None:
            if len(sources) != 1:
                raise ValidationError("cannot derive a source label from an empty or mixed list")
            label = next(iter(sources))
        elif sources - {label}:
            raise ValidationError(f"list labeled {label!r} contains candidates from {sources}")
        seen = set()
        for c in lst:
            if c.profile_id in seen:
                raise ValidationError(f"source {label!r} names profile {c.profile_id!r} twice")
            seen.add(c.profile_id)
        out.append((label, lst))
    if len({label for label, _ in out}) != len(out):
        raise ValidationError("source labels must be distinct")
    return out


def combine(
    candidate_lists,
    nicknames: NicknameTable | None = None,
    prefix_fallback: bool = True,
) -> tuple[list[CombinedCandidate], list[Conflict]]:
    """Union candidate lists by profile, merging names that agree.

    Names from different sources merge when they match nickname-tolerantly;
    the first-seen spelling is kept and all agreeing sources are noted. When
    sources disagree, every variant is kept and a conflict is recorded; there
    is never a silent winner.
    """
    per_source = _as_source_lists(candidate_lists)
    order: list[str] = []
    clusters: dict[str, list[tuple[PersonName, list[str]]]] = {}
    for label, lst in per_source:
        for cand in lst:
            if cand.profile_id not in clusters:
                clusters[cand.profile_id] = []
                order.append(cand.profile_id)
            for name, sources in clusters[cand.profile_id]:
                if names_match(name, cand.name, MatchMode.NICKNAME_TOLERANT, nicknames, prefix_fallback):
                    sources.append(label)
                    break
            else:
                clusters[cand.profile_id].append((cand.name, [label]))
    combined: list[CombinedCandidate] = []
    conflicts: list[Conflict] = []
    for pid in order:
        entries = tuple(
            CombinedCandidate(pid, name, tuple(sources)) for name, sources in clusters[pid]
        )
        combined.extend(entries)
        if len(entries) > 1:
            conflicts.append(Conflict(pid, entries))
    return combined, conflicts


@dataclass(frozen=True)
class OverlapMatrix:
    """Strategy discrimination table: exclusive counts on the diagonal,
    pairwise common-profile counts off it."""

    sources: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]

    def row_total(self, i: int) -> int:
        return sum(self.cells[i])


def overlap_matrix(candidate_lists) -> OverlapMatrix:
    """Cross-tabulate which profiles each strategy named.

    Overlap is at the profile level: a profile counts as common to two
    strategies when both named it, whether or not the names agree.
    """
    per_source = _as_source_lists(candidate_lists)
    labels = [label for label, _ in per_source]
    named = [frozenset(c.profile_id for c in lst) for _, lst in per_source]
    n = len(labels)
    cells = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                others = frozenset().union(*(named[k] for k in range(n) if k != i)) if n > 1 else frozenset()
                row.append(len(named[i] - others))
            else:
                row.append(len(named[i] & named[j]))
        cells.append(tuple(row))
    return OverlapMatrix(tuple(labels), tuple(cells))


@dataclass(frozen=True)
class ScoreRow:
    source: str
    wrong: int
    total: int
    unverifiable: int = 0

    @property
    def correct_pct(self) -> int | None:
        """Whole-percent correctness, rounded half up; None when nothing scored."""
        if self.total == 0:
            return None
        return (200 * (self.total - self.wrong) + self.total) // (2 * self.total)


@dataclass(frozen=True)
class ScoreReport:
    rows: tuple[ScoreRow, ...]
    combined: ScoreRow
    mode: MatchMode


def score(
    candidates,
    truth: Mapping[str, PersonName],
    mode: MatchMode = MatchMode.EXACT,
    nicknames: NicknameTable | None = None,
    prefix_fallback: bool = True,
) -> ScoreReport:
    """Tally wrong/total per strategy and for the combined candidate list.

    Candidates whose profile is missing from the truth mapping count as
    unverifiable and join no tally. Nickname-tolerant scoring can only
    forgive errors, so its wrong count never exceeds exact-mode scoring.
    """
    if isinstance(candidates, Mapping):
        per_source = _as_source_lists(candidates)
    else:
        candidates = list(candidates)
        if candidates and isinstance(candidates[0], (list, tuple)):
            per_source = _as_source_lists(candidates)
        else:
            by_label: dict[str, list[NameCandidate]] = {}
            for cand in candidates:
                by_label.setdefault(cand.source, []).append(cand)
            per_source = _as_source_lists(by_label)

    def tally(label: str, entries) -> ScoreRow:
        wrong = total = unverifiable = 0
        for pid, name in entries:
            if pid not in truth:
                unverifiable += 1
                continue
            total += 1
            if not names_match(name, truth[pid], mode, nicknames, prefix_fallback):
                wrong += 1
        return ScoreRow(label, wrong, total, unverifiable)

    rows = tuple(
        tally(label, ((c.profile_id, c.name) for c in lst)) for label, lst in per_source
    )
    combined_entries, _ = combine(dict(per_source), nicknames, prefix_fallback)
    combined = tally("Combined", ((c.profile_id, c.name) for c in combined_entries))
    return ScoreReport(rows, combined, mode)


def write_outcomes(outcomes: Sequence[MatchOutcome], stream, source: str) -> None:
    """Export match outcomes as `profile_id,status,name,sources` CSV."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["profile_id", "status", "name", "sources"])
    for o in outcomes:
        writer.writerow([
            o.profile_id,
            o.status.value,
            o.name.canonical if o.name else "",
            source,
        ])


def write_combined(entries: Sequence[CombinedCandidate], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["profile_id", "status", "name", "sources"])
    for e in entries:
        writer.writerow([e.profile_id, "unique", e.name.canonical, "+".join(e.sources)])


def write_overlap_matrix(matrix: OverlapMatrix, stream) -> None:
    """Export the discrimination table with row/column totals."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([""] + list(matrix.sources) + ["Totals"])
    for i, label in enumerate(matrix.sources):
        writer.writerow([label] + list(matrix.cells[i]) + [matrix.row_total(i)])
    writer.writerow(["Totals"] + [matrix.row_total(i) for i in range(len(matrix.sources))] + [""])


def write_score_report(report: ScoreReport, stream) -> None:
    """Export the correctness table, one row per strategy plus the combined row."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source", "wrong", "total", "correct_pct"])
    for row in list(report.rows) + [report.combined]:
        pct = row.correct_pct
        writer.writerow([row.source, row.wrong, row.total, "" if pct is None else f"{pct}%"])
