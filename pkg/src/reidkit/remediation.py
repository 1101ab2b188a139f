"""De-identification defenses: key generalization and CCR date-of-birth editing.

The CCR editor never re-serializes the document. It locates the patient
date-of-birth element with a conforming XML parse that tracks byte offsets,
then splices replacement bytes into the original buffer, so every byte outside
the edited span survives verbatim (whitespace, attribute order, encoding
declaration, comments, all of it).
"""

from __future__ import annotations

import enum
import re
import xml.parsers.expat
from dataclasses import dataclass

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import (
    _BIRTH_RANK,
    _ZIP_RANK,
    BirthLevel,
    DemographicKey,
    ReidkitError,
    ValidationError,
    ZipLevel,
    generalize,
)
from .identifiability import RiskReport, risk_report
from .ingestion import PopulationTable


class NotWellFormedError(ReidkitError):
    """The document is not well-formed XML."""


@dataclass(frozen=True)
class SafeHarborPolicy:
    """Generalization rule: year-only dates; ZIP truncated to 2 digits when the
    5-digit zip's population is under the threshold, else to 3 digits."""

    pop_threshold: int = 20000
    below_action: ZipLevel = ZipLevel.ZIP2
    at_or_above_action: ZipLevel = ZipLevel.ZIP3
    date_action: BirthLevel = BirthLevel.YEAR_ONLY

    def __post_init__(self):
        if self.pop_threshold <= 0:
            raise ValidationError("pop_threshold must be positive")


@dataclass(frozen=True)
class SafeHarborResult:
    key: DemographicKey
    unknown_population: bool = False


def apply_safe_harbor(
    key: DemographicKey,
    table: PopulationTable,
    policy: SafeHarborPolicy | None = None,
) -> SafeHarborResult:
    """Coarsen a key per the policy. Idempotent.

    A zip whose population the table does not know is treated as below the
    threshold (coarsened harder) and flagged. Keys already coarser than the
    policy's actions pass through unchanged; nothing is ever refined.
    """
    policy = policy or SafeHarborPolicy()
    unknown = False
    birth = key.birth
    if birth is not None and _BIRTH_RANK[birth.level] < _BIRTH_RANK[policy.date_action]:
        birth = birth.generalized(policy.date_action)
    zip_code = key.zip
    if zip_code.level is ZipLevel.ZIP5:
        population, known = table.zip_population(zip_code.digits)
        if not known:
            unknown = True
            action = policy.below_action
        elif population < policy.pop_threshold:
            action = policy.below_action
        else:
            action = policy.at_or_above_action
        zip_code = zip_code.generalized(action)
    return SafeHarborResult(DemographicKey(birth, key.gender, zip_code), unknown)


class CcrEditMode(enum.Enum):
    YEAR_ONLY = "year"
    REMOVE = "remove"


@dataclass(frozen=True)
class CcrDocument:
    """Raw CCR bytes plus the located date-of-birth spans.

    `dob_span` covers the whole DateOfBirth element (start tag through end
    tag); `text_span` covers the character data inside its ExactDateTime
    child. Both are byte offsets into `raw`. The patient is taken to be the
    first Actor/Person in the document; date-of-birth elements under later
    actors are never touched.
    """

    raw: bytes
    dob_span: tuple[int, int] | None = None
    text_span: tuple[int, int] | None = None
    text: str = ""
    encoding: str = "utf-8"


_DOB_PATH = ("Actor", "Person", "DateOfBirth")


def _local(tag: str) -> str:
    return tag.rsplit(":", 1)[-1]


def _end_of_tag(raw: bytes, start: int) -> int:
    """Index of the '>' closing the tag that starts at `start`.

    Quote-aware: '>' inside quoted attribute values does not count.
    """
    quote = None
    for i in range(start, len(raw)):
        c = raw[i:i + 1]
        if quote is not None:
            if c == quote:
                quote = None
        elif c in (b'"', b"'"):
            quote = c
        elif c == b">":
            return i
    raise NotWellFormedError("unterminated tag")


def parse_ccr(raw: bytes) -> CcrDocument:
    """Locate the Actor/Person DateOfBirth element and its ExactDateTime text.

    Raises NotWellFormedError if the bytes are not well-formed XML; a missing
    date-of-birth element is not an error, just absent spans.
    """
    parser = xml.parsers.expat.ParserCreate()
    # buffer_text must stay off: chunk-start byte indices locate the text span
    parser.buffer_text = False
    stack: list[str] = []
    state = {
        "dob_start": None, "dob_end": None,
        "text_start": None, "text_end": None,
        "chunks": [], "in_exact": False, "done": False,
        # the patient is the first Actor/Person in the document; only its
        # date of birth is recognized
        "patient_seen": False, "patient_active": False,
    }

    def start(tag, attrs):
        name = _local(tag)
        if name == "Person" and stack[-1:] == ["Actor"] and not state["patient_seen"]:
            state["patient_seen"] = True
            state["patient_active"] = True
        elif state["patient_active"] and not state["done"] and state["dob_start"] is None \
                and name == _DOB_PATH[-1] and tuple(stack[-2:]) == _DOB_PATH[:2]:
            state["dob_start"] = parser.CurrentByteIndex
        elif state["dob_start"] is not None and state["dob_end"] is None and name == "ExactDateTime" \
                and state["text_start"] is None:
            state["in_exact"] = True
        stack.append(name)

    def end(tag):
        name = stack.pop()
        if name == "Person" and stack[-1:] == ["Actor"] and state["patient_active"]:
            state["patient_active"] = False
        if state["done"]:
            return
        if state["in_exact"] and name == "ExactDateTime":
            state["in_exact"] = False
            state["text_end"] = parser.CurrentByteIndex
        elif state["dob_start"] is not None and state["dob_end"] is None and name == _DOB_PATH[-1] \
                and tuple(stack[-2:]) == _DOB_PATH[:2]:
            state["dob_end"] = parser.CurrentByteIndex
            state["done"] = True

    def chars(data):
        if state["in_exact"] and not state["done"]:
            if state["text_start"] is None:
                state["text_start"] = parser.CurrentByteIndex
            state["chunks"].append(data)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(raw, True)
    except xml.parsers.expat.ExpatError as exc:
        raise NotWellFormedError(str(exc)) from exc

    encoding = "utf-8"
    decl = re.match(rb'<\?xml[^>]*encoding=["\']([A-Za-z0-9._-]+)["\']', raw)
    if decl:
        encoding = decl.group(1).decode("ascii").lower()

    dob_span = None
    if state["dob_start"] is not None and state["dob_end"] is not None:
        start_gt = _end_of_tag(raw, state["dob_start"])
        if raw[start_gt - 1:start_gt] == b"/":
            # self-closed element; the end event already fired past it
            dob_span = (state["dob_start"], start_gt + 1)
        else:
            dob_span = (state["dob_start"], _end_of_tag(raw, state["dob_end"]) + 1)
    text_span = None
    if state["text_start"] is not None and state["text_end"] is not None:
        text_span = (state["text_start"], state["text_end"])
    return CcrDocument(
        raw=raw,
        dob_span=dob_span,
        text_span=text_span,
        text="".join(state["chunks"]),
        encoding=encoding,
    )


@dataclass(frozen=True)
class CcrEditResult:
    document: bytes
    mode: CcrEditMode
    edited_span: tuple[int, int] | None
    replacement: bytes | None
    flag: str | None

    def summary(self) -> dict:
        return {
            "mode": self.mode.value,
            "edited_span": list(self.edited_span) if self.edited_span else None,
            "replacement": self.replacement.decode("ascii", "replace") if self.replacement is not None else None,
            "flag": self.flag,
        }


def ccr_set_birth(doc, mode: CcrEditMode) -> CcrEditResult:
    """Rewrite the date of birth to year precision, or remove it altogether.

    Accepts raw bytes or a parsed CcrDocument. A document without a
    recognized date-of-birth element is returned byte-identical with a flag
    rather than an error; repeated application is idempotent.
    """
    if not isinstance(doc, CcrDocument):
        doc = parse_ccr(bytes(doc))
    if doc.dob_span is None:
        return CcrEditResult(doc.raw, mode, None, None, "no-birth-element")
    if mode is CcrEditMode.REMOVE:
        start, end = doc.dob_span
        return CcrEditResult(doc.raw[:start] + doc.raw[end:], mode, (start, end), b"", None)
    if doc.text_span is None:
        return CcrEditResult(doc.raw, mode, None, None, "no-exact-datetime")
    year = re.match(r"\s*(\d{4})", doc.text)
    if not year:
        return CcrEditResult(doc.raw, mode, None, None, "unparseable-birth-text")
    start, end = doc.text_span
    replacement = year.group(1).encode(doc.encoding)
    if doc.raw[start:end] == replacement:
        return CcrEditResult(doc.raw, mode, (start, end), replacement, None)
    return CcrEditResult(doc.raw[:start] + replacement + doc.raw[end:], mode, (start, end), replacement, None)


@dataclass(frozen=True)
class WhatIf:
    before: RiskReport
    after: RiskReport


def whatif(
    key: DemographicKey,
    table: PopulationTable,
    window: int | None = None,
    birth_level: BirthLevel | None = None,
    zip_level: ZipLevel | None = None,
    as_of_year: int | None = None,
) -> WhatIf:
    """Risk grids before and after generalizing a key to the target levels.

    Omitted targets keep the current level. Requesting a finer level raises
    RefinementRequestedError, same as `generalize`.
    """
    before = risk_report(key.zip, key.gender, key.birth, table, window, as_of_year)
    coarse = generalize(
        key,
        birth_level if birth_level is not None else key.birth_level,
        zip_level if zip_level is not None else key.zip_level,
    )
    after = risk_report(coarse.zip, coarse.gender, coarse.birth, table, before.window, before.as_of_year)
    return WhatIf(before, after)


class KeyGeneralizer(TransformerMixin, BaseEstimator):
    """Stateless transformer coarsening keys to fixed target levels."""

    def __init__(self, birth_level: BirthLevel = BirthLevel.YEAR_ONLY, zip_level: ZipLevel = ZipLevel.ZIP3):
        self.birth_level = birth_level
        self.zip_level = zip_level

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[DemographicKey]:
        return [generalize(key, self.birth_level, self.zip_level) for key in X]


class SafeHarborScrubber(TransformerMixin, BaseEstimator):
    """Transformer applying the population-threshold generalization policy.

    Fit binds the census table; transform coarsens each key. Flags for
    unknown-population zips from the last transform are kept on
    `unknown_flags_`.
    """

    def __init__(
        self,
        pop_threshold: int = 20000,
        below_action: ZipLevel = ZipLevel.ZIP2,
        at_or_above_action: ZipLevel = ZipLevel.ZIP3,
        date_action: BirthLevel = BirthLevel.YEAR_ONLY,
    ):
        self.pop_threshold = pop_threshold
        self.below_action = below_action
        self.at_or_above_action = at_or_above_action
        self.date_action = date_action

    def fit(self, X: PopulationTable, y=None) -> "SafeHarborScrubber":
        if not isinstance(X, PopulationTable):
            raise ValidationError("fit expects a PopulationTable")
        self.table_ = X
        return self

    def transform(self, X) -> list[DemographicKey]:
        if not hasattr(self, "table_"):
            raise NotFittedError("SafeHarborScrubber must be fit on a population table")
        policy = SafeHarborPolicy(
            self.pop_threshold, self.below_action, self.at_or_above_action, self.date_action
        )
        results = [apply_safe_harbor(key, self.table_, policy) for key in X]
        self.unknown_flags_ = [r.unknown_population for r in results]
        return [r.key for r in results]
