"""Shared domain types: quasi-identifier keys, person names, and matching rules.

Everything here is an immutable value object; instances can be shared freely
across threads. Demographic keys carry an explicit generalization level per
field (birth date precision, ZIP digit count) and joining operations elsewhere
refuse to compare keys at mixed levels.
"""

from __future__ import annotations

import csv
import enum
import io
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from importlib import resources


class ReidkitError(Exception):
    """Base class for all package errors."""


class ValidationError(ReidkitError, ValueError):
    """Input failed a domain invariant."""


class EmptyNameError(ValidationError):
    """No alphabetic token survived name normalization."""


class UnparseableNameError(ValidationError):
    """Fewer than two name tokens; cannot split given/surname."""


class RefinementRequestedError(ValidationError):
    """A generalization target was finer than the current level."""


class MixedGeneralizationError(ValidationError):
    """Keys at different generalization levels were joined or aggregated."""


MIN_BIRTH_YEAR = 1878


class Gender(enum.Enum):
    FEMALE = "F"
    MALE = "M"
    UNREPORTED = "U"

    @classmethod
    def parse(cls, token: str) -> "Gender":
        """Parse one of the documented tokens; anything else is an error."""
        t = token.strip().lower()
        try:
            return _GENDER_TOKENS[t]
        except KeyError:
            raise ValidationError(f"unrecognized gender token {token!r}") from None


_GENDER_TOKENS = {
    "f": Gender.FEMALE,
    "female": Gender.FEMALE,
    "m": Gender.MALE,
    "male": Gender.MALE,
    "u": Gender.UNREPORTED,
    "unreported": Gender.UNREPORTED,
}


class BirthLevel(enum.Enum):
    FULL = "Full"
    YEAR_MONTH = "YearMonth"
    YEAR_ONLY = "YearOnly"
    ABSENT = "Absent"


class ZipLevel(enum.Enum):
    ZIP5 = "Zip5"
    ZIP3 = "Zip3"
    ZIP2 = "Zip2"
    ABSENT = "Absent"


# Rank increases with coarseness; generalization may only move rank upward.
_BIRTH_RANK = {BirthLevel.FULL: 0, BirthLevel.YEAR_MONTH: 1, BirthLevel.YEAR_ONLY: 2, BirthLevel.ABSENT: 3}
_ZIP_RANK = {ZipLevel.ZIP5: 0, ZipLevel.ZIP3: 1, ZipLevel.ZIP2: 2, ZipLevel.ABSENT: 3}
_ZIP_DIGITS = {ZipLevel.ZIP5: 5, ZipLevel.ZIP3: 3, ZipLevel.ZIP2: 2, ZipLevel.ABSENT: 0}


@dataclass(frozen=True)
class BirthDate:
    """A possibly truncated date of birth: year, year-month, or full date."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if not (MIN_BIRTH_YEAR <= self.year <= date.today().year):
            raise ValidationError(f"birth year {self.year} out of range")
        if self.day is not None and self.month is None:
            raise ValidationError("day given without month")
        if self.month is not None:
            if not 1 <= self.month <= 12:
                raise ValidationError(f"month {self.month} out of range")
            if self.day is not None:
                try:
                    date(self.year, self.month, self.day)
                except ValueError:
                    raise ValidationError(
                        f"invalid calendar date {self.year}-{self.month:02d}-{self.day:02d}"
                    ) from None

    @property
    def level(self) -> BirthLevel:
        if self.day is not None:
            return BirthLevel.FULL
        if self.month is not None:
            return BirthLevel.YEAR_MONTH
        return BirthLevel.YEAR_ONLY

    @classmethod
    def parse(cls, text: str) -> "BirthDate":
        """Parse ISO-8601, allowing the truncated forms YYYY and YYYY-MM."""
        m = re.fullmatch(r"(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?", text.strip())
        if not m:
            raise ValidationError(f"unparseable date {text!r}")
        y, mo, d = (int(g) if g else None for g in m.groups())
        return cls(y, mo, d)

    def generalized(self, level: BirthLevel) -> "BirthDate | None":
        if _BIRTH_RANK[level] < _BIRTH_RANK[self.level]:
            raise RefinementRequestedError(f"cannot refine {self.level.value} to {level.value}")
        if level is BirthLevel.ABSENT:
            return None
        if level is BirthLevel.YEAR_ONLY:
            return BirthDate(self.year)
        if level is BirthLevel.YEAR_MONTH:
            return BirthDate(self.year, self.month)
        return self

    def isoformat(self) -> str:
        if self.day is not None:
            return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"
        if self.month is not None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}"


@dataclass(frozen=True)
class ZipCode:
    """A postal code at full (5), truncated (3 or 2 digit), or absent precision."""

    digits: str

    def __post_init__(self):
        if not re.fullmatch(r"\d*", self.digits):
            raise ValidationError(f"zip {self.digits!r} contains non-digits")
        if len(self.digits) not in _ZIP_DIGITS.values():
            raise ValidationError(f"zip {self.digits!r} must have 5, 3, or 2 digits")

    @property
    def level(self) -> ZipLevel:
        return {5: ZipLevel.ZIP5, 3: ZipLevel.ZIP3, 2: ZipLevel.ZIP2, 0: ZipLevel.ABSENT}[len(self.digits)]

    @classmethod
    def absent(cls) -> "ZipCode":
        return cls("")

    def generalized(self, level: ZipLevel) -> "ZipCode":
        if _ZIP_RANK[level] < _ZIP_RANK[self.level]:
            raise RefinementRequestedError(f"cannot refine {self.level.value} to {level.value}")
        return ZipCode(self.digits[: _ZIP_DIGITS[level]])


@dataclass(frozen=True)
class DemographicKey:
    """The quasi-identifier triple: birth date, gender, ZIP.

    Equality is plain field equality, so keys at different generalization
    levels never compare equal. Operations that join keys (indexing, linking,
    uniqueness counting) check level uniformity explicitly and raise
    MixedGeneralizationError instead of silently mismatching.
    """

    birth: BirthDate | None
    gender: Gender
    zip: ZipCode

    @property
    def birth_level(self) -> BirthLevel:
        return self.birth.level if self.birth is not None else BirthLevel.ABSENT

    @property
    def zip_level(self) -> ZipLevel:
        return self.zip.level

    @property
    def level(self) -> tuple[BirthLevel, ZipLevel]:
        return (self.birth_level, self.zip_level)


def generalize(key: DemographicKey, birth_level: BirthLevel, zip_level: ZipLevel) -> DemographicKey:
    """Coarsen a key to the requested levels; refinement is refused.

    Idempotent at fixed levels and order-independent across the two fields.
    """
    if _BIRTH_RANK[birth_level] < _BIRTH_RANK[key.birth_level]:
        raise RefinementRequestedError(
            f"birth level {key.birth_level.value} cannot be refined to {birth_level.value}"
        )
    birth = key.birth.generalized(birth_level) if key.birth is not None else None
    return DemographicKey(birth, key.gender, key.zip.generalized(zip_level))


def require_uniform_level(keys, what: str = "keys") -> tuple[BirthLevel, ZipLevel] | None:
    """Return the single level shared by all keys, or raise MixedGeneralizationError."""
    level = None
    for key in keys:
        if level is None:
            level = key.level
        elif key.level != level:
            raise MixedGeneralizationError(
                f"{what} mix generalization levels: {level[0].value}/{level[1].value} "
                f"vs {key.birth_level.value}/{key.zip_level.value}"
            )
    return level


# Characters NFKD decomposition cannot fold to ASCII on its own.
_ASCII_FOLD = str.maketrans({
    "ß": "ss", "æ": "ae", "œ": "oe", "ø": "o", "đ": "d", "ð": "d",
    "þ": "th", "ł": "l", "ı": "i", "ŋ": "ng",
})


def _fold_text(raw: str) -> str:
    """Lower-case, fold diacritics to ASCII where mapped, collapse whitespace.

    Idempotent. Characters with no ASCII mapping are retained verbatim.
    Digits and path separators become token separators so they can never
    survive into name tokens.
    """
    text = raw.lower().translate(_ASCII_FOLD)
    text = unicodedata.normalize("NFKD", text)
    text = "".join(c for c in text if not unicodedata.combining(c))
    text = re.sub(r"[0-9/\\.,;:!?\"()\[\]{}<>|*&^%$#@+=~`_]", " ", text)
    text = re.sub(r"['-]+", lambda m: m.group(0)[0], text)
    return re.sub(r"\s+", " ", text).strip()


@dataclass(frozen=True)
class PersonName:
    """A normalized given/surname pair; the original spelling rides in `raw`.

    Equality and hashing use the normalized tokens only: two spellings of the
    same normalized name denote the same person.
    """

    given: str
    surname: str
    raw: str = field(compare=False)

    @property
    def canonical(self) -> str:
        return f"{self.given} {self.surname}"


def normalize_name(raw: str) -> PersonName:
    """Normalize a raw name string to a lower-cased given/surname pair.

    The first token becomes the given name and the last the surname; middle
    tokens survive only inside `raw`.
    """
    folded = _fold_text(raw)
    tokens = [t.strip("'-") for t in folded.split()]
    tokens = [t for t in tokens if any(c.isalpha() for c in t)]
    if not tokens:
        raise EmptyNameError(f"no alphabetic token in {raw!r}")
    if len(tokens) < 2:
        raise UnparseableNameError(f"need at least two name tokens in {raw!r}")
    return PersonName(given=tokens[0], surname=tokens[-1], raw=raw)


class NicknameTable:
    """Symmetric set of token equivalences, e.g. (jim, james)."""

    def __init__(self, pairs=()):
        self._pairs = frozenset(frozenset((a.lower(), b.lower())) for a, b in pairs)
        self._by_token: dict[str, set[str]] = {}
        for pair in self._pairs:
            items = tuple(pair)
            if len(items) == 1:
                continue
            a, b = items
            self._by_token.setdefault(a, set()).add(b)
            self._by_token.setdefault(b, set()).add(a)

    def __len__(self):
        return len(self._pairs)

    def lookup(self, a: str, b: str) -> bool:
        return frozenset((a.lower(), b.lower())) in self._pairs

    def alternatives(self, token: str) -> frozenset[str]:
        return frozenset(self._by_token.get(token.lower(), ()))

    @classmethod
    def from_csv(cls, stream) -> "NicknameTable":
        """Load from two-column CSV `a,b`, no header, UTF-8."""
        if isinstance(stream, bytes):
            stream = io.StringIO(stream.decode("utf-8-sig"))
        pairs = []
        for row in csv.reader(stream):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(f"nickname row needs two columns, got {row!r}")
            pairs.append((row[0].strip(), row[1].strip()))
        return cls(pairs)

    @classmethod
    def bundled(cls) -> "NicknameTable":
        text = resources.files("reidkit.data").joinpath("nicknames.csv").read_text("utf-8")
        return cls.from_csv(io.StringIO(text))


class MatchMode(enum.Enum):
    EXACT = "exact"
    NICKNAME_TOLERANT = "nickname"


def names_match(
    a: PersonName,
    b: PersonName,
    mode: MatchMode = MatchMode.EXACT,
    nicknames: NicknameTable | None = None,
    prefix_fallback: bool = True,
) -> bool:
    """Decide whether two normalized names refer to the same person.

    Exact mode requires token equality on given and surname. Tolerant mode
    keeps the surname requirement and additionally accepts a nickname-table
    pair or, when `prefix_fallback` is on, one given name being a prefix
    (length >= 3) of the other.
    """
    if a.surname != b.surname:
        return False
    if a.given == b.given:
        return True
    if mode is MatchMode.EXACT:
        return False
    if nicknames is not None and nicknames.lookup(a.given, b.given):
        return True
    if prefix_fallback:
        short, long = sorted((a.given, b.given), key=len)
        if len(short) >= 3 and long.startswith(short):
            return True
    return False
