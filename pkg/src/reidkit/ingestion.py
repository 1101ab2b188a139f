"""Validating CSV readers and writers for profiles, registries, and census tables.

All readers are pure stream-to-value functions: they consume a UTF-8 text or
byte stream (BOM tolerated), validate every row, and return accepted records
plus per-line diagnostics. A malformed header aborts; a malformed row never
does. For every input data row, exactly one of {accepted record, diagnostic}
is produced, in input order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .core import (
    BirthDate,
    BirthLevel,
    DemographicKey,
    Gender,
    PersonName,
    ReidkitError,
    ValidationError,
    ZipCode,
    ZipLevel,
    normalize_name,
)


class MalformedHeaderError(ReidkitError):
    """The CSV header does not match the required schema."""


class OverlappingBinsError(ReidkitError):
    """Two population bins share (zip, gender) with intersecting age bands."""

    def __init__(self, line_a: int, line_b: int):
        super().__init__(f"age bands overlap between lines {line_a} and {line_b}")
        self.line_a = line_a
        self.line_b = line_b


@dataclass(frozen=True)
class Diagnostic:
    line: int
    severity: str
    message: str


@dataclass(frozen=True)
class Profile:
    """A de-identified record: opaque id, quasi-identifier key, opaque payload."""

    id: str
    key: DemographicKey
    payload: str = ""


@dataclass(frozen=True)
class RegistryRecord:
    """A named population record (voter-list row) at full demographic precision."""

    name: PersonName
    key: DemographicKey


@dataclass(frozen=True)
class PopulationBin:
    zip: ZipCode
    gender: Gender
    age_lo: int
    age_hi: int
    count: int


PROFILE_HEADER = ["id", "dob", "gender", "zip"]
REGISTRY_HEADER = ["given", "surname", "dob", "gender", "zip"]
POPULATION_HEADER = ["zip", "gender", "age_lo", "age_hi", "count"]


def _text_stream(source) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8-sig"))
    if isinstance(source, str):
        return io.StringIO(source.lstrip("﻿"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            return io.StringIO(data.decode("utf-8-sig"))
        return io.StringIO(data.lstrip("﻿"))
    raise TypeError(f"unsupported source {type(source).__name__}")


def _check_header(row, required, allow_extra=False):
    if row is None or row[: len(required)] != required or (not allow_extra and len(row) > len(required)):
        raise MalformedHeaderError(f"expected header {','.join(required)!r}, got {row!r}")


def _parse_key(dob_text: str, gender_text: str, zip_text: str) -> DemographicKey:
    birth = BirthDate.parse(dob_text) if dob_text.strip() else None
    gender = Gender.parse(gender_text) if gender_text.strip() else Gender.UNREPORTED
    zip_code = ZipCode(zip_text.strip())
    return DemographicKey(birth, gender, zip_code)


def read_profiles(source) -> tuple[list[Profile], list[Diagnostic]]:
    """Read `id,dob,gender,zip[,payload...]` rows; extra columns concatenate into the payload."""
    reader = csv.reader(_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeaderError("empty input") from None
    _check_header(header, PROFILE_HEADER, allow_extra=True)

    profiles: list[Profile] = []
    diagnostics: list[Diagnostic] = []
    seen_ids: set[str] = set()
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < 4:
            diagnostics.append(Diagnostic(line, "error", f"expected at least 4 columns, got {len(row)}"))
            continue
        pid = row[0].strip()
        if not pid:
            diagnostics.append(Diagnostic(line, "error", "missing profile id"))
            continue
        if pid in seen_ids:
            diagnostics.append(Diagnostic(line, "error", f"duplicate profile id {pid!r}"))
            continue
        try:
            key = _parse_key(row[1], row[2], row[3])
        except ValidationError as exc:
            diagnostics.append(Diagnostic(line, "error", str(exc)))
            continue
        seen_ids.add(pid)
        payload = " ".join(cell for cell in row[4:] if cell)
        profiles.append(Profile(pid, key, payload))
    return profiles, diagnostics


def read_registry(source) -> tuple[list[RegistryRecord], list[Diagnostic]]:
    """Read `given,surname,dob,gender,zip` rows; keys must be at full precision."""
    reader = csv.reader(_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeaderError("empty input") from None
    _check_header(header, REGISTRY_HEADER)

    records: list[RegistryRecord] = []
    diagnostics: list[Diagnostic] = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            diagnostics.append(Diagnostic(line, "error", f"expected 5 columns, got {len(row)}"))
            continue
        try:
            name = normalize_name(f"{row[0]} {row[1]}")
            key = _parse_key(row[2], row[3], row[4])
        except ValidationError as exc:
            diagnostics.append(Diagnostic(line, "error", str(exc)))
            continue
        if key.birth_level is not BirthLevel.FULL:
            diagnostics.append(Diagnostic(line, "error", "registry requires full dob"))
            continue
        if key.zip_level is not ZipLevel.ZIP5:
            diagnostics.append(Diagnostic(line, "error", "registry requires 5-digit zip"))
            continue
        records.append(RegistryRecord(name, key))
    return records, diagnostics


class PopulationTable:
    """Census-style bins keyed by (zip, gender) with disjoint age bands.

    Lookups on a (zip, gender, age) not covered by any bin return a count of
    zero with `known=False` so downstream risk reports can degrade gracefully
    instead of failing.
    """

    def __init__(self, bins: list[PopulationBin]):
        self._by_zip_gender: dict[tuple[str, Gender], list[PopulationBin]] = {}
        self.bins = list(bins)
        for b in self.bins:
            self._by_zip_gender.setdefault((b.zip.digits, b.gender), []).append(b)

    def lookup(self, zip5: str, gender: Gender, age: int | None) -> tuple[int, bool]:
        """Population count for bins containing `age`, plus a known flag.

        `age=None` lifts the age constraint and sums every band.
        """
        total, known = 0, False
        for b in self._by_zip_gender.get((zip5, gender), ()):
            if age is None or b.age_lo <= age <= b.age_hi:
                total += b.count
                known = True
        return total, known

    def lookup_prefix(self, zip_prefix: str, gender: Gender, age: int | None) -> tuple[int, bool]:
        """Aggregate lookup over every 5-digit zip sharing the prefix."""
        total, known = 0, False
        for (z, g), bins in self._by_zip_gender.items():
            if g is not gender or not z.startswith(zip_prefix):
                continue
            for b in bins:
                if age is None or b.age_lo <= age <= b.age_hi:
                    total += b.count
                    known = True
        return total, known

    def band_width(self, zip5: str, gender: Gender, age: int) -> int | None:
        """Width in years of the band containing `age`, if any."""
        for b in self._by_zip_gender.get((zip5, gender), ()):
            if b.age_lo <= age <= b.age_hi:
                return b.age_hi - b.age_lo + 1
        return None

    def zip_population(self, zip5: str) -> tuple[int, bool]:
        """Total persons recorded for a 5-digit zip across genders and ages."""
        total, known = 0, False
        for (z, _), bins in self._by_zip_gender.items():
            if z == zip5:
                for b in bins:
                    total += b.count
                    known = True
        return total, known

    def total_population(self) -> int:
        return sum(b.count for b in self.bins)


def read_population(source) -> PopulationTable:
    """Read `zip,gender,age_lo,age_hi,count` rows into a PopulationTable.

    Overlapping bins within one (zip, gender) abort with OverlappingBinsError
    naming both offending lines.
    """
    reader = csv.reader(_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeaderError("empty input") from None
    _check_header(header, POPULATION_HEADER)

    bins: list[PopulationBin] = []
    lines: list[int] = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValidationError(f"line {line}: expected 5 columns, got {len(row)}")
        zip_code = ZipCode(row[0].strip())
        if zip_code.level is not ZipLevel.ZIP5:
            raise ValidationError(f"line {line}: population bins require 5-digit zips")
        gender = Gender.parse(row[1])
        try:
            lo, hi, count = int(row[2]), int(row[3]), int(row[4])
        except ValueError:
            raise ValidationError(f"line {line}: age bounds and count must be integers") from None
        if lo < 0 or hi < lo:
            raise ValidationError(f"line {line}: bad age band [{lo},{hi}]")
        if count < 0:
            raise ValidationError(f"line {line}: negative count")
        new = PopulationBin(zip_code, gender, lo, hi, count)
        for old, old_line in zip(bins, lines):
            if (
                old.zip == new.zip
                and old.gender == new.gender
                and old.age_lo <= new.age_hi
                and new.age_lo <= old.age_hi
            ):
                raise OverlappingBinsError(old_line, line)
        bins.append(new)
        lines.append(line)
    return PopulationTable(bins)


def _gender_token(gender: Gender) -> str:
    return gender.value


def write_profiles(profiles, stream) -> None:
    """Write profiles in canonical column order; read(write(x)) is stable."""
    with_payload = any(p.payload for p in profiles)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(PROFILE_HEADER + (["payload"] if with_payload else []))
    for p in profiles:
        row = [
            p.id,
            p.key.birth.isoformat() if p.key.birth else "",
            _gender_token(p.key.gender),
            p.key.zip.digits,
        ]
        if with_payload:
            row.append(p.payload)
        writer.writerow(row)


def write_registry(records, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REGISTRY_HEADER)
    for r in records:
        writer.writerow([
            r.name.given,
            r.name.surname,
            r.key.birth.isoformat() if r.key.birth else "",
            _gender_token(r.key.gender),
            r.key.zip.digits,
        ])


def write_population(table: PopulationTable, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(POPULATION_HEADER)
    for b in table.bins:
        writer.writerow([b.zip.digits, _gender_token(b.gender), b.age_lo, b.age_hi, b.count])


def write_diagnostics(diagnostics, stream) -> None:
    """Emit diagnostics as `line,severity,message` CSV."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["line", "severity", "message"])
    for d in diagnostics:
        writer.writerow([d.line, d.severity, d.message])
