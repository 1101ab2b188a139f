"""Harvest personal names embedded in archive member filenames.

Only the archive's member directory is parsed; member payloads are never
decompressed. Extraction is a pure function of the member filename string, so
findings are reproducible from a listing alone.
"""

from __future__ import annotations

import csv
import io
import os
import re
import zipfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import PersonName, ReidkitError, normalize_name


class CorruptArchiveError(ReidkitError):
    """The container is not a well-formed archive."""


class EncryptedArchiveError(ReidkitError):
    """The container's members are encrypted; directory is not trusted."""


class RootUnreadableError(ReidkitError):
    """The harvest root does not exist or is not a readable directory."""


ARCHIVE_SUFFIXES = (".zip",)

_TOKEN_SPLIT = re.compile(r"[_\-./\\\s]+")


@dataclass(frozen=True)
class ArchiveFinding:
    """One archive member, with the profile-id guess and any extracted name."""

    outer_filename: str
    profile_id_guess: str
    member_filename: str
    extracted: PersonName | None


def load_stoplist(stream) -> frozenset[str]:
    """Load a stop-list: one lower-case token per line, blanks ignored."""
    if isinstance(stream, bytes):
        stream = io.StringIO(stream.decode("utf-8-sig"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    return frozenset(line.strip().lower() for line in stream if line.strip())


def bundled_stoplist() -> frozenset[str]:
    text = resources.files("reidkit.data").joinpath("stoplist.txt").read_text("utf-8")
    return load_stoplist(text)


def _is_name_token(token: str, require_capitalized: bool) -> bool:
    if len(token) < 2:
        return False
    if not all(c.isalpha() or c == "'" for c in token):
        return False
    if not any(c.isalpha() for c in token):
        return False
    if require_capitalized and not token[0].isupper():
        return False
    return True


def extract_name_from_filename(
    member: str,
    stoplist: frozenset[str] | None = None,
    require_capitalized: bool = True,
) -> PersonName | None:
    """Pull a given+surname pair out of a member filename, if one is present.

    Tokens are split on underscores, hyphens, dots, and path separators.
    Digit-bearing tokens, stop-list tokens, and single characters (middle
    initials) are transparent; the first two surviving name-shaped tokens
    become the given name and surname. All-lower-case tokens are rejected as
    machine-generated unless `require_capitalized` is switched off.
    """
    if stoplist is None:
        stoplist = bundled_stoplist()
    survivors = []
    for token in _TOKEN_SPLIT.split(member):
        if not token or any(c.isdigit() for c in token):
            continue
        if token.lower() in stoplist:
            continue
        if not _is_name_token(token, require_capitalized):
            continue
        survivors.append(token)
        if len(survivors) == 2:
            return normalize_name(" ".join(survivors))
    return None


def profile_id_guess(outer_filename: str) -> str:
    """Prefix of the outer filename's basename before the first underscore."""
    base = os.path.basename(outer_filename)
    if "_" not in base:
        return ""
    return base.split("_", 1)[0]


def harvest_archive(
    container,
    outer_filename: str,
    stoplist: frozenset[str] | None = None,
    require_capitalized: bool = True,
) -> list[ArchiveFinding]:
    """List an archive's member directory and extract names from member filenames.

    Member payloads are never read. Raises CorruptArchiveError for malformed
    containers and EncryptedArchiveError when members are flag-encrypted.
    """
    if stoplist is None:
        stoplist = bundled_stoplist()
    if isinstance(container, (bytes, bytearray)):
        container = io.BytesIO(container)
    try:
        with zipfile.ZipFile(container) as zf:
            infos = zf.infolist()
    except zipfile.BadZipFile as exc:
        raise CorruptArchiveError(f"{outer_filename}: {exc}") from exc
    if any(info.flag_bits & 0x1 for info in infos):
        raise EncryptedArchiveError(f"{outer_filename}: encrypted members")
    guess = profile_id_guess(outer_filename)
    findings = []
    for info in infos:
        if info.is_dir():
            continue
        findings.append(
            ArchiveFinding(
                outer_filename=outer_filename,
                profile_id_guess=guess,
                member_filename=info.filename,
                extracted=extract_name_from_filename(info.filename, stoplist, require_capitalized),
            )
        )
    return findings


def harvest_tree(
    root,
    stoplist: frozenset[str] | None = None,
    require_capitalized: bool = True,
) -> tuple[list[ArchiveFinding], list[tuple[str, str]]]:
    """Harvest every archive under a directory tree.

    Traversal is deterministic (lexicographic) and findings are additionally
    sorted by (outer, member) so the result is independent of filesystem
    enumeration order. Non-archive files are skipped silently; a bad archive
    contributes an error annotation instead of aborting the walk.
    """
    root = Path(root)
    if not root.is_dir() or not os.access(root, os.R_OK):
        raise RootUnreadableError(f"{root} is not a readable directory")
    if stoplist is None:
        stoplist = bundled_stoplist()
    findings: list[ArchiveFinding] = []
    errors: list[tuple[str, str]] = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for fname in sorted(filenames):
            if not fname.lower().endswith(ARCHIVE_SUFFIXES):
                continue
            path = Path(dirpath) / fname
            rel = str(path.relative_to(root))
            try:
                findings.extend(
                    harvest_archive(path.read_bytes(), rel, stoplist, require_capitalized)
                )
            except (CorruptArchiveError, EncryptedArchiveError) as exc:
                errors.append((rel, str(exc)))
    findings.sort(key=lambda f: (f.outer_filename, f.member_filename))
    return findings, errors


def write_findings(findings, stream) -> None:
    """Export findings as `outer,profile_id_guess,member,given,surname` CSV."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["outer", "profile_id_guess", "member", "given", "surname"])
    for f in findings:
        writer.writerow([
            f.outer_filename,
            f.profile_id_guess,
            f.member_filename,
            f.extracted.given if f.extracted else "",
            f.extracted.surname if f.extracted else "",
        ])
