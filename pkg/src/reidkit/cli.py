"""Command-line interface: link, harvest, estimate, scrub, simulate, score, serve.

Every command is a thin binding over the library; results go to stdout (or
--out files), diagnostics to stderr, and the exit code says what went wrong:
0 success, 1 validation failure, 2 I/O failure, 3 internal error.
"""

from __future__ import annotations

import csv
import enum
import json
import statistics
import sys
from pathlib import Path

import click

from . import __version__
from .core import (
    BirthDate,
    BirthLevel,
    Gender,
    MatchMode,
    NicknameTable,
    ReidkitError,
    ZipCode,
    ZipLevel,
    normalize_name,
)
from .harvester import RootUnreadableError, harvest_tree, load_stoplist, write_findings
from .identifiability import canonical_json, risk_report
from .ingestion import (
    read_population,
    read_profiles,
    read_registry,
    write_diagnostics,
)
from .linkage import (
    MatchStatus,
    NameCandidate,
    build_index,
    link,
    score,
    write_outcomes,
    write_score_report,
)
from .remediation import CcrEditMode, ccr_set_birth
from .simulation import SnapshotConfig, WorldConfig, generate_world, run_experiment


class ExitStatus(enum.IntEnum):
    OK = 0
    VALIDATION = 1
    IO = 2
    INTERNAL = 3


@click.group()
@click.version_option(__version__)
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file of per-command defaults, keyed by command then flag name; "
                   "explicit flags win.")
@click.pass_context
def cli(ctx, config):
    """Demographic re-identification toolkit: attack simulation and defenses."""
    if config:
        with open(config, encoding="utf-8") as fh:
            ctx.default_map = json.load(fh)


def _echo_diagnostics(diagnostics, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            write_diagnostics(diagnostics, fh)
    else:
        for d in diagnostics:
            click.echo(f"line {d.line}: {d.severity}: {d.message}", err=True)


@cli.command(name="link")
@click.argument("profiles_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("registry_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--source", default="registry", show_default=True, help="Strategy label for candidates.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Match outcome CSV path.")
@click.option("--diagnostics", "diagnostics", type=click.Path(dir_okay=False), default=None,
              help="Write line diagnostics as CSV instead of stderr.")
def cmd_link(profiles_csv, registry_csv, source, out, diagnostics):
    """Link profile demographics against a registry and write match outcomes."""
    with open(profiles_csv, "rb") as fh:
        profiles, pdiag = read_profiles(fh)
    with open(registry_csv, "rb") as fh:
        registry, rdiag = read_registry(fh)
    result = link(profiles, build_index(registry), source)
    with open(out, "w", newline="") as fh:
        write_outcomes(result.outcomes, fh, source)
    _echo_diagnostics(pdiag + rdiag + result.diagnostics, diagnostics)
    counts = {status: 0 for status in MatchStatus}
    for outcome in result.outcomes:
        counts[outcome.status] += 1
    click.echo(
        f"unique={counts[MatchStatus.UNIQUE]} ambiguous={counts[MatchStatus.AMBIGUOUS]} "
        f"none={counts[MatchStatus.NONE]} skipped={len(result.diagnostics)}"
    )


@cli.command(name="harvest")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Findings CSV path.")
@click.option("--stoplist", "stoplist", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Stop-list file, one lower-case token per line.")
@click.option("--any-case", is_flag=True, help="Also extract from all-lower-case member names.")
def cmd_harvest(root, out, stoplist, any_case):
    """Harvest names embedded in archive member filenames under ROOT."""
    stop_tokens = None
    if stoplist:
        with open(stoplist, "rb") as fh:
            stop_tokens = load_stoplist(fh.read())
    findings, errors = harvest_tree(root, stop_tokens, require_capitalized=not any_case)
    with open(out, "w", newline="") as fh:
        write_findings(findings, fh)
    for path, message in errors:
        click.echo(f"{path}: {message}", err=True)
    named = sum(1 for f in findings if f.extracted)
    click.echo(f"members={len(findings)} named={named} errors={len(errors)}")


_LEVEL_ORDER_B = [BirthLevel.FULL, BirthLevel.YEAR_MONTH, BirthLevel.YEAR_ONLY, BirthLevel.ABSENT]
_LEVEL_ORDER_Z = [ZipLevel.ZIP5, ZipLevel.ZIP3, ZipLevel.ZIP2, ZipLevel.ABSENT]


@cli.command(name="estimate")
@click.option("--zip", "zip", required=True, help="5-digit ZIP code.")
@click.option("--gender", required=True, help="f/female, m/male, or u/unreported.")
@click.option("--dob", required=True, help="ISO date, possibly truncated (1975, 1975-03).")
@click.option("--population", "population", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Census bin CSV.")
@click.option("--window", type=int, default=None, help="Age window in years.")
@click.option("--as-of", "as_of", type=int, default=None, help="Reference year for ages.")
@click.option("--json", "as_json", is_flag=True, help="Emit the canonical JSON grid.")
def cmd_estimate(zip, gender, dob, population, window, as_of, as_json):
    """How identifying is a date-of-birth/gender/ZIP combination?"""
    with open(population, "rb") as fh:
        table = read_population(fh)
    report = risk_report(
        ZipCode(zip.strip()),
        Gender.parse(gender),
        BirthDate.parse(dob),
        table,
        window=window,
        as_of_year=as_of,
    )
    if as_json:
        click.echo(canonical_json(report.to_dict()))
        return
    zl_present = [z for z in _LEVEL_ORDER_Z if any(k[1] is z for k in report.cells)]
    bl_present = [b for b in _LEVEL_ORDER_B if any(k[0] is b for k in report.cells)]
    header = ["birth\\zip"] + [z.value for z in zl_present]
    rows = [header]
    for bl in bl_present:
        row = [bl.value]
        for zl in zl_present:
            cell = report.cells[(bl, zl)]
            mark = "" if cell.flag == "known" else " ?"
            row.append(f"p={cell.p_unique:.4f} N={cell.population}{mark}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    for r in rows:
        click.echo("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip())
    click.echo(f"window={report.window} as_of={report.as_of_year}")


@cli.command(name="scrub")
@click.argument("ccr_xml", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["year", "remove"]), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Scrubbed XML path.")
def cmd_scrub(ccr_xml, mode, out):
    """Rewrite or remove the date of birth in a CCR document."""
    raw = Path(ccr_xml).read_bytes()
    result = ccr_set_birth(raw, CcrEditMode(mode))
    Path(out).write_bytes(result.document)
    if result.edited_span:
        click.echo(f"edited bytes {result.edited_span[0]}..{result.edited_span[1]}")
    else:
        click.echo(f"no edit: {result.flag}")


@cli.command(name="simulate")
@click.option("--pop", "pop", type=int, required=True, help="World population size.")
@click.option("--f", "f", type=float, default=1.0, show_default=True)
@click.option("--m", "m", type=float, default=0.0, show_default=True)
@click.option("--nick", "nick", type=float, default=0.0, show_default=True)
@click.option("--seeds", type=int, default=1, show_default=True, help="Number of seeds to run.")
@click.option("--seed-start", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "nickname"]), default="exact", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Sweep CSV path.")
def cmd_simulate(pop, f, m, nick, seeds, seed_start, mode, out):
    """Run the synthetic linkage experiment across seeds and write a sweep CSV."""
    if seeds < 1:
        raise click.BadParameter("--seeds must be >= 1")
    match_mode = MatchMode.EXACT if mode == "exact" else MatchMode.NICKNAME_TOLERANT
    nicknames = NicknameTable.bundled()
    rows = []
    for k in range(seeds):
        seed = seed_start + k
        world = generate_world(WorldConfig(population_size=pop, seed=seed))
        snapshot = SnapshotConfig(
            sampling_fraction=f,
            mobility_rate=m,
            nickname_rate=nick,
            seed=seed + 7919,
        )
        result = run_experiment(world, {"voter": snapshot}, match_mode, nicknames)
        rows.append({
            "seed": seed,
            "f": f,
            "m": m,
            "nickname_rate": nick,
            "population": pop,
            "unique_rate": result.unique_rate,
            "precision": "" if result.precision is None else result.precision,
            "recall": result.recall,
            "correct_pct": "" if result.score.combined.correct_pct is None
                           else result.score.combined.correct_pct,
        })
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    precisions = [r["precision"] for r in rows if r["precision"] != ""]
    recalls = [r["recall"] for r in rows]
    for label, values in (("precision", precisions), ("recall", recalls)):
        if values:
            mean = statistics.fmean(values)
            sd = statistics.pstdev(values) if len(values) > 1 else 0.0
            click.echo(f"{label} mean={mean:.4f} sd={sd:.4f}")
        else:
            click.echo(f"{label} undefined (no named profiles)")


def _read_candidates_csv(path) -> list[NameCandidate]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        required = {"profile_id", "given", "surname", "source"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ReidkitError(f"candidates CSV needs columns {sorted(required)}")
        return [
            NameCandidate(
                row["profile_id"],
                normalize_name(f"{row['given']} {row['surname']}"),
                row["source"],
            )
            for row in reader
        ]


def _read_truth_csv(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        required = {"profile_id", "given", "surname"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ReidkitError(f"truth CSV needs columns {sorted(required)}")
        return {
            row["profile_id"]: normalize_name(f"{row['given']} {row['surname']}")
            for row in reader
        }


@cli.command(name="score")
@click.argument("candidates_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["exact", "nickname"]), default="exact", show_default=True)
@click.option("--nicknames", "nicknames", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Nickname pair CSV; defaults to the bundled table.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report CSV path (default stdout).")
def cmd_score(candidates_csv, truth_csv, mode, nicknames, out):
    """Score candidate names against ground truth, per strategy and combined."""
    candidates = _read_candidates_csv(candidates_csv)
    truth = _read_truth_csv(truth_csv)
    if nicknames:
        with open(nicknames, "rb") as fh:
            nicknames = NicknameTable.from_csv(fh.read())
    else:
        nicknames = NicknameTable.bundled()
    match_mode = MatchMode.EXACT if mode == "exact" else MatchMode.NICKNAME_TOLERANT
    report = score(candidates, truth, match_mode, nicknames)
    if out:
        with open(out, "w", newline="") as fh:
            write_score_report(report, fh)
    else:
        write_score_report(report, sys.stdout)


@cli.command(name="serve")
@click.option("--population", "population", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Census bin CSV to load at startup.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--origin", "origins", multiple=True, help="Allowed CORS origin (repeatable).")
@click.option("--ui", "ui", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve this directory of static UI assets at /.")
def cmd_serve(population, host, port, origins, ui):
    """Run the risk-estimation HTTP service."""
    import uvicorn

    from .service import create_app

    table = None
    if population:
        with open(population, "rb") as fh:
            table = read_population(fh)
    app = create_app(table, cors_origins=list(origins) or None, static_dir=ui)
    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return int(ExitStatus.OK)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return int(ExitStatus.VALIDATION)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return int(ExitStatus.VALIDATION)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return int(ExitStatus.VALIDATION)
    except RootUnreadableError as exc:
        click.echo(str(exc), err=True)
        return int(ExitStatus.IO)
    except ReidkitError as exc:
        click.echo(str(exc), err=True)
        return int(ExitStatus.VALIDATION)
    except OSError as exc:
        click.echo(str(exc), err=True)
        return int(ExitStatus.IO)
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        return int(ExitStatus.INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
