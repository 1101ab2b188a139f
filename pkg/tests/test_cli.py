import csv
import io
import json

import pytest

from corpus import build_archive_corpus, build_ccr_corpus
from reidkit.cli import ExitStatus, main
from reidkit.core import BirthDate, Gender, MatchMode, NicknameTable, ZipCode, normalize_name
from reidkit.harvester import harvest_tree, write_findings
from reidkit.identifiability import canonical_json, risk_report
from reidkit.ingestion import read_population, read_profiles, read_registry
from reidkit.linkage import build_index, link, score, write_outcomes, write_score_report
from reidkit.remediation import CcrEditMode, ccr_set_birth

PROFILES = """id,dob,gender,zip
p1,1975-03-14,F,02139
p2,1980,M,02139
p3,1962-07-01,M,02138
"""

REGISTRY = """given,surname,dob,gender,zip
Elaine,Smith,1975-03-14,F,02139
Walter,Stone,1962-07-01,M,02138
Hank,Stone,1962-07-01,M,02138
"""


@pytest.fixture
def data_dir(tmp_path, population_csv):
    (tmp_path / "profiles.csv").write_text(PROFILES)
    (tmp_path / "registry.csv").write_text(REGISTRY)
    (tmp_path / "pop.csv").write_text(population_csv)
    return tmp_path


class TestLinkCommand:
    def test_matches_library(self, data_dir, capsys):
        out = data_dir / "matches.csv"
        code = main(["link", str(data_dir / "profiles.csv"), str(data_dir / "registry.csv"),
                     "--source", "voter", "--out", str(out)])
        assert code == ExitStatus.OK
        profiles, _ = read_profiles(PROFILES)
        registry, _ = read_registry(REGISTRY)
        expected = io.StringIO()
        write_outcomes(link(profiles, build_index(registry), "voter").outcomes, expected, "voter")
        assert out.read_text() == expected.getvalue()
        captured = capsys.readouterr()
        assert "unique=1 ambiguous=1 none=0 skipped=1" in captured.out
        assert "key incomplete" in captured.err
        assert "key incomplete" not in captured.out

    def test_empty_registry_all_none(self, data_dir, capsys):
        empty = data_dir / "empty.csv"
        empty.write_text("given,surname,dob,gender,zip\n")
        out = data_dir / "matches.csv"
        code = main(["link", str(data_dir / "profiles.csv"), str(empty), "--out", str(out)])
        assert code == ExitStatus.OK
        assert "unique=0" in capsys.readouterr().out
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert all(r["status"] == "none" for r in rows)

    def test_schema_violation_exits_1(self, data_dir, capsys):
        bad = data_dir / "bad.csv"
        bad.write_text("wrong,header\n")
        code = main(["link", str(bad), str(data_dir / "registry.csv"),
                     "--out", str(data_dir / "m.csv")])
        assert code == ExitStatus.VALIDATION
        assert "header" in capsys.readouterr().err

    def test_unwritable_out_exits_2(self, data_dir, capsys):
        code = main(["link", str(data_dir / "profiles.csv"), str(data_dir / "registry.csv"),
                     "--out", str(data_dir / "nodir" / "m.csv")])
        assert code == ExitStatus.IO

    def test_diagnostics_csv_option(self, data_dir):
        diag = data_dir / "diag.csv"
        main(["link", str(data_dir / "profiles.csv"), str(data_dir / "registry.csv"),
              "--out", str(data_dir / "m.csv"), "--diagnostics", str(diag)])
        lines = diag.read_text().splitlines()
        assert lines[0] == "line,severity,message"


class TestEstimateCommand:
    def test_json_matches_library(self, data_dir, capsys):
        code = main(["estimate", "--zip", "02139", "--gender", "f", "--dob", "1985-06-01",
                     "--population", str(data_dir / "pop.csv"), "--window", "10",
                     "--as-of", "2010", "--json"])
        assert code == ExitStatus.OK
        table = read_population((data_dir / "pop.csv").read_bytes())
        expected = canonical_json(
            risk_report(ZipCode("02139"), Gender.FEMALE, BirthDate.parse("1985-06-01"),
                        table, 10, 2010).to_dict()
        )
        assert capsys.readouterr().out.strip() == expected

    def test_unknown_zip_flagged_exit_zero(self, data_dir, capsys):
        code = main(["estimate", "--zip", "99999", "--gender", "f", "--dob", "1985-06-01",
                     "--population", str(data_dir / "pop.csv"), "--as-of", "2010"])
        assert code == ExitStatus.OK
        assert "?" in capsys.readouterr().out

    def test_missing_dob_usage_error(self, data_dir, capsys):
        code = main(["estimate", "--zip", "02139", "--gender", "f",
                     "--population", str(data_dir / "pop.csv")])
        assert code == ExitStatus.VALIDATION
        assert "--dob" in capsys.readouterr().err

    def test_invalid_demographics_exit_1(self, data_dir, capsys):
        code = main(["estimate", "--zip", "02139", "--gender", "f", "--dob", "1975-02-30",
                     "--population", str(data_dir / "pop.csv")])
        assert code == ExitStatus.VALIDATION
        assert "invalid calendar date" in capsys.readouterr().err

    def test_grid_printed(self, data_dir, capsys):
        code = main(["estimate", "--zip", "02139", "--gender", "f", "--dob", "1985-06-01",
                     "--population", str(data_dir / "pop.csv"), "--window", "10", "--as-of", "2010"])
        assert code == ExitStatus.OK
        out = capsys.readouterr().out
        assert "Zip5" in out and "YearOnly" in out and "p=0.3346" in out


class TestScrubCommand:
    def test_year_mode_matches_library(self, tmp_path, capsys):
        label, raw, _ = build_ccr_corpus()[0]
        src = tmp_path / "ccr.xml"
        src.write_bytes(raw)
        out = tmp_path / "scrubbed.xml"
        code = main(["scrub", str(src), "--mode", "year", "--out", str(out)])
        assert code == ExitStatus.OK
        expected = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        assert out.read_bytes() == expected.document
        start, end = expected.edited_span
        assert f"edited bytes {start}..{end}" in capsys.readouterr().out

    def test_remove_mode(self, tmp_path):
        _, raw, _ = build_ccr_corpus()[1]
        src = tmp_path / "ccr.xml"
        src.write_bytes(raw)
        out = tmp_path / "scrubbed.xml"
        main(["scrub", str(src), "--mode", "remove", "--out", str(out)])
        assert b"DateOfBirth" not in out.read_bytes()

    def test_no_dob_reports_flag(self, tmp_path, capsys):
        raw = [d for d in build_ccr_corpus() if d[0] == "no-dob"][0][1]
        src = tmp_path / "ccr.xml"
        src.write_bytes(raw)
        main(["scrub", str(src), "--mode", "year", "--out", str(tmp_path / "o.xml")])
        assert "no edit: no-birth-element" in capsys.readouterr().out

    def test_not_well_formed_exit_1(self, tmp_path, capsys):
        src = tmp_path / "bad.xml"
        src.write_bytes(b"<unclosed>")
        code = main(["scrub", str(src), "--mode", "year", "--out", str(tmp_path / "o.xml")])
        assert code == ExitStatus.VALIDATION


class TestSimulateCommand:
    def test_perfect_snapshot_all_precision_one(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(["simulate", "--pop", "200", "--f", "1", "--m", "0", "--nick", "0",
                     "--seeds", "3", "--out", str(out)])
        assert code == ExitStatus.OK
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert len(rows) == 3
        assert all(float(r["precision"]) == 1.0 for r in rows)
        assert "precision mean=1.0000" in capsys.readouterr().out

    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "--pop", "150", "--f", "0.72", "--seeds", "2", "--seed-start", "5"]
        main(args + ["--out", str(a)])
        main(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_rate_out_of_range_exit_1(self, tmp_path, capsys):
        code = main(["simulate", "--pop", "100", "--f", "1.5", "--seeds", "1",
                     "--out", str(tmp_path / "s.csv")])
        assert code == ExitStatus.VALIDATION

    def test_kept_fraction_statistics(self, tmp_path):
        out = tmp_path / "sweep.csv"
        main(["simulate", "--pop", "500", "--f", "0.72", "--seeds", "10", "--out", str(out)])
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        # recall under a pure f-sample tracks f times the unique fraction
        recalls = [float(r["recall"]) for r in rows]
        assert 0.4 < sum(recalls) / len(recalls) < 0.9


class TestHarvestCommand:
    def test_matches_library(self, tmp_path, capsys):
        mirror = tmp_path / "mirror"
        mirror.mkdir()
        build_archive_corpus(mirror, count=5, seed=3)
        out = tmp_path / "findings.csv"
        code = main(["harvest", str(mirror), "--out", str(out)])
        assert code == ExitStatus.OK
        findings, _ = harvest_tree(mirror)
        expected = io.StringIO()
        write_findings(findings, expected)
        assert out.read_text() == expected.getvalue()
        assert "members=" in capsys.readouterr().out


class TestScoreCommand:
    def test_nickname_scoring(self, tmp_path, capsys):
        cands = tmp_path / "cands.csv"
        truth = tmp_path / "truth.csv"
        cands.write_text("profile_id,given,surname,source\np1,Jim,Smith,embedded\n")
        truth.write_text("profile_id,given,surname\np1,James,Smith\n")
        code = main(["score", str(cands), str(truth), "--mode", "nickname"])
        assert code == ExitStatus.OK
        out = capsys.readouterr().out
        assert "embedded,0,1,100%" in out

    def test_matches_library(self, tmp_path):
        cands = tmp_path / "cands.csv"
        truth = tmp_path / "truth.csv"
        cands.write_text(
            "profile_id,given,surname,source\n"
            "p1,Jim,Smith,embedded\np2,Mary,Jones,embedded\np1,James,Smith,voter\n"
        )
        truth.write_text("profile_id,given,surname\np1,James,Smith\np2,Carol,Jones\n")
        out = tmp_path / "report.csv"
        main(["score", str(cands), str(truth), "--mode", "exact", "--out", str(out)])
        truth_map = {"p1": normalize_name("James Smith"), "p2": normalize_name("Carol Jones")}
        from reidkit.linkage import NameCandidate

        candidates = [
            NameCandidate("p1", normalize_name("Jim Smith"), "embedded"),
            NameCandidate("p2", normalize_name("Mary Jones"), "embedded"),
            NameCandidate("p1", normalize_name("James Smith"), "voter"),
        ]
        expected = io.StringIO()
        write_score_report(score(candidates, truth_map, MatchMode.EXACT, NicknameTable.bundled()), expected)
        assert out.read_text() == expected.getvalue()


def test_version_flag(capsys):
    assert main(["--version"]) == ExitStatus.OK


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        out = tmp_path / "sweep.csv"
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "simulate": {"pop": 80, "seeds": 2, "f": 0.5, "out": str(out)},
        }))
        code = main(["--config", str(config), "simulate"])
        assert code == ExitStatus.OK
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert len(rows) == 2
        assert rows[0]["population"] == "80" and rows[0]["f"] == "0.5"

    def test_flags_win_over_config(self, tmp_path):
        out = tmp_path / "sweep.csv"
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "simulate": {"pop": 80, "seeds": 1, "out": str(tmp_path / "ignored.csv")},
        }))
        code = main(["--config", str(config), "simulate", "--pop", "40", "--out", str(out)])
        assert code == ExitStatus.OK
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert rows[0]["population"] == "40"
        assert not (tmp_path / "ignored.csv").exists()
