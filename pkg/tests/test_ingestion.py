import io

import pytest

from reidkit.core import BirthLevel, Gender, ValidationError, ZipLevel
from reidkit.ingestion import (
    MalformedHeaderError,
    OverlappingBinsError,
    read_population,
    read_profiles,
    read_registry,
    write_diagnostics,
    write_population,
    write_profiles,
    write_registry,
)


class TestReadProfiles:
    def test_full_key(self):
        profiles, diags = read_profiles(b"id,dob,gender,zip\np1,1975-03-14,F,02139\n")
        assert not diags
        (p,) = profiles
        assert p.id == "p1"
        assert p.key.level == (BirthLevel.FULL, ZipLevel.ZIP5)

    def test_truncated_dob(self):
        profiles, diags = read_profiles(b"id,dob,gender,zip\np2,1975,F,02139\n")
        assert not diags
        assert profiles[0].key.birth_level is BirthLevel.YEAR_ONLY

    def test_invalid_calendar_date_is_line_diagnostic(self):
        profiles, diags = read_profiles(b"id,dob,gender,zip\np3,1975-02-30,F,02139\n")
        assert not profiles
        (d,) = diags
        assert d.line == 2 and "invalid calendar date" in d.message

    def test_missing_fields_are_absent_levels(self):
        profiles, _ = read_profiles(b"id,dob,gender,zip\np1,,,\n")
        key = profiles[0].key
        assert key.level == (BirthLevel.ABSENT, ZipLevel.ABSENT)
        assert key.gender is Gender.UNREPORTED

    def test_payload_columns_concatenate(self):
        profiles, _ = read_profiles(b"id,dob,gender,zip,payload,more\np1,1975,F,02139,abc,def\n")
        assert profiles[0].payload == "abc def"

    def test_malformed_header_aborts(self):
        with pytest.raises(MalformedHeaderError):
            read_profiles(b"id,birth,gender,zip\np1,1975,F,02139\n")

    def test_duplicate_id_rejected(self):
        profiles, diags = read_profiles(
            b"id,dob,gender,zip\np1,1975,F,02139\np1,1980,M,02138\n"
        )
        assert len(profiles) == 1
        assert diags[0].line == 3 and "duplicate" in diags[0].message

    def test_bom_tolerated(self):
        profiles, _ = read_profiles("﻿id,dob,gender,zip\np1,1975,F,02139\n".encode())
        assert profiles[0].id == "p1"

    def test_accounting_identity(self):
        data = (
            b"id,dob,gender,zip\n"
            b"p1,1975-03-14,F,02139\n"
            b"p2,bad-date,F,02139\n"
            b"p3,1975,X,02139\n"
            b"p4,1975,M,021399\n"
            b"p5,,U,\n"
        )
        profiles, diags = read_profiles(data)
        assert len(profiles) + len(diags) == 5
        assert [d.line for d in diags] == [3, 4, 5]


class TestReadRegistry:
    def test_basic(self):
        records, diags = read_registry(b"given,surname,dob,gender,zip\nElaine,Smith,1975-03-14,F,02139\n")
        assert not diags
        (r,) = records
        assert r.name.canonical == "elaine smith"
        assert r.key.level == (BirthLevel.FULL, ZipLevel.ZIP5)

    def test_partial_dob_rejected(self):
        records, diags = read_registry(b"given,surname,dob,gender,zip\nElaine,Smith,1975,F,02139\n")
        assert not records
        assert "registry requires full dob" in diags[0].message

    def test_truncated_zip_rejected(self):
        _, diags = read_registry(b"given,surname,dob,gender,zip\nElaine,Smith,1975-03-14,F,021\n")
        assert "registry requires 5-digit zip" in diags[0].message

    def test_empty_file_with_header(self):
        records, diags = read_registry(b"given,surname,dob,gender,zip\n")
        assert records == [] and diags == []

    def test_names_are_normalized(self):
        records, _ = read_registry(b"given,surname,dob,gender,zip\n JOSE , NUNEZ ,1975-03-14,M,02139\n")
        assert records[0].name.canonical == "jose nunez"


class TestReadPopulation:
    def test_single_bin_lookup(self):
        table = read_population(b"zip,gender,age_lo,age_hi,count\n02139,F,20,29,4000\n")
        assert table.lookup("02139", Gender.FEMALE, 25) == (4000, True)

    def test_overlap_names_both_lines(self):
        data = (
            b"zip,gender,age_lo,age_hi,count\n"
            b"02139,F,20,29,4000\n"
            b"02139,F,25,34,1000\n"
        )
        with pytest.raises(OverlappingBinsError) as exc:
            read_population(data)
        assert (exc.value.line_a, exc.value.line_b) == (2, 3)

    def test_same_band_other_gender_is_fine(self):
        table = read_population(
            b"zip,gender,age_lo,age_hi,count\n02139,F,20,29,4000\n02139,M,20,29,3800\n"
        )
        assert table.lookup("02139", Gender.MALE, 22) == (3800, True)

    def test_absent_zip_flagged_unknown(self):
        table = read_population(b"zip,gender,age_lo,age_hi,count\n02139,F,20,29,4000\n")
        assert table.lookup("99999", Gender.FEMALE, 25) == (0, False)

    def test_prefix_aggregation(self, population_table):
        n5, _ = population_table.lookup("02139", Gender.FEMALE, 25)
        n3, _ = population_table.lookup_prefix("021", Gender.FEMALE, 25)
        n2, _ = population_table.lookup_prefix("02", Gender.FEMALE, 25)
        assert n5 == 4000
        assert n3 == 4000 + 2500
        assert n2 == 4000 + 2500 + 900

    def test_age_none_sums_all_bands(self, population_table):
        total, known = population_table.lookup("02139", Gender.FEMALE, None)
        assert known and total == 4000 + 3500

    def test_zip_population_sums_everything(self, population_table):
        assert population_table.zip_population("02139") == (4000 + 3500 + 3800 + 3300, True)
        assert population_table.zip_population("99999") == (0, False)

    def test_band_width(self, population_table):
        assert population_table.band_width("02139", Gender.FEMALE, 25) == 10
        assert population_table.band_width("02139", Gender.FEMALE, 55) is None

    def test_bad_rows_abort(self):
        with pytest.raises(ValidationError):
            read_population(b"zip,gender,age_lo,age_hi,count\n02139,F,29,20,100\n")
        with pytest.raises(ValidationError):
            read_population(b"zip,gender,age_lo,age_hi,count\n02139,F,20,29,-1\n")
        with pytest.raises(ValidationError):
            read_population(b"zip,gender,age_lo,age_hi,count\n021,F,20,29,100\n")


class TestRoundTrip:
    def test_profiles(self):
        original = (
            b"id,dob,gender,zip,payload\n"
            b"p1,1975-03-14,F,02139,hello world\n"
            b"p2,1980,M,021,\n"
            b"p3,,U,,\n"
        )
        profiles, _ = read_profiles(original)
        out = io.StringIO()
        write_profiles(profiles, out)
        reread, diags = read_profiles(out.getvalue())
        assert not diags and reread == profiles
        out2 = io.StringIO()
        write_profiles(reread, out2)
        assert out2.getvalue() == out.getvalue()

    def test_registry(self):
        records, _ = read_registry(
            b"given,surname,dob,gender,zip\nElaine,Smith,1975-03-14,F,02139\n"
        )
        out = io.StringIO()
        write_registry(records, out)
        reread, _ = read_registry(out.getvalue())
        assert reread == records

    def test_population(self, population_csv):
        table = read_population(population_csv)
        out = io.StringIO()
        write_population(table, out)
        assert out.getvalue() == population_csv
        reread = read_population(out.getvalue())
        assert reread.bins == table.bins

    def test_diagnostics_csv(self):
        _, diags = read_profiles(b"id,dob,gender,zip\np1,bad,F,02139\n")
        out = io.StringIO()
        write_diagnostics(diags, out)
        lines = out.getvalue().splitlines()
        assert lines[0] == "line,severity,message"
        assert lines[1].startswith("2,error,")
