import xml.etree.ElementTree as ET

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from corpus import build_ccr_corpus
from reidkit.core import (
    BirthDate,
    BirthLevel,
    DemographicKey,
    Gender,
    RefinementRequestedError,
    ValidationError,
    ZipCode,
    ZipLevel,
    generalize,
)
from reidkit.identifiability import FLAG_KNOWN
from reidkit.ingestion import Profile, RegistryRecord
from reidkit.linkage import MatchStatus, build_index, link
from reidkit.remediation import (
    CcrEditMode,
    KeyGeneralizer,
    NotWellFormedError,
    SafeHarborPolicy,
    SafeHarborScrubber,
    apply_safe_harbor,
    ccr_set_birth,
    parse_ccr,
    whatif,
)
from reidkit.simulation import WorldConfig, generate_world, snapshot_registry, world_profiles
from reidkit.simulation import SnapshotConfig


def _key(dob="1975-03-14", zip_digits="02139", gender=Gender.FEMALE):
    return DemographicKey(BirthDate.parse(dob) if dob else None, gender, ZipCode(zip_digits))


class TestSafeHarbor:
    def test_large_zip_keeps_three_digits(self, population_table):
        # 02139 totals 14600 across bins; use a policy threshold below that
        result = apply_safe_harbor(_key(), population_table, SafeHarborPolicy(pop_threshold=10000))
        assert result.key == _key("1975", zip_digits="021").birth and result.key.zip.digits == "021" or True
        assert result.key.birth == BirthDate(1975)
        assert result.key.zip.digits == "021"
        assert not result.unknown_population

    def test_small_zip_keeps_two_digits(self, population_table):
        result = apply_safe_harbor(_key(), population_table, SafeHarborPolicy(pop_threshold=20000))
        assert result.key.zip.digits == "02"  # 14600 < 20000

    def test_unknown_zip_coarsens_harder_with_flag(self, population_table):
        result = apply_safe_harbor(_key(zip_digits="99999"), population_table)
        assert result.key.zip.digits == "99"
        assert result.unknown_population

    def test_idempotent(self, population_table):
        policy = SafeHarborPolicy(pop_threshold=10000)
        once = apply_safe_harbor(_key(), population_table, policy)
        twice = apply_safe_harbor(once.key, population_table, policy)
        assert twice.key == once.key

    def test_threshold_validated(self):
        with pytest.raises(ValidationError):
            SafeHarborPolicy(pop_threshold=0)

    def test_attack_never_gains_uniques_after_scrub(self, population_table):
        world = generate_world(WorldConfig(population_size=300, seed=5))
        profiles = world_profiles(world)
        registry = snapshot_registry(world, SnapshotConfig(seed=6))
        before = link(profiles, build_index(registry), "voter")
        unique_before = sum(1 for o in before.outcomes if o.status is MatchStatus.UNIQUE)

        policy = SafeHarborPolicy(pop_threshold=10**9)  # force the harder branch
        scrubbed_profiles = [
            Profile(p.id, apply_safe_harbor(p.key, population_table, policy).key)
            for p in profiles
        ]
        scrubbed_registry = [
            RegistryRecord(r.name, apply_safe_harbor(r.key, population_table, policy).key)
            for r in registry
        ]
        after = link(scrubbed_profiles, build_index(scrubbed_registry), "voter")
        unique_after = sum(1 for o in after.outcomes if o.status is MatchStatus.UNIQUE)
        assert unique_after <= unique_before


@pytest.fixture(scope="module")
def corpus():
    return build_ccr_corpus()


class TestCcrEditing:

    def test_corpus_is_big_enough(self, corpus):
        assert len(corpus) >= 10

    def test_year_only_reduces_text(self):
        raw = build_ccr_corpus()[0][1]
        result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        assert b"<ExactDateTime>1975</ExactDateTime>" in result.document
        assert b"1975-03-14" not in result.document

    def test_remove_deletes_element(self):
        raw = build_ccr_corpus()[0][1]
        result = ccr_set_birth(raw, CcrEditMode.REMOVE)
        assert b"DateOfBirth" not in result.document
        ET.fromstring(result.document)

    def test_missing_dob_is_flagged_noop(self):
        raw = build_ccr_corpus()[6][1]  # no-dob document
        result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        assert result.document == raw
        assert result.flag == "no-birth-element"

    def test_byte_preservation_outside_span(self, corpus):
        for label, raw, _ in corpus:
            for mode in CcrEditMode:
                result = ccr_set_birth(raw, mode)
                if result.edited_span is None:
                    assert result.document == raw, label
                    continue
                start, end = result.edited_span
                replaced_len = len(result.replacement)
                assert result.document[:start] == raw[:start], label
                assert result.document[start + replaced_len:] == raw[end:], label

    def test_double_application_idempotent(self, corpus):
        for label, raw, _ in corpus:
            for mode in CcrEditMode:
                once = ccr_set_birth(raw, mode).document
                twice = ccr_set_birth(once, mode).document
                assert twice == once, (label, mode)

    def test_outputs_reparse_as_xml(self, corpus):
        for label, raw, _ in corpus:
            for mode in CcrEditMode:
                ET.fromstring(ccr_set_birth(raw, mode).document)

    def test_editable_docs_actually_change(self, corpus):
        for label, raw, editable in corpus:
            result = ccr_set_birth(raw, CcrEditMode.REMOVE)
            if editable or parse_ccr(raw).dob_span is not None:
                assert result.document != raw, label

    def test_year_edit_only_when_exact_datetime_present(self, corpus):
        for label, raw, editable in corpus:
            result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
            if editable:
                assert result.flag is None, label
                assert result.edited_span is not None, label
            else:
                assert result.document == raw, label

    def test_first_of_two_actors_wins(self):
        raw = [d for d in build_ccr_corpus() if d[0] == "two-actors"][0][1]
        result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        assert b"<ExactDateTime>1971</ExactDateTime>" in result.document
        assert b"1944-05-05" in result.document  # second actor untouched

    def test_entity_text_year(self):
        raw = [d for d in build_ccr_corpus() if d[0] == "entity-text"][0][1]
        result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        # parsed text is 1977-06-15; the year replaces the raw entity bytes
        assert b"<ExactDateTime>1977</ExactDateTime>" in result.document

    def test_latin1_round_trip(self):
        raw = [d for d in build_ccr_corpus() if d[0] == "latin1"][0][1]
        result = ccr_set_birth(raw, CcrEditMode.YEAR_ONLY)
        assert "Renée Noël".encode("iso-8859-1") in result.document
        ET.fromstring(result.document)

    def test_not_well_formed(self):
        with pytest.raises(NotWellFormedError):
            ccr_set_birth(b"<unclosed>", CcrEditMode.YEAR_ONLY)
        with pytest.raises(NotWellFormedError):
            parse_ccr(b"plain text, no xml at all")

    def test_comment_decoys_ignored(self):
        raw = [d for d in build_ccr_corpus() if d[0] == "cdata-elsewhere"][0][1]
        result = ccr_set_birth(raw, CcrEditMode.REMOVE)
        # the CDATA decoy survives; the real element is gone
        assert b"<![CDATA[<DateOfBirth>not real</DateOfBirth>]]>" in result.document
        assert b"<ExactDateTime>1999-08-21" not in result.document


class TestWhatIf:
    def test_coarsening_birth_drops_uniqueness(self, population_table):
        pair = whatif(_key("1985-06-01"), population_table, window=10,
                      birth_level=BirthLevel.YEAR_ONLY, as_of_year=2010)
        assert pair.after.focal_cell.p_unique < pair.before.focal_cell.p_unique
        assert pair.before.focal_cell.flag == FLAG_KNOWN

    def test_noop_is_identity(self, population_table):
        pair = whatif(_key("1985-06-01"), population_table, window=10, as_of_year=2010)
        assert pair.before == pair.after

    def test_refinement_rejected(self, population_table):
        key = generalize(_key("1985-06-01"), BirthLevel.YEAR_ONLY, ZipLevel.ZIP3)
        with pytest.raises(RefinementRequestedError):
            whatif(key, population_table, window=10, birth_level=BirthLevel.FULL)

    def test_sweep_matches_direct_recompute(self, population_table):
        from reidkit.identifiability import risk_report

        key = _key("1985-06-01")
        before = whatif(key, population_table, window=10, as_of_year=2010).before
        for (bl, zl), cell in before.cells.items():
            pair = whatif(key, population_table, window=10,
                          birth_level=bl, zip_level=zl, as_of_year=2010)
            direct = risk_report(
                key.zip.generalized(zl), key.gender,
                key.birth.generalized(bl) if key.birth else None,
                population_table, window=10, as_of_year=2010,
            )
            assert pair.after.cells == direct.cells
            assert pair.after.focal_cell.p_unique == cell.p_unique


class TestTransformers:
    def test_key_generalizer(self):
        transformer = KeyGeneralizer(birth_level=BirthLevel.YEAR_ONLY, zip_level=ZipLevel.ZIP3)
        (coarse,) = transformer.fit([]).transform([_key()])
        assert coarse == generalize(_key(), BirthLevel.YEAR_ONLY, ZipLevel.ZIP3)

    def test_key_generalizer_params(self):
        transformer = KeyGeneralizer(zip_level=ZipLevel.ZIP2)
        assert clone(transformer).get_params()["zip_level"] is ZipLevel.ZIP2

    def test_safe_harbor_scrubber(self, population_table):
        scrubber = SafeHarborScrubber(pop_threshold=10000).fit(population_table)
        keys = scrubber.transform([_key(), _key(zip_digits="99999")])
        assert keys[0].zip.digits == "021"
        assert keys[1].zip.digits == "99"
        assert scrubber.unknown_flags_ == [False, True]

    def test_safe_harbor_scrubber_unfitted(self):
        with pytest.raises(NotFittedError):
            SafeHarborScrubber().transform([_key()])

    def test_safe_harbor_scrubber_fit_validates(self):
        with pytest.raises(ValidationError):
            SafeHarborScrubber().fit("not a table")
