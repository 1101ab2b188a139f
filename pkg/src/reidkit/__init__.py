"""reidkit: demographic re-identification attack simulation and defenses.

The attack side links de-identified profiles to named registries through the
(date of birth, gender, ZIP) quasi-identifier and harvests names embedded in
archive member filenames. The defense side estimates how unique a demographic
combination is within a population, generalizes keys under a population-
threshold policy, and edits the date of birth inside CCR documents without
touching any other byte.
"""

__version__ = "0.1.0"

from .core import (
    BirthDate,
    BirthLevel,
    DemographicKey,
    Gender,
    MatchMode,
    NicknameTable,
    PersonName,
    ReidkitError,
    ValidationError,
    ZipCode,
    ZipLevel,
    generalize,
    names_match,
    normalize_name,
)
from .harvester import (
    ArchiveFinding,
    extract_name_from_filename,
    harvest_archive,
    harvest_tree,
)
from .identifiability import (
    RiskReport,
    canonical_json,
    date_space,
    empirical_uniqueness,
    p_unique,
    risk_report,
)
from .ingestion import (
    PopulationTable,
    Profile,
    RegistryRecord,
    read_population,
    read_profiles,
    read_registry,
)
from .linkage import (
    Linker,
    MatchOutcome,
    MatchStatus,
    NameCandidate,
    OverlapMatrix,
    ScoreReport,
    build_index,
    combine,
    link,
    overlap_matrix,
    score,
)
from .remediation import (
    CcrEditMode,
    KeyGeneralizer,
    SafeHarborPolicy,
    SafeHarborScrubber,
    apply_safe_harbor,
    ccr_set_birth,
    whatif,
)
from .simulation import (
    SnapshotConfig,
    World,
    WorldConfig,
    generate_world,
    run_experiment,
    snapshot_registry,
)

__all__ = [name for name in dir() if not name.startswith("_")]
