import io

import pytest

from reidkit.core import NicknameTable
from reidkit.ingestion import read_population

POPULATION_CSV = """zip,gender,age_lo,age_hi,count
02139,F,20,29,4000
02139,F,30,39,3500
02139,M,20,29,3800
02139,M,30,39,3300
02138,F,20,29,2500
02138,M,20,29,2400
02845,F,20,29,900
02845,M,20,29,850
46952,F,20,29,600
46952,M,20,29,550
"""


@pytest.fixture(scope="session")
def nicknames():
    return NicknameTable.bundled()


@pytest.fixture(scope="session")
def population_csv() -> str:
    return POPULATION_CSV


@pytest.fixture(scope="session")
def population_table():
    return read_population(io.StringIO(POPULATION_CSV))
