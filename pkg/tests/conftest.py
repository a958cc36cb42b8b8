from pathlib import Path

import pytest

from kdgraph.facts import parse_fact_path

FIXTURES = Path(__file__).parent / "fixtures"

TRANSLATION_SNIPPET = """\
has(euka_transl4191, instance_of, event).
has(euka_transl4191, instance_of, eukaryotic_translation).
has(euka_transl4191, base, mrna4642).
has(mrna4642, instance_of, mrna).
"""


@pytest.fixture
def photosynthesis_store():
    return parse_fact_path(FIXTURES / "photosynthesis.facts")


@pytest.fixture
def eukaryote_store():
    return parse_fact_path(FIXTURES / "eukaryote.facts")


@pytest.fixture
def rooted_cell_store():
    return parse_fact_path(FIXTURES / "rooted_cell.facts")


@pytest.fixture
def fixtures_dir():
    return FIXTURES
