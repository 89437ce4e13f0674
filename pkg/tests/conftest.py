from pathlib import Path

import pytest

from taxonorm import bm25, taxdump
from taxonorm.normalize import normalize
from helpers import DATA, NIDULANS_CANDIDATES


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def dump_names():
    with (DATA / "names.dmp").open("rb") as handle:
        return taxdump.parse_names(handle)


@pytest.fixture(scope="session")
def dump_nodes():
    with (DATA / "nodes.dmp").open("rb") as handle:
        return taxdump.parse_nodes(handle)


@pytest.fixture(scope="session")
def dictionaries(dump_names, dump_nodes):
    return taxdump.build_dictionaries(dump_names, dump_nodes, normalize)


@pytest.fixture(scope="session")
def nidulans_entries():
    return [taxdump.ConceptEntry.from_text(tax_id, text)
            for tax_id, text in NIDULANS_CANDIDATES.items()]


@pytest.fixture(scope="session")
def nidulans_index(nidulans_entries):
    return bm25.build_index(nidulans_entries)


@pytest.fixture(scope="session")
def nidulans_dictionaries(nidulans_entries):
    species = taxdump.RankDictionary("species", {e.tax_id: e for e in nidulans_entries})
    return {"species": species}
