from pathlib import Path

import pytest
from hypothesis import settings

from todsumkit.ontology import load_bundled_ontology

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def ontology():
    return load_bundled_ontology()


@pytest.fixture(scope="session")
def data_dir():
    return DATA
