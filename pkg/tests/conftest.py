from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd
import pytest

from notional.schemas.corpus import Document
from notional.schemas.lexicons import Lexicons
from notional.services.corpus_ingest import read_corpus
from notional.services.lexicons import lexicon_service

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
EXCLUSIONS = FIXTURES / "exclusions.tsv"
GOLD_PAIRS = FIXTURES / "gold_pairs.tsv"
GOLD_FEATURES = FIXTURES / "gold_features.tsv"

# Only SAY and ESCAPE reach this count in the fixture corpus
FIXTURE_MIN_CLASS_COUNT = 2


@pytest.fixture(scope="session")
def lexicons() -> Lexicons:
    return lexicon_service.load(None, FIXTURE_MIN_CLASS_COUNT)


@pytest.fixture(scope="session")
def genre_map():
    return lexicon_service.load_genre_map()


@pytest.fixture
def documents(genre_map) -> Dict[str, Document]:
    return {doc.doc_id: doc for doc in read_corpus(CORPUS, genre_map)}


def synthetic_features(n: int = 120, seed: int = 0) -> pd.DataFrame:
    """
    Features table where the label is decided by person and position,
    with a noise column the trees should learn to ignore
    """
    rng = np.random.default_rng(seed)
    person = rng.choice(["1", "3"], size=n)
    position = rng.uniform(0, 100, size=n).round(2)
    notional = (person == "1") | (position > 70)
    return pd.DataFrame(
        {
            "doc_id": [f"doc_{i:03d}" for i in range(n)],
            "n_person": person,
            "n_position_pct": [f"{p:.2f}" for p in position],
            "genre": rng.choice(["news", "web", "bc.conv"], size=n),
            "label": np.where(notional, "notional", "strict"),
            "type_iii": [""] * n,
        }
    )


@pytest.fixture
def separable_frame() -> pd.DataFrame:
    return synthetic_features()


@pytest.fixture
def make_features():
    return synthetic_features


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def exclusions_path() -> Path:
    return EXCLUSIONS


@pytest.fixture
def gold_pairs_path() -> Path:
    return GOLD_PAIRS


@pytest.fixture
def gold_features_path() -> Path:
    return GOLD_FEATURES
