from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel
from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    # Application
    PROJECT_NAME: str = "Notional Anaphora Pipeline"
    VERSION: str = "1.0.0"

    # Lexicons
    NOTIONAL_LEXICON_DIR: Optional[Path] = None

    # Reproducibility
    SEED: int = 42

    # Split / model selection
    TEST_FRACTION: float = 0.10
    FOLDS: int = 5
    N_JOBS: int = 1

    # Features
    MIN_VERB_CLASS_COUNT: int = 60
    EXTRA_FEATURES: List[str] = []

    # Analysis
    POS_TABLE_MIN_COUNT: int = 25
    N_BINS: int = 10

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    class Config:
        env_file = ".env"
        case_sensitive = True

settings = Settings()


class RunConfig(BaseModel):
    """Resolved options for one CLI invocation"""
    corpus: Optional[Path] = None
    lexicons: Optional[Path] = None
    genre_map: Optional[Path] = None
    exclusions: Optional[Path] = None
    seed: int = settings.SEED
    test_fraction: float = settings.TEST_FRACTION
    folds: int = settings.FOLDS
    grid: Optional[Path] = None
    out: Path = Path("out")
    header_meta: bool = True
    n_jobs: int = settings.N_JOBS
    min_verb_class_count: int = settings.MIN_VERB_CLASS_COUNT
    extra_features: List[str] = []
    # verb-class frequencies over all pairs instead of the rows `split` trains on
    count_all_pairs: bool = False

    @property
    def lexicon_dir(self) -> Optional[Path]:
        """Flag first, then the NOTIONAL_LEXICON_DIR fallback"""
        return self.lexicons or settings.NOTIONAL_LEXICON_DIR
