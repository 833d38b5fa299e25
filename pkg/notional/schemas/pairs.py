import enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from notional.schemas.corpus import Genre, Mention


class AgreementLabel(str, enum.Enum):
    STRICT = "strict"
    NOTIONAL = "notional"


class Article(str, enum.Enum):
    DEF = "def"
    INDEF = "indef"
    DEM = "dem"
    NONE = "none"


class InfoStatus(str, enum.Enum):
    GIVEN = "given"
    NEW = "new"


class EntityType(str, enum.Enum):
    PERSON = "PERSON"
    ORGANIZATION = "ORGANIZATION"
    PLACE = "PLACE"
    OBJECT = "OBJECT"
    TIME = "TIME"
    QUANTITY = "QUANTITY"
    ABSTRACT = "ABSTRACT"
    EVENT = "EVENT"


class EntitySource(str, enum.Enum):
    NER = "ner"
    CONSTRUCTION = "construction"
    LEXICON = "lexicon"
    DEFAULT = "default"


class AgreementPair(BaseModel):
    """Singular antecedent and the pronoun that next refers back to it"""
    model_config = ConfigDict(frozen=True)

    doc_id: str
    genre: Genre
    antecedent: Mention
    anaphor: Mention
    label: AgreementLabel
    anaphor_form: str
    antecedent_head_form: str
    type_iii_flag: Optional[bool] = None


PAIR_COLUMNS: List[str] = [
    "doc_id",
    "genre",
    "antecedent_span",
    "antecedent_head",
    "anaphor_span",
    "anaphor_form",
    "label",
    "type_iii",
]

CORE_FEATURES: List[str] = [
    "n_person",
    "n_func",
    "n_parent_pos",
    "n_parent_class",
    "n_position_pct",
    "t_func",
    "t_parent_pos",
    "t_parent_class",
    "t_entity",
    "t_art",
    "t_infstat",
    "t_generic",
    "t_length_tokens",
    "t_length_chars",
    "t_position_pct",
    "distance_tokens",
    "doc_length_tokens",
    "genre",
]

EXTRA_FEATURES: List[str] = ["modality", "t_entity_source"]

NUMERIC_FEATURES = frozenset(
    {
        "n_position_pct",
        "t_position_pct",
        "t_length_tokens",
        "t_length_chars",
        "distance_tokens",
        "doc_length_tokens",
        "t_generic",
    }
)


def feature_columns(extra: List[str]) -> List[str]:
    return ["doc_id"] + CORE_FEATURES + [name for name in EXTRA_FEATURES if name in extra] + [
        "label",
        "type_iii",
    ]


class FeatureVector(BaseModel):
    """Feature row for one agreement pair (n_ = anaphor, t_ = antecedent)"""

    doc_id: str
    n_person: int = Field(ge=1, le=3)
    n_func: str
    n_parent_pos: str
    n_parent_class: str
    n_position_pct: float = Field(ge=0, le=100)
    t_func: str
    t_parent_pos: str
    t_parent_class: str
    t_entity: EntityType
    t_art: Article
    t_infstat: InfoStatus
    t_generic: bool
    t_length_tokens: int = Field(ge=1)
    t_length_chars: int = Field(ge=1)
    t_position_pct: float = Field(ge=0, le=100)
    distance_tokens: int = Field(ge=1)
    doc_length_tokens: int = Field(ge=1)
    genre: Genre
    modality: Optional[str] = None
    t_entity_source: Optional[EntitySource] = None
    label: AgreementLabel
    type_iii: Optional[bool] = None

    def cells(self, columns: List[str]) -> List[str]:
        """TSV cells in column order"""
        cells = []
        for column in columns:
            value = getattr(self, column)
            if value is None:
                cells.append("")
            elif isinstance(value, bool):
                cells.append(str(value))
            elif isinstance(value, float):
                cells.append(f"{value:.2f}")
            elif isinstance(value, enum.Enum):
                cells.append(str(value.value))
            else:
                cells.append(str(value))
        return cells
