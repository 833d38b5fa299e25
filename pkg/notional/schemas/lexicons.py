from typing import Dict, FrozenSet, List, Tuple

from pydantic import BaseModel, ConfigDict

from notional.schemas.pairs import EntityType
from notional.schemas.syntax import HeadRuleTable

OTHER_CLASS = "OTHER"
NONE_CLASS = "NONE"
ENTITY_PREFIX = "ENT:"


class VerbClassLexicon(BaseModel):
    """Lemma to (class, frequency rank) entries, rank 1 = most common"""
    classes: Dict[str, List[Tuple[str, int]]] = {}
    merges: Dict[str, str] = {}
    min_class_count: int = 60

    def majority_class(self, lemma: str) -> str:
        """Most common class of the lemma after merging, OTHER when unlisted"""
        entries = self.classes.get(lemma.lower())
        if not entries:
            return OTHER_CLASS
        name = min(entries, key=lambda entry: entry[1])[0]
        return self.merges.get(name, name)


class EntityTypeLexicon(BaseModel):
    heads: Dict[str, EntityType] = {}
    ner_map: Dict[str, EntityType] = {}
    measure_units: FrozenSet[str] = frozenset()


class Lexicons(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    verbs: VerbClassLexicon
    entities: EntityTypeLexicon
    generic_words: FrozenSet[str] = frozenset()
    head_rules: HeadRuleTable
