import logging
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from notional.core.artifacts import read_table
from notional.core.exceptions import ConfigurationError
from notional.schemas.corpus import Genre
from notional.schemas.lexicons import EntityTypeLexicon, Lexicons, VerbClassLexicon
from notional.schemas.pairs import EntityType
from notional.services.syntax import parse_head_rules

logger = logging.getLogger(__name__)

GENRE_MAP = "genre_map.tsv"
HEAD_RULES = "head_rules.tsv"
VERB_CLASSES = "verb_classes.tsv"
VERB_CLASS_MERGES = "verb_class_merges.tsv"
ENTITIES = "entities.tsv"
NER_MAP = "ner_map.tsv"
GENERIC_WORDS = "generic_words.txt"
MEASURE_UNITS = "measure_units.txt"
DEFAULT_GRID = "default_grid.json"


class LexiconService:
    """Loads lexicons and tables from a user directory or the bundled defaults"""

    def read_resource(self, name: str, lexicon_dir: Optional[Path] = None) -> str:
        """
        Text of a resource file; a file missing from the user directory
        falls back to the bundled copy
        """
        if lexicon_dir is not None:
            candidate = Path(lexicon_dir) / name
            if candidate.is_file():
                logger.debug(f"Using {candidate}")
                return candidate.read_text(encoding="utf-8")
        try:
            return resources.files("notional.resources").joinpath(name).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigurationError(f"Missing resource: {name}")

    def _rows(self, text: str, name: str, width: int) -> List[List[str]]:
        return read_table(text, name, width).values.tolist()

    def _words(self, text: str, name: str) -> frozenset:
        return frozenset(read_table(text, name, 1)[0].str.lower())

    def _entity_type(self, value: str, name: str) -> EntityType:
        try:
            return EntityType(value)
        except ValueError:
            raise ConfigurationError(f"{name}: unknown entity type '{value}'")

    def load_genre_map(
        self, path: Optional[Path] = None, lexicon_dir: Optional[Path] = None
    ) -> List[Tuple[str, Genre]]:
        text = (
            Path(path).read_text(encoding="utf-8")
            if path is not None
            else self.read_resource(GENRE_MAP, lexicon_dir)
        )
        genre_map = []
        for prefix, genre in self._rows(text, GENRE_MAP, 2):
            try:
                genre_map.append((prefix, Genre(genre)))
            except ValueError:
                raise ConfigurationError(f"{GENRE_MAP}: unknown genre '{genre}'")
        return genre_map

    def load_verb_classes(
        self, lexicon_dir: Optional[Path] = None, min_class_count: int = 60
    ) -> VerbClassLexicon:
        classes: Dict[str, List[Tuple[str, int]]] = {}
        for lemma, name, rank in self._rows(self.read_resource(VERB_CLASSES, lexicon_dir), VERB_CLASSES, 3):
            classes.setdefault(lemma.lower(), []).append((name, int(rank)))
        merges = dict(self._rows(self.read_resource(VERB_CLASS_MERGES, lexicon_dir), VERB_CLASS_MERGES, 2))
        return VerbClassLexicon(classes=classes, merges=merges, min_class_count=min_class_count)

    def load_entities(self, lexicon_dir: Optional[Path] = None) -> EntityTypeLexicon:
        heads = {
            lemma.lower(): self._entity_type(kind, ENTITIES)
            for lemma, kind in self._rows(self.read_resource(ENTITIES, lexicon_dir), ENTITIES, 2)
        }
        ner_map = {
            tag: self._entity_type(kind, NER_MAP)
            for tag, kind in self._rows(self.read_resource(NER_MAP, lexicon_dir), NER_MAP, 2)
        }
        units = self._words(self.read_resource(MEASURE_UNITS, lexicon_dir), MEASURE_UNITS)
        return EntityTypeLexicon(heads=heads, ner_map=ner_map, measure_units=units)

    def load(self, lexicon_dir: Optional[Path] = None, min_class_count: int = 60) -> Lexicons:
        """Every lexicon the extraction stage needs"""
        lexicons = Lexicons(
            verbs=self.load_verb_classes(lexicon_dir, min_class_count),
            entities=self.load_entities(lexicon_dir),
            generic_words=self._words(self.read_resource(GENERIC_WORDS, lexicon_dir), GENERIC_WORDS),
            head_rules=parse_head_rules(self.read_resource(HEAD_RULES, lexicon_dir)),
        )
        logger.info(
            f"Loaded lexicons: {len(lexicons.verbs.classes)} verb lemmas, "
            f"{len(lexicons.entities.heads)} entity heads, "
            f"{len(lexicons.head_rules.rules)} head rule labels"
        )
        return lexicons


lexicon_service = LexiconService()
