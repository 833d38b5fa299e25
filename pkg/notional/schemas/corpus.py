import enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr


class Genre(str, enum.Enum):
    BC_CONV = "bc.conv"
    BC_NEWS = "bc.news"
    PHONE = "phone"
    NEWS = "news"
    BIBLE = "bible"
    TRANSLATIONS = "translations"
    WEB = "web"

SPOKEN_GENRES = frozenset({Genre.BC_CONV, Genre.BC_NEWS, Genre.PHONE})


class Boundary(str, enum.Enum):
    OPEN = "open"
    CLOSE = "close"
    OPEN_CLOSE = "open_close"


class CorefTag(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity_id: int
    boundary: Boundary


class Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    index_in_sentence: int
    index_in_document: int
    form: str
    pos: str
    parse_bit: str
    lemma: str = "-"
    speaker: str = ""
    ner_tag: str = "*"
    coref_tags: List[CorefTag] = []
    line: int = 0


class ConstituentNode(BaseModel):
    label: str
    span: Tuple[int, int]
    children: List["ConstituentNode"] = []
    head_token: Optional[int] = None
    # rule table that produced head_token
    _head_rules: Any = PrivateAttr(default=None)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        """Pre-order traversal"""
        yield self
        for child in self.children:
            yield from child.walk()


class NamedEntity(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    start: int
    end: int


class Sentence(BaseModel):
    index: int
    part: int
    tokens: List[Token]
    tree: ConstituentNode
    entities: List[NamedEntity] = []

    @property
    def offset(self) -> int:
        return self.tokens[0].index_in_document if self.tokens else 0

    def __len__(self) -> int:
        return len(self.tokens)


class Mention(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity_id: int
    part: int = 0
    sentence_index: int
    span: Tuple[int, int]
    head_token: Optional[int] = None
    ordinal_in_chain: int = 0

    @property
    def span_label(self) -> str:
        """Pairs-file notation: sentence:start-end"""
        return f"{self.sentence_index}:{self.span[0]}-{self.span[1]}"


class CorefChain(BaseModel):
    entity_id: int
    part: int = 0
    mentions: List[Mention]


class Document(BaseModel):
    doc_id: str
    genre: Optional[Genre] = None
    sentences: List[Sentence]
    chains: List[CorefChain] = []
    token_count: int = 0

    def token(self, sentence_index: int, index_in_sentence: int) -> Token:
        return self.sentences[sentence_index].tokens[index_in_sentence]

    def document_index(self, sentence_index: int, index_in_sentence: int) -> int:
        return self.token(sentence_index, index_in_sentence).index_in_document

    def mentions_by_span(self) -> Dict[Tuple[int, int, int], Mention]:
        return {
            (m.sentence_index, m.span[0], m.span[1]): m
            for chain in self.chains
            for m in chain.mentions
        }


ConstituentNode.model_rebuild()
