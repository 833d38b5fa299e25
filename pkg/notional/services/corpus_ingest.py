"""
CoNLL-2012 coreference reader

Builds the in-memory document model (tokens, constituent trees, named
entities, coreference chains) from column-aligned CoNLL files and assigns
each document one of the seven coarse genres.
"""

import logging
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from notional.core.exceptions import (
    ConfigurationError,
    CorpusFormatError,
    MalformedCorefError,
    MalformedParseError,
    UnmappedDocumentError,
)
from notional.schemas.corpus import (
    Boundary,
    ConstituentNode,
    CorefChain,
    CorefTag,
    Document,
    Genre,
    Mention,
    NamedEntity,
    Sentence,
    Token,
)

logger = logging.getLogger(__name__)

MIN_COLUMNS = 12

# Column positions
COL_PART = 1
COL_WORD = 3
COL_POS = 4
COL_PARSE = 5
COL_LEMMA = 6
COL_SPEAKER = 9
COL_NER = 10

BEGIN_RE = re.compile(r"^#begin document \((?P<doc>[^)]*)\);?\s*(?:part\s+(?P<part>\d+))?")
PARSE_BIT_RE = re.compile(r"^(\([^()*\s]+)*\*\)*$")
OPEN_LABEL_RE = re.compile(r"\(([^()*\s]+)")
COREF_OPEN_CLOSE_RE = re.compile(r"^\((\d+)\)$")
COREF_OPEN_RE = re.compile(r"^\((\d+)$")
COREF_CLOSE_RE = re.compile(r"^(\d+)\)$")

CONLL_SUFFIXES = ("_conll", ".conll")

GenreMap = Sequence[Tuple[str, Genre]]


class _SentenceRows:
    """Raw rows of one sentence, collected before building the model"""

    def __init__(self, part: int):
        self.part = part
        self.rows: List[Tuple[int, List[str]]] = []


def parse_conll(file_text: str, doc_id: str, genre_map: Optional[GenreMap] = None) -> Document:
    """
    Parse one CoNLL-2012 file into a Document.

    Parts are concatenated into one token stream; coreference chains stay
    scoped to the part they were annotated in.
    """
    pending: List[_SentenceRows] = []
    current: Optional[_SentenceRows] = None
    part = 0

    for line_no, raw in enumerate(file_text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#begin document"):
            match = BEGIN_RE.match(line)
            if match is None:
                raise CorpusFormatError(f"Bad document sentinel at line {line_no}: {line}")
            part = int(match.group("part") or 0)
            current = None
            continue
        if line.startswith("#end document"):
            current = None
            continue
        if line.startswith("#"):
            continue
        if not line:
            current = None
            continue

        columns = line.split()
        if len(columns) < MIN_COLUMNS:
            raise CorpusFormatError(
                f"Line {line_no}: expected at least {MIN_COLUMNS} columns, got {len(columns)}"
            )
        if current is None:
            if columns[COL_PART].isdigit():
                part = int(columns[COL_PART])
            current = _SentenceRows(part)
            pending.append(current)
        elif len(columns) != len(current.rows[0][1]):
            raise CorpusFormatError(
                f"Line {line_no}: column count {len(columns)} differs from "
                f"{len(current.rows[0][1])} earlier in the sentence"
            )
        current.rows.append((line_no, columns))

    sentences: List[Sentence] = []
    mentions: Dict[Tuple[int, int], List[Mention]] = defaultdict(list)
    offset = 0
    for sentence_index, rows in enumerate(pending):
        sentence = _build_sentence(sentence_index, rows, offset)
        sentences.append(sentence)
        for mention in _sentence_mentions(sentence):
            mentions[(mention.part, mention.entity_id)].append(mention)
        offset += len(sentence.tokens)

    document = Document(
        doc_id=doc_id,
        sentences=sentences,
        chains=_build_chains(mentions),
        token_count=offset,
    )
    if genre_map is not None:
        document.genre = assign_genre(doc_id, genre_map)
    return document


def _build_sentence(index: int, rows: _SentenceRows, offset: int) -> Sentence:
    tokens: List[Token] = []
    for position, (line_no, columns) in enumerate(rows.rows):
        tokens.append(
            Token(
                index_in_sentence=position,
                index_in_document=offset + position,
                form=columns[COL_WORD],
                pos=columns[COL_POS],
                parse_bit=columns[COL_PARSE],
                lemma=columns[COL_LEMMA],
                speaker="" if columns[COL_SPEAKER] == "-" else columns[COL_SPEAKER],
                ner_tag=columns[COL_NER],
                coref_tags=_parse_coref_cell(columns[-1], line_no),
                line=line_no,
            )
        )
    return Sentence(
        index=index,
        part=rows.part,
        tokens=tokens,
        tree=build_tree(tokens),
        entities=_named_entities(tokens),
    )


def build_tree(tokens: Sequence[Token]) -> ConstituentNode:
    """Reconstruct the constituent tree from concatenated parse bits"""
    stack: List[Tuple[str, int, List[ConstituentNode]]] = []
    root: Optional[ConstituentNode] = None

    for token in tokens:
        bit = token.parse_bit
        if not PARSE_BIT_RE.match(bit):
            raise MalformedParseError(token.line, f"bad parse bit '{bit}'")
        star = bit.index("*")
        for label in OPEN_LABEL_RE.findall(bit[:star]):
            stack.append((label, token.index_in_sentence, []))
        if not stack:
            raise MalformedParseError(token.line, "token outside any constituent")

        i = token.index_in_sentence
        stack[-1][2].append(ConstituentNode(label=token.pos, span=(i, i)))

        for _ in range(len(bit) - star - 1):
            if not stack:
                raise MalformedParseError(token.line, "closing bracket without opening")
            label, start, children = stack.pop()
            node = ConstituentNode(label=label, span=(start, i), children=children)
            if stack:
                stack[-1][2].append(node)
            elif root is None:
                root = node
            else:
                raise MalformedParseError(token.line, "more than one root constituent")

    if stack or root is None:
        last_line = tokens[-1].line if tokens else 0
        raise MalformedParseError(last_line, "unclosed constituent at end of sentence")
    return root


def _parse_coref_cell(cell: str, line_no: int) -> List[CorefTag]:
    if cell == "-":
        return []
    tags: List[CorefTag] = []
    for piece in cell.split("|"):
        if match := COREF_OPEN_CLOSE_RE.match(piece):
            tags.append(CorefTag(entity_id=int(match.group(1)), boundary=Boundary.OPEN_CLOSE))
        elif match := COREF_OPEN_RE.match(piece):
            tags.append(CorefTag(entity_id=int(match.group(1)), boundary=Boundary.OPEN))
        elif match := COREF_CLOSE_RE.match(piece):
            tags.append(CorefTag(entity_id=int(match.group(1)), boundary=Boundary.CLOSE))
        else:
            raise CorpusFormatError(f"Line {line_no}: bad coreference field '{cell}'")
    return tags


def _sentence_mentions(sentence: Sentence) -> List[Mention]:
    open_starts: Dict[int, List[int]] = defaultdict(list)
    found: List[Mention] = []

    def add(entity_id: int, start: int, end: int):
        found.append(
            Mention(
                entity_id=entity_id,
                part=sentence.part,
                sentence_index=sentence.index,
                span=(start, end),
            )
        )

    for token in sentence.tokens:
        i = token.index_in_sentence
        # opens first, so "(3|3)" on one token is a width-1 mention
        for tag in token.coref_tags:
            if tag.boundary is Boundary.OPEN_CLOSE:
                add(tag.entity_id, i, i)
            elif tag.boundary is Boundary.OPEN:
                open_starts[tag.entity_id].append(i)
        for tag in token.coref_tags:
            if tag.boundary is Boundary.CLOSE:
                if not open_starts[tag.entity_id]:
                    raise MalformedCorefError(tag.entity_id, sentence.index, "close without open")
                add(tag.entity_id, open_starts[tag.entity_id].pop(), i)

    for entity_id, starts in open_starts.items():
        if starts:
            raise MalformedCorefError(entity_id, sentence.index, "open without close")
    return found


def _build_chains(mentions: Dict[Tuple[int, int], List[Mention]]) -> List[CorefChain]:
    chains: List[CorefChain] = []
    for (part, entity_id) in sorted(mentions):
        ordered: List[Mention] = []
        seen = set()
        for mention in sorted(
            mentions[(part, entity_id)], key=lambda m: (m.sentence_index, m.span[0], m.span[1])
        ):
            key = (mention.sentence_index, mention.span)
            if key in seen:
                logger.warning(f"Duplicate mention span {mention.span_label} for entity {entity_id}")
                continue
            seen.add(key)
            ordered.append(mention.model_copy(update={"ordinal_in_chain": len(ordered)}))
        chains.append(CorefChain(entity_id=entity_id, part=part, mentions=ordered))
    return chains


def _named_entities(tokens: Sequence[Token]) -> List[NamedEntity]:
    entities: List[NamedEntity] = []
    open_label: Optional[str] = None
    start = 0
    for token in tokens:
        tag = token.ner_tag
        if tag.startswith("("):
            open_label = tag[1:].rstrip("*)")
            start = token.index_in_sentence
        if tag.endswith(")") and open_label is not None:
            entities.append(NamedEntity(label=open_label, start=start, end=token.index_in_sentence))
            open_label = None
    return entities


def assign_genre(doc_id: str, genre_map: GenreMap) -> Genre:
    """Longest matching path prefix wins"""
    best: Optional[Tuple[int, Genre]] = None
    for prefix, genre in genre_map:
        prefix = prefix.rstrip("/")
        if doc_id == prefix or doc_id.startswith(prefix + "/"):
            if best is None or len(prefix) > best[0]:
                best = (len(prefix), genre)
    if best is None:
        raise UnmappedDocumentError(doc_id)
    return best[1]


def parse_bits(tree: ConstituentNode) -> List[str]:
    """Serialize a tree back into one parse bit per token"""
    width = tree.span[1] + 1
    opens: List[List[str]] = [[] for _ in range(width)]
    closes = [0] * width
    for node in tree.walk():
        if node.is_leaf:
            continue
        opens[node.span[0]].append(node.label)
        closes[node.span[1]] += 1
    return ["".join(f"({label}" for label in opens[i]) + "*" + ")" * closes[i] for i in range(width)]


def coref_cell(token: Token) -> str:
    if not token.coref_tags:
        return "-"
    pieces = []
    for tag in token.coref_tags:
        if tag.boundary is Boundary.OPEN_CLOSE:
            pieces.append(f"({tag.entity_id})")
        elif tag.boundary is Boundary.OPEN:
            pieces.append(f"({tag.entity_id}")
        else:
            pieces.append(f"{tag.entity_id})")
    return "|".join(pieces)


def to_conll_columns(document: Document) -> List[List[Tuple[str, str]]]:
    """(parse bit, coref cell) per token, per sentence"""
    return [
        list(zip(parse_bits(sentence.tree), (coref_cell(t) for t in sentence.tokens)))
        for sentence in document.sentences
    ]


def doc_id_for(path: Path, root: Path) -> str:
    relative = path.relative_to(root)
    stem = relative.name.split(".", 1)[0]
    for suffix in CONLL_SUFFIXES:
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    parent = relative.parent.as_posix()
    return stem if parent == "." else f"{parent}/{stem}"


def corpus_files(directory: Path) -> List[Path]:
    if not directory.is_dir():
        raise ConfigurationError(f"Corpus directory not readable: {directory}")
    return sorted(
        path
        for path in directory.rglob("*")
        if path.is_file() and path.name.endswith(CONLL_SUFFIXES)
    )


def _load_one(path: Path, root: Path, genre_map: GenreMap) -> Optional[Document]:
    doc_id = doc_id_for(path, root)
    try:
        genre = assign_genre(doc_id, genre_map)
    except UnmappedDocumentError as exc:
        logger.warning(f"Skipping document: {exc.message}")
        return None
    document = parse_conll(path.read_text(encoding="utf-8"), doc_id)
    document.genre = genre
    return document


def read_corpus(directory: Path, genre_map: GenreMap, n_jobs: int = 1) -> List[Document]:
    """
    Parse every CoNLL file under a directory, sorted by document id
    """
    files = corpus_files(directory)
    logger.info(f"Reading {len(files)} CoNLL files from {directory}")
    documents = Parallel(n_jobs=n_jobs)(
        delayed(_load_one)(path, directory, genre_map) for path in files
    )
    loaded = sorted((d for d in documents if d is not None), key=lambda d: d.doc_id)
    logger.info(f"Loaded {len(loaded)} documents, {sum(d.token_count for d in loaded)} tokens")
    return loaded
