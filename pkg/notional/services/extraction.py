"""
Agreement pair selection and featurization

A pair is a singular lexical NP (head tagged NN or NNP) and the next
mention of its chain, when that mention is a single 1st or 3rd person
pronoun. Plural pronouns mark notional agreement.
"""

import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple

from notional.core.artifacts import read_tsv
from notional.core.exceptions import SchemaError
from notional.schemas.corpus import SPOKEN_GENRES, Document, Genre, Mention, Sentence
from notional.schemas.lexicons import (
    ENTITY_PREFIX,
    NONE_CLASS,
    OTHER_CLASS,
    EntityTypeLexicon,
    Lexicons,
    VerbClassLexicon,
)
from notional.schemas.pairs import (
    PAIR_COLUMNS,
    AgreementLabel,
    AgreementPair,
    Article,
    EntitySource,
    EntityType,
    FeatureVector,
    InfoStatus,
)
from notional.schemas.syntax import GovernorInfo, HeadRuleTable
from notional.services.syntax import collapse_pos, governor_of, mention_head

logger = logging.getLogger(__name__)

PLURAL_PRONOUNS = frozenset(
    {"they", "them", "their", "theirs", "themselves", "we", "us", "our", "ours", "ourselves"}
)
SINGULAR_PRONOUNS = frozenset(
    {"it", "its", "itself", "he", "him", "his", "himself", "she", "her", "hers", "herself",
     "i", "me", "my", "mine", "myself"}
)
FIRST_PERSON = frozenset({"i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"})

ANTECEDENT_HEAD_TAGS = frozenset({"NN", "NNP"})

ARTICLES = {
    "the": Article.DEF,
    "a": Article.INDEF,
    "an": Article.INDEF,
    "this": Article.DEM,
    "that": Article.DEM,
    "these": Article.DEM,
    "those": Article.DEM,
}
MEASURE_SKIP_TAGS = frozenset({"DT", "PDT", "JJ", "CD"})

Exclusions = Set[Tuple[str, str]]


def load_exclusions(path: Optional[Path]) -> Exclusions:
    """(doc_id, sentence:start-end) records of pairs removed by hand"""
    if path is None:
        return set()
    frame = read_tsv(path, required=("doc_id", "span"))
    return {(row.doc_id, row.span) for row in frame.itertuples(index=False)}


def _is_pronoun_anaphor(mention: Mention, doc: Document) -> bool:
    start, end = mention.span
    if start != end:
        return False
    form = doc.token(mention.sentence_index, start).form.lower()
    return form in PLURAL_PRONOUNS or form in SINGULAR_PRONOUNS


def extract_pairs(
    doc: Document, exclusions: Exclusions, rules: HeadRuleTable
) -> List[AgreementPair]:
    """
    Antecedent/anaphor pairs of one document, ordered by antecedent position
    """
    pairs: List[AgreementPair] = []
    for chain in doc.chains:
        mentions = [
            m.model_copy(update={"head_token": mention_head(m, doc, rules)}) for m in chain.mentions
        ]
        for antecedent, anaphor in zip(mentions, mentions[1:]):
            head = doc.token(antecedent.sentence_index, antecedent.head_token)
            if head.pos not in ANTECEDENT_HEAD_TAGS:
                continue
            if not _is_pronoun_anaphor(anaphor, doc):
                continue
            if (doc.doc_id, antecedent.span_label) in exclusions or (
                doc.doc_id, anaphor.span_label
            ) in exclusions:
                logger.debug(f"Excluded pair {doc.doc_id} {antecedent.span_label}")
                continue
            form = doc.token(anaphor.sentence_index, anaphor.span[0]).form.lower()
            pairs.append(
                AgreementPair(
                    doc_id=doc.doc_id,
                    genre=doc.genre,
                    antecedent=antecedent,
                    anaphor=anaphor,
                    label=AgreementLabel.NOTIONAL if form in PLURAL_PRONOUNS else AgreementLabel.STRICT,
                    anaphor_form=form,
                    antecedent_head_form=head.form.lower(),
                )
            )
    return sorted(pairs, key=lambda p: _pair_order(p, doc))


def _pair_order(pair: AgreementPair, doc: Document) -> Tuple[int, int]:
    return (
        doc.document_index(pair.antecedent.sentence_index, pair.antecedent.span[0]),
        doc.document_index(pair.anaphor.sentence_index, pair.anaphor.span[0]),
    )


def attestation_filter(pairs: Iterable[AgreementPair]) -> List[AgreementPair]:
    """Keep pairs whose antecedent head takes plural agreement somewhere"""
    pairs = list(pairs)
    attested = {p.antecedent_head_form for p in pairs if p.label is AgreementLabel.NOTIONAL}
    kept = [p for p in pairs if p.antecedent_head_form in attested]
    logger.info(f"Attestation filter kept {len(kept)} of {len(pairs)} pairs")
    return kept


def verb_class(
    lemma: str, lex: VerbClassLexicon, counts: Optional[Dict[str, int]] = None
) -> str:
    """
    Majority class after merging; classes rarer than the lexicon minimum
    in `counts` collapse to OTHER
    """
    name = lex.majority_class(lemma)
    if counts is not None and name != OTHER_CLASS and counts.get(name, 0) < lex.min_class_count:
        return OTHER_CLASS
    return name


def _verb_lemma(governor: GovernorInfo) -> str:
    return (governor.governor_lemma or governor.governor_form).lower()


def token_entity_type(
    sentence: Sentence, index: int, lex: EntityTypeLexicon
) -> Tuple[EntityType, EntitySource]:
    """Entity type of one token with the rule that assigned it"""
    for entity in sentence.entities:
        if entity.start <= index <= entity.end and entity.label in lex.ner_map:
            return lex.ner_map[entity.label], EntitySource.NER

    if _is_measure(sentence, index, lex):
        return EntityType.QUANTITY, EntitySource.CONSTRUCTION

    token = sentence.tokens[index]
    form = token.form.lower()
    for candidate in (form, token.lemma.lower(), form[:-1] if form.endswith("s") else None):
        if candidate and candidate in lex.heads:
            return lex.heads[candidate], EntitySource.LEXICON
    return EntityType.ABSTRACT, EntitySource.DEFAULT


def _is_measure(sentence: Sentence, index: int, lex: EntityTypeLexicon) -> bool:
    """head + "of" + plural unit noun, e.g. a couple of minutes"""
    tokens = sentence.tokens
    if index + 1 >= len(tokens) or tokens[index + 1].form.lower() != "of":
        return False
    j = index + 2
    while j < len(tokens) and tokens[j].pos in MEASURE_SKIP_TAGS:
        j += 1
    return j < len(tokens) and tokens[j].pos == "NNS" and tokens[j].form.lower() in lex.measure_units


def entity_type(mention: Mention, doc: Document, lex: EntityTypeLexicon) -> EntityType:
    return entity_type_with_source(mention, doc, lex)[0]


def entity_type_with_source(
    mention: Mention, doc: Document, lex: EntityTypeLexicon
) -> Tuple[EntityType, EntitySource]:
    sentence = doc.sentences[mention.sentence_index]
    return token_entity_type(sentence, mention.head_token, lex)


def parent_class(
    governor: GovernorInfo,
    sentence: Sentence,
    lexicons: Lexicons,
    counts: Optional[Dict[str, int]] = None,
) -> str:
    """Verb class of a verbal governor, entity class of a nominal one"""
    if governor.is_root:
        return NONE_CLASS
    if governor.governor_pos.startswith("VB"):
        return verb_class(_verb_lemma(governor), lexicons.verbs, counts)
    if governor.governor_pos.startswith("NN"):
        kind, _ = token_entity_type(sentence, governor.governor_index, lexicons.entities)
        return ENTITY_PREFIX + kind.value
    return NONE_CLASS


def verb_class_counts(
    pairs: Iterable[AgreementPair], documents: Dict[str, Document], lexicons: Lexicons
) -> Counter:
    """Class frequencies over both governor slots of the given pairs"""
    counts: Counter = Counter()
    for pair in pairs:
        doc = documents[pair.doc_id]
        for mention in (pair.anaphor, pair.antecedent):
            governor = governor_of(mention, doc, lexicons.head_rules)
            if governor.governor_pos.startswith("VB"):
                counts[lexicons.verbs.majority_class(_verb_lemma(governor))] += 1
    return counts


def _article(mention: Mention, doc: Document) -> Article:
    sentence = doc.sentences[mention.sentence_index]
    for token in sentence.tokens[mention.span[0]: mention.span[1] + 1]:
        if token.pos == "DT":
            return ARTICLES.get(token.form.lower(), Article.NONE)
    return Article.NONE


def featurize(
    pair: AgreementPair,
    doc: Document,
    lexicons: Lexicons,
    counts: Optional[Dict[str, int]] = None,
) -> FeatureVector:
    """
    Feature row of one pair; `counts` are corpus-wide verb class
    frequencies used for the OTHER collapse
    """
    rules = lexicons.head_rules
    antecedent = pair.antecedent.model_copy(
        update={"head_token": mention_head(pair.antecedent, doc, rules)}
    )
    anaphor = pair.anaphor.model_copy(update={"head_token": mention_head(pair.anaphor, doc, rules)})
    n_gov = governor_of(anaphor, doc, rules)
    t_gov = governor_of(antecedent, doc, rules)
    n_sentence = doc.sentences[anaphor.sentence_index]
    t_sentence = doc.sentences[antecedent.sentence_index]

    n_index = doc.document_index(anaphor.sentence_index, anaphor.head_token)
    t_index = doc.document_index(antecedent.sentence_index, antecedent.head_token)
    span_tokens = t_sentence.tokens[antecedent.span[0]: antecedent.span[1] + 1]
    kind, source = entity_type_with_source(antecedent, doc, lexicons.entities)
    length = doc.token_count

    return FeatureVector(
        doc_id=pair.doc_id,
        n_person=1 if pair.anaphor_form in FIRST_PERSON else 3,
        n_func=n_gov.function_coarse.value,
        n_parent_pos=collapse_pos(n_gov.governor_pos),
        n_parent_class=parent_class(n_gov, n_sentence, lexicons, counts),
        n_position_pct=100.0 * n_index / length,
        t_func=t_gov.function_fine.value,
        t_parent_pos=t_gov.governor_pos,
        t_parent_class=parent_class(t_gov, t_sentence, lexicons, counts),
        t_entity=kind,
        t_art=_article(antecedent, doc),
        t_infstat=InfoStatus.GIVEN if antecedent.ordinal_in_chain > 0 else InfoStatus.NEW,
        t_generic=pair.antecedent_head_form in lexicons.generic_words,
        t_length_tokens=len(span_tokens),
        t_length_chars=len(" ".join(token.form for token in span_tokens)),
        t_position_pct=100.0 * t_index / length,
        distance_tokens=n_index - t_index,
        doc_length_tokens=length,
        genre=pair.genre,
        modality="spoken" if pair.genre in SPOKEN_GENRES else "written",
        t_entity_source=source,
        label=pair.label,
        type_iii=pair.type_iii_flag,
    )


def pair_cells(pair: AgreementPair) -> List[str]:
    return [
        pair.doc_id,
        pair.genre.value,
        pair.antecedent.span_label,
        pair.antecedent_head_form,
        pair.anaphor.span_label,
        pair.anaphor_form,
        pair.label.value,
        "" if pair.type_iii_flag is None else str(pair.type_iii_flag),
    ]


def parse_flag(value: str, column: str) -> Optional[bool]:
    if value == "":
        return None
    if value in ("True", "true", "1"):
        return True
    if value in ("False", "false", "0"):
        return False
    raise SchemaError(column, f"expected a boolean, got '{value}'")


def pairs_from_file(path: Path, documents: Dict[str, Document]) -> List[AgreementPair]:
    """Rebuild pairs from a pairs file against the parsed corpus"""
    frame = read_tsv(path, required=PAIR_COLUMNS[:-1])
    pairs: List[AgreementPair] = []
    for row in frame.to_dict("records"):
        doc = documents.get(row["doc_id"])
        if doc is None:
            raise SchemaError("doc_id", f"unknown document '{row['doc_id']}'")
        by_span = doc.mentions_by_span()
        try:
            antecedent = by_span[_span_key(row["antecedent_span"])]
            anaphor = by_span[_span_key(row["anaphor_span"])]
        except KeyError:
            raise SchemaError("antecedent_span", f"no mention at {row['antecedent_span']} / {row['anaphor_span']}")
        pairs.append(
            AgreementPair(
                doc_id=doc.doc_id,
                genre=Genre(row["genre"]),
                antecedent=antecedent,
                anaphor=anaphor,
                label=AgreementLabel(row["label"]),
                anaphor_form=row["anaphor_form"],
                antecedent_head_form=row["antecedent_head"],
                type_iii_flag=parse_flag(row.get("type_iii", ""), "type_iii"),
            )
        )
    return pairs


def _span_key(label: str) -> Tuple[int, int, int]:
    try:
        sentence, span = label.split(":")
        start, end = span.split("-")
        return int(sentence), int(start), int(end)
    except ValueError:
        raise SchemaError("span", f"bad span '{label}'")
