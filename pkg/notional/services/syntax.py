"""
Head percolation and governor lookup over constituent trees
"""

import logging
from typing import Dict, List, Optional

from notional.core.artifacts import read_table
from notional.core.exceptions import ConfigurationError
from notional.schemas.corpus import ConstituentNode, Document, Mention, Sentence
from notional.schemas.syntax import (
    Direction,
    FineFunction,
    GovernorInfo,
    HeadRule,
    HeadRuleTable,
)

logger = logging.getLogger(__name__)

WILDCARD = "*"
PUNCTUATION = frozenset({".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP"})
POSSESSIVE_LEAVES = frozenset({"PRP$", "WP$"})
CLAUSAL_LABELS = frozenset({"S", "SBAR", "SQ", "SINV", "SBARQ"})
S_LIKE = frozenset({"S", "SQ", "SINV"})
COORDINATORS = frozenset({"CC", "CONJP"})
PASSIVE_AUXILIARIES = frozenset(
    {"be", "is", "are", "was", "were", "been", "being", "am", "'s", "'re",
     "get", "gets", "got", "gotten", "getting"}
)
PRESENT_TAGS = frozenset({"VBP", "VBZ"})


def base_label(label: str) -> str:
    """Strip function tags and indices: NP-SBJ-1 -> NP"""
    if label.startswith("-"):
        return label
    return label.split("-")[0].split("=")[0]


def parse_head_rules(text: str) -> HeadRuleTable:
    """
    Read a head rule table: label, direction, space separated priorities.
    Repeated labels add further passes in file order.
    """
    rules: Dict[str, List[HeadRule]] = {}
    for label, direction, priorities in read_table(text, "Head rules", 3).itertuples(index=False):
        try:
            rule = HeadRule(direction=Direction(direction), priorities=tuple(priorities.split()))
        except ValueError:
            raise ConfigurationError(f"Head rules: bad direction '{direction}' for {label}")
        rules.setdefault(label, []).append(rule)
    return HeadRuleTable(rules=rules)


def _ordered(children: List[ConstituentNode], direction: Direction) -> List[ConstituentNode]:
    return children if direction.from_left else list(reversed(children))


def _matches(child: ConstituentNode, priority: str) -> bool:
    return priority == WILDCARD or base_label(child.label) == priority


def _head_child(node: ConstituentNode, rules: HeadRuleTable) -> ConstituentNode:
    content = [c for c in node.children if c.label not in PUNCTUATION] or node.children
    for rule in rules.passes(node.label):
        ordered = _ordered(content, rule.direction)
        if rule.direction.any_priority:
            for child in ordered:
                if any(_matches(child, p) for p in rule.priorities):
                    return child
            continue
        for priority in rule.priorities:
            for child in ordered:
                if _matches(child, priority):
                    return child
    return content[-1]


def annotate_heads(tree: ConstituentNode, rules: HeadRuleTable) -> ConstituentNode:
    """Set head_token on every node, bottom-up; heads found with another rule table are redone"""
    if tree.head_token is not None and tree._head_rules is rules:
        return tree
    for child in tree.children:
        annotate_heads(child, rules)
    tree.head_token = tree.span[0] if tree.is_leaf else _head_child(tree, rules).head_token
    tree._head_rules = rules
    return tree


def find_head(node: ConstituentNode, rules: HeadRuleTable) -> int:
    return annotate_heads(node, rules).head_token


def head_child_of(node: ConstituentNode) -> Optional[ConstituentNode]:
    """First child carrying the node's head"""
    for child in node.children:
        if child.head_token == node.head_token:
            return child
    return None


def parent_map(tree: ConstituentNode) -> Dict[int, ConstituentNode]:
    parents: Dict[int, ConstituentNode] = {}
    for node in tree.walk():
        for child in node.children:
            parents[id(child)] = node
    return parents


def _leaf_at(tree: ConstituentNode, index: int) -> ConstituentNode:
    for node in tree.walk():
        if node.is_leaf and node.span[0] == index:
            return node
    raise ValueError(f"No leaf at token {index}")


def mention_head(mention: Mention, doc: Document, rules: HeadRuleTable) -> int:
    """
    Head token of a mention: the highest constituent spanning exactly the
    mention, else the rightmost noun, else the last token.
    """
    if mention.head_token is not None:
        return mention.head_token
    sentence = doc.sentences[mention.sentence_index]
    annotate_heads(sentence.tree, rules)
    for node in sentence.tree.walk():
        if node.span == tuple(mention.span):
            return node.head_token
    start, end = mention.span
    for index in range(end, start - 1, -1):
        if sentence.tokens[index].pos.startswith("NN"):
            return index
    return end


def _precedes(node: ConstituentNode, other: ConstituentNode) -> bool:
    return node.span[1] < other.span[0]


def _is_passive(governing: ConstituentNode, sentence: Sentence, governor: int) -> bool:
    if sentence.tokens[governor].pos != "VBN":
        return False
    parent = governing
    child = head_child_of(parent)
    while child is not None:
        for sibling in parent.children:
            if sibling is child:
                break
            if sibling.is_leaf and sentence.tokens[sibling.span[0]].form.lower() in PASSIVE_AUXILIARIES:
                return True
        if child.is_leaf:
            break
        parent, child = child, head_child_of(child)
    return False


def _function(
    projection: ConstituentNode,
    governing: ConstituentNode,
    sentence: Sentence,
    governor: int,
) -> FineFunction:
    m_label = base_label(projection.label)
    g_label = base_label(governing.label)
    head = head_child_of(governing)

    if g_label == "NP" and (
        (projection.is_leaf and projection.label in POSSESSIVE_LEAVES)
        or (m_label == "NP" and projection.children and projection.children[-1].label == "POS")
    ):
        return FineFunction.POSS

    if head is None:
        return FineFunction.OTHER

    if (
        any(c.label in COORDINATORS for c in governing.children)
        and projection is not head
        and m_label == base_label(head.label)
    ):
        return FineFunction.CONJ

    is_subject = m_label == "NP" and (
        (g_label == "S" and _precedes(projection, head))
        or (g_label in ("SQ", "SINV") and projection is not head)
    )
    if is_subject:
        if _is_passive(governing, sentence, governor):
            return FineFunction.NSUBJPASS
        return FineFunction.NSUBJ

    if g_label == "VP" and m_label == "NP" and _precedes(head, projection):
        later_np = any(
            base_label(c.label) == "NP" and _precedes(projection, c) for c in governing.children
        )
        return FineFunction.IOBJ if later_np else FineFunction.DOBJ

    if g_label in ("PP", "WHPP"):
        return FineFunction.POBJ

    if m_label in CLAUSAL_LABELS:
        if g_label in S_LIKE and _precedes(projection, head):
            return FineFunction.CSUBJ
        if g_label == "VP":
            return FineFunction.CCOMP
        return FineFunction.ADVCL

    if m_label == "NP" and g_label == "NP" and _precedes(head, projection):
        between = [
            c for c in governing.children
            if _precedes(head, c) and _precedes(c, projection)
        ]
        if any(c.label == "," for c in between):
            return FineFunction.APPOS

    return FineFunction.OTHER


def governor_of(mention: Mention, doc: Document, rules: HeadRuleTable) -> GovernorInfo:
    """
    Governing token of a mention head and the grammatical function
    linking them.
    """
    sentence = doc.sentences[mention.sentence_index]
    tree = annotate_heads(sentence.tree, rules)
    head = mention_head(mention, doc, rules)
    parents = parent_map(tree)

    projection = _leaf_at(tree, head)
    while id(projection) in parents and parents[id(projection)].head_token == head:
        projection = parents[id(projection)]

    governing = parents.get(id(projection))
    if governing is None:
        return GovernorInfo()

    governor = governing.head_token
    token = sentence.tokens[governor]
    return GovernorInfo(
        governor_index=governor,
        governor_pos=token.pos,
        governor_form=token.form,
        governor_lemma="" if token.lemma == "-" else token.lemma,
        function_fine=_function(projection, governing, sentence, governor),
    )


def collapse_pos(tag: str) -> str:
    """Merge present-tense verb tags"""
    return "VBpres" if tag in PRESENT_TAGS else tag
