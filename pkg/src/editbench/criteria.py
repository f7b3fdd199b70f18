"""Evaluation-criteria labels derived from chain structure and surface choices."""

from __future__ import annotations

from .index import Triple
from .nmcs import ChainSet, Direction, SurfaceChoice, tail_node

GENERALITY_TAGS = ("MH", "OA", "RR", "Rep", "SA", "SER")
LOCALITY_CLASSES = ("1NF", "1NF-R", "OS", "RS", "SS", "WO")


class ClassificationError(ValueError):
    pass


def tag_string(labels) -> str:
    """Stable key for a label set, e.g. ``MH+OA+RR``."""
    return "+".join(sorted(labels))


def classify_generality(cs: ChainSet, t_edit: Triple, sf: SurfaceChoice) -> frozenset[str]:
    hop = next((h for c in cs.chains for h in c.hops if h.triple == t_edit), None)
    if hop is None:
        raise ClassificationError("generality chain set does not contain the edit triple")
    labels = set()
    if cs.total_hops >= 2:
        labels.add("MH")
    if hop.direction is Direction.BACKWARD:
        labels.add("RR")
    if cs.is_double:
        labels.add("SER")
    if sf.subject_is_alias:
        labels.add("SA")
    if sf.answer_is_alias:
        labels.add("OA")
    if not labels:
        labels.add("Rep")
    return frozenset(labels)


def crossing(seed: Triple, t_edit: Triple) -> tuple[bool, bool, bool]:
    """Which parts of the edit triple the seed touches: (subject, relation, object)."""
    nodes = {seed.head, tail_node(seed)}
    subject = t_edit.head in nodes
    relation = seed.relation == t_edit.relation
    obj = t_edit.tail.is_item and t_edit.tail.payload[0] in nodes
    return subject, relation, obj


# (subject, relation, object) overlap -> cross-feature class; a seed touching both
# the subject and the object is classed by the subject
_CROSS_CLASS = {
    (False, False, False): "WO",
    (True, False, False): "SS",
    (False, True, False): "RS",
    (False, False, True): "OS",
    (True, True, False): "1NF",
    (False, True, True): "1NF-R",
    (True, False, True): "SS",
    (True, True, True): "1NF",
}


def classify_locality(cs: ChainSet, t_edit: Triple) -> frozenset[str]:
    if cs.seed == t_edit or any(t_edit in c for c in cs.chains):
        raise ClassificationError("locality chain set contains the edit triple")
    labels = {_CROSS_CLASS[crossing(cs.seed, t_edit)]}
    if cs.total_hops >= 2:
        labels.add("MH")
    return frozenset(labels)


def later_hop_collision(cs: ChainSet, t_edit: Triple) -> bool:
    """True when a non-seed hop of a locality sample touches the edit subject or object."""
    watch = {t_edit.head}
    if t_edit.tail.is_item:
        watch.add(t_edit.tail.payload[0])
    for t in cs.triples():
        if t != cs.seed and ({t.head, tail_node(t)} & watch):
            return True
    return False
