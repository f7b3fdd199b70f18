"""Deterministic template English, used when no generation endpoint is configured."""

from __future__ import annotations

from ..index import Triple
from ..kg import Store
from ..nmcs import Chain, ChainSet, Direction, SurfaceChoice, node_label, tail_node
from .parsing import NaturalizedSample

BLANK = "____"
_PREPOSITIONS = ("at", "in", "by", "for", "from", "on", "to", "with")


def rel_of(rel: str) -> str:
    """``<rel> of`` without "instance of of" or "educated at of"."""
    if rel.endswith(" of"):
        return rel
    if rel.rsplit(" ", 1)[-1] in _PREPOSITIONS:
        return f"{rel} value of"
    return f"{rel} of"


def the_rel_of(rel: str, x: str) -> str:
    return f"the {rel_of(rel)} {x}"


def _cap(text: str) -> str:
    return text[:1].upper() + text[1:]


def _one_hop(store: Store, t: Triple) -> tuple[str, str]:
    rel = store.property_label(t.relation)
    return f"{_cap(the_rel_of(rel, node_label(store, t.head)))} is", node_label(store, tail_node(t))


def _one_hop_reversed(store: Store, t: Triple) -> tuple[str, str]:
    rel = store.property_label(t.relation)
    return f"{node_label(store, tail_node(t))} is the {rel_of(rel)}", node_label(store, t.head)


def _chain_prefix(store: Store, chain: Chain, subject: str) -> str:
    first, rest = chain.hops[0], chain.hops[1:]
    rel = store.property_label(first.triple.relation)
    if not rest:
        if first.direction is Direction.FORWARD:
            return f"{_cap(the_rel_of(rel, subject))} is"
        return f"{subject} is the {rel_of(rel)}"
    if first.direction is Direction.FORWARD:
        text = _cap(the_rel_of(rel, subject))
    else:
        text = f"The entity whose {rel} is {subject}"
    for hop in rest:
        rel = store.property_label(hop.triple.relation)
        if hop.direction is Direction.FORWARD:
            text += f", which in turn has {rel} equal to"
        else:
            text += f", which in turn is the {rel_of(rel)}"
    return text


def _noun_phrase(store: Store, chain: Chain, subject: str) -> str:
    text = subject
    for hop in chain.hops:
        rel = store.property_label(hop.triple.relation)
        if hop.direction is Direction.FORWARD:
            text = the_rel_of(rel, text)
        else:
            text = f"the entity whose {rel} is {text}"
    return text


def _hop_sentences(store: Store, chain: Chain) -> tuple[list[tuple[str, str]], dict[int, tuple[str, str]]]:
    hops, reverse = [], {}
    for i, hop in enumerate(chain.hops):
        hops.append(_one_hop(store, hop.triple))
        if hop.direction is Direction.BACKWARD:
            reverse[i] = _one_hop_reversed(store, hop.triple)
    return hops, reverse


def naturalize_edit_offline(t: Triple, store: Store) -> NaturalizedSample:
    prefix, answer = _one_hop(store, t)
    return NaturalizedSample(prefix, answer, [(prefix, answer)])


def naturalize_offline(cs: ChainSet, sf: SurfaceChoice, store: Store) -> NaturalizedSample:
    """Single chain: ``The <r> of <subject> is ____.`` chained with ``, which in turn ...``.

    Double chain: ``Do <phrase 1> and <phrase 2> refer to the same entity?`` answered ``Yes``.
    The subject of the seed chain uses the chosen surface; every other mention uses labels.
    """
    seed_chain = cs.seed_chain()
    parts = []
    for chain in cs.chains:
        subject = sf.subject_surface if chain is seed_chain else node_label(store, chain.start)
        hops, reverse = _hop_sentences(store, chain)
        parts.append((chain, subject, NaturalizedSample(_chain_prefix(store, chain, subject),
                                                        sf.answer_surface, hops, reverse)))
    if not cs.is_double:
        return parts[0][2]
    phrases = [_noun_phrase(store, chain, subject) for chain, subject, _ in parts]
    question = f"Do {phrases[0]} and {phrases[1]} refer to the same entity?"
    return NaturalizedSample(question, "Yes", chains=[p[2] for p in parts], judgment=True)


def cloze_text(ns: NaturalizedSample) -> str:
    """The full sentence with the blank, for display."""
    if ns.judgment:
        return ns.prefix
    return f"{ns.prefix} {BLANK}."
