"""Edit triple sampling, locality seeds and neighborhood multi-hop chain sampling.

Chain sampling runs in two phases. The first grows a simple path of at most
``h`` triples around the seed by expanding end nodes. The second picks a target
node on that path in random order and walks away from it on each side,
stopping at a path end or before a hop that would be ambiguous when read
toward the target. The first target whose chains still hold the seed wins.

Graph nodes are entity ids. A non-item tail is wrapped in a ``LiteralNode``
tied to its triple, so two equal literals never merge into one node and a
literal can only ever sit at the end of a chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .index import StructuralIndex, Triple
from .kg import Store, Value, ValueKind


class NoSeedError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class LiteralNode:
    triple: Triple

    @property
    def value(self) -> Value:
        return self.triple.tail


Node = Union[str, LiteralNode]


def tail_node(t: Triple) -> Node:
    return t.tail.payload[0] if t.tail.is_item else LiteralNode(t)


def other_end(t: Triple, node: Node) -> Node:
    return tail_node(t) if t.head == node else t.head


class Direction(str, enum.Enum):
    FORWARD = "F"
    BACKWARD = "B"


@dataclass(frozen=True, slots=True)
class DirectedHop:
    triple: Triple
    direction: Direction

    def __post_init__(self) -> None:
        if self.direction is Direction.BACKWARD and not self.triple.tail.is_item:
            raise ValueError("backward hop needs an item tail")

    @property
    def source(self) -> Node:
        return self.triple.head if self.direction is Direction.FORWARD else tail_node(self.triple)

    @property
    def dest(self) -> Node:
        return tail_node(self.triple) if self.direction is Direction.FORWARD else self.triple.head

    def to_json(self) -> dict:
        return {"triple": self.triple.to_json(), "direction": self.direction.value}

    @classmethod
    def from_json(cls, obj: dict) -> "DirectedHop":
        return cls(Triple.from_json(obj["triple"]), Direction(obj["direction"]))


@dataclass(frozen=True, slots=True)
class Chain:
    hops: tuple[DirectedHop, ...]

    @property
    def start(self) -> Node:
        return self.hops[0].source

    @property
    def target(self) -> Node:
        return self.hops[-1].dest

    def nodes(self) -> list[Node]:
        return [self.hops[0].source] + [h.dest for h in self.hops]

    def triples(self) -> list[Triple]:
        return [h.triple for h in self.hops]

    def __contains__(self, t: Triple) -> bool:
        return any(h.triple == t for h in self.hops)

    def __len__(self) -> int:
        return len(self.hops)

    @classmethod
    def from_path(cls, triples: list[Triple], target: Node) -> "Chain":
        """Build from triples ordered outward from ``target``; the result reads toward it."""
        nodes = [target]
        for t in triples:
            nodes.append(other_end(t, nodes[-1]))
        hops = []
        for i in range(len(triples) - 1, -1, -1):
            t, src = triples[i], nodes[i + 1]
            hops.append(DirectedHop(t, Direction.FORWARD if t.head == src else Direction.BACKWARD))
        return cls(tuple(hops))


@dataclass(frozen=True)
class ChainSet:
    chains: tuple[Chain, ...]
    kind: str  # "generality" | "locality"
    seed: Triple

    @property
    def target(self) -> Node:
        return self.chains[0].target

    @property
    def is_double(self) -> bool:
        return len(self.chains) == 2

    @property
    def total_hops(self) -> int:
        return sum(len(c) for c in self.chains)

    @property
    def contains_seed(self) -> tuple[bool, ...]:
        return tuple(self.seed in c for c in self.chains)

    def seed_chain(self) -> Chain:
        for c in self.chains:
            if self.seed in c:
                return c
        return self.chains[0]

    def triples(self) -> list[Triple]:
        return [t for c in self.chains for t in c.triples()]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed.to_json(),
            "chains": [[h.to_json() for h in c.hops] for c in self.chains],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainSet":
        chains = tuple(Chain(tuple(DirectedHop.from_json(h) for h in c)) for c in obj["chains"])
        return cls(chains, obj["kind"], Triple.from_json(obj["seed"]))


@dataclass
class NMCSConfig:
    max_attempts: int = 3
    max_hops: int = 4
    alias_label_prob: float = 0.5
    locality_retry_cap: int = 32

    def __post_init__(self) -> None:
        if self.max_attempts < 1 or self.max_hops < 1:
            raise ValueError("max_attempts and max_hops must be >= 1")
        if not 0.0 <= self.alias_label_prob <= 1.0:
            raise ValueError("alias_label_prob must be in [0, 1]")


def _pick(ids: np.ndarray, idx: StructuralIndex, rng: np.random.Generator) -> Triple:
    return idx.triple(int(ids[rng.integers(len(ids))]))


def sample_edit_triple(idx: StructuralIndex, s: str, rng: np.random.Generator) -> Triple | None:
    ids = idx.head_ids(s)
    if not len(ids):
        return None
    return _pick(ids, idx, rng)


def sample_locality_seed(t_edit: Triple, idx: StructuralIndex, rng: np.random.Generator,
                         retry_cap: int = 32) -> Triple:
    """Draw a locality seed crossing the edit triple at its subject, relation, object or nowhere."""
    options: list[tuple[str, str | None]] = [("entity", t_edit.head)]
    if t_edit.tail.is_item:
        options.append(("entity", t_edit.tail.payload[0]))
    options += [("relation", t_edit.relation), ("random", None)]
    n_entities = len(idx.entity_ids)
    for _ in range(retry_cap):
        kind, x = options[rng.integers(len(options))]
        if kind == "relation":
            ids = idx.relation_ids_of(x)
        else:
            if kind == "random":
                if not n_entities:
                    break
                x = idx.entity_ids[rng.integers(n_entities)]
            ids = idx.head_ids(x) if rng.integers(2) == 0 else idx.tail_ids(x)
        if not len(ids):
            continue
        t = _pick(ids, idx, rng)
        if t != t_edit:
            return t
    raise NoSeedError(f"no locality seed for {t_edit!r} after {retry_cap} draws")


def _grow(t0: Triple, exclude: set[Triple], cfg: NMCSConfig, idx: StructuralIndex,
          rng: np.random.Generator) -> tuple[list[Triple], list[Node]]:
    """Phase one: a simple path of at most ``max_hops`` triples around ``t0``.

    Returns the path triples and the added nodes in insertion order.
    """
    path = [t0]
    added: dict[Node, None] = {t0.head: None, tail_node(t0): None}
    ends: list[Node] = [t0.head]
    if t0.tail.is_item:
        ends.append(t0.tail.payload[0])
    while len(path) < cfg.max_hops and ends:
        e = ends[rng.integers(len(ends))]
        accepted = None
        for _ in range(cfg.max_attempts):
            from_tail = rng.integers(2) == 1
            ids = idx.tail_ids(e) if from_tail else idx.head_ids(e)
            if not len(ids):
                continue
            t = _pick(ids, idx, rng)
            if t in exclude:
                continue
            hit = {n for n in (t.head, tail_node(t)) if n in added}
            if hit == {e}:
                accepted = (t, from_tail)
                break
        ends.remove(e)
        if accepted is None:
            continue
        t, from_tail = accepted
        path.append(t)
        if from_tail:
            added[t.head] = None
            ends.append(t.head)
        else:
            new = tail_node(t)
            added[new] = None
            if t.tail.is_item:
                ends.append(new)
    return path, list(added)


def _extend(first: Triple, target: Node, incident: dict[Node, list[Triple]],
            idx: StructuralIndex) -> list[Triple] | None:
    """Walk outward from ``target`` through ``first`` until an end or an ambiguous hop.

    Returns None when ``first`` itself leads to a literal, which cannot start a chain.
    """
    if isinstance(other_end(first, target), LiteralNode):
        return None
    chain = [first]
    current = target
    while True:
        last = chain[-1]
        current = other_end(last, current)
        around = incident[current]
        if len(around) == 1:
            break
        t1, t2 = around
        t = t1 if t1 != last else t2
        if current == t.head:
            # read toward the target this hop goes tail -> head: the head must be unique
            if idx.fanin(t.relation, t.tail) > 1 or not t.tail.is_item:
                break
        elif idx.fanout(t.head, t.relation) > 1:
            break
        chain.append(t)
    return chain


def nmcs_sample(t0: Triple, exclude: Iterable[Triple], cfg: NMCSConfig, idx: StructuralIndex,
                rng: np.random.Generator, kind: str = "generality") -> ChainSet | None:
    exclude = set(exclude)
    if t0 in exclude:
        raise ValueError("seed triple is excluded")
    path, added = _grow(t0, exclude, cfg, idx, rng)
    incident: dict[Node, list[Triple]] = {}
    for t in path:
        incident.setdefault(t.head, []).append(t)
        incident.setdefault(tail_node(t), []).append(t)
    for i in rng.permutation(len(added)):
        target = added[i]
        outward = [_extend(t, target, incident, idx) for t in incident[target]]
        if None in outward:
            continue
        if any(t0 in c for c in outward):
            chains = tuple(Chain.from_path(c, target) for c in outward)
            return ChainSet(chains, kind, t0)
    return None


@dataclass(frozen=True)
class SurfaceChoice:
    subject: str
    subject_surface: str
    subject_is_alias: bool
    answer: str
    answer_surface: str
    answer_is_alias: bool

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "subject_surface": self.subject_surface,
            "subject_is_alias": self.subject_is_alias,
            "answer": self.answer,
            "answer_surface": self.answer_surface,
            "answer_is_alias": self.answer_is_alias,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SurfaceChoice":
        return cls(**obj)


def node_key(node: Node) -> str:
    return node if isinstance(node, str) else node.value.key()


def node_label(store: Store, node: Node) -> str:
    if isinstance(node, LiteralNode):
        v = node.value
        unit = v.payload[1] if v.kind is ValueKind.QUANTITY else None
        return v.render(store.entities[unit].label if unit in store.entities else None)
    return store.entities[node].label


def node_aliases(store: Store, node: Node) -> tuple[str, ...]:
    if isinstance(node, LiteralNode):
        return ()
    return store.entities[node].aliases


def _surface(store: Store, node: Node, rng: np.random.Generator, p_label: float) -> tuple[str, bool]:
    aliases = node_aliases(store, node)
    if not aliases or rng.random() < p_label:
        return node_label(store, node), False
    return aliases[rng.integers(len(aliases))], True


def select_surface_forms(cs: ChainSet, store: Store, rng: np.random.Generator,
                         p_label: float = 0.5) -> SurfaceChoice:
    """Choose label or alias for the chain subject (start of the seed chain) and the answer."""
    subject = cs.seed_chain().start
    s_text, s_alias = _surface(store, subject, rng, p_label)
    a_text, a_alias = _surface(store, cs.target, rng, p_label)
    return SurfaceChoice(node_key(subject), s_text, s_alias, node_key(cs.target), a_text, a_alias)


def canonical_surfaces(cs: ChainSet, store: Store) -> SurfaceChoice:
    subject = cs.seed_chain().start
    return SurfaceChoice(node_key(subject), node_label(store, subject), False,
                         node_key(cs.target), node_label(store, cs.target), False)
