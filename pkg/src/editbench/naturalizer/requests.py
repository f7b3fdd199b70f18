"""Prompt construction for the three generation templates (edit, single chain, merge)."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import cache
from importlib import resources

from ..index import Triple
from ..kg import Store
from ..nmcs import Chain, ChainSet, Direction, LiteralNode, node_aliases, node_label, tail_node

DEFAULT_TEMPERATURE = 0.5


class Template(str, enum.Enum):
    EDIT = "edit"
    SINGLE_CHAIN = "single-chain"
    DOUBLE_CHAIN = "double-chain"  # the merge step of a double chain


_FILES = {Template.EDIT: "edit", Template.SINGLE_CHAIN: "single_chain", Template.DOUBLE_CHAIN: "merge"}

REQUIRED_TAGS = {
    Template.EDIT: ("<Cloze Prefix>", "<Cloze Prefix End>", "<Cloze>", "<Cloze End>", "<Generation End>"),
    Template.SINGLE_CHAIN: ("<Knowledge Chain>", "<Knowledge Chain End>", "<Multi-hop Cloze Prefix>",
                            "<Multi-hop Cloze Prefix End>", "<Multi-hop Cloze>", "<Multi-hop Cloze End>",
                            "<Generation End>"),
    Template.DOUBLE_CHAIN: ("<Merged Prefix>", "<Merged Prefix End>", "<Generation End>"),
}


class UnresolvableEntityError(KeyError):
    pass


@cache
def _template_text(name: str) -> str:
    return resources.files("editbench.data.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def default_examples(template: Template) -> str:
    return _template_text("examples_" + _FILES[template])


@dataclass(frozen=True)
class GenerationRequest:
    template: Template
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    reverse: tuple[bool, ...] = field(default=())  # per hop, single-chain only

    def __post_init__(self) -> None:
        missing = [t for t in REQUIRED_TAGS[self.template] if t not in self.prompt]
        if missing:
            raise ValueError(f"prompt lacks required tags {missing}")

    @property
    def hops(self) -> int:
        return len(self.reverse)

    def digest(self) -> str:
        """Key used by the mock endpoint fixture format."""
        h = hashlib.sha256()
        h.update(f"{self.template.value}\n{self.temperature!r}\n".encode())
        h.update(self.prompt.encode("utf-8"))
        return h.hexdigest()


def _label(store: Store, node) -> str:
    try:
        return node_label(store, node)
    except KeyError as exc:
        raise UnresolvableEntityError(f"no label for {node!r}") from exc


def _entity_block(store: Store, node) -> str:
    label = _label(store, node)
    if isinstance(node, LiteralNode):
        return f"[{label}, {node.value.kind.value}, []]"
    e = store.entities[node]
    return f"[{label}, {e.description}, [{', '.join(e.aliases)}]]"


def _relation_block(store: Store, pid: str) -> str:
    p = store.properties.get(pid)
    if p is None:
        raise UnresolvableEntityError(f"no property {pid}")
    return f"[{p.label}, {p.description}]"


def edit_request(t: Triple, store: Store, examples: str | None = None,
                 temperature: float = DEFAULT_TEMPERATURE) -> GenerationRequest:
    text = _template_text("edit").format(
        examples=default_examples(Template.EDIT) if examples is None else examples,
        head=_entity_block(store, t.head),
        relation=_relation_block(store, t.relation),
        tail=_entity_block(store, tail_node(t)),
    )
    return GenerationRequest(Template.EDIT, text, temperature)


def chain_request(chain: Chain, store: Store, examples: str | None = None,
                  temperature: float = DEFAULT_TEMPERATURE,
                  surfaces: dict[str, str] | None = None) -> GenerationRequest:
    """``surfaces`` maps entity ids to the surface form to show instead of the label."""
    surfaces = surfaces or {}

    def show(node) -> str:
        if isinstance(node, str) and node in surfaces:
            return surfaces[node]
        return _label(store, node)

    blocks = []
    reverse = []
    for i, hop in enumerate(chain.hops, 1):
        t = hop.triple
        rev = hop.direction is Direction.BACKWARD
        reverse.append(rev)
        blocks.append(
            f"<Knowledge {i}>\n\n"
            f"<Head Entity> {show(t.head)}\n\n"
            f"<Relation> [{store.property_label(t.relation)}, {rev}]\n\n"
            f"<Tail Entity> {show(tail_node(t))}"
        )
    text = _template_text("single_chain").format(
        examples=default_examples(Template.SINGLE_CHAIN) if examples is None else examples,
        chain="\n\n".join(blocks),
    )
    return GenerationRequest(Template.SINGLE_CHAIN, text, temperature, tuple(reverse))


def merge_request(prefix1: str, prefix2: str, answer: str, examples: str | None = None,
                  temperature: float = DEFAULT_TEMPERATURE) -> GenerationRequest:
    text = _template_text("merge").format(
        examples=default_examples(Template.DOUBLE_CHAIN) if examples is None else examples,
        prefix1=prefix1, prefix2=prefix2, answer=answer,
    )
    return GenerationRequest(Template.DOUBLE_CHAIN, text, temperature)


def build_request(item: ChainSet | Triple, store: Store, examples: dict[Template, str] | None = None,
                  temperature: float = DEFAULT_TEMPERATURE,
                  surfaces: dict[str, str] | None = None) -> list[GenerationRequest]:
    """Requests for an edit triple (one) or a chain set (one per chain).

    A double chain additionally needs a merge request, which can only be built
    from the two chain outputs; see :func:`merge_request`.
    """
    examples = examples or {}
    if isinstance(item, Triple):
        return [edit_request(item, store, examples.get(Template.EDIT), temperature)]
    return [chain_request(c, store, examples.get(Template.SINGLE_CHAIN), temperature, surfaces)
            for c in item.chains]


def answer_surfaces(store: Store, node) -> tuple[str, ...]:
    return (node_label(store, node),) + tuple(node_aliases(store, node))
