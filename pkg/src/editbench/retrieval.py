"""Domain keyword retrieval and initial sampling weights."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .index import Indexes
from .kg import Entity
from .text import id_sort_key, tokenize

DEFAULT_POOL_SIZE = 10_000


@dataclass(frozen=True)
class DomainSpec:
    sector: str
    name: str
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError(f"domain {self.name!r} has no keywords")
        normalized = tuple(dict.fromkeys(k.strip().lower() for k in self.keywords if k.strip()))
        object.__setattr__(self, "keywords", normalized)


@dataclass(frozen=True)
class ScoredEntity:
    id: str
    es: float
    em: int

    @property
    def iw(self) -> float:
        return self.es * self.em

    def to_json(self) -> dict:
        return {"id": self.id, "es": self.es, "em": self.em, "iw": self.iw}

    @classmethod
    def from_json(cls, obj: dict) -> "ScoredEntity":
        return cls(obj["id"], obj["es"], obj["em"])


def load_domains(path: str | Path | None = None) -> list[DomainSpec]:
    """Read a sectors -> domains -> keywords document. ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("editbench.data").joinpath("domains.yaml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    out = []
    for sector in doc["sectors"]:
        for dom in sector["domains"]:
            out.append(DomainSpec(sector["name"], dom["name"], tuple(dom["keywords"])))
    return out


def find_domain(domains: list[DomainSpec], name: str) -> DomainSpec:
    for d in domains:
        if d.name.lower() == name.lower():
            return d
    raise KeyError(f"unknown domain {name!r}")


def _contains_phrase(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    if n == 0 or n > len(haystack):
        return False
    first = needle[0]
    for i in range(len(haystack) - n + 1):
        if haystack[i] == first and haystack[i:i + n] == needle:
            return True
    return False


def exact_match_count(e: Entity, keywords) -> int:
    """Number of distinct keywords found as whole-token phrases in the description."""
    desc = tokenize(e.description)
    if not desc:
        return 0
    return sum(1 for k in keywords if _contains_phrase(desc, tokenize(k)))


def retrieve_domain_entities(idx: Indexes, domain: DomainSpec, k: int,
                             pool_size: int = DEFAULT_POOL_SIZE) -> list[ScoredEntity]:
    best: dict[str, float] = {}
    for kw in domain.keywords:
        for eid, score in idx.search_text(kw, pool_size):
            if score > best.get(eid, -1.0):
                best[eid] = score
    scored = []
    for eid, es in best.items():
        em = exact_match_count(idx.store.entities[eid], domain.keywords)
        if em > 0:
            scored.append(ScoredEntity(eid, es, em))
    scored.sort(key=lambda s: (-s.iw, id_sort_key(s.id)))
    return scored[:k]
