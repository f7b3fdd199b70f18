"""Dataset records, JSON-lines emission and corpus statistics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .criteria import classify_generality, classify_locality, tag_string
from .index import Triple
from .naturalizer import NaturalizedSample
from .nmcs import ChainSet, LiteralNode, SurfaceChoice

SCHEMA_VERSION = 1


class EmitError(IOError):
    def __init__(self, message: str, written: int):
        super().__init__(f"{message} after {written} records")
        self.written = written


@dataclass
class EditSample:
    prompt: str
    answer: str
    subject_surface: str
    triple: Triple

    def to_json(self) -> dict:
        return {"prompt": self.prompt, "answer": self.answer, "subject_surface": self.subject_surface,
                "triple": self.triple.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "EditSample":
        return cls(obj["prompt"], obj["answer"], obj["subject_surface"], Triple.from_json(obj["triple"]))


@dataclass
class ChainSample:
    labels: frozenset[str]
    chain_set: ChainSet
    surfaces: SurfaceChoice
    text: NaturalizedSample
    flags: dict = field(default_factory=dict)

    @property
    def prompt(self) -> str:
        return self.text.prefix

    @property
    def answer(self) -> str:
        return self.text.answer

    @property
    def judgment(self) -> bool:
        return self.chain_set.is_double

    @property
    def hops(self) -> int:
        return self.chain_set.total_hops

    def to_json(self) -> dict:
        return {
            "prompt": self.prompt,
            "answer": self.answer,
            "judgment": self.judgment,
            "labels": tag_string(self.labels),
            "structure": structure_key(self.chain_set),
            "chain_set": self.chain_set.to_json(),
            "surfaces": self.surfaces.to_json(),
            "text": self.text.to_json(),
            "flags": dict(sorted(self.flags.items())),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainSample":
        labels = frozenset(obj["labels"].split("+")) if obj["labels"] else frozenset()
        return cls(labels, ChainSet.from_json(obj["chain_set"]), SurfaceChoice.from_json(obj["surfaces"]),
                   NaturalizedSample.from_json(obj["text"]), obj.get("flags", {}))


@dataclass
class DatasetRecord:
    id: str
    sector: str
    domain: str
    edit: EditSample
    generality: ChainSample
    locality: ChainSample
    seed: int
    naturalizer: str

    def provenance(self) -> dict:
        entities, properties = set(), set()
        triples = [self.edit.triple] + self.generality.chain_set.triples() + self.locality.chain_set.triples()
        for t in triples:
            entities.add(t.head)
            if t.tail.is_item:
                entities.add(t.tail.payload[0])
            properties.add(t.relation)
        return {"entities": sorted(entities), "properties": sorted(properties), "seed": self.seed,
                "naturalizer": self.naturalizer}

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "sector": self.sector,
            "domain": self.domain,
            "edit": self.edit.to_json(),
            "generality": self.generality.to_json(),
            "locality": self.locality.to_json(),
            "provenance": self.provenance(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetRecord":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema {obj.get('schema_version')}")
        prov = obj["provenance"]
        return cls(obj["id"], obj["sector"], obj["domain"], EditSample.from_json(obj["edit"]),
                   ChainSample.from_json(obj["generality"]), ChainSample.from_json(obj["locality"]),
                   prov["seed"], prov["naturalizer"])

    def relabel(self) -> tuple[frozenset[str], frozenset[str]]:
        """Labels re-derived from the stored chains and surfaces."""
        t = self.edit.triple
        return (classify_generality(self.generality.chain_set, t, self.generality.surfaces),
                classify_locality(self.locality.chain_set, t))


def structure_key(cs: ChainSet) -> str:
    return f"{cs.total_hops}-hop/{'double' if cs.is_double else 'single'}"


def dumps_record(rec: DatasetRecord) -> str:
    return json.dumps(rec.to_json(), ensure_ascii=False)


def emit_dataset(records: Iterable[DatasetRecord], sink: IO[str]) -> int:
    written = 0
    for rec in records:
        line = dumps_record(rec) + "\n"
        try:
            sink.write(line)
        except (OSError, ValueError) as exc:
            raise EmitError(f"write failed: {exc}", written) from exc
        written += 1
    try:
        sink.flush()
    except (OSError, ValueError) as exc:
        raise EmitError(f"flush failed: {exc}", written) from exc
    return written


def read_dataset(lines: Iterable[str]) -> Iterator[DatasetRecord]:
    for line in lines:
        if line.strip():
            yield DatasetRecord.from_json(json.loads(line))


def _kind(cs: ChainSet) -> str:
    target = cs.target
    return target.value.kind.value if isinstance(target, LiteralNode) else "item"


@dataclass
class CorpusStats:
    total: int = 0
    by_domain: Counter = field(default_factory=Counter)
    by_structure: dict[str, Counter] = field(default_factory=lambda: {"generality": Counter(), "locality": Counter()})
    by_criteria: dict[str, Counter] = field(default_factory=lambda: {"generality": Counter(), "locality": Counter()})
    by_value_kind: dict[str, Counter] = field(
        default_factory=lambda: {"edit": Counter(), "generality": Counter(), "locality": Counter()})

    def add(self, rec: DatasetRecord) -> None:
        self.total += 1
        self.by_domain[rec.domain] += 1
        self.by_value_kind["edit"][rec.edit.triple.tail.kind.value] += 1
        for name, sample in (("generality", rec.generality), ("locality", rec.locality)):
            self.by_structure[name][structure_key(sample.chain_set)] += 1
            self.by_criteria[name][tag_string(sample.labels)] += 1
            self.by_value_kind[name][_kind(sample.chain_set)] += 1

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        out = CorpusStats(self.total + other.total, self.by_domain + other.by_domain)
        for attr in ("by_structure", "by_criteria", "by_value_kind"):
            mine, theirs = getattr(self, attr), getattr(other, attr)
            setattr(out, attr, {k: mine[k] + theirs[k] for k in mine})
        return out

    def to_json(self) -> dict:
        srt = lambda c: dict(sorted(c.items()))  # noqa: E731
        return {
            "total": self.total,
            "by_domain": srt(self.by_domain),
            "by_structure": {k: srt(v) for k, v in self.by_structure.items()},
            "by_criteria": {k: srt(v) for k, v in self.by_criteria.items()},
            "by_value_kind": {k: srt(v) for k, v in self.by_value_kind.items()},
        }


def compute_stats(records: Iterable[DatasetRecord]) -> CorpusStats:
    stats = CorpusStats()
    for rec in records:
        stats.add(rec)
    return stats
