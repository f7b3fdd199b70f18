"""Streaming ingestion and cleaning of a Wikidata-style JSON dump.

The upstream export is one JSON array with one entity per line, each line
ending in a comma. Plain JSON-lines input is accepted as well.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import sys
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import BinaryIO, Iterable, Iterator

logger = logging.getLogger(__name__)


class ValueKind(str, enum.Enum):
    ITEM = "item"
    STRING = "string"
    QUANTITY = "quantity"
    TIME = "time"
    MATH = "math"
    GLOBE_COORDINATE = "globe-coordinate"
    MONOLINGUAL_TEXT = "monolingual-text"


# dump datatype name -> stored kind; every other datatype is dropped
DATATYPE_KINDS: dict[str, ValueKind] = {
    "wikibase-item": ValueKind.ITEM,
    "string": ValueKind.STRING,
    "quantity": ValueKind.QUANTITY,
    "time": ValueKind.TIME,
    "math": ValueKind.MATH,
    "globe-coordinate": ValueKind.GLOBE_COORDINATE,
    "monolingualtext": ValueKind.MONOLINGUAL_TEXT,
}


@dataclass(frozen=True, slots=True)
class Value:
    """A claim value. ``payload`` layout depends on ``kind``:

    item ``(entity_id,)``, string/math ``(text,)``, quantity ``(amount, unit|None)``,
    time ``(timestamp, precision)``, globe-coordinate ``(lat, lon)``,
    monolingual-text ``(text, language)``.
    """

    kind: ValueKind
    payload: tuple

    @classmethod
    def item(cls, entity_id: str) -> "Value":
        return cls(ValueKind.ITEM, (entity_id,))

    @classmethod
    def string(cls, text: str) -> "Value":
        return cls(ValueKind.STRING, (text,))

    @property
    def is_item(self) -> bool:
        return self.kind is ValueKind.ITEM

    @property
    def entity_id(self) -> str:
        if self.kind is not ValueKind.ITEM:
            raise ValueError(f"{self.kind.value} value has no entity id")
        return self.payload[0]

    def key(self) -> str:
        """Canonical serialized form, used to key non-item tails."""
        return self.kind.value + ":" + json.dumps(list(self.payload), ensure_ascii=False, separators=(",", ":"))

    def render(self, unit_label: str | None = None) -> str:
        """Human-readable surface text for a literal (or the bare id for items)."""
        kind, p = self.kind, self.payload
        if kind is ValueKind.QUANTITY:
            amount = p[0].lstrip("+")
            unit = unit_label or p[1]
            return f"{amount} {unit}" if unit else amount
        if kind is ValueKind.TIME:
            stamp, precision = p
            date = stamp.lstrip("+").split("T", 1)[0]
            sign = "-" if date.startswith("-") else ""
            parts = date.lstrip("-").split("-")
            keep = 1 if precision <= 9 else 2 if precision == 10 else 3
            return sign + "-".join(parts[:keep])
        if kind is ValueKind.GLOBE_COORDINATE:
            return f"{p[0]:g}, {p[1]:g}"
        return str(p[0])

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "payload": list(self.payload)}

    @classmethod
    def from_json(cls, obj: dict) -> "Value":
        return cls(ValueKind(obj["kind"]), tuple(obj["payload"]))


@dataclass(slots=True)
class Entity:
    id: str
    label: str
    description: str = ""
    aliases: tuple[str, ...] = ()
    claims: tuple[tuple[str, Value], ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "aliases": list(self.aliases),
            "claims": [[pid, v.to_json()] for pid, v in self.claims],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Entity":
        return cls(
            obj["id"],
            obj["label"],
            obj.get("description", ""),
            tuple(obj.get("aliases", ())),
            tuple((pid, Value.from_json(v)) for pid, v in obj.get("claims", ())),
        )


@dataclass(slots=True)
class PropertySpec:
    id: str
    label: str
    description: str
    kind: ValueKind | None
    retained: bool
    datatype: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "kind": self.kind.value if self.kind else None,
            "retained": self.retained,
            "datatype": self.datatype,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PropertySpec":
        kind = ValueKind(obj["kind"]) if obj.get("kind") else None
        return cls(obj["id"], obj["label"], obj.get("description", ""), kind, obj["retained"], obj.get("datatype", ""))


@dataclass(frozen=True, slots=True)
class Skip:
    """Marker for a record that was not projected. ``record_type`` is set when known."""

    reason: str
    record_type: str | None = None


DEFAULT_LOW_UTILITY_KEYWORDS = (
    "point of time",
    "point in time",
    "wikimedia disambiguation page",
    "wikimedia category",
    "wikimedia template",
    "wikimedia list article",
    "wikimedia project page",
    "scholarly article",
)

# string-typed properties whose values are file, gallery or page names
DEFAULT_PROPERTY_BLOCKLIST = ("P373", "P935", "P1472", "P1612")


@dataclass
class CleaningConfig:
    low_utility_keywords: list[str] = field(default_factory=lambda: list(DEFAULT_LOW_UTILITY_KEYWORDS))
    property_blocklist: list[str] = field(default_factory=lambda: list(DEFAULT_PROPERTY_BLOCKLIST))
    language: str = "en"
    filter_descriptions: bool = True

    def __post_init__(self) -> None:
        if self.filter_descriptions and not self.low_utility_keywords:
            raise ValueError("low_utility_keywords must be non-empty when description filtering is enabled")
        self._lowered = tuple(k.lower() for k in self.low_utility_keywords)
        self._blocked = frozenset(self.property_blocklist)

    @property
    def lowered_keywords(self) -> tuple[str, ...]:
        return self._lowered

    def is_blocked(self, pid: str) -> bool:
        return pid in self._blocked


def _lang_text(block: dict | None, lang: str) -> str:
    if not block:
        return ""
    entry = block.get(lang)
    if not entry:
        return ""
    return (entry.get("value") or "").strip()


def _parse_value(datatype: str, datavalue: dict) -> Value | None:
    kind = DATATYPE_KINDS.get(datatype)
    if kind is None:
        return None
    raw = datavalue.get("value")
    if kind is ValueKind.ITEM:
        if not isinstance(raw, dict) or raw.get("entity-type", "item") != "item":
            return None
        eid = raw.get("id") or (f"Q{raw['numeric-id']}" if "numeric-id" in raw else None)
        return Value(kind, (sys.intern(eid),)) if isinstance(eid, str) and eid else None
    if kind in (ValueKind.STRING, ValueKind.MATH):
        return Value(kind, (raw,)) if isinstance(raw, str) and raw else None
    if kind is ValueKind.QUANTITY:
        try:
            amount = Decimal(raw["amount"])
        except (KeyError, TypeError, InvalidOperation):
            return None
        unit = raw.get("unit") or "1"
        unit = None if unit == "1" else unit.rsplit("/", 1)[-1]
        return Value(kind, (str(amount), unit))
    if kind is ValueKind.TIME:
        stamp, precision = raw.get("time"), raw.get("precision")
        if not isinstance(stamp, str) or not isinstance(precision, int):
            return None
        return Value(kind, (stamp, precision))
    if kind is ValueKind.GLOBE_COORDINATE:
        try:
            lat, lon = float(raw["latitude"]), float(raw["longitude"])
        except (KeyError, TypeError, ValueError):
            return None
        if not (math.isfinite(lat) and math.isfinite(lon)) or abs(lat) > 90 or abs(lon) > 180:
            return None
        return Value(kind, (lat, lon))
    # monolingual text
    if not isinstance(raw, dict) or not raw.get("text"):
        return None
    return Value(kind, (raw["text"], raw.get("language", "")))


def _parse_claims(claims: dict) -> tuple[tuple[str, Value], ...]:
    out: list[tuple[str, Value]] = []
    for pid, statements in claims.items():
        for st in statements:
            if st.get("rank") == "deprecated":
                continue
            snak = st.get("mainsnak") or {}
            if snak.get("snaktype") != "value":
                continue
            dv = snak.get("datavalue")
            if not dv:
                continue
            value = _parse_value(snak.get("datatype", ""), dv)
            if value is not None:
                out.append((sys.intern(snak.get("property", pid)), value))
    return tuple(out)


def decode_line(line: str | bytes) -> dict | None:
    """Strip dump framing from one line. Returns None for array brackets and blank lines."""
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    s = line.strip()
    if s.endswith(","):
        s = s[:-1].rstrip()
    if not s or s in ("[", "]"):
        return None
    return json.loads(s)


def parse_entity_record(line: str | bytes, cfg: CleaningConfig | None = None) -> Entity | PropertySpec | Skip | None:
    """Project one dump line onto an Entity or PropertySpec.

    Framing lines (``[``, ``]``, blank) return None. Anything unusable returns a
    Skip with a reason; this function never raises for bad input.
    """
    cfg = cfg or CleaningConfig()
    try:
        obj = decode_line(line)
    except (ValueError, UnicodeDecodeError):
        return Skip("malformed")
    if obj is None:
        return None
    if not isinstance(obj, dict) or not isinstance(obj.get("id"), str) or not obj["id"]:
        return Skip("malformed")
    rtype = obj.get("type")
    if rtype not in ("item", "property"):
        return Skip("unsupported-type", rtype if isinstance(rtype, str) else None)
    try:
        label = _lang_text(obj.get("labels"), cfg.language)
        if not label:
            return Skip("no-english-label", rtype)
        description = _lang_text(obj.get("descriptions"), cfg.language)
        if rtype == "property":
            datatype = obj.get("datatype", "")
            kind = DATATYPE_KINDS.get(datatype)
            retained = kind is not None and not cfg.is_blocked(obj["id"])
            return PropertySpec(obj["id"], label, description, kind, retained, datatype)
        aliases: dict[str, None] = {}
        for a in (obj.get("aliases") or {}).get(cfg.language, ()):
            text = (a.get("value") or "").strip()
            if text:
                aliases.setdefault(text, None)
        claims = _parse_claims(obj.get("claims") or {})
    except (AttributeError, TypeError, KeyError):
        return Skip("malformed", rtype)
    return Entity(sys.intern(obj["id"]), label, description, tuple(aliases), claims)


def entity_passes_filter(e: Entity, cfg: CleaningConfig) -> bool:
    if not e.label.strip():
        return False
    if not cfg.filter_descriptions or not e.description:
        return True
    desc = e.description.lower()
    return not any(k in desc for k in cfg.lowered_keywords)


class IngestionError(RuntimeError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass
class IngestReport:
    records_seen: int = 0
    entities_retained: int = 0
    properties_seen: int = 0
    properties_retained: int = 0
    properties_rejected: int = 0
    skipped: Counter = field(default_factory=Counter)

    @property
    def skip_count(self) -> int:
        return sum(self.skipped.values())

    def to_json(self) -> dict:
        return {
            "records_seen": self.records_seen,
            "entities_retained": self.entities_retained,
            "properties_seen": self.properties_seen,
            "properties_retained": self.properties_retained,
            "properties_rejected": self.properties_rejected,
            "skipped": dict(sorted(self.skipped.items())),
        }


class Store:
    """Cleaned graph. Read-only once built."""

    def __init__(self, entities: dict[str, Entity] | None = None, properties: dict[str, PropertySpec] | None = None):
        self.entities: dict[str, Entity] = entities if entities is not None else {}
        self.properties: dict[str, PropertySpec] = properties if properties is not None else {}

    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, eid: str) -> bool:
        return eid in self.entities

    def entity(self, eid: str) -> Entity:
        return self.entities[eid]

    def is_retained(self, pid: str) -> bool:
        p = self.properties.get(pid)
        return p is not None and p.retained

    def property_label(self, pid: str) -> str:
        p = self.properties.get(pid)
        return p.label if p else pid

    def to_jsonl(self) -> Iterator[str]:
        for p in self.properties.values():
            yield json.dumps({"type": "property", **p.to_json()}, ensure_ascii=False, sort_keys=True)
        for e in self.entities.values():
            yield json.dumps({"type": "item", **e.to_json()}, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_jsonl(cls, lines: Iterable[str]) -> "Store":
        store = cls()
        for line in lines:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.pop("type") == "property":
                p = PropertySpec.from_json(obj)
                store.properties[p.id] = p
            else:
                e = Entity.from_json(obj)
                store.entities[e.id] = e
        return store


def _lines(source: BinaryIO) -> Iterator[tuple[int, bytes]]:
    offset = 0
    while True:
        try:
            line = source.readline()
        except (OSError, EOFError) as exc:
            raise IngestionError(f"unreadable dump stream: {exc}", offset) from exc
        if not line:
            return
        yield offset, line
        offset += len(line)


def load_dump(source: BinaryIO, cfg: CleaningConfig | None = None) -> tuple[Store, IngestReport]:
    """Stream ``source`` line by line into a Store; memory is bounded by the cleaned graph."""
    cfg = cfg or CleaningConfig()
    store = Store()
    report = IngestReport()
    for _, line in _lines(source):
        rec = parse_entity_record(line, cfg)
        if rec is None:
            continue
        report.records_seen += 1
        if isinstance(rec, Skip):
            report.skipped[rec.reason] += 1
            if rec.record_type == "property":
                report.properties_seen += 1
                report.properties_rejected += 1
            continue
        if isinstance(rec, PropertySpec):
            report.properties_seen += 1
            if rec.retained:
                report.properties_retained += 1
            else:
                report.properties_rejected += 1
            store.properties[rec.id] = rec
            continue
        if not entity_passes_filter(rec, cfg):
            report.skipped["low-utility-description"] += 1
            continue
        if rec.id in store.entities:
            report.skipped["duplicate-id"] += 1
            continue
        store.entities[rec.id] = rec
        report.entities_retained += 1
    logger.info("ingested %d records: %d entities, %d/%d properties retained",
                report.records_seen, report.entities_retained, report.properties_retained, report.properties_seen)
    return store, report
