"""Text retrieval and structural triple lookups over a cleaned Store.

Both indexes keep their postings in flat numpy arrays (CSR layout) rather than
per-triple Python objects, so a multi-million-triple graph fits in memory.
Triple objects are materialized on lookup from the owning entity's claims.
"""

from __future__ import annotations

import io
import json
import math
import zipfile
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .kg import Store, Value
from .text import id_sort_key, tokenize

SNAPSHOT_FORMAT = "editbench-index"
SNAPSHOT_VERSION = 2

LABEL_WEIGHT = 2.0
DESCRIPTION_WEIGHT = 1.0
BM25_K1 = 1.2
BM25_B = 0.75


@dataclass(frozen=True, slots=True)
class Triple:
    head: str
    relation: str
    tail: Value

    def to_json(self) -> dict:
        return {"head": self.head, "relation": self.relation, "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Triple":
        return cls(obj["head"], obj["relation"], Value.from_json(obj["tail"]))

    def __repr__(self) -> str:
        tail = self.tail.entity_id if self.tail.is_item else self.tail.key()
        return f"({self.head}, {self.relation}, {tail})"


def _rank_by_id(ids: list[str]) -> np.ndarray:
    order = sorted(range(len(ids)), key=lambda i: id_sort_key(ids[i]))
    rank = np.empty(len(ids), dtype=np.int64)
    rank[np.asarray(order, dtype=np.int64)] = np.arange(len(ids), dtype=np.int64)
    return rank


class TextIndex:
    """BM25 over label and description tokens, label occurrences weighted 2.0, description 1.0."""

    def __init__(self, doc_ids: list[str], tokens: list[str], offsets: np.ndarray, docs: np.ndarray,
                 tf: np.ndarray, doc_len: np.ndarray):
        self.doc_ids = doc_ids
        self.tokens = tokens
        self._token_index = {t: i for i, t in enumerate(tokens)}
        self.offsets = offsets
        self.docs = docs
        self.tf = tf
        self.doc_len = doc_len
        self.doc_rank = _rank_by_id(doc_ids)
        self.avg_len = float(doc_len.mean()) if len(doc_len) else 0.0

    @classmethod
    def build(cls, store: Store) -> "TextIndex":
        doc_ids = list(store.entities)
        token_ids: dict[str, int] = {}
        col_tok, col_doc, col_tf = array("q"), array("q"), array("d")
        doc_len = np.zeros(len(doc_ids), dtype=np.float64)
        for d, eid in enumerate(doc_ids):
            e = store.entities[eid]
            weights: dict[str, float] = {}
            label_toks = tokenize(e.label)
            desc_toks = tokenize(e.description)
            for t in label_toks:
                weights[t] = weights.get(t, 0.0) + LABEL_WEIGHT
            for t in desc_toks:
                weights[t] = weights.get(t, 0.0) + DESCRIPTION_WEIGHT
            doc_len[d] = LABEL_WEIGHT * len(label_toks) + DESCRIPTION_WEIGHT * len(desc_toks)
            for t, w in weights.items():
                tid = token_ids.get(t)
                if tid is None:
                    tid = token_ids[t] = len(token_ids)
                col_tok.append(tid)
                col_doc.append(d)
                col_tf.append(w)
        tok = np.frombuffer(col_tok, dtype=np.int64) if col_tok else np.zeros(0, np.int64)
        doc = np.frombuffer(col_doc, dtype=np.int64) if col_doc else np.zeros(0, np.int64)
        tf = np.frombuffer(col_tf, dtype=np.float64) if col_tf else np.zeros(0, np.float64)
        # renumber tokens alphabetically so the snapshot does not depend on insertion order
        vocab = sorted(token_ids)
        remap = np.empty(len(vocab), dtype=np.int64)
        for new, t in enumerate(vocab):
            remap[token_ids[t]] = new
        tok = remap[tok] if len(tok) else tok
        rank = _rank_by_id(doc_ids)
        order = np.lexsort((rank[doc], tok)) if len(tok) else np.zeros(0, np.int64)
        offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
        if len(tok):
            np.cumsum(np.bincount(tok, minlength=len(vocab)), out=offsets[1:])
        return cls(doc_ids, vocab, offsets, doc[order].astype(np.int32), tf[order].astype(np.float32), doc_len)

    def __len__(self) -> int:
        return len(self.doc_ids)

    def search(self, query: str, k: int) -> list[tuple[str, float]]:
        """Top-k documents by BM25, descending; ties broken by entity id ascending."""
        if k <= 0:
            return []
        q = sorted(set(tokenize(query)))
        n = len(self.doc_ids)
        parts_doc, parts_score = [], []
        for t in q:
            tid = self._token_index.get(t)
            if tid is None:
                continue
            lo, hi = self.offsets[tid], self.offsets[tid + 1]
            docs = self.docs[lo:hi]
            tf = self.tf[lo:hi].astype(np.float64)
            df = hi - lo
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            norm = BM25_K1 * (1.0 - BM25_B + BM25_B * self.doc_len[docs] / self.avg_len)
            parts_doc.append(docs)
            parts_score.append(idf * tf * (BM25_K1 + 1.0) / (tf + norm))
        if not parts_doc:
            return []
        docs = np.concatenate(parts_doc)
        uniq, inverse = np.unique(docs, return_inverse=True)
        scores = np.bincount(inverse, weights=np.concatenate(parts_score))
        order = np.lexsort((self.doc_rank[uniq], -scores))[:k]
        return [(self.doc_ids[uniq[i]], float(scores[i])) for i in order]


class StructuralIndex:
    """Head, tail and relation lookups plus (head, relation) / (relation, tail) fan counts.

    Triples are encoded as parallel int arrays: head entity index, relation
    index, tail code (entity index for items, ``-(literal_id + 1)`` otherwise)
    and the claim position inside the head entity. Not indexed: item claims
    whose target is missing from the store, self-loops, claims on non-retained
    properties and claims whose value kind disagrees with the property.
    """

    def __init__(self, store: Store, entity_ids: list[str], relation_ids: list[str], literal_keys: list[str],
                 head: np.ndarray, rel: np.ndarray, tail: np.ndarray, claim_pos: np.ndarray,
                 _maps: tuple[dict, dict] | None = None):
        self.store = store
        self.entity_ids = entity_ids
        self.relation_ids = relation_ids
        self.literal_keys = literal_keys
        if _maps is None:
            _maps = ({e: i for i, e in enumerate(entity_ids)}, {k: i for i, k in enumerate(literal_keys)})
        self._eidx, self._lidx = _maps
        self._ridx = {r: i for i, r in enumerate(relation_ids)}
        self.head, self.rel, self.tail, self.claim_pos = head, rel, tail, claim_pos
        n_ent = len(entity_ids)
        self._head_offsets = np.zeros(n_ent + 1, dtype=np.int64)
        if len(head):
            np.cumsum(np.bincount(head, minlength=n_ent), out=self._head_offsets[1:])
        items = np.flatnonzero(tail >= 0)
        self._tail_perm = items[np.argsort(tail[items], kind="stable")]
        self._tail_sorted = tail[self._tail_perm]
        self._rel_perm = np.lexsort((tail, rel)) if len(rel) else np.zeros(0, np.int64)
        self._rel_sorted = rel[self._rel_perm]
        self._rel_tail_sorted = tail[self._rel_perm]

    @classmethod
    def build(cls, store: Store) -> "StructuralIndex":
        entity_ids = list(store.entities)
        eidx = {e: i for i, e in enumerate(entity_ids)}
        relation_ids = sorted((p.id for p in store.properties.values() if p.retained), key=id_sort_key)
        ridx = {r: i for i, r in enumerate(relation_ids)}
        literals: dict[str, int] = {}
        col_head, col_rel, col_tail, col_pos = array("q"), array("q"), array("q"), array("q")
        for h, eid in enumerate(entity_ids):
            seen = set()
            for pos, (pid, value) in enumerate(store.entities[eid].claims):
                r = ridx.get(pid)
                if r is None or store.properties[pid].kind is not value.kind:
                    continue
                if value.is_item:
                    code = eidx.get(value.payload[0])
                    if code is None or code == h:
                        continue
                else:
                    key = value.key()
                    lit = literals.get(key)
                    if lit is None:
                        lit = literals[key] = len(literals)
                    code = -(lit + 1)
                if (r, code) in seen:
                    continue
                seen.add((r, code))
                col_head.append(h)
                col_rel.append(r)
                col_tail.append(code)
                col_pos.append(pos)
        as_np = lambda a: np.frombuffer(a, dtype=np.int64).copy() if a else np.zeros(0, np.int64)  # noqa: E731
        return cls(store, entity_ids, relation_ids, list(literals), as_np(col_head), as_np(col_rel),
                   as_np(col_tail), as_np(col_pos), (eidx, literals))

    def __len__(self) -> int:
        return len(self.head)

    def triple(self, tid: int) -> Triple:
        eid = self.entity_ids[self.head[tid]]
        pid, value = self.store.entities[eid].claims[self.claim_pos[tid]]
        return Triple(eid, pid, value)

    def triples(self, tids: Iterable[int]) -> tuple[Triple, ...]:
        return tuple(self.triple(int(t)) for t in tids)

    def _tail_code(self, value: Value) -> int | None:
        if value.is_item:
            return self._eidx.get(value.payload[0])
        lit = self._lidx.get(value.key())
        return None if lit is None else -(lit + 1)

    # id-level lookups (numpy slices of triple ids)
    def head_ids(self, eid: str) -> np.ndarray:
        h = self._eidx.get(eid)
        if h is None:
            return np.zeros(0, np.int64)
        return np.arange(self._head_offsets[h], self._head_offsets[h + 1])

    def tail_ids(self, eid: str) -> np.ndarray:
        code = self._eidx.get(eid)
        if code is None:
            return np.zeros(0, np.int64)
        lo, hi = np.searchsorted(self._tail_sorted, [code, code + 1])
        return self._tail_perm[lo:hi]

    def relation_ids_of(self, pid: str) -> np.ndarray:
        r = self._ridx.get(pid)
        if r is None:
            return np.zeros(0, np.int64)
        lo, hi = np.searchsorted(self._rel_sorted, [r, r + 1])
        return self._rel_perm[lo:hi]

    # Triple-level lookups
    def triples_with_head(self, eid: str) -> tuple[Triple, ...]:
        return self.triples(self.head_ids(eid))

    def triples_with_tail(self, eid: str) -> tuple[Triple, ...]:
        return self.triples(self.tail_ids(eid))

    def triples_with_relation(self, pid: str) -> tuple[Triple, ...]:
        return self.triples(self.relation_ids_of(pid))

    def fanout(self, s: str, r: str) -> int:
        ri = self._ridx.get(r)
        if ri is None:
            return 0
        ids = self.head_ids(s)
        return int(np.count_nonzero(self.rel[ids] == ri))

    def fanin(self, r: str, o: Value) -> int:
        ri = self._ridx.get(r)
        code = self._tail_code(o)
        if ri is None or code is None:
            return 0
        lo, hi = np.searchsorted(self._rel_sorted, [ri, ri + 1])
        seg = self._rel_tail_sorted[lo:hi]
        a, b = np.searchsorted(seg, [code, code + 1])
        return int(b - a)


class Indexes:
    """Both indexes over one store, with a numpy ``.npz`` snapshot.

    Snapshot layout (version 2): a zip of ``.npy`` members. Integer and float
    postings are stored as-is; string tables (doc_ids, tokens, entity_ids,
    relation_ids, literal_keys) and the ``meta`` header are UTF-8 JSON held in
    uint8 arrays. Members are written in a fixed order with a fixed timestamp,
    so a given store always serializes to the same bytes. The store itself is
    saved separately.
    """

    def __init__(self, store: Store, text: TextIndex, structural: StructuralIndex):
        self.store = store
        self.text = text
        self.structural = structural

    @classmethod
    def build(cls, store: Store) -> "Indexes":
        return cls(store, TextIndex.build(store), StructuralIndex.build(store))

    def search_text(self, query: str, k: int) -> list[tuple[str, float]]:
        return self.text.search(query, k)

    def _members(self) -> Iterable[tuple[str, np.ndarray]]:
        t, s = self.text, self.structural
        yield "meta", _json_array({"format": SNAPSHOT_FORMAT, "version": SNAPSHOT_VERSION})
        yield "text.doc_ids", _json_array(t.doc_ids)
        yield "text.tokens", _json_array(t.tokens)
        yield "text.offsets", t.offsets
        yield "text.docs", t.docs
        yield "text.tf", t.tf
        yield "text.doc_len", t.doc_len
        yield "structural.entity_ids", _json_array(s.entity_ids)
        yield "structural.relation_ids", _json_array(s.relation_ids)
        yield "structural.literal_keys", _json_array(s.literal_keys)
        for name in ("head", "rel", "tail", "claim_pos"):
            yield f"structural.{name}", getattr(s, name)

    def save(self, target: str | Path | IO[bytes]) -> None:
        with zipfile.ZipFile(target, "w", zipfile.ZIP_STORED, allowZip64=True) as zf:
            for name, arr in self._members():
                info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
                with zf.open(info, "w", force_zip64=True) as fh:
                    np.lib.format.write_array(fh, np.ascontiguousarray(arr), allow_pickle=False)

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, source: str | Path | IO[bytes], store: Store) -> "Indexes":
        try:
            npz = np.load(source, allow_pickle=False)
        except (ValueError, OSError, zipfile.BadZipFile) as exc:
            raise ValueError(f"not an index snapshot: {exc}") from exc
        with npz:
            if "meta" not in npz.files:
                raise ValueError("not an index snapshot: no meta member")
            meta = _from_json_array(npz["meta"])
            if meta.get("format") != SNAPSHOT_FORMAT or meta.get("version") != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported index snapshot: {meta.get('format')} v{meta.get('version')}")
            text = TextIndex(_from_json_array(npz["text.doc_ids"]), _from_json_array(npz["text.tokens"]),
                             npz["text.offsets"], npz["text.docs"], npz["text.tf"], npz["text.doc_len"])
            structural = StructuralIndex(
                store, _from_json_array(npz["structural.entity_ids"]),
                _from_json_array(npz["structural.relation_ids"]),
                _from_json_array(npz["structural.literal_keys"]),
                npz["structural.head"], npz["structural.rel"], npz["structural.tail"], npz["structural.claim_pos"])
        return cls(store, text, structural)


def _json_array(obj) -> np.ndarray:
    return np.frombuffer(json.dumps(obj, ensure_ascii=False, separators=(",", ":")).encode("utf-8"), np.uint8)


def _from_json_array(arr: np.ndarray):
    return json.loads(arr.tobytes().decode("utf-8"))
