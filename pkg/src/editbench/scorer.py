"""Offline scoring of model prediction logs against an emitted dataset.

Log format: JSON lines, one entry per (record id, sample kind)::

    {"record_id": "...", "sample": "edit" | "generality" | "locality",
     "topk": [["tok", ...], ...],          # post-edit top-k per answer position (k >= 5)
     "target_tokens": ["tok", ...],        # edit / generality cloze answer, producer-tokenized
     "pre_edit_tokens": ["tok", ...],      # locality cloze: pre-edit greedy output
     "top1": "Yes",                        # judgment prompts, post-edit
     "pre_edit_top1": "Yes",               # locality judgment prompts
     "hops_known": [true, false, ...],     # multi-hop prompts: pre-edit knowledge per hop
     "bridged": false}                     # unknown hops were edited in before scoring

Locality hits compare against the recorded pre-edit output, never the dataset answer.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .criteria import tag_string
from .emitter import ChainSample, DatasetRecord

TOP_K = 5
METRICS = ("reliability", "generality", "locality")
_SAMPLE_METRIC = {"edit": "reliability", "generality": "generality", "locality": "locality"}


class ScoringError(ValueError):
    pass


class EmptyReportError(ScoringError):
    pass


@dataclass(frozen=True)
class SampleScore:
    hit: int | None  # None when not scorable
    bridged: bool = False

    @property
    def scorable(self) -> bool:
        return self.hit is not None


def _cloze_hit(expected: list, topk: list) -> int:
    if not isinstance(expected, list) or not expected:
        raise ScoringError("answer token list is empty or missing")
    if not isinstance(topk, list) or len(topk) < len(expected):
        raise ScoringError("fewer top-k lists than answer positions")
    for tok, cands in zip(expected, topk):
        if not isinstance(cands, list) or len(cands) < TOP_K:
            raise ScoringError(f"top-k list shorter than {TOP_K}")
        if tok not in cands[:TOP_K]:
            return 0
    return 1


def score_sample(sample_kind: str, sample: ChainSample | None, entry: dict, edit_triple=None) -> SampleScore:
    """Score one log entry. ``sample`` is None for the edit sample."""
    if sample_kind == "edit":
        return SampleScore(_cloze_hit(entry.get("target_tokens"), entry.get("topk")))
    if sample is None:
        raise ScoringError(f"no {sample_kind} sample to score")
    bridged = bool(entry.get("bridged", False))
    if sample.hops >= 2:
        known = entry.get("hops_known")
        triples = sample.chain_set.triples()
        if not isinstance(known, list) or len(known) != len(triples):
            raise ScoringError("multi-hop entry needs one hops_known flag per hop")
        unknown = [k for k, t in zip(known, triples) if t != edit_triple and not k]
        if unknown and not bridged:
            return SampleScore(None, bridged=False)
    if sample.judgment:
        top1 = entry.get("top1")
        if not isinstance(top1, str):
            raise ScoringError("judgment entry needs top1")
        if sample_kind == "locality":
            expected = entry.get("pre_edit_top1")
            if not isinstance(expected, str):
                raise ScoringError("locality judgment entry needs pre_edit_top1")
        else:
            expected = sample.answer
        return SampleScore(int(top1 == expected), bridged)
    if sample_kind == "locality":
        return SampleScore(_cloze_hit(entry.get("pre_edit_tokens"), entry.get("topk")), bridged)
    return SampleScore(_cloze_hit(entry.get("target_tokens"), entry.get("topk")), bridged)


@dataclass
class _Tally:
    hits: int = 0
    scorable: int = 0

    def add(self, hit: int) -> None:
        self.hits += hit
        self.scorable += 1

    @property
    def percent(self) -> float | None:
        return 100.0 * self.hits / self.scorable if self.scorable else None


@dataclass
class ScoreReport:
    reliability: float | None
    generality: float | None
    locality: float | None
    counts: dict = field(default_factory=dict)
    by_domain: dict = field(default_factory=dict)
    by_criteria: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "reliability": self.reliability,
            "generality": self.generality,
            "locality": self.locality,
            "counts": self.counts,
            "by_domain": self.by_domain,
            "by_criteria": self.by_criteria,
            "diagnostics": self.diagnostics,
        }


def read_log(lines: Iterable[str]) -> list[dict]:
    return [json.loads(line) for line in lines if line.strip()]


def score_dataset(records: Iterable[DatasetRecord], log: Iterable[dict]) -> ScoreReport:
    by_id = {r.id: r for r in records}
    overall = {m: _Tally() for m in METRICS}
    domains: dict[str, dict[str, _Tally]] = defaultdict(lambda: {m: _Tally() for m in METRICS})
    criteria: dict[str, dict[str, _Tally]] = {"generality": defaultdict(_Tally), "locality": defaultdict(_Tally)}
    not_scorable = Counter()
    bridged = Counter()
    diagnostics = Counter()
    matched = 0
    for entry in log:
        rec = by_id.get(entry.get("record_id"))
        kind = entry.get("sample")
        if rec is None:
            diagnostics["unknown-record"] += 1
            continue
        if kind not in _SAMPLE_METRIC:
            diagnostics["unknown-sample-kind"] += 1
            continue
        matched += 1
        sample = None if kind == "edit" else getattr(rec, kind)
        try:
            result = score_sample(kind, sample, entry, rec.edit.triple)
        except ScoringError:
            diagnostics["malformed-entry"] += 1
            continue
        metric = _SAMPLE_METRIC[kind]
        if not result.scorable:
            not_scorable[metric] += 1
            continue
        if result.bridged:
            bridged[metric] += 1
        overall[metric].add(result.hit)
        domains[rec.domain][metric].add(result.hit)
        if sample is not None:
            criteria[kind][tag_string(sample.labels)].add(result.hit)
    if not matched:
        raise EmptyReportError("no log entry matches a dataset record")
    counts = {m: {"hits": overall[m].hits, "scorable": overall[m].scorable,
                  "not_scorable": not_scorable[m], "bridged": bridged[m]} for m in METRICS}
    return ScoreReport(
        overall["reliability"].percent,
        overall["generality"].percent,
        overall["locality"].percent,
        counts,
        {d: {m: t[m].percent for m in METRICS} | {"scorable": {m: t[m].scorable for m in METRICS}}
         for d, t in sorted(domains.items())},
        {k: {tag: t.percent for tag, t in sorted(v.items())} for k, v in criteria.items()},
        dict(sorted(diagnostics.items())),
    )
