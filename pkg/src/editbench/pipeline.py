"""End-to-end record construction: retrieval, head sampling, chain sampling, labelling, naturalization.

Randomness comes from numpy PCG64 streams derived from one integer seed with
``SeedSequence(seed, spawn_key=...)``: ``(domain, 0)`` drives head sampling for a
domain and ``(domain, 1, i)`` drives everything built from its i-th head, so
domains and heads can be processed in any order or concurrently with the same
result.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .criteria import classify_generality, classify_locality, later_hop_collision
from .emitter import ChainSample, DatasetRecord, EditSample
from .index import Indexes, Triple
from .naturalizer import Naturalizer
from .nmcs import (
    ChainSet,
    NoSeedError,
    SurfaceChoice,
    nmcs_sample,
    node_label,
    sample_edit_triple,
    sample_locality_seed,
    select_surface_forms,
)
from .retrieval import DomainSpec, ScoredEntity, retrieve_domain_entities
from .sampler import NoCandidateError, sample_heads

logger = logging.getLogger(__name__)

HEADS_STREAM = 0
RECORD_STREAM = 1
LOCALITY_ATTEMPTS = 8


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


@dataclass
class Draft:
    """A record before naturalization."""

    id: str
    sector: str
    domain: str
    edit: Triple
    generality: ChainSet
    general_surfaces: SurfaceChoice
    locality: ChainSet
    local_surfaces: SurfaceChoice
    seed: int

    def to_json(self) -> dict:
        return {
            "id": self.id, "sector": self.sector, "domain": self.domain, "seed": self.seed,
            "edit": self.edit.to_json(),
            "generality": self.generality.to_json(), "general_surfaces": self.general_surfaces.to_json(),
            "locality": self.locality.to_json(), "local_surfaces": self.local_surfaces.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Draft":
        return cls(obj["id"], obj["sector"], obj["domain"], Triple.from_json(obj["edit"]),
                   ChainSet.from_json(obj["generality"]), SurfaceChoice.from_json(obj["general_surfaces"]),
                   ChainSet.from_json(obj["locality"]), SurfaceChoice.from_json(obj["local_surfaces"]),
                   obj["seed"])


@dataclass
class BuildReport:
    heads: int = 0
    drafts: int = 0
    skipped: Counter = field(default_factory=Counter)

    def to_json(self) -> dict:
        return {"heads": self.heads, "drafts": self.drafts, "skipped": dict(sorted(self.skipped.items()))}


def retrieve(idx: Indexes, domain: DomainSpec, cfg: Config) -> list[ScoredEntity]:
    return retrieve_domain_entities(idx, domain, cfg.retrieval.candidates_per_domain, cfg.retrieval.pool_size)


def domain_heads(idx: Indexes, domain: DomainSpec, domain_index: int, candidates: list[ScoredEntity],
                 cfg: Config) -> list[str]:
    try:
        return sample_heads(candidates, idx.store.entities, domain.keywords, cfg.sampler,
                            stream(cfg.seed, domain_index, HEADS_STREAM))
    except NoCandidateError:
        return []


def build_draft(idx: Indexes, domain: DomainSpec, domain_index: int, head_index: int, head: str,
                cfg: Config, report: BuildReport | None = None) -> Draft | None:
    report = report if report is not None else BuildReport()
    s = idx.structural
    rng = stream(cfg.seed, domain_index, RECORD_STREAM, head_index)
    t_edit = sample_edit_triple(s, head, rng)
    if t_edit is None:
        report.skipped["no-edit-triple"] += 1
        return None
    general = nmcs_sample(t_edit, (), cfg.nmcs, s, rng, kind="generality")
    if general is None:
        report.skipped["no-generality-chain"] += 1
        return None
    local = None
    for _ in range(LOCALITY_ATTEMPTS):
        try:
            seed = sample_locality_seed(t_edit, s, rng, cfg.nmcs.locality_retry_cap)
        except NoSeedError:
            break
        local = nmcs_sample(seed, {t_edit}, cfg.nmcs, s, rng, kind="locality")
        if local is not None:
            break
    if local is None:
        report.skipped["no-locality-chain"] += 1
        return None
    p = cfg.nmcs.alias_label_prob
    gsf = select_surface_forms(general, idx.store, rng, p)
    lsf = select_surface_forms(local, idx.store, rng, p)
    return Draft(f"{slug(domain.name)}-{head_index:05d}", domain.sector, domain.name, t_edit,
                 general, gsf, local, lsf, cfg.seed)


def build_drafts(idx: Indexes, domain: DomainSpec, domain_index: int, heads: list[str], cfg: Config,
                 report: BuildReport | None = None) -> list[Draft]:
    report = report if report is not None else BuildReport()
    out = []
    for i, head in enumerate(heads):
        report.heads += 1
        d = build_draft(idx, domain, domain_index, i, head, cfg, report)
        if d is not None:
            report.drafts += 1
            out.append(d)
    return out


def naturalize_draft(d: Draft, idx: Indexes, nat: Naturalizer) -> DatasetRecord | None:
    store = idx.store
    edit_text = nat.edit(d.edit)
    gen_text = nat.chains(d.generality, d.general_surfaces)
    loc_text = nat.chains(d.locality, d.local_surfaces)
    if edit_text is None or gen_text is None or loc_text is None:
        return None
    edit = EditSample(edit_text.prefix, edit_text.answer, node_label(store, d.edit.head), d.edit)
    general = ChainSample(classify_generality(d.generality, d.edit, d.general_surfaces), d.generality,
                          d.general_surfaces, gen_text)
    local = ChainSample(classify_locality(d.locality, d.edit), d.locality, d.local_surfaces, loc_text,
                        {"later_hop_collision": later_hop_collision(d.locality, d.edit)})
    return DatasetRecord(d.id, d.sector, d.domain, edit, general, local, d.seed, nat.mode)


def naturalize_drafts(drafts: list[Draft], idx: Indexes, nat: Naturalizer,
                      max_in_flight: int = 1) -> list[DatasetRecord]:
    """Naturalize concurrently (endpoint mode) while keeping the input order."""
    if nat.generator is None or max_in_flight <= 1:
        results = [naturalize_draft(d, idx, nat) for d in drafts]
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            results = list(pool.map(lambda d: naturalize_draft(d, idx, nat), drafts))
    return [r for r in results if r is not None]


def select_domains(domains: list[DomainSpec], names=None) -> list[tuple[int, DomainSpec]]:
    """(stream index, domain) pairs; the index is the position in the full list so filtering never reseeds."""
    if not names:
        return list(enumerate(domains))
    wanted = {n.lower() for n in names}
    chosen = [(i, d) for i, d in enumerate(domains) if d.name.lower() in wanted]
    missing = wanted - {d.name.lower() for _, d in chosen}
    if missing:
        raise KeyError(f"unknown domains: {sorted(missing)}")
    return chosen


def run_pipeline(idx: Indexes, domains: list[tuple[int, DomainSpec]], cfg: Config, nat: Naturalizer,
                 report: BuildReport | None = None) -> list[DatasetRecord]:
    records = []
    for d_index, domain in domains:
        candidates = retrieve(idx, domain, cfg)
        heads = domain_heads(idx, domain, d_index, candidates, cfg)
        drafts = build_drafts(idx, domain, d_index, heads, cfg, report)
        records.extend(naturalize_drafts(drafts, idx, nat, cfg.naturalizer.max_in_flight))
        logger.info("%s: %d candidates, %d heads, %d drafts", domain.name, len(candidates), len(heads), len(drafts))
    return records


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)
