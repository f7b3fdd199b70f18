"""Sequential weighted head sampling with similarity decay.

Each step draws one not-yet-chosen candidate with probability proportional to
``iw / gamma ** psi``, where ``psi`` is the summed description similarity of the
candidate to every head picked so far. ``psi`` is maintained incrementally
through a segment -> candidates posting map, so a pick only touches candidates
that share at least one description segment with it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .kg import Entity
from .retrieval import ScoredEntity
from .text import tokenize

logger = logging.getLogger(__name__)


class NoCandidateError(ValueError):
    """Raised when a weighted draw has nothing with positive weight."""


@dataclass
class SamplerConfig:
    gamma: float = 1.05
    delta_in: float = 0.2
    delta_out: float = 1.0
    heads_per_domain: int = 30_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.gamma > 1:
            raise ValueError("gamma must be > 1")
        if not 0 < self.delta_in <= self.delta_out:
            raise ValueError("require 0 < delta_in <= delta_out")


def description_segments(e: Entity | str) -> frozenset[str]:
    text = e if isinstance(e, str) else e.description
    return frozenset(tokenize(text))


def keyword_segments(keywords) -> frozenset[str]:
    """Normalize a keyword set the same way descriptions are segmented."""
    out: set[str] = set()
    for k in keywords:
        out.update(tokenize(k))
    return frozenset(out)


def similarity(e: Entity, s: Entity, keywords, cfg: SamplerConfig) -> float:
    seg_e = description_segments(e)
    if not seg_e:
        return 0.0
    inside = keyword_segments(keywords)
    shared = seg_e & description_segments(s)
    total = sum(cfg.delta_in if u in inside else cfg.delta_out for u in shared)
    return total / len(seg_e)


def weighted_index(weights, rng: np.random.Generator) -> int:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise NoCandidateError("no candidates to draw from")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    cum = np.cumsum(w)
    total = cum[-1]
    if not total > 0:
        raise NoCandidateError("all candidate weights are zero")
    i = int(np.searchsorted(cum, rng.random() * total, side="right"))
    if i >= w.size or w[i] == 0:
        # only reachable when the draw rounds onto the total
        i = int(np.flatnonzero(w)[-1])
    return i


def weighted_draw(items: Sequence, weights, rng: np.random.Generator):
    if len(items) != len(weights):
        raise ValueError("items and weights differ in length")
    return items[weighted_index(weights, rng)]


class HeadSampler:
    """Sampling state: candidates, chosen heads and the running decay per candidate."""

    def __init__(self, candidates: Sequence[ScoredEntity], entities: Mapping[str, Entity], keywords,
                 cfg: SamplerConfig, rng: np.random.Generator):
        kept = [c for c in candidates if c.iw > 0]
        self.cfg = cfg
        self.rng = rng
        self.ids = [c.id for c in kept]
        self.iw = np.array([c.iw for c in kept], dtype=np.float64)
        self.psi = np.zeros(len(kept), dtype=np.float64)
        self.chosen = np.zeros(len(kept), dtype=bool)
        self.order: list[str] = []
        self.inside = keyword_segments(keywords)
        self.segments = [description_segments(entities[i]) for i in self.ids]
        self.inv_len = np.array([1.0 / len(s) if s else 0.0 for s in self.segments])
        postings: dict[str, list[int]] = {}
        for i, segs in enumerate(self.segments):
            for u in segs:
                postings.setdefault(u, []).append(i)
        self._postings = {u: np.asarray(v, dtype=np.int64) for u, v in postings.items()}
        self._log_iw = np.log(self.iw) if len(kept) else self.iw
        self._log_gamma = math.log(cfg.gamma)

    def weights(self) -> np.ndarray:
        """Unnormalized weights ``iw / gamma**psi`` (0 for chosen). May underflow for large psi."""
        w = self.iw / np.power(self.cfg.gamma, self.psi)
        w[self.chosen] = 0.0
        return w

    def probabilities(self) -> np.ndarray:
        """Normalized pick probabilities, computed in log space so large decays do not underflow."""
        logw = self._log_iw - self._log_gamma * self.psi
        logw[self.chosen] = -np.inf
        if not len(logw) or np.all(self.chosen):
            return np.zeros(len(logw))
        w = np.exp(logw - logw.max())
        return w / w.sum()

    @property
    def exhausted(self) -> bool:
        return bool(np.all(self.chosen))

    def step(self) -> str:
        i = weighted_index(self.probabilities(), self.rng)
        self.chosen[i] = True
        self.order.append(self.ids[i])
        self._absorb(i)
        return self.ids[i]

    def _absorb(self, new: int) -> None:
        cfg = self.cfg
        for u in self.segments[new]:
            post = self._postings[u]
            delta = cfg.delta_in if u in self.inside else cfg.delta_out
            self.psi[post] += delta * self.inv_len[post]


def sample_heads(candidates: Sequence[ScoredEntity], entities: Mapping[str, Entity], keywords,
                 cfg: SamplerConfig, rng: np.random.Generator, n: int | None = None) -> list[str]:
    n = cfg.heads_per_domain if n is None else n
    sampler = HeadSampler(candidates, entities, keywords, cfg, rng)
    if not sampler.ids:
        raise NoCandidateError("no candidate has a positive initial weight")
    while len(sampler.order) < n and not sampler.exhausted:
        sampler.step()
    if len(sampler.order) < n:
        logger.warning("candidate pool exhausted after %d of %d heads", len(sampler.order), n)
    return sampler.order
