"""Turn edit triples and chain sets into cloze prompts."""

from __future__ import annotations

import logging
import threading
from collections import Counter

from ..index import Triple
from ..kg import Store
from ..nmcs import ChainSet, SurfaceChoice, node_label, tail_node
from .client import GenerationError, HttpEndpoint, MockEndpoint, TextGenerator
from .offline import cloze_text, naturalize_edit_offline, naturalize_offline
from .parsing import NaturalizedSample, TaggedResponseError, parse_tagged_response, validate_naturalized
from .requests import (
    DEFAULT_TEMPERATURE,
    GenerationRequest,
    Template,
    UnresolvableEntityError,
    answer_surfaces,
    build_request,
    merge_request,
)

logger = logging.getLogger(__name__)

__all__ = [
    "GenerationError", "GenerationRequest", "HttpEndpoint", "MockEndpoint", "NaturalizedSample", "Naturalizer",
    "TaggedResponseError", "Template", "TextGenerator", "UnresolvableEntityError", "answer_surfaces",
    "build_request", "cloze_text", "merge_request", "naturalize_edit_offline", "naturalize_offline",
    "parse_tagged_response", "validate_naturalized",
]


class Naturalizer:
    """Offline when ``generator`` is None, otherwise prompts the endpoint and validates each answer.

    A sample failing generation, parsing or validation is regenerated up to
    ``retries`` more times, then dropped; ``diagnostics`` counts every outcome.
    """

    def __init__(self, store: Store, generator: TextGenerator | None = None, retries: int = 3,
                 temperature: float = DEFAULT_TEMPERATURE, examples: dict[Template, str] | None = None):
        self.store = store
        self.generator = generator
        self.retries = retries
        self.temperature = temperature
        self.examples = examples
        self.diagnostics: Counter = Counter()
        self._lock = threading.Lock()

    def _count(self, outcome: str) -> None:
        with self._lock:
            self.diagnostics[outcome] += 1

    @property
    def mode(self) -> str:
        return "offline" if self.generator is None else "endpoint"

    def edit(self, t: Triple) -> NaturalizedSample | None:
        subject = node_label(self.store, t.head)
        answers = answer_surfaces(self.store, tail_node(t))
        if self.generator is None:
            return self._accept(naturalize_edit_offline(t, self.store), subject, answers)
        return self._retrying(lambda: self._generate_edit(t), subject, answers)

    def chains(self, cs: ChainSet, sf: SurfaceChoice) -> NaturalizedSample | None:
        answers = answer_surfaces(self.store, cs.target) + (sf.answer_surface,)
        if self.generator is None:
            return self._accept(naturalize_offline(cs, sf, self.store), sf.subject_surface, answers)
        return self._retrying(lambda: self._generate_chains(cs, sf), sf.subject_surface, answers)

    def _accept(self, ns: NaturalizedSample, subject: str, answers) -> NaturalizedSample | None:
        if validate_naturalized(ns, subject, answers):
            self._count("accepted")
            return ns
        self._count("invalid")
        self._count("dropped")
        return None

    def _retrying(self, produce, subject: str, answers) -> NaturalizedSample | None:
        for _ in range(self.retries + 1):
            try:
                ns = produce()
            except TaggedResponseError as exc:
                self._count("parse-error")
                logger.debug("unparseable response: %s", exc)
                continue
            except GenerationError as exc:
                self._count("generation-error")
                logger.debug("generation failed: %s", exc)
                continue
            if validate_naturalized(ns, subject, answers):
                self._count("accepted")
                return ns
            self._count("invalid")
        self._count("dropped")
        return None

    def _ask(self, request: GenerationRequest) -> NaturalizedSample:
        return parse_tagged_response(self.generator.complete(request), request)

    def _generate_edit(self, t: Triple) -> NaturalizedSample:
        (request,) = build_request(t, self.store, self.examples, self.temperature)
        return self._ask(request)

    def _generate_chains(self, cs: ChainSet, sf: SurfaceChoice) -> NaturalizedSample:
        surfaces = {}
        if sf.subject_is_alias:
            surfaces[sf.subject] = sf.subject_surface
        if sf.answer_is_alias:
            surfaces[sf.answer] = sf.answer_surface
        parts = [self._ask(r) for r in build_request(cs, self.store, self.examples, self.temperature, surfaces)]
        if not cs.is_double:
            return parts[0]
        examples = (self.examples or {}).get(Template.DOUBLE_CHAIN)
        merged = self._ask(merge_request(parts[0].prefix, parts[1].prefix, parts[0].answer, examples,
                                         self.temperature))
        merged.chains = parts
        return merged
