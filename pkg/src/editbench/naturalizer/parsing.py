"""Parsing and validation of tagged generation output."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .requests import GenerationRequest, Template

_TAG = re.compile(r"<([A-Za-z][A-Za-z0-9 \-]*)>")


class TaggedResponseError(ValueError):
    def __init__(self, tag: str, message: str):
        super().__init__(f"<{tag}>: {message}")
        self.tag = tag


@dataclass
class NaturalizedSample:
    prefix: str
    answer: str
    hops: list[tuple[str, str]] = field(default_factory=list)
    reverse: dict[int, tuple[str, str]] = field(default_factory=dict)  # 0-based hop index
    chains: list["NaturalizedSample"] = field(default_factory=list)  # the two parts of a double chain
    judgment: bool = False

    def to_json(self) -> dict:
        out = {
            "prefix": self.prefix,
            "answer": self.answer,
            "judgment": self.judgment,
            "hops": [list(h) for h in self.hops],
            "reverse": {str(k): list(v) for k, v in sorted(self.reverse.items())},
        }
        if self.chains:
            out["chains"] = [c.to_json() for c in self.chains]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NaturalizedSample":
        return cls(
            obj["prefix"], obj["answer"],
            [tuple(h) for h in obj.get("hops", [])],
            {int(k): tuple(v) for k, v in obj.get("reverse", {}).items()},
            [cls.from_json(c) for c in obj.get("chains", [])],
            obj.get("judgment", False),
        )


def expected_pairs(request: GenerationRequest) -> list[str]:
    """Names of the tag pairs a compliant response holds, in order (closing tag = name + ' End')."""
    if request.template is Template.EDIT:
        return ["Cloze Prefix", "Cloze"]
    if request.template is Template.DOUBLE_CHAIN:
        return ["Merged Prefix"]
    names = []
    for i, rev in enumerate(request.reverse, 1):
        names += [f"One-hop Cloze Prefix {i}", f"One-hop Cloze {i}"]
        if rev:
            names += [f"R-One-hop Cloze Prefix {i}", f"R-One-hop Cloze {i}"]
    return names + ["Multi-hop Cloze Prefix", "Multi-hop Cloze"]


def _extract(text: str, pairs: list[str]) -> dict[str, str]:
    expected = []
    for name in pairs:
        expected += [name, name + " End"]
    expected.append("Generation End")
    found = list(_TAG.finditer(text))
    out: dict[str, str] = {}
    for pos, want in enumerate(expected):
        if pos >= len(found):
            raise TaggedResponseError(want, "missing")
        got = found[pos].group(1)
        if got != want:
            if got in expected[:pos]:
                raise TaggedResponseError(got, f"duplicated where <{want}> was expected")
            if got in expected:
                raise TaggedResponseError(want, f"missing or out of order (found <{got}>)")
            raise TaggedResponseError(got, f"unexpected tag where <{want}> was expected")
        if pos % 2 == 1 and want != "Generation End":
            out[expected[pos - 1]] = text[found[pos - 1].end():found[pos].start()].strip()
    if len(found) > len(expected):
        extra = found[len(expected)].group(1)
        raise TaggedResponseError(extra, "unexpected tag after <Generation End>")
    return out


def parse_tagged_response(text: str, request: GenerationRequest) -> NaturalizedSample:
    values = _extract(text, expected_pairs(request))
    if request.template is Template.EDIT:
        return NaturalizedSample(values["Cloze Prefix"], values["Cloze"])
    if request.template is Template.DOUBLE_CHAIN:
        return NaturalizedSample(values["Merged Prefix"], "Yes", judgment=True)
    hops, reverse = [], {}
    for i, rev in enumerate(request.reverse):
        n = i + 1
        hops.append((values[f"One-hop Cloze Prefix {n}"], values[f"One-hop Cloze {n}"]))
        if rev:
            reverse[i] = (values[f"R-One-hop Cloze Prefix {n}"], values[f"R-One-hop Cloze {n}"])
    return NaturalizedSample(values["Multi-hop Cloze Prefix"], values["Multi-hop Cloze"], hops, reverse)


def validate_naturalized(ns: NaturalizedSample, subject_surfaces, answer_surfaces) -> bool:
    """The prompt names the subject and never reveals any answer surface (case-insensitive, whole words)."""
    prefix = ns.prefix.lower()
    if isinstance(subject_surfaces, str):
        subject_surfaces = (subject_surfaces,)
    if isinstance(answer_surfaces, str):
        answer_surfaces = (answer_surfaces,)
    if not ns.answer.strip():
        return False
    if not any(_mentions(prefix, s) for s in subject_surfaces if s):
        return False
    return not any(_mentions(prefix, a) for a in answer_surfaces if a)


def _mentions(text: str, surface: str) -> bool:
    """Case-insensitive containment at word boundaries, so "YOR" does not match "Yorvik"."""
    return re.search(r"(?<!\w)" + re.escape(surface.lower()) + r"(?!\w)", text) is not None
