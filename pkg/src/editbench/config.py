"""Pipeline configuration (YAML)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .kg import CleaningConfig
from .nmcs import NMCSConfig
from .retrieval import DEFAULT_POOL_SIZE
from .sampler import SamplerConfig


@dataclass
class RetrievalConfig:
    pool_size: int = DEFAULT_POOL_SIZE
    candidates_per_domain: int = 100_000


@dataclass
class NaturalizerConfig:
    offline: bool = False
    retries: int = 3
    temperature: float = 0.5
    max_in_flight: int = 4
    mock_fixture: str | None = None


@dataclass
class Config:
    seed: int = 0
    domains_file: str | None = None
    domains: list[str] | None = None  # restrict to these domain names
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    nmcs: NMCSConfig = field(default_factory=NMCSConfig)
    naturalizer: NaturalizerConfig = field(default_factory=NaturalizerConfig)

    def to_json(self) -> dict:
        return asdict(self)


# flat key aliases accepted at the top of the nmcs / sampler sections
_ALIASES = {
    "nmcs": {"nmcs_m": "max_attempts", "nmcs_h": "max_hops"},
    "sampler": {},
}

_SECTIONS = {
    "cleaning": CleaningConfig,
    "retrieval": RetrievalConfig,
    "sampler": SamplerConfig,
    "nmcs": NMCSConfig,
    "naturalizer": NaturalizerConfig,
}


def _section(cls, raw: dict | None, aliases: dict[str, str]):
    raw = dict(raw or {})
    for old, new in aliases.items():
        if old in raw:
            raw[new] = raw.pop(old)
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**raw)


def load_config(path: str | Path | None = None, seed: int | None = None) -> Config:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) if path else {}
    raw = raw or {}
    kwargs = {name: _section(cls, raw.get(name), _ALIASES.get(name, {})) for name, cls in _SECTIONS.items()}
    cfg = Config(
        seed=raw.get("seed", 0),
        domains_file=raw.get("domains_file"),
        domains=raw.get("domains"),
        **kwargs,
    )
    if path and cfg.domains_file and not Path(cfg.domains_file).is_absolute():
        cfg.domains_file = str(Path(path).parent / cfg.domains_file)
    if seed is not None:
        cfg.seed = seed
    cfg.sampler.seed = cfg.seed
    return cfg
