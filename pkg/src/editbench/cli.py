"""Command-line entry point. Each stage reads and writes files under ``--out-dir``.

    store.jsonl, ingest_report.json   <- ingest DUMP
    index.npz                         <- index
    candidates/<domain>.jsonl         <- retrieve
    heads/<domain>.json               <- sample-heads
    drafts/<domain>.jsonl             <- build-records
    naturalized.jsonl                 <- naturalize
    dataset.jsonl, stats.json         <- emit
    score_report.json                 <- score --log LOG
"""

from __future__ import annotations

import bz2
import gzip
import json
import logging
import sys
from pathlib import Path

import click

from .config import Config, load_config
from .emitter import EmitError, compute_stats, emit_dataset, read_dataset
from .index import Indexes
from .kg import IngestionError, Store, load_dump
from .naturalizer import GenerationError, HttpEndpoint, MockEndpoint, Naturalizer
from .pipeline import (
    BuildReport,
    Draft,
    build_drafts,
    domain_heads,
    dumps,
    naturalize_drafts,
    retrieve,
    select_domains,
    slug,
)
from .retrieval import ScoredEntity, load_domains
from .scorer import ScoringError, read_log, score_dataset


def open_dump(path: str):
    if path == "-":
        return sys.stdin.buffer
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    if path.endswith(".bz2"):
        return bz2.open(path, "rb")
    return open(path, "rb")


class Context:
    def __init__(self, cfg: Config, out: Path):
        self.cfg = cfg
        self.out = out
        self._store: Store | None = None
        self._idx: Indexes | None = None

    def path(self, *parts: str) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def need(self, *parts: str) -> Path:
        p = self.out.joinpath(*parts)
        if not p.exists():
            raise click.ClickException(f"missing {p}; run the earlier stage first")
        return p

    @property
    def store(self) -> Store:
        if self._store is None:
            with self.need("store.jsonl").open(encoding="utf-8") as fh:
                self._store = Store.from_jsonl(fh)
        return self._store

    @property
    def idx(self) -> Indexes:
        if self._idx is None:
            self._idx = Indexes.load(self.need("index.npz"), self.store)
        return self._idx

    def domains(self, names=()):
        try:
            return select_domains(load_domains(self.cfg.domains_file), list(names) or self.cfg.domains)
        except KeyError as exc:
            raise click.ClickException(str(exc.args[0]))


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def write_lines(path: Path, objs) -> int:
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(dumps(obj) + "\n")
            n += 1
    return n


def read_lines(path: Path) -> list[dict]:
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


domain_option = click.option("--domain", "domain_names", multiple=True, help="Restrict to a domain (repeatable).")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML config file.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="editbench-out", show_default=True)
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config_path, seed, out_dir, verbose):
    """Build a knowledge-editing benchmark from a Wikidata-style JSON dump."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(config_path, seed)
    except (ValueError, TypeError) as exc:
        raise click.ClickException(f"bad config: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx.obj = Context(cfg, out)


@main.command()
@click.argument("dump")
@click.pass_obj
def ingest(c: Context, dump):
    """Parse and clean DUMP (.json, .json.gz, .json.bz2 or - for stdin)."""
    try:
        with open_dump(dump) as fh:
            store, report = load_dump(fh, c.cfg.cleaning)
    except IngestionError as exc:
        raise click.ClickException(str(exc))
    with c.path("store.jsonl").open("w", encoding="utf-8") as fh:
        for line in store.to_jsonl():
            fh.write(line + "\n")
    write_json(c.path("ingest_report.json"), report.to_json())
    click.echo(f"{report.entities_retained} entities, {report.properties_retained} properties, "
               f"{report.skip_count} skipped")


@main.command()
@click.pass_obj
def index(c: Context):
    """Build the text and structural indexes."""
    idx = Indexes.build(c.store)
    idx.save(c.path("index.npz"))
    click.echo(f"{len(idx.structural)} triples indexed")


@main.command("retrieve")
@domain_option
@click.pass_obj
def retrieve_cmd(c: Context, domain_names):
    """Score candidate entities for each domain."""
    for _, d in c.domains(domain_names):
        cands = retrieve(c.idx, d, c.cfg)
        write_lines(c.path("candidates", f"{slug(d.name)}.jsonl"), (e.to_json() for e in cands))
        click.echo(f"{d.name}: {len(cands)} candidates")


@main.command("sample-heads")
@domain_option
@click.pass_obj
def sample_heads_cmd(c: Context, domain_names):
    """Draw head entities per domain without replacement."""
    for i, d in c.domains(domain_names):
        cands = [ScoredEntity.from_json(o) for o in read_lines(c.need("candidates", f"{slug(d.name)}.jsonl"))]
        heads = domain_heads(c.idx, d, i, cands, c.cfg)
        write_json(c.path("heads", f"{slug(d.name)}.json"), heads)
        click.echo(f"{d.name}: {len(heads)} heads")


@main.command("build-records")
@domain_option
@click.pass_obj
def build_records(c: Context, domain_names):
    """Sample edit triples and generality/locality chain sets."""
    report = BuildReport()
    for i, d in c.domains(domain_names):
        heads = json.loads(c.need("heads", f"{slug(d.name)}.json").read_text(encoding="utf-8"))
        drafts = build_drafts(c.idx, d, i, heads, c.cfg, report)
        write_lines(c.path("drafts", f"{slug(d.name)}.jsonl"), (x.to_json() for x in drafts))
        click.echo(f"{d.name}: {len(drafts)} drafts")
    write_json(c.path("build_report.json"), report.to_json())


def make_naturalizer(c: Context, offline: bool, mock: str | None) -> Naturalizer:
    ncfg = c.cfg.naturalizer
    mock = mock or ncfg.mock_fixture
    if offline or (ncfg.offline and not mock):
        generator = None
    elif mock:
        generator = MockEndpoint.load(mock)
    else:
        try:
            generator = HttpEndpoint.from_env()
        except GenerationError as exc:
            raise click.ClickException(f"endpoint not configured ({exc}); use --offline or --mock")
    return Naturalizer(c.store, generator, ncfg.retries, ncfg.temperature)


@main.command()
@domain_option
@click.option("--offline", is_flag=True, help="Deterministic English templates, no endpoint.")
@click.option("--mock", type=click.Path(exists=True, dir_okay=False), help="Replay responses from a fixture.")
@click.pass_obj
def naturalize(c: Context, domain_names, offline, mock):
    """Render drafts into prompts; drops samples that never validate."""
    nat = make_naturalizer(c, offline, mock)
    records = []
    for _, d in c.domains(domain_names):
        path = c.out / "drafts" / f"{slug(d.name)}.jsonl"
        if not path.exists():
            continue
        drafts = [Draft.from_json(o) for o in read_lines(path)]
        records.extend(naturalize_drafts(drafts, c.idx, nat, c.cfg.naturalizer.max_in_flight))
    write_lines(c.path("naturalized.jsonl"), (r.to_json() for r in records))
    write_json(c.path("naturalize_report.json"), dict(sorted(nat.diagnostics.items())))
    click.echo(f"{len(records)} records ({nat.mode}); diagnostics {dict(sorted(nat.diagnostics.items()))}")


@main.command()
@click.pass_obj
def emit(c: Context):
    """Write the final dataset and its statistics."""
    with c.need("naturalized.jsonl").open(encoding="utf-8") as fh:
        records = list(read_dataset(fh))
    try:
        with c.path("dataset.jsonl").open("w", encoding="utf-8") as sink:
            n = emit_dataset(records, sink)
    except EmitError as exc:
        raise click.ClickException(str(exc))
    write_json(c.path("stats.json"), compute_stats(records).to_json())
    click.echo(f"{n} records written")


@main.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False), required=False)
@click.pass_obj
def stats(c: Context, dataset):
    """Print corpus statistics for DATASET (default: the emitted dataset)."""
    path = Path(dataset) if dataset else c.need("dataset.jsonl")
    with path.open(encoding="utf-8") as fh:
        click.echo(json.dumps(compute_stats(read_dataset(fh)).to_json(), indent=2, sort_keys=True))


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False), required=False)
@click.pass_obj
def score(c: Context, log_path, dataset):
    """Score a prediction log against DATASET (default: the emitted dataset)."""
    path = Path(dataset) if dataset else c.need("dataset.jsonl")
    with path.open(encoding="utf-8") as fh:
        records = list(read_dataset(fh))
    try:
        with open(log_path, encoding="utf-8") as fh:
            report = score_dataset(records, read_log(fh))
    except (ScoringError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    write_json(c.path("score_report.json"), report.to_json())
    click.echo(json.dumps({k: report.to_json()[k] for k in ("reliability", "generality", "locality")}))


@main.command()
@click.argument("dump")
@domain_option
@click.option("--offline", is_flag=True)
@click.option("--mock", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def run(ctx, dump, domain_names, offline, mock):
    """All stages from DUMP to dataset.jsonl."""
    ctx.invoke(ingest, dump=dump)
    ctx.invoke(index)
    ctx.invoke(retrieve_cmd, domain_names=domain_names)
    ctx.invoke(sample_heads_cmd, domain_names=domain_names)
    ctx.invoke(build_records, domain_names=domain_names)
    ctx.invoke(naturalize, domain_names=domain_names, offline=offline, mock=mock)
    ctx.invoke(emit)


if __name__ == "__main__":  # pragma: no cover
    main()
