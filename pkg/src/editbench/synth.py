"""Synthetic Wikidata-style dumps: the bundled mini knowledge graph and large random dumps for load tests.

Regenerate the bundled graph with ``python -m editbench.synth mini src/editbench/data/mini_kg.json``.
"""

from __future__ import annotations

import json
import sys
from typing import IO, Iterable, Iterator

import numpy as np

# ---------------------------------------------------------------- record builders


def _text(value: str, lang: str = "en") -> dict:
    return {lang: {"language": lang, "value": value}}


def datavalue(datatype: str, value) -> dict:
    """Dump ``datavalue`` for a plain Python value of the given datatype."""
    if datatype == "wikibase-item":
        return {"type": "wikibase-entityid",
                "value": {"entity-type": "item", "numeric-id": int(value[1:]), "id": value}}
    if datatype in ("string", "math", "url", "external-id", "commonsMedia"):
        return {"type": "string", "value": value}
    if datatype == "quantity":
        amount, unit = value if isinstance(value, tuple) else (value, None)
        return {"type": "quantity", "value": {
            "amount": f"{'+' if not str(amount).startswith('-') else ''}{amount}",
            "unit": f"http://www.wikidata.org/entity/{unit}" if unit else "1"}}
    if datatype == "time":
        stamp, precision = value
        return {"type": "time", "value": {"time": stamp, "timezone": 0, "before": 0, "after": 0,
                                          "precision": precision,
                                          "calendarmodel": "http://www.wikidata.org/entity/Q1985727"}}
    if datatype == "globe-coordinate":
        lat, lon = value
        return {"type": "globecoordinate", "value": {"latitude": lat, "longitude": lon, "precision": 0.01,
                                                     "globe": "http://www.wikidata.org/entity/Q2"}}
    if datatype == "monolingualtext":
        text, lang = value
        return {"type": "monolingualtext", "value": {"text": text, "language": lang}}
    raise ValueError(f"no encoder for datatype {datatype!r}")


def statement(pid: str, datatype: str, value, rank: str = "normal", snaktype: str = "value") -> dict:
    snak = {"snaktype": snaktype, "property": pid, "datatype": datatype}
    if snaktype == "value":
        snak["datavalue"] = datavalue(datatype, value)
    return {"mainsnak": snak, "type": "statement", "rank": rank}


def item_record(qid: str, label: str | None, description: str = "", aliases: Iterable[str] = (),
                claims: Iterable[dict] = (), extra_labels: dict[str, str] | None = None) -> dict:
    labels = _text(label) if label else {}
    for lang, text in (extra_labels or {}).items():
        labels.update(_text(text, lang))
    grouped: dict[str, list[dict]] = {}
    for st in claims:
        grouped.setdefault(st["mainsnak"]["property"], []).append(st)
    rec = {"type": "item", "id": qid, "labels": labels,
           "descriptions": _text(description) if description else {},
           "aliases": {"en": [{"language": "en", "value": a} for a in aliases]} if aliases else {},
           "claims": grouped}
    return rec


def property_record(pid: str, label: str, datatype: str, description: str = "") -> dict:
    return {"type": "property", "id": pid, "datatype": datatype, "labels": _text(label),
            "descriptions": _text(description) if description else {}, "aliases": {}, "claims": {}}


def write_dump(records: Iterable[dict], sink: IO[str]) -> int:
    """Array framing with one record per line and trailing commas, as in the public dumps."""
    n = 0
    sink.write("[\n")
    prev = None
    for rec in records:
        if prev is not None:
            sink.write(prev + ",\n")
        prev = json.dumps(rec, ensure_ascii=False, separators=(",", ":"))
        n += 1
    if prev is not None:
        sink.write(prev + "\n")
    sink.write("]\n")
    return n


# ---------------------------------------------------------------- the bundled mini graph

PROPERTIES = [
    ("P31", "instance of", "wikibase-item"),
    ("P17", "country", "wikibase-item"),
    ("P19", "place of birth", "wikibase-item"),
    ("P27", "country of citizenship", "wikibase-item"),
    ("P36", "capital", "wikibase-item"),
    ("P50", "author", "wikibase-item"),
    ("P69", "educated at", "wikibase-item"),
    ("P106", "occupation", "wikibase-item"),
    ("P108", "employer", "wikibase-item"),
    ("P131", "located in the administrative territorial entity", "wikibase-item"),
    ("P166", "award received", "wikibase-item"),
    ("P178", "developer", "wikibase-item"),
    ("P184", "doctoral advisor", "wikibase-item"),
    ("P277", "programmed in", "wikibase-item"),
    ("P397", "parent astronomical body", "wikibase-item"),
    ("P59", "constellation", "wikibase-item"),
    ("P780", "symptoms and signs", "wikibase-item"),
    ("P2176", "drug or therapy used for treatment", "wikibase-item"),
    ("P800", "notable work", "wikibase-item"),
    ("P569", "date of birth", "time"),
    ("P577", "publication date", "time"),
    ("P625", "coordinate location", "globe-coordinate"),
    ("P1082", "population", "quantity"),
    ("P2067", "mass", "quantity"),
    ("P2534", "defining formula", "math"),
    ("P1476", "title", "monolingualtext"),
    ("P1449", "nickname", "monolingualtext"),
    ("P212", "ISBN-13", "string"),
    ("P373", "Commons category", "string"),      # blocklisted
    ("P18", "image", "commonsMedia"),            # unsupported datatype
    ("P856", "official website", "url"),         # unsupported datatype
]

_SYL = ["ar", "bel", "cor", "dan", "el", "fen", "gal", "hor", "is", "jun", "kel", "lor", "mar", "nor",
        "os", "pel", "quin", "ros", "sal", "tor", "ul", "ven", "wil", "xan", "yor", "zel"]


class _MiniBuilder:
    def __init__(self, seed: int):
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.next_q = 100
        self.items: list[dict] = []
        self.names: set[str] = set()

    def name(self, parts: int = 2) -> str:
        """A fresh pseudo-word; grows by a syllable when short names run out."""
        for attempt in range(200):
            n = parts + attempt // 20
            word = "".join(_SYL[i] for i in self.rng.integers(0, len(_SYL), size=n)).capitalize()
            if word not in self.names:
                self.names.add(word)
                return word
        raise RuntimeError("name space exhausted")

    def pick(self, seq, k: int = 1) -> list:
        idx = self.rng.choice(len(seq), size=min(k, len(seq)), replace=False)
        return [seq[i] for i in sorted(idx)]

    def date(self, lo: int, hi: int, precision: int = 11) -> tuple[str, int]:
        y = int(self.rng.integers(lo, hi))
        m, d = int(self.rng.integers(1, 13)), int(self.rng.integers(1, 29))
        if precision == 9:
            m, d = 0, 0
        return f"+{y:04d}-{m:02d}-{d:02d}T00:00:00Z", precision

    def add(self, label, description, claims=(), aliases=(), **kw) -> str:
        qid = f"Q{self.next_q}"
        self.next_q += 1
        self.items.append(item_record(qid, label, description, aliases, claims, **kw))
        return qid

    def claim(self, qid: str, st: dict) -> None:
        rec = next(r for r in self.items if r["id"] == qid)
        rec["claims"].setdefault(st["mainsnak"]["property"], []).append(st)


def _item(pid: str, qid: str, **kw) -> dict:
    return statement(pid, "wikibase-item", qid, **kw)


def mini_kg_records(seed: int = 2024) -> list[dict]:
    """About 200 entities over astronomy, physics, literature, computing and medicine, plus shared geography."""
    b = _MiniBuilder(seed)
    r = b.rng
    it = _item

    # classes and occupations
    cls = {name: b.add(name, desc) for name, desc in [
        ("human", "common name of Homo sapiens"),
        ("country", "distinct territorial body or political entity"),
        ("city", "large permanent human settlement"),
        ("university", "institution of higher education"),
        ("award", "something given in recognition of excellence"),
        ("star", "astronomical object consisting of a luminous spheroid of plasma"),
        ("planet", "celestial body orbiting a star"),
        ("constellation", "area on the celestial sphere"),
        ("galaxy", "gravitationally bound astronomical structure"),
        ("novel", "narrative literary work of book length"),
        ("poem", "work of poetry"),
        ("software", "non-tangible executable component of a computer"),
        ("programming language", "language for communicating instructions to a computer"),
        ("disease", "abnormal condition negatively affecting organisms"),
        ("medication", "substance used to treat a disease"),
        ("symptom", "departure from normal function or feeling noticed by a patient"),
        ("physical law", "scientific generalization based on empirical observations"),
        ("company", "legal entity representing an association of people"),
    ]}
    occ = {name: b.add(name, desc) for name, desc in [
        ("astronomer", "scientist who studies celestial bodies such as a star, planet or galaxy"),
        ("physicist", "scientist who does research in physics such as quantum theory"),
        ("writer", "person who uses written words to create a literary work"),
        ("poet", "person who writes poetry"),
        ("computer scientist", "scientist who studies algorithm and software design for the computer"),
        ("physician", "professional who practices medicine and treats disease"),
    ]}

    # units referenced by quantity claims
    b.items.append(item_record("Q180892", "solar mass", "unit of mass used in astronomy", ["M☉"]))
    b.items.append(item_record("Q651336", "Jupiter mass", "unit of mass for a planet"))

    # geography: countries with capitals and further cities
    countries, cities = [], []
    for _ in range(8):
        cname = b.name(2) + "ia"
        q = b.add(cname, f"sovereign state in {r.choice(['Europe', 'Asia', 'South America', 'Africa'])}",
                  [it("P31", cls["country"]), statement("P1082", "quantity", (int(r.integers(10**5, 10**8)), None))],
                  aliases=[cname[:3].upper()] if r.random() < 0.5 else ())
        countries.append(q)
    for i in range(16):
        country = countries[i % 8]
        cname = b.name(2)
        q = b.add(cname, f"city in {b.items[[x['id'] for x in b.items].index(country)]['labels']['en']['value']}",
                  [it("P31", cls["city"]), it("P17", country),
                   statement("P625", "globe-coordinate",
                             (round(float(r.uniform(-60, 60)), 3), round(float(r.uniform(-170, 170)), 3))),
                   statement("P1082", "quantity", (int(r.integers(10**4, 10**7)), None)),
                   statement("P373", "string", cname)])
        cities.append(q)
        if i < 8:
            b.claim(country, it("P36", q))
    universities = [b.add(f"University of {b.items[[x['id'] for x in b.items].index(c)]['labels']['en']['value']}",
                          "public research university",
                          [it("P31", cls["university"]), it("P131", c),
                           statement("P856", "url", "https://example.org/u")])
                    for c in b.pick(cities, 8)]
    awards = [b.add(f"{b.name(2)} Prize", desc, [it("P31", cls["award"])])
              for desc in ["award for an astronomer", "award in physics", "literary award for a novel",
                           "award for poetry", "award in computer science", "award for a physician"]]
    companies = [b.add(f"{b.name(2)} Systems", "software company that builds database and server software",
                       [it("P31", cls["company"]), it("P17", c)]) for c in b.pick(countries, 4)]

    # people by field
    def people(n, occupation, nationality, award_ix, extra=None):
        out = []
        for _ in range(n):
            first, last = b.name(1).capitalize(), b.name(2)
            label = f"{first} {last}"
            country = b.pick(countries)[0]
            claims = [it("P31", cls["human"]), it("P106", occ[occupation]), it("P27", country),
                      it("P19", b.pick(cities)[0]),
                      statement("P569", "time", b.date(1850, 1990, 11 if r.random() < 0.7 else 9)),
                      it("P69", b.pick(universities)[0])]
            if r.random() < 0.6:
                claims.append(it("P166", awards[award_ix]))
            if r.random() < 0.3:
                claims.append(it("P166", b.pick(awards)[0]))
            if r.random() < 0.3:
                claims.append(statement("P1449", "monolingualtext", (last.lower(), "en")))
            if r.random() < 0.2:
                claims.append(statement("P18", "commonsMedia", f"{label}.jpg"))
            aliases = [f"{first[0]}. {last}"] if r.random() < 0.5 else []
            q = b.add(label, f"{nationality} {occupation}", claims, aliases)
            if out and r.random() < 0.5:
                b.claim(q, it("P184", b.pick(out)[0]))
            out.append(q)
        return out

    astronomers = people(12, "astronomer", "Northern", 0)
    physicists = people(12, "physicist", "Western", 1)
    writers = people(10, "writer", "Eastern", 2)
    poets = people(6, "poet", "Southern", 3)
    computer_scientists = people(10, "computer scientist", "Central", 4)
    physicians = people(8, "physician", "Coastal", 5)
    for q in b.pick(computer_scientists, 5):
        b.claim(q, it("P108", b.pick(companies)[0]))
    for q in b.pick(physicists, 4):
        b.claim(q, it("P108", b.pick(universities)[0]))

    # astronomy
    constellations = [b.add(b.name(2), "constellation in the northern celestial hemisphere",
                            [it("P31", cls["constellation"])]) for _ in range(6)]
    stars = []
    for _ in range(12):
        con = b.pick(constellations)[0]
        stars.append(b.add(f"{b.name(2)} Star", "star in a constellation, studied with a telescope",
                           [it("P31", cls["star"]), it("P59", con),
                            statement("P2067", "quantity", (round(float(r.uniform(0.1, 20)), 2), "Q180892"))],
                           aliases=[f"HD {int(r.integers(1000, 99999))}"] if r.random() < 0.4 else ()))
    for _ in range(10):
        st = b.pick(stars)[0]
        q = b.add(f"{b.name(2)} b", "exoplanet orbiting a star", [it("P31", cls["planet"]), it("P397", st),
                  statement("P2067", "quantity", (round(float(r.uniform(0.01, 5)), 3), "Q651336"))])
        if r.random() < 0.5:
            b.claim(b.pick(astronomers)[0], it("P800", q))
    for _ in range(4):
        b.add(f"{b.name(2)} Galaxy", "spiral galaxy observed by an astronomer",
              [it("P31", cls["galaxy"]), it("P59", b.pick(constellations)[0])])

    # physics
    for name, formula in [("Law of Velos", r"v = \frac{d}{t}"), ("Quantum rule of Marn", r"E = h \nu"),
                          ("Relativity law of Tor", r"E = mc^2"), ("Thermodynamics law of Isel", r"dU = TdS - PdV"),
                          ("Particle law of Ven", r"F = qE"), ("Radiation law of Kor", r"P = \sigma T^4")]:
        q = b.add(name, "physical law in quantum physics and thermodynamics",
                  [it("P31", cls["physical law"]), statement("P2534", "math", formula)])
        b.claim(b.pick(physicists)[0], it("P800", q))

    # literature
    for i in range(14):
        author = b.pick(writers + poets)[0]
        title = f"The {b.name(2)}"
        kind = cls["novel"] if i < 10 else cls["poem"]
        claims = [it("P31", kind), it("P50", author), statement("P577", "time", b.date(1800, 2020, 9)),
                  statement("P1476", "monolingualtext", (title, "en"))]
        if i < 10:
            claims.append(statement("P212", "string", f"978-{int(r.integers(10**8, 10**9))}-{i}"))
        q = b.add(title, "novel by a writer" if i < 10 else "poem in a poetry collection", claims)
        if r.random() < 0.6:
            b.claim(author, it("P800", q))

    # computing
    languages = [b.add(f"{b.name(1).capitalize()}Script", "programming language for server software",
                       [it("P31", cls["programming language"])]) for _ in range(5)]
    for _ in range(10):
        dev = b.pick(companies + computer_scientists)[0]
        claims = [it("P31", cls["software"]), it("P178", dev), it("P277", b.pick(languages)[0])]
        if r.random() < 0.3:
            claims.append(it("P277", b.pick(languages)[0]))
        b.add(f"{b.name(2)}DB", "database software using an algorithm for version control", claims)

    # medicine
    symptoms = [b.add(name, "symptom of a disease", [it("P31", cls["symptom"])])
                for name in ["fever", "cough", "headache", "fatigue", "nausea", "rash", "dizziness", "chills"]]
    drugs = [b.add(f"{b.name(2)}ol", "medication used in therapy", [it("P31", cls["medication"])])
             for _ in range(8)]
    for _ in range(10):
        claims = [it("P31", cls["disease"])]
        claims += [it("P780", s) for s in b.pick(symptoms, int(r.integers(1, 4)))]
        claims += [it("P2176", d) for d in b.pick(drugs, int(r.integers(1, 3)))]
        q = b.add(f"{b.name(2)} syndrome", "infectious disease requiring therapy", claims,
                  aliases=[f"{b.name(1).upper()} disease"] if r.random() < 0.4 else ())
        if r.random() < 0.4:
            b.claim(b.pick(physicians)[0], it("P800", q))

    # records the cleaning stage must drop or trim
    b.add("Mercury", "Wikimedia disambiguation page")
    b.add("Orion", "Wikimedia disambiguation page")
    b.add(None, "", extra_labels={"de": "Nur Deutsch"})
    b.claim(astronomers[0], _item("P106", occ["physicist"], rank="deprecated"))
    b.claim(physicists[0], statement("P166", "wikibase-item", None, snaktype="novalue"))

    props = [property_record(pid, label, dt) for pid, label, dt in PROPERTIES]
    return props + b.items + [{"type": "lexeme", "id": "L1", "lemmas": {}}]


def write_mini_kg(sink: IO[str], seed: int = 2024) -> int:
    return write_dump(mini_kg_records(seed), sink)


# ---------------------------------------------------------------- large random dumps

_LOAD_WORDS = ["star", "galaxy", "novel", "poet", "disease", "therapy", "software", "database", "river",
               "mountain", "city", "painter", "museum", "algorithm", "protein", "gene", "court", "election"]
_LOAD_PROPS = [("P31", "wikibase-item"), ("P17", "wikibase-item"), ("P131", "wikibase-item"),
               ("P50", "wikibase-item"), ("P361", "wikibase-item"), ("P569", "time"), ("P1082", "quantity"),
               ("P625", "globe-coordinate"), ("P1476", "monolingualtext"), ("P212", "string")]


def random_dump_lines(n_records: int, seed: int = 0, claims_per_item: int = 5) -> Iterator[str]:
    """Framed dump lines for ``n_records`` random items (plus the properties they use), generated lazily."""
    rng = np.random.Generator(np.random.PCG64(seed))
    yield "[\n"
    for pid, dt in _LOAD_PROPS:
        yield json.dumps(property_record(pid, f"property {pid}", dt), separators=(",", ":")) + ",\n"
    batch = 4096
    done = 0
    while done < n_records:
        m = min(batch, n_records - done)
        words = rng.integers(0, len(_LOAD_WORDS), size=(m, 2))
        targets = rng.integers(1, n_records + 1, size=(m, claims_per_item))
        props = rng.integers(0, len(_LOAD_PROPS), size=(m, claims_per_item))
        for j in range(m):
            n = done + j + 1
            claims = []
            for pi, tgt in zip(props[j], targets[j]):
                pid, dt = _LOAD_PROPS[pi]
                if dt == "wikibase-item":
                    value = f"Q{tgt}"
                elif dt == "time":
                    value = (f"+{1000 + tgt % 1000:04d}-01-01T00:00:00Z", 9)
                elif dt == "quantity":
                    value = (int(tgt), None)
                elif dt == "globe-coordinate":
                    value = ((tgt % 180) - 90.0, (tgt % 360) - 180.0)
                elif dt == "monolingualtext":
                    value = (f"title {tgt}", "en")
                else:
                    value = f"id-{tgt}"
                claims.append(statement(pid, dt, value))
            rec = item_record(f"Q{n}", f"entity {n}",
                              f"{_LOAD_WORDS[words[j, 0]]} {_LOAD_WORDS[words[j, 1]]} number {n}", (), claims)
            yield json.dumps(rec, separators=(",", ":")) + (",\n" if n < n_records else "\n")
        done += m
    yield "]\n"


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) < 2 or argv[0] not in ("mini", "random"):
        print("usage: python -m editbench.synth mini OUT | random OUT N [SEED]", file=sys.stderr)
        return 2
    with open(argv[1], "w", encoding="utf-8") as fh:
        if argv[0] == "mini":
            write_mini_kg(fh)
        else:
            fh.writelines(random_dump_lines(int(argv[2]), int(argv[3]) if len(argv) > 3 else 0))
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
