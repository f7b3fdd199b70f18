"""Build open-domain knowledge-editing benchmarks from a Wikidata-style graph dump."""

__version__ = "0.1.0"
