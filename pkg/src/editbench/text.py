"""Tokenization shared by the text index, keyword matching and description segments."""

import re

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character. No stemming, no stopwords."""
    return _TOKEN.findall(text.lower())


_ID = re.compile(r"^([A-Za-z]+)(\d+)$")


def id_sort_key(value: str) -> tuple[str, int, str]:
    """Natural order for item/property ids so that Q2 sorts before Q10."""
    m = _ID.match(value)
    if m:
        return (m.group(1), int(m.group(2)), "")
    return (value, -1, value)
