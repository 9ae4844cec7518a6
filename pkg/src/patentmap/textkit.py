"""Title normalization and quoted-title extraction.

Titles are reduced to terms by tokenizing, removing stopwords and stripping
a plural ``s``.  Non-patent literature references (NPLR) are mined for the
article title, which patents conventionally set between double quotes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

_TOKEN_RE = re.compile(r"[^\W_]+")

_OPEN_QUOTES = {'"': '"”', "“": '”"'}


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    source: str

    def __post_init__(self):
        for w in self.words:
            if not w or w != w.lower():
                raise ValueError(f"invalid stopword {w!r} in {self.source}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


def _read_lines(text: str) -> Iterable[str]:
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def load_stopwords(path: str | Path | None = None) -> StopwordList:
    """Load a stopword file (one word per line, ``#`` comments).

    Without a path the bundled default list is returned.
    """
    if path is None:
        text = resources.files("patentmap.data").joinpath("stopwords.txt").read_text("utf-8")
        source = "bundled:uspto-default"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    return StopwordList(frozenset(w.lower() for w in _read_lines(text)), source)


def load_plural_exceptions(path: str | Path | None = None) -> dict[str, str]:
    if path is None:
        text = resources.files("patentmap.data").joinpath("plural_exceptions.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table = {}
    for line in _read_lines(text):
        surface, _, singular = line.partition("\t")
        if not singular:
            raise ValueError(f"malformed plural exception line: {line!r}")
        table[surface.strip().lower()] = singular.strip().lower()
    return table


@lru_cache(maxsize=1)
def default_stopwords() -> StopwordList:
    return load_stopwords()


@lru_cache(maxsize=1)
def default_exceptions() -> Mapping[str, str]:
    return load_plural_exceptions()


def tokenize(text: str) -> list[str]:
    """Lower-case ``text`` and split it on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def singularize(token: str, exceptions: Mapping[str, str] | None = None) -> str:
    if exceptions is None:
        exceptions = default_exceptions()
    if token in exceptions:
        return exceptions[token]
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def normalize_title(
    title: str,
    stopwords: StopwordList | None = None,
    exceptions: Mapping[str, str] | None = None,
) -> list[str]:
    """Turn a title into its list of terms, keeping order and repeats."""
    if stopwords is None:
        stopwords = default_stopwords()
    terms = []
    for tok in tokenize(title):
        if len(tok) < 2 or tok in stopwords:
            continue
        term = singularize(tok, exceptions)
        # a singular form may itself be a stopword ("claims" -> "claim")
        if len(term) < 2 or term in stopwords:
            continue
        terms.append(term)
    return terms


def extract_quoted_title(nplr: str) -> str | None:
    """Return the first double-quoted span of a reference string, if any.

    Straight and typographic quotes are both accepted.  Surrounding
    whitespace and a trailing comma or period inside the quotes are removed.

    >>> extract_quoted_title('Smith et al., "Gene expression in yeast," Nature 392 (1998)')
    'Gene expression in yeast'
    """
    for start, ch in enumerate(nplr):
        closers = _OPEN_QUOTES.get(ch)
        if closers is None:
            continue
        end = next((k for k in range(start + 1, len(nplr)) if nplr[k] in closers), None)
        if end is None:
            return None
        inner = nplr[start + 1:end].strip()
        if inner and inner[-1] in ",.":
            inner = inner[:-1].rstrip()
        return inner or None
    return None
