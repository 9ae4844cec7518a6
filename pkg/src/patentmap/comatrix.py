"""Vocabularies, co-word matrices and bimodal reference x patent matrices."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DOCUMENT = "document"
OCCURRENCE = "occurrence"
PRODUCT = "product"
INCIDENCE = "incidence"


@dataclass
class TermVocabulary:
    entries: list[tuple[str, int]]
    min_frequency: int
    cap: int | None = None

    @property
    def terms(self) -> list[str]:
        return [t for t, _ in self.entries]

    @property
    def frequencies(self) -> dict[str, int]:
        return dict(self.entries)

    def index(self) -> dict[str, int]:
        return {t: i for i, (t, _) in enumerate(self.entries)}

    def __len__(self):
        return len(self.entries)


@dataclass
class CooccMatrix:
    terms: list[str]
    counts: np.ndarray
    mode: str = DOCUMENT


@dataclass
class BimodalMatrix:
    row_terms: list[str]
    col_terms: list[str]
    counts: np.ndarray


def build_vocabulary(term_lists: Iterable[Sequence[str]], min_frequency: int = 0,
                     cap: int | None = None) -> TermVocabulary:
    """Count token occurrences and keep terms occurring more than ``min_frequency`` times."""
    if min_frequency < 0:
        raise ValueError("min_frequency must be >= 0")
    freq = Counter()
    for terms in term_lists:
        freq.update(terms)
    entries = sorted(((t, f) for t, f in freq.items() if f > min_frequency), key=lambda e: (-e[1], e[0]))
    if cap is not None:
        entries = entries[:cap]
    return TermVocabulary(entries, min_frequency, cap)


def occurrence_matrix(docs_terms: Iterable[Sequence[str]], terms: Sequence[str]) -> np.ndarray:
    """Term x document matrix of occurrence counts (terms outside ``terms`` ignored)."""
    idx = {t: i for i, t in enumerate(terms)}
    cols = []
    for doc in docs_terms:
        col = np.zeros(len(terms), dtype=np.int64)
        for t in doc:
            i = idx.get(t)
            if i is not None:
                col[i] += 1
        cols.append(col)
    if not cols:
        return np.zeros((len(terms), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def cooccurrence(docs_terms: Iterable[Sequence[str]], vocab: TermVocabulary | Sequence[str],
                 mode: str = DOCUMENT) -> CooccMatrix:
    terms = vocab.terms if isinstance(vocab, TermVocabulary) else list(vocab)
    if not terms:
        raise ValueError("vocabulary is empty")
    x = occurrence_matrix(docs_terms, terms)
    if mode == DOCUMENT:
        x = (x > 0).astype(np.int64)
    elif mode != OCCURRENCE:
        raise ValueError(f"unknown co-occurrence mode {mode!r}")
    return CooccMatrix(terms, x @ x.T, mode)


def bimodal(items: Iterable[tuple[Sequence[str], Sequence[Sequence[str]]]],
            patent_vocab: TermVocabulary | Sequence[str],
            ref_vocab: TermVocabulary | Sequence[str],
            rule: str = PRODUCT) -> BimodalMatrix:
    """Reference-word (rows) x patent-word (columns) matrix.

    ``items`` yields, per patent, its title terms and the term lists of its
    quoted reference titles.  Under the product rule a patent contributes
    (occurrences of the column word in its title) x (occurrences of the row
    word over all its reference titles).  The incidence rule counts a patent
    once when both words are present.
    """
    cols = patent_vocab.terms if isinstance(patent_vocab, TermVocabulary) else list(patent_vocab)
    rows = ref_vocab.terms if isinstance(ref_vocab, TermVocabulary) else list(ref_vocab)
    if rule not in (PRODUCT, INCIDENCE):
        raise ValueError(f"unknown bimodal rule {rule!r}")
    cidx = {t: i for i, t in enumerate(cols)}
    ridx = {t: i for i, t in enumerate(rows)}
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for title_terms, ref_lists in items:
        c = np.zeros(len(cols), dtype=np.int64)
        for t in title_terms:
            if t in cidx:
                c[cidx[t]] += 1
        r = np.zeros(len(rows), dtype=np.int64)
        for ref in ref_lists:
            for t in ref:
                if t in ridx:
                    r[ridx[t]] += 1
        if rule == INCIDENCE:
            c, r = (c > 0).astype(np.int64), (r > 0).astype(np.int64)
        counts += np.outer(r, c)
    return BimodalMatrix(rows, cols, counts)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def matrix_to_csv(row_terms: Sequence[str], col_terms: Sequence[str], values: np.ndarray,
                  comment: str | None = None) -> str:
    """CSV with a header row and column of terms; the corner cell is empty."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(col_terms))
    for term, row in zip(row_terms, values):
        w.writerow([term] + [_fmt(v) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str, dtype=float) -> tuple[list[str], list[str], np.ndarray]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return [], [], np.zeros((0, 0), dtype=dtype)
    cols = rows[0][1:]
    row_terms = [r[0] for r in rows[1:]]
    values = np.array([[dtype(v) for v in r[1:]] for r in rows[1:]], dtype=dtype).reshape(len(row_terms), len(cols))
    return row_terms, cols, values


def vocabulary_to_csv(vocab: TermVocabulary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term", "frequency"])
    w.writerows(vocab.entries)
    return buf.getvalue()
