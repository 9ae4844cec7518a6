"""Similarity measures over term vectors and thresholded word graphs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .comatrix import CooccMatrix, matrix_to_csv
from .errors import UndefinedSimilarity
from .graph import WordGraph

log = logging.getLogger(__name__)

COSINE = "cosine"
PEARSON = "pearson"
JACCARD = "jaccard"
MEASURES = (COSINE, PEARSON, JACCARD)


@dataclass
class SimilarityMatrix:
    terms: list[str]
    values: np.ndarray
    measure: str
    warnings: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        return matrix_to_csv(self.terms, self.terms, self.values, comment=f"measure={self.measure}")


def _as_floats(x) -> list[float]:
    vals = [float(v) for v in x]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("vector entries must be finite")
    return vals


def cosine(x: Sequence[float], y: Sequence[float]) -> float:
    """Salton's cosine: sum(x*y) / sqrt(sum(x^2) * sum(y^2))."""
    x, y = _as_floats(x), _as_floats(y)
    if len(x) != len(y) or not x:
        raise ValueError("vectors must have the same non-zero dimension")
    sxx = math.fsum(a * a for a in x)
    syy = math.fsum(b * b for b in y)
    if sxx == 0 or syy == 0:
        raise UndefinedSimilarity("cosine of a zero vector")
    sxy = math.fsum(a * b for a, b in zip(x, y))
    return sxy / math.sqrt(sxx * syy)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _as_floats(x), _as_floats(y)
    n = len(x)
    if n != len(y) or n < 2:
        raise ValueError("vectors must have the same dimension >= 2")
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedSimilarity("correlation with a constant vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def jaccard(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise ValueError("vectors must have the same dimension")
    if any(v not in (0, 1) for v in x) or any(v not in (0, 1) for v in y):
        raise ValueError("jaccard expects binary vectors")
    inter = sum(1 for a, b in zip(x, y) if a and b)
    union = sum(1 for a, b in zip(x, y) if a or b)
    if union == 0:
        raise UndefinedSimilarity("jaccard of two empty sets")
    return inter / union


def _gram(rows: np.ndarray) -> np.ndarray:
    # integer counts give an exact Gram matrix, independent of summation order
    if np.issubdtype(rows.dtype, np.integer):
        return (rows.astype(np.int64) @ rows.T.astype(np.int64)).astype(np.float64)
    return rows @ rows.T


def similarity_matrix(rows, measure: str = COSINE, terms: Sequence[str] | None = None) -> SimilarityMatrix:
    """Pairwise similarity of the row vectors of ``rows``.

    Pairs involving a zero (cosine, jaccard) or constant (pearson) row are
    undefined; they are set to 0 and named in ``warnings``.
    """
    if isinstance(rows, CooccMatrix):
        terms, rows = rows.terms, rows.counts
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-d array")
    n = rows.shape[0]
    terms = list(terms) if terms is not None else [str(i) for i in range(n)]
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")

    if measure == PEARSON:
        if rows.shape[1] < 2:
            raise ValueError("pearson needs vectors of dimension >= 2")
        rows = rows.astype(np.float64)
        constant = np.ptp(rows, axis=1) == 0
        rows = rows - rows.mean(axis=1, keepdims=True)
        rows[constant] = 0.0
    elif measure == JACCARD:
        if not np.isin(rows, (0, 1)).all():
            raise ValueError("jaccard expects binary rows")
        rows = rows.astype(np.int64)

    g = _gram(rows)
    diag = np.diag(g).copy()
    defined = diag > 0
    if measure == JACCARD:
        union = diag[:, None] + diag[None, :] - g
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(union > 0, g / union, 0.0)
    else:
        norms = np.sqrt(diag)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = g / np.outer(norms, norms)
        values[~np.isfinite(values)] = 0.0
        values = np.clip(values, -1.0, 1.0)
    values[~defined, :] = 0.0
    values[:, ~defined] = 0.0
    np.fill_diagonal(values, np.where(defined, 1.0, 0.0))
    values = (values + values.T) / 2

    warnings = [f"undefined {measure} for {terms[i]!r}: {'constant' if measure == PEARSON else 'zero'} vector"
                for i in np.flatnonzero(~defined)]
    for w in warnings:
        log.warning(w)
    return SimilarityMatrix(terms, values, measure, warnings)


def threshold_graph(sim: SimilarityMatrix | CooccMatrix, threshold: float,
                    frequencies: Sequence[float] | dict | None = None) -> WordGraph:
    """Keep pairs with value >= ``threshold`` and drop nodes left without edges.

    Accepts a similarity matrix or a raw co-occurrence matrix (integer
    threshold on counts).
    """
    if math.isnan(threshold):
        raise ValueError("threshold must not be NaN")
    if isinstance(sim, CooccMatrix):
        values, measure = sim.counts, f"cooccurrence-{sim.mode}"
    else:
        values, measure = sim.values, sim.measure
    terms = list(sim.terms)
    if isinstance(frequencies, dict):
        freqs = [float(frequencies.get(t, 1)) for t in terms]
    elif frequencies is not None:
        freqs = [float(f) for f in frequencies]
    else:
        freqs = None
    iu, ju = np.triu_indices(len(terms), k=1)
    vals = values[iu, ju]
    keep = vals >= threshold
    edges = [(int(i), int(j), _weight(v)) for i, j, v in zip(iu[keep], ju[keep], vals[keep])]
    g = WordGraph(terms, edges, freqs, threshold=threshold, source_measure=measure)
    return g.without_isolates()


def _weight(v):
    return int(v) if isinstance(v, np.integer) else float(v)
