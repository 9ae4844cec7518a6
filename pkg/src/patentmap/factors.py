"""Positional analysis: Pearson correlations, Jacobi eigendecomposition, factor loadings."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
OFFDIAG_TOL = 1e-10
NEGATIVE_EIGEN_TOL = 1e-8


@dataclass
class CorrelationMatrix:
    terms: list[str]
    values: np.ndarray
    dropped: list[str] = field(default_factory=list)


@dataclass
class FactorSolution:
    terms: list[str]
    k: int
    loadings: np.ndarray  # (n_terms, k)
    eigenvalues: np.ndarray  # top k, descending
    explained_variance_ratio: np.ndarray
    all_eigenvalues: np.ndarray

    @property
    def communalities(self) -> np.ndarray:
        return (self.loadings ** 2).sum(axis=1)

    def loadings_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["term"] + [f"factor{j + 1}" for j in range(self.k)])
        for term, row in zip(self.terms, self.loadings):
            w.writerow([term] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def scree_csv(self) -> str:
        n = len(self.all_eigenvalues)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["factor", "eigenvalue", "ratio"])
        for j, lam in enumerate(self.all_eigenvalues):
            w.writerow([j + 1, repr(float(lam)), repr(float(lam) / n)])
        return buf.getvalue()


def correlation_matrix(profiles, terms: Sequence[str] | None = None) -> CorrelationMatrix:
    """Pearson correlations between word profiles (one profile per row).

    Constant profiles have no defined correlation and are dropped with a
    warning.
    """
    x = np.asarray(profiles, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("profiles must be a 2-d array")
    terms = list(terms) if terms is not None else [str(i) for i in range(x.shape[0])]
    constant = np.ptp(x, axis=1) == 0 if x.shape[1] else np.ones(x.shape[0], bool)
    dropped = [t for t, c in zip(terms, constant) if c]
    if dropped:
        log.warning("dropping constant profiles: %s", ", ".join(dropped))
    x = x[~constant]
    kept = [t for t, c in zip(terms, constant) if not c]
    if len(kept) < 2:
        raise ValueError("fewer than 2 non-constant profiles")
    centered = x - x.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered ** 2).sum(axis=1))
    z = centered / norms[:, None]
    r = np.clip(z @ z.T, -1.0, 1.0)
    r = (r + r.T) / 2
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(kept, r, dropped)


def _offdiag_norm(a: np.ndarray) -> float:
    # summing the off-diagonal squares directly avoids cancellation against the diagonal
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt((off ** 2).sum()))


def eigendecompose(r, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns, each signed so its largest-magnitude entry is positive.
    """
    a = np.array(r.values if isinstance(r, CorrelationMatrix) else r, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    a = (a + a.T) / 2
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        if _offdiag_norm(a) < OFFDIAG_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * max(abs(diff), 1.0):
                    # negligible element: t ~ apq / diff, below any useful precision
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if _offdiag_norm(a) >= OFFDIAG_TOL:
            raise RuntimeError("Jacobi iteration did not converge")

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    for j in range(n):
        col = v[:, j]
        if col[int(np.argmax(np.abs(col)))] < 0:
            v[:, j] = -col
    return w, v


def factor_solution(r, k: int, terms: Sequence[str] | None = None) -> FactorSolution:
    """Unrotated principal-component loadings for the top ``k`` eigenpairs."""
    if isinstance(r, CorrelationMatrix):
        terms = r.terms
    values = r.values if isinstance(r, CorrelationMatrix) else np.asarray(r, dtype=np.float64)
    n = values.shape[0]
    terms = list(terms) if terms is not None else [str(i) for i in range(n)]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    w, v = eigendecompose(values)
    if w[k - 1] < -NEGATIVE_EIGEN_TOL:
        raise ValueError("negative eigenvalue: not a valid correlation matrix")
    top = np.maximum(w[:k], 0.0)
    loadings = v[:, :k] * np.sqrt(top)
    return FactorSolution(terms, k, loadings, w[:k].copy(), w[:k] / n, w)


def component_plane(solution: FactorSolution, dims: tuple[int, int] = (1, 2)) -> list[tuple[str, float, float]]:
    """Per-term coordinates on two (1-based) factors."""
    a, b = dims
    if not (1 <= a <= solution.k and 1 <= b <= solution.k):
        raise ValueError(f"dims must lie in 1..{solution.k}")
    return [(t, float(row[a - 1]), float(row[b - 1])) for t, row in zip(solution.terms, solution.loadings)]
