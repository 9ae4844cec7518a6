"""Kamada-Kawai spring embedding of word graphs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .comatrix import BimodalMatrix
from .graph import COL_MODE, ROW_MODE, WordGraph

_MAX_HALVINGS = 60


@dataclass
class LayoutParams:
    L: float = 1.0
    K: float = 1.0
    max_iterations: int = 20000
    gradient_tolerance: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if not (self.L > 0 and self.K > 0 and self.gradient_tolerance > 0):
            raise ValueError("L, K and gradient_tolerance must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")


@dataclass
class LayoutResult:
    positions: np.ndarray  # (n, 2), aligned with graph.nodes
    final_energy: float = 0.0
    iterations_used: int = 0
    component_id: list[int] = field(default_factory=list)
    energy_history: list[list[float]] = field(default_factory=list)

    def to_csv(self, graph: WordGraph) -> str:
        lines = ["node,component,x,y"]
        for label, cid, (x, y) in zip(graph.nodes, self.component_id, self.positions):
            label = '"' + label.replace('"', '""') + '"' if ("," in label or '"' in label) else label
            lines.append(f"{label},{cid},{float(x)!r},{float(y)!r}")
        return "\n".join(lines) + "\n"


def graph_distances(graph: WordGraph) -> np.ndarray:
    """All-pairs hop counts by breadth-first search."""
    n = len(graph)
    adj = graph.neighbours()
    d = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        d[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if d[s, v] < 0:
                    d[s, v] = d[s, u] + 1
                    queue.append(v)
    if (d < 0).any():
        raise ValueError("graph is disconnected; lay out each component separately "
                         "(see layout_components)")
    return d


def spring_energy(pos: np.ndarray, lengths: np.ndarray, stiffness: np.ndarray) -> float:
    """Sum over pairs i<j of k_ij/2 * (|p_i - p_j| - l_ij)^2."""
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    iu = np.triu_indices(len(pos), k=1)
    return float(0.5 * (stiffness[iu] * (dist[iu] - lengths[iu]) ** 2).sum())


def _node_energy(m, p, pos, lengths, stiffness):
    delta = p - pos
    dist = np.sqrt((delta ** 2).sum(axis=1))
    e = 0.5 * stiffness[m] * (dist - lengths[m]) ** 2
    e[m] = 0.0
    return float(e.sum())


def _pair_terms(m, p, pos, lengths, stiffness):
    """Per-partner gradient terms of node m placed at p (row m is zero)."""
    delta = p - pos
    dist = np.maximum(np.sqrt((delta ** 2).sum(axis=1)), 1e-12)
    coef = stiffness[m] * (1.0 - lengths[m] / dist)
    coef[m] = 0.0
    return coef[:, None] * delta


def _gradients(pos, lengths, stiffness):
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    np.fill_diagonal(dist, 1.0)
    dist = np.maximum(dist, 1e-12)
    coef = stiffness * (1.0 - lengths / dist)
    np.fill_diagonal(coef, 0.0)
    return (coef[:, :, None] * diff).sum(axis=1)


def _hessian(m, pos, lengths, stiffness):
    delta = pos[m] - pos
    dist = np.sqrt((delta ** 2).sum(axis=1))
    mask = np.arange(len(pos)) != m
    dx, dy, r = delta[mask, 0], delta[mask, 1], np.maximum(dist[mask], 1e-12)
    k, l = stiffness[m, mask], lengths[m, mask]
    r3 = r ** 3
    hxx = (k * (1.0 - l * dy * dy / r3)).sum()
    hyy = (k * (1.0 - l * dx * dx / r3)).sum()
    hxy = (k * l * dx * dy / r3).sum()
    return np.array([[hxx, hxy], [hxy, hyy]])


def _initial_positions(n, params):
    rng = np.random.default_rng(params.seed)
    offset = rng.uniform(0.0, 2.0 * math.pi)
    radius = params.L * n / (2.0 * math.pi)
    angles = offset + 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])


def kk_layout(graph: WordGraph, params: LayoutParams | None = None) -> LayoutResult:
    """Lay out a connected graph by minimizing the Kamada-Kawai spring energy.

    Rest lengths are ``L * d_ij`` and stiffnesses ``K / d_ij**2`` for hop
    distance ``d_ij``.  Each iteration moves the node with the steepest
    energy gradient by a Newton step, halving the step until the energy does
    not increase.
    """
    params = params or LayoutParams()
    n = len(graph)
    if n == 0:
        return LayoutResult(np.zeros((0, 2)))
    if n == 1:
        return LayoutResult(np.zeros((1, 2)), 0.0, 0, [0], [[0.0]])
    d = graph_distances(graph).astype(np.float64)
    lengths = params.L * d
    with np.errstate(divide="ignore"):
        stiffness = params.K / d ** 2
    np.fill_diagonal(stiffness, 0.0)

    pos = _initial_positions(n, params)
    energy = spring_energy(pos, lengths, stiffness)
    history = [energy]
    grads = _gradients(pos, lengths, stiffness)
    iterations = 0
    frozen = set()
    while iterations < params.max_iterations:
        mags = np.sqrt((grads ** 2).sum(axis=1))
        if frozen:
            mags[list(frozen)] = -1.0
        m = int(np.argmax(mags))
        if mags[m] < params.gradient_tolerance:
            if frozen:
                break
            # confirm against a fresh gradient before stopping
            grads = _gradients(pos, lengths, stiffness)
            mags = np.sqrt((grads ** 2).sum(axis=1))
            m = int(np.argmax(mags))
            if mags[m] < params.gradient_tolerance:
                break
        g = grads[m]
        step = None
        h = _hessian(m, pos, lengths, stiffness)
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        if h[0, 0] > 0 and det > 0:
            step = -np.array([h[1, 1] * g[0] - h[0, 1] * g[1], h[0, 0] * g[1] - h[1, 0] * g[0]]) / det
        if step is None or not np.all(np.isfinite(step)):
            step = -g / max(stiffness[m].sum(), 1e-12)

        e_old = _node_energy(m, pos[m], pos, lengths, stiffness)
        accepted = False
        for _ in range(_MAX_HALVINGS):
            cand = pos[m] + step
            e_new = _node_energy(m, cand, pos, lengths, stiffness)
            if e_new < e_old:
                old = _pair_terms(m, pos[m], pos, lengths, stiffness)
                pos[m] = cand
                new = _pair_terms(m, cand, pos, lengths, stiffness)
                # pair (i, m) enters grad_i with the opposite sign of grad_m
                grads -= new - old
                grads[m] = new.sum(axis=0)
                energy = max(energy - (e_old - e_new), 0.0)
                accepted = True
                break
            step = step / 2.0
        iterations += 1
        if accepted:
            frozen.clear()
            if iterations % n == 0:
                grads = _gradients(pos, lengths, stiffness)
        else:
            # no descent left in floating point for this node
            frozen.add(m)
            if len(frozen) == n:
                break
        history.append(energy)

    final = spring_energy(pos, lengths, stiffness)
    return LayoutResult(pos, final, iterations, [0] * n, [history])


def layout_components(graph: WordGraph, params: LayoutParams | None = None) -> LayoutResult:
    """Lay out every connected component and pack them in rows.

    The largest component keeps its own coordinates; the others are placed
    left to right after it, wrapping into new rows, with a margin of L/2.
    """
    params = params or LayoutParams()
    n = len(graph)
    if n == 0:
        return LayoutResult(np.zeros((0, 2)))
    comps = sorted(graph.components(), key=lambda c: (-len(c), graph.nodes[c[0]]))
    results = [kk_layout(graph.subgraph(c), params) for c in comps]
    if len(comps) == 1:
        res = results[0]
        return LayoutResult(res.positions.copy(), res.final_energy, res.iterations_used,
                            [0] * n, res.energy_history)

    margin = params.L / 2.0
    boxes = [(r.positions.min(axis=0), r.positions.max(axis=0)) for r in results]
    sizes = [hi - lo for lo, hi in boxes]
    area = sum((w + margin) * (h + margin) for w, h in sizes)
    row_width = max(max(w for w, _ in sizes), math.sqrt(area))

    positions = np.zeros((n, 2))
    component_id = [0] * n
    origin = boxes[0][0]
    x, y, row_h = origin[0], origin[1], 0.0
    for cid, (comp, res, (lo, _), (w, h)) in enumerate(zip(comps, results, boxes, sizes)):
        if x > origin[0] and x + w > origin[0] + row_width:
            x, y, row_h = origin[0], y + row_h + margin, 0.0
        shifted = res.positions - lo + np.array([x, y])
        for k, node in enumerate(comp):
            positions[node] = shifted[k]
            component_id[node] = cid
        x += w + margin
        row_h = max(row_h, h)
    return LayoutResult(
        positions,
        float(sum(r.final_energy for r in results)),
        sum(r.iterations_used for r in results),
        component_id,
        [h for r in results for h in r.energy_history],
    )


def bimodal_to_graph(matrix: BimodalMatrix, threshold: float) -> WordGraph:
    """Two-mode graph: reference words and patent words, linked where count >= threshold.

    A word present in both vocabularies becomes two nodes whose labels carry
    a mode suffix.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    rows, cols = list(matrix.row_terms), list(matrix.col_terms)
    shared = set(rows) & set(cols)
    labels = [f"{t} [ref]" if t in shared else t for t in rows]
    labels += [f"{t} [pat]" if t in shared else t for t in cols]
    modes = [ROW_MODE] * len(rows) + [COL_MODE] * len(cols)
    counts = np.asarray(matrix.counts)
    freqs = [float(v) for v in counts.sum(axis=1)] + [float(v) for v in counts.sum(axis=0)]
    nr = len(rows)
    edges = []
    for r in range(nr):
        for c in range(len(cols)):
            if counts[r, c] >= threshold and counts[r, c] > 0:
                edges.append((r, nr + c, int(counts[r, c])))
    g = WordGraph(labels, edges, freqs, threshold=threshold, source_measure="bimodal", modes=modes)
    return g.without_isolates()
