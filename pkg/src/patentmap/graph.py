"""Weighted word graph shared by thresholding, layout and export."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

ROW_MODE = "reference"
COL_MODE = "patent"


@dataclass
class WordGraph:
    """Undirected graph over terms.

    ``edges`` hold ``(i, j, weight)`` with ``i < j`` indexing into ``nodes``.
    ``modes`` is set for bimodal graphs only.
    """

    nodes: list[str]
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    frequencies: list[float] | None = None
    threshold: float = 0.0
    source_measure: str = ""
    modes: list[str] | None = None

    def __post_init__(self):
        n = len(self.nodes)
        if self.frequencies is None:
            self.frequencies = [1.0] * n
        for i, j, _ in self.edges:
            if not 0 <= i < j < n:
                raise ValueError(f"invalid edge ({i}, {j}) for {n} nodes")

    def __len__(self):
        return len(self.nodes)

    @property
    def is_bimodal(self) -> bool:
        return self.modes is not None

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in self.nodes]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self) -> list[int]:
        return [len(a) for a in self.neighbours()]

    def components(self) -> list[list[int]]:
        """Connected components as sorted index lists, in order of first node."""
        adj = self.neighbours()
        seen = [False] * len(self.nodes)
        comps = []
        for s in range(len(self.nodes)):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            comps.append(sorted(comp))
        return comps

    def subgraph(self, keep: list[int]) -> "WordGraph":
        remap = {old: new for new, old in enumerate(keep)}
        edges = [(remap[i], remap[j], w) for i, j, w in self.edges if i in remap and j in remap]
        return WordGraph(
            nodes=[self.nodes[i] for i in keep],
            edges=edges,
            frequencies=[self.frequencies[i] for i in keep],
            threshold=self.threshold,
            source_measure=self.source_measure,
            modes=None if self.modes is None else [self.modes[i] for i in keep],
        )

    def without_isolates(self) -> "WordGraph":
        deg = self.degrees()
        return self.subgraph([i for i, d in enumerate(deg) if d > 0])

    def same_structure(self, other: "WordGraph") -> bool:
        """Equal labels, edges and weights (what Pajek interchange preserves)."""
        return self.nodes == other.nodes and sorted(self.edges) == sorted(other.edges)
