"""Pajek and SVG output for word graphs."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParseError
from .graph import COL_MODE, ROW_MODE, WordGraph
from .layout import LayoutResult

_VERTEX_RE = re.compile(r'^(\d+)\s+"((?:[^"]|"")*)"(.*)$')


def _num(w) -> str:
    if isinstance(w, (int, np.integer)):
        return str(int(w))
    w = float(w)
    if w.is_integer() and abs(w) < 1e15:
        return str(int(w))
    return repr(w)


def _normalized(positions: np.ndarray) -> np.ndarray:
    """Map coordinates into [0, 1] with a common scale for both axes."""
    if len(positions) == 0:
        return positions
    lo = positions.min(axis=0)
    span = float((positions.max(axis=0) - lo).max())
    if span == 0:
        return np.full_like(positions, 0.5)
    return (positions - lo) / span


def write_pajek(graph: WordGraph, layout: LayoutResult | None = None) -> str:
    n = len(graph)
    header = f"*Vertices {n}"
    if graph.is_bimodal:
        n_rows = sum(1 for m in graph.modes if m == ROW_MODE)
        if graph.modes != [ROW_MODE] * n_rows + [COL_MODE] * (n - n_rows):
            raise ValueError("bimodal graphs must list reference nodes first")
        header += f" {n_rows}"
    lines = [header]
    coords = _normalized(layout.positions) if layout is not None else None
    for i, label in enumerate(graph.nodes):
        line = f'{i + 1} "{label.replace(chr(34), chr(34) * 2)}"'
        if coords is not None:
            line += f" {coords[i, 0]:.4f} {coords[i, 1]:.4f}"
        lines.append(line)
    lines.append("*Edges")
    for i, j, w in sorted(graph.edges):
        lines.append(f"{i + 1} {j + 1} {_num(w)}")
    return "\n".join(lines) + "\n"


def _parse_weight(tok: str):
    return int(tok) if re.fullmatch(r"-?\d+", tok) else float(tok)


def read_pajek(text: str) -> WordGraph:
    lines = text.replace("\r\n", "\n").split("\n")
    pos = 0

    def err(msg):
        raise ParseError(None, msg, line=pos + 1)

    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    if pos >= len(lines) or not text.strip():
        raise ParseError(None, "empty document", line=1)
    head = lines[pos].split()
    if not head or head[0].lower() != "*vertices" or len(head) not in (2, 3):
        err("expected '*Vertices n'")
    try:
        n = int(head[1])
        n_rows = int(head[2]) if len(head) == 3 else None
    except ValueError:
        err("vertex count is not an integer")
    if n < 0 or (n_rows is not None and not 0 <= n_rows <= n):
        err("invalid vertex counts")
    pos += 1
    labels = []
    while len(labels) < n:
        if pos >= len(lines):
            err("missing vertex lines")
        m = _VERTEX_RE.match(lines[pos].strip())
        if not m:
            err("malformed vertex line")
        if int(m.group(1)) != len(labels) + 1:
            err("vertex ids must be dense and ascending")
        labels.append(m.group(2).replace('""', '"'))
        pos += 1
    if pos >= len(lines) or lines[pos].strip().lower() != "*edges":
        err("expected '*Edges'")
    pos += 1
    edges = []
    while pos < len(lines):
        raw = lines[pos].strip()
        if raw:
            parts = raw.split()
            try:
                i, j = int(parts[0]), int(parts[1])
                w = _parse_weight(parts[2]) if len(parts) > 2 else 1
            except (ValueError, IndexError):
                err("malformed edge line")
            if not (1 <= i <= n and 1 <= j <= n):
                err(f"edge endpoint out of range 1..{n}")
            if i == j:
                err("self-loop")
            if i > j:
                i, j = j, i
            edges.append((i - 1, j - 1, w))
        pos += 1
    modes = None
    if n_rows is not None:
        modes = [ROW_MODE] * n_rows + [COL_MODE] * (n - n_rows)
    return WordGraph(labels, edges, modes=modes)


@dataclass
class SvgStyle:
    width: int = 800
    height: int = 800
    margin: int = 60
    max_radius: float = 14.0
    edge_color: str = "#999999"
    fill: str = "#4a7bb7"
    ref_fill: str = "#d9534f"
    pat_fill: str = "#ffffff"
    stroke: str = "#333333"
    font_size: int = 10


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def write_svg(graph: WordGraph, layout: LayoutResult | None, style: SvgStyle | None = None) -> str:
    """Render a laid-out graph: edges first, then node circles and labels.

    Node radius grows with the square root of the term frequency.  Bimodal
    graphs fill reference words and patent words differently.
    """
    style = style or SvgStyle()
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
    ]
    n = len(graph)
    if n:
        if layout is None or len(layout.positions) != n:
            raise ValueError("layout must cover every node")
        unit = _normalized(layout.positions)
        inner_w = style.width - 2 * style.margin
        inner_h = style.height - 2 * style.margin
        side = min(inner_w, inner_h)
        xy = [(style.margin + float(x) * side, style.margin + float(y) * side) for x, y in unit]
        fmax = max(max(graph.frequencies), 1e-12)
        radius = [max(style.max_radius * math.sqrt(max(f, 0.0) / fmax), 2.0) for f in graph.frequencies]

        out.append(f'<g stroke="{style.edge_color}" stroke-width="1">')
        for i, j, _ in sorted(graph.edges, key=lambda e: (graph.nodes[e[0]], graph.nodes[e[1]])):
            (x1, y1), (x2, y2) = xy[i], xy[j]
            out.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
        out.append("</g>")

        order = sorted(range(n), key=lambda i: graph.nodes[i])
        out.append(f'<g stroke="{style.stroke}" stroke-width="1">')
        for i in order:
            fill = style.fill
            if graph.modes is not None:
                fill = style.ref_fill if graph.modes[i] == ROW_MODE else style.pat_fill
            x, y = xy[i]
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius[i])}" fill="{fill}"/>')
        out.append("</g>")
        out.append(f'<g font-family="sans-serif" font-size="{style.font_size}" fill="#000000">')
        for i in order:
            x, y = xy[i]
            out.append(f'<text x="{_fmt(x + radius[i] + 2)}" y="{_fmt(y + style.font_size / 3)}">'
                       f"{escape(graph.nodes[i])}</text>")
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter_svg(points: list[tuple[str, float, float]], style: SvgStyle | None = None,
                      axis_labels: tuple[str, str] = ("factor 1", "factor 2")) -> str:
    """Scatter plot of labelled points in [-1, 1]^2 (component-plane plots)."""
    style = style or SvgStyle()
    w, h, m = style.width, style.height, style.margin
    side = min(w, h) - 2 * m

    def px(v):
        return m + (max(-1.0, min(1.0, v)) + 1.0) / 2.0 * side

    def py(v):
        return m + (1.0 - (max(-1.0, min(1.0, v)) + 1.0) / 2.0) * side

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
        f'<line x1="{_fmt(px(-1))}" y1="{_fmt(py(0))}" x2="{_fmt(px(1))}" y2="{_fmt(py(0))}" stroke="#999999"/>',
        f'<line x1="{_fmt(px(0))}" y1="{_fmt(py(-1))}" x2="{_fmt(px(0))}" y2="{_fmt(py(1))}" stroke="#999999"/>',
        f'<text x="{_fmt(px(1) - 60)}" y="{_fmt(py(0) - 6)}" font-size="{style.font_size}">{escape(axis_labels[0])}</text>',
        f'<text x="{_fmt(px(0) + 6)}" y="{_fmt(py(1) + 12)}" font-size="{style.font_size}">{escape(axis_labels[1])}</text>',
    ]
    for term, a, b in sorted(points):
        out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{style.fill}"/>')
        out.append(f'<text x="{_fmt(px(a) + 5)}" y="{_fmt(py(b) + 3)}" font-size="{style.font_size}">{escape(term)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
