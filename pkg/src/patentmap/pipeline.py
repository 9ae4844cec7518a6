"""Config-driven end-to-end runs that write a reproducible artifact bundle."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, comatrix, corpus, export, factors, layout, simnorm, textkit
from .errors import ConfigError, ParseError, StageError

log = logging.getLogger(__name__)

WORD_DOCUMENT = "word-document"
COOCCURRENCE = "cooccurrence"

_PATH_KEYS = ("fixtures", "jsonl", "stopwords", "plural_exceptions", "output_dir")


@dataclass
class PipelineConfig:
    output_dir: Path = Path("out")
    # corpus source: exactly one of fixtures / jsonl / harvest
    fixtures: Path | None = None
    jsonl: Path | None = None
    harvest: dict | None = None
    assignee_root: str | None = None
    assignee_exclusions: list[str] = field(default_factory=lambda: list(corpus.DEFAULT_ASSIGNEE_EXCLUSIONS))
    require_quoted_nplr: bool = False
    stopwords: Path | None = None
    plural_exceptions: Path | None = None
    patent_min_freq: int = 26
    ref_min_freq: int = 438
    patent_cap: int | None = None
    ref_cap: int | None = None
    matrix_mode: str = comatrix.DOCUMENT
    bimodal_rule: str = comatrix.PRODUCT
    measure: str = simnorm.COSINE
    operand: str = WORD_DOCUMENT
    threshold: float = 0.1
    cooc_threshold: float = 10
    bimodal_threshold: float = 1
    layout: layout.LayoutParams = field(default_factory=layout.LayoutParams)
    k: int = 6
    name: str = "run"

    def validate(self) -> None:
        sources = [s for s in (self.fixtures, self.jsonl, self.harvest) if s]
        if len(sources) != 1:
            raise ConfigError("configure exactly one corpus source: fixtures, jsonl or harvest")
        for key in ("patent_min_freq", "ref_min_freq"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0")
        for key in ("threshold", "cooc_threshold", "bimodal_threshold"):
            if math.isnan(getattr(self, key)):
                raise ConfigError(f"{key} must be a number")
        if self.harvest:
            allowed = {f.name for f in fields(corpus.HarvestPlan)} - {"output_dir"}
            extra = set(self.harvest) - allowed
            if extra or "query_template" not in self.harvest or "total_hits" not in self.harvest:
                raise ConfigError("[harvest] needs query_template and total_hits; unknown keys: "
                                  + ", ".join(sorted(extra)))
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.matrix_mode not in (comatrix.DOCUMENT, comatrix.OCCURRENCE):
            raise ConfigError(f"unknown matrix mode {self.matrix_mode!r}")
        if self.bimodal_rule not in (comatrix.PRODUCT, comatrix.INCIDENCE):
            raise ConfigError(f"unknown bimodal rule {self.bimodal_rule!r}")
        if self.measure not in simnorm.MEASURES:
            raise ConfigError(f"unknown similarity measure {self.measure!r}")
        if self.operand not in (WORD_DOCUMENT, COOCCURRENCE):
            raise ConfigError(f"unknown similarity operand {self.operand!r}")

    def to_dict(self, relative_to: Path | None = None) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "layout":
                v = asdict(v)
            elif isinstance(v, Path):
                v = os.path.relpath(v, relative_to) if relative_to else str(v)
                v = v.replace(os.sep, "/")
            elif isinstance(v, float) and math.isinf(v):
                v = "inf" if v > 0 else "-inf"
            d[f.name] = v
        return d


_FLAT = {
    "corpus": ("fixtures", "jsonl", "assignee_root", "assignee_exclusions", "require_quoted_nplr"),
    "text": ("stopwords", "plural_exceptions"),
    "vocab": ("patent_min_freq", "ref_min_freq", "patent_cap", "ref_cap"),
    "matrix": ("matrix_mode", "bimodal_rule"),
    "similarity": ("measure", "operand"),
    "graph": ("threshold", "cooc_threshold", "bimodal_threshold"),
    "factors": ("k",),
}


def config_from_dict(data: dict, base_dir: Path | str = ".") -> PipelineConfig:
    """Build a config from a (possibly sectioned) mapping.

    Relative paths are resolved against ``base_dir``.
    """
    base_dir = Path(base_dir)
    flat: dict[str, Any] = {}
    known = {f.name for f in fields(PipelineConfig)}
    for key, value in data.items():
        if key in _FLAT and isinstance(value, dict):
            for sub, v in value.items():
                if sub not in _FLAT[key]:
                    raise ConfigError(f"unknown key [{key}].{sub}")
                flat[sub] = v
        elif key == "output" and isinstance(value, dict):
            flat["output_dir"] = value.get("dir", "out")
        elif key in known:
            flat[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if isinstance(flat.get("layout"), dict):
        try:
            flat["layout"] = layout.LayoutParams(**flat["layout"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid [layout]: {exc}") from exc
    for key in _PATH_KEYS:
        if flat.get(key):
            flat[key] = base_dir / flat[key]
    for key in ("threshold", "cooc_threshold", "bimodal_threshold"):
        if key in flat:
            try:
                flat[key] = float(flat[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key} must be a number") from exc
    try:
        cfg = PipelineConfig(**flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    """Read a TOML recipe, or a run manifest (JSON) to re-run a bundle."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            data = data.get("config", data)
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(data, path.parent)


# -- stages -------------------------------------------------------------------


def parse_documents(docs: Iterable[corpus.RawDocument], journal: corpus.FailureJournal | None = None):
    records = []
    for doc in docs:
        try:
            records.append(corpus.parse_patent(doc))
        except ParseError as exc:
            log.warning("%s", exc)
            if journal is not None:
                journal.record(doc.record_index, doc.url, f"parse: {exc}", 1)
    return corpus.deduplicate(records)


def load_corpus(cfg: PipelineConfig, out: Path) -> list[corpus.PatentRecord]:
    journal = corpus.FailureJournal(out / "failures.jsonl")
    if not cfg.harvest and journal.path.exists():
        journal.path.unlink()
    if cfg.jsonl:
        records = corpus.read_jsonl(cfg.jsonl)
    elif cfg.fixtures:
        records = parse_documents(corpus.load_documents(cfg.fixtures), journal)
    else:
        plan = corpus.HarvestPlan(output_dir=out / "pages", **cfg.harvest)
        urls = corpus.build_harvest_urls(plan)
        list(corpus.fetch(plan, urls))
        records = parse_documents(corpus.load_documents(plan.output_dir), journal)
    if cfg.assignee_root:
        records = corpus.filter_assignees(records, cfg.assignee_root, cfg.assignee_exclusions)
    return records


def assignee_shares(records: Iterable[corpus.PatentRecord]) -> tuple[int, list[tuple[str, int, float]]]:
    """Share of assignee-held patents per assignee, largest first."""
    held = 0
    counts = Counter()
    for r in records:
        names = {name for name, _ in r.assignees}
        if names:
            held += 1
            counts.update(names)
    shares = [(name, c, 100.0 * c / held) for name, c in counts.items()]
    shares.sort(key=lambda s: (-s[1], s[0]))
    return held, shares


def report_stats(records: list[corpus.PatentRecord], stopwords=None, top: int = 10) -> tuple[str, dict]:
    st = corpus.corpus_stats(records, stopwords)
    held, shares = assignee_shares(records)
    data = asdict(st)
    data["assignee_held_patents"] = held
    data["assignee_shares"] = [{"assignee": n, "patents": c, "percent": round(p, 1)} for n, c, p in shares[:top]]
    lines = [f"{k.replace('_', ' ')}: {v:,}" for k, v in asdict(st).items()]
    if shares:
        lines.append(f"top assignees (of {held:,} assignee-held patents):")
        for n, c, p in shares[:top]:
            lines.append(f"  {n}: {c:,} of {held:,} ({p:.1f}%)")
    return "\n".join(lines) + "\n", data


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Bundle:
    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        corpus.atomic_write(path, text)
        self.files[name] = _sha256(path)
        return path


def _graph_summary(g, res) -> dict:
    return {
        "nodes": len(g),
        "edges": len(g.edges),
        "components": len(set(res.component_id)) if len(g) else 0,
        "final_energy": res.final_energy,
        "iterations": res.iterations_used,
    }


def _emit_graph(bundle: _Bundle, stem: str, g, params: layout.LayoutParams) -> dict:
    res = layout.layout_components(g, params)
    bundle.write(f"{stem}.net", export.write_pajek(g, res))
    bundle.write(f"{stem}_layout.csv", res.to_csv(g))
    bundle.write(f"{stem}.svg", export.write_svg(g, res))
    return _graph_summary(g, res)


def run_pipeline(cfg: PipelineConfig, output_dir: str | Path | None = None) -> dict:
    """Run every stage and write the bundle plus ``manifest.json``.

    A failing stage raises :class:`StageError`; files written by earlier
    stages are kept.
    """
    cfg.validate()
    out = Path(output_dir) if output_dir is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    bundle = _Bundle(out)
    manifest: dict[str, Any] = {
        "tool": "patentmap",
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "name": cfg.name,
        "config": cfg.to_dict(relative_to=out.resolve()),
        "warnings": [],
    }
    stage = "config"
    try:
        stage = "textkit"
        stop = textkit.load_stopwords(cfg.stopwords)
        exceptions = textkit.load_plural_exceptions(cfg.plural_exceptions)
        manifest["stopwords"] = {"source": stop.source if cfg.stopwords is None else Path(cfg.stopwords).name,
                                 "size": len(stop)}

        stage = "corpus"
        records = load_corpus(cfg, out)
        if cfg.require_quoted_nplr:
            records = [r for r in records if r.quoted_titles()]
        corpus.write_jsonl(records, out / "corpus.jsonl")
        bundle.files["corpus.jsonl"] = _sha256(out / "corpus.jsonl")
        text, stats = report_stats(records, stop)
        bundle.write("stats.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
        bundle.write("stats.txt", text)
        manifest["corpus"] = stats

        stage = "vocab"
        titles = [textkit.normalize_title(r.title, stop, exceptions) for r in records]
        refs = [[textkit.normalize_title(t, stop, exceptions) for t in r.quoted_titles()] for r in records]
        pvocab = comatrix.build_vocabulary(titles, cfg.patent_min_freq, cfg.patent_cap)
        rvocab = comatrix.build_vocabulary((t for rl in refs for t in rl), cfg.ref_min_freq, cfg.ref_cap)
        bundle.write("vocab_patent.csv", comatrix.vocabulary_to_csv(pvocab))
        bundle.write("vocab_reference.csv", comatrix.vocabulary_to_csv(rvocab))
        manifest["vocabulary"] = {"patent": [list(e) for e in pvocab.entries],
                                  "reference": [list(e) for e in rvocab.entries]}
        graphs: dict[str, dict] = {}
        manifest["graphs"] = graphs
        if not len(pvocab):
            manifest["warnings"].append("patent vocabulary is empty; matrices skipped")
        else:
            stage = "matrix"
            co = comatrix.cooccurrence(titles, pvocab, cfg.matrix_mode)
            bundle.write("cooccurrence.csv", comatrix.matrix_to_csv(co.terms, co.terms, co.counts))

            stage = "similarity"
            rows = co.counts if cfg.operand == COOCCURRENCE else comatrix.occurrence_matrix(titles, pvocab.terms)
            sim = simnorm.similarity_matrix(rows, cfg.measure, pvocab.terms)
            manifest["warnings"].extend(sim.warnings)
            bundle.write("similarity.csv", sim.to_csv())

            stage = "graph"
            freqs = pvocab.frequencies
            g_co = simnorm.threshold_graph(co, cfg.cooc_threshold, freqs)
            g_sim = simnorm.threshold_graph(sim, cfg.threshold, freqs)

            stage = "layout"
            graphs["cooccurrence"] = _emit_graph(bundle, "cooccurrence", g_co, cfg.layout)
            graphs["similarity"] = _emit_graph(bundle, "similarity", g_sim, cfg.layout)

            stage = "factors"
            manifest["factors"] = _run_factors(bundle, co, cfg.k, manifest["warnings"])

            stage = "bimodal"
            if len(rvocab):
                bm = comatrix.bimodal(zip(titles, refs), pvocab, rvocab, cfg.bimodal_rule)
                bundle.write("bimodal.csv", comatrix.matrix_to_csv(bm.row_terms, bm.col_terms, bm.counts))
                g_bi = layout.bimodal_to_graph(bm, cfg.bimodal_threshold)
                graphs["bimodal"] = _emit_graph(bundle, "bimodal", g_bi, cfg.layout)
            else:
                manifest["warnings"].append("reference vocabulary is empty; bimodal matrix skipped")
    except (StageError, ConfigError):
        raise
    except Exception as exc:
        manifest["failed_stage"] = stage
        manifest["files"] = dict(sorted(bundle.files.items()))
        corpus.atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        raise StageError(stage, exc) from exc

    manifest["files"] = dict(sorted(bundle.files.items()))
    corpus.atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _run_factors(bundle: _Bundle, co: comatrix.CooccMatrix, k: int, warnings: list) -> dict:
    try:
        r = factors.correlation_matrix(co.counts, co.terms)
    except ValueError as exc:
        warnings.append(f"factor analysis skipped: {exc}")
        return {"skipped": str(exc)}
    if r.dropped:
        warnings.append("constant profiles dropped: " + ", ".join(r.dropped))
    n = len(r.terms)
    if k > n:
        warnings.append(f"k={k} exceeds {n} usable profiles; using k={n}")
        k = n
    sol = factors.factor_solution(r, k)
    bundle.write("loadings.csv", sol.loadings_csv())
    bundle.write("scree.csv", sol.scree_csv())
    if k >= 2:
        pts = factors.component_plane(sol, (1, 2))
        lines = ["term,factor1,factor2"] + [f"{t},{a!r},{b!r}" for t, a, b in pts]
        bundle.write("component_plane.csv", "\n".join(lines) + "\n")
        bundle.write("component_plane.svg", export.write_scatter_svg(pts))
    return {"k": k, "n_terms": n, "eigenvalues": [float(v) for v in sol.eigenvalues],
            "explained_variance_ratio": [float(v) for v in sol.explained_variance_ratio]}


def comparable(manifest: dict) -> dict:
    """Manifest without its timestamp, for determinism checks."""
    return {k: v for k, v in manifest.items() if k != "created_at"}
