"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 1 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, comatrix, corpus, export, factors, layout, pipeline, simnorm, textkit
from .errors import ConfigError, PatentMapError, StageError

log = logging.getLogger("patentmap")


def _config(args) -> pipeline.PipelineConfig | None:
    if getattr(args, "config", None):
        return pipeline.load_config(args.config)
    return None


def _pick(value, cfg, attr, default=None):
    if value is not None:
        return value
    if cfg is not None:
        return getattr(cfg, attr)
    return default


def _text(cfg):
    stop = textkit.load_stopwords(cfg.stopwords if cfg else None)
    exc = textkit.load_plural_exceptions(cfg.plural_exceptions if cfg else None)
    return stop, exc


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        corpus.atomic_write(Path(path), text)


def _read_vocab(path) -> comatrix.TermVocabulary:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return comatrix.TermVocabulary([(r["term"], int(r["frequency"])) for r in rows], 0)


def _read_layout(path, graph) -> layout.LayoutResult:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = {r["node"]: r for r in csv.DictReader(fh)}
    missing = [n for n in graph.nodes if n not in rows]
    if missing:
        raise ConfigError(f"layout lacks nodes: {', '.join(missing[:5])}")
    pos = np.array([[float(rows[n]["x"]), float(rows[n]["y"])] for n in graph.nodes]).reshape(len(graph), 2)
    return layout.LayoutResult(pos, component_id=[int(rows[n]["component"]) for n in graph.nodes])


def _layout_params(args, cfg) -> layout.LayoutParams:
    base = cfg.layout if cfg else layout.LayoutParams()
    return layout.LayoutParams(
        L=args.L if args.L is not None else base.L,
        K=args.K if args.K is not None else base.K,
        max_iterations=args.max_iterations if args.max_iterations is not None else base.max_iterations,
        gradient_tolerance=base.gradient_tolerance,
        seed=args.seed if args.seed is not None else base.seed,
    )


def cmd_harvest(args):
    cfg = _config(args)
    plan_args = dict(cfg.harvest or {}) if cfg else {}
    for key in ("query_template", "total_hits", "page_size", "rate_limit"):
        v = getattr(args, key)
        if v is not None:
            plan_args[key] = v
    if "query_template" not in plan_args or "total_hits" not in plan_args:
        raise ConfigError("harvest needs --query-template and --total-hits (or a [harvest] config)")
    if args.no_resume:
        plan_args["resume"] = False
    plan = corpus.HarvestPlan(output_dir=Path(args.output), **plan_args)
    urls = corpus.build_harvest_urls(plan)
    n = sum(1 for _ in corpus.fetch(plan, urls, fixtures=args.fixtures))
    failures = corpus.FailureJournal(plan.output_dir / "failures.jsonl").entries()
    print(f"fetched {n} documents into {plan.output_dir} ({len(failures)} failures journaled)")


def cmd_parse(args):
    journal = corpus.FailureJournal(Path(args.output).parent / "failures.jsonl")
    records = pipeline.parse_documents(corpus.load_documents(args.pages), journal)
    if args.assignee_root:
        records = corpus.filter_assignees(records, args.assignee_root)
    corpus.write_jsonl(records, args.output)
    print(f"parsed {len(records)} records into {args.output}")


def cmd_stats(args):
    cfg = _config(args)
    stop, _ = _text(cfg)
    text, data = pipeline.report_stats(corpus.read_jsonl(args.corpus), stop)
    sys.stdout.write(text)
    if args.output:
        _write(args.output, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _title_terms(records, cfg):
    stop, exc = _text(cfg)
    return [textkit.normalize_title(r.title, stop, exc) for r in records]


def _ref_terms(records, cfg):
    stop, exc = _text(cfg)
    return [[textkit.normalize_title(t, stop, exc) for t in r.quoted_titles()] for r in records]


def cmd_vocab(args):
    cfg = _config(args)
    records = corpus.read_jsonl(args.corpus)
    if args.references:
        lists = [t for rl in _ref_terms(records, cfg) for t in rl]
        min_freq = _pick(args.min_freq, cfg, "ref_min_freq", 0)
        cap = _pick(args.cap, cfg, "ref_cap")
    else:
        lists = _title_terms(records, cfg)
        min_freq = _pick(args.min_freq, cfg, "patent_min_freq", 0)
        cap = _pick(args.cap, cfg, "patent_cap")
    vocab = comatrix.build_vocabulary(lists, min_freq, cap)
    _write(args.output, comatrix.vocabulary_to_csv(vocab))


def cmd_matrix(args):
    cfg = _config(args)
    records = corpus.read_jsonl(args.corpus)
    vocab = _read_vocab(args.vocab)
    titles = _title_terms(records, cfg)
    if args.ref_vocab:
        rule = _pick(args.rule, cfg, "bimodal_rule", comatrix.PRODUCT)
        bm = comatrix.bimodal(zip(titles, _ref_terms(records, cfg)), vocab, _read_vocab(args.ref_vocab), rule)
        _write(args.output, comatrix.matrix_to_csv(bm.row_terms, bm.col_terms, bm.counts))
    else:
        mode = _pick(args.mode, cfg, "matrix_mode", comatrix.DOCUMENT)
        co = comatrix.cooccurrence(titles, vocab, mode)
        _write(args.output, comatrix.matrix_to_csv(co.terms, co.terms, co.counts))


def cmd_similarity(args):
    cfg = _config(args)
    measure = _pick(args.measure, cfg, "measure", simnorm.COSINE)
    if args.matrix:
        terms, _, rows = comatrix.matrix_from_csv(Path(args.matrix).read_text(encoding="utf-8"))
        if np.all(rows == np.round(rows)):
            rows = rows.astype(np.int64)
    else:
        if not (args.corpus and args.vocab):
            raise ConfigError("similarity needs --matrix, or --corpus with --vocab")
        vocab = _read_vocab(args.vocab)
        terms = vocab.terms
        rows = comatrix.occurrence_matrix(_title_terms(corpus.read_jsonl(args.corpus), cfg), terms)
    sim = simnorm.similarity_matrix(rows, measure, terms)
    _write(args.output, sim.to_csv())


def cmd_graph(args):
    cfg = _config(args)
    text = Path(args.matrix).read_text(encoding="utf-8")
    terms, _, values = comatrix.matrix_from_csv(text)
    freqs = _read_vocab(args.vocab).frequencies if args.vocab else None
    if args.counts:
        tau = _pick(args.threshold, cfg, "cooc_threshold", 10)
        m = comatrix.CooccMatrix(terms, values.astype(np.int64))
    else:
        tau = _pick(args.threshold, cfg, "threshold", 0.1)
        measure = "cosine"
        if text.startswith("# measure="):
            measure = text.split("\n", 1)[0].split("=", 1)[1].strip()
        m = simnorm.SimilarityMatrix(terms, values, measure)
    g = simnorm.threshold_graph(m, tau, freqs)
    _write(args.output, export.write_pajek(g))
    log.info("graph: %d nodes, %d edges", len(g), len(g.edges))


def cmd_layout(args):
    cfg = _config(args)
    g = export.read_pajek(Path(args.graph).read_text(encoding="utf-8"))
    res = layout.layout_components(g, _layout_params(args, cfg))
    _write(args.output, res.to_csv(g))
    log.info("layout: energy %.6g after %d iterations", res.final_energy, res.iterations_used)


def cmd_factors(args):
    cfg = _config(args)
    k = _pick(args.k, cfg, "k", 6)
    terms, _, values = comatrix.matrix_from_csv(Path(args.matrix).read_text(encoding="utf-8"))
    r = factors.correlation_matrix(values, terms)
    sol = factors.factor_solution(r, min(k, len(r.terms)))
    out = Path(args.output)
    corpus.atomic_write(out / "loadings.csv", sol.loadings_csv())
    corpus.atomic_write(out / "scree.csv", sol.scree_csv())
    if sol.k >= 2:
        pts = factors.component_plane(sol, (1, 2))
        corpus.atomic_write(out / "component_plane.csv",
                            "term,factor1,factor2\n" + "".join(f"{t},{a!r},{b!r}\n" for t, a, b in pts))
        corpus.atomic_write(out / "component_plane.svg", export.write_scatter_svg(pts))


def cmd_export(args):
    g = export.read_pajek(Path(args.graph).read_text(encoding="utf-8"))
    if args.vocab:
        freqs = _read_vocab(args.vocab).frequencies
        g.frequencies = [float(freqs.get(n, 1)) for n in g.nodes]
    res = _read_layout(args.layout, g) if args.layout else layout.layout_components(g)
    if args.svg:
        _write(args.svg, export.write_svg(g, res))
    if args.pajek:
        _write(args.pajek, export.write_pajek(g, res))


def cmd_pipeline(args):
    cfg = _config(args)
    if cfg is None:
        raise ConfigError("pipeline needs --config")
    manifest = pipeline.run_pipeline(cfg, args.output)
    out = args.output or cfg.output_dir
    for name, summary in manifest.get("graphs", {}).items():
        print(f"{name}: {summary['nodes']} nodes, {summary['edges']} edges")
    print(f"bundle written to {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patentmap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", help="TOML recipe or run manifest")
        sp.set_defaults(func=func)
        return sp

    sp = add("harvest", cmd_harvest, "download (or replay) result pages")
    sp.add_argument("-o", "--output", required=True, help="directory for p<N>.htm files")
    sp.add_argument("--fixtures", help="replay saved pages from this directory")
    sp.add_argument("--query-template", dest="query_template")
    sp.add_argument("--total-hits", dest="total_hits", type=int)
    sp.add_argument("--page-size", dest="page_size", type=int)
    sp.add_argument("--rate-limit", dest="rate_limit", type=float, help="milliseconds between requests")
    sp.add_argument("--no-resume", action="store_true")

    sp = add("parse", cmd_parse, "parse saved pages into corpus.jsonl")
    sp.add_argument("pages")
    sp.add_argument("-o", "--output", default="corpus.jsonl")
    sp.add_argument("--assignee-root", help='keep patents with an assignee word starting with this root (e.g. "univ")')

    sp = add("stats", cmd_stats, "corpus statistics")
    sp.add_argument("corpus")
    sp.add_argument("-o", "--output", help="write JSON stats here")

    sp = add("vocab", cmd_vocab, "thresholded vocabulary")
    sp.add_argument("corpus")
    sp.add_argument("--min-freq", type=int)
    sp.add_argument("--cap", type=int)
    sp.add_argument("--references", action="store_true", help="use quoted reference titles")
    sp.add_argument("-o", "--output")

    sp = add("matrix", cmd_matrix, "co-occurrence or bimodal matrix")
    sp.add_argument("corpus")
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--ref-vocab", help="build the bimodal reference x patent matrix")
    sp.add_argument("--mode", choices=[comatrix.DOCUMENT, comatrix.OCCURRENCE])
    sp.add_argument("--rule", choices=[comatrix.PRODUCT, comatrix.INCIDENCE])
    sp.add_argument("-o", "--output")

    sp = add("similarity", cmd_similarity, "similarity matrix")
    sp.add_argument("--matrix", help="use rows of this CSV matrix")
    sp.add_argument("--corpus", help="with --vocab: word x document rows")
    sp.add_argument("--vocab")
    sp.add_argument("--measure", choices=list(simnorm.MEASURES))
    sp.add_argument("-o", "--output")

    sp = add("graph", cmd_graph, "threshold a matrix into a Pajek graph")
    sp.add_argument("matrix")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--counts", action="store_true", help="matrix holds raw co-occurrence counts")
    sp.add_argument("--vocab", help="node frequencies")
    sp.add_argument("-o", "--output")

    def layout_opts(sp):
        sp.add_argument("--L", type=float)
        sp.add_argument("--K", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--max-iterations", dest="max_iterations", type=int)

    sp = add("layout", cmd_layout, "Kamada-Kawai layout of a Pajek graph")
    sp.add_argument("graph")
    layout_opts(sp)
    sp.add_argument("-o", "--output")

    sp = add("factors", cmd_factors, "factor analysis of a matrix's row profiles")
    sp.add_argument("matrix")
    sp.add_argument("-k", type=int)
    sp.add_argument("-o", "--output", default=".")

    sp = add("export", cmd_export, "render a graph to SVG / Pajek with coordinates")
    sp.add_argument("graph")
    sp.add_argument("--layout", help="layout CSV (computed if omitted)")
    sp.add_argument("--vocab", help="node frequencies for circle sizes")
    sp.add_argument("--svg")
    sp.add_argument("--pajek")

    sp = add("pipeline", cmd_pipeline, "run a full recipe")
    sp.add_argument("-o", "--output", help="override the output directory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PatentMapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
