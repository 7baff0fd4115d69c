"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path

from cardsim import __version__
from cardsim.cardsort import parse_cardsort_csv, participant_similarity, wide_to_long
from cardsim.correlation import (
    DEFAULT_LSA_DIMS,
    METHODS,
    ExperimentConfig,
    best_preprocess,
    default_grid,
    lsa_dimension_limit,
    lsa_dimension_sweep,
    similarity_for,
    sweep,
)
from cardsim.errors import CardsimError, ConfigError, InputError, NumericError
from cardsim.montecarlo import DEFAULT_ITERATIONS, DEFAULT_K, make_rng, observed_silhouette, simulate
from cardsim.report import build_manifest, file_sha256, write_json
from cardsim.similarity import cosine_similarity_matrix
from cardsim.svg import line_plot_svg, render_heatmap_svg
from cardsim.text import PreprocessConfig, _default_stopwords, load_stopwords, read_corpus_csv, stopwords_digest
from cardsim.vectors import lsa_reduce, tfidf_matrix

log = logging.getLogger("cardsim")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _stopwords(path):
    words = _default_stopwords() if path is None else load_stopwords(path)
    entry = {"source": "builtin" if path is None else str(path), "sha256": stopwords_digest(words)}
    return words, entry


def _wordnet(directory):
    from cardsim.wordnet import load_wordnet

    db = load_wordnet(directory)
    return db, {"source": "bundled" if directory is None else str(directory), "version": db.version}


def _parse_config_entry(d, idx, stopwords, default_k):
    if not isinstance(d, dict):
        raise ConfigError(f"grid entry #{idx} must be an object")
    allowed = {"method", "stopwords_included", "normalization", "ngram", "lsa_dims"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"grid entry #{idx} has unknown keys {sorted(unknown)}")
    try:
        method = d["method"]
        ngram = d.get("ngram", 1)
        if isinstance(ngram, list):
            ngram = tuple(ngram)
        pre = PreprocessConfig(
            include_stopwords=bool(d.get("stopwords_included", True)),
            normalization=d.get("normalization", "none"),
            ngram_order=ngram,
            stopword_list=stopwords,
        )
        k = d.get("lsa_dims", default_k if method == "lsa" else None)
        return ExperimentConfig(method, pre, k)
    except KeyError as exc:
        raise ConfigError(f"grid entry #{idx} is missing {exc.args[0]!r}") from None
    except InputError as exc:
        raise ConfigError(f"grid entry #{idx}: {exc}") from None


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", str(path))
    return cfg


def _clamp_lsa(grid, corpus):
    """LSA cells keep their requested k unless the corpus has fewer
    dimensions, in which case k drops to the largest valid value."""
    out = []
    lowered = {}
    for cfg in grid:
        if cfg.method == "lsa":
            limit = lsa_dimension_limit(corpus, cfg.preprocess)
            if cfg.lsa_dims > limit:
                lowered.setdefault((cfg.lsa_dims, limit), []).append(cfg.label)
                cfg = ExperimentConfig("lsa", cfg.preprocess, limit)
        out.append(cfg)
    for (k, limit), labels in sorted(lowered.items()):
        log.warning("LSA k=%d exceeds the corpus rank bound in %d cell(s); using k=%d", k, len(labels), limit)
        log.info("lowered cells: %s", ", ".join(labels))
    return out


def _matrix_json(sim):
    return {"order": list(sim.order), "values": sim.values.tolist()}


def cmd_analyze(
    corpus, cardsort, out, *, config=None, stopwords=None, wordnet_dir=None, lsa_dims=None, jobs=1, seed=None
) -> dict:
    out = Path(out)
    corpus_obj = read_corpus_csv(corpus)
    study = parse_cardsort_csv(cardsort, corpus_obj.ids)
    words, stop_entry = _stopwords(stopwords)
    cfg_file = load_config(config)
    k = lsa_dims if lsa_dims is not None else cfg_file.get("lsa_dims", DEFAULT_LSA_DIMS)
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"lsa_dims must be a positive integer, got {k!r}")
    if "grid" in cfg_file:
        if not isinstance(cfg_file["grid"], list):
            raise ConfigError("config 'grid' must be a list", str(config))
        grid = [_parse_config_entry(d, i, words, k) for i, d in enumerate(cfg_file["grid"])]
    else:
        grid = default_grid(k, words)
    grid = _clamp_lsa(grid, corpus_obj)

    db = wn_entry = None
    if any(g.needs_wordnet for g in grid):
        db, wn_entry = _wordnet(wordnet_dir)

    records = sweep(corpus_obj, study, grid, db, workers=jobs)
    participant = participant_similarity(study)

    out.mkdir(parents=True, exist_ok=True)
    cell = int(cfg_file.get("heatmap_cell", 12))
    labels = bool(cfg_file.get("heatmap_labels", True))
    heatmaps = []
    matrices = {"participant": _matrix_json(participant)}
    render_heatmap_svg(participant, out / "heatmap_participant.svg", "participants", cell, labels)
    heatmaps.append("heatmap_participant.svg")
    for method in METHODS:
        mine = [r for r in records if r.config.method == method]
        if not mine:
            continue
        best = max(mine, key=lambda r: r.pearson_r)  # first wins ties
        sim = similarity_for(corpus_obj, best.config, db)
        name = f"heatmap_{method}.svg"
        render_heatmap_svg(sim, out / name, best.config.label, cell, labels)
        heatmaps.append(name)
        matrices[method] = dict(_matrix_json(sim), config=best.config.as_dict(), pearson_r=best.pearson_r)

    manifest = build_manifest(
        corpus=corpus,
        cardsort=cardsort,
        stopwords=stop_entry,
        wordnet=wn_entry,
        seed=seed,
        command="analyze",
        lsa_dims_requested=k,
        config=None if config is None else {"path": str(config), "sha256": file_sha256(config)},
    )
    report = {
        "manifest": manifest,
        "records": [r.as_dict() for r in records],
        "matrices": matrices,
        "heatmaps": heatmaps,
    }
    write_json(report, out / "report.json")
    return report


def cmd_simulate(cardsort, out, *, iterations=DEFAULT_ITERATIONS, k=DEFAULT_K, seed=0, corpus=None, jobs=1) -> dict:
    out = Path(out)
    item_ids = None if corpus is None else read_corpus_csv(corpus).ids
    study = parse_cardsort_csv(cardsort, item_ids)
    if iterations < 1:
        raise InputError(f"--iterations must be >= 1, got {iterations}")
    observed = observed_silhouette(study, k, make_rng(seed))
    dist = simulate(study, iterations, k, seed, workers=jobs)
    manifest = build_manifest(corpus=corpus, cardsort=cardsort, seed=seed, command="simulate", k=k, iterations=iterations)
    report = {
        "manifest": manifest,
        "observed": observed,
        "min": dist.min,
        "max": dist.max,
        "mean": dist.mean,
        "values": list(dist.values),
    }
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "simulate.json")
    return report


def parse_range(text) -> list[int]:
    """``"2..20"``, ``"2:20"`` or ``"2-20"`` (inclusive), or a comma list."""
    text = str(text).strip()
    m = re.fullmatch(r"(\d+)\s*(?:\.\.|:|-)\s*(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise InputError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InputError(f"cannot parse dimension range {text!r}") from None


def cmd_lsadim(corpus, cardsort, out, *, dims="2..20", stopwords=None, jobs=1) -> dict:
    out = Path(out)
    corpus_obj = read_corpus_csv(corpus)
    study = parse_cardsort_csv(cardsort, corpus_obj.ids)
    words, stop_entry = _stopwords(stopwords)
    ks = parse_range(dims) if isinstance(dims, str) else list(dims)
    pre = best_preprocess(words)
    series = lsa_dimension_sweep(corpus_obj, study, ks, pre, workers=jobs)
    tfidf_cfg = ExperimentConfig("tfidf", pre)
    tfidf_r = sweep(corpus_obj, study, [tfidf_cfg])[0].pearson_r
    limit = lsa_dimension_limit(corpus_obj, pre)
    full = None
    if limit in ks:
        # cosine agreement between full-rank LSA and plain TF-IDF
        from cardsim.correlation import _doc_term

        tf = tfidf_matrix(_doc_term(corpus_obj, pre, None))
        a = cosine_similarity_matrix(tf).values
        b = cosine_similarity_matrix(lsa_reduce(tf, limit)).values
        full = {"k": limit, "max_abs_cosine_diff": float(abs(a - b).max())}
    best_k, best_r = max(series, key=lambda kr: kr[1])
    report = {
        "manifest": build_manifest(corpus=corpus, cardsort=cardsort, stopwords=stop_entry, command="lsadim"),
        "series": [{"k": k, "pearson_r": r} for k, r in series],
        "best": {"k": best_k, "pearson_r": best_r},
        "tfidf_pearson_r": tfidf_r,
        "rank_bound": limit,
        "full_rank_check": full,
    }
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "lsadim.json")
    svg = line_plot_svg([k for k, _ in series], [r for _, r in series], "LSA dimension sweep", "dimensions", "Pearson r")
    (out / "lsadim.svg").write_text(svg, encoding="utf-8")
    return report


def cmd_wide2long(wide, out, corpus=None):
    with open(wide, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["participant", "group"]:
        raise InputError("wide file needs a header 'participant,group,<item ids...>'", str(wide), 1)
    item_ids = [c.strip() for c in rows[0][2:]]
    if corpus is not None:
        known = set(read_corpus_csv(corpus).ids)
        unknown = [i for i in item_ids if i not in known]
        if unknown:
            raise InputError(f"item {unknown[0]!r} is not in the corpus", str(wide), 1)
    triples = wide_to_long([r for r in rows[1:] if any(c.strip() for c in r)], item_ids)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant", "item", "group"])
        w.writerows(triples)
    return len(triples)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cardsim", description="Compare text similarity measures with card-sort similarity.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="correlate every configuration with the card-sort data")
    a.add_argument("--corpus", required=True)
    a.add_argument("--cardsort", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--config")
    a.add_argument("--stopwords")
    a.add_argument("--wordnet-dir")
    a.add_argument("--lsa-dims", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("simulate", help="random re-sorting silhouette baseline")
    s.add_argument("--cardsort", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--corpus")
    s.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    s.add_argument("--k", type=int, default=DEFAULT_K)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)

    d = sub.add_parser("lsadim", help="Pearson r across LSA dimensions")
    d.add_argument("--corpus", required=True)
    d.add_argument("--cardsort", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--lsa-dims", default="2..20", help="inclusive range like 2..20, or a comma list")
    d.add_argument("--stopwords")
    d.add_argument("--jobs", type=int, default=1)

    w = sub.add_parser("wide2long", help="convert a 0/1 wide card-sort table to long format")
    w.add_argument("wide")
    w.add_argument("--out", required=True)
    w.add_argument("--corpus")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "analyze":
            cmd_analyze(
                args.corpus,
                args.cardsort,
                args.out,
                config=args.config,
                stopwords=args.stopwords,
                wordnet_dir=args.wordnet_dir,
                lsa_dims=args.lsa_dims,
                jobs=args.jobs,
                seed=args.seed,
            )
        elif args.command == "simulate":
            cmd_simulate(
                args.cardsort, args.out, iterations=args.iterations, k=args.k, seed=args.seed, corpus=args.corpus, jobs=args.jobs
            )
        elif args.command == "lsadim":
            cmd_lsadim(args.corpus, args.cardsort, args.out, dims=args.lsa_dims, stopwords=args.stopwords, jobs=args.jobs)
        elif args.command == "wide2long":
            cmd_wide2long(args.wide, args.out, args.corpus)
    except InputError as exc:
        print(f"cardsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"cardsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CardsimError as exc:  # pragma: no cover - every leaf is one of the two above
        print(f"cardsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"cardsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
