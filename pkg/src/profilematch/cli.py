"""Command-line surface.

Subcommands: ingest, train, evaluate, features, subsets, rank, curve.
Every artifact is CSV (plus one SVG) written atomically, and every run
is reproducible from the flags plus --seed alone: re-running a command
with identical inputs yields byte-identical output files.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, evaluate, models, pipeline, svgplot
from .errors import ProfileMatchError
from .geo import Geocoder, load_gazetteer
from .images import DirectoryImageStore
from .profiles import (Label, ProfilePair, filter_english, load_corpus,
                       synthesize_negatives)
from .wordnet import parse_wordnet

PROFILE_FIELD_ROWS = ("name", "description", "location", "image_ref",
                      "connections", "language")

# config-file keys mirror the long CLI flags (dashes become underscores)
_CASTS = {
    "seed": int, "jobs": int, "negatives": int, "folds": int,
    "top_k": int, "ls_tolerance": int, "min_leaf": int, "knn_k": int,
    "holdout": float, "svm_lambda": float,
    "english_only": lambda v: v.lower() in ("1", "true", "yes"),
    "haversine": lambda v: v.lower() in ("1", "true", "yes"),
}

_DEFAULTS = {
    "seed": 0, "jobs": 1, "out_dir": ".", "format": "jsonl",
    "kind": "nb", "kinds": "nb,knn,dt,svm", "folds": 10, "top_k": 20,
    "ls_tolerance": 0, "holdout": 0.1, "metrics": pipeline.BEST_FIVE.config_id,
    "english_only": False, "haversine": False,
}


def _atomic(path, write_fn):
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ProfileMatchError(
                    f"{path}:{lineno}: expected key=value, got {line!r}")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args) -> argparse.Namespace:
    """Fill unset flags from --config values, then built-in defaults."""
    config = load_config_file(args.config) if args.config else {}
    for key, raw in config.items():
        if getattr(args, key, None) is None:
            cast = _CASTS.get(key, str)
            setattr(args, key, cast(raw))
    for key, default in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, default)
    return args


def _load_corpus(args):
    corpus = load_corpus(args.profiles, args.links, fmt=args.format)
    if args.english_only:
        corpus = filter_english(corpus)
    return corpus


def _build_context(args, corpus) -> pipeline.PipelineContext:
    graph = None
    if args.wordnet_index and args.wordnet_data:
        graph = parse_wordnet(args.wordnet_index, args.wordnet_data)
    geocoder = None
    if args.gazetteer or args.geo_cache:
        gazetteer = load_gazetteer(args.gazetteer) if args.gazetteer else None
        geocoder = Geocoder(gazetteer=gazetteer, cache_path=args.geo_cache)
    image_store = None
    if args.images_dir:
        image_store = DirectoryImageStore(args.images_dir,
                                          cache_dir=args.image_cache)
    return pipeline.PipelineContext(
        graph=graph, geocoder=geocoder,
        stats=pipeline.ServiceStats.from_corpus(corpus),
        image_store=image_store, ls_tolerance=args.ls_tolerance,
        use_haversine=args.haversine)


def _labeled_pairs(args, corpus):
    positives = corpus.positive_pairs()
    count = args.negatives if args.negatives is not None else len(positives)
    return positives + synthesize_negatives(corpus, count, args.seed)


def _out(args, filename) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, filename)


def _hyperparams(args) -> dict:
    hp = {}
    if getattr(args, "knn_k", None) is not None:
        hp["k"] = args.knn_k
    if getattr(args, "min_leaf", None) is not None:
        hp["min_leaf"] = args.min_leaf
    if getattr(args, "svm_lambda", None) is not None:
        hp["lam"] = args.svm_lambda
    return hp


# ---------------------------------------------------------- commands --

def cmd_ingest(args) -> int:
    corpus = _load_corpus(args)
    per_service: dict[str, int] = {}
    for service, _ in corpus.profiles:
        per_service[service] = per_service.get(service, 0) + 1
    breakdown = ", ".join(f"{s}: {c}" for s, c in sorted(per_service.items()))
    print(f"profiles: {len(corpus.profiles)} ({breakdown})")
    print(f"positive links: {len(corpus.positive_links)}")
    print(f"duplicates dropped: {corpus.duplicates_dropped}")
    print("field missingness:")
    n = max(len(corpus.profiles), 1)
    for fieldname in PROFILE_FIELD_ROWS:
        missing = sum(1 for p in corpus.profiles.values()
                      if getattr(p, fieldname) is None)
        label = "image" if fieldname == "image_ref" else fieldname
        print(f"  {label} {100.0 * missing / n:.1f}%")
    if args.vectors_out:
        cfg = pipeline.MetricConfig.from_config_id(args.metrics)
        ctx = _build_context(args, corpus)
        pipeline.validate_context(cfg, ctx)
        pairs = _labeled_pairs(args, corpus)
        vectors = [pipeline.build_similarity_vector(p, cfg, ctx)
                   for p in pairs]
        _atomic(args.vectors_out,
                lambda tmp: pipeline.write_vectors_csv(tmp, vectors))
        print(f"wrote {len(vectors)} vectors to {args.vectors_out}")
    return 0


def cmd_train(args) -> int:
    vectors = pipeline.read_vectors_csv(args.vectors)
    model = models.train(args.kind, vectors,
                         hyperparams=_hyperparams(args), seed=args.seed)
    path = args.model or _out(args, f"{args.kind}.model")
    _atomic(path, lambda tmp: models.save_model(model, tmp))
    print(f"trained {args.kind} on {model.n_trained} vectors "
          f"({model.config_id}) -> {path}")
    return 0


def cmd_evaluate(args) -> int:
    vectors = pipeline.read_vectors_csv(args.vectors)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    reports = [evaluate.kfold_cv(vectors, kind, k=args.folds, seed=args.seed,
                                 hyperparams=_hyperparams(args))
               for kind in kinds]
    path = _out(args, "evaluation.csv")
    _atomic(path, lambda tmp: evaluate.write_eval_csv(tmp, reports))
    best = max(reports, key=lambda r: r.accuracy)
    print(f"evaluated {len(reports)} classifiers on {len(vectors)} vectors; "
          f"best accuracy {best.accuracy:.3f} ({best.kind}) -> {path}")
    return 0


def cmd_features(args) -> int:
    corpus = _load_corpus(args)
    ctx = _build_context(args, corpus)
    columns = pipeline.available_columns(ctx)
    pairs = _labeled_pairs(args, corpus)
    matrix = pipeline.build_metric_matrix(pairs, ctx, columns=columns,
                                          jobs=args.jobs)
    rows = analysis.feature_report(matrix, seed=args.seed)
    path = _out(args, "features.csv")
    _atomic(path, lambda tmp: analysis.write_feature_report(tmp, rows))
    top = max(rows, key=lambda r: r["ig"])
    print(f"scored {len(rows)} feature/metric columns on {len(pairs)} pairs; "
          f"top IG {top['ig']:.3f} ({top['feature']}:{top['metric']}) "
          f"-> {path}")
    return 0


def cmd_subsets(args) -> int:
    corpus = _load_corpus(args)
    ctx = _build_context(args, corpus)
    pipeline.validate_context(None, ctx, columns=pipeline.COLUMNS)
    pairs = _labeled_pairs(args, corpus)
    matrix = pipeline.build_metric_matrix(pairs, ctx, jobs=args.jobs)
    results = evaluate.subset_search(matrix, args.kind, k=args.folds,
                                     seed=args.seed, jobs=args.jobs,
                                     hyperparams=_hyperparams(args))
    path = _out(args, "subsets.csv")
    _atomic(path, lambda tmp: evaluate.write_subsets_csv(tmp, results))
    print(f"searched {len(results)} configurations with {args.kind}; "
          f"best accuracy {results[0][1]:.3f} ({results[0][0].config_id}) "
          f"-> {path}")
    return 0


def cmd_rank(args) -> int:
    import random as _random

    corpus = _load_corpus(args)
    services = corpus.services()
    query_service = args.query_service
    index_service = args.index_service
    if query_service is None or index_service is None:
        if len(services) != 2:
            raise ProfileMatchError(
                f"corpus has services {services}; pass --query-service "
                f"and --index-service to pick two")
        query_service = query_service or services[0]
        index_service = index_service or services[1]
    ctx = _build_context(args, corpus)
    cfg = pipeline.MetricConfig.from_config_id(args.metrics)
    pipeline.validate_context(cfg, ctx)

    links = [(ka, kb) for ka, kb in sorted(corpus.positive_links)
             if {ka[0], kb[0]} == {query_service, index_service}]
    if not links:
        raise ProfileMatchError(
            f"no positive links between {query_service!r} "
            f"and {index_service!r}")
    rng = _random.Random(args.seed)
    n_holdout = max(1, round(args.holdout * len(links)))
    holdout = set(rng.sample(links, min(n_holdout, len(links))))
    train_links = [lk for lk in links if lk not in holdout]
    if not train_links:
        raise ProfileMatchError("holdout consumed every positive link; "
                                "lower --holdout")

    train_pos = [ProfilePair(corpus.profiles[ka], corpus.profiles[kb],
                             Label.MATCH)
                 for ka, kb in train_links]
    negatives = synthesize_negatives(corpus, len(train_pos), args.seed)
    vectors = [pipeline.build_similarity_vector(p, cfg, ctx)
               for p in train_pos + negatives]
    model = models.train(args.kind, vectors,
                         hyperparams=_hyperparams(args), seed=args.seed)

    index = evaluate.build_candidate_index(
        corpus.by_service(index_service), top_k=args.top_k)
    results = []
    for ka, kb in sorted(holdout):
        query_key, true_key = (ka, kb) if ka[0] == query_service else (kb, ka)
        results.append(evaluate.rank_candidates(
            corpus.profiles[query_key], index, model, cfg, ctx,
            true_key=true_key))
    path = _out(args, "ranks.csv")
    _atomic(path, lambda tmp: evaluate.write_rank_results_csv(tmp, results))
    rank1 = sum(1 for r in results if r.position == 1)
    print(f"ranked {len(results)} queries ({args.kind}, {cfg.config_id}); "
          f"rank-1 hits {rank1}/{len(results)} -> {path}")
    return 0


def cmd_curve(args) -> int:
    results = evaluate.read_rank_results_csv(args.ranks)
    points = evaluate.rank_curve(results, top_k=args.top_k)
    csv_path = _out(args, "curve.csv")
    _atomic(csv_path, lambda tmp: evaluate.write_curve_csv(tmp, points))
    series = [(args.label, points)]
    if args.compare:
        other = evaluate.rank_curve(evaluate.read_rank_results_csv(
            args.compare), top_k=args.top_k)
        compare_path = _out(args, "curve_compare.csv")
        _atomic(compare_path,
                lambda tmp: evaluate.write_curve_csv(tmp, other))
        series.append((args.compare_label, other))
    svg_path = _out(args, "curve.svg")
    _atomic(svg_path, lambda tmp: svgplot.write_line_plot(
        tmp, series, "true match found by rank r",
        "rank r", "fraction of queries"))
    print(f"curve over {len(results)} queries: rank-1 {points[0][1]:.3f}, "
          f"rank-{args.top_k} {points[-1][1]:.3f} -> {csv_path}, {svg_path}")
    return 0


# ------------------------------------------------------------ parser --

def _add_corpus_flags(p):
    p.add_argument("--profiles", required=True,
                   help="profile file (jsonl or csv)")
    p.add_argument("--links", help="positive links csv")
    p.add_argument("--format", choices=("jsonl", "csv"))
    p.add_argument("--english-only", action="store_const", const=True,
                   dest="english_only")


def _add_resource_flags(p):
    p.add_argument("--gazetteer", help="name\\tlat\\tlon tsv")
    p.add_argument("--geo-cache", help="append-only geocode cache tsv")
    p.add_argument("--wordnet-index", help="noun index file")
    p.add_argument("--wordnet-data", help="noun data file")
    p.add_argument("--images-dir", help="directory of profile images")
    p.add_argument("--image-cache", help="decoded-image sidecar cache dir")
    p.add_argument("--ls-tolerance", type=int,
                   help="pixel tolerance for the image edit-distance")
    p.add_argument("--haversine", action="store_const", const=True)
    p.add_argument("--negatives", type=int,
                   help="synthesized non-match pairs (default: #positives)")


def _add_model_flags(p):
    p.add_argument("--kind", choices=models.KINDS)
    p.add_argument("--knn-k", type=int)
    p.add_argument("--min-leaf", type=int)
    p.add_argument("--svm-lambda", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--jobs", type=int)
    common.add_argument("--out-dir")

    parser = argparse.ArgumentParser(
        prog="profilematch",
        description="link user profiles across services by field "
                    "similarity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="load a corpus, report counts and missingness")
    _add_corpus_flags(p)
    _add_resource_flags(p)
    p.add_argument("--vectors-out", help="also vectorize pairs to this csv")
    p.add_argument("--metrics", help="metric config id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", parents=[common],
                       help="train a classifier from a vectors csv")
    p.add_argument("--vectors", required=True)
    p.add_argument("--model", help="output model path")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="cross-validate classifiers on a vectors csv")
    p.add_argument("--vectors", required=True)
    p.add_argument("--kinds", help="comma list of classifier kinds")
    p.add_argument("--folds", type=int)
    _add_model_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", parents=[common],
                       help="score feature/metric discriminative capacity")
    _add_corpus_flags(p)
    _add_resource_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("subsets", parents=[common],
                       help="exhaustive metric-subset accuracy search")
    _add_corpus_flags(p)
    _add_resource_flags(p)
    p.add_argument("--folds", type=int)
    _add_model_flags(p)
    p.set_defaults(func=cmd_subsets)

    p = sub.add_parser("rank", parents=[common],
                       help="hold out links, rank candidates by match "
                            "probability")
    _add_corpus_flags(p)
    _add_resource_flags(p)
    _add_model_flags(p)
    p.add_argument("--metrics", help="metric config id")
    p.add_argument("--holdout", type=float,
                   help="fraction of links held out as queries")
    p.add_argument("--top-k", type=int)
    p.add_argument("--query-service")
    p.add_argument("--index-service")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("curve", parents=[common],
                       help="rank-CDF csv and svg from rank results")
    p.add_argument("--ranks", required=True)
    p.add_argument("--label", default="all features")
    p.add_argument("--compare", help="second rank results csv to overlay")
    p.add_argument("--compare-label", default="comparison")
    p.add_argument("--top-k", type=int)
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args = _resolve(args)
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except (ProfileMatchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
