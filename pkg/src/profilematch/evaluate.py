"""Cross-validation, metric-subset search, and candidate ranking.

Evaluation is stratified 10-fold CV pooling confusion counts across
folds. The subset search scores every non-empty slot/metric selection
by CV accuracy from one precomputed metric matrix. The ranking half
mimics a directory lookup: retrieve up to top_k candidates by name
token, score each pair with a trained model's match probability, and
report where the true profile landed.
"""

from __future__ import annotations

import csv
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import models as md
from .errors import ConfigurationError
from .pipeline import (NEUTRAL_SCORE, MetricConfig, MetricMatrix,
                       build_similarity_vector, enumerate_configs)
from .profiles import Label, Profile, ProfilePair
from .text import jaro_winkler, split_words


@dataclass(frozen=True)
class EvalReport:
    kind: str
    k: int
    seed: int
    tp: int
    fp: int
    tn: int
    fn: int
    per_fold: tuple = ()

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Disjoint covering folds; per-fold class counts deviate from an
    even split by at most one instance."""
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in sorted(set(int(v) for v in y)):
        idx = [i for i in range(len(y)) if y[i] == cls]
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            # offset staggers classes so fold sizes stay near-equal
            folds[(pos + offset) % k].append(i)
        offset += len(idx) % k
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def kfold_cv_arrays(X: np.ndarray, y: np.ndarray, config_id: str, kind: str,
                    k: int = 10, seed: int = 0,
                    hyperparams: dict | None = None) -> EvalReport:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    if n < k:
        raise ValueError(f"dataset size {n} is smaller than k={k}")
    if len(np.unique(y)) < 2:
        raise ValueError("cross-validation needs both classes present")
    tp = fp = tn = fn = 0
    per_fold = []
    for fold_no, test_idx in enumerate(stratified_folds(y, k, seed)):
        if len(test_idx) == 0:
            continue
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        model = md.train_arrays(kind, X[mask], y[mask], config_id,
                                hyperparams, seed)
        pred = md.predict_arrays(model, X[test_idx])
        truth = y[test_idx]
        ftp = int(((pred == 1) & (truth == 1)).sum())
        ffp = int(((pred == 1) & (truth == 0)).sum())
        ftn = int(((pred == 0) & (truth == 0)).sum())
        ffn = int(((pred == 0) & (truth == 1)).sum())
        tp += ftp
        fp += ffp
        tn += ftn
        fn += ffn
        per_fold.append({"fold": fold_no, "tp": ftp, "fp": ffp,
                         "tn": ftn, "fn": ffn})
    return EvalReport(kind=kind, k=k, seed=seed, tp=tp, fp=fp, tn=tn, fn=fn,
                      per_fold=tuple(per_fold))


def kfold_cv(vectors, kind: str, k: int = 10, seed: int = 0,
             hyperparams: dict | None = None) -> EvalReport:
    X, y, config_id = md.vectors_to_arrays(vectors)
    return kfold_cv_arrays(X, y, config_id, kind, k, seed, hyperparams)


def _apply_policy(X: np.ndarray, missing_policy: str) -> np.ndarray:
    if missing_policy == "impute_neutral" and np.isnan(X).any():
        return np.where(np.isnan(X), NEUTRAL_SCORE, X)
    return X


def _search_chunk(args):
    scores, y, columns, config_ids, kind, k, seed, hyperparams = args
    matrix = MetricMatrix(scores=scores,
                          labels=tuple(Label.MATCH if v else Label.NONMATCH
                                       for v in y),
                          columns=columns)
    out = []
    for config_id in config_ids:
        cfg = MetricConfig.from_config_id(config_id)
        X = _apply_policy(matrix.select(cfg), cfg.missing_policy)
        report = kfold_cv_arrays(X, y, config_id, kind, k, seed, hyperparams)
        out.append((config_id, report.accuracy))
    return out


def subset_search(matrix: MetricMatrix, kind: str, k: int = 10,
                  seed: int = 0, jobs: int = 1,
                  missing_policy: str = "impute_neutral",
                  hyperparams: dict | None = None):
    """CV accuracy for all 959 selections, best first (ties by id)."""
    configs = enumerate_configs(missing_policy)
    y = np.array([1 if lab is Label.MATCH else 0 for lab in matrix.labels],
                 dtype=np.int8)
    ids = [cfg.config_id for cfg in configs]
    if jobs > 1:
        chunks = [ids[i::jobs] for i in range(jobs)]
        args = [(matrix.scores, y, matrix.columns, chunk, kind, k, seed,
                 hyperparams) for chunk in chunks if chunk]
        results = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_search_chunk, args):
                results.extend(part)
    else:
        results = _search_chunk((matrix.scores, y, matrix.columns, ids,
                                 kind, k, seed, hyperparams))
    results.sort(key=lambda item: (-item[1], item[0]))
    return [(MetricConfig.from_config_id(cid), acc) for cid, acc in results]


# ----------------------------------------------------------- ranking --

@dataclass(frozen=True)
class CandidateIndex:
    """Name-token inverted index over one service's profiles."""

    profiles: dict
    postings: dict
    top_k: int = 20


def build_candidate_index(profiles, top_k: int = 20) -> CandidateIndex:
    by_key = {}
    postings: dict[str, list] = {}
    for p in profiles:
        by_key[p.key] = p
        for token in set(split_words(p.name or "")):
            postings.setdefault(token, []).append(p.key)
    return CandidateIndex(profiles=by_key,
                          postings={t: tuple(sorted(ks))
                                    for t, ks in postings.items()},
                          top_k=top_k)


def search(index: CandidateIndex, name: str) -> list[Profile]:
    """Up to top_k profiles sharing a name token with the query, best
    token overlap first, then name similarity, then key order."""
    tokens = set(split_words(name or ""))
    if not tokens:
        return []
    counts: dict = {}
    for token in tokens:
        for key in index.postings.get(token, ()):
            counts[key] = counts.get(key, 0) + 1
    ranked = sorted(
        counts,
        key=lambda key: (-counts[key],
                         -jaro_winkler(name, index.profiles[key].name or ""),
                         key))
    return [index.profiles[key] for key in ranked[:index.top_k]]


@dataclass(frozen=True)
class RankResult:
    query_key: tuple
    ranked: tuple          # ((key, probability), ...) probability desc
    position: int | None   # 1-based rank of the true match, None = absent


def rank_candidates(query: Profile, index: CandidateIndex,
                    model: md.TrainedModel, cfg: MetricConfig, ctx,
                    true_key=None) -> RankResult:
    if cfg.config_id != model.config_id:
        raise ConfigurationError(
            f"metric config {cfg.config_id!r} does not match model "
            f"config {model.config_id!r}")
    scored = []
    for candidate in search(index, query.name or ""):
        pair = ProfilePair(query, candidate)
        vector = build_similarity_vector(pair, cfg, ctx,
                                         label=Label.UNLABELED)
        scored.append((candidate.key, md.predict_proba(model, vector)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    position = None
    for rank, (key, _) in enumerate(scored, start=1):
        if key == true_key:
            position = rank
            break
    return RankResult(query_key=query.key, ranked=tuple(scored),
                      position=position)


def rank_curve(results, top_k: int = 20) -> list[tuple[int, float]]:
    """Fraction of queries whose true match sits at rank <= r, for
    r = 1..top_k; queries whose match never surfaced count in the
    denominator but never the numerator."""
    results = list(results)
    if not results:
        raise ValueError("rank_curve needs at least one rank result")
    n = len(results)
    points = []
    for r in range(1, top_k + 1):
        hits = sum(1 for res in results
                   if res.position is not None and res.position <= r)
        points.append((r, hits / n))
    return points


# --------------------------------------------------------------- csv --

def write_eval_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["classifier", "accuracy", "precision", "recall",
                         "f1"])
        for rep in reports:
            writer.writerow([rep.kind, repr(rep.accuracy),
                             repr(rep.precision), repr(rep.recall),
                             repr(rep.f1)])


def write_subsets_csv(path, results) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["config_id", "accuracy"])
        for cfg, acc in results:
            writer.writerow([cfg.config_id, repr(acc)])


def write_rank_results_csv(path, results) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["service", "userid", "position"])
        for res in results:
            writer.writerow([res.query_key[0], res.query_key[1],
                             "" if res.position is None else res.position])


def read_rank_results_csv(path) -> list[RankResult]:
    results = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["service", "userid", "position"]:
            raise ValueError(f"{path}: expected header service,userid,position")
        for row in reader:
            if not row:
                continue
            position = int(row[2]) if row[2] else None
            results.append(RankResult(query_key=(row[0], row[1]),
                                      ranked=(), position=position))
    return results


def write_curve_csv(path, points) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["r", "fraction"])
        for r, fraction in points:
            writer.writerow([r, repr(fraction)])
