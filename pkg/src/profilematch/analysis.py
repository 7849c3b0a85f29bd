"""Discriminative-capacity scoring of similarity features.

Four scores per (feature, metric) column: information gain, Relief,
minimum-description-length reduction, and Gini impurity reduction, the
first three over entropy-based recursive discretization with an MDL
stopping rule. All scores are invariant under strictly monotone
transforms of a column, so flipping a distance into a similarity never
changes a feature's ranking.
"""

from __future__ import annotations

import csv
import math
import random
import warnings
from dataclasses import dataclass

import numpy as np

from .pipeline import MetricMatrix, SimilarityVector
from .profiles import Label

LN2 = math.log(2.0)
SCORE_NAMES = ("ig", "relief", "mdl", "gini")


def _as_int_labels(labels) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int8)
    for i, lab in enumerate(labels):
        if isinstance(lab, Label):
            if lab is Label.UNLABELED:
                raise ValueError("unlabeled instance in labeled data")
            out[i] = 1 if lab is Label.MATCH else 0
        else:
            out[i] = 1 if lab else 0
    return out


@dataclass(frozen=True, eq=False)
class LabeledColumn:
    """One feature column with parallel binary labels, missing rows
    already excluded."""

    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.labels):
            raise ValueError("values and labels must have equal length")

    @classmethod
    def from_data(cls, values, labels) -> "LabeledColumn":
        vals = np.asarray(values, dtype=np.float64)
        labs = _as_int_labels(labels)
        keep = ~np.isnan(vals)
        return cls(values=vals[keep], labels=labs[keep])

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Discretization:
    cut_points: tuple

    def __post_init__(self):
        cuts = self.cut_points
        if any(cuts[i] >= cuts[i + 1] for i in range(len(cuts) - 1)):
            raise ValueError("cut points must be strictly increasing")

    def bin_of(self, values) -> np.ndarray:
        return np.searchsorted(np.asarray(self.cut_points),
                               np.asarray(values), side="left")


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _class_counts(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels, minlength=2).astype(np.float64)


def _boundary_candidates(values: np.ndarray, labels: np.ndarray):
    """Midpoints between adjacent distinct values, skipping gaps whose
    two neighbouring value-blocks hold one and the same class (no cut
    point can fall there)."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    y = labels[order]
    cuts = []
    block_start = 0
    prev_classes = None
    for i in range(1, len(v) + 1):
        if i < len(v) and v[i] == v[block_start]:
            continue
        block_classes = set(y[block_start:i].tolist())
        if prev_classes is not None:
            if len(prev_classes | block_classes) > 1:
                cuts.append((v[block_start - 1] + v[block_start]) / 2.0)
        prev_classes = block_classes
        block_start = i
    return cuts


def _mdlp_split(values: np.ndarray, labels: np.ndarray):
    """Best accepted binary split of one value range, or None.

    The split minimizes weighted class entropy over all boundary-point
    cuts (ties -> smallest cut) and is kept only when its gain clears
    the description-length threshold of the recursive discretizer.
    """
    n = len(values)
    candidates = _boundary_candidates(values, labels)
    if not candidates:
        return None
    parent_counts = _class_counts(labels)
    parent_entropy = _entropy(parent_counts)
    best = None
    for cut in candidates:
        left = values <= cut
        e1 = _entropy(_class_counts(labels[left]))
        e2 = _entropy(_class_counts(labels[~left]))
        n1 = int(left.sum())
        split_entropy = (n1 * e1 + (n - n1) * e2) / n
        key = (split_entropy, cut)
        if best is None or key < best[0]:
            best = (key, cut, left, e1, e2, n1)
    _, cut, left, e1, e2, n1 = best
    gain = parent_entropy - (n1 * e1 + (n - n1) * e2) / n
    k = int((parent_counts > 0).sum())
    k1 = int((_class_counts(labels[left]) > 0).sum())
    k2 = int((_class_counts(labels[~left]) > 0).sum())
    delta = (math.log2(3 ** k - 2)
             - (k * parent_entropy - k1 * e1 - k2 * e2))
    threshold = (math.log2(n - 1) + delta) / n
    if gain <= threshold:
        return None
    return cut, left


def fayyad_irani(col: LabeledColumn) -> Discretization:
    """Recursive entropy-based discretization with MDL stopping."""
    if len(col) < 2:
        return Discretization(cut_points=())
    cuts: list[float] = []
    stack = [(col.values, col.labels)]
    while stack:
        values, labels = stack.pop()
        split = _mdlp_split(values, labels)
        if split is None:
            continue
        cut, left = split
        cuts.append(float(cut))
        stack.append((values[left], labels[left]))
        stack.append((values[~left], labels[~left]))
    return Discretization(cut_points=tuple(sorted(cuts)))


def information_gain(col: LabeledColumn, d: Discretization | None = None) -> float:
    """H(labels) - H(labels | bins), in bits."""
    if d is None:
        d = fayyad_irani(col)
    n = len(col)
    if n == 0:
        return 0.0
    total = _entropy(_class_counts(col.labels))
    bins = d.bin_of(col.values)
    cond = 0.0
    for b in np.unique(bins):
        mask = bins == b
        cond += (mask.sum() / n) * _entropy(_class_counts(col.labels[mask]))
    return max(total - cond, 0.0)


def _log2_factorial(n: int) -> float:
    return math.lgamma(n + 1) / LN2


def _log2_multinomial(counts) -> float:
    n = int(sum(counts))
    return _log2_factorial(n) - sum(_log2_factorial(int(c)) for c in counts)


def _log2_comb(n: int, k: int) -> float:
    return (_log2_factorial(n) - _log2_factorial(k)
            - _log2_factorial(n - k))


def mdl_score(col: LabeledColumn, d: Discretization | None = None) -> float:
    """Per-instance reduction in label description length given the bins.

    Code lengths count both the label sequence (log2 multinomial) and
    the class-frequency header (log2 C(n+c-1, c-1)); the per-bin headers
    make useless discretizations score slightly negative.
    """
    if d is None:
        d = fayyad_irani(col)
    n = len(col)
    if n == 0:
        return 0.0
    counts = _class_counts(col.labels)
    c = int((counts > 0).sum())
    prior = (_log2_multinomial(counts) + _log2_comb(n + c - 1, c - 1))
    bins = d.bin_of(col.values)
    post = 0.0
    for b in np.unique(bins):
        mask = bins == b
        bin_counts = _class_counts(col.labels[mask])
        post += (_log2_multinomial(bin_counts)
                 + _log2_comb(int(mask.sum()) + c - 1, c - 1))
    return (prior - post) / n


def _gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def gini_score(col: LabeledColumn, d: Discretization | None = None) -> float:
    """Gini impurity reduction of the discretized partition."""
    if d is None:
        d = fayyad_irani(col)
    n = len(col)
    if n == 0:
        return 0.0
    total = _gini(_class_counts(col.labels))
    bins = d.bin_of(col.values)
    weighted = 0.0
    for b in np.unique(bins):
        mask = bins == b
        weighted += (mask.sum() / n) * _gini(_class_counts(col.labels[mask]))
    return max(total - weighted, 0.0)


def _as_xy(data, labels=None):
    if labels is None:
        vectors = list(data)
        if not vectors or not isinstance(vectors[0], SimilarityVector):
            raise ValueError("expected similarity vectors or (X, labels)")
        rows = [[np.nan if s is None else s for s in v.values()]
                for v in vectors]
        X = np.asarray(rows, dtype=np.float64)
        y = _as_int_labels([v.label for v in vectors])
        return X, y
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X, _as_int_labels(labels)


def relief(data, labels=None, m: int | None = None,
           seed: int = 0) -> np.ndarray:
    """Two-class Relief weights, one per column of the feature matrix.

    Nearest hit/miss by Manhattan distance; missing entries are skipped
    with the distance renormalized over the valid dimensions. m defaults
    to a full deterministic sweep over every instance.
    """
    X, y = _as_xy(data, labels)
    n, d = X.shape
    if n < 2:
        raise ValueError("relief needs at least 2 instances")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("relief needs both classes present")
    if m is None or m >= n:
        indices = list(range(n))
    else:
        indices = sorted(random.Random(seed).sample(range(n), m))
    m_eff = len(indices)

    valid = ~np.isnan(X)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
        span = np.nanmax(X, axis=0) - np.nanmin(X, axis=0)
    span[~np.isfinite(span) | (span == 0)] = 1.0

    weights = np.zeros(d, dtype=np.float64)
    for i in indices:
        diff = np.abs(X - X[i]) / span            # (n, d), NaN where missing
        pair_valid = valid & valid[i]
        diff = np.where(pair_valid, diff, 0.0)
        counts = pair_valid.sum(axis=1)
        dist = np.where(counts > 0,
                        diff.sum(axis=1) * (d / np.maximum(counts, 1)),
                        np.inf)
        dist[i] = np.inf
        same = y == y[i]
        hit_dist = np.where(same, dist, np.inf)
        miss_dist = np.where(same, np.inf, dist)
        hit = int(np.argmin(hit_dist))
        miss = int(np.argmin(miss_dist))
        if np.isfinite(hit_dist[hit]):
            weights -= diff[hit] / m_eff
        weights += diff[miss] / m_eff
    return weights


def feature_report(matrix: MetricMatrix, m: int | None = None,
                   seed: int = 0) -> list[dict]:
    """One row per (feature, metric) column with all four scores and a
    marker naming the scores this metric wins within its feature."""
    y = _as_int_labels(matrix.labels)
    relief_weights = relief(matrix.scores, y, m=m, seed=seed)
    rows = []
    for j, (slot, metric) in enumerate(matrix.columns):
        col = LabeledColumn.from_data(matrix.scores[:, j], y)
        if len(col) == 0:
            scores = {name: 0.0 for name in SCORE_NAMES}
        else:
            d = fayyad_irani(col)
            scores = {
                "ig": information_gain(col, d),
                "relief": float(relief_weights[j]),
                "mdl": mdl_score(col, d),
                "gini": gini_score(col, d),
            }
        rows.append({"feature": slot, "metric": metric, **scores})
    for slot in {r["feature"] for r in rows}:
        group = [r for r in rows if r["feature"] == slot]
        for name in SCORE_NAMES:
            top = max(r[name] for r in group)
            for r in group:
                if r[name] == top:
                    r.setdefault("best_for", []).append(name)
    for r in rows:
        r["best_for"] = ";".join(
            n for n in SCORE_NAMES if n in r.get("best_for", []))
    return rows


def write_feature_report(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["feature", "metric", *SCORE_NAMES, "best_for"])
        for r in rows:
            writer.writerow([r["feature"], r["metric"]]
                            + [repr(float(r[name])) for name in SCORE_NAMES]
                            + [r["best_for"]])
