"""Similarity-vector assembly.

Turns a cross-service profile pair into a six-slot score vector
(userid, name, description, location, image, connections) under a
configurable choice of metric per slot. All slots share one
orientation: 1.0 = identical, 0.0 = maximally different. Distances
(geo, mse, connection class difference) are flipped or rescaled at
insertion so downstream classifiers never see mixed polarity.
"""

from __future__ import annotations

import csv
import itertools
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import geo as geomod
from . import images as imgmod
from .errors import CapacityError, ConfigurationError, ParseError
from .profiles import Label, ProfilePair
from .text import jaccard, jaro_winkler, tfidf_cosine, tokenize
from .wordnet import ontology_description_score

SLOTS = ("userid", "name", "description", "location", "image", "connections")

METRIC_CHOICES = {
    "userid": ("jw",),
    "name": ("jw",),
    "description": ("jaccard", "tfidf", "ontology"),
    "location": ("jw", "jaccard", "substr", "geo"),
    "image": ("mse", "psnr", "ls"),
    "connections": ("norm", "class"),
}

MISSING_POLICIES = ("impute_neutral", "propagate_missing")
NEUTRAL_SCORE = 0.5

# canonical column order of the full metric space (14 columns)
COLUMNS = tuple((slot, metric) for slot in SLOTS
                for metric in METRIC_CHOICES[slot])

VECTOR_CSV_HEADER = ["userid", "name", "description", "location", "image",
                     "connections", "label", "config_id"]

DEFAULT_BINS = 5


@dataclass(frozen=True)
class MetricConfig:
    """One metric per included slot; excluded slots stay None."""

    userid: str | None = None
    name: str | None = None
    description: str | None = None
    location: str | None = None
    image: str | None = None
    connections: str | None = None
    missing_policy: str = "impute_neutral"

    def __post_init__(self):
        chosen = 0
        for slot in SLOTS:
            metric = getattr(self, slot)
            if metric is None:
                continue
            if metric not in METRIC_CHOICES[slot]:
                raise ConfigurationError(
                    f"unknown {slot} metric {metric!r}; "
                    f"choose from {METRIC_CHOICES[slot]}")
            chosen += 1
        if not chosen:
            raise ConfigurationError("at least one slot must have a metric")
        if self.missing_policy not in MISSING_POLICIES:
            raise ConfigurationError(
                f"unknown missing policy {self.missing_policy!r}; "
                f"choose from {MISSING_POLICIES}")

    @property
    def config_id(self) -> str:
        parts = [f"{slot}:{getattr(self, slot)}" for slot in SLOTS
                 if getattr(self, slot) is not None]
        parts.append(f"policy:{self.missing_policy}")
        return "+".join(parts)

    @classmethod
    def from_config_id(cls, config_id: str) -> "MetricConfig":
        kwargs = {}
        for part in config_id.split("+"):
            key, sep, value = part.partition(":")
            if not sep:
                raise ConfigurationError(
                    f"malformed config id segment {part!r}")
            if key == "policy":
                kwargs["missing_policy"] = value
            elif key in SLOTS:
                kwargs[key] = value
            else:
                raise ConfigurationError(f"unknown config slot {key!r}")
        return cls(**kwargs)

    def selectors(self) -> tuple[tuple[str, str], ...]:
        """(slot, metric) pairs in slot order, configured slots only."""
        return tuple((slot, getattr(self, slot)) for slot in SLOTS
                     if getattr(self, slot) is not None)

    def with_policy(self, missing_policy: str) -> "MetricConfig":
        return replace(self, missing_policy=missing_policy)


# the five-slot selection that drives most evaluation runs
BEST_FIVE = MetricConfig(userid="jw", name="jw", description="jaccard",
                         location="geo", image="ls")
NAME_USERID = MetricConfig(userid="jw", name="jw")
FULL_CONFIG = MetricConfig(userid="jw", name="jw", description="jaccard",
                           location="geo", image="ls", connections="norm")


def enumerate_configs(missing_policy: str = "impute_neutral"):
    """All 959 non-empty slot/metric selections, deterministic order."""
    per_slot = [(None,) + METRIC_CHOICES[slot] for slot in SLOTS]
    configs = []
    for combo in itertools.product(*per_slot):
        if all(m is None for m in combo):
            continue
        configs.append(MetricConfig(*combo, missing_policy=missing_policy))
    return configs


@dataclass(frozen=True)
class SimilarityVector:
    userid: float | None = None
    name: float | None = None
    description: float | None = None
    location: float | None = None
    image: float | None = None
    connections: float | None = None
    label: Label = Label.UNLABELED
    config_id: str = ""

    def __post_init__(self):
        for slot in SLOTS:
            v = getattr(self, slot)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{slot} score {v} outside [0,1]")

    def values(self) -> tuple:
        return tuple(getattr(self, slot) for slot in SLOTS)


@dataclass(frozen=True)
class ConnectionBins:
    """Equal-frequency bin edges; boundaries[i] is the largest value of
    bin i+1, class indexes run 1..k."""

    boundaries: tuple
    k: int

    def class_index(self, value) -> int:
        return bisect_left(self.boundaries, value) + 1


def build_connection_bins(values, k: int = DEFAULT_BINS) -> ConnectionBins:
    """Sort values into k near-equal bins. Duplicate values never straddle
    a boundary: the boundary moves right past them."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    vals = sorted(values)
    n = len(vals)
    if n < k:
        raise CapacityError(f"need at least {k} values to build {k} bins, "
                            f"got {n}")
    ends = []
    start = 0
    for i in range(1, k + 1):
        if start >= n:
            break
        if i == k:
            end = n
        else:
            end = max(start + 1, (i * n) // k)
            while end < n and vals[end - 1] == vals[end]:
                end += 1
        ends.append(end)
        start = end
    boundaries = tuple(vals[e - 1] for e in ends[:-1])
    return ConnectionBins(boundaries=boundaries, k=k)


def connections_norm(ca, cb, range_a, range_b) -> float:
    """1 - |a - b| after min-max normalizing each count in its own
    service's observed range. Degenerate range pins the value at 0.5."""

    def norm(c, rng):
        lo, hi = rng
        if lo == hi:
            return 0.5
        return min(max((c - lo) / (hi - lo), 0.0), 1.0)

    return 1.0 - abs(norm(ca, range_a) - norm(cb, range_b))


def connections_class(ca, cb, bins_a: ConnectionBins,
                      bins_b: ConnectionBins) -> int:
    """Unsigned bin-index distance, 0..k-1. 0 = same class."""
    if bins_a.k != bins_b.k:
        raise ConfigurationError(
            f"bin counts differ: {bins_a.k} vs {bins_b.k}")
    return abs(bins_a.class_index(ca) - bins_b.class_index(cb))


@dataclass(frozen=True)
class ServiceStats:
    """Per-service connection-count ranges and equal-frequency bins."""

    ranges: dict
    bins: dict
    k: int = DEFAULT_BINS

    @classmethod
    def from_corpus(cls, corpus, k: int = DEFAULT_BINS) -> "ServiceStats":
        per_service: dict[str, list] = {}
        for key in sorted(corpus.profiles):
            p = corpus.profiles[key]
            if p.connections is not None:
                per_service.setdefault(p.service, []).append(p.connections)
        ranges = {}
        bins = {}
        for service, values in per_service.items():
            ranges[service] = (min(values), max(values))
            if len(values) >= k:
                bins[service] = build_connection_bins(values, k)
        return cls(ranges=ranges, bins=bins, k=k)


@dataclass
class PipelineContext:
    """Shared read-only resources the configured metrics may need."""

    graph: object | None = None          # HypernymGraph
    geocoder: object | None = None       # geo.Geocoder
    stats: ServiceStats | None = None
    image_store: object | None = None    # get(ref) -> GrayImage | None
    ls_tolerance: int = 0
    use_haversine: bool = False
    aggregation: str = "mean_of_max"


_RESOURCE_NEEDS = {
    ("description", "ontology"): ("graph", "hypernym graph"),
    ("location", "geo"): ("geocoder", "geocoder"),
    ("image", "mse"): ("image_store", "image store"),
    ("image", "psnr"): ("image_store", "image store"),
    ("image", "ls"): ("image_store", "image store"),
    ("connections", "norm"): ("stats", "service connection stats"),
    ("connections", "class"): ("stats", "service connection stats"),
}


def available_columns(ctx: PipelineContext) -> tuple:
    """The metric-space columns whose resources ctx can actually serve."""
    return tuple(col for col in COLUMNS
                 if (need := _RESOURCE_NEEDS.get(col)) is None
                 or getattr(ctx, need[0]) is not None)


def validate_context(cfg: MetricConfig, ctx: PipelineContext,
                     columns=None) -> None:
    """Fail fast when a configured metric lacks its resource."""
    selectors = columns if columns is not None else cfg.selectors()
    for selector in selectors:
        need = _RESOURCE_NEEDS.get(selector)
        if need and getattr(ctx, need[0]) is None:
            raise ConfigurationError(
                f"{selector[0]}:{selector[1]} requires a {need[1]} "
                f"in the pipeline context")


def _description_tokens(text: str, ctx: PipelineContext):
    return tokenize(text, lemmatize_tokens=True, drop_stopwords=True,
                    graph=ctx.graph)


def _gray_images(pair: ProfilePair, ctx: PipelineContext):
    if pair.a.image_ref is None or pair.b.image_ref is None:
        return None
    ga = ctx.image_store.get(pair.a.image_ref)
    gb = ctx.image_store.get(pair.b.image_ref)
    if ga is None or gb is None:
        return None
    return ga, gb


def metric_value(slot: str, metric: str, pair: ProfilePair,
                 ctx: PipelineContext) -> float | None:
    """Raw oriented score for one (slot, metric), None when any input
    the metric needs is missing on either side."""
    a, b = pair.a, pair.b
    if slot == "userid":
        return jaro_winkler(a.userid, b.userid)
    if slot == "name":
        if a.name is None or b.name is None:
            return None
        return jaro_winkler(a.name, b.name)
    if slot == "description":
        if a.description is None or b.description is None:
            return None
        if metric == "ontology":
            return ontology_description_score(ctx.graph, a.description,
                                              b.description,
                                              aggregation=ctx.aggregation)
        ta = _description_tokens(a.description, ctx)
        tb = _description_tokens(b.description, ctx)
        return jaccard(ta, tb) if metric == "jaccard" else tfidf_cosine(ta, tb)
    if slot == "location":
        if a.location is None or b.location is None:
            return None
        if metric == "jw":
            return geomod.location_jw(a.location, b.location)
        if metric == "jaccard":
            return geomod.location_jaccard(a.location, b.location)
        if metric == "substr":
            return geomod.substring_score(a.location, b.location)
        return geomod.geo_distance_score(ctx.geocoder, a.location, b.location,
                                         use_haversine=ctx.use_haversine)
    if slot == "image":
        pair_images = _gray_images(pair, ctx)
        if pair_images is None:
            return None
        ga, gb = pair_images
        if metric == "mse":
            return 1.0 - imgmod.mse(ga, gb) / imgmod.MAX_MSE
        if metric == "psnr":
            return imgmod.psnr(ga, gb) / imgmod.PSNR_CAP
        return imgmod.pixel_levenshtein(ga, gb, tol=ctx.ls_tolerance)
    if slot == "connections":
        if a.connections is None or b.connections is None:
            return None
        stats = ctx.stats
        if metric == "norm":
            if a.service not in stats.ranges or b.service not in stats.ranges:
                return None
            return connections_norm(a.connections, b.connections,
                                    stats.ranges[a.service],
                                    stats.ranges[b.service])
        if a.service not in stats.bins or b.service not in stats.bins:
            return None
        diff = connections_class(a.connections, b.connections,
                                 stats.bins[a.service],
                                 stats.bins[b.service])
        return 1.0 - diff / (stats.k - 1)
    raise ConfigurationError(f"unknown slot {slot!r}")


def build_similarity_vector(pair: ProfilePair, cfg: MetricConfig,
                            ctx: PipelineContext,
                            label: Label | None = None) -> SimilarityVector:
    validate_context(cfg, ctx)
    slots = {}
    for slot, metric in cfg.selectors():
        value = metric_value(slot, metric, pair, ctx)
        if value is None and cfg.missing_policy == "impute_neutral":
            value = NEUTRAL_SCORE
        slots[slot] = value
    return SimilarityVector(label=label if label is not None else pair.label,
                            config_id=cfg.config_id, **slots)


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """All metric-space columns for a pair list, NaN = missing input.
    Any MetricConfig's vectors come out by column selection, so the
    expensive metrics run once no matter how many configs are scored."""

    scores: np.ndarray                     # (n_pairs, len(columns))
    labels: tuple
    columns: tuple = COLUMNS
    pair_keys: tuple = ()

    def __post_init__(self):
        if self.scores.shape != (len(self.labels), len(self.columns)):
            raise ValueError(
                f"scores shape {self.scores.shape} does not match "
                f"{len(self.labels)} labels x {len(self.columns)} columns")

    def column(self, slot: str, metric: str) -> np.ndarray:
        return self.scores[:, self.columns.index((slot, metric))]

    def select(self, cfg: MetricConfig) -> np.ndarray:
        """(n_pairs, n_configured_slots) array, NaN = missing; policy is
        NOT applied here (classifiers decide)."""
        idx = [self.columns.index(sel) for sel in cfg.selectors()]
        return self.scores[:, idx]

    def to_vectors(self, cfg: MetricConfig) -> list[SimilarityVector]:
        sub = self.select(cfg)
        selectors = cfg.selectors()
        impute = cfg.missing_policy == "impute_neutral"
        vectors = []
        for row, label in zip(sub, self.labels):
            slots = {}
            for (slot, _), value in zip(selectors, row):
                if np.isnan(value):
                    slots[slot] = NEUTRAL_SCORE if impute else None
                else:
                    slots[slot] = float(value)
            vectors.append(SimilarityVector(label=label,
                                            config_id=cfg.config_id, **slots))
        return vectors


def _matrix_row(pair: ProfilePair, ctx: PipelineContext, columns) -> list:
    row = []
    desc_tokens = None
    for slot, metric in columns:
        if slot == "description" and metric in ("jaccard", "tfidf"):
            if (pair.a.description is None or pair.b.description is None):
                row.append(np.nan)
                continue
            if desc_tokens is None:
                desc_tokens = (_description_tokens(pair.a.description, ctx),
                               _description_tokens(pair.b.description, ctx))
            value = (jaccard(*desc_tokens) if metric == "jaccard"
                     else tfidf_cosine(*desc_tokens))
        else:
            value = metric_value(slot, metric, pair, ctx)
        row.append(np.nan if value is None else value)
    return row


def build_metric_matrix(pairs, ctx: PipelineContext, columns=COLUMNS,
                        jobs: int = 1) -> MetricMatrix:
    """Score every pair on every requested column. Thread-parallel when
    jobs > 1; the image kernel releases the GIL, so threads scale on the
    dominant cost."""
    pairs = list(pairs)
    validate_context(None, ctx, columns=columns)
    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda p: _matrix_row(p, ctx, columns),
                                 pairs, chunksize=64))
    else:
        rows = [_matrix_row(p, ctx, columns) for p in pairs]
    scores = np.asarray(rows, dtype=np.float64).reshape(len(pairs),
                                                        len(columns))
    return MetricMatrix(scores=scores,
                        labels=tuple(p.label for p in pairs),
                        columns=tuple(columns),
                        pair_keys=tuple((p.a.key, p.b.key) for p in pairs))


def _format_cell(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_vectors_csv(path, vectors) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(VECTOR_CSV_HEADER)
        for v in vectors:
            writer.writerow([_format_cell(getattr(v, slot)) for slot in SLOTS]
                            + [v.label.value, v.config_id])


def read_vectors_csv(path) -> list[SimilarityVector]:
    vectors = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != VECTOR_CSV_HEADER:
            raise ParseError(f"expected header {','.join(VECTOR_CSV_HEADER)}",
                             path=path, line=1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(VECTOR_CSV_HEADER):
                raise ParseError(f"expected {len(VECTOR_CSV_HEADER)} columns",
                                 path=path, line=reader.line_num)
            try:
                slots = {slot: (float(cell) if cell else None)
                         for slot, cell in zip(SLOTS, row)}
                label = Label(row[6])
            except ValueError as exc:
                raise ParseError(str(exc), path=path,
                                 line=reader.line_num) from None
            vectors.append(SimilarityVector(label=label, config_id=row[7],
                                            **slots))
    return vectors
