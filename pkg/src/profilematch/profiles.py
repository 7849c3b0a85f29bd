"""Domain types and corpus ingestion.

A corpus is an immutable set of service profiles keyed by
(service, userid) plus the known same-user cross-service links. Loaders
accept JSONL or CSV profile files and a links CSV; a language filter and
a deterministic negative-pair synthesiser prepare training data.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import CapacityError, ParseError, ReferentialError

logger = logging.getLogger(__name__)

PROFILE_FIELDS = ("service", "userid", "name", "description", "location",
                  "image_ref", "connections", "language")

LINKS_HEADER = ["service_a", "userid_a", "service_b", "userid_b"]


class Label(Enum):
    MATCH = "match"
    NONMATCH = "nonmatch"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Profile:
    """One account on one service. Only service and userid are mandatory;
    a missing optional field is None, distinct from empty text."""

    service: str
    userid: str
    name: str | None = None
    description: str | None = None
    location: str | None = None
    image_ref: str | None = None
    connections: int | None = None
    language: str | None = None

    def __post_init__(self):
        if not self.service:
            raise ValueError("service must be non-empty")
        if not self.userid:
            raise ValueError("userid must be non-empty")
        if self.connections is not None and self.connections < 0:
            raise ValueError(f"connections must be >= 0, "
                             f"got {self.connections}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.service, self.userid)


@dataclass(frozen=True)
class ProfilePair:
    a: Profile
    b: Profile
    label: Label = Label.UNLABELED

    def __post_init__(self):
        if self.a.service == self.b.service:
            raise ValueError(
                f"pairs must be cross-service, both are {self.a.service!r}")


@dataclass
class Corpus:
    """Profiles keyed by (service, userid) plus same-user links.
    Immutable by convention after load; safe to share across workers."""

    profiles: dict[tuple[str, str], Profile]
    positive_links: list[tuple[tuple[str, str], tuple[str, str]]] = field(
        default_factory=list)
    duplicates_dropped: int = 0

    def __post_init__(self):
        for ka, kb in self.positive_links:
            for k in (ka, kb):
                if k not in self.profiles:
                    raise ReferentialError(f"positive link references "
                                           f"unknown profile {k}")
            if ka[0] == kb[0]:
                raise ReferentialError(
                    f"positive link {ka} -- {kb} joins two {ka[0]!r} profiles")

    def services(self) -> list[str]:
        return sorted({s for s, _ in self.profiles})

    def by_service(self, service: str) -> list[Profile]:
        return [p for k, p in sorted(self.profiles.items())
                if k[0] == service]

    def positive_pairs(self) -> list[ProfilePair]:
        return [ProfilePair(self.profiles[ka], self.profiles[kb], Label.MATCH)
                for ka, kb in self.positive_links]

    def __eq__(self, other):
        return (isinstance(other, Corpus)
                and self.profiles == other.profiles
                and sorted(self.positive_links) == sorted(other.positive_links))


def _canonical_link(ka, kb):
    return (ka, kb) if ka <= kb else (kb, ka)


def _profile_from_record(record: dict, path, lineno: int) -> Profile:
    bad = set(record) - set(PROFILE_FIELDS)
    if bad:
        raise ParseError(f"unknown profile fields {sorted(bad)}",
                         path=path, line=lineno)
    try:
        return Profile(**{k: v for k, v in record.items() if v is not None})
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid profile record: {exc}",
                         path=path, line=lineno) from None


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}",
                                 path=path, line=lineno) from None
            if not isinstance(record, dict):
                raise ParseError("profile record must be a JSON object",
                                 path=path, line=lineno)
            yield lineno, record


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            return
        unknown = set(reader.fieldnames) - set(PROFILE_FIELDS)
        if unknown:
            raise ParseError(f"unknown profile columns {sorted(unknown)}",
                             path=path, line=1)
        for row in reader:
            # empty CSV cell = missing (CSV cannot carry empty-vs-missing)
            record = {k: v for k, v in row.items() if v not in (None, "")}
            if "connections" in record:
                try:
                    record["connections"] = int(record["connections"])
                except ValueError:
                    raise ParseError(
                        f"connections is not an integer: "
                        f"{record['connections']!r}",
                        path=path, line=reader.line_num) from None
            yield reader.line_num, record


def load_links(path) -> list[tuple[tuple[str, str], tuple[str, str]]]:
    """Links CSV with header service_a,userid_a,service_b,userid_b."""
    links = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != LINKS_HEADER:
            raise ParseError(f"expected header {','.join(LINKS_HEADER)}",
                             path=path, line=1)
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ParseError("expected 4 columns",
                                 path=path, line=reader.line_num)
            links.append(_canonical_link((row[0], row[1]), (row[2], row[3])))
    return links


def load_corpus(profiles_path, links_path=None, fmt: str = "jsonl") -> Corpus:
    """Load a corpus; duplicate (service, userid) keys keep the first
    occurrence and are counted on the returned corpus."""
    if fmt == "jsonl":
        records = _iter_jsonl(profiles_path)
    elif fmt == "csv":
        records = _iter_csv(profiles_path)
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")
    profiles: dict[tuple[str, str], Profile] = {}
    duplicates = 0
    for lineno, record in records:
        profile = _profile_from_record(record, profiles_path, lineno)
        if profile.key in profiles:
            duplicates += 1
            continue
        profiles[profile.key] = profile
    if duplicates:
        logger.warning("%s: dropped %d duplicate profile keys",
                       profiles_path, duplicates)
    links = load_links(links_path) if links_path is not None else []
    return Corpus(profiles=profiles, positive_links=links,
                  duplicates_dropped=duplicates)


def profile_to_record(profile: Profile) -> dict:
    return {name: getattr(profile, name) for name in PROFILE_FIELDS
            if getattr(profile, name) is not None}


def save_corpus(corpus: Corpus, profiles_path, links_path=None) -> None:
    """JSONL + links CSV writer; output order is canonical (sorted keys)."""
    with open(profiles_path, "w", encoding="utf-8") as f:
        for key in sorted(corpus.profiles):
            f.write(json.dumps(profile_to_record(corpus.profiles[key]),
                               sort_keys=True) + "\n")
    if links_path is not None:
        with open(links_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(LINKS_HEADER)
            for ka, kb in sorted(corpus.positive_links):
                writer.writerow([ka[0], ka[1], kb[0], kb[1]])


def _primary_language(tag: str) -> str:
    return tag.split("-", 1)[0].strip().lower()


def filter_english(corpus: Corpus) -> Corpus:
    """Drop profiles declaring a non-English language tag (and any links
    touching them). Untagged profiles are kept; idempotent."""
    kept = {k: p for k, p in corpus.profiles.items()
            if p.language is None or _primary_language(p.language) == "en"}
    links = [(ka, kb) for ka, kb in corpus.positive_links
             if ka in kept and kb in kept]
    return Corpus(profiles=kept, positive_links=links,
                  duplicates_dropped=corpus.duplicates_dropped)


def _cross_space(corpus: Corpus):
    """Per service-pair index lists; used for capacity and sampling."""
    by_service: dict[str, list[tuple[str, str]]] = {}
    for key in sorted(corpus.profiles):
        by_service.setdefault(key[0], []).append(key)
    services = sorted(by_service)
    pairs = []
    for i, sa in enumerate(services):
        for sb in services[i + 1:]:
            pairs.append((by_service[sa], by_service[sb]))
    return pairs


def synthesize_negatives(corpus: Corpus, count: int,
                         seed: int) -> list[ProfilePair]:
    """Random cross-service pairs that are not known matches.

    Deterministic for a fixed seed; sampling is without replacement, so
    the result holds no duplicates and is disjoint from positive_links.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    positive = set(corpus.positive_links)
    spaces = _cross_space(corpus)
    capacity = sum(len(a) * len(b) for a, b in spaces) - len(positive)
    if count > capacity:
        raise CapacityError(
            f"requested {count} negative pairs but only {capacity} "
            f"non-matching cross-service pairs exist")
    if count == 0:
        return []
    rng = random.Random(seed)
    chosen: list[tuple[tuple[str, str], tuple[str, str]]] = []
    if capacity <= max(4 * count, 100_000):
        complement = []
        for keys_a, keys_b in spaces:
            for ka in keys_a:
                for kb in keys_b:
                    link = _canonical_link(ka, kb)
                    if link not in positive:
                        complement.append(link)
        complement.sort()
        chosen = rng.sample(complement, count)
    else:
        weights = [len(a) * len(b) for a, b in spaces]
        total = sum(weights)
        taken = set()
        while len(chosen) < count:
            r = rng.randrange(total)
            for (keys_a, keys_b), w in zip(spaces, weights):
                if r < w:
                    ka = keys_a[rng.randrange(len(keys_a))]
                    kb = keys_b[rng.randrange(len(keys_b))]
                    break
                r -= w
            link = _canonical_link(ka, kb)
            if link in positive or link in taken:
                continue
            taken.add(link)
            chosen.append(link)
    return [ProfilePair(corpus.profiles[ka], corpus.profiles[kb],
                        Label.NONMATCH) for ka, kb in chosen]


def dedup_best_pairs(corpus: Corpus) -> Corpus:
    """Optional cleaning pass for users listing several accounts on one
    service: within each linked group, keep only the cross-service pair
    with the highest userid similarity (ties break lexicographically)."""
    from .text import jaro_winkler

    parent: dict[tuple[str, str], tuple[str, str]] = {}

    def find(k):
        while parent.get(k, k) != k:
            parent[k] = parent.get(parent[k], parent[k])
            k = parent[k]
        return k

    for ka, kb in corpus.positive_links:
        ra, rb = find(ka), find(kb)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for ka, kb in corpus.positive_links:
        root = find(ka)
        members = groups.setdefault(root, [])
        for k in (ka, kb):
            if k not in members:
                members.append(k)

    links = []
    for members in groups.values():
        by_service: dict[str, list[tuple[str, str]]] = {}
        for k in sorted(members):
            by_service.setdefault(k[0], []).append(k)
        services = sorted(by_service)
        for i, sa in enumerate(services):
            for sb in services[i + 1:]:
                best = min(
                    ((ka, kb) for ka in by_service[sa] for kb in by_service[sb]),
                    key=lambda pair: (-jaro_winkler(pair[0][1], pair[1][1]),
                                      pair),
                )
                links.append(_canonical_link(*best))
    return Corpus(profiles=dict(corpus.profiles),
                  positive_links=sorted(links),
                  duplicates_dropped=corpus.duplicates_dropped)
