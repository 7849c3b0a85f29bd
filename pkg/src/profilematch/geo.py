"""Location-field similarity.

Token containment, token Jaccard and Jaro-Winkler work on the raw text;
the geographic score resolves both texts to coordinates through a
pluggable geocoder (disk cache, then offline gazetteer, then an optional
remote provider) and maps planar degree-space distance to [0, 1].
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from . import text as _text
from .errors import ParseError, ProviderError

# farthest possible degree-space separation, corner to corner
DEGREE_SPACE_MAX = math.sqrt(180.0 ** 2 + 360.0 ** 2)

# half the mean Earth circumference, km (farthest great-circle separation)
HAVERSINE_MAX_KM = math.pi * 6371.0088

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def normalize_query(location: str) -> str:
    return " ".join(location.split()).lower()


def load_gazetteer(path) -> dict[str, GeoPoint]:
    """TSV of ``name<TAB>lat<TAB>lon``, lowercase names, one per line."""
    table: dict[str, GeoPoint] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError("expected name<TAB>lat<TAB>lon",
                                 path=path, line=lineno)
            name, lat_s, lon_s = parts
            try:
                table[name.strip().lower()] = GeoPoint(float(lat_s), float(lon_s))
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from None
    return table


class Geocoder:
    """Resolves location text to coordinates: cache, gazetteer, provider.

    Cache hits (including cached misses) never invoke the provider, so
    resolution is deterministic for a frozen cache + gazetteer. The cache
    file is an append-only TSV of ``query<TAB>lat<TAB>lon`` or
    ``query<TAB>MISS``; writes are serialised by a lock.
    """

    def __init__(self, gazetteer: dict[str, GeoPoint] | None = None,
                 cache_path=None, provider=None):
        self.gazetteer = gazetteer or {}
        self.cache_path = cache_path
        self.provider = provider
        self._lock = threading.Lock()
        self._cache: dict[str, GeoPoint | None] = {}
        if cache_path is not None:
            self._load_cache(cache_path)

    def _load_cache(self, path):
        try:
            f = open(path, encoding="utf-8")
        except FileNotFoundError:
            return
        with f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) == 2 and parts[1] == "MISS":
                    self._cache[parts[0]] = None
                elif len(parts) == 3:
                    try:
                        self._cache[parts[0]] = GeoPoint(float(parts[1]),
                                                         float(parts[2]))
                    except ValueError as exc:
                        raise ParseError(str(exc), path=path, line=lineno) from None
                else:
                    raise ParseError("expected query<TAB>lat<TAB>lon or "
                                     "query<TAB>MISS", path=path, line=lineno)

    def _append_cache(self, key: str, point: GeoPoint | None):
        self._cache[key] = point
        if self.cache_path is None:
            return
        key = key.replace("\t", " ")
        if point is None:
            record = f"{key}\tMISS\n"
        else:
            record = f"{key}\t{point.lat!r}\t{point.lon!r}\n"
        with open(self.cache_path, "a", encoding="utf-8") as f:
            f.write(record)

    def resolve(self, location: str) -> GeoPoint | None:
        """Coordinates for a location text, or None when unresolvable."""
        key = normalize_query(location)
        if not key:
            return None
        with self._lock:
            if key in self._cache:
                return self._cache[key]
            point = self.gazetteer.get(key)
            if point is None and "," in key:
                point = self.gazetteer.get(key.split(",", 1)[0].strip())
            if point is None and self.provider is not None:
                try:
                    raw = self.provider(location)
                except Exception as exc:
                    raise ProviderError(
                        f"remote geocoding failed for {location!r}: {exc}"
                    ) from exc
                point = GeoPoint(*raw) if raw is not None else None
            self._append_cache(key, point)
            return point


def degree_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Planar Euclidean distance straight over (lat, lon) degrees."""
    return math.sqrt((a.lat - b.lat) ** 2 + (a.lon - b.lon) ** 2)


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    h = (math.sin((lat2 - lat1) / 2.0) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def geo_distance_score(geocoder: Geocoder, a: str, b: str,
                       use_haversine: bool = False) -> float | None:
    """1 - distance/max, clamped to [0, 1]; None when either side fails.

    Default distance is planar Euclidean in degree space. The haversine
    flag swaps in great-circle kilometres with the matching normaliser.
    """
    pa = geocoder.resolve(a)
    pb = geocoder.resolve(b)
    if pa is None or pb is None:
        return None
    if use_haversine:
        d = haversine_km(pa, pb) / HAVERSINE_MAX_KM
    else:
        d = degree_distance(pa, pb) / DEGREE_SPACE_MAX
    return min(1.0, max(0.0, 1.0 - d))


def raw_geo_distance(geocoder: Geocoder, a: str, b: str,
                     use_haversine: bool = False) -> float | None:
    """Unmapped distance for diagnostics output."""
    pa = geocoder.resolve(a)
    pb = geocoder.resolve(b)
    if pa is None or pb is None:
        return None
    return haversine_km(pa, pb) if use_haversine else degree_distance(pa, pb)


def substring_score(a: str, b: str) -> float:
    """Token containment: tokens of each side found as substrings of the
    other side's normalised text, over the total token count."""
    tokens_a = _text.split_words(a)
    tokens_b = _text.split_words(b)
    if not tokens_a and not tokens_b:
        return 1.0
    if not tokens_a or not tokens_b:
        return 0.0
    text_a = " ".join(tokens_a)
    text_b = " ".join(tokens_b)
    hits = sum(1 for t in tokens_a if t in text_b)
    hits += sum(1 for t in tokens_b if t in text_a)
    return hits / (len(tokens_a) + len(tokens_b))


def location_tokens(a: str) -> _text.TokenSet:
    """Location tokenisation: punctuation stripped and lowercased only."""
    return _text.tokenize(a, lemmatize_tokens=False, drop_stopwords=False)


def location_jaccard(a: str, b: str) -> float:
    return _text.jaccard(location_tokens(a), location_tokens(b))


def location_jw(a: str, b: str) -> float:
    return _text.jaro_winkler(a.lower(), b.lower())
