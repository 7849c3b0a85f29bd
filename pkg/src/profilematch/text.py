"""Short-string and free-text similarity.

Covers the string side of the profile comparison: Jaro and Jaro-Winkler
for handles and display names, plus the tokenisation pipeline feeding
Jaccard and two-document TF-IDF cosine for free-text fields.

Conventions shared by every score here: results are symmetric, live in
[0, 1], and two empty inputs score 1.0 (two absent values of a field are
maximally consistent) while empty-vs-nonempty scores 0.0.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import kernels

WINKLER_PREFIX_WEIGHT = 0.1
WINKLER_PREFIX_CAP = 4

_PUNCT_TABLE = {ord(c): " " for c in string.punctuation}


def _load_stopwords() -> frozenset[str]:
    text = resources.files("profilematch.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


def _codepoints(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def jaro(s1: str, s2: str) -> float:
    """Jaro similarity, case-folded. Both empty -> 1.0, one empty -> 0.0."""
    s1 = s1.casefold()
    s2 = s2.casefold()
    if not s1 and not s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    return float(kernels.jaro_u32(_codepoints(s1), _codepoints(s2)))


def jaro_winkler(s1: str, s2: str) -> float:
    """Jaro boosted by shared prefix: j + l*p*(1-j), l capped at 4, p=0.1."""
    f1 = s1.casefold()
    f2 = s2.casefold()
    j = jaro(f1, f2)
    prefix = 0
    for c1, c2 in zip(f1[:WINKLER_PREFIX_CAP], f2[:WINKLER_PREFIX_CAP]):
        if c1 != c2:
            break
        prefix += 1
    return j + prefix * WINKLER_PREFIX_WEIGHT * (1.0 - j)


@dataclass(frozen=True)
class TokenSet:
    """Lowercase word tokens plus the pre-filter token count."""

    tokens: frozenset[str]
    source_length: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)


# Noun/verb suffix rules tried in order; each yields candidate stems.
# A trailing doubled consonant left by bare "ing"/"ed" stripping is
# collapsed ("running" -> "runn" -> "run").
_SUFFIX_RULES = (
    ("sses", "ss"),
    ("ies", "y"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ing", ""),
    ("ing", "e"),
    ("ied", "y"),
    ("ed", ""),
    ("ed", "e"),
    ("ss", "ss"),
    ("s", ""),
)

_VOWELS = set("aeiou")


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
        return stem[:-1]
    return stem


def _lemma_candidates(token: str):
    for suffix, repl in _SUFFIX_RULES:
        if token.endswith(suffix) and len(token) > len(suffix) + 1:
            stem = token[: -len(suffix)] + repl
            if suffix in ("ing", "ed") and repl == "":
                undoubled = _undouble(stem)
                if undoubled != stem:
                    # graph validation may still prefer the doubled stem
                    yield undoubled
            yield stem


def lemmatize(token: str, graph=None) -> str:
    """Suffix-rule lemmatiser; validates against a hypernym graph if given.

    With a graph, the first candidate (the token itself included) whose
    lemma resolves in the graph wins; without one, the first rule hit wins.
    """
    if graph is not None:
        if graph.lookup(token):
            return token
        for cand in _lemma_candidates(token):
            if graph.lookup(cand):
                return cand
        return token
    for cand in _lemma_candidates(token):
        return cand
    return token


def split_words(text: str) -> list[str]:
    """Punctuation stripped, lowercased, whitespace-split. Keeps duplicates."""
    return text.translate(_PUNCT_TABLE).lower().split()


def tokenize(text: str, lemmatize_tokens: bool = False,
             drop_stopwords: bool = False, graph=None) -> TokenSet:
    """Normalise free text into a TokenSet.

    Stop words (bundled English list) are removed when requested;
    lemmatisation uses the suffix rules above, validated against ``graph``
    when one is supplied.
    """
    words = split_words(text)
    source_length = len(words)
    if drop_stopwords:
        words = [w for w in words if w not in STOPWORDS]
    if lemmatize_tokens:
        words = [lemmatize(w, graph) for w in words]
    return TokenSet(tokens=frozenset(words), source_length=source_length)


def jaccard(a: TokenSet, b: TokenSet) -> float:
    """|a & b| / |a | b|. Both empty -> 1.0, one empty -> 0.0."""
    if not a.tokens and not b.tokens:
        return 1.0
    if not a.tokens or not b.tokens:
        return 0.0
    inter = len(a.tokens & b.tokens)
    union = len(a.tokens | b.tokens)
    return inter / union


def tfidf_cosine(a: TokenSet, b: TokenSet) -> float:
    """Cosine over TF-IDF weights computed on the two-document corpus {a, b}.

    The plain IDF log(N/df) zeroes every shared token when N=2, collapsing
    the score, so the smoothed variant ln(1 + N/df) is used. Token sets are
    binary documents: tf is 1 for present tokens.
    """
    if not a.tokens and not b.tokens:
        return 1.0
    if not a.tokens or not b.tokens:
        return 0.0
    vocab = sorted(a.tokens | b.tokens)
    num = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for token in vocab:
        in_a = token in a.tokens
        in_b = token in b.tokens
        df = int(in_a) + int(in_b)
        idf = math.log(1.0 + 2.0 / df)
        if in_a:
            norm_a += idf * idf
        if in_b:
            norm_b += idf * idf
        if in_a and in_b:
            num += idf * idf
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return num / math.sqrt(norm_a * norm_b)
