"""WordNet noun ontology: database parsing and hypernym-tree similarity.

Parses the plain-text ``index.noun`` / ``data.noun`` pair (WordNet 3.x
grind format: space-delimited fields, hexadecimal word counts) into an
immutable hypernym graph, then scores concept similarity as
``2 * depth(lcs) / (depth(a) + depth(b))`` where the lcs is the deepest
shared ancestor.

Depth counts nodes from a virtual root joining all top-level synsets, so
depth(root) = 1 and every depth is >= 1; top-level synsets then sit at
depth 2 and the score never hits the 0/0 singularity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ParseError, ReferentialError
from .text import tokenize

VIRTUAL_ROOT = 0

HYPERNYM_SYMBOLS = ("@", "@i")


@dataclass(frozen=True)
class Synset:
    offset: int
    lemmas: tuple[str, ...]
    hypernyms: tuple[int, ...]


@dataclass
class HypernymGraph:
    """Immutable after construction; all queries are read-only."""

    synsets: dict[int, Synset]
    word_index: dict[str, tuple[int, ...]]
    root: int = VIRTUAL_ROOT
    _depths: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._depths:
            self._depths.update(_compute_depths(self.synsets, self.root))

    def lookup(self, word: str) -> tuple[int, ...]:
        """Offsets for a lemma in sense order; empty when unknown."""
        return self.word_index.get(word.lower(), ())

    def first_synset(self, word: str) -> Synset | None:
        offsets = self.lookup(word)
        return self.synsets[offsets[0]] if offsets else None

    def depth(self, offset: int) -> int:
        try:
            return self._depths[offset]
        except KeyError:
            raise KeyError(f"synset {offset} not in graph") from None

    def ancestors(self, offset: int) -> set[int]:
        """All hypernym ancestors of ``offset``, itself included."""
        if offset not in self.synsets and offset != self.root:
            raise KeyError(f"synset {offset} not in graph")
        seen = {offset}
        queue = deque([offset])
        while queue:
            cur = queue.popleft()
            if cur == self.root:
                continue
            for parent in self.synsets[cur].hypernyms:
                if parent not in seen:
                    seen.add(parent)
                    queue.append(parent)
        return seen

    def to_normalized_lines(self) -> list[str]:
        """Canonical dump: one ``offset|lemmas|hypernyms`` line per synset."""
        lines = []
        for offset in sorted(self.synsets):
            s = self.synsets[offset]
            lines.append("%d|%s|%s" % (
                offset,
                ",".join(s.lemmas),
                ",".join(str(h) for h in sorted(s.hypernyms)),
            ))
        return lines

    @classmethod
    def from_normalized_lines(cls, lines) -> "HypernymGraph":
        synsets = {}
        words: dict[str, list[int]] = {}
        for line in lines:
            off_s, lemma_s, hyper_s = line.split("|")
            offset = int(off_s)
            lemmas = tuple(lemma_s.split(",")) if lemma_s else ()
            hypernyms = tuple(int(h) for h in hyper_s.split(",")) if hyper_s else ()
            synsets[offset] = Synset(offset, lemmas, hypernyms)
            for lemma in lemmas:
                words.setdefault(lemma.lower(), []).append(offset)
        _link_roots(synsets)
        return cls(synsets=synsets,
                   word_index={w: tuple(o) for w, o in sorted(words.items())})


def _compute_depths(synsets: dict[int, Synset], root: int) -> dict[int, int]:
    """Shortest node-count distance from the virtual root, root = 1."""
    children: dict[int, list[int]] = {root: []}
    for s in synsets.values():
        for parent in s.hypernyms:
            children.setdefault(parent, []).append(s.offset)
    depths = {root: 1}
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for child in children.get(cur, ()):
            if child not in depths:
                depths[child] = depths[cur] + 1
                queue.append(child)
    unreachable = set(synsets) - set(depths)
    if unreachable:
        raise ReferentialError(
            f"{len(unreachable)} synsets do not reach the root "
            f"(hypernym cycle or orphan), e.g. {sorted(unreachable)[:3]}")
    return depths


def _link_roots(synsets: dict[int, Synset]) -> None:
    """Point every parentless synset at the virtual root (in place)."""
    for offset, s in synsets.items():
        if not s.hypernyms:
            synsets[offset] = Synset(s.offset, s.lemmas, (VIRTUAL_ROOT,))


def _parse_data_line(line: str, path, lineno: int) -> Synset:
    head, _, _gloss = line.partition("|")
    fields = head.split()
    try:
        offset = int(fields[0])
        w_cnt = int(fields[3], 16)
        lemmas = tuple(fields[4 + 2 * k] for k in range(w_cnt))
        p_pos = 4 + 2 * w_cnt
        p_cnt = int(fields[p_pos])
        hypernyms = []
        for k in range(p_cnt):
            sym, target, pos, _src = fields[p_pos + 1 + 4 * k: p_pos + 5 + 4 * k]
            if sym in HYPERNYM_SYMBOLS and pos == "n":
                hypernyms.append(int(target))
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed synset record ({exc})",
                         path=path, line=lineno) from None
    if offset == VIRTUAL_ROOT:
        raise ParseError("synset offset 0 is reserved for the virtual root",
                         path=path, line=lineno)
    return Synset(offset=offset, lemmas=lemmas, hypernyms=tuple(hypernyms))


def parse_wordnet(index_path, data_path) -> HypernymGraph:
    """Parse ``index.noun`` + ``data.noun`` into a HypernymGraph.

    License-header lines (leading whitespace) are skipped. A data file
    with no synset records is malformed: the real databases always carry
    at least the header plus content.
    """
    synsets: dict[int, Synset] = {}
    with open(data_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line[0] == " ":
                continue
            s = _parse_data_line(line.rstrip("\n"), data_path, lineno)
            synsets[s.offset] = s
    if not synsets:
        raise ParseError("no synset records found", path=data_path)

    for s in synsets.values():
        for parent in s.hypernyms:
            if parent not in synsets:
                raise ReferentialError(
                    f"synset {s.offset} points at unknown hypernym {parent}")

    word_index: dict[str, tuple[int, ...]] = {}
    with open(index_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line[0] == " ":
                continue
            fields = line.split()
            try:
                lemma, pos = fields[0], fields[1]
                synset_cnt = int(fields[2])
                p_cnt = int(fields[3])
                offsets = tuple(int(o) for o in fields[4 + p_cnt + 2:])
                if len(offsets) != synset_cnt:
                    raise ValueError(
                        f"expected {synset_cnt} offsets, found {len(offsets)}")
            except (IndexError, ValueError) as exc:
                raise ParseError(f"malformed index record ({exc})",
                                 path=index_path, line=lineno) from None
            if pos != "n":
                continue
            for offset in offsets:
                if offset not in synsets:
                    raise ReferentialError(
                        f"index entry '{lemma}' points at unknown synset {offset}")
            word_index[lemma.lower()] = offsets

    _link_roots(synsets)
    return HypernymGraph(synsets=synsets, word_index=word_index)


def _as_offset(g: HypernymGraph, s) -> int:
    offset = s.offset if isinstance(s, Synset) else int(s)
    if offset not in g.synsets:
        raise KeyError(f"synset {offset} not in graph")
    return offset


def wu_palmer(g: HypernymGraph, s1, s2) -> float:
    """2*depth(lcs) / (depth(s1) + depth(s2)); always in (0, 1]."""
    o1 = _as_offset(g, s1)
    o2 = _as_offset(g, s2)
    common = g.ancestors(o1) & g.ancestors(o2)
    lcs_depth = max(g.depth(o) for o in common)
    return 2.0 * lcs_depth / (g.depth(o1) + g.depth(o2))


def _token_pair_similarity(g: HypernymGraph, t1: str, t2: str) -> float:
    s1 = g.first_synset(t1)
    s2 = g.first_synset(t2)
    if s1 is None or s2 is None:
        return 1.0 if t1 == t2 else 0.0
    return wu_palmer(g, s1, s2)


def ontology_description_score(g: HypernymGraph, a, b,
                               aggregation: str = "mean_of_max") -> float:
    """Description similarity via best-match ontology lookups.

    Each token of the smaller set is paired with its best-matching token
    of the other set (first listed noun sense per token; tokens without a
    synset fall back to exact text match). ``mean_of_max`` averages those
    best scores; ``max_of_max`` keeps the single best pair.
    """
    if aggregation not in ("mean_of_max", "max_of_max"):
        raise ValueError(f"unknown aggregation {aggregation!r}")

    def as_tokens(x):
        if isinstance(x, str):
            x = tokenize(x, lemmatize_tokens=True, drop_stopwords=True,
                         graph=g)
        return sorted(x.tokens if hasattr(x, "tokens") else x)

    ta = as_tokens(a)
    tb = as_tokens(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    # iterate the smaller side; on equal sizes the lexicographically
    # smaller side, keeping the score symmetric
    if (len(ta), ta) > (len(tb), tb):
        ta, tb = tb, ta
    best_scores = [max(_token_pair_similarity(g, t, u) for u in tb) for t in ta]
    if aggregation == "max_of_max":
        return max(best_scores)
    return sum(best_scores) / len(best_scores)
