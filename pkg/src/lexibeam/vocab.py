"""Vocabulary entries, weight assignment, and compilation to scoring machines.

A vocabulary is a list of weighted entries, each a literal word or a
regular expression, optionally anchored to word start and/or word end.
Literals may be case-insensitive. Compilation produces:

* one trie over the case-sensitive literals,
* one trie over the casefolded case-insensitive literals,
* one weighted DFA for all regular expressions,

wrapped in a :class:`VocabModel` together with a global bonus scale.

Tries are stored as parallel arrays indexed by node id (node 0 is the
root; children always get larger ids than their parent, so lookahead
weights are computed with a single reverse sweep). Each node carries the
max entry weight split two ways: by whether the entry tolerates a
mid-word start ("free") or is only valid from a word boundary ("bound"
covers all entries), and by whether the bonus is payable immediately or
deferred until a following boundary (end-anchored).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from . import regexlang
from .charlm import CharLm

LITERAL = "literal"
REGEX = "regex"


def is_word_char(c: str) -> bool:
    return c.isalnum()


def fold(text: str) -> str:
    """Per-character casefold; matching folds input the same way."""
    return "".join(ch.casefold() for ch in text)


@dataclass(frozen=True)
class VocabEntry:
    pattern: str
    kind: str = LITERAL
    case_sensitive: bool = True
    anchor_start: bool = False
    anchor_end: bool = False
    weight: float = 1.0

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("empty vocabulary pattern")
        if self.kind not in (LITERAL, REGEX):
            raise ValueError(f"unknown entry kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError(f"negative weight for {self.pattern!r}")
        if self.kind == REGEX and not self.case_sensitive:
            raise ValueError("regex entries are always case-sensitive")


@dataclass(frozen=True)
class WeightParams:
    c0: float = 2.0
    c1: float = 0.5
    c2: float = 0.5
    ratio_cap: float = 1e4

    def __post_init__(self):
        if self.ratio_cap <= 0:
            raise ValueError("ratio_cap must be positive")


def compute_weight(word: str, frequency: float, lm_score: float,
                   params: WeightParams) -> float:
    """Entry weight from length, domain frequency, and base-LM probability.

    The frequency/lm_score ratio is capped before scaling so that words
    the base model finds wildly improbable stay on one weight scale.
    """
    if not word:
        raise ValueError("empty word")
    if lm_score <= 0:
        raise ValueError("invalid lm score")
    if not 0 < frequency <= 1:
        raise ValueError(f"frequency {frequency} outside (0, 1]")
    ratio = min(frequency / lm_score, params.ratio_cap)
    return max(0.0, params.c0 + params.c1 * len(word) + params.c2 * ratio)


def tokenize(text: str, min_len: int = 1) -> List[str]:
    """Maximal runs of letter/digit characters, at least min_len long."""
    words: List[str] = []
    cur: List[str] = []
    for c in text:
        if is_word_char(c):
            cur.append(c)
        elif cur:
            words.append("".join(cur))
            cur = []
    if cur:
        words.append("".join(cur))
    return [w for w in words if len(w) >= min_len]


def build_vocab_from_corpus(corpus: Iterable[str], charlm: CharLm,
                            params: WeightParams = WeightParams(),
                            max_size: int = 200, min_weight: float = 0.0,
                            case_sensitive: bool = True,
                            anchor_start: bool = True,
                            anchor_end: bool = False,
                            min_token_len: int = 2) -> List[VocabEntry]:
    """Rank distinct corpus words by weight and keep the best max_size.

    Ties in weight break lexicographically, so rebuilding from the same
    corpus always yields the same list.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    lines = list(corpus)
    if not lines:
        raise ValueError("empty corpus")
    counts: Dict[str, int] = {}
    total = 0
    for line in lines:
        for w in tokenize(line, min_token_len):
            counts[w] = counts.get(w, 0) + 1
            total += 1
    scored: List[Tuple[float, str]] = []
    for word, n in counts.items():
        weight = compute_weight(word, n / total, charlm.word_score(word), params)
        if weight >= min_weight:
            scored.append((weight, word))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [VocabEntry(word, LITERAL, case_sensitive=case_sensitive,
                       anchor_start=anchor_start, anchor_end=anchor_end,
                       weight=weight)
            for weight, word in scored[:max_size]]


# Terminal-marker bits: which entry classes end at a node (kept separately
# from the weights so zero-weight entries still count for IV classification).
M_NOW_BOUND, M_NOW_FREE, M_END_BOUND, M_END_FREE = 1, 2, 4, 8


class Trie:
    """Weighted prefix tree over parallel arrays (node 0 is the root)."""

    __slots__ = ("children", "parent", "now_bound", "now_free",
                 "end_bound", "end_free", "best_bound", "best_free",
                 "term_mask")

    def __init__(self) -> None:
        self.children: List[Dict[str, int]] = [{}]
        self.parent: List[int] = [-1]
        self.now_bound: List[float] = [0.0]
        self.now_free: List[float] = [0.0]
        self.end_bound: List[float] = [0.0]
        self.end_free: List[float] = [0.0]
        self.best_bound: List[float] = [0.0]
        self.best_free: List[float] = [0.0]
        self.term_mask: List[int] = [0]

    @property
    def n_nodes(self) -> int:
        return len(self.children)

    def insert(self, word: str, weight: float,
               anchor_start: bool, anchor_end: bool) -> None:
        children = self.children
        cur = 0
        for c in word:
            nxt = children[cur].get(c)
            if nxt is None:
                nxt = len(children)
                children[cur][c] = nxt
                children.append({})
                self.parent.append(cur)
                self.now_bound.append(0.0)
                self.now_free.append(0.0)
                self.end_bound.append(0.0)
                self.end_free.append(0.0)
                self.term_mask.append(0)
            cur = nxt
        if anchor_end:
            self.end_bound[cur] = max(self.end_bound[cur], weight)
            self.term_mask[cur] |= M_END_BOUND
            if not anchor_start:
                self.end_free[cur] = max(self.end_free[cur], weight)
                self.term_mask[cur] |= M_END_FREE
        else:
            self.now_bound[cur] = max(self.now_bound[cur], weight)
            self.term_mask[cur] |= M_NOW_BOUND
            if not anchor_start:
                self.now_free[cur] = max(self.now_free[cur], weight)
                self.term_mask[cur] |= M_NOW_FREE

    def finalize(self) -> None:
        """Fill best_* by propagating child maxima up to parents."""
        n = self.n_nodes
        self.best_bound = [max(a, b) for a, b in zip(self.now_bound, self.end_bound)]
        self.best_free = [max(a, b) for a, b in zip(self.now_free, self.end_free)]
        parent = self.parent
        for best in (self.best_bound, self.best_free):
            for i in range(n - 1, 0, -1):
                p = parent[i]
                if best[i] > best[p]:
                    best[p] = best[i]

    # Test-facing views matching the per-node two-score description.

    def word_weight(self, node: int) -> float:
        return max(self.now_bound[node], self.end_bound[node])

    def best_weight(self, node: int) -> float:
        return self.best_bound[node]

    def end_anchored_word(self, node: int) -> bool:
        return self.end_bound[node] > 0.0

    def node_for(self, prefix: str) -> int:
        """Node index reached by walking prefix from the root; -1 if none."""
        cur = 0
        for c in prefix:
            cur = self.children[cur].get(c, -1)
            if cur < 0:
                return -1
        return cur

    def to_dict(self) -> dict:
        return {
            "children": [dict(sorted(c.items())) for c in self.children],
            "now_bound": self.now_bound,
            "now_free": self.now_free,
            "end_bound": self.end_bound,
            "end_free": self.end_free,
            "term_mask": self.term_mask,
        }


@dataclass
class VocabModel:
    """Compiled vocabulary: two tries, one regex DFA, and the bonus scale."""

    trie_cs: Trie = field(default_factory=Trie)
    trie_ci: Trie = field(default_factory=Trie)
    dfa: regexlang.RegexDfa = field(default_factory=regexlang.RegexDfa)
    vocab_scale: float = 1.0
    entries: Tuple[VocabEntry, ...] = ()
    regex_trees: Tuple[Tuple[VocabEntry, regexlang.Node], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.entries

    @classmethod
    def empty(cls) -> "VocabModel":
        return cls()

    def to_json(self) -> str:
        doc = {
            "vocab_scale": self.vocab_scale,
            "entries": [entry_to_dict(e) for e in self.entries],
            "trie_cs": self.trie_cs.to_dict(),
            "trie_ci": self.trie_ci.to_dict(),
            "dfa": self.dfa.to_dict(),
        }
        return json.dumps(doc, ensure_ascii=False, sort_keys=True)


def compile_vocab(entries: Sequence[VocabEntry], vocab_scale: float = 1.0) -> VocabModel:
    """Build the tries and the regex DFA for a list of entries.

    Entries are compiled in a canonical sort order, so any permutation of
    the same entries produces an identical model (and identical JSON).
    Exact duplicates keep the max weight and raise a warning.
    """
    for e in entries:
        if e.weight < 0:
            raise ValueError(f"negative weight for {e.pattern!r}")

    ordered = sorted(entries, key=lambda e: (e.kind, e.pattern, e.case_sensitive,
                                             e.anchor_start, e.anchor_end, -e.weight))
    seen: Dict[tuple, float] = {}
    unique: List[VocabEntry] = []
    for e in ordered:
        key = (e.kind, e.pattern, e.case_sensitive, e.anchor_start, e.anchor_end)
        if key in seen:
            warnings.warn(f"duplicate vocabulary entry {e.pattern!r}; keeping max weight")
            continue
        seen[key] = e.weight
        unique.append(e)

    model = VocabModel(vocab_scale=vocab_scale, entries=tuple(unique))
    trees: List[Tuple[VocabEntry, regexlang.Node]] = []
    patterns: List[regexlang.CompiledPattern] = []
    for e in unique:
        if e.kind == LITERAL:
            if e.case_sensitive:
                model.trie_cs.insert(e.pattern, e.weight, e.anchor_start, e.anchor_end)
            else:
                model.trie_ci.insert(fold(e.pattern), e.weight, e.anchor_start, e.anchor_end)
        else:
            tree = regexlang.regex_parse(e.pattern)
            trees.append((e, tree))
            patterns.append(regexlang.CompiledPattern(
                tree, e.weight, e.anchor_start, e.anchor_end))
    model.trie_cs.finalize()
    model.trie_ci.finalize()
    model.dfa = regexlang.compile_dfa(patterns)
    model.regex_trees = tuple(trees)
    return model


# -- vocabulary file format -------------------------------------------------

ENTRY_KEYS = {"pattern", "kind", "case_sensitive", "anchor_start", "anchor_end", "weight"}


def entry_to_dict(e: VocabEntry) -> dict:
    return {"pattern": e.pattern, "kind": e.kind, "case_sensitive": e.case_sensitive,
            "anchor_start": e.anchor_start, "anchor_end": e.anchor_end,
            "weight": e.weight}


def entry_from_dict(d: dict) -> VocabEntry:
    extra = set(d) - ENTRY_KEYS
    if extra:
        raise ValueError(f"unknown vocabulary entry keys: {sorted(extra)}")
    if "pattern" not in d:
        raise ValueError("vocabulary entry missing 'pattern'")
    return VocabEntry(
        pattern=d["pattern"],
        kind=d.get("kind", LITERAL),
        case_sensitive=d.get("case_sensitive", True),
        anchor_start=d.get("anchor_start", False),
        anchor_end=d.get("anchor_end", False),
        weight=float(d.get("weight", 1.0)),
    )


def save_vocab_file(path: str, entries: Sequence[VocabEntry],
                    vocab_scale: float = 1.0) -> None:
    doc = {"vocab_scale": vocab_scale,
           "entries": [entry_to_dict(e) for e in entries]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=1, sort_keys=True)
        f.write("\n")


def load_vocab_file(path: str) -> Tuple[List[VocabEntry], float]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    extra = set(doc) - {"vocab_scale", "entries"}
    if extra:
        raise ValueError(f"unknown vocabulary file keys: {sorted(extra)}")
    entries = [entry_from_dict(d) for d in doc.get("entries", [])]
    return entries, float(doc.get("vocab_scale", 1.0))
