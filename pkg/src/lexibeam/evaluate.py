"""Recognition-quality metrics and evaluation protocols.

All word-level metrics run on a minimum-edit-distance alignment between
hypothesis and reference word sequences (substitution cost 1, so a single
substitution is always preferred over an insert+delete pair). Error
counts pool across lines; rates are computed from the pooled counts.

The in-vocabulary split classifies each *reference* word by whether any
vocabulary entry matches inside it under the entry's case and anchor
rules (a start-anchored "with" makes "within" in-vocabulary). Alignment
errors are attributed to the reference word's class; insertions have no
reference word and count toward the out-of-vocabulary pool.

Jaccard uses J(R, GT) = |R ∩ GT| / |R ∪ GT| with J(∅, ∅) = 1 by
convention (noted in report footers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from . import regexlang
from .charlm import CharLm
from .decoder import DecoderParams, decode_batch
from .vocab import (M_END_BOUND, M_END_FREE, M_NOW_BOUND, M_NOW_FREE,
                    VocabModel, WeightParams, build_vocab_from_corpus,
                    compile_vocab, fold)

WordSeq = Sequence[str]


def _words(x) -> List[str]:
    return x.split() if isinstance(x, str) else list(x)


# -- alignment and WER ------------------------------------------------------

def align(ref: WordSeq, hyp: WordSeq) -> List[Tuple[Optional[int], Optional[int]]]:
    """Minimum-edit alignment as (ref_idx, hyp_idx) pairs.

    Matches and substitutions pair both indices; deletions pair
    (ref_idx, None); insertions pair (None, hyp_idx). Ties prefer the
    diagonal, then deletion, so the result is deterministic.
    """
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int32)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ri != hyp[j - 1])
            dele = prev[j] + 1
            ins = row[j - 1] + 1
            row[j] = min(sub, dele, ins)
    pairs: List[Tuple[Optional[int], Optional[int]]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            pairs.append((i - 1, None))
            i -= 1
        else:
            pairs.append((None, j - 1))
            j -= 1
    pairs.reverse()
    return pairs


def _edit_ops(ref: WordSeq, hyp: WordSeq) -> int:
    return sum(1 for ri, hj in align(ref, hyp)
               if ri is None or hj is None or ref[ri] != hyp[hj])


def word_error_rate(hyps: Sequence[WordSeq], refs: Sequence[WordSeq]) -> float:
    """Pooled WER percentage over parallel line lists."""
    if len(hyps) != len(refs):
        raise ValueError(f"hypothesis count {len(hyps)} != reference count {len(refs)}")
    errors = 0
    n_ref = 0
    for hyp, ref in zip(hyps, refs):
        ref_w, hyp_w = _words(ref), _words(hyp)
        errors += _edit_ops(ref_w, hyp_w)
        n_ref += len(ref_w)
    if n_ref == 0:
        raise ValueError("empty reference")
    return 100.0 * errors / n_ref


# -- vocabulary membership --------------------------------------------------

def _scan_word(trie, word: str) -> bool:
    children = trie.children
    mask = trie.term_mask
    L = len(word)
    for p in range(L):
        node = 0
        q = p
        while q < L:
            node = children[node].get(word[q])
            if node is None:
                break
            q += 1
            m = mask[node]
            if m:
                if m & (M_NOW_BOUND if p == 0 else M_NOW_FREE):
                    return True
                if q == L and m & (M_END_BOUND if p == 0 else M_END_FREE):
                    return True
    return False


def classify_iv(word: str, vocab: VocabModel) -> bool:
    """True iff some vocabulary entry matches inside the word.

    Start-anchored entries must be a prefix of the word, end-anchored a
    suffix, both an exact match, unanchored any substring. Regex entries
    are checked with the backtracking matcher, independent of the DFA.
    """
    if not word or vocab is None or vocab.is_empty:
        return False
    if _scan_word(vocab.trie_cs, word):
        return True
    if vocab.trie_ci.n_nodes > 1 and _scan_word(vocab.trie_ci, fold(word)):
        return True
    for entry, tree in vocab.regex_trees:
        if regexlang.matches_in(tree, word, entry.anchor_start, entry.anchor_end):
            return True
    return False


def coverage(ref_words: Sequence[str], vocab: VocabModel) -> float:
    """Fraction of reference words that are in vocabulary."""
    words = list(ref_words)
    if not words:
        raise ValueError("empty reference")
    cache: Dict[str, bool] = {}
    hits = 0
    for w in words:
        flag = cache.get(w)
        if flag is None:
            flag = classify_iv(w, vocab)
            cache[w] = flag
        hits += flag
    return hits / len(words)


def recognized_set(words: Iterable[str], vocab: VocabModel) -> Set[str]:
    """Vocabulary entry patterns found in the given words (for Jaccard)."""
    found: Set[str] = set()
    word_list = [_w for _w in words]
    for entry, tree in ((e, None) for e in vocab.entries if e.kind == "literal"):
        pat = entry.pattern if entry.case_sensitive else fold(entry.pattern)
        for w in word_list:
            t = w if entry.case_sensitive else fold(w)
            if entry.anchor_start and entry.anchor_end:
                ok = t == pat
            elif entry.anchor_start:
                ok = t.startswith(pat)
            elif entry.anchor_end:
                ok = t.endswith(pat)
            else:
                ok = pat in t
            if ok:
                found.add(entry.pattern)
                break
    for entry, tree in vocab.regex_trees:
        for w in word_list:
            if regexlang.matches_in(tree, w, entry.anchor_start, entry.anchor_end):
                found.add(entry.pattern)
                break
    return found


def jaccard_index(recognized: Set[str], truth: Set[str]) -> float:
    """|R ∩ GT| / |R ∪ GT|; both sets empty gives 1.0 by convention."""
    union = recognized | truth
    if not union:
        return 1.0
    return len(recognized & truth) / len(union)


# -- win ratio ---------------------------------------------------------------

def _ref_correct(ref: List[str], hyp: List[str]) -> List[bool]:
    ok = [False] * len(ref)
    for ri, hj in align(ref, hyp):
        if ri is not None and hj is not None and ref[ri] == hyp[hj]:
            ok[ri] = True
    return ok


def correction_counts(base_hyps: Sequence[WordSeq], custom_hyps: Sequence[WordSeq],
                      refs: Sequence[WordSeq],
                      keep: Optional[Callable[[str], bool]] = None) -> Tuple[int, int]:
    """(corrected, broken) reference-word counts between two systems."""
    if not (len(base_hyps) == len(custom_hyps) == len(refs)):
        raise ValueError("base, custom and reference line counts differ")
    corrected = broken = 0
    for base, custom, ref in zip(base_hyps, custom_hyps, refs):
        ref_w = _words(ref)
        base_ok = _ref_correct(ref_w, _words(base))
        custom_ok = _ref_correct(ref_w, _words(custom))
        for i, w in enumerate(ref_w):
            if keep is not None and not keep(w):
                continue
            if not base_ok[i] and custom_ok[i]:
                corrected += 1
            elif base_ok[i] and not custom_ok[i]:
                broken += 1
    return corrected, broken


def _ratio(corrected: int, broken: int) -> Optional[float]:
    if broken == 0:
        return math.inf if corrected > 0 else None
    return corrected / broken


def win_ratio(base_hyps: Sequence[WordSeq], custom_hyps: Sequence[WordSeq],
              refs: Sequence[WordSeq]) -> Optional[float]:
    """Errors fixed by the custom system per correct word it broke.

    Returns math.inf when nothing broke but something was fixed, and
    None (undefined) when neither happened.
    """
    corrected, broken = correction_counts(base_hyps, custom_hyps, refs)
    return _ratio(corrected, broken)


# -- pooled reports -----------------------------------------------------------

_ZERO_COUNTS = dict(n_ref=0, n_iv=0, err_custom_all=0, err_custom_iv=0,
                    err_custom_oov=0, err_base_all=0, err_base_iv=0,
                    err_base_oov=0, corrected=0, broken=0, corrected_iv=0,
                    broken_iv=0, jaccard_sum=0.0, jaccard_lines=0)


@dataclass
class EvalReport:
    wer_all: Optional[float] = None
    wer_iv: Optional[float] = None
    wer_oov: Optional[float] = None
    base_wer_all: Optional[float] = None
    base_wer_iv: Optional[float] = None
    base_wer_oov: Optional[float] = None
    coverage: Optional[float] = None
    win_ratio: Optional[float] = None
    win_ratio_iv: Optional[float] = None
    jaccard_mean: Optional[float] = None
    counts: Dict[str, float] = field(default_factory=dict)
    folds: List[dict] = field(default_factory=list)
    notes: Tuple[str, ...] = ("jaccard(empty, empty) = 1.0 by convention",
                              "insertions count toward the out-of-vocabulary pool")

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v
        return {
            "wer_all": self.wer_all, "wer_iv": self.wer_iv, "wer_oov": self.wer_oov,
            "base_wer_all": self.base_wer_all, "base_wer_iv": self.base_wer_iv,
            "base_wer_oov": self.base_wer_oov,
            "coverage": self.coverage,
            "win_ratio": enc(self.win_ratio), "win_ratio_iv": enc(self.win_ratio_iv),
            "jaccard_mean": self.jaccard_mean,
            "counts": dict(self.counts),
            "folds": list(self.folds),
            "notes": list(self.notes),
        }


def _line_error_split(ref: List[str], hyp: List[str],
                      iv: Optional[Callable[[str], bool]]) -> Tuple[int, int, int]:
    """(errors_all, errors_iv, errors_oov) for one aligned line."""
    e_all = e_iv = e_oov = 0
    for ri, hj in align(ref, hyp):
        if ri is not None and hj is not None and ref[ri] == hyp[hj]:
            continue
        e_all += 1
        if iv is None:
            continue
        if ri is not None and iv(ref[ri]):
            e_iv += 1
        else:
            e_oov += 1
    return e_all, e_iv, e_oov


def tally_counts(refs: Sequence[WordSeq], custom_hyps: Sequence[WordSeq],
                 base_hyps: Optional[Sequence[WordSeq]] = None,
                 vocab: Optional[VocabModel] = None,
                 with_jaccard: bool = False) -> Dict[str, float]:
    """Raw pooled tallies for one evaluation slice (one jackknife fold)."""
    if len(custom_hyps) != len(refs):
        raise ValueError("hypothesis and reference line counts differ")
    if base_hyps is not None and len(base_hyps) != len(refs):
        raise ValueError("baseline and reference line counts differ")
    counts = dict(_ZERO_COUNTS)
    iv_cache: Dict[str, bool] = {}

    def iv(word: str) -> bool:
        flag = iv_cache.get(word)
        if flag is None:
            flag = classify_iv(word, vocab)
            iv_cache[word] = flag
        return flag

    iv_fn = iv if vocab is not None else None
    for idx, (ref, custom) in enumerate(zip(refs, custom_hyps)):
        ref_w, custom_w = _words(ref), _words(custom)
        counts["n_ref"] += len(ref_w)
        if iv_fn is not None:
            counts["n_iv"] += sum(1 for w in ref_w if iv_fn(w))
        ea, ei, eo = _line_error_split(ref_w, custom_w, iv_fn)
        counts["err_custom_all"] += ea
        counts["err_custom_iv"] += ei
        counts["err_custom_oov"] += eo
        if base_hyps is not None:
            base_w = _words(base_hyps[idx])
            ea, ei, eo = _line_error_split(ref_w, base_w, iv_fn)
            counts["err_base_all"] += ea
            counts["err_base_iv"] += ei
            counts["err_base_oov"] += eo
            base_ok = _ref_correct(ref_w, base_w)
            custom_ok = _ref_correct(ref_w, custom_w)
            for i, w in enumerate(ref_w):
                if not base_ok[i] and custom_ok[i]:
                    counts["corrected"] += 1
                    if iv_fn is not None and iv_fn(w):
                        counts["corrected_iv"] += 1
                elif base_ok[i] and not custom_ok[i]:
                    counts["broken"] += 1
                    if iv_fn is not None and iv_fn(w):
                        counts["broken_iv"] += 1
        if with_jaccard and vocab is not None:
            r = recognized_set(custom_w, vocab)
            gt = recognized_set(ref_w, vocab)
            counts["jaccard_sum"] += jaccard_index(r, gt)
            counts["jaccard_lines"] += 1
    return counts


def report_from_counts(counts: Mapping[str, float],
                       have_base: bool, have_vocab: bool,
                       folds: Optional[List[dict]] = None) -> EvalReport:
    n_ref = counts["n_ref"]
    n_iv = counts["n_iv"]
    n_oov = n_ref - n_iv

    def rate(err, denom):
        return 100.0 * err / denom if denom > 0 else None

    report = EvalReport(
        wer_all=rate(counts["err_custom_all"], n_ref),
        counts=dict(counts),
        folds=folds or [],
    )
    if have_vocab:
        report.wer_iv = rate(counts["err_custom_iv"], n_iv)
        report.wer_oov = rate(counts["err_custom_oov"], n_oov)
        report.coverage = n_iv / n_ref if n_ref else None
    if have_base:
        report.base_wer_all = rate(counts["err_base_all"], n_ref)
        if have_vocab:
            report.base_wer_iv = rate(counts["err_base_iv"], n_iv)
            report.base_wer_oov = rate(counts["err_base_oov"], n_oov)
            report.win_ratio_iv = _ratio(counts["corrected_iv"], counts["broken_iv"])
        report.win_ratio = _ratio(counts["corrected"], counts["broken"])
    if counts.get("jaccard_lines"):
        report.jaccard_mean = counts["jaccard_sum"] / counts["jaccard_lines"]
    return report


def evaluate_hypotheses(refs: Sequence[WordSeq], custom_hyps: Sequence[WordSeq],
                        base_hyps: Optional[Sequence[WordSeq]] = None,
                        vocab: Optional[VocabModel] = None,
                        with_jaccard: bool = False) -> EvalReport:
    counts = tally_counts(refs, custom_hyps, base_hyps, vocab, with_jaccard)
    return report_from_counts(counts, base_hyps is not None, vocab is not None)


# -- jackknife protocol -------------------------------------------------------

Document = Tuple[Sequence[str], Sequence[Tuple[object, str]]]  # (corpus, suite)


@dataclass
class JackknifeConfig:
    charlm: CharLm
    weight_params: WeightParams = field(default_factory=WeightParams)
    decoder_params: DecoderParams = field(default_factory=DecoderParams)
    vocab_scale: float = 1.0
    min_weight: float = 0.0
    case_sensitive: bool = True
    anchor_start: bool = True
    anchor_end: bool = False
    min_token_len: int = 2
    parallelism: int = 1


def jackknife_sweep(documents: Sequence[Document], vocab_sizes: Sequence[int],
                    config: JackknifeConfig) -> Dict[int, EvalReport]:
    """Leave-one-document-out evaluation at several vocabulary sizes.

    The baseline decode of each held-out document and the vocabulary
    ranking are shared across sizes: the size-k vocabulary is the top k
    of the ranking built from the other documents.
    """
    if len(documents) < 2:
        raise ValueError("jackknife needs at least 2 documents")
    sizes = sorted(set(int(s) for s in vocab_sizes))
    if not sizes:
        raise ValueError("no vocabulary sizes given")
    max_size = max(sizes)
    totals: Dict[int, Dict[str, float]] = {s: dict(_ZERO_COUNTS) for s in sizes}
    fold_notes: Dict[int, List[dict]] = {s: [] for s in sizes}

    for d, (_, suite) in enumerate(documents):
        train_lines: List[str] = []
        for o, (corpus, _) in enumerate(documents):
            if o != d:
                train_lines.extend(corpus)
        ranking = build_vocab_from_corpus(
            train_lines, config.charlm, config.weight_params,
            max_size=max(max_size, 1), min_weight=config.min_weight,
            case_sensitive=config.case_sensitive,
            anchor_start=config.anchor_start, anchor_end=config.anchor_end,
            min_token_len=config.min_token_len) if max_size > 0 else []

        emissions = [em for em, _ in suite]
        truths = [truth for _, truth in suite]
        base_results = decode_batch(emissions, config.charlm, None,
                                    config.decoder_params, config.parallelism)
        base_texts = [r.text for r in base_results]

        for size in sizes:
            entries = ranking[:size]
            vocab = compile_vocab(entries, config.vocab_scale) if entries else None
            if vocab is None:
                custom_texts = base_texts
            else:
                custom = decode_batch(emissions, config.charlm, vocab,
                                      config.decoder_params, config.parallelism)
                custom_texts = [r.text for r in custom]
            counts = tally_counts(truths, custom_texts, base_texts,
                                  vocab if vocab is not None else VocabModel.empty())
            for k, v in counts.items():
                totals[size][k] += v
            fold_notes[size].append({"document": d, "vocab_size": len(entries),
                                     **{k: counts[k] for k in
                                        ("n_ref", "n_iv", "err_base_all",
                                         "err_custom_all", "corrected", "broken")}})

    return {s: report_from_counts(totals[s], True, True, fold_notes[s])
            for s in sizes}


def jackknife_eval(documents: Sequence[Document], vocab_size: int,
                   config: JackknifeConfig) -> EvalReport:
    """Single-size variant of :func:`jackknife_sweep`."""
    return jackknife_sweep(documents, [vocab_size], config)[int(vocab_size)]


# -- random-search tuner -------------------------------------------------------

@dataclass
class TuneResult:
    best_params: Dict[str, object]
    best_score: float
    trials: List[Tuple[Dict[str, object], float]] = field(default_factory=list)


def tune_params(objective: Callable[[Dict[str, object]], float],
                space: Mapping[str, object], budget: int, seed: int = 0,
                maximize: bool = False) -> TuneResult:
    """Uniform random search over a small parameter space.

    Each space entry is either a (lo, hi) float range or a list of
    choices. Evaluates `budget` points and returns the best (min by
    default). Deterministic for a fixed seed.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    keys = sorted(space)
    if not keys:
        raise ValueError("empty search space")
    rng = np.random.default_rng(seed)
    best_params: Optional[Dict[str, object]] = None
    best_score = -math.inf if maximize else math.inf
    trials: List[Tuple[Dict[str, object], float]] = []
    for _ in range(budget):
        point: Dict[str, object] = {}
        for k in keys:
            spec = space[k]
            if isinstance(spec, (list, tuple)) and len(spec) == 2 \
                    and all(isinstance(v, (int, float)) for v in spec):
                lo, hi = spec
                point[k] = float(lo + (hi - lo) * rng.random())
            elif isinstance(spec, (list, tuple)) and len(spec) > 0:
                point[k] = spec[int(rng.integers(0, len(spec)))]
            else:
                raise ValueError(f"bad search-space spec for {k!r}: {spec!r}")
        score = float(objective(point))
        trials.append((point, score))
        if (score > best_score) if maximize else (score < best_score):
            best_score = score
            best_params = point
    assert best_params is not None
    return TuneResult(best_params, best_score, trials)
