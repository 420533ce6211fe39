"""Frame-synchronous CTC beam search over emission matrices.

Hypotheses are expanded frame by frame with three move kinds: blank,
repeat of the last label (which does not extend the transcript under CTC
collapsing), and a new character, which pays the transition cost, the
unigram prior, and the language-model delta (character model plus any
vocabulary credit). Hypotheses sharing (transcript, last label) merge to
the cheaper base cost.

Retention keeps the top N by base cost inside a width window, then, when
dual retention is enabled, up to M more hypotheses ranked by best cost
(base minus the vocabulary lookahead bonus), admitted only while their
best cost does not exceed the worst retained base cost. This keeps
partially matched vocabulary words alive through locally bad frames
without widening the whole beam.

All tie-breaking is total (cost, then transcript length, then the
transcript text) so decoding is reproducible bit for bit.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .charlm import CharLm
from .lmstate import EMPTY_STATE, append_char, finalize
from .vocab import VocabModel

BLANK = -1  # last-label sentinel before any character was emitted


class EmissionMatrix:
    """Per-frame log-probabilities over an alphabet plus a final blank column."""

    __slots__ = ("alphabet", "frames")

    def __init__(self, alphabet: Sequence[str], frames, validate: bool = True):
        self.alphabet = list(alphabet)
        self.frames = np.asarray(frames, dtype=np.float64)
        if validate:
            if self.frames.ndim != 2 or self.frames.shape[0] < 1:
                raise ValueError("emissions must be a non-empty 2D matrix")
            if self.frames.shape[1] != len(self.alphabet) + 1:
                raise ValueError(
                    f"expected {len(self.alphabet) + 1} columns "
                    f"(alphabet + blank), got {self.frames.shape[1]}")
            if not np.isfinite(self.frames).all():
                raise ValueError("emissions contain non-finite values")
            sums = np.exp(self.frames).sum(axis=1)
            bad = np.nonzero(np.abs(sums - 1.0) > 1e-6)[0]
            if bad.size:
                raise ValueError(f"emission row {bad[0]} not normalized "
                                 f"(sum {sums[bad[0]]:.9f})")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def blank_index(self) -> int:
        return len(self.alphabet)

    def to_json(self) -> str:
        return json.dumps({"alphabet": self.alphabet,
                           "frames": [[float(v) for v in row] for row in self.frames]},
                          ensure_ascii=False)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "EmissionMatrix":
        doc = json.loads(text)
        extra = set(doc) - {"alphabet", "frames"}
        if extra:
            raise ValueError(f"unknown emission keys: {sorted(extra)}")
        return cls(doc["alphabet"], doc["frames"])

    @classmethod
    def load(cls, path: str) -> "EmissionMatrix":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())


@dataclass
class DecoderParams:
    lm_weight: float = 1.0
    unigram_prior_weight: float = 0.0
    unigram_prior: Optional[Dict[str, float]] = None
    cost_new_char: float = 0.0
    cost_blank: float = 0.0
    cost_repeat: float = 0.0
    beam_n: int = 30
    beam_m: int = 10
    prune_delta: float = 20.0
    dual_enabled: bool = True
    label_beam: Optional[float] = 6.0
    nbest: int = 5

    def __post_init__(self):
        if self.beam_n < 1:
            raise ValueError("beam_n must be >= 1")
        if self.beam_m < 0:
            raise ValueError("beam_m must be >= 0")
        if self.prune_delta <= 0:
            raise ValueError("prune_delta must be positive")


class Hypothesis:
    """One beam entry. best_cost == base_cost - lookahead bonus."""

    __slots__ = ("transcript", "last_label", "base_cost", "bonus", "lm_state", "_cache")

    def __init__(self, transcript: str, last_label: int, base_cost: float,
                 bonus: float, lm_state, cache: dict):
        self.transcript = transcript
        self.last_label = last_label
        self.base_cost = base_cost
        self.bonus = bonus
        self.lm_state = lm_state
        self._cache = cache

    @property
    def best_cost(self) -> float:
        return self.base_cost - self.bonus

    def __repr__(self):
        return (f"Hypothesis({self.transcript!r}, base={self.base_cost:.4f}, "
                f"best={self.best_cost:.4f})")


@dataclass
class DecodeResult:
    text: str = ""
    cost: float = 0.0
    nbest: List[Tuple[str, float]] = field(default_factory=list)
    error: Optional[str] = None


def _base_key(h: Hypothesis):
    return (h.base_cost, len(h.transcript), h.transcript)


def _best_key(h: Hypothesis):
    return (h.best_cost, len(h.transcript), h.transcript)


def retain_beam(candidates: Sequence[Hypothesis], params: DecoderParams) -> List[Hypothesis]:
    """Dual-criterion retention for one frame's merged candidates.

    S1: up to beam_n cheapest base costs within prune_delta of the best.
    S2: up to beam_m more, ranked by best cost, each admitted only if its
    best cost is no worse than the worst base cost in S1. Only hypotheses
    with an actual open-match bonus (best < base) compete for S2, so with
    no vocabulary the result is exactly single-criterion retention.
    """
    cands = sorted(candidates, key=_base_key)
    if not cands:
        return []
    limit = cands[0].base_cost + params.prune_delta
    n = min(params.beam_n, len(cands))
    while n > 0 and cands[n - 1].base_cost > limit:
        n -= 1
    s1 = cands[:n]
    if not params.dual_enabled or params.beam_m == 0 or n == len(cands):
        return s1
    worst = s1[-1].base_cost
    extras = [h for h in cands[n:]
              if h.bonus > 0.0 and h.base_cost - h.bonus <= worst]
    if not extras:
        return s1
    extras.sort(key=_best_key)
    return s1 + extras[:params.beam_m]


def decode_line(emissions: EmissionMatrix, charlm: CharLm,
                vocab: Optional[VocabModel] = None,
                params: DecoderParams = DecoderParams()) -> DecodeResult:
    """Decode one emission matrix to its best transcript."""
    alphabet = emissions.alphabet
    missing = [c for c in alphabet if c not in charlm._index]
    if missing:
        raise ValueError(f"emission characters {missing!r} not in the "
                         "language-model alphabet")
    n_chars = len(alphabet)
    neglog = -emissions.frames
    lm_weight = params.lm_weight

    if params.label_beam is not None:
        char_part = neglog[:, :n_chars]
        cutoff = char_part.min(axis=1) + params.label_beam
        cand_rows = [np.nonzero(char_part[t] <= cutoff[t])[0].tolist()
                     for t in range(neglog.shape[0])]
    else:
        all_labels = list(range(n_chars))
        cand_rows = [all_labels] * neglog.shape[0]

    prior = np.zeros(n_chars)
    if params.unigram_prior_weight and params.unigram_prior:
        for i, c in enumerate(alphabet):
            prior[i] = params.unigram_prior_weight * params.unigram_prior.get(c, 0.0)
    prior_list = prior.tolist()

    cost_blank = params.cost_blank
    cost_repeat = params.cost_repeat
    cost_new = params.cost_new_char
    use_vocab = vocab if vocab is not None and not vocab.is_empty else None

    beam: List[Hypothesis] = [Hypothesis("", BLANK, 0.0, 0.0, EMPTY_STATE, {})]
    for t in range(neglog.shape[0]):
        row = neglog[t].tolist()
        blank_cost = row[n_chars] + cost_blank
        merged: Dict[Tuple[str, int], Hypothesis] = {}
        for hyp in beam:
            tr = hyp.transcript
            base = hyp.base_cost
            # blank: transcript unchanged, collapse state reset
            key = (tr, BLANK)
            cost = base + blank_cost
            cur = merged.get(key)
            if cur is None:
                merged[key] = Hypothesis(tr, BLANK, cost, hyp.bonus,
                                         hyp.lm_state, hyp._cache)
            elif cost < cur.base_cost:
                cur.base_cost = cost
            # repeat of the last label: same character continues
            last = hyp.last_label
            if last >= 0:
                key = (tr, last)
                cost = base + row[last] + cost_repeat
                cur = merged.get(key)
                if cur is None:
                    merged[key] = Hypothesis(tr, last, cost, hyp.bonus,
                                             hyp.lm_state, hyp._cache)
                elif cost < cur.base_cost:
                    cur.base_cost = cost
            # new characters
            cache = hyp._cache
            for li in cand_rows[t]:
                if li == last:
                    continue
                trans = cache.get(li)
                if trans is None:
                    trans = append_char(hyp.lm_state, alphabet[li], use_vocab,
                                        charlm, lm_weight)
                    cache[li] = trans
                cost = base + row[li] + cost_new + prior_list[li] + trans.base_delta
                key = (tr + alphabet[li], li)
                cur = merged.get(key)
                if cur is None:
                    merged[key] = Hypothesis(key[0], li, cost, trans.best_bonus,
                                             trans.new_state, {})
                elif cost < cur.base_cost:
                    cur.base_cost = cost
        beam = retain_beam(list(merged.values()), params)

    # line end is a word boundary: settle pending end-anchored credits
    final: Dict[str, Hypothesis] = {}
    for hyp in beam:
        hyp.base_cost -= finalize(hyp.lm_state)
        cur = final.get(hyp.transcript)
        if cur is None or hyp.base_cost < cur.base_cost:
            final[hyp.transcript] = hyp
    ranked = sorted(final.values(), key=_base_key)
    nbest = [(h.transcript, h.base_cost) for h in ranked[:params.nbest]]
    return DecodeResult(ranked[0].transcript, ranked[0].base_cost, nbest)


def decode_batch(lines: Sequence[EmissionMatrix], charlm: CharLm,
                 vocab: Optional[VocabModel] = None,
                 params: DecoderParams = DecoderParams(),
                 parallelism: int = 1) -> List[DecodeResult]:
    """Decode many lines; output order and content match sequential runs.

    Failures are reported in-band: a failed line yields a DecodeResult
    whose error names the line index; other lines still succeed.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def run(i_line):
        i, line = i_line
        try:
            return decode_line(line, charlm, vocab, params)
        except Exception as exc:
            return DecodeResult(error=f"line {i}: {exc}")

    todo = list(enumerate(lines))
    if parallelism == 1 or len(todo) <= 1:
        return [run(x) for x in todo]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(run, todo))
