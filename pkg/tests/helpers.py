"""Independent reference implementations used as test oracles.

Nothing here touches the incremental decoder state machinery: literal
matching is plain string comparison, regex matching goes through the
backtracking tree interpreter, and decoding enumerates whole label
sequences. These are deliberately slow and simple.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from lexibeam import lmstate
from lexibeam.charlm import CharLm
from lexibeam.decoder import DecoderParams, EmissionMatrix
from lexibeam.regexlang import match_ends
from lexibeam.vocab import VocabEntry, VocabModel, fold, is_word_char


def boundary_flag(text: str, j: int) -> bool:
    return j == 0 or not is_word_char(text[j - 1])


def chain_weights(text: str, j: int, entries, regex_trees, machine: str):
    """Eligible (imm, end) weight maps per end position for one chain.

    A chain is one (machine, start position) pair: the case-sensitive
    trie, the folded trie and the regex union automaton each track their
    own chain from a given start, mirroring the decoder state vectors.
    Start-anchored entries require the chain to begin at a word boundary.
    """
    flag = boundary_flag(text, j)
    L = len(text)
    imm: Dict[int, float] = {}
    end: Dict[int, float] = {}
    if machine in ("cs", "ci"):
        want_cs = machine == "cs"
        for e in entries:
            if e.kind != "literal" or e.case_sensitive != want_cs:
                continue
            if e.anchor_start and not flag:
                continue
            pat = e.pattern if want_cs else fold(e.pattern)
            hay = text if want_cs else fold(text)
            if hay[j:j + len(pat)] != pat or not pat:
                continue
            pos = j + len(pat) - 1
            if pos >= L:
                continue
            target = end if e.anchor_end else imm
            target[pos] = max(target.get(pos, 0.0), e.weight)
    else:
        for e, tree in regex_trees:
            if e.anchor_start and not flag:
                continue
            for stop in match_ends(tree, text, j):
                if stop <= j:
                    continue
                pos = stop - 1
                target = end if e.anchor_end else imm
                target[pos] = max(target.get(pos, 0.0), e.weight)
    return imm, end


def naive_credits(text: str, entries, regex_trees) -> Tuple[List[float], List[float]]:
    """Per-position (immediate, end-anchored) credit maxima, unscaled.

    Every (machine, start position) pair is an independent chain with
    running-max crediting; a position's credit is the largest increment
    any chain pays there.
    """
    L = len(text)
    imm_credit = [0.0] * L
    end_credit = [0.0] * L
    for machine in ("cs", "ci", "regex"):
        for j in range(L):
            imm, end = chain_weights(text, j, entries, regex_trees, machine)
            if not imm and not end:
                continue
            credited = 0.0
            for pos in range(j, L):
                w_now = imm.get(pos, 0.0)
                if w_now > credited:
                    imm_credit[pos] = max(imm_credit[pos], w_now - credited)
                    credited = w_now
                w_end = end.get(pos, 0.0)
                if w_end > credited:
                    end_credit[pos] = max(end_credit[pos], w_end - credited)
                    credited = w_end
    return imm_credit, end_credit


def naive_accrued(text: str, model: VocabModel) -> Tuple[float, float]:
    """(accrued, pending) a transcript should carry after full replay."""
    for c in text:
        assert len(c.casefold()) == 1, "oracle assumes 1:1 casefold"
    imm_credit, end_credit = naive_credits(text, model.entries, model.regex_trees)
    scale = model.vocab_scale
    accrued = scale * sum(imm_credit)
    pending = 0.0
    for pos, w in enumerate(end_credit):
        if w <= 0.0:
            continue
        if pos == len(text) - 1:
            pending = scale * w
        elif not is_word_char(text[pos + 1]):
            accrued += scale * w
    return accrued, pending


def enumerate_decode(em: EmissionMatrix, charlm: CharLm,
                     vocab: Optional[VocabModel], params: DecoderParams):
    """Exhaustive minimum over all label sequences, same cost function.

    Returns (cost, transcript) with the decoder's tie-break order
    (cost, transcript length, transcript text).
    """
    n_chars = len(em.alphabet)
    neglog = (-em.frames).tolist()
    frames = len(neglog)
    prior_map = params.unigram_prior or {}
    prior = [params.unigram_prior_weight * prior_map.get(c, 0.0)
             for c in em.alphabet]
    use_vocab = vocab if vocab is not None and not vocab.is_empty else None
    cache: Dict[Tuple[str, int], lmstate.LmTransition] = {}
    best: List = [None]

    def walk(t: int, last: int, transcript: str, cost: float, state) -> None:
        if t == frames:
            final = cost - lmstate.finalize(state)
            key = (final, len(transcript), transcript)
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        row = neglog[t]
        walk(t + 1, -1, transcript, cost + row[n_chars] + params.cost_blank, state)
        for li in range(n_chars):
            if li == last:
                walk(t + 1, li, transcript, cost + row[li] + params.cost_repeat, state)
            else:
                key = (transcript, li)
                tr = cache.get(key)
                if tr is None:
                    tr = lmstate.append_char(state, em.alphabet[li], use_vocab,
                                             charlm, params.lm_weight)
                    cache[key] = tr
                walk(t + 1, li, transcript + em.alphabet[li],
                     cost + row[li] + params.cost_new_char + prior[li] + tr.base_delta,
                     tr.new_state)

    walk(0, -1, "", 0.0, lmstate.initial_state())
    cost, _, text = best[0]
    return cost, text


def greedy_argmax(em: EmissionMatrix) -> str:
    """Frame-wise argmax collapsed under the CTC rule."""
    blank = em.blank_index
    out = []
    last = blank
    for row in em.frames:
        li = int(row.argmax())
        if li != blank and li != last:
            out.append(em.alphabet[li])
        last = li
    return "".join(out)


def edit_distance(a, b) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def simple_entries(words, weight=1.0, **flags) -> List[VocabEntry]:
    return [VocabEntry(w, weight=weight, **flags) for w in words]
