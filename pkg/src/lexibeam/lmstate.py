"""Per-hypothesis language-model state and its character-append transition.

A state bundles the character-model context with the set of currently
viable match chains: trie nodes for literal entries (case-sensitive and
casefolded) and DFA states for the regex union. Each chain starts at one
text position; its machine state is packed as ``node_id * 2 +
started_at_boundary`` and it carries the largest entry weight it has
already credited.

All scoring is in cost units (lower is better). Appending a character
yields a base-cost delta (character-model cost minus any vocabulary
credit) and a best bonus: the largest credit still reachable from the
open chains, which the decoder uses as lookahead.

Crediting is incremental per chain: completing an entry pays the amount
by which its weight exceeds what the chain has credited so far. A chain
whose automaton loops through an accepting state (``\\$\\d+`` eating
digits) therefore pays once, not per character, and nested completions
along one chain (``with`` inside ``within`` inside ``withindex``) pay out
exactly the best completed weight. Chains that can no longer beat their
credited weight are dropped.

End-anchored completions park their increment in ``pending``; the next
character either confirms it (word boundary), or discards it. Bonuses
are stored pre-multiplied by the model's vocab_scale.

A state is a pure function of the transcript text: replaying any
transcript from :func:`initial_state` reproduces it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .charlm import CharLm
from .vocab import Trie, VocabModel, is_word_char

Chains = Tuple[Tuple[int, float], ...]  # (node*2+flag, credited) sorted


@dataclass(frozen=True)
class LmState:
    context: str
    prev_boundary: bool
    cs: Chains
    ci: Chains
    dfa: Chains
    pending: float
    accrued: float


@dataclass(frozen=True)
class LmTransition:
    new_state: LmState
    base_delta: float
    best_bonus: float


EMPTY_STATE = LmState("", True, (), (), (), 0.0, 0.0)


def initial_state(model: VocabModel | None = None,
                  charlm: CharLm | None = None) -> LmState:
    """Line start: empty context, no open chains, start is a boundary."""
    return EMPTY_STATE


def _advance(children, now_bound, now_free, end_bound, end_free,
             best_bound, best_free, chains: Chains, c: str, fresh_flag: int):
    """One character step over one machine's chain vector.

    Chains reaching the same (state, flag) merge keeping the smallest
    credited value, which is exactly the bookkeeping of running the
    chains independently. Returns (new_chains, credit_now, credit_end,
    best_residual), all weights narrowed to what each chain's start flag
    is entitled to and reduced by what the chain already credited.
    """
    moved = {}
    for packed, credited in chains:
        nxt = children[packed >> 1].get(c)
        if nxt is not None:
            key = nxt * 2 + (packed & 1)
            prev = moved.get(key)
            if prev is None or credited < prev:
                moved[key] = credited
    nxt = children[0].get(c)
    if nxt is not None:
        key = nxt * 2 + fresh_flag
        prev = moved.get(key)
        if prev is None or prev > 0.0:
            moved[key] = 0.0

    credit_now = credit_end = best_residual = 0.0
    keep = []
    for key, credited in moved.items():
        node = key >> 1
        if key & 1:
            w_now, w_end, best = now_bound[node], end_bound[node], best_bound[node]
        else:
            w_now, w_end, best = now_free[node], end_free[node], best_free[node]
        if w_now > credited:
            if w_now - credited > credit_now:
                credit_now = w_now - credited
            credited = w_now
        if w_end > credited:
            if w_end - credited > credit_end:
                credit_end = w_end - credited
            credited = w_end
        residual = best - credited
        if residual > 0.0:
            keep.append((key, credited))
            if residual > best_residual:
                best_residual = residual
    keep.sort()
    return tuple(keep), credit_now, credit_end, best_residual


def _advance_trie(trie: Trie, chains: Chains, c: str, fresh_flag: int):
    return _advance(trie.children, trie.now_bound, trie.now_free,
                    trie.end_bound, trie.end_free, trie.best_bound,
                    trie.best_free, chains, c, fresh_flag)


def _advance_dfa(model: VocabModel, chains: Chains, c: str, fresh_flag: int):
    dfa = model.dfa
    return _advance(dfa.transitions, dfa.acc_now_bound, dfa.acc_now_free,
                    dfa.acc_end_bound, dfa.acc_end_free, dfa.best_bound,
                    dfa.best_free, chains, c, fresh_flag)


def append_char(state: LmState, c: str, model: VocabModel | None,
                charlm: CharLm, lm_weight: float = 1.0) -> LmTransition:
    """Transition for appending character c to a hypothesis transcript."""
    if c not in charlm._index:
        raise ValueError(f"character {c!r} outside the model alphabet")
    boundary = not is_word_char(c)

    base_delta = 0.0
    accrued = state.accrued
    if state.pending:
        if boundary:
            base_delta -= state.pending  # confirmed end-anchored match
            accrued += state.pending
        # a non-boundary character invalidates the anchored completion
    base_delta += lm_weight * charlm.neglogp(c, state.context)
    if charlm.order > 1:
        context = (state.context + c)[-(charlm.order - 1):]
    else:
        context = ""

    if model is None or model.is_empty:
        new_state = LmState(context, boundary, (), (), (), 0.0, accrued)
        return LmTransition(new_state, base_delta, 0.0)

    fresh = 1 if state.prev_boundary else 0
    cs, now1, end1, best1 = _advance_trie(model.trie_cs, state.cs, c, fresh)

    # Case-insensitive trie walks the folded character (rarely >1 char).
    folded = c.casefold()
    if len(folded) == 1:
        ci, now2, end2, best2 = _advance_trie(model.trie_ci, state.ci, folded, fresh)
    else:
        ci = state.ci
        now2 = end2 = best2 = 0.0
        sub_fresh = fresh
        for fc in folded:
            ci, nw, en, bs = _advance_trie(model.trie_ci, ci, fc, sub_fresh)
            sub_fresh = 0 if is_word_char(fc) else 1
            now2 = max(now2, nw)
            end2 = max(end2, en)
            best2 = bs  # lookahead reflects the final sub-state vector

    dfa, now3, end3, best3 = _advance_dfa(model, state.dfa, c, fresh)

    scale = model.vocab_scale
    credit = scale * max(now1, now2, now3)
    if credit > 0.0:
        base_delta -= credit
        accrued += credit
    pending = scale * max(end1, end2, end3)
    best_bonus = scale * max(best1, best2, best3) + pending

    new_state = LmState(context, boundary, cs, ci, dfa, pending, accrued)
    return LmTransition(new_state, base_delta, best_bonus)


def finalize(state: LmState) -> float:
    """Bonus credited at end of line (line end is a word boundary)."""
    return state.pending


def state_for_transcript(transcript: str, model: VocabModel | None,
                         charlm: CharLm, lm_weight: float = 1.0) -> LmState:
    """Replay a whole transcript; used by tests and batch rescoring."""
    state = initial_state(model, charlm)
    for c in transcript:
        state = append_char(state, c, model, charlm, lm_weight).new_state
    return state
