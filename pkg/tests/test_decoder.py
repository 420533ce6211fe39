import math
import random

import numpy as np
import pytest
from helpers import enumerate_decode, greedy_argmax, simple_entries

from lexibeam.charlm import train_charlm
from lexibeam.decoder import (BLANK, DecoderParams, EmissionMatrix,
                              Hypothesis, decode_batch, decode_line,
                              retain_beam)
from lexibeam.lmstate import EMPTY_STATE
from lexibeam.vocab import VocabEntry, VocabModel, compile_vocab

CHARLM = train_charlm(["abcd abdc cabd dacb", "a b c d", "bb cc dd aa"], 3)


def em_from_probs(alphabet, rows):
    return EmissionMatrix(alphabet, np.log(np.asarray(rows, dtype=float)))


def uniform_params(**kw):
    kw.setdefault("lm_weight", 0.0)
    kw.setdefault("label_beam", None)
    return DecoderParams(**kw)


# -- emission matrix validation ----------------------------------------------

def test_emissions_validate_shape_and_normalization():
    with pytest.raises(ValueError, match="non-empty 2D"):
        EmissionMatrix(["a"], np.zeros((0, 2)))
    with pytest.raises(ValueError, match="columns"):
        em_from_probs(["a", "b"], [[0.5, 0.5]])
    with pytest.raises(ValueError, match="not normalized"):
        EmissionMatrix(["a"], np.log([[0.4, 0.4]]))
    with pytest.raises(ValueError, match="non-finite"):
        EmissionMatrix(["a"], np.array([[0.0, -np.inf]]))


def test_emissions_json_round_trip():
    em = em_from_probs(["a", "b"], [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1]])
    again = EmissionMatrix.from_json(em.to_json())
    assert again.alphabet == em.alphabet
    assert np.array_equal(again.frames, em.frames)
    with pytest.raises(ValueError, match="unknown emission keys"):
        EmissionMatrix.from_json('{"alphabet": ["a"], "frames": [[0, -30]], "x": 1}')


# -- basic decoding -----------------------------------------------------------

def test_single_frame_argmax():
    em = em_from_probs(["a", "b"], [[0.8, 0.1, 0.1]])
    res = decode_line(em, CHARLM, None, uniform_params())
    assert res.text == "a"
    assert res.cost == pytest.approx(-math.log(0.8))


def test_alphabet_must_be_known_to_charlm():
    em = em_from_probs(["z"], [[0.9, 0.1]])
    with pytest.raises(ValueError, match="not in the"):
        decode_line(em, CHARLM, None, uniform_params())


def test_collapsed_labelings_merge():
    # 2 frames over {a}: paths (a,a), (a,-), (-,a) all collapse to "a"
    em = em_from_probs(["a"], [[0.6, 0.4], [0.6, 0.4]])
    res = decode_line(em, CHARLM, None, uniform_params(nbest=10))
    texts = [t for t, _ in res.nbest]
    assert len(texts) == len(set(texts))
    assert res.text == "a"
    # best path for "a" is argmax at both frames (repeat), cost 2*-log(0.6)
    assert res.cost == pytest.approx(2 * -math.log(0.6))


def test_repeat_needs_blank_between():
    # "aa" requires a blank separator: with 2 frames it cannot appear
    em = em_from_probs(["a"], [[0.9, 0.1], [0.9, 0.1]])
    res = decode_line(em, CHARLM, None, uniform_params(nbest=10))
    assert "aa" not in [t for t, _ in res.nbest]
    # with 3 frames it can
    em3 = em_from_probs(["a"], [[0.98, 0.02], [0.02, 0.98], [0.98, 0.02]])
    res3 = decode_line(em3, CHARLM, None, uniform_params())
    assert res3.text == "aa"


def test_transition_costs_shift_preferences():
    em = em_from_probs(["a"], [[0.6, 0.4], [0.6, 0.4]])
    # repeating is costly: best path emits 'a' once then blank
    res = decode_line(em, CHARLM, None, uniform_params(cost_repeat=3.0))
    assert res.text == "a"
    assert res.cost == pytest.approx(-math.log(0.6) - math.log(0.4))
    # making new chars expensive prefers all-blank
    res2 = decode_line(em, CHARLM, None, uniform_params(cost_new_char=9.0))
    assert res2.text == ""


def test_unigram_prior_cost():
    em = em_from_probs(["a", "b"], [[0.5, 0.5, 1e-9]])
    params = uniform_params(unigram_prior_weight=1.0,
                            unigram_prior={"a": 2.0, "b": 0.5})
    res = decode_line(em, CHARLM, None, params)
    assert res.text == "b"


# -- oracle exactness ----------------------------------------------------------

def random_instance(rng, max_t=6, with_vocab=True):
    n_chars = int(rng.integers(2, 5))
    alphabet = list("abcd"[:n_chars])
    frames = int(rng.integers(1, max_t + 1))
    raw = rng.random((frames, n_chars + 1)) ** 2 + 1e-6
    rows = raw / raw.sum(axis=1, keepdims=True)
    em = EmissionMatrix(alphabet, np.log(rows))
    vocab = None
    if with_vocab and rng.random() < 0.8:
        entries = []
        for _ in range(rng.integers(1, 5)):
            word = "".join(rng.choice(alphabet)
                           for _ in range(rng.integers(1, 4)))
            entries.append(VocabEntry(
                word,
                anchor_start=bool(rng.random() < 0.3),
                anchor_end=bool(rng.random() < 0.2),
                weight=float(np.round(rng.random() * 4, 2))))
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vocab = compile_vocab(entries, vocab_scale=1.0)
    params = DecoderParams(
        lm_weight=float(np.round(rng.random(), 2)),
        cost_new_char=float(np.round(rng.random(), 2)),
        cost_blank=float(np.round(rng.random() * 0.5, 2)),
        cost_repeat=float(np.round(rng.random() * 0.5, 2)),
        beam_n=10_000, beam_m=8, prune_delta=1e9, label_beam=None)
    return em, vocab, params


@pytest.mark.parametrize("seed", [0, 1])
def test_decoder_matches_exhaustive_enumeration(seed):
    rng = np.random.default_rng(seed)
    for _ in range(12):
        em, vocab, params = random_instance(rng)
        want_cost, want_text = enumerate_decode(em, CHARLM, vocab, params)
        res = decode_line(em, CHARLM, vocab, params)
        assert res.text == want_text
        assert res.cost == pytest.approx(want_cost, abs=1e-9)


def test_narrow_beam_never_beats_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        em, vocab, params = random_instance(rng)
        want_cost, _ = enumerate_decode(em, CHARLM, vocab, params)
        narrow = DecoderParams(lm_weight=params.lm_weight,
                               cost_new_char=params.cost_new_char,
                               cost_blank=params.cost_blank,
                               cost_repeat=params.cost_repeat,
                               beam_n=2, beam_m=1, label_beam=None)
        res = decode_line(em, CHARLM, vocab, narrow)
        assert res.cost >= want_cost - 1e-9


def test_appending_frames_never_lowers_min_cost():
    rng = np.random.default_rng(3)
    em, _, params = random_instance(rng, max_t=6, with_vocab=False)
    costs = []
    for t in range(1, em.n_frames + 1):
        sub = EmissionMatrix(em.alphabet, em.frames[:t])
        costs.append(decode_line(sub, CHARLM, None, params).cost)
    assert all(b >= a - 1e-12 for a, b in zip(costs, costs[1:]))


# -- retention ------------------------------------------------------------------

def hyp(text, base, best):
    return Hypothesis(text, BLANK, base, base - best, EMPTY_STATE, {})


def test_retain_beam_admits_hopeful_candidate():
    cands = [hyp("a", 1.0, 1.0), hyp("b", 2.0, 2.0), hyp("c", 5.0, 1.5)]
    kept = retain_beam(cands, DecoderParams(beam_n=2, beam_m=1))
    assert [h.transcript for h in kept] == ["a", "b", "c"]


def test_retain_beam_rejects_above_worst_base():
    cands = [hyp("a", 1.0, 1.0), hyp("b", 2.0, 2.0), hyp("c", 5.0, 3.0)]
    kept = retain_beam(cands, DecoderParams(beam_n=2, beam_m=1))
    assert [h.transcript for h in kept] == ["a", "b"]


def test_retain_beam_single_criterion_when_m_zero():
    cands = [hyp(t, c, c - b) for t, c, b in
             [("a", 1.0, 0.0), ("b", 2.0, 1.0), ("c", 3.0, 2.9)]]
    for params in (DecoderParams(beam_n=2, beam_m=0),
                   DecoderParams(beam_n=2, beam_m=5, dual_enabled=False)):
        kept = retain_beam(cands, params)
        assert [h.transcript for h in kept] == ["a", "b"]


def test_retain_beam_prune_delta():
    cands = [hyp("a", 1.0, 1.0), hyp("b", 30.0, 30.0)]
    kept = retain_beam(cands, DecoderParams(beam_n=5, beam_m=0, prune_delta=10.0))
    assert [h.transcript for h in kept] == ["a"]


def test_retain_beam_properties_random():
    rng = random.Random(4)
    for _ in range(200):
        cands = []
        for i in range(rng.randrange(1, 30)):
            base = round(rng.uniform(0, 10), 3)
            bonus = round(rng.uniform(0, 4), 3) if rng.random() < 0.6 else 0.0
            cands.append(hyp(f"t{i}", base, base - bonus))
        n = rng.randrange(1, 8)
        m = rng.randrange(0, 5)
        params = DecoderParams(beam_n=n, beam_m=m, prune_delta=8.0)
        kept = retain_beam(cands, params)
        assert len(kept) <= n + m
        s1 = sorted(cands, key=lambda h: (h.base_cost, len(h.transcript), h.transcript))
        s1 = [h for h in s1[:n] if h.base_cost <= s1[0].base_cost + 8.0]
        worst = max(h.base_cost for h in kept[:len(s1)])
        for extra in kept[len(s1):]:
            assert extra.best_cost <= worst + 1e-12


def test_decoder_params_validation():
    with pytest.raises(ValueError):
        DecoderParams(beam_n=0)
    with pytest.raises(ValueError):
        DecoderParams(beam_m=-1)
    with pytest.raises(ValueError):
        DecoderParams(prune_delta=0)


# -- baseline equivalence --------------------------------------------------------

def test_empty_vocab_is_bit_identical_to_no_vocab():
    rng = np.random.default_rng(11)
    empty = compile_vocab([], 1.0)
    for _ in range(10):
        em, _, _ = random_instance(rng, with_vocab=False)
        params = DecoderParams(lm_weight=0.4, beam_n=6, beam_m=3, label_beam=None)
        single = DecoderParams(lm_weight=0.4, beam_n=6, beam_m=0, label_beam=None)
        disabled = DecoderParams(lm_weight=0.4, beam_n=6, beam_m=3,
                                 dual_enabled=False, label_beam=None)
        results = [decode_line(em, CHARLM, v, p)
                   for v, p in [(None, params), (empty, params), (None, single),
                                (VocabModel.empty(), disabled)]]
        assert len({r.text for r in results}) == 1
        assert len({r.cost for r in results}) == 1  # bit-identical


# -- vocabulary effect -------------------------------------------------------------

def test_vocabulary_bonus_flips_close_decision():
    # emissions slightly favor "cb"; vocabulary word "ca" wins with a bonus
    em = em_from_probs(["a", "b", "c"],
                       [[0.01, 0.01, 0.97, 0.01],
                        [0.45, 0.54, 0.005, 0.005]])
    params = uniform_params()
    assert decode_line(em, CHARLM, None, params).text == "cb"
    vocab = compile_vocab(simple_entries(["ca"], weight=2.0), 1.0)
    assert decode_line(em, CHARLM, vocab, params).text == "ca"


# -- batch decoding ----------------------------------------------------------------

def test_decode_batch_matches_sequential_and_parallel():
    rng = np.random.default_rng(2)
    lines = []
    for _ in range(20):
        em, _, _ = random_instance(rng, with_vocab=False)
        lines.append(em)
    params = DecoderParams(lm_weight=0.3, beam_n=5, beam_m=2, label_beam=None)
    seq = decode_batch(lines, CHARLM, None, params, parallelism=1)
    par = decode_batch(lines, CHARLM, None, params, parallelism=8)
    assert [(r.text, r.cost) for r in seq] == [(r.text, r.cost) for r in par]
    one = [decode_line(em, CHARLM, None, params) for em in lines]
    assert [(r.text, r.cost) for r in seq] == [(r.text, r.cost) for r in one]


def test_decode_batch_empty():
    assert decode_batch([], CHARLM) == []


def test_decode_batch_reports_failed_line_index():
    good = em_from_probs(["a"], [[0.9, 0.1]])
    bad = em_from_probs(["z"], [[0.9, 0.1]])  # 'z' unknown to the charlm
    results = decode_batch([good, bad, good], CHARLM, parallelism=2)
    assert results[0].error is None and results[2].error is None
    assert results[0].text == "a"
    assert results[1].error is not None and "line 1" in results[1].error


def test_greedy_oracle_on_clean_emissions():
    em = em_from_probs(["a", "b"],
                       [[0.98, 0.01, 0.01], [0.01, 0.98, 0.01]])
    assert greedy_argmax(em) == "ab"
    assert decode_line(em, CHARLM, None, uniform_params()).text == "ab"
