"""Custom-vocabulary decoding for CTC sequence models.

The toolkit attaches runtime-configurable vocabularies (weighted literal
words and regular expressions) to a CTC beam-search decoder. Open partial
matches contribute a lookahead bonus, and the beam keeps extra hypotheses
whose lookahead is promising even when their current score is not, so
vocabulary words survive locally bad frames.

Typical flow:

    charlm = train_charlm(open("english.txt").read().splitlines(), order=4)
    entries = build_vocab_from_corpus(domain_lines, charlm, max_size=400)
    vocab = compile_vocab(entries, vocab_scale=0.0015)
    result = decode_line(emissions, charlm, vocab, DecoderParams())
"""

from .charlm import CharLm, next_char_logprobs, train_charlm, word_lm_score
from .decoder import (BLANK, DecodeResult, DecoderParams, EmissionMatrix,
                      Hypothesis, decode_batch, decode_line, retain_beam)
from .evaluate import (EvalReport, JackknifeConfig, TuneResult, classify_iv,
                       coverage, evaluate_hypotheses, jaccard_index,
                       jackknife_eval, jackknife_sweep, recognized_set,
                       tune_params, win_ratio, word_error_rate)
from .lmstate import (LmState, LmTransition, append_char, finalize,
                      initial_state, state_for_transcript)
from .regexlang import RegexSyntaxError, regex_parse, to_pattern
from .synth import (NoiseProfile, load_manifest, make_suite, preset,
                    suite_alphabet, synth_emissions, synth_suite)
from .vocab import (Trie, VocabEntry, VocabModel, WeightParams,
                    build_vocab_from_corpus, compile_vocab, compute_weight,
                    load_vocab_file, save_vocab_file, tokenize)

__version__ = "0.1.0"

__all__ = [
    "BLANK", "CharLm", "DecodeResult", "DecoderParams", "EmissionMatrix",
    "EvalReport", "Hypothesis", "JackknifeConfig", "LmState", "LmTransition",
    "NoiseProfile", "RegexSyntaxError", "Trie", "TuneResult", "VocabEntry",
    "VocabModel", "WeightParams", "append_char", "build_vocab_from_corpus",
    "classify_iv", "compile_vocab", "compute_weight", "coverage",
    "decode_batch", "decode_line", "evaluate_hypotheses", "finalize",
    "initial_state", "jaccard_index", "jackknife_eval", "jackknife_sweep",
    "load_manifest", "load_vocab_file", "make_suite", "next_char_logprobs",
    "preset", "recognized_set", "regex_parse", "retain_beam",
    "save_vocab_file", "state_for_transcript", "suite_alphabet",
    "synth_emissions", "synth_suite", "to_pattern", "tokenize",
    "train_charlm", "tune_params", "win_ratio", "word_error_rate",
    "word_lm_score",
]
