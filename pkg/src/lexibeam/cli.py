"""Command-line surface: train-charlm, build-vocab, synth, decode, eval,
bench-init, tune.

Global flags --config/--seed/--jobs come before the subcommand. A config
file is a JSON object whose keys mirror the subcommand's flag names
(dashes as underscores); explicit flags win over config values. Errors
print one JSON object to stderr with a "kind" field and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from typing import Dict, List, Optional

from . import evaluate, synth, vocab as vocab_mod
from .charlm import CharLm, train_charlm
from .decoder import DecoderParams, decode_batch
from .vocab import WeightParams, VocabModel, compile_vocab

_UNSET = object()


def _read_lines(path: str) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _load_vocab_model(path: Optional[str]) -> Optional[VocabModel]:
    if path is None:
        return None
    entries, scale = vocab_mod.load_vocab_file(path)
    return compile_vocab(entries, scale)


def _decoder_params(args) -> DecoderParams:
    return DecoderParams(
        lm_weight=args.lm_weight, beam_n=args.beam_n, beam_m=args.beam_m,
        prune_delta=args.prune_delta, dual_enabled=not args.no_dual,
        cost_new_char=args.cost_new_char, cost_blank=args.cost_blank,
        cost_repeat=args.cost_repeat, nbest=args.nbest)


def _add_decoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lm-weight", type=float, default=1.0)
    p.add_argument("--beam-n", type=int, default=30)
    p.add_argument("--beam-m", type=int, default=10)
    p.add_argument("--prune-delta", type=float, default=20.0)
    p.add_argument("--no-dual", action="store_true",
                   help="disable the best-score retention pass")
    p.add_argument("--cost-new-char", type=float, default=0.0)
    p.add_argument("--cost-blank", type=float, default=0.0)
    p.add_argument("--cost-repeat", type=float, default=0.0)
    p.add_argument("--nbest", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexibeam",
        description="CTC decoding with runtime custom vocabularies")
    parser.add_argument("--config", help="JSON file of flag defaults")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker count for batch decoding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-charlm", help="train the character model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--alphabet", default=None,
                   help="characters to model (default: every corpus character)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-vocab", help="rank corpus words into a vocabulary file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--charlm", required=True)
    p.add_argument("--size", type=int, default=200)
    p.add_argument("--min-weight", type=float, default=0.0)
    p.add_argument("--c0", type=float, default=2.0)
    p.add_argument("--c1", type=float, default=0.5)
    p.add_argument("--c2", type=float, default=0.5)
    p.add_argument("--ratio-cap", type=float, default=1e4)
    p.add_argument("--vocab-scale", type=float, default=0.0015)
    p.add_argument("--case-insensitive", action="store_true")
    p.add_argument("--no-anchor-start", action="store_true")
    p.add_argument("--anchor-end", action="store_true")
    p.add_argument("--min-token-len", type=int, default=2)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate synthetic emissions for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--preset", default="light", choices=sorted(synth.PRESETS))
    p.add_argument("--burst-words", default=None,
                   help="file of words to target with bursts")
    p.add_argument("--frames-per-char", default=None, metavar="LO:HI")
    p.add_argument("--blank-prob", type=float, default=None)
    p.add_argument("--confusion-prob", type=float, default=None)
    p.add_argument("--burst-prob", type=float, default=None)

    p = sub.add_parser("decode", help="decode an emission manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--charlm", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--out", required=True)
    _add_decoder_flags(p)

    p = sub.add_parser("eval", help="score decode results against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--custom", required=True, help="results JSONL to score")
    p.add_argument("--base", default=None, help="baseline results JSONL")
    p.add_argument("--vocab", default=None)
    p.add_argument("--jaccard", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench-init", help="time vocabulary compilation")
    p.add_argument("--vocab", required=True)
    p.add_argument("--repetitions", type=int, default=20)

    p = sub.add_parser("tune", help="random-search decoder/vocab parameters")
    p.add_argument("--manifest", required=True)
    p.add_argument("--charlm", required=True)
    p.add_argument("--corpus", required=True,
                   help="domain text the vocabulary is built from")
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--size", type=int, default=200)
    p.add_argument("--space", default=None,
                   help="JSON file: {name: [lo, hi] | [choices...]}")
    p.add_argument("--out", required=True)
    _add_decoder_flags(p)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    """Parse argv twice so config-file values fill in unset flags."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as f:
        conf = json.load(f)
    if not isinstance(conf, dict):
        raise ValueError("config file must hold a JSON object")
    known = vars(args)
    unknown = [k for k in conf if k not in known]
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    # re-parse with config values as defaults; explicit flags still win
    defaults = {k: v for k, v in conf.items()}
    parser.set_defaults(**defaults)
    return parser.parse_args(argv)


# -- commands ---------------------------------------------------------------

def cmd_train_charlm(args) -> int:
    corpus = _read_lines(args.corpus)
    model = train_charlm(corpus, args.order,
                         set(args.alphabet) if args.alphabet else None)
    model.save(args.out)
    print(f"alphabet size {len(model.alphabet)}, "
          f"contexts {len(model.contexts)}, order {model.order}")
    return 0


def cmd_build_vocab(args) -> int:
    corpus = _read_lines(args.corpus)
    charlm = CharLm.load(args.charlm)
    params = WeightParams(c0=args.c0, c1=args.c1, c2=args.c2,
                          ratio_cap=args.ratio_cap)
    entries = vocab_mod.build_vocab_from_corpus(
        corpus, charlm, params, max_size=args.size, min_weight=args.min_weight,
        case_sensitive=not args.case_insensitive,
        anchor_start=not args.no_anchor_start, anchor_end=args.anchor_end,
        min_token_len=args.min_token_len)
    compile_vocab(entries, args.vocab_scale)  # validates before writing
    vocab_mod.save_vocab_file(args.out, entries, args.vocab_scale)
    print(f"wrote {len(entries)} entries to {args.out}")
    return 0


def cmd_synth(args) -> int:
    corpus = _read_lines(args.corpus)
    profile = synth.preset(args.preset, seed=args.seed)
    overrides = {}
    if args.frames_per_char:
        lo, hi = args.frames_per_char.split(":")
        overrides["frames_per_char"] = (int(lo), int(hi))
    for name in ("blank_prob", "confusion_prob", "burst_prob"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    if overrides:
        profile = synth.NoiseProfile(
            frames_per_char=overrides.get("frames_per_char", profile.frames_per_char),
            blank_prob=overrides.get("blank_prob", profile.blank_prob),
            confusion_prob=overrides.get("confusion_prob", profile.confusion_prob),
            confusion_table=profile.confusion_table,
            burst_prob=overrides.get("burst_prob", profile.burst_prob),
            seed=args.seed)
    burst_words = _read_lines(args.burst_words) if args.burst_words else None
    manifest = synth.make_suite(corpus, burst_words, profile, args.out_dir)
    print(f"wrote {len(corpus)} emission files and {manifest}")
    return 0


def cmd_decode(args) -> int:
    suite = synth.load_manifest(args.manifest)
    charlm = CharLm.load(args.charlm)
    model = _load_vocab_model(args.vocab)
    params = _decoder_params(args)
    t0 = time.perf_counter()
    results = decode_batch([em for em, _ in suite], charlm, model, params,
                           parallelism=args.jobs)
    elapsed = time.perf_counter() - t0
    failures = 0
    with open(args.out, "w", encoding="utf-8") as f:
        for r in results:
            if r.error is not None:
                failures += 1
                f.write(json.dumps({"error": r.error}, ensure_ascii=False) + "\n")
            else:
                f.write(json.dumps(
                    {"text": r.text, "cost": r.cost,
                     "nbest": [{"text": t, "cost": c} for t, c in r.nbest]},
                    ensure_ascii=False) + "\n")
    per_line = 1000.0 * elapsed / max(1, len(results))
    print(f"decoded {len(results)} lines in {elapsed:.2f} s "
          f"({per_line:.1f} ms/line), {failures} failed")
    if failures:
        raise RuntimeError(f"{failures} lines failed to decode")
    return 0


def _read_results(path: str) -> List[str]:
    texts = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "error" in doc:
                raise ValueError(f"results file {path} contains a failed line: "
                                 f"{doc['error']}")
            texts.append(doc["text"])
    return texts


def cmd_eval(args) -> int:
    suite = synth.load_manifest(args.manifest)
    refs = [truth for _, truth in suite]
    custom = _read_results(args.custom)
    base = _read_results(args.base) if args.base else None
    model = _load_vocab_model(args.vocab)
    report = evaluate.evaluate_hypotheses(refs, custom, base, model,
                                          with_jaccard=args.jaccard)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, ensure_ascii=False, indent=1)
        f.write("\n")
    wer = f"{report.wer_all:.2f}" if report.wer_all is not None else "n/a"
    print(f"WER {wer} over {int(report.counts['n_ref'])} words; "
          f"report written to {args.out}")
    return 0


def cmd_bench_init(args) -> int:
    with open(args.vocab, encoding="utf-8") as f:
        text = f.read()
    reps = max(1, args.repetitions)
    times_ms = []
    for _ in range(reps):
        t0 = time.perf_counter()
        doc = json.loads(text)
        entries = [vocab_mod.entry_from_dict(d) for d in doc.get("entries", [])]
        compile_vocab(entries, float(doc.get("vocab_scale", 1.0)))
        times_ms.append(1000.0 * (time.perf_counter() - t0))
    times_ms.sort()
    median = statistics.median(times_ms)
    p95 = times_ms[min(len(times_ms) - 1, int(0.95 * len(times_ms)))]
    print(json.dumps({"entries": len(entries), "repetitions": reps,
                      "median_ms": round(median, 3), "p95_ms": round(p95, 3)}))
    return 0


def cmd_tune(args) -> int:
    suite = synth.load_manifest(args.manifest)
    charlm = CharLm.load(args.charlm)
    corpus = _read_lines(args.corpus)
    refs = [truth for _, truth in suite]
    emissions = [em for em, _ in suite]
    base_params = _decoder_params(args)

    if args.space:
        with open(args.space, encoding="utf-8") as f:
            space = json.load(f)
    else:
        space = {"c0": [0.0, 4.0], "c1": [0.0, 2.0], "c2": [0.0, 2.0],
                 "vocab_scale": [0.0001, 0.01]}

    def objective(point: Dict[str, object]) -> float:
        wp = WeightParams(c0=float(point.get("c0", 2.0)),
                          c1=float(point.get("c1", 0.5)),
                          c2=float(point.get("c2", 0.5)),
                          ratio_cap=float(point.get("ratio_cap", 1e4)))
        entries = vocab_mod.build_vocab_from_corpus(corpus, charlm, wp,
                                                    max_size=args.size)
        model = compile_vocab(entries, float(point.get("vocab_scale", 0.0015)))
        results = decode_batch(emissions, charlm, model, base_params,
                               parallelism=args.jobs)
        return evaluate.word_error_rate([r.text for r in results], refs)

    result = evaluate.tune_params(objective, space, args.budget, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump({"best_params": result.best_params,
                   "best_wer": result.best_score,
                   "trials": len(result.trials)}, f, indent=1)
        f.write("\n")
    print(f"best WER {result.best_score:.3f} at {result.best_params}")
    return 0


_COMMANDS = {
    "train-charlm": cmd_train_charlm,
    "build-vocab": cmd_build_vocab,
    "synth": cmd_synth,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "bench-init": cmd_bench_init,
    "tune": cmd_tune,
}

_ERROR_KINDS = [
    (FileNotFoundError, "missing-file"),
    (json.JSONDecodeError, "bad-json"),
    (ValueError, "invalid-value"),
    (OSError, "io"),
    (RuntimeError, "runtime"),
]


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
        return _COMMANDS[args.command](args)
    except SystemExit:
        raise
    except Exception as exc:
        kind = "error"
        for klass, name in _ERROR_KINDS:
            if isinstance(exc, klass):
                kind = name
                break
        print(json.dumps({"kind": kind, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
