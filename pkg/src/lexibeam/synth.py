"""Synthetic emission matrices standing in for an optical model.

Text is rendered character by character into per-frame label
distributions: each character yields one to a few frames placing most of
the probability mass on the true label and diverting `confusion_prob`
mass to visually confusable labels (shipped table, user-replaceable)
plus a uniform remainder. Repeated characters are separated by a
blank-dominated frame as CTC requires, and extra blank frames are
interleaved at random.

Words may additionally receive a concentrated mid-word "burst": one or
two interior characters whose frames are dominated by a single
confusable. Bursts are what make a word hard enough that recovering it
requires either language-model support or beam lookahead; the targeted
variant (burst only words from a given list) builds adversarial suites.

Everything is a pure function of (inputs, seed): the same call produces
byte-identical matrices.
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .decoder import EmissionMatrix
from .vocab import is_word_char

FLOOR = 1e-8           # per-column mass floor keeping log-probs finite
BLANK_MASS = 0.98      # dominant mass of a separator frame
TABLE_SHARE = 0.85     # diverted mass going to table confusables vs uniform
BURST_SHARE = 0.85     # diverted mass going to the chosen burst confusable
BURST_STRENGTH = (0.65, 0.95)  # diverted-mass range inside a burst


@lru_cache(maxsize=1)
def default_confusion_table() -> Dict[str, Tuple[Tuple[str, float], ...]]:
    text = resources.files("lexibeam").joinpath("data/confusions.json").read_text()
    raw = json.loads(text)
    return {c: tuple((cc, float(w)) for cc, w in pairs) for c, pairs in raw.items()}


@dataclass(frozen=True)
class NoiseProfile:
    frames_per_char: Tuple[int, int] = (1, 2)
    blank_prob: float = 0.12
    confusion_prob: float = 0.05
    confusion_table: Optional[Mapping[str, Sequence[Tuple[str, float]]]] = None
    burst_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.frames_per_char
        if lo < 1 or hi < lo:
            raise ValueError("frames_per_char range must satisfy 1 <= lo <= hi")
        for name in ("blank_prob", "confusion_prob", "burst_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    def table(self) -> Mapping[str, Sequence[Tuple[str, float]]]:
        return self.confusion_table if self.confusion_table is not None \
            else default_confusion_table()


# Presets roughly matching three degradation tiers on the shipped corpus:
# near-perfect, a couple percent baseline WER, and mid-single-digits.
PRESETS: Dict[str, NoiseProfile] = {
    "clean": NoiseProfile(frames_per_char=(2, 2), blank_prob=0.10,
                          confusion_prob=0.0, burst_prob=0.0),
    "light": NoiseProfile(frames_per_char=(2, 2), blank_prob=0.12,
                          confusion_prob=0.06, burst_prob=0.03),
    "heavy": NoiseProfile(frames_per_char=(2, 2), blank_prob=0.12,
                          confusion_prob=0.14, burst_prob=0.14),
}


def preset(name: str, seed: int = 0) -> NoiseProfile:
    if name not in PRESETS:
        raise ValueError(f"unknown noise preset {name!r} "
                         f"(have {sorted(PRESETS)})")
    p = PRESETS[name]
    return NoiseProfile(p.frames_per_char, p.blank_prob, p.confusion_prob,
                        p.confusion_table, p.burst_prob, seed)


def _rng_for(profile: NoiseProfile, text: str) -> np.random.Generator:
    return np.random.default_rng([profile.seed, zlib.crc32(text.encode("utf-8"))])


def _word_spans(text: str) -> List[Tuple[int, int]]:
    spans = []
    start = None
    for i, c in enumerate(text):
        if is_word_char(c):
            if start is None:
                start = i
        elif start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(text)))
    return spans


def synth_emissions(text: str, alphabet: Sequence[str], profile: NoiseProfile,
                    burst_words: Optional[Iterable[str]] = None) -> EmissionMatrix:
    """Emission matrix for one text line.

    burst_words limits bursts to the listed word tokens; None makes every
    word eligible (subject to burst_prob).
    """
    if not text:
        raise ValueError("empty text")
    index = {c: i for i, c in enumerate(alphabet)}
    for c in text:
        if c not in index:
            raise ValueError(f"character {c!r} not in alphabet")
    n_cols = len(alphabet) + 1
    blank_col = len(alphabet)
    rng = _rng_for(profile, text)
    table = profile.table()
    targets = set(burst_words) if burst_words is not None else None

    # Pass 1: decide bursts per word (draws happen in scan order).
    # Words of length >= 3 take the burst strictly inside; shorter tokens
    # have no interior, so any of their characters may be hit.
    burst: Dict[int, Tuple[float, float]] = {}  # char pos -> (strength, pick)
    if profile.burst_prob > 0:
        for start, end in _word_spans(text):
            if targets is not None and text[start:end] not in targets:
                continue
            if rng.random() >= profile.burst_prob:
                continue
            length = end - start
            width = 1 if length < 6 else int(rng.integers(1, 3))
            if length >= 3:
                pos = int(rng.integers(start + 1, end - width))
            else:
                pos = int(rng.integers(start, end - width + 1))
            lo, hi = BURST_STRENGTH
            for k in range(width):
                burst[pos + k] = (lo + (hi - lo) * rng.random(), rng.random())

    def char_row(c: str, divert: float, pick: Optional[float]) -> np.ndarray:
        w = np.full(n_cols, FLOOR)
        ci = index[c]
        pairs = [(cc, wt) for cc, wt in table.get(c, ()) if cc in index and wt > 0]
        w[ci] += 1.0 - divert
        rest = divert
        if pairs and pick is not None:
            # burst: one confusable dominates the diverted mass
            total = sum(wt for _, wt in pairs)
            acc = 0.0
            chosen = pairs[-1][0]
            for cc, wt in pairs:
                acc += wt / total
                if pick < acc:
                    chosen = cc
                    break
            w[index[chosen]] += divert * BURST_SHARE
            rest = divert * (1.0 - BURST_SHARE)
            pairs = [(cc, wt) for cc, wt in pairs if cc != chosen]
        if pairs:
            to_table = rest * TABLE_SHARE
            total = sum(wt for _, wt in pairs)
            for cc, wt in pairs:
                w[index[cc]] += to_table * wt / total
            rest *= 1.0 - TABLE_SHARE
        if rest > 0:
            others = n_cols - 2  # everything except the true char and blank
            if others > 0:
                spread = rest / others
                w += spread
                w[ci] -= spread
                w[blank_col] -= spread
        return w / w.sum()

    blank_row = np.full(n_cols, FLOOR)
    blank_row[blank_col] += BLANK_MASS
    blank_row += (1.0 - blank_row.sum()) / n_cols
    blank_row = blank_row / blank_row.sum()

    plain_rows: Dict[str, np.ndarray] = {}
    rows: List[np.ndarray] = []
    lo, hi = profile.frames_per_char
    for i, c in enumerate(text):
        if i in burst:
            strength, pick = burst[i]
            row = char_row(c, strength, pick)
        else:
            row = plain_rows.get(c)
            if row is None:
                row = char_row(c, profile.confusion_prob, None)
                plain_rows[c] = row
        n_frames = int(rng.integers(lo, hi + 1))
        rows.extend([row] * n_frames)
        if i + 1 < len(text) and text[i + 1] == c:
            rows.append(blank_row)
        elif rng.random() < profile.blank_prob:
            rows.append(blank_row)
    return EmissionMatrix(list(alphabet), np.log(np.stack(rows)))


def suite_alphabet(lines: Sequence[str],
                   table: Optional[Mapping[str, Sequence[Tuple[str, float]]]] = None) -> List[str]:
    """Characters of the corpus plus their confusables, sorted."""
    if table is None:
        table = default_confusion_table()
    chars = set("".join(lines))
    for c in list(chars):
        for cc, _ in table.get(c, ()):
            chars.add(cc)
    return sorted(chars)


def synth_suite(lines: Sequence[str], in_vocab_words: Optional[Sequence[str]],
                profile: NoiseProfile,
                alphabet: Optional[Sequence[str]] = None
                ) -> List[Tuple[EmissionMatrix, str]]:
    """In-memory suite: one (emissions, truth) pair per corpus line."""
    if alphabet is None:
        alphabet = suite_alphabet(lines, profile.confusion_table)
    burst_words = list(in_vocab_words) if in_vocab_words else None
    return [(synth_emissions(line, alphabet, profile, burst_words), line)
            for line in lines]


def make_suite(lines: Sequence[str], in_vocab_words: Optional[Sequence[str]],
               profile: NoiseProfile, out_dir: str,
               alphabet: Optional[Sequence[str]] = None) -> str:
    """Write per-line emission files plus a manifest; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    pairs = synth_suite(lines, in_vocab_words, profile, alphabet)
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest_path, "w", encoding="utf-8") as mf:
        for i, (em, truth) in enumerate(pairs):
            name = f"line_{i:05d}.json"
            em.save(os.path.join(out_dir, name))
            mf.write(json.dumps({"emissions": name, "truth": truth},
                                ensure_ascii=False) + "\n")
    return manifest_path


def load_manifest(manifest_path: str) -> List[Tuple[EmissionMatrix, str]]:
    """Read a manifest and its emission files (paths relative to it)."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    out = []
    with open(manifest_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            out.append((EmissionMatrix.load(os.path.join(base, doc["emissions"])),
                        doc["truth"]))
    return out
