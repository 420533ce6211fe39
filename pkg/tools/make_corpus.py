#!/usr/bin/env python3
"""Regenerate the shipped sample corpora under data/.

Everything is drawn from a fixed-seed generator, so reruns are
byte-identical. Produces:

  data/english.txt      general text for training the character model
  data/docs/doc_NN.txt  19 topic documents mixing general and domain terms
  data/mednames.txt     invented medication names (adversarial suite)
  data/pricetags.txt    retail price-tag lines (regex suite)
"""

from __future__ import annotations

import os
import sys

import numpy as np

OUT = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

COMMON = """the of and to in a is that it was for on are with as his they at be this
have from or one had by word but not what all were we when your can said there use
an each which she do how their if will up other about out many then them these so
some her would make like him into time has look two more write go see number no way
could people my than first water been call who oil its now find long down day did
get come made may part over new sound take only little work know place year live me
back give most very after thing our just name good sentence man think say great
where help through much before line right too mean old any same tell boy follow
came want show also around form three small set put end does another well large
must big even such because turn here why ask went men read need land different home
us move try kind hand picture again change off play spell air away animal house
point page letter mother answer found study still learn should america world high
every near add food between own below country plant last school father keep tree
never start city earth eye light thought head under story saw left few while along
might close something seem next hard open example begin life always those both
paper together got group often run important until children side feet car mile
night walk white sea began grow took river four carry state once book hear stop
without second late miss idea enough eat face watch far really almost let above
girl sometimes mountain cut young talk soon list song being leave family music
question quick quite quart queen request equal square frequent quality zero zone
lazy dozen jazz puzzle oxygen exact expect taxi july junk joy jump adjust
""".split()

PANGRAMS = [
    "the quick brown fox jumps over the lazy dog.",
    "pack my box with five dozen liquor jugs.",
    "how vexingly quick daft zebras jump.",
    "sphinx of black quartz, judge my vow.",
    "the five boxing wizards jump quickly.",
    "THE QUICK BROWN FOX JUMPS OVER THE LAZY DOG.",
    "PACK MY BOX WITH FIVE DOZEN LIQUOR JUGS.",
]

PRICE_WORDS = ["TOTAL", "SAVE", "NET", "WT", "PER", "ONLY", "PRICE", "VALUE",
               "FRESH", "CRISP", "GOLDEN", "FAMILY", "PACK", "SIZE", "BRAND",
               "CHOICE", "DAIRY", "SNACK", "CEREAL", "JUICE", "WHOLE", "GRAIN",
               "OAT", "CORN", "RICE", "BEAN", "FLAKES", "CHIPS", "BARS", "MIX",
               "ROAST", "BLEND", "LIMITED", "TIME", "OFFER", "DEAL", "FOR", "A"]
UNITS = ["CT", "LB", "OZ", "EA", "ML", "MG"]

DOMAIN_SEEDS = ["palmitoylation", "interferon", "transmembrane", "endosomal",
                "cytokine", "ifitm3", "influenza", "glycoprotein",
                "phosphorylation", "ubiquitination", "antiviral", "endocytosis",
                "lysosome", "vesicle", "restriction"]

ONSETS = ["br", "ch", "cl", "cr", "dr", "fl", "gl", "gr", "kr", "ph", "pl",
          "pr", "qu", "rh", "sc", "sk", "sn", "sp", "st", "sy", "th", "tr",
          "vy", "wr", "xa", "xe", "yb", "za", "zo", "zy", "b", "c", "d", "f",
          "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w"]
MIDS = ["a", "e", "i", "o", "u", "y", "ae", "ia", "io", "eo", "yo", "au", "ou"]
CODAS = ["b", "c", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "x", "z",
         "st", "nd", "ct", "rm", "ns", "lt", "ph", "th"]
SUFFIXES = ["ase", "ide", "ine", "ium", "itin", "ol", "olide", "omab", "one",
            "osis", "oxin", "ydine", "yl", "ylation", "yx", "ax", "ecin"]


def make_domain_pool(rng: np.random.Generator, size: int) -> list[str]:
    pool = list(DOMAIN_SEEDS)
    seen = set(pool)
    while len(pool) < size:
        n_syll = int(rng.integers(1, 3))
        word = ""
        for _ in range(n_syll):
            word += ONSETS[rng.integers(0, len(ONSETS))]
            word += MIDS[rng.integers(0, len(MIDS))]
            if rng.random() < 0.4:
                word += CODAS[rng.integers(0, len(CODAS))]
        word += SUFFIXES[rng.integers(0, len(SUFFIXES))]
        if 6 <= len(word) <= 14 and word not in seen:
            seen.add(word)
            pool.append(word)
    return pool


def zipf_weights(n: int, s: float = 1.1, uniform_share: float = 0.0) -> np.ndarray:
    w = 1.0 / np.arange(2, n + 2) ** s
    w = w / w.sum()
    if uniform_share:
        w = (1.0 - uniform_share) * w + uniform_share / n
    return w / w.sum()


def english_line(rng, words, weights) -> str:
    n = int(rng.integers(5, 10))
    toks = [words[i] for i in rng.choice(len(words), size=n, p=weights)]
    if rng.random() < 0.2 and n > 3:
        k = int(rng.integers(2, n - 1))
        toks[k] = toks[k] + ","
    line = " ".join(toks)
    if rng.random() < 0.6:
        line += "."
    return line


def digit_line(rng, words, weights) -> str:
    toks = [words[i] for i in rng.choice(len(words), size=4, p=weights)]
    num = str(rng.integers(1, 2026))
    pos = int(rng.integers(1, 4))
    toks.insert(pos, num)
    return " ".join(toks) + "."


def price_line(rng) -> str:
    toks = [PRICE_WORDS[i] for i in rng.choice(len(PRICE_WORDS),
                                               size=int(rng.integers(2, 5)))]
    kind = rng.random()
    if kind < 0.45:
        toks.append(f"${rng.integers(1, 60)}.{rng.integers(0, 10)}{rng.integers(0, 10)}")
    elif kind < 0.7:
        toks.append(f"${rng.integers(1, 30)}")
    else:
        toks.append(f"{rng.integers(1, 64)} {UNITS[rng.integers(0, len(UNITS))]}")
    return " ".join(toks)


def main() -> int:
    rng = np.random.default_rng(7)
    os.makedirs(os.path.join(OUT, "docs"), exist_ok=True)

    # -- general English text -------------------------------------------
    eng_weights = zipf_weights(len(COMMON))
    lines = list(PANGRAMS)
    for _ in range(2400):
        r = rng.random()
        if r < 0.90:
            lines.append(english_line(rng, COMMON, eng_weights))
        elif r < 0.96:
            lines.append(digit_line(rng, COMMON, eng_weights))
        else:
            lines.append(price_line(rng))
    with open(os.path.join(OUT, "english.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")

    # -- domain documents ------------------------------------------------
    pool = make_domain_pool(rng, 2000)
    pool_weights = zipf_weights(len(pool), s=1.0, uniform_share=0.3)
    n_docs, lines_per_doc = 19, 120
    for d in range(n_docs):
        active = rng.choice(len(pool), size=int(0.75 * len(pool)), replace=False)
        active_set = set(int(i) for i in active)
        doc_lines = []
        for _ in range(lines_per_doc):
            n = int(rng.integers(5, 9))
            toks = []
            for _ in range(n):
                if rng.random() < 0.45:
                    while True:
                        i = int(rng.choice(len(pool), p=pool_weights))
                        if i in active_set:
                            break
                    toks.append(pool[i])
                else:
                    toks.append(COMMON[int(rng.choice(len(COMMON), p=eng_weights))])
            if rng.random() < 0.15 and n > 3:
                k = int(rng.integers(1, n - 1))
                toks[k] = toks[k] + ","
            line = " ".join(toks)
            if rng.random() < 0.5:
                line += "."
            doc_lines.append(line)
        with open(os.path.join(OUT, "docs", f"doc_{d:02d}.txt"), "w") as f:
            f.write("\n".join(doc_lines) + "\n")

    # -- medication names --------------------------------------------------
    names = []
    seen_prefix = set()
    seen = set()
    while len(names) < 560:
        word = ONSETS[rng.integers(0, len(ONSETS))] + MIDS[rng.integers(0, len(MIDS))]
        word += CODAS[rng.integers(0, len(CODAS))] + MIDS[rng.integers(0, len(MIDS))]
        word += SUFFIXES[rng.integers(0, len(SUFFIXES))]
        if not 6 <= len(word) <= 12 or word in seen:
            continue
        if word[:4] in seen_prefix:
            continue
        seen.add(word)
        seen_prefix.add(word[:4])
        names.append(word)
    with open(os.path.join(OUT, "mednames.txt"), "w") as f:
        f.write("\n".join(names) + "\n")

    # -- price tags --------------------------------------------------------
    tag_lines = [price_line(rng) for _ in range(90)]
    with open(os.path.join(OUT, "pricetags.txt"), "w") as f:
        f.write("\n".join(tag_lines) + "\n")

    print(f"wrote {len(lines)} english lines, {n_docs} docs x {lines_per_doc}, "
          f"{len(names)} med names, {len(tag_lines)} price tags under {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
