import glob
import os

import pytest

from lexibeam import train_charlm

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


def read_lines(name: str):
    with open(os.path.join(DATA, name), encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def english_lines():
    return read_lines("english.txt")


@pytest.fixture(scope="session")
def doc_corpora():
    paths = sorted(glob.glob(os.path.join(DATA, "docs", "doc_*.txt")))
    return [[line.rstrip("\n") for line in open(p, encoding="utf-8")] for p in paths]


@pytest.fixture(scope="session")
def mednames():
    return read_lines("mednames.txt")


@pytest.fixture(scope="session")
def pricetag_lines():
    return read_lines("pricetags.txt")


@pytest.fixture(scope="session")
def english_charlm(english_lines):
    return train_charlm(english_lines, 4)


@pytest.fixture(scope="session")
def tiny_charlm():
    corpus = ["the quick brown fox jumps over the lazy dog",
              "pack my box with five dozen liquor jugs",
              "a quart of milk and a can of beans 42"]
    return train_charlm(corpus, 3)
