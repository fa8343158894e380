import csv
import sys

import numpy as np
import pytest

from revsent import encoder as enc
from revsent.corpus import REVIEW_COLUMNS
from revsent.synthetic import make_lexicon_corpus
from revsent.tokenizer import Vocab, build_vocab, encode_batch

TOY_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "main", "##nya", "bagus", "jelek", "##an", "apli", "##kasi"]


@pytest.fixture
def toy_vocab():
    return Vocab(TOY_TOKENS)


@pytest.fixture(scope="session")
def corpus200():
    return make_lexicon_corpus(200, seed=0)


@pytest.fixture(scope="session")
def tiny_setup():
    """A 1-layer H=8 encoder plus encoded train/val/test batches from synthetic data."""
    c = make_lexicon_corpus(60, seed=5)
    vocab = build_vocab(c.texts)
    labels = [int(y) for y in c.labels]
    train = encode_batch(c.texts[:40], vocab, 16, labels[:40])
    val = encode_batch(c.texts[40:50], vocab, 16, labels[40:50])
    test = encode_batch(c.texts[50:], vocab, 16, labels[50:])
    cfg = enc.EncoderConfig(n_layers=1, hidden_size=8, n_heads=2, vocab_size=len(vocab), max_positions=16)
    return cfg, vocab, train, val, test


def write_review_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REVIEW_COLUMNS)
        w.writerows(rows)


@pytest.fixture
def review_csv(tmp_path):
    path = tmp_path / "reviews.csv"
    write_review_csv(
        path,
        [
            ["r1", "alice", "", "bagus sekali", "5", "2020-01-01"],
            ["r2", "budi", "http://x/y.png", "Jelek, lemot 100%", "1", "2020-01-02"],
            ["r3", "cici", "", "biasa saja", "3", "2020-01-03"],
        ],
    )
    return path


def rng_params(cfg, seed, dtype=np.float64, scale=0.3):
    """Initial weights plus gaussian noise, so no tensor sits at a special value."""
    p = enc.init_params(cfg, seed, dtype=dtype)
    rng = np.random.default_rng(seed + 100)
    for k in p:
        p[k] = p[k] + rng.normal(0, scale, p[k].shape).astype(dtype)
    return p


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
