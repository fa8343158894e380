"""Toy review corpora whose labels follow a known lexicon, for demos and checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labeling import Lexicon, Sentiment, label_by_lexicon

POSITIVE_WORDS = ("bagus", "mantap", "keren", "suka", "lancar", "cepat", "puas", "membantu")
NEGATIVE_WORDS = ("jelek", "lambat", "error", "kecewa", "ribet", "lemot", "gagal", "buruk")
FILLER_WORDS = ("aplikasi", "ini", "saya", "untuk", "dan", "yang", "sangat", "sekali", "pakai", "hari", "belanja", "bayar")


@dataclass
class SyntheticCorpus:
    texts: list[str]
    labels: list[Sentiment]
    lexicon: Lexicon
    scores: list[int]


def default_lexicon() -> Lexicon:
    entries = {}
    for i, w in enumerate(POSITIVE_WORDS):
        entries[w] = 1 + i % 5
    for i, w in enumerate(NEGATIVE_WORDS):
        entries[w] = -(1 + i % 5)
    return Lexicon(entries)


def make_lexicon_corpus(n: int = 200, seed: int = 0, min_len: int = 3, max_len: int = 10) -> SyntheticCorpus:
    """Sentences of filler words plus zero to two sentiment words, labelled by lexicon sign.

    Roughly a third of the sentences fall in each class.
    """
    rng = np.random.default_rng(seed)
    lex = default_lexicon()
    texts, labels, scores = [], [], []
    for _ in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        words = list(rng.choice(FILLER_WORDS, size=length))
        target = rng.integers(3)
        if target == Sentiment.POSITIVE:
            picks = list(rng.choice(POSITIVE_WORDS, size=int(rng.integers(1, 3))))
        elif target == Sentiment.NEGATIVE:
            picks = list(rng.choice(NEGATIVE_WORDS, size=int(rng.integers(1, 3))))
        else:
            picks = []
        for w in picks:
            words.insert(int(rng.integers(0, len(words) + 1)), w)
        text = " ".join(words)
        texts.append(text)
        label = label_by_lexicon(text, lex)
        labels.append(label)
        scores.append(sum(lex.weight(w) for w in text.split()))
    return SyntheticCorpus(texts, labels, lex, scores)
