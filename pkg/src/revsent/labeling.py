"""Weak sentiment labels from star scores or from a signed word lexicon."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence


class Sentiment(enum.IntEnum):
    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: "str | int | Sentiment") -> "Sentiment":
        if isinstance(value, str):
            text = value.strip().lower()
            if text.lstrip("-").isdigit():
                return cls(int(text))
            try:
                return cls[text.upper()]
            except KeyError:
                raise ValueError(f"unknown sentiment {value!r}") from None
        return cls(int(value))


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    """Immutable word -> nonzero integer weight map."""

    entries: Mapping[str, int]

    def __post_init__(self):
        for word, weight in self.entries.items():
            if int(weight) != weight or weight == 0:
                raise LexiconError(f"weight for {word!r} must be a nonzero integer, got {weight!r}")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    @property
    def positive_count(self) -> int:
        return sum(1 for w in self.entries.values() if w > 0)

    @property
    def negative_count(self) -> int:
        return sum(1 for w in self.entries.values() if w < 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def weight(self, word: str) -> int:
        return self.entries.get(word, 0)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]]) -> "Lexicon":
        entries: dict[str, int] = {}
        for word, weight in pairs:
            if word in entries:
                raise LexiconError(f"duplicate word {word!r}")
            entries[word] = weight
        return cls(entries)


def _read_lexicon_rows(path: Path) -> list[tuple[str, int]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 'word<TAB>weight'")
            word, weight = parts[0].strip().lower(), parts[1].strip()
            if lineno == 1 and word == "word" and weight.lower() == "weight":
                continue
            try:
                value = int(weight)
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: weight {weight!r} is not an integer") from None
            if value == 0:
                raise LexiconError(f"{path}:{lineno}: zero weight for {word!r}")
            if not word:
                raise LexiconError(f"{path}:{lineno}: empty word")
            rows.append((word, value))
    return rows


def load_lexicon(*paths: str | Path) -> Lexicon:
    """Load one or more tab-separated lexicon files into a single :class:`Lexicon`.

    Passing the positive and the negative file of a split lexicon merges them;
    a word present in both (or twice in one) is an error.
    """
    if not paths:
        raise TypeError("load_lexicon() needs at least one path")
    pairs = []
    for p in paths:
        pairs.extend(_read_lexicon_rows(Path(p)))
    return Lexicon.from_pairs(pairs)


def label_by_score(score: int) -> Sentiment:
    """1-2 negative, 3 neutral, 4-5 positive."""
    if isinstance(score, bool) or int(score) != score or not 1 <= score <= 5:
        raise ValueError(f"score must be an integer in 1..5, got {score!r}")
    if score <= 2:
        return Sentiment.NEGATIVE
    if score == 3:
        return Sentiment.NEUTRAL
    return Sentiment.POSITIVE


def lexicon_score(tokens: Sequence[str], lexicon: Lexicon) -> int:
    """Sum of weights over tokens, counting every occurrence; unknown words weigh 0."""
    entries = lexicon.entries
    return sum(entries.get(tok, 0) for tok in tokens)


def sentiment_of(score: int) -> Sentiment:
    if score > 0:
        return Sentiment.POSITIVE
    if score < 0:
        return Sentiment.NEGATIVE
    return Sentiment.NEUTRAL


def label_by_lexicon(text: str, lexicon: Lexicon) -> Sentiment:
    """Label already-preprocessed text by the sign of its lexicon score."""
    return sentiment_of(lexicon_score(text.split(), lexicon))


def class_distribution(labels: Iterable[Sentiment | int]) -> dict[Sentiment, int]:
    counts = Counter(Sentiment(int(lab)) for lab in labels)
    return {s: counts.get(s, 0) for s in Sentiment}
