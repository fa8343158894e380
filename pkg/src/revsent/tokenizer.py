"""WordPiece segmentation and single-sentence BERT input formatting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP)
MAX_POSITIONS = 512
MAX_WORD_CHARS = 100


class VocabError(ValueError):
    pass


class Vocab:
    """Ordered subword vocabulary; a token's id is its position."""

    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self._ids: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if tok in self._ids:
                raise VocabError(f"duplicate token {tok!r} at line {i}")
            self._ids[tok] = i
        missing = [s for s in SPECIAL_TOKENS if s not in self._ids]
        if missing:
            raise VocabError(f"vocabulary lacks special token(s) {', '.join(missing)}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids[token]

    def get(self, token: str, default: int | None = None) -> int | None:
        return self._ids.get(token, default)

    def convert_tokens_to_ids(self, tokens: Iterable[str]) -> list[int]:
        unk = self._ids[UNK]
        return [self._ids.get(t, unk) for t in tokens]

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def cls_id(self) -> int:
        return self._ids[CLS]

    @property
    def sep_id(self) -> int:
        return self._ids[SEP]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")


def load_vocab(path: str | Path) -> Vocab:
    """Read a BERT-style ``vocab.txt`` (one token per line, id = line index)."""
    with open(path, encoding="utf-8", newline="") as fh:
        tokens = [line.rstrip("\r\n") for line in fh]
    # a trailing newline yields no extra entry, but an interior blank line is a token
    while tokens and tokens[-1] == "":
        tokens.pop()
    return Vocab(tokens)


def build_vocab(texts: Iterable[str], max_words: int = 5000, min_count: int = 1) -> Vocab:
    """Small corpus-derived vocabulary for training from scratch.

    Holds the specials, every character seen (bare and ``##``-prefixed) so
    that no in-alphabet word falls back to ``[UNK]``, then the most frequent
    whole words.
    """
    words = Counter()
    chars = set()
    for text in texts:
        for w in text.split():
            words[w] += 1
            chars.update(w)
    tokens = list(SPECIAL_TOKENS)
    for ch in sorted(chars):
        tokens.append(ch)
    for ch in sorted(chars):
        tokens.append("##" + ch)
    seen = set(tokens)
    ranked = sorted(words.items(), key=lambda kv: (-kv[1], kv[0]))
    added = 0
    for w, c in ranked:
        if added >= max_words or c < min_count:
            break
        if w not in seen:
            tokens.append(w)
            seen.add(w)
            added += 1
    return Vocab(tokens)


def wordpiece_word(word: str, vocab: Vocab, max_chars: int = MAX_WORD_CHARS) -> list[str]:
    if len(word) > max_chars:
        return [UNK]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            cand = word[start:end]
            if start > 0:
                cand = "##" + cand
            if cand in vocab:
                piece = cand
                break
            end -= 1
        if piece is None:
            return [UNK]
        pieces.append(piece)
        start = end
    return pieces


def wordpiece_tokenize(text: str, vocab: Vocab) -> list[str]:
    """Greedy longest-prefix WordPiece over whitespace-separated words.

    A word with any unmatchable remainder becomes a single ``[UNK]``.
    """
    out = []
    for word in text.split():
        out.extend(wordpiece_word(word, vocab))
    return out


@dataclass(frozen=True)
class EncodedInput:
    ids: np.ndarray
    attention_mask: np.ndarray
    segment_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.segment_ids is None:
            object.__setattr__(self, "segment_ids", np.zeros_like(self.ids))

    def __len__(self) -> int:
        return len(self.ids)


def encode(text: str, vocab: Vocab, max_len: int = 128) -> EncodedInput:
    """``[CLS] pieces [SEP]`` truncated at the tail and padded to ``max_len``."""
    if not 2 <= max_len <= MAX_POSITIONS:
        raise ValueError(f"max_len must be in [2, {MAX_POSITIONS}], got {max_len}")
    pieces = wordpiece_tokenize(text, vocab)[: max_len - 2]
    ids = np.full(max_len, vocab.pad_id, dtype=np.int64)
    n = len(pieces) + 2
    ids[0] = vocab.cls_id
    ids[1 : n - 1] = vocab.convert_tokens_to_ids(pieces)
    ids[n - 1] = vocab.sep_id
    mask = np.zeros(max_len, dtype=np.int64)
    mask[:n] = 1
    return EncodedInput(ids=ids, attention_mask=mask)


@dataclass
class EncodedBatch:
    """Stacked encodings, row-aligned with an optional label vector."""

    ids: np.ndarray
    attention_mask: np.ndarray
    segment_ids: np.ndarray
    labels: np.ndarray | None = None

    def __len__(self) -> int:
        return self.ids.shape[0]

    def subset(self, index) -> "EncodedBatch":
        return EncodedBatch(
            ids=self.ids[index],
            attention_mask=self.attention_mask[index],
            segment_ids=self.segment_ids[index],
            labels=None if self.labels is None else self.labels[index],
        )

    @classmethod
    def stack(cls, inputs: Sequence[EncodedInput], labels: Sequence[int] | None = None) -> "EncodedBatch":
        return cls(
            ids=np.stack([e.ids for e in inputs]),
            attention_mask=np.stack([e.attention_mask for e in inputs]),
            segment_ids=np.stack([e.segment_ids for e in inputs]),
            labels=None if labels is None else np.asarray([int(y) for y in labels], dtype=np.int64),
        )


def encode_batch(
    texts: Sequence[str], vocab: Vocab, max_len: int = 128, labels: Sequence[int] | None = None
) -> EncodedBatch:
    return EncodedBatch.stack([encode(t, vocab, max_len) for t in texts], labels)
