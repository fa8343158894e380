import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revsent.tokenizer import (
    MAX_POSITIONS,
    Vocab,
    VocabError,
    build_vocab,
    encode,
    encode_batch,
    load_vocab,
    wordpiece_tokenize,
)

from conftest import TOY_TOKENS


def greedy_reference(word, pieces):
    """Scan the vocabulary for every piece matching at the cursor and keep the longest."""
    if len(word) > 100:
        return ["[UNK]"]
    out, pos = [], 0
    while pos < len(word):
        best = None
        for p in pieces:
            body = p[2:] if p.startswith("##") else p
            if p.startswith("##") != (pos > 0) or not body:
                continue
            if word.startswith(body, pos) and (best is None or len(body) > len(best[1])):
                best = (p, body)
        if best is None:
            return ["[UNK]"]
        out.append(best[0])
        pos += len(best[1])
    return out


def test_load_vocab_ids(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("[PAD]\n[UNK]\n[CLS]\n[SEP]\nmain\n##nya\nbagus\n", encoding="utf-8")
    v = load_vocab(path)
    assert len(v) == 7
    assert v.id("[PAD]") == 0 and v.id("bagus") == 6


def test_load_vocab_errors(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("[PAD]\n[UNK]\n[SEP]\nmain\n", encoding="utf-8")
    with pytest.raises(VocabError, match="CLS"):
        load_vocab(path)
    path.write_text("[PAD]\n[UNK]\n[CLS]\n[SEP]\nmain\nmain\n", encoding="utf-8")
    with pytest.raises(VocabError, match="main"):
        load_vocab(path)


def test_vocab_save_roundtrip(tmp_path, toy_vocab):
    toy_vocab.save(tmp_path / "v.txt")
    assert (tmp_path / "v.txt").read_text(encoding="utf-8").splitlines() == TOY_TOKENS
    assert load_vocab(tmp_path / "v.txt").tokens == toy_vocab.tokens


def test_wordpiece_examples(toy_vocab):
    assert wordpiece_tokenize("mainnya bagus", toy_vocab) == ["main", "##nya", "bagus"]
    assert wordpiece_tokenize("zzz", toy_vocab) == ["[UNK]"]
    assert wordpiece_tokenize("jelek", toy_vocab) == ["jelek"]
    assert wordpiece_tokenize("aplikasi mainan mainx", toy_vocab) == ["apli", "##kasi", "main", "##an", "[UNK]"]


def test_overlong_word_is_unknown():
    v = Vocab(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "##a"])
    assert wordpiece_tokenize("a" * 100, v) == ["a"] + ["##a"] * 99
    assert wordpiece_tokenize("a" * 101, v) == ["[UNK]"]


def test_encode_example(toy_vocab):
    e = encode("bagus", toy_vocab, 6)
    assert e.ids.tolist() == [2, 6, 3, 0, 0, 0]
    assert e.attention_mask.tolist() == [1, 1, 1, 0, 0, 0]
    assert e.segment_ids.tolist() == [0] * 6


def test_encode_truncates_to_512():
    v = Vocab(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "x"])
    e = encode(" ".join(["x"] * 600), v, 512)
    assert len(e.ids) == 512
    assert e.ids[0] == v.cls_id and e.ids[-1] == v.sep_id
    assert (e.ids[1:-1] == v.id("x")).all()


def test_encode_empty(toy_vocab):
    e = encode("", toy_vocab, 5)
    assert e.ids.tolist() == [2, 3, 0, 0, 0]
    assert e.attention_mask.tolist() == [1, 1, 0, 0, 0]


@pytest.mark.parametrize("bad", [1, 513])
def test_encode_max_len_bounds(toy_vocab, bad):
    with pytest.raises(ValueError):
        encode("bagus", toy_vocab, bad)


def test_build_vocab_covers_training_words():
    texts = ["aplikasi bagus", "aplikasi jelek sekali"]
    v = build_vocab(texts)
    for t in texts:
        assert "[UNK]" not in wordpiece_tokenize(t, v)
    # characters alone always give a segmentation, so unseen words still split
    assert "[UNK]" not in wordpiece_tokenize("jalik", v)


alphabet = "abcde"
toy_pieces = st.lists(st.text(alphabet, min_size=1, max_size=4), min_size=1, max_size=25, unique=True)


@st.composite
def vocab_and_text(draw):
    heads = draw(toy_pieces)
    tails = draw(st.lists(st.text(alphabet, min_size=1, max_size=3), max_size=15, unique=True))
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"] + heads + ["##" + t for t in tails]
    words = draw(st.lists(st.text(alphabet, min_size=1, max_size=10), max_size=8))
    return Vocab(list(dict.fromkeys(tokens))), words


@given(vocab_and_text(), st.integers(2, 24))
@settings(max_examples=300, deadline=None)
def test_tokenizer_matches_reference_and_encode_invariants(vt, max_len):
    vocab, words = vt
    text = " ".join(words)
    pieces = wordpiece_tokenize(text, vocab)
    expected = [p for w in words for p in greedy_reference(w, vocab.tokens)]
    assert pieces == expected
    for w in words:
        segs = greedy_reference(w, vocab.tokens)
        if "[UNK]" not in segs:
            assert "".join(s[2:] if s.startswith("##") else s for s in segs) == w
    e = encode(text, vocab, max_len)
    assert len(e.ids) == len(e.attention_mask) == max_len
    assert e.attention_mask.sum() == 2 + min(len(pieces), max_len - 2)
    assert ((e.ids != vocab.pad_id) == (e.attention_mask == 1)).all()
    n = int(e.attention_mask.sum())
    assert e.ids[0] == vocab.cls_id and e.ids[n - 1] == vocab.sep_id
    assert (e.ids[1 : n - 1] != vocab.sep_id).all()


def test_encode_is_stateless(toy_vocab):
    first = encode("mainnya bagus", toy_vocab, 8)
    encode("jelek aplikasi zzz", toy_vocab, 8)
    again = encode("mainnya bagus", toy_vocab, 8)
    assert np.array_equal(first.ids, again.ids)


def test_encode_batch_shapes(toy_vocab):
    b = encode_batch(["bagus", "jelek mainnya"], toy_vocab, 7, [2, 0])
    assert b.ids.shape == (2, 7) and b.labels.tolist() == [2, 0]
    assert len(b.subset([1])) == 1
    assert MAX_POSITIONS == 512
