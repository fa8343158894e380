"""Acceptance suite: one check per headline requirement, each printing PASS or FAIL.

Run with pytest (the lines appear in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""

import math
import string
import time

import numpy as np
import pytest
import scipy.sparse as sp

from revsent import encoder as enc
from revsent.baselines import MultinomialNB, kfold_cv, kfold_indices, tfidf_fit_transform
from revsent.corpus import split
from revsent.evaluation import REPORT_COLUMNS, render_report
from revsent.labeling import Lexicon, Sentiment, label_by_lexicon, label_by_score
from revsent.synthetic import make_lexicon_corpus
from revsent.tokenizer import Vocab, build_vocab, encode, encode_batch, wordpiece_tokenize
from revsent.trainer import TrainConfig, fine_tune, grid_search

RESULTS = []


def record(name, ok, detail, elapsed=None, limit=None):
    if limit is not None and elapsed is not None and elapsed >= limit:
        ok = False
        detail += f"; took {elapsed:.1f}s, limit {limit}s"
    timing = "" if elapsed is None else f" [{elapsed:.2f}s]"
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}{timing}")
    assert ok, RESULTS[-1]


def test_score_labeling_table():
    t = time.perf_counter()
    expected = {1: Sentiment.NEGATIVE, 2: Sentiment.NEGATIVE, 3: Sentiment.NEUTRAL, 4: Sentiment.POSITIVE, 5: Sentiment.POSITIVE}
    got = {s: label_by_score(s) for s in range(1, 6)}
    record("score labeling table", got == expected, ", ".join(f"{s}->{got[s].label}" for s in got), time.perf_counter() - t, 1)


def test_lexicon_labeling_oracle():
    rng = np.random.default_rng(2024)
    words = [f"kata{i}" for i in range(40)]
    t = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        chosen = rng.choice(words, size=int(rng.integers(0, 21)), replace=False)
        weights = rng.choice([w for w in range(-5, 6) if w], size=chosen.size)
        lex = Lexicon(dict(zip(chosen.tolist(), weights.tolist())))
        sentence = rng.choice(words, size=int(rng.integers(0, 16))).tolist()
        # count each lexicon word's occurrences and weight the count
        total = 0
        for w, wt in zip(chosen.tolist(), weights.tolist()):
            total += wt * sentence.count(w)
        want = Sentiment.POSITIVE if total > 0 else Sentiment.NEGATIVE if total < 0 else Sentiment.NEUTRAL
        mismatches += label_by_lexicon(" ".join(sentence), lex) is not want
    record("lexicon labeling oracle", mismatches == 0, f"{mismatches} mismatches in 1000 cases", time.perf_counter() - t, 5)


def _reference_pieces(word, tokens):
    if len(word) > 100:
        return ["[UNK]"]
    out, i = [], 0
    while i < len(word):
        candidates = [
            tok for tok in tokens
            if tok not in ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
            and (tok.startswith("##") == (i > 0))
            and len(tok.removeprefix("##")) > 0
            and word[i:].startswith(tok.removeprefix("##"))
        ]
        if not candidates:
            return ["[UNK]"]
        best = max(candidates, key=lambda tok: len(tok.removeprefix("##")))
        out.append(best)
        i += len(best.removeprefix("##"))
    return out


def test_tokenizer_oracle():
    rng = np.random.default_rng(7)
    letters = list("abcdef")
    t = time.perf_counter()
    bad, bad_encode = 0, 0
    for case in range(500):
        n_pieces = int(rng.integers(3, 30))
        raw = {"".join(rng.choice(letters, size=int(rng.integers(1, 5)))) for _ in range(n_pieces)}
        tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
        for piece in sorted(raw):
            tokens.append("##" + piece if rng.random() < 0.4 else piece)
        vocab = Vocab(list(dict.fromkeys(tokens)))
        word = "".join(rng.choice(letters, size=int(rng.integers(1, 12))))
        pieces = wordpiece_tokenize(word, vocab)
        bad += pieces != _reference_pieces(word, vocab.tokens)
        max_len = int(rng.integers(2, 10))
        e = encode(word, vocab, max_len)
        n = int(e.attention_mask.sum())
        ok = (
            len(e.ids) == len(e.attention_mask) == max_len
            and n == 2 + min(len(pieces), max_len - 2)
            and e.ids[0] == vocab.cls_id
            and e.ids[n - 1] == vocab.sep_id
            and bool(((e.ids != vocab.pad_id) == (e.attention_mask == 1)).all())
        )
        bad_encode += not ok
    record(
        "tokenizer oracle",
        bad == 0 and bad_encode == 0,
        f"{bad} segmentation mismatches, {bad_encode} encode invariant failures over 500 words",
        time.perf_counter() - t,
        5,
    )


def _gradient_check(seed, h=1e-6):
    cfg = enc.EncoderConfig(n_layers=2, hidden_size=8, n_heads=2, vocab_size=13, max_positions=6)
    wide = np.longdouble
    params = enc.init_params(cfg, seed, dtype=wide)
    rng = np.random.default_rng(seed + 100)
    for k in params:  # move every tensor off its special init value
        params[k] = params[k] + rng.normal(0, 0.3, params[k].shape).astype(wide)
    ids = rng.integers(4, 13, (2, 6))
    ids[:, 0] = 2
    mask = np.ones((2, 6), dtype=np.int64)
    ids[1, 4:], mask[1, 4:] = 0, 0
    labels = np.array([0, 2])
    _, grads = enc.loss_and_grad(params, cfg, (ids, mask), labels)
    step = wide(h)
    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up, _ = enc.loss_and_grad(params, cfg, (ids, mask), labels)
            flat[i] = old - step
            down, _ = enc.loss_and_grad(params, cfg, (ids, mask), labels)
            flat[i] = old
            num = (up - down) / (2 * step)
            ana = grads[name].reshape(-1)[i]
            rel = abs(ana - num) / max(abs(ana), abs(num), wide(1e-8))
            worst = max(worst, float(rel))
    return worst, sum(p.size for p in params.values())


@pytest.mark.slow
def test_gradient_check():
    t = time.perf_counter()
    results = [_gradient_check(seed) for seed in (0, 1, 2)]
    worst = max(r[0] for r in results)
    record(
        "gradient check",
        worst <= 1e-4,
        f"max relative error {worst:.2e} over {results[0][1]} params x 3 seeds (longdouble, h=1e-6)",
        time.perf_counter() - t,
        120,
    )


def test_uniform_logits_loss():
    cfg = enc.EncoderConfig(n_layers=1, hidden_size=8, n_heads=2, vocab_size=10, max_positions=8)
    params = enc.init_params(cfg, 0, dtype=np.float64)
    params["classifier.weight"][:] = 0.0
    params["classifier.bias"][:] = 0.0
    ids = np.array([[2, 5, 6, 3], [2, 7, 3, 0]])
    mask = (ids != 0).astype(int)
    loss, _ = enc.loss_and_grad(params, cfg, (ids, mask), [0, 2])
    err = abs(float(loss) - math.log(3))
    record("uniform logits loss", err <= 1e-9, f"|loss - ln 3| = {err:.1e}")


def test_padding_invariance():
    vocab = build_vocab(make_lexicon_corpus(50, seed=1).texts)
    cfg = enc.EncoderConfig(n_layers=2, hidden_size=32, n_heads=2, vocab_size=len(vocab), max_positions=64)
    params = enc.init_params(cfg, 3)
    texts = make_lexicon_corpus(8, seed=9).texts
    short, _ = enc.forward(params, cfg, encode_batch(texts, vocab, 32))
    long_, _ = enc.forward(params, cfg, encode_batch(texts, vocab, 64))
    diff = float(np.abs(short - long_).max())
    record("padding invariance", diff <= 1e-5, f"max |logit diff| between max_len 32 and 64 = {diff:.1e}")


@pytest.mark.slow
def test_overfit_sanity():
    data = make_lexicon_corpus(200, seed=0)
    vocab = build_vocab(data.texts)
    batch = encode_batch(data.texts, vocab, 16, [int(y) for y in data.labels])
    cfg = enc.EncoderConfig(n_layers=2, hidden_size=64, n_heads=2, vocab_size=len(vocab), max_positions=16)
    t = time.perf_counter()
    _, hist = fine_tune(enc.init_params(cfg, 0), cfg, batch, batch, TrainConfig(learning_rate=1e-3, batch_size=16, epochs=50, seed=0))
    reached = next((e for e, a in enumerate(hist.train_acc, 1) if a >= 0.95), None)
    record(
        "overfit sanity",
        reached is not None,
        f"training accuracy {hist.train_acc[-1]:.4f} after 50 epochs, first >= 0.95 at epoch {reached}",
        time.perf_counter() - t,
        300,
    )


def test_nb_oracle():
    docs = ["bagus mantap bagus", "jelek lambat", "bagus lambat", "biasa saja", "jelek jelek error", "mantap saja"]
    labels = [2, 0, 1, 1, 0, 2]
    space, X = tfidf_fit_transform(docs)
    nb = MultinomialNB(alpha=1.0).fit(X, labels)
    dense = X.toarray()
    probe = space.transform(["bagus jelek saja", "mantap", "lambat error"]).toarray()
    worst = 0.0
    d = dense.shape[1]
    for x, got in zip(probe, nb.predict_log_proba(sp.csr_matrix(probe))):
        joint = []
        for c in range(3):
            rows = dense[[i for i, y in enumerate(labels) if y == c]]
            theta = [(rows[:, t].sum() + 1.0) / (rows.sum() + d) for t in range(d)]
            joint.append(math.log(len(rows) / len(docs)) + sum(x[t] * math.log(theta[t]) for t in range(d)))
        evidence = sum(math.exp(j) for j in joint)
        post = [math.exp(j) / evidence for j in joint]
        worst = max(worst, max(abs(a - b) for a, b in zip(np.exp(got), post)))
    record("naive Bayes oracle", worst <= 1e-9, f"max posterior difference {worst:.1e} on a 6-document corpus")


def test_cv_laws():
    problems = []
    for n, k, seed in [(100, 10, 0), (10615, 10, 1), (37, 10, 2), (11, 10, 3), (25, 4, 4)]:
        folds = kfold_indices(n, k, seed)
        sizes = [f.size for f in folds]
        if not np.array_equal(np.sort(np.concatenate(folds)), np.arange(n)):
            problems.append(f"n={n} not a partition")
        if max(sizes) - min(sizes) > 1:
            problems.append(f"n={n} sizes {sizes}")
    c = make_lexicon_corpus(60, seed=4)
    res = kfold_cv("nb", c.texts, c.labels, k=10, seed=0)
    if res.mean != sum(res.fold_accuracies) / len(res.fold_accuracies):
        problems.append("mean is not the arithmetic mean")
    record("ten-fold CV laws", not problems, "; ".join(problems) or "partition, sizes within 1, mean exact")


def test_split_reproduction():
    sizes = split(list(range(10615)), (0.90, 0.05, 0.05), seed=0).sizes
    record("split reproduction", sizes == (9553, 531, 531), f"sizes {sizes}")


def test_grid_shape():
    data = make_lexicon_corpus(40, seed=6)
    vocab = build_vocab(data.texts)
    labels = [int(y) for y in data.labels]
    tr = encode_batch(data.texts[:24], vocab, 12, labels[:24])
    va = encode_batch(data.texts[24:32], vocab, 12, labels[24:32])
    te = encode_batch(data.texts[32:], vocab, 12, labels[32:])
    cfg = enc.EncoderConfig(n_layers=1, hidden_size=8, n_heads=2, vocab_size=len(vocab), max_positions=12)
    rows = grid_search(cfg, TrainConfig(seed=0), [1e-5, 2e-5, 3e-5], [16, 32], [2], tr, va, te)
    lines = render_report(rows, "csv").splitlines()
    header = lines[0].split(",")
    acc_cols = [header.index(c) for c in ("avg_train_acc", "avg_val_acc", "test_acc")]
    four = all(len(line.split(",")[i].split(".")[1]) == 4 for line in lines[1:] for i in acc_cols)
    ok = len(lines) == 7 and tuple(header) == REPORT_COLUMNS and four
    record("grid shape", ok, f"{len(lines) - 1} rows, header {'matches' if tuple(header) == REPORT_COLUMNS else 'differs'}, 4-decimal accuracies: {four}")


def test_full_scale_accuracies_excluded():
    RESULTS.append(
        "EXCLUDED  full-scale accuracy targets: they need a private 10,615-review corpus and pretrained multilingual weights"
    )


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    print("\n".join(RESULTS))
    sys.exit(1 if failed else 0)
