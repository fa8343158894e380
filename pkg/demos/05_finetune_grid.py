"""Fine-tune a small encoder over a learning-rate x batch-size grid and print the report."""

from revsent import encoder as enc
from revsent.corpus import split
from revsent.evaluation import render_report
from revsent.synthetic import make_lexicon_corpus
from revsent.tokenizer import build_vocab, encode_batch
from revsent.trainer import TrainConfig, run_grid

data = make_lexicon_corpus(300, seed=3)
parts = split(list(zip(data.texts, data.labels)), (0.8, 0.1, 0.1), seed=0)
vocab = build_vocab([t for t, _ in parts.train])


def encoded(rows):
    return encode_batch([t for t, _ in rows], vocab, 16, [int(y) for _, y in rows])


train, val, test = encoded(parts.train), encoded(parts.validation), encoded(parts.test)
cfg = enc.EncoderConfig(n_layers=2, hidden_size=32, n_heads=2, vocab_size=len(vocab), max_positions=16)

# from-scratch weights want larger steps than the 1e-5 range used for pretrained models
cells = run_grid(cfg, TrainConfig(seed=0), [1e-3, 3e-3], [16, 32], [8], train, val, test, labeling="lexicon")
print(render_report([c.report for c in cells], "markdown"))

best = max(cells, key=lambda c: c.report.avg_val_acc)
print("per-epoch history of the best cell:")
print(best.history.to_csv())
