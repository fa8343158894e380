"""A tiny encoder: forward pass, loss, and a finite-difference spot check of the backward pass."""

import math

import numpy as np

from revsent import encoder as enc

cfg = enc.EncoderConfig(n_layers=2, hidden_size=16, n_heads=4, vocab_size=30, max_positions=12)
print("parameters:", enc.count_params(cfg))

bert_base = enc.EncoderConfig(n_layers=12, hidden_size=768, n_heads=12, vocab_size=30522)
print(f"same formula at BERT-Base size: {enc.count_params(bert_base) / 1e6:.1f}M")

params = enc.init_params(cfg, seed=0, dtype=np.float64)
ids = np.array([[2, 7, 9, 11, 3, 0, 0], [2, 5, 3, 0, 0, 0, 0]])
mask = (ids != 0).astype(int)
labels = np.array([2, 0])

logits, cache = enc.forward(params, cfg, (ids, mask))
print("logits\n", logits.round(4))
print("attention to padding in row 2:", cache.layers[0]["probs"][1, :, :, 3:].max())

loss, grads = enc.loss_and_grad(params, cfg, (ids, mask), labels)
print(f"loss {float(loss):.6f}  (ln 3 = {math.log(3):.6f}; near-uniform at init)")

rng = np.random.default_rng(1)
h = 1e-6
for name in ["layers.0.attn.query.weight", "layers.1.ffn.in.bias", "embeddings.token", "classifier.weight"]:
    flat = params[name].reshape(-1)
    i = int(rng.integers(flat.size))
    old = flat[i]
    flat[i] = old + h
    up, _ = enc.loss_and_grad(params, cfg, (ids, mask), labels)
    flat[i] = old - h
    down, _ = enc.loss_and_grad(params, cfg, (ids, mask), labels)
    flat[i] = old
    print(f"{name:30s} analytic {grads[name].reshape(-1)[i]: .3e}  numeric {(up - down) / (2 * h): .3e}")
