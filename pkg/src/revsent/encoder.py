"""A compact BERT-style encoder in numpy with an explicit backward pass.

Parameter naming (every linear map is ``y = x @ weight + bias`` with
``weight`` shaped ``(in, out)``)::

    embeddings.token            (vocab_size, H)
    embeddings.position         (max_positions, H)
    embeddings.segment          (type_vocab_size, H)
    embeddings.ln.gamma / .beta (H,)
    layers.{i}.attn.{query,key,value,output}.weight  (H, H)
    layers.{i}.attn.{query,key,value,output}.bias    (H,)
    layers.{i}.attn.ln.gamma / .beta                 (H,)
    layers.{i}.ffn.in.weight (H, F)   layers.{i}.ffn.in.bias (F,)
    layers.{i}.ffn.out.weight (F, H)  layers.{i}.ffn.out.bias (H,)
    layers.{i}.ffn.ln.gamma / .beta                  (H,)
    classifier.weight (H, n_classes)  classifier.bias (n_classes,)

The classifier reads the final hidden state at position 0 (``[CLS]``)
directly; there is no tanh pooler.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf

EncoderParams = dict  # name -> np.ndarray, see module docstring

WEIGHTS_MAGIC = b"REVSENTW"
WEIGHTS_VERSION = 1


class ConfigMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    n_layers: int = 2
    hidden_size: int = 64
    n_heads: int = 2
    vocab_size: int = 1000
    ffn_size: int | None = None
    max_positions: int = 512
    n_classes: int = 3
    type_vocab_size: int = 2
    dropout: float = 0.0
    layer_norm_eps: float = 1e-12
    init_std: float = 0.02

    def __post_init__(self):
        if self.ffn_size is None:
            object.__setattr__(self, "ffn_size", 4 * self.hidden_size)
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.hidden_size % self.n_heads:
            raise ValueError(f"hidden_size {self.hidden_size} not divisible by n_heads {self.n_heads}")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if not 1 <= self.max_positions <= 512:
            raise ValueError("max_positions must be in 1..512")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    # short names used in the literature's model tables
    @property
    def L(self) -> int:
        return self.n_layers

    @property
    def H(self) -> int:
        return self.hidden_size

    @property
    def A(self) -> int:
        return self.n_heads

    @property
    def head_size(self) -> int:
        return self.hidden_size // self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def param_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    H, F = config.hidden_size, config.ffn_size
    shapes = {
        "embeddings.token": (config.vocab_size, H),
        "embeddings.position": (config.max_positions, H),
        "embeddings.segment": (config.type_vocab_size, H),
        "embeddings.ln.gamma": (H,),
        "embeddings.ln.beta": (H,),
    }
    for i in range(config.n_layers):
        p = f"layers.{i}."
        for proj in ("query", "key", "value", "output"):
            shapes[p + f"attn.{proj}.weight"] = (H, H)
            shapes[p + f"attn.{proj}.bias"] = (H,)
        shapes[p + "attn.ln.gamma"] = (H,)
        shapes[p + "attn.ln.beta"] = (H,)
        shapes[p + "ffn.in.weight"] = (H, F)
        shapes[p + "ffn.in.bias"] = (F,)
        shapes[p + "ffn.out.weight"] = (F, H)
        shapes[p + "ffn.out.bias"] = (H,)
        shapes[p + "ffn.ln.gamma"] = (H,)
        shapes[p + "ffn.ln.beta"] = (H,)
    shapes["classifier.weight"] = (H, config.n_classes)
    shapes["classifier.bias"] = (config.n_classes,)
    return shapes


def count_params(config: EncoderConfig) -> int:
    """Closed-form trainable parameter count."""
    H, F, C = config.hidden_size, config.ffn_size, config.n_classes
    embed = (config.vocab_size + config.max_positions + config.type_vocab_size) * H + 2 * H
    per_layer = 4 * (H * H + H) + 2 * H + (H * F + F) + (F * H + H) + 2 * H
    return embed + config.n_layers * per_layer + H * C + C


def _truncated_normal(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return out * std


def init_params(config: EncoderConfig, seed: int = 0, dtype=np.float32) -> EncoderParams:
    """Fresh parameters: weights ~ N(0, std) cut at two std, zero biases, unit LN scales."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".gamma"):
            arr = np.ones(shape)
        elif name.endswith(".beta") or name.endswith(".bias"):
            arr = np.zeros(shape)
        else:
            arr = _truncated_normal(rng, shape, config.init_std)
        params[name] = arr.astype(dtype)
    return params


def validate_params(params: EncoderParams, config: EncoderConfig) -> None:
    expected = param_shapes(config)
    missing = [k for k in expected if k not in params]
    if missing:
        raise ConfigMismatch(f"missing tensor(s): {', '.join(missing[:5])}")
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise ConfigMismatch(f"{name}: shape {tuple(params[name].shape)} does not match config {shape}")


# -- building blocks -------------------------------------------------------


def _layer_norm(x, gamma, beta, eps):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return xhat * gamma + beta, (xhat, inv, gamma)


def _layer_norm_backward(dy, cache):
    xhat, inv, gamma = cache
    axes = tuple(range(dy.ndim - 1))
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    dxhat = dy * gamma
    dx = inv * (
        dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def _erf_series(x: np.ndarray) -> np.ndarray:
    """erf in the input's own (extended) precision.

    Uses erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1)),
    whose terms are all positive, so nothing cancels.
    """
    x = np.asarray(x)
    ax = np.minimum(np.abs(x), np.asarray(8, dtype=x.dtype))
    two_x2 = 2 * ax * ax
    term = ax.copy()
    total = ax.copy()
    eps = np.finfo(x.dtype).eps
    for n in range(1, 1000):
        term = term * two_x2 / (2 * n + 1)
        total = total + term
        if np.all(term <= eps * total):
            break
    out = 2 / np.sqrt(_PI_LD).astype(x.dtype) * np.exp(-ax * ax) * total
    return np.sign(x) * np.minimum(out, np.asarray(1, dtype=x.dtype))


def _erf(x):
    if x.dtype == np.longdouble and np.finfo(np.longdouble).eps < np.finfo(np.float64).eps:
        return _erf_series(x)
    return erf(x)


def gelu(x):
    half = np.asarray(0.5, dtype=x.dtype)
    return half * x * (1 + _erf(x / np.sqrt(np.asarray(2, dtype=x.dtype))))


def gelu_grad(x):
    two = np.asarray(2, dtype=x.dtype)
    cdf = (1 + _erf(x / np.sqrt(two))) / two
    pdf = np.exp(-x * x / two) / np.sqrt(two * _PI_LD.astype(x.dtype))
    return cdf + x * pdf


def _softmax(s, axis=-1):
    m = np.max(s, axis=axis, keepdims=True)
    e = np.exp(s - m)
    return e / e.sum(axis=axis, keepdims=True)


def _dropout(x, rate, rng, train):
    if not train or rate == 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def _split_heads(x, A):
    B, T, H = x.shape
    return x.reshape(B, T, A, H // A).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, A, T, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, A * d)


# -- forward / backward ----------------------------------------------------


@dataclass
class ForwardCache:
    """Activations from one forward call, consumed by :func:`backward`."""

    ids: np.ndarray
    segment_ids: np.ndarray
    key_mask: np.ndarray
    emb_ln: tuple
    emb_drop: np.ndarray | None
    layers: list = field(default_factory=list)
    cls_hidden: np.ndarray = None
    cls_drop: np.ndarray | None = None
    probs: np.ndarray = None


def _batch_arrays(batch, config):
    """Accept an ``EncodedBatch``, a sequence of ``EncodedInput`` or an (ids, mask[, segments]) tuple."""
    if hasattr(batch, "ids") and hasattr(batch, "attention_mask") and np.ndim(batch.ids) == 2:
        ids, mask, seg = batch.ids, batch.attention_mask, batch.segment_ids
    elif isinstance(batch, tuple):
        ids, mask = batch[0], batch[1]
        seg = batch[2] if len(batch) > 2 else None
    else:
        ids = np.stack([e.ids for e in batch])
        mask = np.stack([e.attention_mask for e in batch])
        seg = np.stack([e.segment_ids for e in batch])
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask)
    seg = np.zeros_like(ids) if seg is None else np.asarray(seg, dtype=np.int64)
    if ids.ndim != 2 or mask.shape != ids.shape or seg.shape != ids.shape:
        raise ValueError(f"ids/mask/segments must share a (batch, length) shape, got {ids.shape}, {mask.shape}, {seg.shape}")
    if ids.shape[1] > config.max_positions:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds max_positions {config.max_positions}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError(f"token id outside vocabulary of size {config.vocab_size}")
    if seg.size and (seg.min() < 0 or seg.max() >= config.type_vocab_size):
        raise ValueError("segment id outside type vocabulary")
    return ids, mask.astype(bool), seg


def forward(params: EncoderParams, config: EncoderConfig, batch, *, train: bool = False, rng=None):
    """Logits of shape (batch, n_classes) and the cache needed for backprop.

    Keys whose attention-mask entry is 0 get a score of -inf before the
    softmax, so padding never reaches the ``[CLS]`` state.
    """
    ids, key_mask, seg = _batch_arrays(batch, config)
    B, T = ids.shape
    A, eps = config.n_heads, config.layer_norm_eps
    rate = config.dropout
    if train and rate > 0 and rng is None:
        raise ValueError("dropout during training needs an rng")
    scale = 1.0 / math.sqrt(config.head_size)
    dtype = params["embeddings.token"].dtype

    x = params["embeddings.token"][ids] + params["embeddings.position"][:T][np.newaxis] + params["embeddings.segment"][seg]
    h, emb_ln = _layer_norm(x, params["embeddings.ln.gamma"], params["embeddings.ln.beta"], eps)
    h, emb_drop = _dropout(h, rate, rng, train)
    cache = ForwardCache(ids=ids, segment_ids=seg, key_mask=key_mask, emb_ln=emb_ln, emb_drop=emb_drop)
    neg_inf = np.asarray(-np.inf, dtype=dtype)
    allowed = key_mask[:, np.newaxis, np.newaxis, :]

    for i in range(config.n_layers):
        p = f"layers.{i}."
        q = _split_heads(h @ params[p + "attn.query.weight"] + params[p + "attn.query.bias"], A)
        k = _split_heads(h @ params[p + "attn.key.weight"] + params[p + "attn.key.bias"], A)
        v = _split_heads(h @ params[p + "attn.value.weight"] + params[p + "attn.value.bias"], A)
        scores = np.where(allowed, (q @ k.transpose(0, 1, 3, 2)) * scale, neg_inf)
        probs = _softmax(scores)
        ctx = _merge_heads(probs @ v)
        attn = ctx @ params[p + "attn.output.weight"] + params[p + "attn.output.bias"]
        attn, attn_drop = _dropout(attn, rate, rng, train)
        h1, ln1 = _layer_norm(h + attn, params[p + "attn.ln.gamma"], params[p + "attn.ln.beta"], eps)
        u = h1 @ params[p + "ffn.in.weight"] + params[p + "ffn.in.bias"]
        g = gelu(u)
        f = g @ params[p + "ffn.out.weight"] + params[p + "ffn.out.bias"]
        f, ffn_drop = _dropout(f, rate, rng, train)
        h_out, ln2 = _layer_norm(h1 + f, params[p + "ffn.ln.gamma"], params[p + "ffn.ln.beta"], eps)
        cache.layers.append(
            dict(h=h, q=q, k=k, v=v, probs=probs, ctx=ctx, attn_drop=attn_drop, ln1=ln1, h1=h1, u=u, g=g, ffn_drop=ffn_drop, ln2=ln2)
        )
        h = h_out

    cls = h[:, 0, :]
    cls, cls_drop = _dropout(cls, rate, rng, train)
    cache.cls_hidden = cls
    cache.cls_drop = cls_drop
    logits = cls @ params["classifier.weight"] + params["classifier.bias"]
    return logits, cache


def backward(params: EncoderParams, config: EncoderConfig, cache: ForwardCache, dlogits: np.ndarray) -> EncoderParams:
    """Gradients of a scalar loss w.r.t. every parameter, given dloss/dlogits."""
    grads = {name: np.zeros_like(arr) for name, arr in params.items()}
    A = config.n_heads
    scale = 1.0 / math.sqrt(config.head_size)
    B, T = cache.ids.shape

    grads["classifier.weight"] = cache.cls_hidden.T @ dlogits
    grads["classifier.bias"] = dlogits.sum(axis=0)
    dcls = dlogits @ params["classifier.weight"].T
    if cache.cls_drop is not None:
        dcls = dcls * cache.cls_drop
    dh = np.zeros((B, T, config.hidden_size), dtype=dlogits.dtype)
    dh[:, 0, :] = dcls

    for i in reversed(range(config.n_layers)):
        p = f"layers.{i}."
        c = cache.layers[i]
        # ffn block
        dsum2, grads[p + "ffn.ln.gamma"], grads[p + "ffn.ln.beta"] = _layer_norm_backward(dh, c["ln2"])
        df = dsum2 if c["ffn_drop"] is None else dsum2 * c["ffn_drop"]
        grads[p + "ffn.out.weight"] = np.einsum("btf,bth->fh", c["g"], df)
        grads[p + "ffn.out.bias"] = df.sum(axis=(0, 1))
        dg = df @ params[p + "ffn.out.weight"].T
        du = dg * gelu_grad(c["u"])
        grads[p + "ffn.in.weight"] = np.einsum("bth,btf->hf", c["h1"], du)
        grads[p + "ffn.in.bias"] = du.sum(axis=(0, 1))
        dh1 = dsum2 + du @ params[p + "ffn.in.weight"].T
        # attention block
        dsum1, grads[p + "attn.ln.gamma"], grads[p + "attn.ln.beta"] = _layer_norm_backward(dh1, c["ln1"])
        dattn = dsum1 if c["attn_drop"] is None else dsum1 * c["attn_drop"]
        grads[p + "attn.output.weight"] = np.einsum("bth,btk->hk", c["ctx"], dattn)
        grads[p + "attn.output.bias"] = dattn.sum(axis=(0, 1))
        dctx = _split_heads(dattn @ params[p + "attn.output.weight"].T, A)
        probs = c["probs"]
        dprobs = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = probs.transpose(0, 1, 3, 2) @ dctx
        dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
        dq = (dscores @ c["k"]) * scale
        dk = (dscores.transpose(0, 1, 3, 2) @ c["q"]) * scale
        h_in = c["h"]
        dh_in = dsum1.copy()
        for name, d in (("query", dq), ("key", dk), ("value", dv)):
            dm = _merge_heads(d)
            grads[p + f"attn.{name}.weight"] = np.einsum("bth,btk->hk", h_in, dm)
            grads[p + f"attn.{name}.bias"] = dm.sum(axis=(0, 1))
            dh_in += dm @ params[p + f"attn.{name}.weight"].T
        dh = dh_in

    if cache.emb_drop is not None:
        dh = dh * cache.emb_drop
    dx, grads["embeddings.ln.gamma"], grads["embeddings.ln.beta"] = _layer_norm_backward(dh, cache.emb_ln)
    np.add.at(grads["embeddings.token"], cache.ids, dx)
    grads["embeddings.position"][:T] += dx.sum(axis=0)
    np.add.at(grads["embeddings.segment"], cache.segment_ids, dx)
    return grads


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return _softmax(logits)


def cross_entropy(logits: np.ndarray, labels) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    return float(-log_softmax(logits)[np.arange(labels.size), labels].mean())


def loss_and_grad(params: EncoderParams, config: EncoderConfig, batch, labels, *, train: bool = False, rng=None):
    """Mean sparse categorical cross-entropy and its exact gradients."""
    labels = np.asarray(labels, dtype=np.int64)
    logits, cache = forward(params, config, batch, train=train, rng=rng)
    if labels.shape != (logits.shape[0],):
        raise ValueError(f"expected {logits.shape[0]} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= config.n_classes):
        raise ValueError(f"labels must lie in 0..{config.n_classes - 1}")
    with np.errstate(invalid="ignore", over="ignore"):
        logp = log_softmax(logits)
    # numpy scalar in the parameter dtype so extended-precision checks keep every bit
    loss = -logp[np.arange(labels.size), labels].mean()
    if not np.isfinite(loss):
        bad = np.flatnonzero(~np.isfinite(logits).all(axis=1))
        raise FloatingPointError(f"non-finite loss {loss}; rows with non-finite logits: {bad.tolist()[:10]}")
    dlogits = np.exp(logp)
    dlogits[np.arange(labels.size), labels] -= 1.0
    dlogits /= labels.size
    return loss, backward(params, config, cache, dlogits.astype(logits.dtype))


def predict(params: EncoderParams, config: EncoderConfig, batch, batch_size: int = 64) -> np.ndarray:
    """Argmax classes in evaluation mode, processed in chunks."""
    ids, mask, seg = _batch_arrays(batch, config)
    out = []
    for s in range(0, ids.shape[0], batch_size):
        logits, _ = forward(params, config, (ids[s : s + batch_size], mask[s : s + batch_size], seg[s : s + batch_size]))
        out.append(np.argmax(logits, axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


# -- weights file ----------------------------------------------------------
#
# layout: 8-byte magic "REVSENTW", uint32 LE version, uint32 LE header length,
# UTF-8 JSON header {"version", "config", "tensors": [{"name", "shape",
# "offset", "nbytes"}]}, then the tensors as row-major little-endian float32,
# offsets counted from the first byte after the header.


def save_params(params: EncoderParams, path: str | Path, config: EncoderConfig | None = None) -> None:
    """Write parameters as float32 tensors plus the config used to shape them."""
    if config is not None:
        validate_params(params, config)
    tensors, blobs, offset = [], [], 0
    for name, arr in params.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = json.dumps(
        {"version": WEIGHTS_VERSION, "config": None if config is None else config.to_dict(), "tensors": tensors},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<II", WEIGHTS_VERSION, len(header)))
        fh.write(header)
        for b in blobs:
            fh.write(b)


def read_header(path: str | Path) -> dict:
    """The JSON header of a weights file, without touching tensor data."""
    with open(path, "rb") as fh:
        magic = fh.read(len(WEIGHTS_MAGIC))
        if magic != WEIGHTS_MAGIC:
            raise ValueError(f"{path}: not an encoder weights file")
        version, hlen = struct.unpack("<II", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
    header["version"] = version
    return header


def load_params(path: str | Path, config: EncoderConfig | None = None) -> tuple[EncoderParams, EncoderConfig | None]:
    """Read a weights file; with ``config`` given, any shape disagreement is fatal."""
    header = read_header(path)
    if header["version"] != WEIGHTS_VERSION:
        raise ValueError(f"{path}: unsupported weights version {header['version']}")
    stored = None if header.get("config") is None else EncoderConfig.from_dict(header["config"])
    with open(path, "rb") as fh:
        fh.seek(len(WEIGHTS_MAGIC))
        _, hlen = struct.unpack("<II", fh.read(8))
        fh.seek(len(WEIGHTS_MAGIC) + 8 + hlen)
        raw = fh.read()
    params = {}
    for t in header["tensors"]:
        buf = raw[t["offset"] : t["offset"] + t["nbytes"]]
        params[t["name"]] = np.frombuffer(buf, dtype="<f4").reshape(t["shape"]).astype(np.float32)
    if config is not None:
        if stored is not None and stored != config:
            diffs = [k for k, v in config.to_dict().items() if stored.to_dict().get(k) != v]
            shape_keys = {"n_layers", "hidden_size", "n_heads", "vocab_size", "ffn_size", "max_positions", "n_classes", "type_vocab_size"}
            if shape_keys & set(diffs):
                raise ConfigMismatch(f"{path}: stored config differs in {', '.join(sorted(shape_keys & set(diffs)))}")
        validate_params(params, config)
    elif stored is not None:
        validate_params(params, stored)
    return params, stored if config is None else config


def init_from_pretrained(path: str | Path, config: EncoderConfig, seed: int = 0) -> EncoderParams:
    """Start from externally converted encoder tensors; anything absent
    from the file (typically the classifier head) is freshly initialised."""
    params = init_params(config, seed)
    loaded, _ = load_params(path)
    expected = param_shapes(config)
    unknown = [n for n in loaded if n not in expected]
    if unknown:
        raise ConfigMismatch(f"{path}: unknown tensor name(s) {', '.join(unknown[:5])}")
    for name, arr in loaded.items():
        if tuple(arr.shape) != expected[name]:
            raise ConfigMismatch(f"{name}: shape {tuple(arr.shape)} does not match config {expected[name]}")
        params[name] = arr
    return params
