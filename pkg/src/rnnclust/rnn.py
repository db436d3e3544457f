"""Elman, GRU and LSTM recurrent classifiers in plain numpy.

Cell equations and gate layouts follow the PyTorch conventions: per layer
``weight_ih`` has shape ``(G*H, in)``, ``weight_hh`` ``(G*H, H)`` with gate
blocks stacked along the first axis (GRU: r, z, n; LSTM: i, f, g, o).

The observable state of a model is the concatenation over layers of each
layer's state, where an LSTM layer contributes ``[h; c]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ShapeMismatch

ARCHITECTURES = ("elman_tanh", "elman_relu", "gru", "lstm")
_GATES = {"elman_tanh": 1, "elman_relu": 1, "gru": 3, "lstm": 4}


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class RnnModel:
    """Parameters of a stacked recurrent classifier.

    ``layers`` holds one dict per layer with keys ``weight_ih``,
    ``weight_hh``, ``bias_ih`` and ``bias_hh``. ``weight_ho`` is the
    bias-free output head of shape ``(class_count, hidden_size)``.
    """

    arch: str
    layers: list
    weight_ho: np.ndarray
    hidden_size: int
    input_size: int
    class_count: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        g, h = _GATES[self.arch], self.hidden_size
        for k, layer in enumerate(self.layers):
            fan_in = self.input_size if k == 0 else h
            expected = {"weight_ih": (g * h, fan_in), "weight_hh": (g * h, h),
                        "bias_ih": (g * h,), "bias_hh": (g * h,)}
            for name, shape in expected.items():
                if layer[name].shape != shape:
                    raise ShapeMismatch(f"layer {k} {name}: {layer[name].shape} != {shape}")
        if self.weight_ho.shape != (self.class_count, h):
            raise ShapeMismatch(f"weight_ho: {self.weight_ho.shape} != {(self.class_count, h)}")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_state_size(self) -> int:
        return 2 * self.hidden_size if self.arch == "lstm" else self.hidden_size

    @property
    def state_size(self) -> int:
        return self.num_layers * self.layer_state_size

    def parameters(self):
        """``(name, array)`` pairs in a fixed order; arrays are live references."""
        out = []
        for k, layer in enumerate(self.layers):
            for name in ("weight_ih", "weight_hh", "bias_ih", "bias_hh"):
                out.append((f"l{k}.{name}", layer[name]))
        out.append(("weight_ho", self.weight_ho))
        return out

    def copy(self) -> "RnnModel":
        return RnnModel(self.arch, [{k: v.copy() for k, v in layer.items()} for layer in self.layers],
                        self.weight_ho.copy(), self.hidden_size, self.input_size,
                        self.class_count, dict(self.meta))

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.state_size)


def init_model(arch: str, num_layers: int, hidden_size: int, input_size: int,
               class_count: int, seed: int = 0) -> RnnModel:
    """Randomly initialised model, every weight uniform in ``[-1/sqrt(H), 1/sqrt(H)]``."""
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}")
    if hidden_size < 1 or num_layers < 1:
        raise ValueError("hidden_size and num_layers must be positive")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(hidden_size)
    g = _GATES[arch]
    layers = []
    for k in range(num_layers):
        fan_in = input_size if k == 0 else hidden_size
        layers.append({
            "weight_ih": rng.uniform(-bound, bound, (g * hidden_size, fan_in)),
            "weight_hh": rng.uniform(-bound, bound, (g * hidden_size, hidden_size)),
            "bias_ih": rng.uniform(-bound, bound, g * hidden_size),
            "bias_hh": rng.uniform(-bound, bound, g * hidden_size),
        })
    weight_ho = rng.uniform(-bound, bound, (class_count, hidden_size))
    return RnnModel(arch, layers, weight_ho, hidden_size, input_size, class_count)


# -- cells -----------------------------------------------------------------

def _cell_forward(arch, p, x, state):
    """One step of one layer on a batch. ``x``: (B, in); ``state``: (B, S).

    Returns the new state and a cache for the backward pass.
    """
    H = p["weight_hh"].shape[1]
    gi = x @ p["weight_ih"].T + p["bias_ih"]
    if arch == "lstm":
        h, c = state[:, :H], state[:, H:]
        a = gi + h @ p["weight_hh"].T + p["bias_hh"]
        i = sigmoid(a[:, :H])
        f = sigmoid(a[:, H:2 * H])
        g = np.tanh(a[:, 2 * H:3 * H])
        o = sigmoid(a[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        return np.concatenate([h_new, c_new], axis=1), (x, h, c, i, f, g, o, tc)
    h = state
    gh = h @ p["weight_hh"].T + p["bias_hh"]
    if arch == "gru":
        r = sigmoid(gi[:, :H] + gh[:, :H])
        z = sigmoid(gi[:, H:2 * H] + gh[:, H:2 * H])
        n = np.tanh(gi[:, 2 * H:] + r * gh[:, 2 * H:])
        h_new = (1.0 - z) * n + z * h
        return h_new, (x, h, r, z, n, gh[:, 2 * H:])
    a = gi + gh
    if arch == "elman_tanh":
        h_new = np.tanh(a)
    else:
        h_new = np.maximum(a, 0.0)
    return h_new, (x, h, h_new)


def _cell_backward(arch, p, cache, d_state, grads):
    """Accumulate parameter gradients into ``grads``; return (d_x, d_prev_state)."""
    H = p["weight_hh"].shape[1]
    if arch == "lstm":
        x, h, c, i, f, g, o, tc = cache
        dh, dc = d_state[:, :H], d_state[:, H:]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        dgi = dgh = da
        d_prev = np.concatenate([da @ p["weight_hh"], dc * f], axis=1)
    elif arch == "gru":
        x, h, r, z, n, ghn = cache
        dh = d_state
        dn = dh * (1.0 - z)
        dz = dh * (h - n)
        dan = dn * (1.0 - n * n)
        dar = dan * ghn * r * (1.0 - r)
        daz = dz * z * (1.0 - z)
        dgi = np.concatenate([dar, daz, dan], axis=1)
        dgh = np.concatenate([dar, daz, dan * r], axis=1)
        d_prev = dh * z + dgh @ p["weight_hh"]
    else:
        x, h, h_new = cache
        if arch == "elman_tanh":
            da = d_state * (1.0 - h_new * h_new)
        else:
            da = d_state * (h_new > 0.0)
        dgi = dgh = da
        d_prev = da @ p["weight_hh"]
    grads["weight_ih"] += dgi.T @ x
    grads["bias_ih"] += dgi.sum(axis=0)
    grads["weight_hh"] += dgh.T @ h
    grads["bias_hh"] += dgh.sum(axis=0)
    return dgi @ p["weight_ih"], d_prev


# -- inference --------------------------------------------------------------

def _check_state(model, h0, batch):
    if h0 is None:
        return np.zeros((batch, model.state_size))
    h0 = np.asarray(h0, dtype=float)
    if h0.shape[-1] != model.state_size:
        raise ShapeMismatch(f"state of size {h0.shape[-1]}, model expects {model.state_size}")
    return np.broadcast_to(h0, (batch, model.state_size)).copy()


def _top_hidden(model, states):
    """Top-layer ``h`` part of an observable state batch."""
    S = model.layer_state_size
    top = states[..., (model.num_layers - 1) * S:]
    return top[..., :model.hidden_size]


def _as_input(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.input_size:
        raise ShapeMismatch(f"input of size {x.shape[-1]}, model expects {model.input_size}")
    return x


def step(model: RnnModel, hidden, x) -> np.ndarray:
    """Apply the recurrent update once to an observable state and an input vector."""
    x = _as_input(model, x)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    state = _check_state(model, hidden, xb.shape[0])
    out = _step_batch(model, state, xb)[0]
    return out[0] if single else out


def _step_batch(model, state, x):
    S = model.layer_state_size
    new_parts, caches = [], []
    inp = x
    for k, p in enumerate(model.layers):
        s_new, cache = _cell_forward(model.arch, p, inp, state[:, k * S:(k + 1) * S])
        new_parts.append(s_new)
        caches.append(cache)
        inp = s_new[:, :model.hidden_size]
    return np.concatenate(new_parts, axis=1), caches


def output_probs(model: RnnModel, states) -> np.ndarray:
    """Class probabilities read from observable state(s)."""
    return softmax(_top_hidden(model, np.asarray(states, dtype=float)) @ model.weight_ho.T)


def forward(model: RnnModel, word, h0=None) -> tuple:
    """Run one word (sequence of symbol ids or one-hot rows).

    Returns the observable-state trace of length ``len(word) + 1`` (starting
    with ``h0``) and the class probabilities after the last symbol.
    """
    eye = np.eye(model.input_size)
    if len(word) and np.ndim(word[0]) > 0:
        xs = _as_input(model, np.asarray(word, dtype=float))
    else:
        ids = [int(a) for a in word]
        if any(not 0 <= a < model.input_size for a in ids):
            raise ShapeMismatch("symbol id outside the model's input alphabet")
        xs = eye[ids] if ids else np.zeros((0, model.input_size))
    state = _check_state(model, h0, 1)
    trace = [state[0].copy()]
    for x in xs:
        state, _ = _step_batch(model, state, x[None, :])
        trace.append(state[0].copy())
    trace = np.array(trace)
    return trace, output_probs(model, trace[-1])


def forward_batch(model: RnnModel, words, h0=None) -> np.ndarray:
    """Observable-state traces for equal-length words: array (B, T+1, S)."""
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    B, T = words.shape
    eye = np.eye(model.input_size)
    state = _check_state(model, h0, B)
    out = np.empty((B, T + 1, model.state_size))
    out[:, 0] = state
    for t in range(T):
        state, _ = _step_batch(model, state, eye[words[:, t]])
        out[:, t + 1] = state
    return out


def predict_words(model: RnnModel, words, h0=None, batch_size: int = 512) -> np.ndarray:
    """Argmax class of every word; words are grouped by length internally."""
    preds = np.empty(len(words), dtype=np.int64)
    for idx, arr in _length_buckets(words, batch_size):
        final = forward_batch(model, arr, h0)[:, -1]
        preds[idx] = np.argmax(_top_hidden(model, final) @ model.weight_ho.T, axis=1)
    return preds


def _length_buckets(words, batch_size):
    by_len = {}
    for i, w in enumerate(words):
        by_len.setdefault(len(w), []).append(i)
    for length in sorted(by_len):
        idx = by_len[length]
        for s in range(0, len(idx), batch_size):
            chunk = np.array(idx[s:s + batch_size])
            arr = np.array([words[i] for i in chunk], dtype=np.int64).reshape(len(chunk), length)
            yield chunk, arr


# -- loss and gradients ---------------------------------------------------------

def loss_and_grads(model: RnnModel, words, labels, h0=None, per_prefix_labels=None):
    """Mean cross-entropy of a batch of equal-length words and its BPTT gradient.

    With ``per_prefix_labels`` of shape (B, T) the loss averages over every
    prefix of length 1..T instead of only the full word.

    Returns ``(loss, grads)`` where ``grads`` parallels ``model.parameters()``.
    """
    words = np.asarray(words, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    B, T = words.shape
    eye = np.eye(model.input_size)
    S = model.layer_state_size
    H = model.hidden_size
    state = _check_state(model, h0, B)
    caches, tops = [], []
    for t in range(T):
        state, cache = _step_batch(model, state, eye[words[:, t]])
        caches.append(cache)
        tops.append(_top_hidden(model, state))

    layer_grads = [{k: np.zeros_like(v) for k, v in p.items()} for p in model.layers]
    g_ho = np.zeros_like(model.weight_ho)
    d_top = [None] * T

    def head(t, targets, scale):
        probs = softmax(tops[t] @ model.weight_ho.T)
        picked = np.clip(probs[np.arange(B), targets], 1e-12, None)
        dlogits = probs.copy()
        dlogits[np.arange(B), targets] -= 1.0
        dlogits *= scale
        nonlocal g_ho
        g_ho += dlogits.T @ tops[t]
        d = dlogits @ model.weight_ho
        d_top[t] = d if d_top[t] is None else d_top[t] + d
        return -np.log(picked).sum() * scale

    if T == 0:
        probs = output_probs(model, state)
        picked = np.clip(probs[np.arange(B), labels], 1e-12, None)
        return float(-np.log(picked).mean()), [np.zeros_like(a) for _, a in model.parameters()]

    if per_prefix_labels is None:
        loss = head(T - 1, labels, 1.0 / B)
    else:
        per_prefix_labels = np.asarray(per_prefix_labels, dtype=np.int64)
        loss = sum(head(t, per_prefix_labels[:, t], 1.0 / (B * T)) for t in range(T))

    L = model.num_layers
    d_next = np.zeros((B, L * S))
    for t in reversed(range(T)):
        d_state = d_next.copy()
        if d_top[t] is not None:
            d_state[:, (L - 1) * S:(L - 1) * S + H] += d_top[t]
        d_next = np.zeros_like(d_state)
        d_from_above = None
        for k in reversed(range(L)):
            d_k = d_state[:, k * S:(k + 1) * S].copy()
            if d_from_above is not None:
                d_k[:, :H] += d_from_above
            d_x, d_prev = _cell_backward(model.arch, model.layers[k], caches[t][k], d_k,
                                         layer_grads[k])
            d_next[:, k * S:(k + 1) * S] = d_prev
            d_from_above = d_x
    grads = []
    for g in layer_grads:
        grads.extend([g["weight_ih"], g["weight_hh"], g["bias_ih"], g["bias_hh"]])
    grads.append(g_ho)
    return float(loss), grads


# -- checkpoints -----------------------------------------------------------

def save_model(model: RnnModel, path) -> None:
    """Write an ``.npz`` archive of named tensors plus a JSON header entry."""
    header = {"arch": model.arch, "hidden_size": model.hidden_size, "input_size": model.input_size,
              "class_count": model.class_count, "num_layers": model.num_layers, "meta": model.meta}
    arrays = {name: arr for name, arr in model.parameters()}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> RnnModel:
    with np.load(Path(path)) as data:
        header = json.loads(bytes(data["__header__"]).decode())
        layers = []
        for k in range(header["num_layers"]):
            layers.append({name: data[f"l{k}.{name}"].copy()
                           for name in ("weight_ih", "weight_hh", "bias_ih", "bias_hh")})
        weight_ho = data["weight_ho"].copy()
    return RnnModel(header["arch"], layers, weight_ho, header["hidden_size"], header["input_size"],
                    header["class_count"], header.get("meta", {}))
