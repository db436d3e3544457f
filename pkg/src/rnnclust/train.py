"""ADAM training with backpropagation through time."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import rnn
from .automata import FiniteStateMachine
from .data import LabeledDataset
from .exceptions import Diverged, EmptySet

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 0.0005
    batch_size: int = 64
    max_epochs: int = 100
    stop_after_perfect_epochs: int = 3
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    per_prefix_loss: bool = True
    keep_checkpoints: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.stop_after_perfect_epochs < 1:
            raise ValueError("stop_after_perfect_epochs must be at least 1")
        if self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("batch_size must be positive and max_epochs non-negative")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_acc: float
    checkpoint: Optional[rnn.RnnModel] = field(default=None, repr=False)


@dataclass
class TrainingHistory:
    records: list = field(default_factory=list)
    stopped_early: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def accuracies(self):
        return [r.val_acc for r in self.records]

    @property
    def losses(self):
        return [r.loss for r in self.records]

    def to_tsv(self) -> str:
        lines = ["epoch\tloss\tval_acc"]
        lines += [f"{r.epoch}\t{r.loss:.10g}\t{r.val_acc:.10g}" for r in self.records]
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


class Adam:
    """ADAM over a list of parameter arrays, updated in place."""

    def __init__(self, params, lr=0.0005, betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def loss(class_probs, label) -> float:
    """Cross-entropy ``-log p[label]`` with the probability clamped at 1e-12."""
    return -math.log(max(float(class_probs[label]), 1e-12))


def _prefix_labels(machine, words):
    delta = machine.transitions
    classes = machine.class_vector()
    out = np.empty(words.shape, dtype=np.int64)
    q = np.full(words.shape[0], machine.initial)
    for t in range(words.shape[1]):
        q = delta[q, words[:, t]]
        out[:, t] = classes[q]
    return out


def validate_accuracy(model: rnn.RnnModel, machine: FiniteStateMachine, words, h0=None) -> float:
    """Fraction of ``words`` whose predicted class matches the machine's label."""
    if len(words) == 0:
        raise EmptySet("accuracy set is empty")
    if model.input_size != machine.num_symbols:
        raise ValueError("model input size does not match the machine's alphabet")
    from .data import label_words

    truth = label_words(machine, words)
    return float(np.mean(rnn.predict_words(model, words, h0) == truth))


def train(model: rnn.RnnModel, dataset: LabeledDataset, config: TrainConfig = None,
          machine: FiniteStateMachine = None, h0=None,
          on_epoch: Callable = None) -> tuple:
    """Train a copy of ``model`` and return it with its history.

    Stops once validation accuracy has been 1.0 for
    ``config.stop_after_perfect_epochs`` consecutive epochs, or after
    ``config.max_epochs``. Epoch 0 is the untrained model.
    """
    config = config or TrainConfig()
    if len(dataset.labels) and dataset.labels.max() >= model.class_count:
        raise ValueError("dataset has more classes than the model")
    if config.per_prefix_loss and machine is None:
        raise ValueError("per-prefix loss needs the ground-truth machine")
    model = model.copy()
    params = [p for _, p in model.parameters()]
    opt = Adam(params, config.learning_rate, config.adam_betas, config.adam_eps)
    rng = np.random.default_rng(config.seed)
    train_words, train_labels = dataset.train_words, dataset.train_labels
    val_words, val_labels = dataset.val_words, dataset.val_labels

    buckets = {}
    for i, w in enumerate(train_words):
        buckets.setdefault(len(w), []).append(i)
    buckets = {k: np.array(v) for k, v in sorted(buckets.items())}

    def val_acc(m):
        if not len(val_words):
            return float("nan")
        return float(np.mean(rnn.predict_words(m, val_words, h0) == val_labels))

    history = TrainingHistory()

    def record(epoch, mean_loss, acc):
        snap = model.copy() if config.keep_checkpoints else None
        rec = EpochRecord(epoch, mean_loss, acc, snap)
        history.records.append(rec)
        if on_epoch is not None:
            on_epoch(rec, model)
        log.debug("epoch %d loss %.5f val_acc %.4f", epoch, mean_loss, acc)

    perfect_streak = 0
    for epoch in range(config.max_epochs + 1):
        if epoch == 0:
            acc = val_acc(model)
            record(0, float("nan"), acc)
            continue
        batches = []
        for length, idx in buckets.items():
            perm = idx[rng.permutation(len(idx))]
            for s in range(0, len(perm), config.batch_size):
                batches.append((length, perm[s:s + config.batch_size]))
        order = rng.permutation(len(batches))
        total, count = 0.0, 0
        for b in order:
            length, idx = batches[b]
            words = np.array([train_words[i] for i in idx], dtype=np.int64).reshape(len(idx), length)
            ppl = _prefix_labels(machine, words) if config.per_prefix_loss else None
            batch_loss, grads = rnn.loss_and_grads(model, words, train_labels[idx], h0, ppl)
            if not math.isfinite(batch_loss):
                raise Diverged(f"loss became {batch_loss} in epoch {epoch}")
            opt.step(grads)
            total += batch_loss * len(idx)
            count += len(idx)
        acc = val_acc(model)
        record(epoch, total / max(count, 1), acc)
        perfect_streak = perfect_streak + 1 if acc == 1.0 else 0
        if perfect_streak >= config.stop_after_perfect_epochs:
            history.stopped_early = True
            break
    return model, history


class RNNClassifier(ClassifierMixin, BaseEstimator):
    """Word classifier backed by a from-scratch recurrent network.

    ``fit`` takes a list of words (tuples of symbol ids) and their class ids.
    The last ``validation_fraction`` of the data drives the stopping rule.
    """

    def __init__(self, arch="gru", num_layers=1, hidden_size=8, learning_rate=0.0005,
                 batch_size=64, max_epochs=100, stop_after_perfect_epochs=3,
                 validation_fraction=0.1, random_state=0):
        self.arch = arch
        self.num_layers = num_layers
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.stop_after_perfect_epochs = stop_after_perfect_epochs
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y, n_symbols=None):
        words = [tuple(int(a) for a in w) for w in X]
        y = np.asarray(y, dtype=np.int64)
        if len(words) != len(y):
            raise ValueError("X and y have different lengths")
        self.classes_ = np.unique(y)
        n_symbols = n_symbols or (max((max(w) for w in words if w), default=0) + 1)
        n_val = int(round(self.validation_fraction * len(words)))
        ds = LabeledDataset(tuple(words), y, len(words) - n_val, int(y.max()) + 1)
        model = rnn.init_model(self.arch, self.num_layers, self.hidden_size, n_symbols,
                               ds.class_count, seed=self.random_state)
        config = TrainConfig(self.learning_rate, self.batch_size, self.max_epochs,
                             self.stop_after_perfect_epochs, per_prefix_loss=False,
                             seed=self.random_state)
        self.model_, self.history_ = train(model, ds, config)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return rnn.predict_words(self.model_, [tuple(w) for w in X])

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        out = np.empty((len(X), self.model_.class_count))
        for i, w in enumerate(X):
            out[i] = rnn.forward(self.model_, w)[1]
        return out

    def transform(self, X):
        """Observable hidden-state trace of each word, a list of (len+1, S) arrays."""
        check_is_fitted(self, "model_")
        return [rnn.forward(self.model_, w)[0] for w in X]
