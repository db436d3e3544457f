"""Labelled word samples drawn from a ground-truth machine.

Random draws use numpy's PCG64 generator seeded with the run seed, so a
given seed yields the same words on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .automata import FiniteStateMachine


@dataclass(frozen=True)
class LabeledDataset:
    """Words (tuples of symbol ids) with class labels.

    Entries ``[:split_index]`` are training data, the rest validation data.
    """

    words: tuple
    labels: np.ndarray
    split_index: int
    class_count: int

    def __len__(self):
        return len(self.words)

    @property
    def train_words(self):
        return self.words[: self.split_index]

    @property
    def train_labels(self):
        return self.labels[: self.split_index]

    @property
    def val_words(self):
        return self.words[self.split_index:]

    @property
    def val_labels(self):
        return self.labels[self.split_index:]


def _random_words(rng, num_symbols, n, len_range):
    lo, hi = len_range
    if lo < 0 or hi < lo:
        raise ValueError(f"invalid length range {len_range}")
    lengths = rng.integers(lo, hi + 1, size=n)
    flat = rng.integers(0, num_symbols, size=int(lengths.sum()))
    words = []
    pos = 0
    for length in lengths:
        words.append(tuple(int(a) for a in flat[pos:pos + length]))
        pos += length
    return words


def label_words(machine: FiniteStateMachine, words) -> np.ndarray:
    delta = machine.transitions
    classes = machine.class_vector()
    out = np.empty(len(words), dtype=np.int64)
    for i, w in enumerate(words):
        q = machine.initial
        for a in w:
            q = delta[q, a]
        out[i] = classes[q]
    return out


def sample_dataset(machine: FiniteStateMachine, n_total: int, len_range=(1, 15),
                   val_fraction: float = 2000 / 52000, seed: int = 0) -> LabeledDataset:
    """Sample ``n_total`` words with uniform length and uniform symbols.

    The last ``round(val_fraction * n_total)`` entries form the validation
    split. Duplicate words are allowed, also across splits.
    """
    if n_total < 1:
        raise ValueError("n_total must be positive")
    if len_range[0] < 1:
        raise ValueError("minimum word length must be at least 1")
    if not 0 <= val_fraction <= 1:
        raise ValueError("val_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    words = _random_words(rng, machine.num_symbols, n_total, len_range)
    n_val = int(round(val_fraction * n_total))
    return LabeledDataset(tuple(words), label_words(machine, words), n_total - n_val,
                          machine.num_classes)


def sample_accuracy_set(machine: FiniteStateMachine, n: int, len_range=(1, 50),
                        seed: int = 0) -> list:
    """Unlabelled words for accuracy validation (the AV set)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng([seed, 1])
    return _random_words(rng, machine.num_symbols, n, len_range)


def one_hot(symbol: int, alphabet_size: int) -> np.ndarray:
    if not 0 <= symbol < alphabet_size:
        raise IndexError(f"symbol id {symbol} outside alphabet of size {alphabet_size}")
    v = np.zeros(alphabet_size)
    v[symbol] = 1.0
    return v


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Write ``word<TAB>label`` lines; a header comment records the split and class count."""
    lines = [f"# split_index={dataset.split_index} class_count={dataset.class_count}"]
    for w, y in zip(dataset.words, dataset.labels):
        lines.append(" ".join(str(a) for a in w) + "\t" + str(int(y)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path) -> LabeledDataset:
    words, labels = [], []
    split_index = class_count = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                if key == "split_index":
                    split_index = int(value)
                elif key == "class_count":
                    class_count = int(value)
            continue
        if not line.strip():
            continue
        word, label = line.split("\t")
        words.append(tuple(int(a) for a in word.split()))
        labels.append(int(label))
    labels = np.array(labels, dtype=np.int64)
    if split_index is None:
        split_index = len(words)
    if class_count is None:
        class_count = int(labels.max()) + 1 if len(labels) else 0
    return LabeledDataset(tuple(words), labels, split_index, class_count)
