"""Co-simulate a network and its ground-truth machine to label hidden states."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rnn
from .automata import FiniteStateMachine
from .exceptions import ShapeMismatch, UnknownSymbol


@dataclass(frozen=True)
class HQSample:
    """Hidden vectors paired with automaton states, one record per prefix.

    Records are ordered by word, then by step; step 0 of every word holds
    ``(h0, q0)``. ``symbols[i]`` is the symbol consumed to reach record
    ``i`` (-1 at step 0).
    """

    hidden: np.ndarray
    states: np.ndarray
    steps: np.ndarray
    word_ids: np.ndarray
    symbols: np.ndarray
    num_states: int

    def __len__(self):
        return len(self.states)

    @property
    def pairs(self):
        return list(zip(self.hidden, self.states))

    def distinct_hidden(self, decimals: int = 12) -> int:
        """Number of distinct hidden vectors (reporting only)."""
        return len(np.unique(np.round(self.hidden, decimals), axis=0))

    def subset(self, idx) -> "HQSample":
        idx = np.asarray(idx)
        return HQSample(self.hidden[idx], self.states[idx], self.steps[idx], self.word_ids[idx],
                        self.symbols[idx], self.num_states)

    def successor_pairs(self):
        """Indices ``(i, j)`` of consecutive records within a word, and the symbol between them."""
        nxt = np.arange(1, len(self))
        prev = nxt - 1
        keep = self.steps[nxt] > 0
        return prev[keep], nxt[keep], self.symbols[nxt[keep]]


def collect_hq(machine: FiniteStateMachine, model: rnn.RnnModel, h0, words) -> HQSample:
    """Run every word on both the network and the machine.

    Produces ``sum(len(w) + 1)`` records. Hidden vectors are the model's
    observable state (all layers; ``[h; c]`` for LSTM layers).
    """
    if model.input_size != machine.num_symbols:
        raise ShapeMismatch("model input size differs from the machine's alphabet size")
    h0 = np.zeros(model.state_size) if h0 is None else np.asarray(h0, dtype=float)
    if h0.shape != (model.state_size,):
        raise ShapeMismatch(f"h0 has shape {h0.shape}, model state size is {model.state_size}")
    words = [tuple(machine.symbol_ids(w)) for w in words]

    lengths = np.array([len(w) for w in words], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths + 1)])
    total = int(offsets[-1])
    hidden = np.empty((total, model.state_size))
    states = np.empty(total, dtype=np.int64)
    steps = np.empty(total, dtype=np.int64)
    word_ids = np.empty(total, dtype=np.int64)
    symbols = np.full(total, -1, dtype=np.int64)

    for i, w in enumerate(words):
        o = offsets[i]
        steps[o:o + len(w) + 1] = np.arange(len(w) + 1)
        word_ids[o:o + len(w) + 1] = i
        symbols[o + 1:o + len(w) + 1] = w
        q = machine.initial
        states[o] = q
        for t, a in enumerate(w):
            q = int(machine.transitions[q, a])
            states[o + t + 1] = q

    for idx, arr in rnn._length_buckets(words, 1024):
        traces = rnn.forward_batch(model, arr, h0)
        for row, i in enumerate(idx):
            o = offsets[i]
            hidden[o:o + lengths[i] + 1] = traces[row]
    return HQSample(hidden, states, steps, word_ids, symbols, machine.num_states)


def network_outputs(model: rnn.RnnModel, hq: HQSample) -> np.ndarray:
    """Argmax class the network emits from each recorded hidden vector."""
    return np.argmax(rnn.output_probs(model, hq.hidden), axis=1)


def dump_hq(hq: HQSample, path) -> None:
    """Write ``word_id<TAB>step<TAB>state<TAB>v1 v2 ...`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# num_states={hq.num_states}\n")
        for i in range(len(hq)):
            vec = " ".join(repr(float(v)) for v in hq.hidden[i])
            fh.write(f"{hq.word_ids[i]}\t{hq.steps[i]}\t{hq.states[i]}\t{vec}\n")


def load_hq(path, words=None) -> HQSample:
    """Read a dump written by :func:`dump_hq`.

    Symbols are not part of the dump; pass the probed ``words`` to restore them.
    """
    num_states = None
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                if key == "num_states":
                    num_states = int(value)
            continue
        if line.strip():
            wid, st, q, vec = line.split("\t")
            rows.append((int(wid), int(st), int(q), [float(v) for v in vec.split()]))
    word_ids = np.array([r[0] for r in rows], dtype=np.int64)
    steps = np.array([r[1] for r in rows], dtype=np.int64)
    states = np.array([r[2] for r in rows], dtype=np.int64)
    hidden = np.array([r[3] for r in rows], dtype=float)
    symbols = np.full(len(rows), -1, dtype=np.int64)
    if words is not None:
        for i in range(len(rows)):
            if steps[i] > 0:
                w = words[word_ids[i]]
                if steps[i] > len(w):
                    raise UnknownSymbol(f"record {i} is past the end of word {word_ids[i]}")
                symbols[i] = w[steps[i] - 1]
    if num_states is None:
        num_states = int(states.max()) + 1
    return HQSample(hidden, states, steps, word_ids, symbols, num_states)
