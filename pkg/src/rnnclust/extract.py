"""Cluster automata: read a finite-state machine off a clustered trace.

Every cluster becomes a state. Consecutive records ``(h, h')`` of a word
joined by symbol ``e`` add the transition ``c(h) -e-> c(h')``; when a
(cluster, symbol) pair is seen going to several clusters the majority
target wins (ties go to the smallest cluster id). A DFA cluster accepts iff
the network accepts at any of its hidden states; a Moore cluster takes the
majority network output.

Only records reached by reading at least one symbol vote on a cluster's
class. The start vector is never classified during training (words have
length >= 1), so its output says nothing about the learned language; a
cluster seen only at step 0 gets the class ``UNOBSERVED``, which can only
affect the empty word.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import automata, probe, rnn
from .automata import DFA, MOORE, FiniteStateMachine
from .data import label_words
from .exceptions import EmptyTrace, IncompleteAutomaton, LengthMismatch

HOLE = -1
UNOBSERVED = -1


@dataclass
class ClusterAutomaton:
    """States are indices into ``cluster_ids``; ``HOLE`` marks unobserved transitions."""

    kind: str
    table: np.ndarray
    initial: int
    classes: np.ndarray
    cluster_ids: np.ndarray
    conflict_rate: float
    provenance: dict = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return self.table.shape[0]

    @property
    def holes(self) -> list:
        """Unobserved ``(cluster id, symbol id)`` pairs."""
        return [(self.cluster_ids[k].item(), int(a)) for k, a in zip(*np.nonzero(self.table == HOLE))]

    def reachable_holes(self) -> list:
        seen, stack, holes = {self.initial}, [self.initial], []
        while stack:
            k = stack.pop()
            for a, t in enumerate(self.table[k]):
                if t == HOLE:
                    holes.append((self.cluster_ids[k].item(), a))
                elif t not in seen:
                    seen.add(int(t))
                    stack.append(int(t))
        return sorted(holes)

    def run(self, word):
        """Class emitted after ``word``; ``None`` if the word runs into a hole."""
        k = self.initial
        for a in word:
            k = self.table[k, a]
            if k == HOLE:
                return None
        return int(self.classes[k])

    @property
    def unobserved(self) -> list:
        """Cluster ids whose class no classified record determined."""
        return [self.cluster_ids[k].item() for k in np.flatnonzero(self.classes == UNOBSERVED)]

    def to_machine(self, alphabet=None, output_alphabet=None, complete: bool = False,
                   unobserved_class: int = 0):
        """The extracted machine as a :class:`FiniteStateMachine`.

        With ``complete`` every hole leads to an added sink (rejecting, or
        emitting output 0); otherwise holes raise :class:`IncompleteAutomaton`.
        ``UNOBSERVED`` classes become ``unobserved_class``.
        """
        table = self.table
        classes = np.where(self.classes == UNOBSERVED, unobserved_class, self.classes)
        if (table == HOLE).any():
            if not complete:
                raise IncompleteAutomaton(self.holes)
            sink = self.num_states
            table = np.vstack([np.where(table == HOLE, sink, table), np.full((1, table.shape[1]), sink)])
            classes = np.append(classes, 0)
        alphabet = alphabet or tuple(str(a) for a in range(table.shape[1]))
        if self.kind == DFA:
            return FiniteStateMachine(DFA, table, self.initial, alphabet,
                                      frozenset(np.flatnonzero(classes == 1).tolist()),
                                      name="extracted")
        output_alphabet = output_alphabet or tuple(str(o) for o in range(int(classes.max()) + 1))
        return FiniteStateMachine(MOORE, table, self.initial, alphabet, outputs=tuple(classes.tolist()),
                                  output_alphabet=output_alphabet, name="extracted")


def _majority(values, weights=None) -> int:
    counts = np.bincount(values, weights=weights)
    return int(np.argmax(counts))  # argmax takes the first, i.e. smallest, id on ties


def extract_automaton(hq: probe.HQSample, labels, model: rnn.RnnModel, kind: str = DFA,
                      num_symbols: int = None, provenance: dict = None) -> ClusterAutomaton:
    """Build the cluster automaton of ``labels`` over the trace ``hq``.

    ``kind`` selects DFA acceptance (any hidden state accepted by the
    network, class 1) or Moore outputs (majority network class), both over
    the records at step >= 1.
    """
    labels = np.asarray(labels)
    if len(hq) == 0:
        raise EmptyTrace("no records to extract from")
    if len(labels) != len(hq):
        raise LengthMismatch(f"{len(labels)} labels for {len(hq)} records")
    if kind not in (DFA, MOORE):
        raise ValueError(f"unknown machine kind {kind!r}")
    m = model.input_size if num_symbols is None else num_symbols
    cluster_ids, c = np.unique(labels, return_inverse=True)
    c = c.reshape(-1)
    K = len(cluster_ids)

    prev, nxt, sym = hq.successor_pairs()
    table = np.full((K, m), HOLE, dtype=np.int64)
    conflicts = 0
    if len(prev):
        src, dst = c[prev], c[nxt]
        key = src * m + sym
        order = np.lexsort((dst, key))
        key, dst = key[order], dst[order]
        bounds = np.flatnonzero(np.diff(key)) + 1
        for kg, dg in zip(np.split(key, bounds), np.split(dst, bounds)):
            winner = _majority(dg)
            table[kg[0] // m, kg[0] % m] = winner
            conflicts += int((dg != winner).sum())
    conflict_rate = conflicts / len(prev) if len(prev) else 0.0

    out = probe.network_outputs(model, hq)
    classes = np.full(K, UNOBSERVED, dtype=np.int64)
    voted = hq.steps > 0
    for k in range(K):
        ok = out[(c == k) & voted]
        if len(ok):
            classes[k] = int((ok == 1).any()) if kind == DFA else _majority(ok)

    initial = _majority(c[hq.steps == 0])
    return ClusterAutomaton(kind, table, initial, classes, cluster_ids, conflict_rate,
                            dict(provenance or {}))


def verify_against_ground_truth(ca: ClusterAutomaton, machine: FiniteStateMachine, words,
                                complete: bool = True) -> dict:
    """Compare an extracted automaton with the ground truth.

    Reports the agreement rate on ``words`` and whether the (sink-completed,
    minimised) automaton is language-equivalent to ``machine``, with a
    counterexample when it is not. ``complete=False`` makes holes an error.
    An ``UNOBSERVED`` start class takes the ground truth's class of the empty
    word (flagged as ``empty_word_from_ground_truth``), so equivalence is
    then decided on non-empty words.
    """
    if ca.kind != machine.kind:
        raise ValueError("extracted automaton and ground truth differ in kind")
    words = [tuple(machine.symbol_ids(w)) for w in words]
    truth = label_words(machine, words)
    agree, first_bad = 0, None
    for w, t in zip(words, truth):
        got = ca.run(w)
        if got is None:
            raise IncompleteAutomaton(ca.reachable_holes())
        if got == t:
            agree += 1
        elif first_bad is None:
            first_bad = w
    holes = ca.holes
    empty_class = int(machine.class_vector()[machine.initial])
    extracted = ca.to_machine(machine.alphabet, machine.output_alphabet or None, complete=complete,
                              unobserved_class=empty_class)
    minimal = automata.minimize(extracted)
    same, cex = automata.equivalent(minimal, machine)
    if not same and first_bad is not None:
        cex = first_bad
    return {
        "agreement": agree / len(words) if words else 1.0,
        "equivalent": bool(same),
        "counterexample": None if cex is None else [machine.alphabet[a] for a in cex],
        "conflict_rate": ca.conflict_rate,
        "holes": [[k, machine.alphabet[a]] for k, a in holes],
        "completed_with_sink": bool(holes),
        "empty_word_from_ground_truth": bool(ca.classes[ca.initial] == UNOBSERVED),
        "extracted_states": ca.num_states,
        "minimized_states": minimal.num_states,
        "provenance": ca.provenance,
    }


def save_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
