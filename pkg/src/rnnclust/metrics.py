"""Entropy-based ambiguity of a clustering with respect to automaton states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .exceptions import BaseTooSmall, ConstantSequence, LengthMismatch


@dataclass
class MetricsRecord:
    per_cluster_amb: dict
    amb: float
    wamb: float
    num_clusters: int
    num_points: int
    perfect: bool
    contingency: np.ndarray = field(repr=False)
    cluster_ids: np.ndarray = field(repr=False)

    def as_row(self) -> dict:
        return {"num_clusters": self.num_clusters, "amb": self.amb, "wamb": self.wamb,
                "perfect": self.perfect}


def contingency_table(states, labels, num_states: int):
    """Counts ``n[k, q]`` of records with cluster ``k`` and state ``q``.

    Returns the table (rows follow the sorted distinct cluster ids) and the ids.
    """
    states = np.asarray(states, dtype=np.int64)
    labels = np.asarray(labels)
    if states.shape != labels.shape:
        raise LengthMismatch(f"{len(labels)} labels for {len(states)} records")
    if len(states) and (states.min() < 0 or states.max() >= num_states):
        raise ValueError("record state outside 0..num_states-1")
    cluster_ids, inverse = np.unique(labels, return_inverse=True)
    table = np.zeros((len(cluster_ids), num_states), dtype=np.int64)
    np.add.at(table, (inverse, states), 1)
    return table, cluster_ids


def cluster_entropies(table: np.ndarray, num_states: int) -> np.ndarray:
    """Per-row entropy in base ``num_states``, with 0 log 0 = 0."""
    n_k = table.sum(axis=1, keepdims=True)
    p = table / np.where(n_k == 0, 1, n_k)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return np.clip(-terms.sum(axis=1) / np.log(num_states), 0.0, 1.0) + 0.0


def ambiguity(states, labels, num_states: int) -> MetricsRecord:
    """Ambiguity of cluster ``labels`` against automaton ``states``.

    ``states`` may also be an :class:`~rnnclust.probe.HQSample`. The log base
    is ``num_states`` (the ground-truth size, even if some states are absent).
    """
    if hasattr(states, "states"):
        states = states.states
    if num_states < 2:
        raise BaseTooSmall("ambiguity needs at least two automaton states")
    table, ids = contingency_table(states, labels, num_states)
    amb_k = cluster_entropies(table, num_states)
    n_k = table.sum(axis=1)
    N = int(n_k.sum())
    amb = float(amb_k.mean()) if len(amb_k) else 0.0
    wamb = float((amb_k * n_k).sum() / N) if N else 0.0
    perfect = bool((np.count_nonzero(table, axis=1) <= 1).all())
    return MetricsRecord({k.item(): float(a) for k, a in zip(ids, amb_k)}, amb, wamb, len(ids), N,
                         perfect, table, ids)


def is_optimal(labels, states) -> bool:
    """True iff some renaming maps every cluster to a single state (wamb = 0)."""
    if hasattr(states, "states"):
        states = states.states
    labels = np.asarray(labels)
    states = np.asarray(states)
    if labels.shape != states.shape:
        raise LengthMismatch(f"{len(labels)} labels for {len(states)} records")
    seen = {}
    for k, q in zip(labels.tolist(), states.tolist()):
        if seen.setdefault(k, q) != q:
            return False
    return True


def spearman(xs, ys) -> float:
    """Spearman rank correlation, averaging ranks of ties."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise LengthMismatch("sequences differ in length")
    if len(xs) < 3:
        raise LengthMismatch("need at least three pairs")
    rx, ry = rankdata(xs), rankdata(ys)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise ConstantSequence("rank correlation is undefined for a constant sequence")
    rx -= rx.mean()
    ry -= ry.mean()
    return float(np.clip((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)), -1.0, 1.0))
