"""Exact encoding of a DFA into a one-layer tanh Elman network.

The hidden layer encodes transitions rather than states. With ``n = |Q|``
states and ``m = |Σ|`` symbols the hidden size is ``h = n*m`` and the
transition (q_i, e_j) owns position ``i + j*n``:

* ``pi(q_i, e_j)`` is ``+1`` at that position and ``-1`` elsewhere;
* ``psi(q_i)`` is ``+1`` at ``i + j*n`` for every symbol j and ``-1`` elsewhere.

``W_hh`` maps each ``pi`` to ``H_r * psi(target)``; the input weights then
mask out every symbol block except the one of the incoming symbol, and the
``-H_r/2`` input bias leaves exactly one positive pre-activation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rnn
from .automata import DFA, FiniteStateMachine, all_words, is_minimal
from .data import label_words
from .exceptions import FidelityCheckFailed, SingularSystem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstructionParams:
    H_r: float = 1.5
    H_o: float = 1.5
    wn: float = 0.05

    def __post_init__(self):
        if self.H_r <= 0 or self.H_o <= 0:
            raise ValueError("saturation factors must be positive")
        if self.wn < 0:
            raise ValueError("noise level must be non-negative")


PRESETS = (
    ConstructionParams(1.5, 1.5, 0.05),
    ConstructionParams(2.0, 2.0, 0.1),
    ConstructionParams(3.0, 3.0, 0.2),
)


def transition_position(i: int, j: int, num_states: int) -> int:
    return i + j * num_states


def transition_encodings(num_states: int, num_symbols: int) -> np.ndarray:
    """Matrix whose column ``i + j*n`` is ``pi(q_i, e_j)``; equals ``2I - 11^T``."""
    h = num_states * num_symbols
    return 2.0 * np.eye(h) - np.ones((h, h))


def saturated_encodings(num_states: int, num_symbols: int, H_r: float) -> np.ndarray:
    """Column ``c`` is the exact hidden vector the network emits for transition ``c``.

    After a step into transition (q, e) the pre-activation is ``+H_r/2`` at
    position (q, e), ``-3H_r/2`` elsewhere in block e, ``-H_r/2`` at q's
    positions in other blocks and ``-5H_r/2`` everywhere else.
    """
    n, m = num_states, num_symbols
    h = n * m
    state = np.arange(h) % n
    block = np.arange(h) // n
    same_state = state[:, None] == state[None, :]
    same_block = block[:, None] == block[None, :]
    pre = np.where(same_block, np.where(same_state, 0.5, -1.5), np.where(same_state, -0.5, -2.5))
    return np.tanh(H_r * pre)


def state_encoding(i: int, num_states: int, num_symbols: int) -> np.ndarray:
    psi = -np.ones(num_states * num_symbols)
    psi[[transition_position(i, j, num_states) for j in range(num_symbols)]] = 1.0
    return psi


def encoding_machine(dfa: FiniteStateMachine) -> FiniteStateMachine:
    """The DFA actually encoded by :func:`encode_dfa`.

    When no transition enters the initial state, its state encoding lies
    outside the image of ``W_hh`` and no start vector exists. We then append
    one unreachable state whose transitions all lead to the initial state;
    the language is unchanged and the start vector becomes exact.
    """
    if (dfa.transitions == dfa.initial).any():
        return dfa
    delta = np.vstack([dfa.transitions, np.full((1, dfa.num_symbols), dfa.initial)])
    return FiniteStateMachine(DFA, delta, dfa.initial, dfa.alphabet, dfa.accepting,
                              name=dfa.name)


def _targets(dfa):
    n, m = dfa.num_states, dfa.num_symbols
    target = np.empty(n * m, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            target[transition_position(i, j, n)] = dfa.transitions[i, j]
    return target


def _solve_right(Pi, rhs):
    """``X`` with ``X @ Pi = rhs``."""
    try:
        return np.linalg.solve(Pi.T, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("transition encoding matrix is singular") from exc


def encode_dfa(dfa: FiniteStateMachine, params: ConstructionParams = ConstructionParams(),
               encoding: str = "saturated", verify: bool = True, verify_samples: int = 2000,
               seed: int = 0) -> rnn.RnnModel:
    """Build the Elman network that simulates ``dfa``; noise is not applied here.

    ``encoding="saturated"`` solves the weight systems against the vectors
    the network actually produces (:func:`saturated_encodings`), which are
    then reproduced exactly at every step. ``encoding="ideal"`` solves against
    the +-1 vectors; its active unit shrinks from step to step unless H_r is
    large, so it typically fails verification for long words.

    With ``verify`` the network is checked against the DFA on all short
    words and on random long words (see :func:`check_fidelity`).
    """
    if dfa.kind != DFA:
        raise ValueError("only DFAs can be encoded")
    if not is_minimal(dfa):
        log.warning("encoding a non-minimal DFA (%d states)", dfa.num_states)
    source = dfa
    dfa = encoding_machine(dfa)
    n, m = dfa.num_states, dfa.num_symbols
    h = n * m
    if encoding == "ideal" and h == 2:
        raise SingularSystem("2I - 11^T is singular for a hidden size of 2")
    if encoding == "saturated":
        Pi = saturated_encodings(n, m, params.H_r)
    elif encoding == "ideal":
        Pi = transition_encodings(n, m)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    target = _targets(dfa)

    Psi = np.stack([state_encoding(int(target[c]), n, m) for c in range(h)], axis=1)
    W_hh = _solve_right(Pi, params.H_r * Psi)

    W_ih = np.full((h, m), -params.H_r)
    for p in range(h):
        W_ih[p, p // n] = 0.0
    b_ih = np.full(h, -0.5 * params.H_r)
    b_hh = np.zeros(h)

    # column c of T is the one-hot (reject, accept) class of transition c's target
    T = np.zeros((2, h))
    for c in range(h):
        T[int(target[c] in dfa.accepting), c] = 1.0
    W_ho = _solve_right(Pi, params.H_o * T)

    layer = {"weight_ih": W_ih, "weight_hh": W_hh, "bias_ih": b_ih, "bias_hh": b_hh}
    model = rnn.RnnModel("elman_tanh", [layer], W_ho, h, m, 2,
                         meta={"constructed": True, "encoding": encoding, "dfa": source.fingerprint(),
                               "pre_initial_state": dfa is not source,
                               "H_r": params.H_r, "H_o": params.H_o, "wn": 0.0})
    if verify:
        check_fidelity(model, source, initial_hidden(model, source, params),
                       samples=verify_samples, seed=seed)
    return model


def initial_hidden(model: rnn.RnnModel, dfa: FiniteStateMachine,
                   params: ConstructionParams = None) -> np.ndarray:
    """Least-squares start vector for a constructed network.

    Solves ``W_hh h0 = H_r psi(q0)`` jointly with ``W_ho h0 = H_o tau(q0 in F)``
    so that the first symbol lands on the encoding of its transition out of
    ``q0`` and the empty word is classified correctly. Raises
    :class:`SingularSystem` when the solution fails either requirement.
    """
    if params is None:
        params = ConstructionParams(model.meta.get("H_r", 1.5), model.meta.get("H_o", 1.5))
    dfa = encoding_machine(dfa)
    n, m = dfa.num_states, dfa.num_symbols
    if model.hidden_size != n * m:
        raise ValueError("model was not constructed from this DFA")
    layer = model.layers[0]
    tau = np.zeros(2)
    tau[int(dfa.initial in dfa.accepting)] = 1.0
    A = np.vstack([layer["weight_hh"], model.weight_ho])
    b = np.concatenate([params.H_r * state_encoding(dfa.initial, n, m), params.H_o * tau])
    h0 = np.linalg.lstsq(A, b, rcond=None)[0]

    if int(np.argmax(model.weight_ho @ h0)) != int(dfa.initial in dfa.accepting):
        raise SingularSystem("no start vector classifies the empty word correctly")
    eye = np.eye(m)
    for j in range(m):
        first = rnn.step(model, h0, eye[j])
        if int(np.argmax(first)) != transition_position(dfa.initial, j, n) or np.sum(first > 0) != 1:
            raise SingularSystem(f"start vector does not encode the transition (q0, {j})")
    return h0


def perturb(model: rnn.RnnModel, wn: float, seed: int = 0) -> rnn.RnnModel:
    """Add N(0, wn^2) noise to recurrent-layer weights and biases (not the output head)."""
    if wn < 0:
        raise ValueError("wn must be non-negative")
    out = model.copy()
    if wn == 0:
        return out
    rng = np.random.default_rng(seed)
    for layer in out.layers:
        for name in ("weight_ih", "weight_hh", "bias_ih", "bias_hh"):
            layer[name] += rng.normal(0.0, wn, size=layer[name].shape)
    out.meta["wn"] = wn
    out.meta["noise_seed"] = seed
    return out


def check_fidelity(model: rnn.RnnModel, dfa: FiniteStateMachine, h0, exhaustive_len: int = 8,
                   samples: int = 2000, max_len: int = 50, seed: int = 0) -> None:
    """Raise :class:`FidelityCheckFailed` on the first word the network gets wrong.

    Covers all words up to ``exhaustive_len`` (capped so at most ~10^5 words
    are enumerated) and ``samples`` random words of length 1..max_len.
    """
    m = dfa.num_symbols
    limit = exhaustive_len
    while limit > 0 and sum(m ** k for k in range(limit + 1)) > 100_000:
        limit -= 1
    words = list(all_words(m, limit))
    rng = np.random.default_rng(seed)
    lengths = rng.integers(1, max_len + 1, size=samples)
    words += [tuple(int(a) for a in rng.integers(0, m, size=k)) for k in lengths]
    truth = label_words(dfa, words)
    pred = rnn.predict_words(model, words, h0)
    bad = np.flatnonzero(pred != truth)
    if len(bad):
        w = words[bad[0]]
        raise FidelityCheckFailed(f"network disagrees with the DFA on {len(bad)} words, e.g. {w}")


def save_provenance(path, dfa: FiniteStateMachine, params: ConstructionParams, seed: int) -> None:
    Path(path).write_text(
        f"dfa\t{dfa.fingerprint()}\nH_r\t{params.H_r}\nH_o\t{params.H_o}\nwn\t{params.wn}\nseed\t{seed}\n",
        encoding="utf-8")
