"""Deterministic finite automata and Moore machines.

States and input symbols are dense integers ``0..n-1`` internally; the
printable names of symbols live in ``alphabet``. The initial state of every
machine built by this module is ``0``.

Text format (one declaration per line, ``#`` starts a comment)::

    kind dfa                  # or: kind moore
    states 4
    initial 0
    alphabet 0 1              # symbol names, whitespace separated
    accepting 0               # dfa only, may be empty
    output_alphabet a b       # moore only, optional
    outputs 0=a 1=b 2=a 3=b   # moore only
    trans 0 0 1               # src symbol-name dst, one per transition
"""

from __future__ import annotations

import hashlib
import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import AlphabetMismatch, GenerationExhausted, ParseError, UnknownSymbol

DFA = "dfa"
MOORE = "moore"


@dataclass(frozen=True, eq=False)
class FiniteStateMachine:
    """A complete deterministic machine, either a DFA or a Moore machine.

    Parameters
    ----------
    kind : {"dfa", "moore"}
    transitions : array of shape (n_states, n_symbols)
        ``transitions[q, a]`` is the successor of state ``q`` under symbol ``a``.
    initial : int
    alphabet : tuple of str
        Printable names of the input symbols, indexed by symbol id.
    accepting : frozenset of int
        Accepting states (DFA only).
    outputs : tuple of int
        Output id per state (Moore only), indexing ``output_alphabet``.
    output_alphabet : tuple of str
    """

    kind: str
    transitions: np.ndarray
    initial: int = 0
    alphabet: tuple = ()
    accepting: frozenset = frozenset()
    outputs: tuple = ()
    output_alphabet: tuple = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        delta = np.array(self.transitions, dtype=np.int64)
        if delta.ndim != 2 or delta.shape[0] < 1 or delta.shape[1] < 1:
            raise ValueError("transitions must be a non-empty (n_states, n_symbols) table")
        n, m = delta.shape
        delta.setflags(write=False)
        object.__setattr__(self, "transitions", delta)
        if not self.alphabet:
            object.__setattr__(self, "alphabet", tuple(str(a) for a in range(m)))
        object.__setattr__(self, "alphabet", tuple(str(a) for a in self.alphabet))
        object.__setattr__(self, "accepting", frozenset(int(q) for q in self.accepting))
        object.__setattr__(self, "outputs", tuple(int(o) for o in self.outputs))
        object.__setattr__(self, "output_alphabet", tuple(str(o) for o in self.output_alphabet))

        if self.kind not in (DFA, MOORE):
            raise ValueError(f"unknown machine kind {self.kind!r}")
        if len(self.alphabet) != m or len(set(self.alphabet)) != m:
            raise ValueError("alphabet must name every symbol column exactly once")
        if not 0 <= self.initial < n:
            raise ValueError("initial state out of range")
        if delta.min() < 0 or delta.max() >= n:
            raise ValueError("transition target out of range")
        if self.kind == DFA:
            if self.outputs or self.output_alphabet:
                raise ValueError("a DFA has no outputs")
            if any(not 0 <= q < n for q in self.accepting):
                raise ValueError("accepting state out of range")
        else:
            if self.accepting:
                raise ValueError("a Moore machine has no accepting set")
            if len(self.outputs) != n:
                raise ValueError("outputs must be defined for every state")
            if not self.output_alphabet:
                k = max(self.outputs) + 1
                object.__setattr__(self, "output_alphabet", tuple(str(o) for o in range(k)))
            if any(not 0 <= o < len(self.output_alphabet) for o in self.outputs):
                raise ValueError("output id out of range")

    # -- sizes -------------------------------------------------------------

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_transitions(self) -> int:
        return self.transitions.size

    @property
    def num_classes(self) -> int:
        return 2 if self.kind == DFA else len(self.output_alphabet)

    @property
    def states(self) -> range:
        return range(self.num_states)

    # -- labelling ---------------------------------------------------------

    def state_class(self, q: int) -> int:
        """Class id emitted in state ``q`` (1/0 for accept/reject, output id for Moore)."""
        if self.kind == DFA:
            return int(q in self.accepting)
        return self.outputs[q]

    def class_vector(self) -> np.ndarray:
        return np.array([self.state_class(q) for q in self.states], dtype=np.int64)

    def symbol_ids(self, word) -> list[int]:
        """Map a word given as symbol ids or symbol names to ids."""
        ids = []
        index = {a: i for i, a in enumerate(self.alphabet)}
        for s in word:
            if isinstance(s, (int, np.integer)) and not isinstance(s, bool):
                if not 0 <= s < self.num_symbols:
                    raise UnknownSymbol(s)
                ids.append(int(s))
            elif s in index:
                ids.append(index[s])
            else:
                raise UnknownSymbol(s)
        return ids

    def delta(self, q: int, word) -> int:
        for a in self.symbol_ids(word):
            q = int(self.transitions[q, a])
        return q

    def classify(self, word) -> int:
        return self.state_class(self.delta(self.initial, word))

    # -- equality / hashing ------------------------------------------------

    def structurally_equal(self, other: "FiniteStateMachine") -> bool:
        return (
            self.kind == other.kind
            and self.initial == other.initial
            and self.alphabet == other.alphabet
            and self.accepting == other.accepting
            and self.outputs == other.outputs
            and self.output_alphabet == other.output_alphabet
            and np.array_equal(self.transitions, other.transitions)
        )

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:16]

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<FiniteStateMachine{label} {self.kind} |Q|={self.num_states} |Σ|={self.num_symbols}>"


@dataclass(frozen=True)
class StateTrace:
    word: tuple
    visited: tuple


def run(machine: FiniteStateMachine, word) -> tuple:
    """Run ``machine`` on ``word``.

    Returns the label (bool for a DFA, output name for a Moore machine) and
    the visited state sequence, which has ``len(word) + 1`` entries.
    """
    ids = machine.symbol_ids(word)
    visited = [machine.initial]
    q = machine.initial
    for a in ids:
        q = int(machine.transitions[q, a])
        visited.append(q)
    if machine.kind == DFA:
        label = q in machine.accepting
    else:
        label = machine.output_alphabet[machine.outputs[q]]
    return label, StateTrace(tuple(ids), tuple(visited))


def reachable_states(machine: FiniteStateMachine) -> list[int]:
    """States reachable from the initial state, in BFS order (symbols ascending)."""
    seen = {machine.initial}
    order = [machine.initial]
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for a in range(machine.num_symbols):
            t = int(machine.transitions[q, a])
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


def _rebuild(machine, blocks_of, order, name=None):
    """Quotient ``machine`` by a state -> block map, numbering blocks by ``order``."""
    renumber = {b: i for i, b in enumerate(order)}
    n = len(order)
    delta = np.zeros((n, machine.num_symbols), dtype=np.int64)
    rep = {}
    for q in reachable_states(machine):
        rep.setdefault(blocks_of[q], q)
    for b, i in renumber.items():
        q = rep[b]
        for a in range(machine.num_symbols):
            delta[i, a] = renumber[blocks_of[int(machine.transitions[q, a])]]
    kw = dict(kind=machine.kind, transitions=delta, initial=0, alphabet=machine.alphabet,
              name=machine.name if name is None else name)
    if machine.kind == DFA:
        kw["accepting"] = {renumber[b] for b, q in rep.items() if q in machine.accepting}
    else:
        outs = [0] * n
        for b, q in rep.items():
            outs[renumber[b]] = machine.outputs[q]
        kw["outputs"] = outs
        kw["output_alphabet"] = machine.output_alphabet
    return FiniteStateMachine(**kw)


def canonical(machine: FiniteStateMachine) -> FiniteStateMachine:
    """Drop unreachable states and renumber the rest in BFS order."""
    order = reachable_states(machine)
    return _rebuild(machine, {q: q for q in range(machine.num_states)}, order)


def _hopcroft_blocks(machine: FiniteStateMachine, states: Sequence[int]) -> dict:
    """Coarsest partition of ``states`` compatible with outputs and transitions."""
    m = machine.num_symbols
    inverse = [[[] for _ in range(m)] for _ in range(machine.num_states)]
    for q in states:
        for a in range(m):
            inverse[int(machine.transitions[q, a])][a].append(q)

    groups = {}
    for q in states:
        groups.setdefault(machine.state_class(q), set()).add(q)
    partition = [frozenset(g) for _, g in sorted(groups.items())]
    block_of = {}
    for i, block in enumerate(partition):
        for q in block:
            block_of[q] = i

    worklist = deque((i, a) for i in range(len(partition)) for a in range(m))
    in_work = set(worklist)
    while worklist:
        splitter_id, a = worklist.popleft()
        in_work.discard((splitter_id, a))
        splitter = partition[splitter_id]
        predecessors = set()
        for t in splitter:
            predecessors.update(inverse[t][a])
        touched = {}
        for p in predecessors:
            touched.setdefault(block_of[p], set()).add(p)
        for bid, inside in sorted(touched.items()):
            block = partition[bid]
            if len(inside) == len(block):
                continue
            outside = block - inside
            inside = frozenset(inside)
            small, large = (inside, outside) if len(inside) <= len(outside) else (outside, inside)
            partition[bid] = large
            new_id = len(partition)
            partition.append(small)
            for q in small:
                block_of[q] = new_id
            # the new block always holds the smaller half, so queueing it suffices
            for b in range(m):
                if (new_id, b) not in in_work:
                    worklist.append((new_id, b))
                    in_work.add((new_id, b))
    return block_of


def minimize(machine: FiniteStateMachine) -> FiniteStateMachine:
    """Minimal equivalent machine via Hopcroft partition refinement.

    Unreachable states are removed first. The result is numbered canonically
    (BFS from the initial state), so minimizing equivalent machines yields
    structurally equal outputs.
    """
    states = reachable_states(machine)
    block_of = _hopcroft_blocks(machine, states)
    # canonical numbering: BFS order of the first reachable representative
    order = []
    seen = set()
    for q in _bfs_from(machine, block_of):
        if q not in seen:
            seen.add(q)
            order.append(q)
    return _rebuild(machine, block_of, order)


def _bfs_from(machine, block_of):
    start = block_of[machine.initial]
    order = [start]
    seen = {start}
    queue = deque([machine.initial])
    visited_states = {machine.initial}
    while queue:
        q = queue.popleft()
        for a in range(machine.num_symbols):
            t = int(machine.transitions[q, a])
            if block_of[t] not in seen:
                seen.add(block_of[t])
                order.append(block_of[t])
            if t not in visited_states:
                visited_states.add(t)
                queue.append(t)
    return order


def is_minimal(machine: FiniteStateMachine) -> bool:
    return minimize(machine).num_states == machine.num_states


def equivalent(m1: FiniteStateMachine, m2: FiniteStateMachine) -> tuple:
    """Check language equivalence by BFS over the product machine.

    Returns ``(True, None)`` or ``(False, word)`` where ``word`` is a shortest
    tuple of symbol ids on which the machines disagree.
    """
    if m1.kind != m2.kind:
        raise AlphabetMismatch(f"cannot compare a {m1.kind} with a {m2.kind}")
    if m1.alphabet != m2.alphabet:
        raise AlphabetMismatch(f"{m1.alphabet} != {m2.alphabet}")

    def out(m, q):
        if m.kind == DFA:
            return q in m.accepting
        return m.output_alphabet[m.outputs[q]]

    start = (m1.initial, m2.initial)
    parent = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        p, q = pair
        if out(m1, p) != out(m2, q):
            word = []
            while parent[pair] is not None:
                pair, a = parent[pair]
                word.append(a)
            return False, tuple(reversed(word))
        for a in range(m1.num_symbols):
            nxt = (int(m1.transitions[p, a]), int(m2.transitions[q, a]))
            if nxt not in parent:
                parent[nxt] = (pair, a)
                queue.append(nxt)
    return True, None


def generate_random(kind: str, num_states: int, alphabet_size: int, num_outputs: int = 2,
                    seed: int = 0, max_attempts: int = 10_000) -> FiniteStateMachine:
    """Sample a minimal, fully reachable machine.

    Transition targets are drawn uniformly per (state, symbol); acceptance
    (or the Moore output) is drawn uniformly per state. Draws that are not
    minimal or leave a state unreachable are rejected and redrawn.
    """
    if num_states < 2 or alphabet_size < 2:
        raise ValueError("need at least 2 states and 2 symbols")
    if kind == MOORE and num_outputs < 2:
        raise ValueError("need at least 2 outputs")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        delta = rng.integers(0, num_states, size=(num_states, alphabet_size))
        if kind == DFA:
            flags = rng.integers(0, 2, size=num_states)
            m = FiniteStateMachine(DFA, delta, accepting=np.flatnonzero(flags).tolist())
        elif kind == MOORE:
            outs = rng.integers(0, num_outputs, size=num_states)
            m = FiniteStateMachine(MOORE, delta, outputs=outs.tolist(),
                                   output_alphabet=tuple(str(o) for o in range(num_outputs)))
        else:
            raise ValueError(f"unknown machine kind {kind!r}")
        if len(reachable_states(m)) == num_states and is_minimal(m):
            m = canonical(m)
            name = f"random_{kind}_q{num_states}_s{alphabet_size}"
            if kind == MOORE:
                name += f"_o{num_outputs}"
            return _renamed(m, f"{name}_seed{seed}")
    raise GenerationExhausted(
        f"no minimal {kind} with {num_states} states over {alphabet_size} symbols "
        f"in {max_attempts} attempts"
    )


def _renamed(m, name):
    return FiniteStateMachine(m.kind, m.transitions, m.initial, m.alphabet, m.accepting,
                              m.outputs, m.output_alphabet, name=name)


# -- built-in languages --------------------------------------------------

_TOMITA7 = re.compile(r"0*1*0*1*")


def tomita_membership(n: int, word: str) -> bool:
    """Direct membership test for Tomita grammars 3, 5 and 7 over '0'/'1'."""
    if n == 3:
        # no odd maximal run of 1s may be immediately followed by an odd maximal run of 0s
        runs = [(sym, len(list(g))) for sym, g in itertools.groupby(word)]
        for (s1, l1), (s2, l2) in zip(runs, runs[1:]):
            if s1 == "1" and s2 == "0" and l1 % 2 == 1 and l2 % 2 == 1:
                return False
        return True
    if n == 5:
        return word.count("0") % 2 == 0 and word.count("1") % 2 == 0
    if n == 7:
        return _TOMITA7.fullmatch(word) is not None
    raise ValueError(f"Tomita grammar {n} is not built in")


def tomita(n: int) -> FiniteStateMachine:
    """Minimal DFA of Tomita grammar 3, 5 or 7 over the alphabet ('0', '1')."""
    if n == 3:
        # 0: no pending constraint, 1: odd run of 1s, 2: odd 0s after odd 1s,
        # 3: even 0s after odd 1s, 4: sink
        delta = [[0, 1], [2, 0], [3, 4], [2, 1], [4, 4]]
        accepting = {0, 1, 3}
    elif n == 5:
        # state = (parity of 0s, parity of 1s)
        delta = [[1, 2], [0, 3], [3, 0], [2, 1]]
        accepting = {0}
    elif n == 7:
        delta = [[0, 1], [2, 1], [2, 3], [4, 3], [4, 4]]
        accepting = {0, 1, 2, 3}
    else:
        raise ValueError(f"Tomita grammar {n} is not built in")
    return FiniteStateMachine(DFA, delta, 0, ("0", "1"), accepting, name=f"tomita{n}")


BUILTIN = {"tomita3": lambda: tomita(3), "tomita5": lambda: tomita(5), "tomita7": lambda: tomita(7)}


# -- serialization -------------------------------------------------------

def dumps(machine: FiniteStateMachine) -> str:
    lines = [f"kind {machine.kind}", f"states {machine.num_states}",
             f"initial {machine.initial}", "alphabet " + " ".join(machine.alphabet)]
    if machine.kind == DFA:
        lines.append("accepting " + " ".join(str(q) for q in sorted(machine.accepting)))
    else:
        lines.append("output_alphabet " + " ".join(machine.output_alphabet))
        lines.append("outputs " + " ".join(
            f"{q}={machine.output_alphabet[o]}" for q, o in enumerate(machine.outputs)))
    for q in machine.states:
        for a, sym in enumerate(machine.alphabet):
            lines.append(f"trans {q} {sym} {int(machine.transitions[q, a])}")
    return "\n".join(lines) + "\n"


def loads(text: str, name: str = "") -> FiniteStateMachine:
    decl = {}
    trans = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "trans":
            if len(rest) != 3:
                raise ParseError("expected 'trans src sym dst'", lineno)
            src, sym, dst = rest
            try:
                trans[(int(src), sym)] = (int(dst), lineno)
            except ValueError:
                raise ParseError(f"non-integer state in {line!r}", lineno) from None
        elif key in ("kind", "states", "initial", "alphabet", "accepting", "outputs",
                     "output_alphabet"):
            if key in decl:
                raise ParseError(f"duplicate '{key}' declaration", lineno)
            decl[key] = (rest, lineno)
        else:
            raise ParseError(f"unknown declaration {key!r}", lineno)

    for key in ("kind", "states", "alphabet"):
        if key not in decl:
            raise ParseError(f"missing '{key}' declaration")
    kind = decl["kind"][0][0] if decl["kind"][0] else ""
    if kind not in (DFA, MOORE):
        raise ParseError(f"unknown kind {kind!r}", decl["kind"][1])
    try:
        n = int(decl["states"][0][0])
        initial = int(decl.get("initial", (["0"], 0))[0][0])
    except (ValueError, IndexError):
        raise ParseError("states/initial must be integers", decl["states"][1]) from None
    alphabet = tuple(decl["alphabet"][0])
    sym_index = {s: i for i, s in enumerate(alphabet)}

    delta = np.full((n, len(alphabet)), -1, dtype=np.int64)
    for (src, sym), (dst, lineno) in trans.items():
        if sym not in sym_index:
            raise ParseError(f"unknown symbol {sym!r}", lineno)
        if not (0 <= src < n and 0 <= dst < n):
            raise ParseError(f"state out of range in transition {src} {sym} {dst}", lineno)
        delta[src, sym_index[sym]] = dst
    for q in range(n):
        for a, sym in enumerate(alphabet):
            if delta[q, a] < 0:
                raise ParseError(f"missing transition for (state {q}, symbol {sym!r})")

    kw = dict(kind=kind, transitions=delta, initial=initial, alphabet=alphabet, name=name)
    try:
        if kind == DFA:
            kw["accepting"] = [int(q) for q in decl.get("accepting", ([], 0))[0]]
        else:
            if "outputs" not in decl:
                raise ParseError("moore machine needs an 'outputs' declaration")
            pairs, lineno = decl["outputs"]
            outs = {}
            for item in pairs:
                q, _, o = item.partition("=")
                outs[int(q)] = o
            if "output_alphabet" in decl:
                out_alpha = tuple(decl["output_alphabet"][0])
            else:
                out_alpha = tuple(dict.fromkeys(outs[q] for q in sorted(outs)))
            missing = [q for q in range(n) if q not in outs]
            if missing:
                raise ParseError(f"no output for states {missing}", lineno)
            kw["outputs"] = [out_alpha.index(outs[q]) for q in range(n)]
            kw["output_alphabet"] = out_alpha
        return FiniteStateMachine(**kw)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def save(machine: FiniteStateMachine, path) -> None:
    Path(path).write_text(dumps(machine), encoding="utf-8")


def load(path) -> FiniteStateMachine:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), name=path.stem)


def to_dot(machine: FiniteStateMachine) -> str:
    """Graphviz rendering with one edge per transition."""
    lines = ["digraph automaton {", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in machine.states:
        if machine.kind == DFA:
            shape = "doublecircle" if q in machine.accepting else "circle"
            lines.append(f'  q{q} [shape={shape}, label="q{q}"];')
        else:
            out = machine.output_alphabet[machine.outputs[q]]
            lines.append(f'  q{q} [shape=circle, label="q{q}/{out}"];')
    lines.append(f"  __start -> q{machine.initial};")
    for q in machine.states:
        for a, sym in enumerate(machine.alphabet):
            lines.append(f'  q{q} -> q{int(machine.transitions[q, a])} [label="{sym}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def all_words(num_symbols: int, max_len: int) -> Iterable[tuple]:
    """Every word of length ``0..max_len`` as tuples of symbol ids, shortest first."""
    for length in range(max_len + 1):
        yield from itertools.product(range(num_symbols), repeat=length)
