"""Slow, obviously-correct reference implementations used by the tests."""

import itertools
import math

import numpy as np


def table_filling_classes(delta, classes):
    """Myhill-Nerode equivalence classes of the reachable states (pair marking).

    Returns the number of distinguishable reachable states.
    """
    n, m = delta.shape
    reach, stack = {0}, [0]
    while stack:
        q = stack.pop()
        for a in range(m):
            t = int(delta[q, a])
            if t not in reach:
                reach.add(t)
                stack.append(t)
    states = sorted(reach)
    marked = {(p, q) for p, q in itertools.combinations(states, 2) if classes[p] != classes[q]}
    changed = True
    while changed:
        changed = False
        for p, q in itertools.combinations(states, 2):
            if (p, q) in marked:
                continue
            for a in range(m):
                s, t = sorted((int(delta[p, a]), int(delta[q, a])))
                if s != t and (s, t) in marked:
                    marked.add((p, q))
                    changed = True
                    break
    # count classes with a union-find over unmarked pairs
    parent = {q: q for q in states}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for p, q in itertools.combinations(states, 2):
        if (p, q) not in marked:
            parent[find(q)] = find(p)
    return len({find(q) for q in states})


def dbscan_brute(X, eps, min_samples):
    """Density reachability by full distance matrix; noise is -1.

    Clusters are numbered by their lowest-index core point and border
    points join the earliest-numbered cluster with a core neighbour.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    adj = D <= eps
    core = adj.sum(1) >= min_samples
    labels = -np.ones(n, dtype=int)
    comp = -np.ones(n, dtype=int)
    c = 0
    for i in range(n):
        if core[i] and comp[i] < 0:
            comp[i] = c
            todo = [i]
            while todo:
                p = todo.pop()
                for j in np.flatnonzero(adj[p] & core):
                    if comp[j] < 0:
                        comp[j] = c
                        todo.append(j)
            c += 1
    for i in range(n):
        if core[i]:
            labels[i] = comp[i]
        else:
            nbr = comp[np.flatnonzero(adj[i] & core)]
            if len(nbr):
                labels[i] = nbr.min()
    return labels


def entropy_ambiguity(table, num_states):
    """Triple-loop ambiguity with natural logs rescaled by ln|Q|."""
    per = []
    sizes = []
    for row in table:
        n_k = sum(row)
        h = 0.0
        for c in row:
            if c:
                p = c / n_k
                h -= p * math.log(p)
        per.append(h / math.log(num_states))
        sizes.append(n_k)
    amb = sum(per) / len(per)
    wamb = sum(a * s for a, s in zip(per, sizes)) / sum(sizes)
    return per, amb, wamb


def bandwidth_brute(X, quantile):
    X = np.asarray(X, dtype=float)
    n = len(X)
    k = max(int(n * quantile), 1)
    total = 0.0
    for i in range(n):
        d = sorted(math.dist(X[i], X[j]) for j in range(n))
        total += d[k - 1]
    return total / n
