"""Clustering of hidden-state vectors.

k-means, DBSCAN and mean shift are implemented here; OPTICS delegates to
scikit-learn's xi-extraction. All use Euclidean distance. DBSCAN/OPTICS
noise points are turned into singleton clusters numbered after the real
clusters, so every assignment labels points ``0..num_clusters-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.cluster import OPTICS as _SkOPTICS
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DegenerateData, TooFewPoints, ZeroBandwidth


@dataclass
class ClusteringAssignment:
    labels: np.ndarray
    method: str
    params: dict
    num_clusters: int
    centroids: Optional[np.ndarray] = field(default=None, repr=False)
    num_noise: int = 0

    def to_tsv(self) -> str:
        return "point_index\tcluster_label\n" + "".join(
            f"{i}\t{k}\n" for i, k in enumerate(self.labels.tolist()))

    def sidecar(self) -> dict:
        return {"method": self.method, "params": self.params, "num_clusters": self.num_clusters,
                "num_noise": self.num_noise}


def normalize_noise(labels) -> tuple:
    """Replace -1 labels by fresh singleton ids; returns (labels, num_clusters, num_noise)."""
    labels = np.asarray(labels, dtype=np.int64).copy()
    noise = np.flatnonzero(labels < 0)
    real = np.unique(labels[labels >= 0])
    remap = {k: i for i, k in enumerate(real.tolist())}
    out = np.array([remap.get(k, -1) for k in labels.tolist()], dtype=np.int64)
    out[noise] = len(real) + np.arange(len(noise))
    return out, len(real) + len(noise), len(noise)


def _sq_dists(X, C, x_sq=None):
    x_sq = (X * X).sum(axis=1) if x_sq is None else x_sq
    d = x_sq[:, None] - 2.0 * X @ C.T + (C * C).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _unique_rows(X):
    """Distinct rows in order of first occurrence, their weights and the inverse map."""
    _, first, inverse, counts = np.unique(X, axis=0, return_index=True, return_inverse=True,
                                          return_counts=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return X[first[order]], counts[order], rank[inverse.reshape(-1)]


# -- k-means ------------------------------------------------------------------

def _kmeans_plusplus(X, k, rng, x_sq):
    n = len(X)
    n_trials = 2 + int(math.log(k))
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = _sq_dists(X, X[first:first + 1], x_sq)[:, 0]
    for c in range(1, k):
        pot = closest.sum()
        if pot <= 0:
            centers[c:] = X[rng.integers(n, size=k - c)]
            break
        cand = np.searchsorted(np.cumsum(closest), rng.random(n_trials) * pot)
        cand = np.minimum(cand, n - 1)
        d_cand = np.minimum(closest[None, :], _sq_dists(X, X[cand], x_sq).T)
        best = int(np.argmin(d_cand.sum(axis=1)))
        centers[c] = X[cand[best]]
        closest = d_cand[best]
    return centers


def _lloyd(X, centers, max_iter, tol, x_sq):
    for it in range(max_iter):
        d = _sq_dists(X, centers, x_sq)
        labels = np.argmin(d, axis=1)
        counts = np.bincount(labels, minlength=len(centers))
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        empty = counts == 0
        new[~empty] /= counts[~empty, None]
        if empty.any():
            # relocate empty clusters to the points farthest from their centroid
            far = np.argsort(-d[np.arange(len(X)), labels], kind="stable")[:empty.sum()]
            new[empty] = X[far]
        shift = ((new - centers) ** 2).sum()
        centers = new
        if shift <= tol:
            break
    d = _sq_dists(X, centers, x_sq)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    return labels, centers, inertia, it + 1


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd's k-means with k-means++ seeding and ``n_init`` restarts.

    Attributes after ``fit``: ``labels_``, ``cluster_centers_``, ``inertia_``
    and ``restart_inertias_`` (one entry per restart).
    """

    def __init__(self, n_clusters=8, n_init=10, max_iter=300, tol=1e-4, random_state=0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        k = self.n_clusters
        if k < 1:
            raise ValueError("n_clusters must be at least 1")
        distinct = len(np.unique(X, axis=0))
        if k > distinct:
            raise TooFewPoints(f"k = {k} exceeds the {distinct} distinct points")
        rng = np.random.default_rng(self.random_state)
        x_sq = (X * X).sum(axis=1)
        tol = self.tol * float(np.mean(np.var(X, axis=0)))
        best = None
        self.restart_inertias_ = []
        for _ in range(self.n_init):
            centers = _kmeans_plusplus(X, k, rng, x_sq)
            labels, centers, inertia, n_iter = _lloyd(X, centers, self.max_iter, tol, x_sq)
            self.restart_inertias_.append(inertia)
            if best is None or inertia < best[2]:
                best = (labels, centers, inertia, n_iter)
        self.labels_, self.cluster_centers_, self.inertia_, self.n_iter_ = best
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)


# -- DBSCAN -------------------------------------------------------------------

class DBSCAN(ClusterMixin, BaseEstimator):
    """Density-based clustering; a point is core if at least ``min_samples``
    points (itself included) lie within distance ``eps``.

    Clusters are numbered in order of their lowest-index core point; a border
    point joins the first cluster that reaches it. ``labels_`` keeps -1 for
    noise; ``assignment_`` holds the singleton-normalised labels.
    """

    def __init__(self, eps=0.5, min_samples=5):
        self.eps = eps
        self.min_samples = min_samples

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        U, w, inverse = _unique_rows(X)
        tree = cKDTree(U)
        n_u = len(U)
        core = np.zeros(n_u, dtype=bool)
        for s in range(0, n_u, 512):
            lists = tree.query_ball_point(U[s:s + 512], self.eps)
            core[s:s + 512] = [w[np.asarray(l, dtype=np.int64)].sum() >= self.min_samples
                               for l in lists]
        labels_u = np.full(n_u, -1, dtype=np.int64)
        cid = 0
        for i in range(n_u):
            if not core[i] or labels_u[i] >= 0:
                continue
            labels_u[i] = cid
            frontier = [i]
            while frontier:
                lists = tree.query_ball_point(U[frontier], self.eps)
                nxt = []
                for l in lists:
                    for j in l:
                        if labels_u[j] < 0:
                            labels_u[j] = cid
                            if core[j]:
                                nxt.append(j)
                frontier = nxt
            cid += 1
        self.labels_ = labels_u[inverse]
        self.core_sample_mask_ = core[inverse]
        self.assignment_ = normalize_noise(self.labels_)
        return self


# -- OPTICS -------------------------------------------------------------------

class OPTICS(ClusterMixin, BaseEstimator):
    """Reachability-ordering clustering with xi extraction (via scikit-learn)."""

    def __init__(self, min_samples=5, xi=0.05):
        self.min_samples = min_samples
        self.xi = xi

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if len(X) < self.min_samples:
            raise TooFewPoints(f"OPTICS needs at least {self.min_samples} points, got {len(X)}")
        est = _SkOPTICS(min_samples=self.min_samples, xi=self.xi, cluster_method="xi",
                        metric="euclidean")
        with np.errstate(divide="ignore", invalid="ignore"):
            self.labels_ = est.fit(X).labels_
        self.reachability_ = est.reachability_
        self.ordering_ = est.ordering_
        self.assignment_ = normalize_noise(self.labels_)
        return self


# -- mean shift ----------------------------------------------------------------

def _shift_seeds(U, w, seeds, bandwidth, max_iter, chunk=256):
    """Iterate flat-kernel mean shift from every seed until its window is stable."""
    modes = seeds.copy()
    intensity = np.zeros(len(seeds), dtype=np.int64)
    bw2 = bandwidth * bandwidth
    stop = (1e-7 * bandwidth) ** 2
    u_sq = (U * U).sum(axis=1)
    for s in range(0, len(seeds), chunk):
        cur = modes[s:s + chunk].copy()
        active = np.ones(len(cur), dtype=bool)
        inten = np.zeros(len(cur), dtype=np.int64)
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if not len(idx):
                break
            within = (_sq_dists(cur[idx], U, (cur[idx] ** 2).sum(axis=1)).T <= bw2).T
            weight = within * w[None, :]
            total = weight.sum(axis=1)
            new = (weight @ U) / np.maximum(total, 1)[:, None]
            moved = ((new - cur[idx]) ** 2).sum(axis=1)
            cur[idx] = new
            inten[idx] = total
            active[idx[moved <= stop]] = False
        modes[s:s + chunk] = cur
        intensity[s:s + chunk] = inten
    return modes, intensity


class MeanShift(ClusterMixin, BaseEstimator):
    """Flat-kernel mean shift seeded at every distinct point.

    Converged modes are visited by decreasing window population; a mode
    within ``bandwidth`` of an already kept one is discarded. Every point
    is assigned to its nearest kept mode.
    """

    def __init__(self, bandwidth=1.0, max_iter=300):
        self.bandwidth = bandwidth
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if not self.bandwidth > 0:
            raise ZeroBandwidth("mean shift needs a positive bandwidth")
        U, w, _ = _unique_rows(X)
        modes, intensity = _shift_seeds(U, w, U, self.bandwidth, self.max_iter)
        # identical converged modes collapse before the merge step
        modes, first = np.unique(np.round(modes, 12), axis=0, return_index=True)
        intensity = intensity[first]
        order = np.lexsort((np.arange(len(modes)), -intensity))
        kept = []
        tree = cKDTree(modes)
        suppressed = np.zeros(len(modes), dtype=bool)
        for i in order:
            if suppressed[i]:
                continue
            kept.append(i)
            suppressed[tree.query_ball_point(modes[i], self.bandwidth)] = True
        self.cluster_centers_ = modes[kept]
        self.labels_ = np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        return np.argmin(_sq_dists(check_array(X, dtype=np.float64), self.cluster_centers_), axis=1)


def mean_shift_update(points, mode, bandwidth):
    """One flat-kernel update of ``mode``: the mean of points within ``bandwidth``."""
    points = np.asarray(points, dtype=float)
    inside = np.linalg.norm(points - mode, axis=1) <= bandwidth
    return points[inside].mean(axis=0)


# -- functional interface ---------------------------------------------------------

def kmeans(points, k, seed=0, n_init=10, max_iter=300, tol=1e-4) -> ClusteringAssignment:
    est = KMeans(k, n_init, max_iter, tol, seed).fit(points)
    return ClusteringAssignment(est.labels_, "kmeans", {"k": k, "seed": seed}, k,
                                est.cluster_centers_)


def dbscan(points, eps, min_neighbors=5) -> ClusteringAssignment:
    est = DBSCAN(eps, min_neighbors).fit(points)
    labels, num, noise = est.assignment_
    return ClusteringAssignment(labels, "dbscan", {"eps": eps, "min_neighbors": min_neighbors},
                                num, num_noise=noise)


def optics(points, min_samples=5, xi=0.05) -> ClusteringAssignment:
    est = OPTICS(min_samples, xi).fit(points)
    labels, num, noise = est.assignment_
    return ClusteringAssignment(labels, "optics", {"min_samples": min_samples, "xi": xi}, num,
                                num_noise=noise)


def mean_shift(points, bandwidth) -> ClusteringAssignment:
    est = MeanShift(bandwidth).fit(points)
    return ClusteringAssignment(est.labels_, "mean_shift", {"bandwidth": bandwidth},
                                len(est.cluster_centers_), est.cluster_centers_)


def estimate_bandwidth(points, quantile=0.3, n_samples=None, seed=0) -> float:
    """Mean distance from each (sampled) point to its ``int(quantile*N)``-th
    nearest neighbour, the point itself counting as the first.

    Mirrors scikit-learn's ``estimate_bandwidth``. Raises
    :class:`DegenerateData` when the result is zero.
    """
    X = check_array(points, dtype=np.float64)
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    if n_samples is not None and n_samples < len(X):
        rng = np.random.default_rng(seed)
        X = X[np.sort(rng.choice(len(X), n_samples, replace=False))]
    k = max(int(len(X) * quantile), 1)
    x_sq = (X * X).sum(axis=1)
    total = 0.0
    for s in range(0, len(X), 512):
        d = _sq_dists(X[s:s + 512], X, x_sq[s:s + 512])
        total += np.sqrt(np.partition(d, k - 1, axis=1)[:, k - 1]).sum()
    alpha = total / len(X)
    if alpha <= 0:
        raise DegenerateData("all points coincide; bandwidth estimate is zero")
    return float(alpha)


def subsample_indices(n, fraction=0.25, seed=0) -> np.ndarray:
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    size = math.ceil(fraction * n)
    if size >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size, replace=False))


def subsample(points, fraction=0.25, seed=0):
    """Uniform sample of ``ceil(fraction*N)`` points without replacement, in input order."""
    points = np.asarray(points)
    return points[subsample_indices(len(points), fraction, seed)]
