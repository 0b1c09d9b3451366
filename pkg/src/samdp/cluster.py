"""Spatio-temporal K-means with trajectory-aware windows.

The assignment step scores each point by the summed squared distance from
the 2w+1 points of the same trajectory centered on it (truncated at
trajectory ends) to a candidate centroid, so a point is pulled toward the
cluster its temporal neighbors are close to. The update step is the plain
Lloyd mean over assigned points. w=0 reduces exactly to vanilla K-means.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .trajectory import TrajectoryDataset

CLUSTERS_MAGIC = "#samdp-clusters v1"


@dataclass
class Clustering:
    K: int
    w: int
    assignment: np.ndarray
    centroids: np.ndarray
    inertia: float
    seed: int
    objective_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        self.centroids = np.atleast_2d(np.asarray(self.centroids, dtype=np.float64))
        if self.centroids.shape[0] != self.K:
            raise ValidationError(
                f"expected {self.K} centroids, got {self.centroids.shape[0]}"
            )
        if self.assignment.size and not (
            0 <= self.assignment.min() and self.assignment.max() < self.K
        ):
            raise ValidationError("assignment indices outside [0, K)")

    @property
    def empty_clusters(self) -> list[int]:
        present = np.bincount(self.assignment, minlength=self.K)
        return [int(i) for i in range(self.K) if present[i] == 0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)


def kmeans_plusplus_init(X: np.ndarray, K: int, seed: int) -> np.ndarray:
    """K-means++ seeding on pointwise squared distances."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if K > n:
        raise ValidationError(f"K={K} exceeds the number of points {n}")
    rng = np.random.default_rng(seed)
    centroids = np.empty((K, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, K):
        total = d2.sum()
        if total <= 0:
            centroids[i] = X[rng.integers(n)]
            continue
        centroids[i] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def _window_sums(D: np.ndarray, bounds, w: int) -> np.ndarray:
    """Sum the per-point distance rows over each point's trajectory window."""
    if w == 0:
        return D
    S = np.empty_like(D)
    for start, stop in bounds:
        block = D[start:stop]
        cum = np.vstack([np.zeros((1, D.shape[1])), np.cumsum(block, axis=0)])
        length = stop - start
        t = np.arange(length)
        lo = np.maximum(t - w, 0)
        hi = np.minimum(t + w + 1, length)
        S[start:stop] = cum[hi] - cum[lo]
    return S


def windowed_objective(
    X: np.ndarray, ds: TrajectoryDataset, assignment: np.ndarray, centroids: np.ndarray, w: int
) -> float:
    """The objective the windowed assignment step minimizes."""
    D = _pointwise_sq_distances(X, centroids)
    S = _window_sums(D, [(s, e) for _, s, e in ds.trajectories], w)
    return float(S[np.arange(len(assignment)), assignment].sum())


def _pointwise_sq_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # direct form, not the x^2-2xc+c^2 expansion: bit-for-bit reproducible
    # against a per-row loop computing ((x - mu)**2).sum()
    return ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def st_kmeans(
    X: np.ndarray,
    ds: TrajectoryDataset,
    K: int,
    w: int,
    seed: int,
    max_iter: int = 300,
    init: np.ndarray | None = None,
) -> Clustering:
    """Windowed K-means over the dataset's trajectory structure.

    ``init`` bypasses the seeded K-means++ initialization with explicit
    starting centroids (used by reduction tests and restarts). Terminates
    at an assignment fixpoint, after max_iter sweeps, or as soon as a
    centroid update would increase the windowed objective (the mean update
    optimizes the pointwise objective, so late iterations can degrade the
    windowed one; the previous state is kept). Deterministic: ties go to
    the lowest cluster index, empty clusters are re-seeded to the point
    with the largest current distance contribution.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if X.ndim != 2 or n != ds.n:
        raise ValidationError(f"feature matrix rows {X.shape} do not match dataset n={ds.n}")
    if K < 1 or K > n:
        raise ValidationError(f"K must be in [1, {n}], got {K}")
    if w < 0:
        raise ValidationError("w must be >= 0")
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")

    if init is not None:
        centroids = np.array(init, dtype=np.float64, copy=True)
        if centroids.shape != (K, X.shape[1]):
            raise ValidationError("init centroids have the wrong shape")
    else:
        centroids = kmeans_plusplus_init(X, K, seed)
    if K > 1 and np.all(X == X[0]):
        warnings.warn("all points identical; clustering is degenerate", stacklevel=2)

    bounds = [(s, e) for _, s, e in ds.trajectories]
    assignment = None
    prev_centroids = centroids
    history: list[float] = []

    for _ in range(max_iter):
        D = _pointwise_sq_distances(X, centroids)
        S = _window_sums(D, bounds, w)
        new_assignment = np.argmin(S, axis=1)

        # re-seed empty clusters before the update step: the far point is
        # relabeled and the empty centroid moves onto it, so the monitored
        # objective is not inflated by a stale centroid
        dist_own = D[np.arange(n), new_assignment]
        reseeded = False
        for j in range(K):
            if not np.any(new_assignment == j):
                far = int(np.argmax(dist_own))
                new_assignment[far] = j
                centroids[j] = X[far]
                dist_own[far] = 0.0
                reseeded = True
        if reseeded:
            D = _pointwise_sq_distances(X, centroids)
            S = _window_sums(D, bounds, w)

        obj = float(S[np.arange(n), new_assignment].sum())
        if history and obj > history[-1] * (1 + 1e-12) + 1e-12:
            centroids = prev_centroids  # keep the last non-degrading state
            break
        history.append(obj)
        if assignment is not None and np.array_equal(assignment, new_assignment):
            break
        assignment = new_assignment
        prev_centroids = centroids.copy()
        for j in range(K):
            members = X[assignment == j]
            if len(members):
                centroids[j] = members.mean(axis=0)

    return Clustering(
        K=K,
        w=w,
        assignment=assignment,
        centroids=centroids,
        inertia=inertia_of(X, centroids),
        seed=seed,
        objective_history=history,
    )


def inertia_of(X: np.ndarray, centroids: np.ndarray) -> float:
    """Within-cluster sum of squares: each point against its nearest centroid."""
    D = _pointwise_sq_distances(np.asarray(X, dtype=np.float64), centroids)
    return float(D.min(axis=1).sum())


def inertia(X: np.ndarray, clustering: Clustering) -> float:
    """Pointwise inertia of a clustering (no window)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != clustering.assignment.shape[0]:
        raise ValidationError("feature matrix does not match the clustering")
    if X.shape[1] != clustering.centroids.shape[1]:
        raise ValidationError("feature dimension does not match the centroids")
    return inertia_of(X, clustering.centroids)


def write_clusters(clustering: Clustering, ds: TrajectoryDataset, path) -> None:
    """Write a clustering aligned with ds rows (round-trip exact)."""
    if clustering.assignment.shape[0] != ds.n:
        raise ValidationError("clustering does not cover the dataset")
    out = [
        f"{CLUSTERS_MAGIC} K={clustering.K} w={clustering.w} "
        f"seed={clustering.seed} inertia={clustering.inertia!r}"
    ]
    for i, c in enumerate(clustering.centroids):
        coords = " ".join(repr(float(x)) for x in c)
        out.append(f"centroid {i} {coords}")
    for i in range(ds.n):
        out.append(f"{ds.traj_ids[i]} {ds.ts[i]} {clustering.assignment[i]}")
    Path(path).write_text("\n".join(out) + "\n")


def read_clusters(path, ds: TrajectoryDataset | None = None) -> Clustering:
    """Read a clustering file; alignment is checked when ds is given."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(CLUSTERS_MAGIC):
        raise ParseError(f"expected header starting with '{CLUSTERS_MAGIC}'", line=1)
    hdr = {}
    for tok in lines[0][len(CLUSTERS_MAGIC) :].split():
        k, v = tok.split("=", 1)
        hdr[k] = v
    try:
        K, w, seed = int(hdr["K"]), int(hdr["w"]), int(hdr["seed"])
        inert = float(hdr["inertia"])
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad clusters header: {e}", line=1)

    centroids, tids, ts, labels = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "centroid":
            centroids.append([float(x) for x in parts[2:]])
        elif len(parts) == 3:
            tids.append(int(parts[0]))
            ts.append(int(parts[1]))
            labels.append(int(parts[2]))
        else:
            raise ParseError(f"unrecognized line: {line!r}", line=lineno)
    if len(centroids) != K:
        raise ParseError(f"expected {K} centroid lines, found {len(centroids)}", line=1)
    if ds is not None and not (
        np.array_equal(np.array(tids), ds.traj_ids) and np.array_equal(np.array(ts), ds.ts)
    ):
        raise ValidationError("clustering rows are not aligned with the dataset")
    return Clustering(
        K=K,
        w=w,
        assignment=np.array(labels),
        centroids=np.array(centroids),
        inertia=inert,
        seed=seed,
    )
