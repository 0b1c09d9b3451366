"""Reference oracles used by the test suite.

These are deliberately independent, loop-based implementations; they must
not import algorithm code from the package under test (dataset plumbing is
fine).
"""

import numpy as np


def reference_vanilla_kmeans(X, init_centroids, max_iter=300):
    """Plain Lloyd iteration with lowest-index tie-breaking.

    Mirrors the documented contract: assignment by squared Euclidean
    distance, centroid update by mean of assigned points, empty clusters
    re-seeded to the point with the largest distance to its centroid,
    termination at assignment fixpoint.
    """
    X = np.asarray(X, dtype=float)
    centroids = np.array(init_centroids, dtype=float, copy=True)
    n, k = X.shape[0], centroids.shape[0]
    labels = None
    for _ in range(max_iter):
        new_labels = np.empty(n, dtype=int)
        dist_to_assigned = np.empty(n)
        for i in range(n):
            d = ((X[i] - centroids) ** 2).sum(axis=1)
            new_labels[i] = int(np.argmin(d))
            dist_to_assigned[i] = d[new_labels[i]]
        for j in range(k):
            if not np.any(new_labels == j):
                far = int(np.argmax(dist_to_assigned))
                new_labels[far] = j
                dist_to_assigned[far] = 0.0
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for j in range(k):
            member = X[labels == j]
            if len(member):
                centroids[j] = member.mean(axis=0)
    return labels, centroids


def windowed_objective_oracle(X, traj_bounds, assignment, centroids, w):
    """Brute-force windowed clustering objective.

    Sum over points t of the squared distances from every point in the
    2w+1 window around t (same trajectory, truncated) to the centroid of
    t's assigned cluster.
    """
    X = np.asarray(X, dtype=float)
    total = 0.0
    for start, stop in traj_bounds:
        for t in range(start, stop):
            lo = max(start, t - w)
            hi = min(stop, t + w + 1)
            mu = centroids[assignment[t]]
            for j in range(lo, hi):
                total += float(((X[j] - mu) ** 2).sum())
    return total


def purity(labels, truth):
    """Fraction of points whose cluster's majority true label matches."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    correct = 0
    for c in np.unique(labels):
        members = truth[labels == c]
        counts = np.bincount(members)
        correct += counts.max()
    return correct / len(labels)


def smdp_value_iteration(P, R, L, gamma, iters=100000, tol=1e-12):
    """Independent SMDP value solver by fixed-point iteration."""
    P, R, L = np.asarray(P), np.asarray(R), np.asarray(L)
    k = (P * L).sum(axis=1)
    r = (P * R).sum(axis=1)
    v = np.zeros(P.shape[0])
    for _ in range(iters):
        v_new = r + (gamma**k) * (P @ v)
        if np.abs(v_new - v).max() < tol:
            return v_new
        v = v_new
    return v
