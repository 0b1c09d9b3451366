"""Feature pipeline: normalization, PCA, exact t-SNE, feature assembly.

The output of the pipeline is the 3-column feature space used everywhere
downstream: two embedding coordinates plus the value estimate, each column
normalized to zero mean and unit variance.

t-SNE here is the exact O(n^2) variant: per-point bandwidths found by
binary search to match the target perplexity, symmetrized affinities, and
plain gradient descent on the KL divergence with early exaggeration and
momentum. Everything is a pure function of (input, config), so runs with
the same seed are bit-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, SamdpError, ValidationError
from .trajectory import TrajectoryDataset

EMBEDDING_MAGIC = "#samdp-embedding v1"

# published t-SNE schedule constants
EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
TSNE_MAX_POINTS = 20000


@dataclass
class EmbeddingConfig:
    pca_dims: int = 50
    tsne_dims: int = 2
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    seed: int = 0

    def __post_init__(self):
        if self.tsne_dims not in (2, 3):
            raise ValidationError("tsne_dims must be 2 or 3")
        if self.perplexity <= 0:
            raise ValidationError("perplexity must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")


def normalize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column normalization returning (normalized, mean, std).

    Constant columns map to all-zeros; their std is reported as 1 so the
    same affine map can be applied to held-out data.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("normalize needs a 2-D matrix with n >= 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (X - mean) / std, mean, std


def normalize_apply(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Apply a previously fitted column normalization to new rows."""
    return (np.asarray(X, dtype=np.float64) - mean) / std


def normalize(X: np.ndarray) -> np.ndarray:
    """Scale each column to zero mean and unit variance.

    Constant columns map to all-zeros rather than dividing by zero.
    """
    return normalize_fit(X)[0]


def pca_fit(X: np.ndarray, dims: int):
    """Eigendecomposition PCA on mean-centered data.

    Returns (projected, components, mean, eigenvalues) with components as
    rows, ordered by decreasing explained variance. Component signs are
    fixed so the entry of largest magnitude is positive. Components whose
    eigenvalue falls below 1e-12 of the largest are dropped with a warning.
    """
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if dims > min(n, m):
        raise ValidationError(f"pca dims={dims} exceeds min(n, m)={min(n, m)}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:dims]
    eigvals = eigvals[order]
    comps = eigvecs[:, order].T
    for i in range(comps.shape[0]):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    keep = eigvals >= 1e-12 * max(eigvals[0], 0.0)
    if not keep.all():
        warnings.warn(
            f"dropping {int((~keep).sum())} PCA components with near-zero eigenvalue",
            stacklevel=2,
        )
        eigvals, comps = eigvals[keep], comps[keep]
    return Xc @ comps.T, comps, mean, eigvals


def pca(X: np.ndarray, dims: int) -> np.ndarray:
    """Project onto the top principal components (see pca_fit)."""
    return pca_fit(X, dims)[0]


def _perplexity_affinities(D2: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-conditional Gaussian affinities with per-point bandwidths.

    D2 is the squared distance matrix; each row's precision is found by
    binary search so the row entropy matches log(perplexity).
    """
    n = D2.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(D2[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(64):
            p = np.exp(-d * beta)
            s = p.sum()
            if s <= 0:
                entropy = 0.0
                p_norm = p
            else:
                p_norm = p / s
                nzp = p_norm[p_norm > 0]
                entropy = -np.sum(nzp * np.log(nzp))
            if abs(entropy - target) < 1e-7:
                break
            if entropy > target:
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = (beta + lo) / 2
        row = np.insert(p_norm, i, 0.0)
        P[i] = row
    return P


def tsne(
    X: np.ndarray, cfg: EmbeddingConfig, return_kl_history: bool = False
) -> np.ndarray | tuple[np.ndarray, list[tuple[int, float]]]:
    """Exact t-SNE embedding of the rows of X.

    Duplicate input rows share one init draw, so identical inputs follow
    bit-identical descent trajectories and land on the same spot. With
    return_kl_history=True also returns [(iteration, kl)] logged once per
    iteration against the unexaggerated affinities.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n > TSNE_MAX_POINTS:
        raise SamdpError(
            f"exact t-SNE is limited to n <= {TSNE_MAX_POINTS} points (got {n}); subsample first"
        )
    if n < 3 * cfg.perplexity:
        raise ValidationError(
            f"n={n} too small for perplexity {cfg.perplexity} (need n >= 3*perplexity)"
        )

    sq = (X * X).sum(axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    Pc = _perplexity_affinities(D2, cfg.perplexity)
    P = (Pc + Pc.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)

    rng = np.random.default_rng(cfg.seed)
    slot = np.empty(n, dtype=np.int64)
    seen: dict[bytes, int] = {}
    for i in range(n):
        key = X[i].tobytes()
        slot[i] = seen.setdefault(key, len(seen))
    Y = (1e-4 * rng.standard_normal((len(seen), cfg.tsne_dims)))[slot]
    velocity = np.zeros_like(Y)
    # representative row per duplicate group: gradients are gathered from it
    # so identical inputs follow bit-identical trajectories (their gradients
    # are equal mathematically but summation order differs between rows)
    rep_of_row = None
    if len(seen) < n:
        first = np.full(len(seen), -1, dtype=np.int64)
        for i in range(n - 1, -1, -1):
            first[slot[i]] = i
        rep_of_row = first[slot]
    gains = np.ones_like(Y)
    history: list[tuple[int, float]] = []

    for it in range(1, cfg.iterations + 1):
        exaggeration = EXAGGERATION if it <= EXAGGERATION_ITERS else 1.0
        momentum = MOMENTUM_EARLY if it <= EXAGGERATION_ITERS else MOMENTUM_LATE

        ysq = (Y * Y).sum(axis=1)
        num = 1.0 / (1.0 + np.maximum(ysq[:, None] + ysq[None, :] - 2.0 * (Y @ Y.T), 0.0))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)

        # gradient of KL(P||Q): 4 * sum_j (eP_ij - Q_ij) num_ij (y_i - y_j)
        W = (exaggeration * P - Q) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        if rep_of_row is not None:
            grad = grad[rep_of_row]

        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - cfg.learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        if return_kl_history:
            history.append((it, float(np.sum(P * (np.log(P) - np.log(Q))))))

    if return_kl_history:
        return Y, history
    return Y


def assemble(embedding: np.ndarray, ds: TrajectoryDataset) -> np.ndarray:
    """Stack the 2-D embedding with the value estimates and normalize.

    The result is the n x 3 feature matrix the clustering stages consume.
    """
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.ndim != 2 or embedding.shape[1] != 2:
        raise ValidationError(f"embedding must be n x 2, got {embedding.shape}")
    if embedding.shape[0] != ds.n:
        raise ValidationError(
            f"embedding has {embedding.shape[0]} rows but dataset has {ds.n} records"
        )
    stacked = np.column_stack([embedding, ds.values])
    return normalize(stacked)


def embed_dataset(ds: TrajectoryDataset, cfg: EmbeddingConfig) -> np.ndarray:
    """Full stage-0 pipeline on dataset features: normalize -> PCA -> t-SNE.

    PCA is skipped when the feature dimension is already at or below
    pca_dims; t-SNE is skipped when the (possibly reduced) features are
    already 2-D, which is the precomputed-embedding path.
    """
    X = normalize(ds.features)
    if X.shape[1] > cfg.pca_dims:
        X = pca(X, cfg.pca_dims)
    if X.shape[1] == 2:
        return X
    return tsne(X, cfg)


def write_embedding(embedding: np.ndarray, ds: TrajectoryDataset, path) -> None:
    """Write an embedding aligned with ds rows (round-trip exact)."""
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.shape[0] != ds.n:
        raise ValidationError("embedding row count does not match dataset")
    out = [f"{EMBEDDING_MAGIC} dims={embedding.shape[1]}"]
    for i in range(ds.n):
        coords = " ".join(repr(float(x)) for x in embedding[i])
        out.append(f"{ds.traj_ids[i]} {ds.ts[i]} {coords}")
    Path(path).write_text("\n".join(out) + "\n")


def read_embedding(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read an embedding file; returns (coords, traj_ids, ts)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(EMBEDDING_MAGIC):
        raise ParseError(f"expected header starting with '{EMBEDDING_MAGIC}'", line=1)
    try:
        dims = int(lines[0].split("dims=")[1])
    except (IndexError, ValueError):
        raise ParseError("header missing dims=<d>", line=1)
    coords, tids, ts = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 + dims:
            raise ParseError(f"expected {2 + dims} fields, got {len(parts)}", line=lineno)
        try:
            tids.append(int(parts[0]))
            ts.append(int(parts[1]))
            coords.append([float(x) for x in parts[2:]])
        except ValueError as e:
            raise ParseError(str(e), line=lineno)
    if not coords:
        raise ParseError("embedding file has no rows", line=1)
    return np.array(coords), np.array(tids), np.array(ts)


def embedding_for_dataset(path, ds: TrajectoryDataset) -> np.ndarray:
    """Read an embedding file and check it aligns with the dataset rows."""
    coords, tids, ts = read_embedding(path)
    if coords.shape[0] != ds.n:
        raise ValidationError(
            f"embedding has {coords.shape[0]} rows but dataset has {ds.n}"
        )
    if not (np.array_equal(tids, ds.traj_ids) and np.array_equal(ts, ds.ts)):
        raise ValidationError("embedding rows are not aligned with the dataset")
    return coords
