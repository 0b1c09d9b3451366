"""Model selection: the four criteria, the grid search, and the null test.

All four criteria are better-when-lower: VMSE is an error ratio, inertia
is the K-means objective, the intensity factor counts cluster-boundary
crossings, and low entropy means few skills per cluster. Selection sorts
the candidate set by each criterion and picks the smallest p whose four
p-prefixes share a member.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import Clustering, inertia_of, st_kmeans
from .errors import ParseError, SamdpError, ValidationError
from .model import SamdpModel, infer_from_clustering
from .trajectory import TrajectoryDataset

GRID_MAGIC = "#samdp-grid v1"


@dataclass
class ModelScore:
    vmse: float
    inertia: float
    intensity: float
    entropy: float

    def __post_init__(self):
        values = (self.vmse, self.inertia, self.intensity, self.entropy)
        if not all(np.isfinite(v) for v in values):
            raise ValidationError(f"criteria must be finite, got {values}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValidationError(f"intensity must be in [0, 1], got {self.intensity}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.vmse, self.inertia, self.intensity, self.entropy)

    def beats(self, other: "ModelScore") -> bool:
        """Strictly better on all four criteria simultaneously."""
        return all(a < b for a, b in zip(self.as_tuple(), other.as_tuple()))


@dataclass
class Candidate:
    K: int
    w: int
    seed: int
    clustering: Clustering | None
    model: SamdpModel | None
    score: ModelScore | None
    error: str | None = None


@dataclass
class CandidateSet:
    candidates: list[Candidate]
    k_range: tuple[int, int]
    w_range: tuple[int, int]
    restarts: int
    seed: int

    def valid(self) -> list[Candidate]:
        return [c for c in self.candidates if c.error is None]


def cluster_value_means(clustering: Clustering, ds: TrajectoryDataset) -> np.ndarray:
    """Mean value estimate per cluster; empty clusters get 0."""
    sums = np.zeros(clustering.K)
    np.add.at(sums, clustering.assignment, ds.values)
    counts = np.bincount(clustering.assignment, minlength=clustering.K)
    out = np.zeros(clustering.K)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def vmse(model: SamdpModel, clustering: Clustering, ds: TrajectoryDataset) -> float:
    """Normalized distance between cluster-mean values and the model values."""
    v = cluster_value_means(clustering, ds)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise SamdpError("cluster-mean values are degenerate (norm < 1e-12)")
    return float(np.linalg.norm(v - model.v) / norm)


def _consecutive_pairs(ds: TrajectoryDataset) -> tuple[np.ndarray, np.ndarray]:
    firsts, seconds = [], []
    for _, s, e in ds.trajectories:
        if e - s >= 2:
            firsts.append(np.arange(s, e - 1))
            seconds.append(np.arange(s + 1, e))
    if not firsts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(firsts), np.concatenate(seconds)


def intensity_factor(clustering: Clustering, ds: TrajectoryDataset) -> float:
    """Fraction of consecutive same-trajectory pairs that change cluster."""
    if ds.n < 2:
        raise ValidationError("intensity factor needs at least 2 records")
    a, b = _consecutive_pairs(ds)
    if a.size == 0:
        return 0.0
    labels = clustering.assignment
    return float(np.mean(labels[a] != labels[b]))


def samdp_entropy(model: SamdpModel, clustering: Clustering) -> float:
    """Cluster-size-weighted row entropy of P (natural log, 0 log 0 = 0)."""
    sizes = clustering.sizes().astype(np.float64)
    P = model.P
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log(P), 0.0)
    return float(-(sizes * plogp.sum(axis=1)).sum() + 0.0)


def score_candidate(
    model: SamdpModel, clustering: Clustering, ds: TrajectoryDataset
) -> ModelScore:
    return ModelScore(
        vmse=vmse(model, clustering, ds),
        inertia=clustering.inertia,
        intensity=intensity_factor(clustering, ds),
        entropy=samdp_entropy(model, clustering),
    )


def cell_seed(seed: int, K: int, w: int, restart: int) -> int:
    """Stable per-cell seed for one grid-search cell."""
    return int(np.random.SeedSequence((seed, K, w, restart)).generate_state(1)[0])


def grid_search(
    ds: TrajectoryDataset,
    features: np.ndarray,
    k_range: tuple[int, int] = (15, 25),
    w_range: tuple[int, int] = (1, 7),
    restarts: int = 1,
    seed: int = 0,
    min_length: int = 2,
    min_prob: float = 0.1,
) -> CandidateSet:
    """Build and score one candidate per (K, w, restart) cell.

    Ranges are inclusive. Per-cell failures are flagged on the candidate
    instead of aborting the grid.
    """
    k_lo, k_hi = k_range
    w_lo, w_hi = w_range
    if k_lo > k_hi or w_lo > w_hi or restarts < 1:
        raise ValidationError("empty grid")
    candidates = []
    for K in range(k_lo, k_hi + 1):
        for w in range(w_lo, w_hi + 1):
            for restart in range(restarts):
                s = cell_seed(seed, K, w, restart)
                try:
                    clustering = st_kmeans(features, ds, K=K, w=w, seed=s)
                    model = infer_from_clustering(
                        clustering, ds, min_length=min_length, min_prob=min_prob
                    )
                    score = score_candidate(model, clustering, ds)
                    candidates.append(Candidate(K, w, s, clustering, model, score))
                except Exception as e:  # noqa: BLE001 - cell failures are data
                    candidates.append(Candidate(K, w, s, None, None, None, error=str(e)))
    return CandidateSet(candidates, (k_lo, k_hi), (w_lo, w_hi), restarts, seed)


def select(cands: CandidateSet) -> Candidate:
    """p-prefix intersection over the four criteria orderings.

    Sort the valid candidates by each criterion ascending, find the
    smallest p with a non-empty intersection of the four p-prefixes, and
    break ties by lowest vmse, then lowest K, then lowest w.
    """
    valid = cands.valid()
    if not valid:
        raise SamdpError("no valid candidates to select from")

    def ordering(criterion_index):
        return sorted(
            range(len(valid)),
            key=lambda i: (
                valid[i].score.as_tuple()[criterion_index],
                valid[i].K,
                valid[i].w,
                valid[i].seed,
            ),
        )
    orders = [ordering(c) for c in range(4)]
    for p in range(1, len(valid) + 1):
        common = set(orders[0][:p])
        for o in orders[1:]:
            common &= set(o[:p])
        if common:
            best = min(
                common,
                key=lambda i: (valid[i].score.vmse, valid[i].K, valid[i].w, valid[i].seed),
            )
            return valid[best]
    raise SamdpError("prefix intersection failed")  # unreachable: p=len covers all


def null_p_value(
    selected: Candidate,
    ds: TrajectoryDataset,
    features: np.ndarray,
    trials: int = 10000,
    seed: int = 0,
) -> float:
    """Fraction of uniform-random clusterings that beat the selected model.

    Each trial assigns records to K clusters uniformly at random, rebuilds
    the SAMDP through the real inference path (pruning included), scores
    it, and counts a win only when all four criteria are strictly better.
    Trials that fail to build score as not-better.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if selected.score is None or selected.clustering is None:
        raise ValidationError("selected candidate is not scored")
    K = selected.clustering.K
    n = ds.n
    rng = np.random.default_rng(seed)
    target = selected.score
    d = features.shape[1]
    better = 0
    for _ in range(trials):
        assignment = rng.integers(0, K, size=n)
        counts = np.bincount(assignment, minlength=K)
        centroids = np.zeros((K, d))
        for j in range(d):
            sums = np.bincount(assignment, weights=features[:, j], minlength=K)
            centroids[:, j] = np.divide(
                sums, counts, out=np.zeros(K), where=counts > 0
            )
        # empty clusters cannot attract points: park their centroid at +inf
        centroids[counts == 0] = np.inf
        clustering = Clustering(
            K=K, w=0, assignment=assignment,
            centroids=centroids, inertia=inertia_of(features, centroids), seed=0,
        )
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = infer_from_clustering(
                    clustering, ds,
                    min_length=selected.model.min_length,
                    min_prob=selected.model.min_prob,
                )
                score = score_candidate(model, clustering, ds)
        except SamdpError:
            continue
        if score.beats(target):
            better += 1
    return better / trials


def write_grid_report(cands: CandidateSet, selected: Candidate | None, path) -> None:
    """One line per candidate: K w seed vmse inertia intensity entropy selected status."""
    out = [
        f"{GRID_MAGIC} k={cands.k_range[0]}..{cands.k_range[1]} "
        f"w={cands.w_range[0]}..{cands.w_range[1]} restarts={cands.restarts} seed={cands.seed}"
    ]
    for c in cands.candidates:
        sel = int(
            selected is not None
            and (c.K, c.w, c.seed) == (selected.K, selected.w, selected.seed)
        )
        if c.error is None:
            s = c.score
            out.append(
                f"{c.K} {c.w} {c.seed} {s.vmse!r} {s.inertia!r} "
                f"{s.intensity!r} {s.entropy!r} {sel} ok"
            )
        else:
            out.append(f"{c.K} {c.w} {c.seed} nan nan nan nan 0 failed")
    Path(path).write_text("\n".join(out) + "\n")


def read_grid_report(path) -> list[dict]:
    """Parse a grid report into row dicts (inverse of write_grid_report)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(GRID_MAGIC):
        raise ParseError(f"expected header starting with '{GRID_MAGIC}'", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 9:
            raise ParseError(f"expected 9 fields, got {len(parts)}", line=lineno)
        try:
            rows.append(
                {
                    "K": int(parts[0]),
                    "w": int(parts[1]),
                    "seed": int(parts[2]),
                    "vmse": float(parts[3]),
                    "inertia": float(parts[4]),
                    "intensity": float(parts[5]),
                    "entropy": float(parts[6]),
                    "selected": parts[7] == "1",
                    "status": parts[8],
                }
            )
        except ValueError as e:
            raise ParseError(str(e), line=lineno)
    return rows
