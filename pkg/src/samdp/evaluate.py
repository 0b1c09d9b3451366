"""Model evaluation and the eject-button monitor.

Three checks of an inferred model: the greedy policy it induces, the
per-cluster correlation between following that policy and trajectory
reward, and a likelihood-ratio monitor that compares observed transitions
against models re-inferred from the top- and bottom-rewarded training
trajectories, withdrawing trust (ejecting) when the bottom model fits
better.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cluster import Clustering, _pointwise_sq_distances
from .errors import ParseError, SamdpError, ValidationError
from .model import SamdpModel, _segment_transitions
from .trajectory import TrajectoryDataset

EJECT_MAGIC = "#samdp-eject v1"


@dataclass
class GreedyPolicy:
    """choice[i] = best successor of cluster i, -1 where i is absorbing."""

    choice: np.ndarray
    criterion: np.ndarray  # K x K; NaN where no skill was observed


@dataclass
class EjectMonitor:
    T_plus: np.ndarray
    T_minus: np.ndarray
    smoothing: float

    def __post_init__(self):
        for name in ("T_plus", "T_minus"):
            M = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, M)
            rowsums = M.sum(axis=1)
            if not np.allclose(rowsums, 1.0, atol=1e-9):
                raise ValidationError(f"{name} rows must sum to 1 after smoothing")
        if self.smoothing <= 0:
            raise ValidationError("smoothing must be positive")


@dataclass
class EjectReport:
    traj_ids: list[int]
    ejected_at: list[int | None]
    rewards: list[float]
    threshold: float
    mean_all: float
    mean_unejected: float
    gain_pct: float


def greedy_policy(model: SamdpModel) -> GreedyPolicy:
    """argmax_j of R[i,j] + gamma^L[i,j] * v[j] over observed successors.

    Only entries with raw counts are candidates (pruned P entries keep
    their R and L, so they still compete). Ties go to the lower j.
    """
    K = model.K
    criterion = np.full((K, K), np.nan)
    choice = np.full(K, -1, dtype=np.int64)
    for i in range(K):
        candidates = np.flatnonzero(model.counts[i] > 0)
        candidates = candidates[candidates != i]
        if candidates.size == 0:
            continue
        vals = model.R[i, candidates] + model.gamma ** model.L[i, candidates] * model.v[candidates]
        criterion[i, candidates] = vals
        choice[i] = int(candidates[np.argmax(vals)])
    return GreedyPolicy(choice=choice, criterion=criterion)


def greedy_correlation(
    model: SamdpModel,
    policy: GreedyPolicy,
    ds: TrajectoryDataset,
    clustering: Clustering,
) -> np.ndarray:
    """Per-cluster correlation of greedy-following rate with trajectory reward.

    For trajectory j and cluster i, the rate is the fraction of observed
    transitions out of i that match policy.choice[i]; it is correlated
    across trajectories against the undiscounted total reward. Clusters
    visited by fewer than 2 trajectories, or with zero variance on either
    side, get NaN as the undefined marker.
    """
    if clustering.assignment.shape[0] != ds.n:
        raise ValidationError("clustering does not cover the dataset")
    K = model.K
    table = _segment_transitions(clustering.assignment, ds)
    n_traj = ds.n_trajectories
    match = np.zeros((K, n_traj))
    visits = np.zeros((K, n_traj))
    np.add.at(visits, (table.src, table.traj), 1.0)
    matched = table.dst == policy.choice[table.src]
    np.add.at(match, (table.src, table.traj), matched.astype(np.float64))
    rewards = ds.trajectory_rewards()

    out = np.full(K, np.nan)
    for i in range(K):
        seen = visits[i] > 0
        if seen.sum() < 2:
            continue
        rates = match[i, seen] / visits[i, seen]
        r = rewards[seen]
        if rates.std() == 0.0 or r.std() == 0.0:
            continue
        out[i] = float(np.corrcoef(rates, r)[0, 1])
    return out


def _transition_counts(
    assignment: np.ndarray, ds: TrajectoryDataset, blocks: set[int], K: int
) -> np.ndarray:
    """Raw run-transition counts restricted to the given trajectory blocks."""
    table = _segment_transitions(assignment, ds)
    keep = np.isin(table.traj, list(blocks))
    counts = np.zeros((K, K))
    np.add.at(counts, (table.src[keep], table.dst[keep]), 1.0)
    return counts


def _smooth_rows(counts: np.ndarray, eps: float) -> np.ndarray:
    """Additive smoothing of the row frequencies over off-diagonal entries.

    Smoothing the frequencies rather than the raw counts makes two rows
    with identical outgoing distributions smooth to identical values even
    when their totals differ, so the monitor's log-ratio is exactly zero
    wherever both sets behave alike. Rows with no observations become
    uniform over the off-diagonal.
    """
    K = counts.shape[0]
    totals = counts.sum(axis=1, keepdims=True)
    freq = np.divide(counts, totals, out=np.zeros((K, K)), where=totals > 0)
    M = freq + eps * (1.0 - np.eye(K))
    return M / M.sum(axis=1, keepdims=True)


def fit_eject(
    train: TrajectoryDataset,
    clustering: Clustering,
    model: SamdpModel,
    top_k: int | None = None,
    smoothing: float | None = None,
) -> EjectMonitor:
    """Re-infer transition matrices from the top/bottom rewarded trajectories.

    Ranks training trajectories by undiscounted total reward; the top-k
    set gives T_plus, the bottom-k set T_minus, both from raw run
    transitions with no pruning, additively smoothed in frequency space.
    Default top_k is a third of the training trajectories; default
    smoothing is 1 / (K * total transitions used).
    """
    if clustering.assignment.shape[0] != train.n:
        raise ValidationError("clustering does not cover the training dataset")
    if model.K < 2:
        raise ValidationError("eject monitor needs K >= 2")
    n_traj = train.n_trajectories
    if top_k is None:
        top_k = max(1, n_traj // 3)
    if not 0 < 2 * top_k <= n_traj:
        raise ValidationError(f"top_k={top_k} needs at least {2 * top_k} trajectories, have {n_traj}")

    rewards = train.trajectory_rewards()
    order = np.lexsort((np.arange(n_traj), -rewards))  # reward desc, block asc
    top_blocks = set(int(b) for b in order[:top_k])
    bottom_blocks = set(int(b) for b in order[-top_k:])

    K = model.K
    top_counts = _transition_counts(clustering.assignment, train, top_blocks, K)
    bottom_counts = _transition_counts(clustering.assignment, train, bottom_blocks, K)
    if smoothing is None:
        total = top_counts.sum() + bottom_counts.sum()
        if total <= 0:
            raise SamdpError("no transitions observed in the ranked trajectory sets")
        smoothing = 1.0 / (K * total)
    return EjectMonitor(
        T_plus=_smooth_rows(top_counts, smoothing),
        T_minus=_smooth_rows(bottom_counts, smoothing),
        smoothing=smoothing,
    )


def project_to_clusters(features: np.ndarray, clustering: Clustering) -> np.ndarray:
    """Map each row to its nearest centroid (ties to the lowest index)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != clustering.centroids.shape[1]:
        raise ValidationError("features and centroids have different dimensions")
    return np.argmin(_pointwise_sq_distances(features, clustering.centroids), axis=1)


def eject_run(
    test: TrajectoryDataset,
    clustering: Clustering,
    monitor: EjectMonitor,
    features: np.ndarray | None = None,
    threshold: float = 0.0,
) -> EjectReport:
    """Run the monitor over test trajectories and report the reward gain.

    Each test record maps to the nearest centroid; along each trajectory
    the log-likelihood ratio Lambda accumulates log T_minus[i,j] minus
    log T_plus[i,j] at every cluster transition, and the trajectory is
    ejected at the first step where Lambda exceeds the threshold. Lambda
    resets between trajectories. ``features`` defaults to the test
    dataset's own feature columns and must live in the centroid space.
    """
    if features is None:
        features = test.features
    if features.shape[0] != test.n:
        raise ValidationError("features do not cover the test dataset")
    labels = project_to_clusters(features, clustering)
    table = _segment_transitions(labels, test)
    with np.errstate(divide="ignore", invalid="ignore"):
        # diagonal entries are 0 in both matrices and never visited
        log_ratio = np.log(monitor.T_minus) - np.log(monitor.T_plus)

    traj_ids, ejected_at, rewards = [], [], []
    for block, (tid, start, stop) in enumerate(test.trajectories):
        mask = table.traj == block
        lam = 0.0
        ejected: int | None = None
        for src, dst, row_exit in zip(
            table.src[mask], table.dst[mask], table.row_exit[mask]
        ):
            lam += float(log_ratio[src, dst])
            if lam > threshold:
                ejected = int(test.ts[row_exit])
                break
        traj_ids.append(tid)
        ejected_at.append(ejected)
        rewards.append(float(test.rewards[start:stop].sum()))

    rewards_arr = np.array(rewards)
    keep = np.array([e is None for e in ejected_at])
    mean_all = float(rewards_arr.mean())
    mean_unejected = float(rewards_arr[keep].mean()) if keep.any() else float("nan")
    if keep.all():
        gain = 0.0
    elif not keep.any() or abs(mean_all) < 1e-12:
        gain = float("nan")
    else:
        gain = 100.0 * (mean_unejected - mean_all) / abs(mean_all)
    return EjectReport(
        traj_ids=traj_ids,
        ejected_at=ejected_at,
        rewards=rewards,
        threshold=threshold,
        mean_all=mean_all,
        mean_unejected=mean_unejected,
        gain_pct=gain,
    )


def write_eject_report(report: EjectReport, path) -> None:
    """Per-trajectory lines then the summary (round-trip exact)."""
    out = [f"{EJECT_MAGIC} threshold={report.threshold!r}"]
    for tid, ej, rew in zip(report.traj_ids, report.ejected_at, report.rewards):
        out.append(f"{tid} {'-' if ej is None else ej} {rew!r}")
    out.append(f"mean_all {report.mean_all!r}")
    out.append(f"mean_unejected {report.mean_unejected!r}")
    out.append(f"gain_pct {report.gain_pct!r}")
    Path(path).write_text("\n".join(out) + "\n")


def read_eject_report(path) -> EjectReport:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(EJECT_MAGIC):
        raise ParseError(f"expected header starting with '{EJECT_MAGIC}'", line=1)
    try:
        threshold = float(lines[0].split("threshold=")[1])
    except (IndexError, ValueError):
        raise ParseError("header missing threshold", line=1)
    traj_ids, ejected_at, rewards = [], [], []
    summary: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] in ("mean_all", "mean_unejected", "gain_pct"):
            summary[parts[0]] = float(parts[1])
        elif len(parts) == 3:
            traj_ids.append(int(parts[0]))
            ejected_at.append(None if parts[1] == "-" else int(parts[1]))
            rewards.append(float(parts[2]))
        else:
            raise ParseError(f"unrecognized line: {line!r}", line=lineno)
    missing = {"mean_all", "mean_unejected", "gain_pct"} - set(summary)
    if missing:
        raise ParseError(f"missing summary lines {sorted(missing)}", line=len(lines))
    return EjectReport(
        traj_ids=traj_ids,
        ejected_at=ejected_at,
        rewards=rewards,
        threshold=threshold,
        mean_all=summary["mean_all"],
        mean_unejected=summary["mean_unejected"],
        gain_pct=summary["gain_pct"],
    )
