"""Skill identification and SAMDP inference.

A skill is a cluster-crossing motif: each trajectory is segmented into
maximal same-cluster runs, and every consecutive run pair (an i-run
followed by a j-run) contributes one instance of the skill i->j. From the
instances we infer the transition matrix P (row-normalized counts with
small-probability truncation), the discounted skill rewards R, the mean
skill lengths L, and the SAMDP value vector.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import Clustering
from .errors import ParseError, SamdpError, ValidationError
from .trajectory import TrajectoryDataset

MODEL_MAGIC = "#samdp-model v1"


@dataclass
class Skill:
    """All observed instances of the transition motif from one cluster to another.

    Each instance is (traj_id, t_enter, t_exit): the time the trajectory
    entered the source cluster's run and the time it arrived in the
    destination cluster. Instance length is t_exit - t_enter.
    """

    from_cluster: int
    to_cluster: int
    instances: list[tuple[int, int, int]] = field(default_factory=list)

    def lengths(self) -> np.ndarray:
        return np.array([te - ts for _, ts, te in self.instances], dtype=np.int64)


@dataclass
class SamdpModel:
    K: int
    P: np.ndarray
    R: np.ndarray
    L: np.ndarray
    gamma: float
    v: np.ndarray
    counts: np.ndarray
    absorbing: np.ndarray
    min_length: int = 2
    min_prob: float = 0.1

    def __post_init__(self):
        for name in ("P", "R", "L", "counts"):
            arr = np.asarray(getattr(self, name), dtype=np.float64 if name != "counts" else np.int64)
            if arr.shape != (self.K, self.K):
                raise ValidationError(f"{name} must be {self.K}x{self.K}, got {arr.shape}")
            setattr(self, name, arr)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.absorbing = np.asarray(self.absorbing, dtype=bool)
        if np.any(np.diag(self.P) != 0.0):
            raise ValidationError("self-transitions are not skills: P diagonal must be 0")


@dataclass
class _TransitionTable:
    """Flat arrays of run transitions; the fast path shared by all inference."""

    src: np.ndarray        # source cluster per instance
    dst: np.ndarray        # destination cluster per instance
    row_enter: np.ndarray  # absolute dataset row where the source run starts
    row_exit: np.ndarray   # absolute dataset row where the destination run starts
    traj: np.ndarray       # trajectory block index per instance


def _segment_transitions(assignment: np.ndarray, ds: TrajectoryDataset) -> _TransitionTable:
    """Segment each trajectory into runs and list consecutive run pairs.

    Vectorized over the whole dataset; runs never straddle trajectory
    boundaries. Instances come out in ascending dataset-row order.
    """
    lengths = np.array([e - s for _, s, e in ds.trajectories])
    block_of_row = np.repeat(np.arange(lengths.size), lengths)
    new_run = np.r_[True, assignment[1:] != assignment[:-1]]
    new_run[[s for _, s, _ in ds.trajectories]] = True
    run_starts = np.flatnonzero(new_run)
    run_block = block_of_row[run_starts]
    same = run_block[1:] == run_block[:-1]
    return _TransitionTable(
        src=assignment[run_starts[:-1]][same],
        dst=assignment[run_starts[1:]][same],
        row_enter=run_starts[:-1][same],
        row_exit=run_starts[1:][same],
        traj=run_block[:-1][same],
    )


def identify_skills(clustering: Clustering, ds: TrajectoryDataset) -> list[Skill]:
    """Extract all skills (cluster-crossing run pairs) from a clustering.

    Terminal runs (the trajectory ends inside a cluster) yield no instance.
    Returned skills are sorted by (from_cluster, to_cluster); t_enter and
    t_exit are time indices within the trajectory.
    """
    if clustering.assignment.shape[0] != ds.n:
        raise ValidationError("clustering does not cover every record of the dataset")
    table = _segment_transitions(clustering.assignment, ds)
    by_pair: dict[tuple[int, int], Skill] = {}
    tid_of_block = [tid for tid, _, _ in ds.trajectories]
    start_of_block = {b: s for b, (_, s, _) in enumerate(ds.trajectories)}
    for i in range(table.src.size):
        key = (int(table.src[i]), int(table.dst[i]))
        skill = by_pair.get(key)
        if skill is None:
            skill = by_pair[key] = Skill(*key)
        block = int(table.traj[i])
        offset = start_of_block[block]
        skill.instances.append(
            (tid_of_block[block], int(table.row_enter[i] - offset), int(table.row_exit[i] - offset))
        )
    return [by_pair[k] for k in sorted(by_pair)]


def _instance_rewards(
    row_enter: np.ndarray, row_exit: np.ndarray, rewards: np.ndarray, gamma: float
) -> np.ndarray:
    """Discounted reward per instance: sum gamma^(u-1) r[enter+u], u=1..k.

    Instances are grouped by length so each group is one vectorized gather.
    """
    out = np.empty(row_enter.size)
    lengths = row_exit - row_enter
    for k in np.unique(lengths):
        mask = lengths == k
        starts = row_enter[mask]
        window = rewards[starts[:, None] + np.arange(1, k + 1)[None, :]]
        out[mask] = window @ (gamma ** np.arange(k))
    return out


def infer(
    skills: list[Skill],
    ds: TrajectoryDataset,
    gamma: float,
    min_length: int = 2,
    min_prob: float = 0.1,
    k: int | None = None,
) -> SamdpModel:
    """Build the SAMDP model from identified skills.

    Instances shorter than min_length are discarded; transition entries
    below min_prob are zeroed and the rows renormalized. R and L keep
    their values wherever raw counts survive, even for pruned P entries,
    so the greedy policy can still score them. ``k`` fixes the cluster
    count (defaults to 1 + the largest cluster index seen).
    """
    src, dst, row_enter, row_exit = [], [], [], []
    for skill in skills:
        for tid, ts, te in skill.instances:
            start, _ = ds.trajectory_rows(tid)
            src.append(skill.from_cluster)
            dst.append(skill.to_cluster)
            row_enter.append(start + ts)
            row_exit.append(start + te)
    table = _TransitionTable(
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(row_enter, dtype=np.int64),
        np.array(row_exit, dtype=np.int64),
        np.zeros(len(src), dtype=np.int64),
    )
    if k is None:
        if table.src.size == 0:
            raise SamdpError("no skill instances to infer from")
        k = int(max(table.src.max(), table.dst.max())) + 1
    return _infer_from_table(table, ds, gamma, min_length, min_prob, k)


def _infer_from_table(
    table: _TransitionTable,
    ds: TrajectoryDataset,
    gamma: float,
    min_length: int,
    min_prob: float,
    K: int,
) -> SamdpModel:
    keep = (table.row_exit - table.row_enter) >= min_length
    if not np.any(keep):
        raise SamdpError("no skill instances survive the length threshold")
    src = table.src[keep]
    dst = table.dst[keep]
    row_enter = table.row_enter[keep]
    row_exit = table.row_exit[keep]

    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (src, dst), 1)

    inst_rewards = _instance_rewards(row_enter, row_exit, ds.rewards, gamma)
    inst_lengths = (row_exit - row_enter).astype(np.float64)
    R = np.zeros((K, K))
    L = np.zeros((K, K))
    np.add.at(R, (src, dst), inst_rewards)
    np.add.at(L, (src, dst), inst_lengths)
    nz = counts > 0
    R[nz] /= counts[nz]
    L[nz] /= counts[nz]

    row_totals = counts.sum(axis=1)
    P = np.zeros((K, K))
    has_out = row_totals > 0
    P[has_out] = counts[has_out] / row_totals[has_out, None]
    P[P < min_prob] = 0.0
    row_sums = P.sum(axis=1)
    absorbing = row_sums <= 0.0
    P[~absorbing] /= row_sums[~absorbing, None]
    newly_pruned = absorbing & has_out
    if np.any(newly_pruned):
        warnings.warn(
            f"clusters {np.flatnonzero(newly_pruned).tolist()} lost every outgoing "
            "transition to pruning; flagged absorbing with value 0",
            stacklevel=3,
        )

    v = samdp_value(P, R, L, gamma)
    return SamdpModel(
        K=K, P=P, R=R, L=L, gamma=gamma, v=v, counts=counts,
        absorbing=absorbing, min_length=min_length, min_prob=min_prob,
    )


def infer_from_clustering(
    clustering: Clustering,
    ds: TrajectoryDataset,
    gamma: float | None = None,
    min_length: int = 2,
    min_prob: float = 0.1,
) -> SamdpModel:
    """identify_skills + infer in one step, on the fast array path."""
    if clustering.assignment.shape[0] != ds.n:
        raise ValidationError("clustering does not cover every record of the dataset")
    table = _segment_transitions(clustering.assignment, ds)
    return _infer_from_table(
        table, ds, ds.gamma if gamma is None else gamma, min_length, min_prob, clustering.K
    )


def samdp_value(P: np.ndarray, R: np.ndarray, L: np.ndarray, gamma: float) -> np.ndarray:
    """Solve the SAMDP fixed point v = r + diag(gamma^k) P v.

    r_i is the P-weighted mean skill reward out of cluster i and k_i the
    P-weighted mean skill length. Absorbing rows (all-zero P) get v = 0.
    """
    P = np.asarray(P, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    K = P.shape[0]
    r = (P * R).sum(axis=1)
    k_i = (P * L).sum(axis=1)
    discount = gamma**k_i
    A = np.eye(K) - discount[:, None] * P
    try:
        v = np.linalg.solve(A, r)
    except np.linalg.LinAlgError:
        raise SamdpError(
            "SAMDP value system is singular (gamma=1 with a recurrent transition "
            "matrix has no unique fixed point); use gamma < 1"
        )
    residual = np.abs(v - (r + discount * (P @ v))).max()
    if residual > 1e-9:
        warnings.warn(f"SAMDP value residual {residual:.2e} above 1e-9", stacklevel=2)
    return v


def _matrix_lines(name: str, M: np.ndarray, fmt=repr) -> list[str]:
    lines = [name]
    for row in np.atleast_2d(M):
        lines.append(" ".join(fmt(x) for x in row))
    return lines


def write_model(model: SamdpModel, path, w: int = -1) -> None:
    """Write a model export file (round-trip exact)."""
    out = [
        f"{MODEL_MAGIC} K={model.K} w={w} gamma={model.gamma!r} "
        f"min_length={model.min_length} min_prob={model.min_prob!r}"
    ]
    out += _matrix_lines("P", model.P, fmt=lambda x: repr(float(x)))
    out += _matrix_lines("R", model.R, fmt=lambda x: repr(float(x)))
    out += _matrix_lines("L", model.L, fmt=lambda x: repr(float(x)))
    out += _matrix_lines("v", model.v[None, :], fmt=lambda x: repr(float(x)))
    out += _matrix_lines("counts", model.counts, fmt=lambda x: str(int(x)))
    out.append("absorbing")
    out.append(" ".join(str(i) for i in np.flatnonzero(model.absorbing)))
    Path(path).write_text("\n".join(out) + "\n")


def read_model(path) -> tuple[SamdpModel, int]:
    """Read a model export file; returns (model, w from the header)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(MODEL_MAGIC):
        raise ParseError(f"expected header starting with '{MODEL_MAGIC}'", line=1)
    hdr = {}
    for tok in lines[0][len(MODEL_MAGIC) :].split():
        key, val = tok.split("=", 1)
        hdr[key] = val
    try:
        K = int(hdr["K"])
        w = int(hdr["w"])
        gamma = float(hdr["gamma"])
        min_length = int(hdr["min_length"])
        min_prob = float(hdr["min_prob"])
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad model header: {e}", line=1)

    blocks: dict[str, list[list[str]]] = {}
    current: list[list[str]] | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if stripped in ("P", "R", "L", "v", "counts", "absorbing"):
            current = blocks.setdefault(stripped, [])
        elif current is not None:
            current.append(stripped.split())
        elif stripped:
            raise ParseError(f"content before any block: {line!r}", line=lineno)
    for name in ("P", "R", "L", "v", "counts", "absorbing"):
        if name not in blocks:
            raise ParseError(f"model file missing block {name!r}", line=1)

    def floats(block):
        return np.array([[float(x) for x in row] for row in block])

    absorbing = np.zeros(K, dtype=bool)
    flat = [x for row in blocks["absorbing"] for x in row]
    if flat:
        absorbing[[int(x) for x in flat]] = True
    model = SamdpModel(
        K=K,
        P=floats(blocks["P"]),
        R=floats(blocks["R"]),
        L=floats(blocks["L"]),
        gamma=gamma,
        v=floats(blocks["v"])[0],
        counts=np.array([[int(x) for x in row] for row in blocks["counts"]]),
        absorbing=absorbing,
        min_length=min_length,
        min_prob=min_prob,
    )
    return model, w
