"""Trajectory data model and the on-disk trajectory log format.

A trajectory log is line-delimited text. The first line is a header

    #samdp-log v1 m=<m> gamma=<gamma>

and every following line is one state record, whitespace separated:

    traj_id t done action reward value_estimate f_1 ... f_m

where ``done`` is 0/1 and ``action`` is an integer (-1 = unknown). Floats
are written with Python ``repr`` so that write -> ingest -> write is
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

LOG_MAGIC = "#samdp-log v1"


@dataclass(frozen=True)
class StateRecord:
    """One recorded state: features plus the per-step statistics.

    ``reward`` is the reward observed on arrival at this state (0.0 for the
    first record of a trajectory). ``value_estimate`` is the evaluated
    policy's value prediction at this state.
    """

    traj_id: int
    t: int
    features: np.ndarray
    action: int
    reward: float
    done: bool
    value_estimate: float


@dataclass
class TrajectoryDataset:
    """Immutable columnar store of state records grouped by trajectory.

    Rows are ordered by trajectory block, then by time index within the
    block; this row order is what every downstream matrix (features,
    embeddings, cluster assignments) is aligned to.
    """

    traj_ids: np.ndarray
    ts: np.ndarray
    features: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    values: np.ndarray
    gamma: float
    trajectories: list[tuple[int, int, int]] = field(init=False)

    def __post_init__(self):
        self.traj_ids = np.asarray(self.traj_ids, dtype=np.int64)
        self.ts = np.asarray(self.ts, dtype=np.int64)
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.dones = np.asarray(self.dones, dtype=bool)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.trajectories = self._index_trajectories()
        self._validate()

    @property
    def n(self) -> int:
        return self.traj_ids.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def n_trajectories(self) -> int:
        return len(self.trajectories)

    def _index_trajectories(self) -> list[tuple[int, int, int]]:
        out: list[tuple[int, int, int]] = []
        n = self.traj_ids.shape[0]
        start = 0
        for i in range(1, n + 1):
            if i == n or self.traj_ids[i] != self.traj_ids[start]:
                out.append((int(self.traj_ids[start]), start, i))
                start = i
        return out

    def _validate(self):
        n = self.n
        for arr, name in [
            (self.ts, "t"),
            (self.actions, "action"),
            (self.rewards, "reward"),
            (self.dones, "done"),
            (self.values, "value_estimate"),
        ]:
            if arr.shape != (n,):
                raise ValidationError(f"column '{name}' has shape {arr.shape}, expected ({n},)")
        if self.features.shape[0] != n:
            raise ValidationError(f"features have {self.features.shape[0]} rows, expected {n}")
        if n == 0:
            raise ValidationError("dataset has no records")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in (0, 1], got {self.gamma}")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features contain non-finite entries")

        seen: set[int] = set()
        for traj_id, start, stop in self.trajectories:
            if traj_id in seen:
                raise ValidationError(f"traj_id {traj_id} appears in more than one block")
            seen.add(traj_id)
            expected = np.arange(stop - start)
            if not np.array_equal(self.ts[start:stop], expected):
                raise ValidationError(
                    f"traj_id {traj_id}: t must be consecutive from 0, got {self.ts[start:stop].tolist()}"
                )
            if np.any(self.dones[start : stop - 1]):
                raise ValidationError(f"traj_id {traj_id}: done=true before the final record")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectoryDataset):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and np.array_equal(self.traj_ids, other.traj_ids)
            and np.array_equal(self.ts, other.ts)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.actions, other.actions)
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.dones, other.dones)
            and np.array_equal(self.values, other.values)
        )

    def records(self):
        """Iterate rows as StateRecord objects (row order)."""
        for i in range(self.n):
            yield StateRecord(
                traj_id=int(self.traj_ids[i]),
                t=int(self.ts[i]),
                features=self.features[i],
                action=int(self.actions[i]),
                reward=float(self.rewards[i]),
                done=bool(self.dones[i]),
                value_estimate=float(self.values[i]),
            )

    def trajectory_rows(self, traj_id: int) -> tuple[int, int]:
        """Return the (start, stop) row range of one trajectory."""
        for tid, start, stop in self.trajectories:
            if tid == traj_id:
                return start, stop
        raise KeyError(f"traj_id {traj_id} not in dataset")

    def subset(self, traj_id_set) -> "TrajectoryDataset":
        """Dataset restricted to the given trajectory ids, preserving order."""
        wanted = set(int(t) for t in traj_id_set)
        keep = [(s, e) for tid, s, e in self.trajectories if tid in wanted]
        if not keep:
            raise ValidationError("subset would be empty")
        idx = np.concatenate([np.arange(s, e) for s, e in keep])
        return TrajectoryDataset(
            traj_ids=self.traj_ids[idx],
            ts=self.ts[idx],
            features=self.features[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            dones=self.dones[idx],
            values=self.values[idx],
            gamma=self.gamma,
        )

    def trajectory_rewards(self) -> np.ndarray:
        """Undiscounted total reward per trajectory, in block order."""
        return np.array([self.rewards[s:e].sum() for _, s, e in self.trajectories])


def from_records(records, gamma: float) -> TrajectoryDataset:
    """Build a dataset from an iterable of StateRecord."""
    recs = list(records)
    if not recs:
        raise ValidationError("no records given")
    feats = np.array([np.asarray(r.features, dtype=np.float64) for r in recs])
    return TrajectoryDataset(
        traj_ids=np.array([r.traj_id for r in recs]),
        ts=np.array([r.t for r in recs]),
        features=feats,
        actions=np.array([r.action for r in recs]),
        rewards=np.array([r.reward for r in recs]),
        dones=np.array([r.done for r in recs]),
        values=np.array([r.value_estimate for r in recs]),
        gamma=gamma,
    )


def ingest(path, gamma: float | None = None) -> TrajectoryDataset:
    """Parse a trajectory log file into a validated dataset.

    ``gamma`` overrides the header value when given. Raises ParseError with
    the offending line number on malformed input and ValidationError when
    the parsed records violate a dataset invariant.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0]
    if not header.startswith(LOG_MAGIC):
        raise ParseError(f"expected header starting with '{LOG_MAGIC}'", line=1)
    hdr = _parse_header_kv(header[len(LOG_MAGIC) :], line=1)
    try:
        m = int(hdr["m"])
        header_gamma = float(hdr["gamma"])
    except KeyError as e:
        raise ParseError(f"header missing field {e}", line=1)

    traj_ids, ts, actions, rewards, dones, values = [], [], [], [], [], []
    feats = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6 + m:
            raise ParseError(
                f"expected {6 + m} fields (m={m}), got {len(parts)}", line=lineno
            )
        try:
            traj_ids.append(int(parts[0]))
            ts.append(int(parts[1]))
            dones.append(_parse_bool(parts[2]))
            actions.append(int(parts[3]))
            rewards.append(float(parts[4]))
            values.append(float(parts[5]))
            feats.append([float(x) for x in parts[6:]])
        except ValueError as e:
            raise ParseError(str(e), line=lineno)

    if not traj_ids:
        raise ParseError("log contains a header but no records", line=1)
    return TrajectoryDataset(
        traj_ids=np.array(traj_ids),
        ts=np.array(ts),
        features=np.array(feats),
        actions=np.array(actions),
        rewards=np.array(rewards),
        dones=np.array(dones),
        values=np.array(values),
        gamma=header_gamma if gamma is None else gamma,
    )


def write(ds: TrajectoryDataset, path) -> None:
    """Write a dataset in the trajectory log format (round-trip exact)."""
    path = Path(path)
    out = [f"{LOG_MAGIC} m={ds.m} gamma={ds.gamma!r}"]
    for i in range(ds.n):
        fs = " ".join(repr(float(x)) for x in ds.features[i])
        out.append(
            f"{ds.traj_ids[i]} {ds.ts[i]} {int(ds.dones[i])} {ds.actions[i]} "
            f"{float(ds.rewards[i])!r} {float(ds.values[i])!r} {fs}"
        )
    path.write_text("\n".join(out) + "\n")


def split(
    ds: TrajectoryDataset, train_count: int, seed: int
) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    """Partition by whole trajectories into (train, test), seeded.

    Trajectories keep their original block order inside each part; only
    membership is random.
    """
    ids = [tid for tid, _, _ in ds.trajectories]
    if not 0 < train_count < len(ids):
        raise ValidationError(
            f"train_count must be in (0, {len(ids)}), got {train_count}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    train_ids = {ids[i] for i in perm[:train_count]}
    test_ids = {ids[i] for i in perm[train_count:]}
    return ds.subset(train_ids), ds.subset(test_ids)


def _parse_bool(token: str) -> bool:
    if token == "0":
        return False
    if token == "1":
        return True
    raise ValueError(f"expected 0/1 for done, got {token!r}")


def _parse_header_kv(rest: str, line: int) -> dict[str, str]:
    out = {}
    for tok in rest.split():
        if "=" not in tok:
            raise ParseError(f"bad header token {tok!r}", line=line)
        k, v = tok.split("=", 1)
        out[k] = v
    return out
