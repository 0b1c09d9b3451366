"""Reach-the-ball-and-return gridworld: the bundled reference domain.

The agent starts at the origin, must reach the ball cell and come back;
state is (x, y, b) with b = ball collected. Features for the SAMDP pipeline
use the flip-translate map that sends post-ball states to a disjoint region:

    phi(x, y, b) = (x, y)        if b = 0
                   (2L - x, y)   if b = 1

Maze files are plain text: a `#samdp-maze v1` magic line, `key=value`
header lines, then H grid rows over the alphabet `#` (wall), `.` (free),
`X` (origin), `B` (ball).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .trajectory import TrajectoryDataset

MAZE_MAGIC = "#samdp-maze v1"

ACTIONS = ("up", "down", "left", "right")
ACTION_DELTAS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}


@dataclass(frozen=True)
class GridState:
    x: int
    y: int
    b: bool


@dataclass
class GridConfig:
    L: int
    H: int
    walls: frozenset
    origin: tuple[int, int]
    ball: tuple[int, int]
    step_reward: float = -0.01
    goal_reward: float = 1.0
    epsilon: float = 0.05
    gamma: float = 0.95
    seed: int = 0
    max_steps: int = 500

    def __post_init__(self):
        self.walls = frozenset(self.walls)
        for name, cell in [("origin", self.origin), ("ball", self.ball)]:
            x, y = cell
            if not (0 <= x < self.L and 0 <= y < self.H):
                raise ValidationError(f"{name} {cell} outside the maze")
            if cell in self.walls:
                raise ValidationError(f"{name} {cell} is a wall cell")
        if self.origin == self.ball:
            raise ValidationError("origin and ball must be distinct cells")
        if not _reachable(self, self.origin, self.ball):
            raise ValidationError("no path between origin and ball")

    def free(self, x: int, y: int) -> bool:
        return 0 <= x < self.L and 0 <= y < self.H and (x, y) not in self.walls

    def validate_state(self, s: GridState) -> None:
        if not self.free(s.x, s.y):
            raise ValidationError(f"state ({s.x}, {s.y}) is not a free cell")


def step(cfg: GridConfig, s: GridState, action: str) -> tuple[GridState, float, bool]:
    """Deterministic transition: blocked moves stay in place.

    b flips on entering the ball cell; the episode ends with goal_reward
    added on entering the origin with b already true.
    """
    cfg.validate_state(s)
    if action not in ACTION_DELTAS:
        raise ValidationError(f"unknown action {action!r}")
    dx, dy = ACTION_DELTAS[action]
    nx, ny = s.x + dx, s.y + dy
    if not cfg.free(nx, ny):
        nx, ny = s.x, s.y
    b = s.b or (nx, ny) == cfg.ball
    done = b and (nx, ny) == cfg.origin
    reward = cfg.step_reward + (cfg.goal_reward if done else 0.0)
    return GridState(nx, ny, b), reward, done


def phi(s: GridState, L: int) -> np.ndarray:
    """Flip-translate feature map; post-ball states land in x > L."""
    if s.b:
        return np.array([2 * L - s.x, s.y], dtype=np.float64)
    return np.array([float(s.x), float(s.y)], dtype=np.float64)


def _state_index(cfg: GridConfig):
    cells = [(x, y) for y in range(cfg.H) for x in range(cfg.L) if cfg.free(x, y)]
    idx = {}
    for b in (False, True):
        for cell in cells:
            idx[(cell[0], cell[1], b)] = len(idx)
    return cells, idx


def value_oracle(cfg: GridConfig) -> dict[GridState, float]:
    """Optimal value table by value iteration to residual < 1e-10.

    The terminal state (origin with b=1) has value 0; gamma comes from the
    config (gamma=0 collapses to the best immediate reward).
    """
    if not (_reachable(cfg, cfg.origin, cfg.ball) and _reachable(cfg, cfg.ball, cfg.origin)):
        raise ValidationError("goal is unreachable: no origin->ball->origin path")
    cells, idx = _state_index(cfg)
    n = len(idx)
    v = np.zeros(n)
    terminal = idx[(cfg.origin[0], cfg.origin[1], True)]

    # precompute successor index and reward per (state, action)
    succ = np.empty((n, len(ACTIONS)), dtype=np.int64)
    rew = np.empty((n, len(ACTIONS)))
    done = np.zeros((n, len(ACTIONS)), dtype=bool)
    for (x, y, b), i in idx.items():
        for a_i, a in enumerate(ACTIONS):
            s2, r, d = step(cfg, GridState(x, y, b), a)
            succ[i, a_i] = idx[(s2.x, s2.y, s2.b)]
            rew[i, a_i] = r
            done[i, a_i] = d

    for _ in range(100_000):
        q = rew + cfg.gamma * np.where(done, 0.0, v[succ])
        v_new = q.max(axis=1)
        v_new[terminal] = 0.0
        residual = np.abs(v_new - v).max()
        v = v_new
        if residual < 1e-10:
            break
    else:
        raise ValidationError("value iteration did not reach residual < 1e-10")

    return {GridState(x, y, b): float(v[i]) for (x, y, b), i in idx.items()}


def _greedy_action(cfg: GridConfig, values, s: GridState, sign: float = 1.0) -> str:
    best_a, best_q = None, -np.inf
    for a in ACTIONS:
        s2, r, d = step(cfg, s, a)
        q = sign * (r + (0.0 if d else cfg.gamma * values[s2]))
        if q > best_q:
            best_a, best_q = a, q
    return best_a


def generate(
    cfg: GridConfig,
    n_traj: int,
    corruption: float = 0.0,
    raw_features: bool = False,
) -> TrajectoryDataset:
    """Roll out the epsilon-greedy optimal policy into a dataset.

    With probability ``corruption`` a trajectory instead follows, for one
    random contiguous segment, the greedy policy of the negated value table
    (a worst-case detour). Features are phi(s) by default, or raw (x, y)
    when ``raw_features`` is set; value_estimate comes from the oracle.
    Rewards are recorded on arrival: record t carries the reward of the
    step that entered state t (0.0 at t=0).
    """
    if n_traj < 1:
        raise ValidationError("n_traj must be >= 1")
    if not 0.0 <= corruption <= 1.0:
        raise ValidationError("corruption must be in [0, 1]")
    values = value_oracle(cfg)
    nominal = _nominal_route_length(cfg, values)

    traj_ids, ts, feats, actions, rewards, dones, vals = [], [], [], [], [], [], []
    for k in range(n_traj):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, k)))
        corrupt = rng.random() < corruption
        if corrupt:
            # detour window: anywhere along the nominal route, long enough
            # to retreat across cluster-sized stretches of it
            seg_start = int(rng.integers(0, max(1, int(0.8 * nominal))))
            seg_len = int(rng.integers(cfg.L, 3 * cfg.L))
        else:
            seg_start, seg_len = -1, 0

        s = GridState(cfg.origin[0], cfg.origin[1], False)
        t = 0
        arrival_reward = 0.0
        while True:
            in_detour = corrupt and seg_start <= t < seg_start + seg_len
            if in_detour:
                a = _greedy_action(cfg, values, s, sign=-1.0)
            elif rng.random() < cfg.epsilon:
                a = ACTIONS[rng.integers(len(ACTIONS))]
            else:
                a = _greedy_action(cfg, values, s)
            s2, r, d = step(cfg, s, a)
            stop = d or t + 1 >= cfg.max_steps

            traj_ids.append(k)
            ts.append(t)
            feats.append(
                np.array([float(s.x), float(s.y)]) if raw_features else phi(s, cfg.L)
            )
            actions.append(ACTIONS.index(a))
            rewards.append(arrival_reward)
            dones.append(False)
            vals.append(values[s])

            if stop:
                traj_ids.append(k)
                ts.append(t + 1)
                feats.append(
                    np.array([float(s2.x), float(s2.y)]) if raw_features else phi(s2, cfg.L)
                )
                actions.append(-1)
                rewards.append(r)
                dones.append(d)
                vals.append(0.0 if d else values[s2])
                break
            s = s2
            arrival_reward = r
            t += 1

    return TrajectoryDataset(
        traj_ids=np.array(traj_ids),
        ts=np.array(ts),
        features=np.array(feats),
        actions=np.array(actions),
        rewards=np.array(rewards),
        dones=np.array(dones),
        values=np.array(vals),
        gamma=cfg.gamma,
    )


def _nominal_route_length(cfg: GridConfig, values) -> int:
    """Length of the deterministic greedy rollout (the noise-free route)."""
    s = GridState(cfg.origin[0], cfg.origin[1], False)
    for t in range(cfg.max_steps):
        s, _, done = step(cfg, s, _greedy_action(cfg, values, s))
        if done:
            return t + 1
    return cfg.max_steps


def _reachable(cfg: GridConfig, src: tuple[int, int], dst: tuple[int, int]) -> bool:
    if src == dst:
        return True
    seen = {src}
    q = deque([src])
    while q:
        x, y = q.popleft()
        for dx, dy in ACTION_DELTAS.values():
            nxt = (x + dx, y + dy)
            if nxt == dst:
                return True
            if cfg.free(*nxt) and nxt not in seen:
                seen.add(nxt)
                q.append(nxt)
    return False


_HEADER_FLOATS = ("step_reward", "goal_reward", "epsilon", "gamma")
_HEADER_INTS = ("seed", "max_steps")


def load_maze(path) -> GridConfig:
    """Parse a maze config file into a GridConfig."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MAZE_MAGIC:
        raise ParseError(f"expected magic line {MAZE_MAGIC!r}", line=1)
    kv: dict[str, str] = {}
    grid: list[str] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if not grid and "=" in line:
            k, v = line.split("=", 1)
            kv[k.strip()] = v.strip()
        elif set(line) <= set("#.XB"):
            grid.append(line)
        else:
            raise ParseError(f"neither header nor grid row: {line!r}", line=lineno)
    if not grid:
        raise ParseError("maze file has no grid rows", line=len(lines))
    widths = {len(row) for row in grid}
    if len(widths) != 1:
        raise ParseError(f"grid rows have unequal widths {sorted(widths)}", line=1)

    L, H = widths.pop(), len(grid)
    walls, origin, ball = set(), None, None
    for y, row in enumerate(grid):
        for x, ch in enumerate(row):
            if ch == "#":
                walls.add((x, y))
            elif ch == "X":
                if origin is not None:
                    raise ParseError("more than one origin cell 'X'", line=1)
                origin = (x, y)
            elif ch == "B":
                if ball is not None:
                    raise ParseError("more than one ball cell 'B'", line=1)
                ball = (x, y)
    if origin is None or ball is None:
        raise ParseError("maze must contain exactly one 'X' and one 'B'", line=1)

    kwargs = {}
    for k in _HEADER_FLOATS:
        if k in kv:
            kwargs[k] = float(kv[k])
    for k in _HEADER_INTS:
        if k in kv:
            kwargs[k] = int(kv[k])
    unknown = set(kv) - set(_HEADER_FLOATS) - set(_HEADER_INTS)
    if unknown:
        raise ParseError(f"unknown maze header keys {sorted(unknown)}", line=1)
    return GridConfig(L=L, H=H, walls=frozenset(walls), origin=origin, ball=ball, **kwargs)


def write_maze(cfg: GridConfig, path) -> None:
    """Write a GridConfig back to the maze file format (round-trip exact)."""
    rows = []
    for y in range(cfg.H):
        row = []
        for x in range(cfg.L):
            if (x, y) in cfg.walls:
                row.append("#")
            elif (x, y) == cfg.origin:
                row.append("X")
            elif (x, y) == cfg.ball:
                row.append("B")
            else:
                row.append(".")
        rows.append("".join(row))
    header = [MAZE_MAGIC]
    for k in _HEADER_FLOATS:
        header.append(f"{k}={getattr(cfg, k)!r}")
    for k in _HEADER_INTS:
        header.append(f"{k}={getattr(cfg, k)}")
    Path(path).write_text("\n".join(header + rows) + "\n")


def bundled_maze_path(name: str) -> Path:
    """Path of a maze shipped with the package (maze_a, maze_b, maze_c)."""
    ref = resources.files("samdp").joinpath(f"data/{name}.txt")
    p = Path(str(ref))
    if not p.exists():
        raise ValidationError(f"no bundled maze named {name!r}")
    return p
