"""Wear-level discretization and the tabular Q-learning baseline.

The continuous wear state collapses to seven levels (uniform bins of
width 1/7; the failed state is its own absorbing top level until replaced).
Q-learning interacts online with single-device rollouts of the simulator;
a value-iteration solver over explicit transition/reward tensors provides
the exactness oracle on small hand-built decision processes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics.rng import RngStream
from .plantsim import ACTION_NAMES, Fleet, FleetConfig

__all__ = [
    "N_WEAR_LEVELS",
    "QTable",
    "PolicyTable",
    "QLearningConfig",
    "discretize_wear",
    "discretize_wear_value",
    "SingleDeviceEnv",
    "q_learning",
    "q_learning_offline",
    "value_iteration",
    "greedy_policy",
]

N_WEAR_LEVELS = 7
N_ACTIONS = 4


def discretize_wear_value(wear, failed) -> np.ndarray:
    """Wear in [0, 1] -> level 0..6; failure forces the top level."""
    wear = np.asarray(wear, dtype=np.float64)
    level = np.minimum(np.floor(wear * N_WEAR_LEVELS), N_WEAR_LEVELS - 1).astype(np.int64)
    return np.where(np.asarray(failed, dtype=bool), N_WEAR_LEVELS - 1, level)


def discretize_wear(state) -> int:
    """Level of a DeviceState."""
    return int(discretize_wear_value(state.wear, state.failed))


@dataclass
class QTable:
    values: np.ndarray  # (7, 4)
    visits: np.ndarray  # (7, 4)

    @classmethod
    def zeros(cls) -> "QTable":
        return cls(np.zeros((N_WEAR_LEVELS, N_ACTIONS)), np.zeros((N_WEAR_LEVELS, N_ACTIONS), dtype=np.int64))


@dataclass
class PolicyTable:
    """Total map wear level -> action; rendered like the reporting tables."""

    actions: np.ndarray  # (7,) int; -1 marks an unsampled level

    def action_for(self, level: int) -> int:
        return int(self.actions[level])

    def lines(self):
        for level, a in enumerate(self.actions):
            name = ACTION_NAMES[a] if a >= 0 else "unsampled"
            yield f"{level},{name}"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("wear_level,action_name\n")
            for line in self.lines():
                fh.write(line + "\n")

    @classmethod
    def read(cls, path):
        actions = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            if header.strip() != "wear_level,action_name":
                raise ValueError(f"{path}: unexpected policy table header")
            for line in fh:
                _, _, name = line.strip().partition(",")
                actions.append(ACTION_NAMES.index(name) if name in ACTION_NAMES else -1)
        if len(actions) != N_WEAR_LEVELS:
            raise ValueError(f"{path}: expected {N_WEAR_LEVELS} rows")
        return cls(np.asarray(actions, dtype=np.int64))


@dataclass(frozen=True)
class QLearningConfig:
    episodes: int = 400
    episode_length: int = 400
    discount: float = 0.99
    alpha_start: float = 0.5
    alpha_end: float = 0.05
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    seed: int = 0


class SingleDeviceEnv:
    """One-device rollout environment over the fleet dynamics."""

    def __init__(self, cfg: FleetConfig, seed: int):
        self.cfg = replace(cfg, n_devices=1, seed=seed)
        self._rng = RngStream(seed, "qlearn-env")
        self._episode = 0
        self.fleet = None

    def reset(self):
        self._episode += 1
        rng = self._rng.spawn(f"episode-{self._episode}")
        self._shock_rng = rng.spawn("shocks")
        self._dyn_rng = rng.spawn("dynamics")
        self.fleet = Fleet(self.cfg, rng.spawn("init"))
        return int(discretize_wear_value(self.fleet.wear, self.fleet.failed)[0])

    def step(self, action: int):
        shocks = self.fleet.draw_shocks(self._shock_rng)
        costs, _ = self.fleet.apply(np.array([action]), shocks, self._dyn_rng)
        level = int(discretize_wear_value(self.fleet.wear, self.fleet.failed)[0])
        return level, float(costs[0])


def _schedule(start, end, frac):
    """Linear decay over the first half of training, flat afterwards."""
    ramp = min(1.0, 2.0 * frac)
    return start + (end - start) * ramp


def q_learning(env, cfg: QLearningConfig) -> QTable:
    """Online epsilon-greedy temporal-difference control; rewards = -costs."""
    table = QTable.zeros()
    rng = RngStream(cfg.seed, "qlearn")
    for episode in range(cfg.episodes):
        frac = episode / max(1, cfg.episodes - 1)
        alpha = _schedule(cfg.alpha_start, cfg.alpha_end, frac)
        epsilon = _schedule(cfg.epsilon_start, cfg.epsilon_end, frac)
        s = env.reset()
        explore = rng.uniform(size=cfg.episode_length)
        random_actions = rng.integers(0, N_ACTIONS, size=cfg.episode_length)
        for t in range(cfg.episode_length):
            a = int(random_actions[t]) if explore[t] < epsilon else int(np.argmax(table.values[s]))
            s_next, cost = env.step(a)
            r = -cost
            target = r + cfg.discount * np.max(table.values[s_next])
            table.values[s, a] += alpha * (target - table.values[s, a])
            table.visits[s, a] += 1
            s = s_next
    return table


def q_learning_offline(dataset, cfg: QLearningConfig) -> QTable:
    """Replay variant: sweeps logged transitions instead of interacting.

    Kept for ablation symmetry with the offline policy learner; uses the
    same update rule on (level_t, a_t, -cost_t, level_{t+1}).
    """
    table = QTable.zeros()
    levels = discretize_wear_value(dataset.sensors[:, 0], dataset.failed.astype(bool))
    rng = RngStream(cfg.seed, "qlearn-replay")
    per_device = [dataset.device_rows(d) for d in dataset.devices()]
    transitions = []
    for rows in per_device:
        for i in range(len(rows) - 1):
            r0, r1 = rows[i], rows[i + 1]
            if dataset.time_step[r1] != dataset.time_step[r0] + 1:
                continue
            transitions.append((levels[r0], dataset.action[r0], -dataset.cost[r0], levels[r1]))
    transitions = np.asarray(transitions, dtype=np.float64)
    n = len(transitions)
    sweeps = max(1, (cfg.episodes * cfg.episode_length) // max(n, 1))
    for sweep in range(sweeps):
        frac = sweep / max(1, sweeps - 1)
        alpha = _schedule(cfg.alpha_start, cfg.alpha_end, frac)
        for i in rng.permutation(n):
            s, a, r, s2 = transitions[i]
            s, a, s2 = int(s), int(a), int(s2)
            target = r + cfg.discount * np.max(table.values[s2])
            table.values[s, a] += alpha * (target - table.values[s, a])
            table.visits[s, a] += 1
    return table


def value_iteration(transitions, rewards, gamma: float, tol: float = 1e-9):
    """Bellman-optimality iteration on an explicit decision process.

    ``transitions[s, a, s']`` must be row-stochastic; ``rewards[s, a]`` is
    the expected immediate reward. Returns (optimal values, greedy policy),
    ties broken toward the lower-severity action.
    """
    p = np.asarray(transitions, dtype=np.float64)
    r = np.asarray(rewards, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != p.shape[2] or p.shape[:2] != r.shape:
        raise ValueError("need transitions (S, A, S) and rewards (S, A)")
    row_sums = p.sum(axis=2)
    if not np.allclose(row_sums, 1.0, atol=1e-9):
        raise ValueError("transition rows must sum to 1")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1) for convergence")

    v = np.zeros(p.shape[0])
    while True:
        q = r + gamma * (p @ v)
        v_new = q.max(axis=1)
        if np.max(np.abs(v_new - v)) < tol:
            v = v_new
            break
        v = v_new
    q = r + gamma * (p @ v)
    return v, q.argmax(axis=1)


def greedy_policy(table: QTable) -> PolicyTable:
    """Argmax per level; exact ties resolve to the lower-severity action."""
    if not np.all(np.isfinite(table.values)):
        raise ValueError("Q-table contains non-finite entries")
    return PolicyTable(actions=table.values.argmax(axis=1).astype(np.int64))
