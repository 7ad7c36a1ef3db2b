"""Fleet-level policies used for rollouts: constant, wear-table, and actor-driven."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..baseline import PolicyTable, discretize_wear_value
from ..graph import build_graph
from ..graph import normalize as graph_normalize
from ..numerics.rng import RngStream
from ..plantsim import Fleet, FleetConfig, MaintenanceAction
from ..policy import ActorCriticParams, StateEncoder, actor_forward

__all__ = ["ConstantPolicy", "TablePolicy", "ActorPolicy", "rollout_cost"]


class ConstantPolicy:
    """Same action for every device at every step."""

    def __init__(self, action: int, label: str | None = None):
        self.action = int(action)
        self.label = label or f"always_{MaintenanceAction(action).name.lower()}"

    def reset(self, fleet_cfg: FleetConfig) -> None:
        pass

    def act(self, fleet: Fleet, t: int) -> np.ndarray:
        return np.full(fleet.cfg.n_devices, self.action, dtype=np.int64)


class TablePolicy:
    """Wear-level lookup policy (tabular baselines and ablations)."""

    def __init__(self, table: PolicyTable, label: str = "wear_table"):
        self.table = table
        self.label = label

    def reset(self, fleet_cfg: FleetConfig) -> None:
        pass

    def act(self, fleet: Fleet, t: int) -> np.ndarray:
        levels = discretize_wear_value(fleet.wear, fleet.failed)
        actions = self.table.actions[levels]
        return np.where(actions >= 0, actions, 0).astype(np.int64)


class ActorPolicy:
    """Policy of a trained actor over the frozen encoding pipeline.

    Keeps a rolling window of recent sensor readings per device; until the
    window fills it acts do-nothing (no feature exists yet, matching the
    training-side warm-up).

    ``mode="sample"`` (default) draws from the learned action distribution
    with a stream derived from the rollout seed, so evaluations stay
    reproducible; a stochastic rollout also cannot absorb into any
    off-distribution state the greedy argmax might get stuck in.
    ``mode="greedy"`` takes the argmax everywhere.
    """

    def __init__(self, encoder: StateEncoder, actor: ActorCriticParams, label: str = "pipeline",
                 mode: str = "sample"):
        if mode not in ("sample", "greedy"):
            raise ValueError(f"unknown mode {mode!r}")
        self.encoder = encoder
        self.actor = actor
        self.label = label
        self.mode = mode
        self._history = None
        self._a_norm = None
        self._rng = None

    def reset(self, fleet_cfg: FleetConfig) -> None:
        self._history = []
        groups = fleet_cfg.group_of(np.arange(fleet_cfg.n_devices))
        self_loops = self.encoder.gcn_cfg.self_loops if self.encoder.gcn_cfg else True
        self._a_norm = graph_normalize(build_graph(groups), self_loops)
        self._rng = RngStream(fleet_cfg.seed, "actor-policy-draws")

    def act(self, fleet: Fleet, t: int) -> np.ndarray:
        n = fleet.cfg.n_devices
        self._history.append(fleet.sensors.copy())
        window = self.encoder.window
        if len(self._history) < window:
            return np.zeros(n, dtype=np.int64)
        self._history = self._history[-window:]
        windows = np.stack(self._history, axis=1)  # (N, L, S)
        features = self.encoder.device_features(windows)
        current = self.encoder.normalize_windows(fleet.sensors)
        states = self.encoder.states_from_features(features, self._a_norm, current)
        log_probs = actor_forward(states, self.actor)
        if self.mode == "greedy":
            return np.argmax(log_probs, axis=1).astype(np.int64)
        cum = np.cumsum(np.exp(log_probs), axis=1)
        draws = self._rng.uniform(size=n)
        return np.minimum((draws[:, None] >= cum).sum(axis=1), 3).astype(np.int64)


def rollout_cost(policy, fleet_cfg: FleetConfig, horizon: int, seeds) -> float:
    """Average cost per device-step of a policy over fresh fleets."""
    total = 0.0
    for seed in seeds:
        cfg = replace(fleet_cfg, seed=int(seed))
        rng = RngStream(int(seed), "eval")
        fleet = Fleet(cfg, rng.spawn("init"))
        shock_rng = rng.spawn("shocks")
        dyn_rng = rng.spawn("dynamics")
        policy.reset(cfg)
        for t in range(horizon):
            actions = policy.act(fleet, t)
            shocks = fleet.draw_shocks(shock_rng)
            costs, _ = fleet.apply(actions, shocks, dyn_rng)
            total += float(costs.sum())
    return total / (len(list(seeds)) * horizon * fleet_cfg.n_devices)
