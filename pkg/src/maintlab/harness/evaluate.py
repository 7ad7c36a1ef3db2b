"""Policy evaluation on fresh fleets, and wear-level policy-table extraction.

The evaluation metric is undiscounted average cost per device-step over a
fixed-horizon rollout (the discounted return from step zero is reported
alongside). Policies are deterministic given their parameters; rollouts
are deterministic given the evaluation seeds, so reports regenerate
value-identically from their configuration.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np

from ..baseline import N_WEAR_LEVELS, PolicyTable, discretize_wear_value
from ..graph import build_graph
from ..graph import normalize as graph_normalize
from ..numerics.rng import RngStream
from ..plantsim import Fleet, FleetConfig
from ..policy import actor_forward
from .pipeline import PipelineBundle
from .policies import ActorPolicy, ConstantPolicy, TablePolicy, rollout_cost

__all__ = ["EvalReport", "ConstantPolicy", "TablePolicy", "ActorPolicy", "bundle_policy",
           "evaluate_policy", "extract_policy_table", "rollout_cost"]


@dataclass
class EvalReport:
    label: str
    avg_cost_per_step: float
    discounted_return: float
    failure_count: int
    action_histogram: tuple
    horizon: int
    seeds: tuple
    n_devices: int
    seconds: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "avg_cost_per_step": self.avg_cost_per_step,
            "discounted_return": self.discounted_return,
            "failure_count": self.failure_count,
            "action_histogram": list(self.action_histogram),
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "n_devices": self.n_devices,
            "seconds": self.seconds,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def bundle_policy(bundle: PipelineBundle):
    """The evaluation policy of a trained pipeline variant."""
    if bundle.policy_table is not None:
        return TablePolicy(bundle.policy_table, label=bundle.label)
    return ActorPolicy(bundle.encoder, bundle.actor_critic, label=bundle.label)


def evaluate_policy(policy, fleet_cfg: FleetConfig, horizon: int, seeds,
                    gamma: float = 0.99) -> EvalReport:
    """Simulate fresh fleets per seed under the policy and aggregate costs."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    seeds = tuple(int(s) for s in seeds)
    started = time.perf_counter()
    total_cost = 0.0
    discounted = 0.0
    failures = 0
    histogram = np.zeros(4, dtype=np.int64)
    for seed in seeds:
        cfg = replace(fleet_cfg, seed=seed)
        rng = RngStream(seed, "eval")
        fleet = Fleet(cfg, rng.spawn("init"))
        shock_rng = rng.spawn("shocks")
        dyn_rng = rng.spawn("dynamics")
        policy.reset(cfg)
        discount = 1.0
        for t in range(horizon):
            actions = policy.act(fleet, t)
            histogram += np.bincount(actions, minlength=4)
            shocks = fleet.draw_shocks(shock_rng)
            costs, events = fleet.apply(actions, shocks, dyn_rng)
            step_cost = float(costs.sum())
            total_cost += step_cost
            discounted += discount * (-step_cost / cfg.n_devices)
            discount *= gamma
            failures += int(events.sum())
    denom = len(seeds) * horizon * fleet_cfg.n_devices
    return EvalReport(
        label=getattr(policy, "label", "policy"),
        avg_cost_per_step=total_cost / denom,
        discounted_return=discounted / len(seeds),
        failure_count=failures,
        action_histogram=tuple(int(h) for h in histogram),
        horizon=horizon,
        seeds=seeds,
        n_devices=fleet_cfg.n_devices,
        seconds=time.perf_counter() - started,
    )


def extract_policy_table(bundle: PipelineBundle, fleet_cfg: FleetConfig,
                         samples_per_level: int = 24, seed: int = 0,
                         max_tries: int = 8) -> PolicyTable:
    """Majority greedy action of the trained policy at each wear level.

    States are synthesized in the simulator: the probe device starts in the
    level's wear bin (failed for the top level), groupmates start at
    typical healthy wear, and a do-nothing warm-up fills the window before
    the actor is queried. Samples whose final discretization misses the
    target level are redrawn a bounded number of times; a level that never
    yields a valid sample is reported unsampled rather than guessed.
    """
    if bundle.policy_table is not None:
        return bundle.policy_table

    encoder, actor = bundle.encoder, bundle.actor_critic
    window = encoder.window
    rng = RngStream(seed, "policy-table")
    actions = np.full(N_WEAR_LEVELS, -1, dtype=np.int64)
    bin_width = 1.0 / N_WEAR_LEVELS

    for level in range(N_WEAR_LEVELS):
        votes = []
        for sample in range(samples_per_level):
            sample_rng = rng.spawn(f"level{level}-sample{sample}")
            for _ in range(max_tries):
                cfg = replace(fleet_cfg, seed=int(sample_rng.integers(0, 2**31 - 1)))
                fleet = Fleet(cfg, sample_rng.spawn("init"))
                failed_target = level == N_WEAR_LEVELS - 1
                if failed_target:
                    start = sample_rng.uniform(0.6, 0.95)
                    fleet.failed[0] = True
                else:
                    lo = level * bin_width
                    hi = lo + bin_width
                    start = sample_rng.uniform(lo, hi)
                    start = max(0.0, start - (window - 1) * cfg.base_wear_rate)
                fleet.wear[0] = start
                shock_rng = sample_rng.spawn("shocks")
                dyn_rng = sample_rng.spawn("dyn")
                fleet.refresh_sensors(sample_rng.spawn("sensor-reset"))
                history = [fleet.sensors.copy()]
                for _t in range(window - 1):
                    shocks = fleet.draw_shocks(shock_rng)
                    fleet.apply(np.zeros(cfg.n_devices, dtype=np.int64), shocks, dyn_rng)
                    history.append(fleet.sensors.copy())
                got_level = int(discretize_wear_value(fleet.wear[:1], fleet.failed[:1])[0])
                if got_level != level:
                    continue
                windows = np.stack(history[-window:], axis=1)
                features = encoder.device_features(windows)
                groups = cfg.group_of(np.arange(cfg.n_devices))
                self_loops = encoder.gcn_cfg.self_loops if encoder.gcn_cfg else True
                a_norm = graph_normalize(build_graph(groups), self_loops)
                current = encoder.normalize_windows(fleet.sensors)
                states = encoder.states_from_features(features, a_norm, current)
                votes.append(int(np.argmax(actor_forward(states[:1], actor), axis=1)[0]))
                break
        if votes:
            counts = np.bincount(votes, minlength=4)
            actions[level] = int(np.argmax(counts))  # argmax tie -> lower severity
    return PolicyTable(actions=actions)
