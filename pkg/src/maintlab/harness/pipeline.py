"""End-to-end training: dataset -> encoders -> offline policy optimization.

A trained bundle holds the frozen encoding stack and the policy that acts
on it; ablation flags swap out exactly one stage each (spectral-only
features, raw-sensor latents, graph-free states, or the tabular learner in
place of the policy-gradient stage).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..baseline import (
    PolicyTable,
    QLearningConfig,
    SingleDeviceEnv,
    greedy_policy,
    q_learning,
)
from ..dae import DaeParams, train_dae
from ..features import FnoParams
from ..graph import GcnParams
from ..numerics.rng import RngStream
from ..plantsim import Dataset, N_SENSORS, generate_dataset, read_csv
from ..policy import (
    ActorCriticParams,
    ExperienceBatch,
    StateEncoder,
    TrainMetrics,
    build_experience,
    train_ppo,
)
from .config import RunConfig

__all__ = ["AblationFlags", "PipelineBundle", "load_dataset", "train_pipeline"]


@dataclass(frozen=True)
class AblationFlags:
    no_fno: bool = False
    no_dae: bool = False
    no_gnn: bool = False
    no_ppo: bool = False

    def label(self) -> str:
        parts = [name for name in ("no_fno", "no_dae", "no_gnn", "no_ppo") if getattr(self, name)]
        return "full" if not parts else "+".join(parts)


@dataclass
class PipelineBundle:
    label: str
    rc: RunConfig
    flags: AblationFlags
    encoder: StateEncoder
    actor_critic: ActorCriticParams | None
    metrics: TrainMetrics | None
    policy_table: PolicyTable | None  # set for the tabular (no_ppo) variant
    experience_size: int
    skipped_transitions: int
    validation_costs: list = None

    @property
    def uses_actor(self) -> bool:
        return self.actor_critic is not None


def load_dataset(rc: RunConfig) -> Dataset:
    """The configured training dataset: generated, or ingested from CSV."""
    if rc.data_csv:
        return read_csv(rc.data_csv)
    return generate_dataset(rc.fleet)


def build_encoder(rc: RunConfig, dataset: Dataset, flags: AblationFlags,
                  dae_params: DaeParams | None) -> StateEncoder:
    n_sensors = dataset.sensors.shape[1]
    norm_mean = norm_std = None
    if dae_params is None:
        norm_mean = dataset.sensors.mean(axis=0)
        std = dataset.sensors.std(axis=0)
        norm_std = np.where(std > 1e-12, std, 1.0)

    fno_params = None
    if not flags.no_fno:
        input_dim = rc.dae.latent_dim if dae_params is not None else n_sensors
        spectral_dim = n_sensors * rc.spectral.n_amplitudes
        fno_params = FnoParams(rc.fno, input_dim, RngStream(rc.fno.seed, "fno-init"),
                               spectral_dim=spectral_dim)

    state_mode = "hybrid" if flags.no_gnn else rc.state_mode
    encoder = StateEncoder(rc.spectral, rc.fno, fno_params, dae_params,
                           rc.gcn, None, state_mode="hybrid",
                           norm_mean=norm_mean, norm_std=norm_std)
    if state_mode != "hybrid":
        hybrid_dim = encoder.hybrid_feature_dim(n_sensors)
        gcn_params = GcnParams(rc.gcn, hybrid_dim, RngStream(rc.seed, "gcn-init"))
        encoder = StateEncoder(rc.spectral, rc.fno, fno_params, dae_params,
                               rc.gcn, gcn_params, state_mode=state_mode,
                               norm_mean=norm_mean, norm_std=norm_std)
    return encoder


def train_pipeline(rc: RunConfig, dataset: Dataset | None = None,
                   flags: AblationFlags = AblationFlags()) -> PipelineBundle:
    """Train the configured variant on the configured dataset."""
    if dataset is None:
        dataset = load_dataset(rc)
    n_sensors = dataset.sensors.shape[1]

    dae_params = None
    if not flags.no_dae:
        dae_cfg = replace(rc.dae, input_dim=n_sensors)
        dae_params, _ = train_dae(dataset.sensors, dae_cfg)

    encoder = build_encoder(rc, dataset, flags, dae_params)

    if flags.no_ppo:
        env = SingleDeviceEnv(rc.fleet, seed=rc.qlearn.seed)
        table = greedy_policy(q_learning(env, rc.qlearn))
        return PipelineBundle(flags.label(), rc, flags, encoder, None, None, table, 0, 0)

    freqs = np.bincount(dataset.action, minlength=4).astype(np.float64)
    logit_bias = np.log((freqs + 1.0) / (freqs.sum() + 4.0))
    state_dim = encoder.state_dim(n_sensors)
    experience = None

    candidates = []
    for restart in range(max(1, rc.train_restarts)):
        seed = rc.ppo.seed + 7919 * restart
        actor_critic = ActorCriticParams(state_dim, rc.ppo,
                                         RngStream(seed, "actor-critic-init"),
                                         logit_bias=logit_bias)
        if experience is None:
            experience = build_experience(dataset, encoder, actor_critic)
        actor_critic, metrics = train_ppo(experience, actor_critic,
                                          replace(rc.ppo, seed=seed))
        candidates.append((actor_critic, metrics))

    if len(candidates) == 1:
        actor_critic, metrics = candidates[0]
        val_costs = []
    else:
        # deterministic model selection on held-out validation rollouts
        from .policies import ActorPolicy, rollout_cost

        val_seeds = [7_000_000 + 131 * rc.seed + i for i in range(rc.validation_rollouts)]
        val_costs = [
            rollout_cost(ActorPolicy(encoder, ac), rc.fleet, rc.validation_horizon, val_seeds)
            for ac, _ in candidates
        ]
        actor_critic, metrics = candidates[int(np.argmin(val_costs))]

    bundle = PipelineBundle(flags.label(), rc, flags, encoder, actor_critic, metrics, None,
                            len(experience), experience.skipped_transitions)
    bundle.validation_costs = [float(c) for c in val_costs]
    return bundle
