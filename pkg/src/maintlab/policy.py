"""Offline experience construction and clipped proximal policy optimization.

The actor and critic are small tanh MLPs over per-device state vectors.
States come from a frozen encoding pipeline: hybrid window features per
device, one graph pass per time step, and (by default) the device's own
hybrid feature concatenated with its graph embedding. Training replays a
fixed experience pool: each main iteration re-freezes the current policy's
log-probabilities as the "old" distribution, then runs K epochs of
shuffled minibatch updates on the clipped surrogate plus critic and
entropy terms, tracking the approximate KL divergence between successive
policies.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .dae import DaeParams, encode
from .features import (
    FnoConfig,
    FnoParams,
    SpectralConfig,
    fno_branch,
    fuse,
    spectral_branch,
)
from .graph import GcnConfig, GcnParams, gcn_forward, normalize as graph_normalize, build_graph
from .numerics import autodiff as ad
from .numerics.optim import Parameter, adam_step
from .numerics.rng import RngStream
from .plantsim import Dataset
from .serialize import load_arrays, save_arrays

__all__ = [
    "PpoConfig",
    "ActorCriticParams",
    "ExperienceTuple",
    "ExperienceBatch",
    "TrainMetrics",
    "StateEncoder",
    "actor_forward",
    "critic_forward",
    "build_experience",
    "advantage",
    "normalize_advantages",
    "ppo_losses",
    "train_ppo",
    "approx_kl",
]

N_ACTIONS = 4


@dataclass(frozen=True)
class PpoConfig:
    clip_epsilon: float = 0.2
    discount: float = 0.99
    inner_epochs: int = 4
    samples_per_round: int = 1024
    iterations: int = 20
    critic_weight: float = 0.5
    entropy_weight: float = 0.01
    entropy_anneal: bool = True  # entropy bonus follows the lr decay, sharpening the final policy
    learning_rate: float = 3e-3
    critic_learning_rate: float = 3e-3  # separate head; value regression needs larger steps
    lr_anneal: bool = True  # quadratic decay toward lr_anneal_floor by the last iteration
    lr_anneal_floor: float = 0.0  # fraction of the base rate remaining at the end
    reward_scale: float = 1e-3  # training-side scaling; stored rewards stay raw
    critic_warmup_iterations: int = 5  # value-only iterations before policy updates begin
    critic_warmup_epochs: int = 25  # regression epochs per warmup iteration
    # Failure is persistent, not terminal: a failed device keeps incurring
    # downtime until replaced, so by default the TD target bootstraps
    # through it. Masking is available for genuinely episodic data.
    done_bootstrap_mask: bool = False
    # One-step TD targets refresh once per round (a stable fitted-value
    # backup). Refreshing every epoch deepens the value function faster but
    # lets it chase its own bootstrap and destabilizes the advantages, so
    # it stays off by default.
    warmup_refresh_each_epoch: bool = False
    minibatch_size: int = 256
    hidden_dim: int = 64
    advantage_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.inner_epochs < 1:
            raise ValueError("inner_epochs must be >= 1")


class ActorCriticParams:
    """Actor MLP (state -> 4 logits) and critic MLP (state -> value).

    ``logit_bias`` seeds the output layer so the initial policy matches a
    reference action distribution (typically the logging policy's
    marginals); training then starts from alignment instead of spending
    its clip budget on re-imitating the data.
    """

    def __init__(self, state_dim: int, cfg: PpoConfig, rng: RngStream, logit_bias=None):
        h = cfg.hidden_dim

        def uniform(shape, fan_in, name):
            bound = 1.0 / np.sqrt(fan_in)
            return Parameter(rng.uniform(-bound, bound, size=shape), name)

        self.actor_w1 = uniform((state_dim, h), state_dim, "actor_w1")
        self.actor_b1 = Parameter(np.zeros(h), "actor_b1")
        self.actor_w2 = uniform((h, N_ACTIONS), h, "actor_w2")
        bias = np.zeros(N_ACTIONS) if logit_bias is None else np.asarray(logit_bias, dtype=np.float64)
        self.actor_b2 = Parameter(bias.copy(), "actor_b2")
        self.critic_w1 = uniform((state_dim, h), state_dim, "critic_w1")
        self.critic_b1 = Parameter(np.zeros(h), "critic_b1")
        self.critic_w2 = uniform((h, 1), h, "critic_w2")
        self.critic_b2 = Parameter(np.zeros(1), "critic_b2")
        self.state_dim = state_dim

    def parameters(self):
        return [self.actor_w1, self.actor_b1, self.actor_w2, self.actor_b2,
                self.critic_w1, self.critic_b1, self.critic_w2, self.critic_b2]

    def actor_parameters(self):
        return [self.actor_w1, self.actor_b1, self.actor_w2, self.actor_b2]

    def critic_parameters(self):
        return [self.critic_w1, self.critic_b1, self.critic_w2, self.critic_b2]

    def arrays(self):
        return {p.name: p.value for p in self.parameters()}

    @classmethod
    def from_arrays(cls, arrays, state_dim: int, cfg: PpoConfig):
        params = cls(state_dim, cfg, RngStream(0, "ac-placeholder"))
        for p in params.parameters():
            p.value = np.array(arrays[p.name])
        return params

    def save(self, path):
        save_arrays(path, self.arrays())

    @classmethod
    def load(cls, path, state_dim: int, cfg: PpoConfig):
        return cls.from_arrays(load_arrays(path), state_dim, cfg)


@dataclass(frozen=True)
class ExperienceTuple:
    """One offline transition: (s, a, log pi_old(a|s), r, s', done)."""

    state: np.ndarray
    action: int
    logp_old: float
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class ExperienceBatch:
    """Columnar experience pool; one row per transition."""

    states: np.ndarray
    actions: np.ndarray
    logp_old: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    skipped_transitions: int = 0

    def __len__(self):
        return self.states.shape[0]

    def tuples(self):
        for i in range(len(self)):
            yield ExperienceTuple(
                self.states[i],
                int(self.actions[i]),
                float(self.logp_old[i]),
                float(self.rewards[i]),
                self.next_states[i],
                bool(self.dones[i]),
            )


@dataclass
class TrainMetrics:
    """Per-iteration training diagnostics."""

    actor_loss: list = field(default_factory=list)
    critic_loss: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    approx_kl: list = field(default_factory=list)
    mean_advantage: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def rows(self):
        for i in range(len(self.approx_kl)):
            yield (i, self.actor_loss[i], self.critic_loss[i], self.entropy[i],
                   self.approx_kl[i], self.mean_advantage[i], self.seconds[i])


# ---------------------------------------------------------------------------
# networks


def actor_forward(state, params: ActorCriticParams):
    """Log-probabilities over the four actions; rows sum to one in prob space.

    ReLU hidden layers: the states carry deliberately large out-of-envelope
    coordinates for abnormal conditions, and a saturating activation would
    flatten gradients exactly there.
    """
    _check_state(state, params.state_dim)
    h = ad.relu(ad.add(ad.matmul(state, _wv(params.actor_w1, state)), _wv(params.actor_b1, state)))
    logits = ad.add(ad.matmul(h, _wv(params.actor_w2, h)), _wv(params.actor_b2, h))
    return ad.log_softmax(logits)


def critic_forward(state, params: ActorCriticParams):
    """State value estimate(s); shape (...,) matching the batch."""
    _check_state(state, params.state_dim)
    h = ad.relu(ad.add(ad.matmul(state, _wv(params.critic_w1, state)), _wv(params.critic_b1, state)))
    v = ad.add(ad.matmul(h, _wv(params.critic_w2, h)), _wv(params.critic_b2, h))
    val = v.value if isinstance(v, ad.Var) else v
    return ad.reshape(v, val.shape[:-1])


def _check_state(state, dim):
    val = state.value if isinstance(state, ad.Var) else np.asarray(state)
    if val.shape[-1] != dim:
        raise ValueError(f"expected state dim {dim}, got {val.shape[-1]}")


def _wv(param, like):
    return like.tape.watch(param) if isinstance(like, ad.Var) else param.value


# ---------------------------------------------------------------------------
# frozen encoding pipeline


class StateEncoder:
    """Window sensors -> hybrid features -> (optional) graph context -> state.

    ``state_mode`` selects what the policy sees:

    * ``"hybrid+gnn"`` (default): the device's own hybrid feature
      concatenated with its graph embedding. Group members of a clique
      share one embedding under symmetric self-loop normalization, so the
      own-feature half keeps per-device identifiability while the graph
      half carries group context.
    * ``"gnn"``: graph embedding alone.
    * ``"hybrid"``: own hybrid feature alone (the graph-free variant).
    """

    def __init__(self, spec_cfg: SpectralConfig, fno_cfg: FnoConfig,
                 fno_params: FnoParams | None, dae_params: DaeParams | None,
                 gcn_cfg: GcnConfig | None, gcn_params: GcnParams | None,
                 state_mode: str = "hybrid+gnn",
                 norm_mean=None, norm_std=None,
                 include_current_reading: bool = True):
        if state_mode not in ("hybrid+gnn", "gnn", "hybrid"):
            raise ValueError(f"unknown state_mode {state_mode!r}")
        if "gnn" in state_mode and gcn_params is None:
            raise ValueError("state_mode includes the graph embedding but no GCN params given")
        # Window features are aggregates (and the magnitude spectrum is
        # phase-blind), so a condition change on the final step is heavily
        # diluted; appending the current normalized reading keeps the
        # decision-relevant "right now" visible to the policy.
        self.include_current_reading = include_current_reading
        self.spec_cfg = spec_cfg
        self.fno_cfg = fno_cfg
        self.fno_params = fno_params
        self.dae_params = dae_params
        self.gcn_cfg = gcn_cfg
        self.gcn_params = gcn_params
        self.state_mode = state_mode
        # normalization for the no-DAE path (raw z-scored sensors)
        self.norm_mean = norm_mean if norm_mean is not None else (
            dae_params.norm_mean if dae_params is not None else None)
        self.norm_std = norm_std if norm_std is not None else (
            dae_params.norm_std if dae_params is not None else None)
        # observation standardization, fit once on the training experience
        self.state_norm_mean = None
        self.state_norm_std = None

    @property
    def window(self) -> int:
        return self.fno_cfg.window

    def hybrid_feature_dim(self, n_sensors: int = 5) -> int:
        dim = n_sensors * self.spec_cfg.n_amplitudes
        if self.fno_params is not None:
            if self.fno_cfg.fused_dim is not None:
                return self.fno_cfg.fused_dim
            dim += self.fno_cfg.branch_dim
        return dim

    def state_dim(self, n_sensors: int = 5) -> int:
        own = self.hybrid_feature_dim(n_sensors)
        if self.state_mode == "hybrid":
            dim = own
        else:
            gnn = self.gcn_cfg.output_dim
            dim = gnn if self.state_mode == "gnn" else own + gnn
        return dim + (n_sensors if self.include_current_reading else 0)

    def normalize_windows(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.norm_mean) / self.norm_std

    def latent_windows(self, windows: np.ndarray) -> np.ndarray:
        """Raw windows (..., L, S) -> per-step latents for the temporal branch."""
        normalized = self.normalize_windows(windows)
        if self.dae_params is None:
            return normalized
        return encode(normalized, self.dae_params)

    def device_features(self, windows: np.ndarray) -> np.ndarray:
        """Raw windows (..., L, S) -> hybrid features (..., F).

        Both branches consume z-scored windows; the heterogeneous sensor
        scales would otherwise dominate the spectral magnitudes and
        saturate every downstream nonlinearity.
        """
        f_sp = spectral_branch(self.normalize_windows(windows), self.spec_cfg)
        if self.fno_params is None:
            return f_sp
        latents = self.latent_windows(windows)
        chunks = []
        flat = latents.reshape(-1, latents.shape[-2], latents.shape[-1])
        flat_sp = f_sp.reshape(-1, f_sp.shape[-1])
        out = np.empty((flat.shape[0], self.hybrid_feature_dim(windows.shape[-1])))
        step = 8192
        for start in range(0, flat.shape[0], step):
            stop = min(start + step, flat.shape[0])
            branch = fno_branch(flat[start:stop], self.fno_params, self.fno_cfg)
            out[start:stop] = fuse(flat_sp[start:stop], branch, self.fno_params)
        return out.reshape(*f_sp.shape[:-1], -1)

    def states_from_features(self, features: np.ndarray, a_norm: np.ndarray,
                             current_readings: np.ndarray = None) -> np.ndarray:
        """Per-device features (N, F) at one time step -> policy states (N, D).

        ``current_readings`` are the devices' latest normalized sensor rows;
        required when the encoder was built with include_current_reading.
        """
        if self.state_mode == "hybrid":
            raw = features
        else:
            embedding = gcn_forward(features, a_norm, self.gcn_params)
            raw = embedding if self.state_mode == "gnn" else np.concatenate(
                [features, embedding], axis=-1)
        if self.include_current_reading:
            if current_readings is None:
                raise ValueError("encoder expects the current sensor readings")
            raw = np.concatenate([raw, current_readings], axis=-1)
        return self.apply_state_norm(raw)

    def apply_state_norm(self, states: np.ndarray) -> np.ndarray:
        if self.state_norm_mean is None:
            return states
        return (states - self.state_norm_mean) / self.state_norm_std

    def fit_state_norm(self, states: np.ndarray) -> np.ndarray:
        """Estimate standardization stats from the training states; returns them standardized."""
        self.state_norm_mean = states.mean(axis=0)
        std = states.std(axis=0)
        self.state_norm_std = np.where(std > 1e-12, std, 1.0)
        return self.apply_state_norm(states)


def dataset_states(dataset: Dataset, encoder: StateEncoder):
    """Encode every post-warm-up step of every device.

    Returns ``(states, device_ids, time_steps, row_index)``: states has one
    row per (device, t >= L-1) pair, grouped by time step, and row_index
    maps each state to its dataset row.
    """
    devices = dataset.devices()
    rows_per_device = {d: dataset.device_rows(d) for d in devices}
    lengths = {d: len(r) for d, r in rows_per_device.items()}
    t_max = max(lengths.values())
    window = encoder.window

    # hybrid features for every complete window, device-major
    feature_rows = {}
    for d in devices:
        rows = rows_per_device[d]
        sensors = dataset.sensors[rows]
        if sensors.shape[0] < window:
            continue
        windows = np.lib.stride_tricks.sliding_window_view(sensors, window, axis=0)
        windows = np.transpose(windows, (0, 2, 1))  # (T-L+1, L, S)
        feature_rows[d] = (rows, encoder.device_features(windows))

    groups = np.array([dataset.group_id[dataset.device_rows(d)[0]] for d in devices])
    a_norm = graph_normalize(build_graph(groups),
                             encoder.gcn_cfg.self_loops if encoder.gcn_cfg else True)

    states, device_ids, time_steps, row_index = [], [], [], []
    for t in range(window - 1, t_max):
        idx = [i for i, d in enumerate(devices)
               if d in feature_rows and t < lengths[d]]
        if not idx:
            continue
        present = [devices[i] for i in idx]
        feats = np.stack([feature_rows[d][1][t - (window - 1)] for d in present])
        if len(idx) < len(devices):
            # ragged fleet: renormalize the induced subgraph
            sub = graph_normalize(
                build_graph(groups[idx]),
                encoder.gcn_cfg.self_loops if encoder.gcn_cfg else True,
            )
        else:
            sub = a_norm
        current = np.stack([dataset.sensors[feature_rows[d][0][t]] for d in present])
        step_states = encoder.states_from_features(feats, sub, encoder.normalize_windows(current))
        for j, d in enumerate(present):
            states.append(step_states[j])
            device_ids.append(d)
            time_steps.append(t)
            row_index.append(feature_rows[d][0][t])
    return (np.asarray(states), np.asarray(device_ids), np.asarray(time_steps),
            np.asarray(row_index))


def build_experience(dataset: Dataset, encoder: StateEncoder,
                     actor_params: ActorCriticParams) -> ExperienceBatch:
    """Consecutive-pair transitions from the logged fleet history.

    A transition at step t pairs the encoded state at t with the state at
    t+1; reward is the negated logged cost, and done marks entry into the
    failed state at t+1. Non-consecutive time steps are skipped and
    counted.
    """
    states, device_ids, time_steps, row_index = dataset_states(dataset, encoder)
    if encoder.state_norm_mean is None:
        states = encoder.fit_state_norm(states)
    key = {}
    last_t = {}
    for i in range(len(states)):
        d, t = int(device_ids[i]), int(time_steps[i])
        key[(d, t)] = i
        last_t[d] = max(last_t.get(d, t), t)

    s_list, a_list, r_list, s2_list, d_list = [], [], [], [], []
    skipped = 0
    for i in range(len(states)):
        d, t = int(device_ids[i]), int(time_steps[i])
        j = key.get((d, t + 1))
        if j is None:
            if t < last_t[d]:
                skipped += 1
            continue
        row = row_index[i]
        next_row = row_index[j]
        if dataset.time_step[next_row] != dataset.time_step[row] + 1:
            skipped += 1
            continue
        s_list.append(i)
        a_list.append(dataset.action[row])
        r_list.append(-dataset.cost[row])
        s2_list.append(j)
        d_list.append(dataset.failed[next_row])

    batch = ExperienceBatch(
        states=states[s_list],
        actions=np.asarray(a_list, dtype=np.int64),
        logp_old=np.zeros(len(s_list)),
        rewards=np.asarray(r_list, dtype=np.float64),
        next_states=states[s2_list],
        dones=np.asarray(d_list, dtype=bool),
        skipped_transitions=skipped,
    )
    if len(batch):
        logp = actor_forward(batch.states, actor_params)
        batch.logp_old = logp[np.arange(len(batch)), batch.actions]
    return batch


# ---------------------------------------------------------------------------
# losses and training


def advantage(rewards, values, next_values, dones, gamma: float):
    """One-step TD target and advantage, masking bootstrap at termination."""
    rewards = np.asarray(rewards, dtype=np.float64)
    mask = 1.0 - np.asarray(dones, dtype=np.float64)
    q_hat = rewards + gamma * np.asarray(next_values) * mask
    return q_hat, q_hat - np.asarray(values)


def normalize_advantages(adv, eps: float = 1e-8):
    adv = np.asarray(adv, dtype=np.float64)
    return (adv - adv.mean()) / (adv.std() + eps)


def ppo_losses(minibatch: dict, params: ActorCriticParams, cfg: PpoConfig, tape: ad.Tape):
    """Clipped surrogate + critic MSE + entropy bonus on one tape.

    Returns (total, actor, critic, entropy) Vars; total is what training
    minimizes: -actor + c1 * critic - c2 * entropy.
    """
    states = tape.constant(minibatch["states"])
    logp = actor_forward(states, params)
    picked = ad.gather_rows(logp, minibatch["actions"])
    ratio = ad.exp(ad.subtract(picked, minibatch["logp_old"]))
    adv = minibatch["advantages"]
    clipped = ad.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
    actor_obj = ad.reduce_mean(ad.minimum(ad.multiply(ratio, adv), ad.multiply(clipped, adv)))

    values = critic_forward(states, params)
    critic_loss = ad.mean_square_error(values, minibatch["q_hat"])

    probs = ad.exp(logp)
    entropy = ad.reduce_mean(ad.negative(ad.reduce_sum(ad.multiply(probs, logp), axis=-1)))

    total = ad.add(
        ad.add(ad.negative(actor_obj), ad.multiply(cfg.critic_weight, critic_loss)),
        ad.negative(ad.multiply(cfg.entropy_weight, entropy)),
    )
    return total, actor_obj, critic_loss, entropy


def approx_kl(logp_old, logp_new) -> float:
    """k1 estimator over taken actions: mean(log pi_old - log pi_new)."""
    logp_old = np.asarray(logp_old, dtype=np.float64)
    logp_new = np.asarray(logp_new, dtype=np.float64)
    if logp_old.shape != logp_new.shape:
        raise ValueError("log-probability batches must have equal length")
    return float(np.mean(logp_old - logp_new))


def train_ppo(experience: ExperienceBatch, params: ActorCriticParams, cfg: PpoConfig):
    """Offline PPO main loop; returns (params, per-iteration TrainMetrics).

    Each iteration draws up to ``samples_per_round`` transitions, freezes
    the current policy's log-probabilities and TD advantages, then runs
    ``inner_epochs`` shuffled minibatch passes. The approximate KL between
    the frozen and updated policy is recorded after every iteration.
    """
    if len(experience) == 0:
        raise ValueError("experience pool is empty")
    rng = RngStream(cfg.seed, "ppo")
    sample_rng = rng.spawn("round-sampling")
    shuffle_rng = rng.spawn("minibatch-shuffle")
    metrics = TrainMetrics()
    n = len(experience)

    def draw_round():
        take = min(cfg.samples_per_round, n)
        idx = sample_rng.choice(n, size=take, replace=False)
        rewards = experience.rewards[idx] * cfg.reward_scale
        dones = experience.dones[idx]
        states = experience.states[idx]
        next_states = experience.next_states[idx]
        actions = experience.actions[idx]
        logp_old = actor_forward(states, params)[np.arange(take), actions]
        mask = dones if cfg.done_bootstrap_mask else np.zeros_like(dones)

        def td_targets():
            values = critic_forward(states, params)
            next_values = critic_forward(next_states, params)
            return advantage(rewards, values, next_values, mask, cfg.discount)

        q_hat, adv_raw = td_targets()
        adv = normalize_advantages(adv_raw, cfg.advantage_epsilon)
        round_data = {
            "states": states,
            "actions": actions,
            "logp_old": logp_old,
            "q_hat": q_hat,
            "adv": adv,
            "take": take,
            "td_targets": td_targets,
        }
        return round_data, adv_raw

    def run_epochs(round_data, epochs, lr, critic_lr, update_actor, refresh_each_epoch=False,
                   loss_cfg=None):
        states = round_data["states"]
        actions = round_data["actions"]
        logp_old = round_data["logp_old"]
        adv = round_data["adv"]
        q_hat = round_data["q_hat"]
        take = round_data["take"]
        loss_cfg = loss_cfg or cfg
        a_losses, c_losses, entropies = [], [], []
        for epoch in range(epochs):
            if epoch > 0 and refresh_each_epoch:
                q_hat, _ = round_data["td_targets"]()
            order = shuffle_rng.permutation(take)
            for start in range(0, take, cfg.minibatch_size):
                sl = order[start : start + cfg.minibatch_size]
                tape = ad.Tape()
                total, actor_obj, critic_loss, entropy = ppo_losses(
                    {
                        "states": states[sl],
                        "actions": actions[sl],
                        "logp_old": logp_old[sl],
                        "advantages": adv[sl],
                        "q_hat": q_hat[sl],
                    },
                    params,
                    loss_cfg,
                    tape,
                )
                a_losses.append(float(actor_obj.value))
                c_losses.append(float(critic_loss.value))
                entropies.append(float(entropy.value))
                tape.backward(total)
                if update_actor:
                    adam_step(params.actor_parameters(), lr=lr)
                adam_step(params.critic_parameters(), lr=critic_lr)
        return a_losses, c_losses, entropies

    # value-function warm-up: the policy stays put until baselines are sane
    for _ in range(cfg.critic_warmup_iterations):
        round_data, _ = draw_round()
        run_epochs(round_data, cfg.critic_warmup_epochs, 0.0, cfg.critic_learning_rate,
                   update_actor=False, refresh_each_epoch=cfg.warmup_refresh_each_epoch)

    for iteration in range(cfg.iterations):
        started = time.perf_counter()
        decay = 1.0
        if cfg.lr_anneal and cfg.iterations > 1:
            frac = iteration / (cfg.iterations - 1)
            decay = cfg.lr_anneal_floor + (1.0 - cfg.lr_anneal_floor) * (1.0 - frac) ** 2
        round_data, adv_raw = draw_round()
        loss_cfg = cfg
        if cfg.entropy_anneal:
            loss_cfg = dc_replace(cfg, entropy_weight=cfg.entropy_weight * decay)
        a_losses, c_losses, entropies = run_epochs(
            round_data, cfg.inner_epochs,
            cfg.learning_rate * decay, cfg.critic_learning_rate * decay, update_actor=True,
            loss_cfg=loss_cfg,
        )
        take = round_data["take"]
        logp_new = actor_forward(round_data["states"], params)[np.arange(take), round_data["actions"]]
        metrics.actor_loss.append(float(np.mean(a_losses)))
        metrics.critic_loss.append(float(np.mean(c_losses)))
        metrics.entropy.append(float(np.mean(entropies)))
        metrics.approx_kl.append(approx_kl(round_data["logp_old"], logp_new))
        metrics.mean_advantage.append(float(np.mean(adv_raw)))
        metrics.seconds.append(time.perf_counter() - started)
    return params, metrics
