"""Wear discretization, value iteration oracles, tabular Q-learning."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maintlab.baseline import (
    N_WEAR_LEVELS,
    PolicyTable,
    QLearningConfig,
    QTable,
    SingleDeviceEnv,
    discretize_wear,
    discretize_wear_value,
    greedy_policy,
    q_learning,
    value_iteration,
)
from maintlab.numerics import RngStream
from maintlab.plantsim import DeviceState, FleetConfig


def make_state(wear, failed=False):
    return DeviceState(0, 0, wear, np.zeros(5), failed, 10)


# --------------------------------------------------------------------------
# oracles


def policy_evaluation_exact(p, r, policy, gamma):
    """Solve V = r_pi + gamma P_pi V via the linear system."""
    n = p.shape[0]
    p_pi = p[np.arange(n), policy]
    r_pi = r[np.arange(n), policy]
    return np.linalg.solve(np.eye(n) - gamma * p_pi, r_pi)


def enumerate_optimal_policy(p, r, gamma):
    """Exhaustive evaluation of all |A|^|S| deterministic policies."""
    n_states, n_actions = r.shape
    best, best_v = None, None
    for combo in itertools.product(range(n_actions), repeat=n_states):
        v = policy_evaluation_exact(p, r, np.asarray(combo), gamma)
        if best_v is None or np.all(v >= best_v - 1e-12):
            if best_v is None or v.sum() > best_v.sum():
                best, best_v = np.asarray(combo), v
    return best, best_v


def random_mdp(rng, n_states, n_actions, gap=0.05):
    """A random decision process with a well-separated optimal action per state."""
    while True:
        p = rng.uniform(0.01, 1.0, size=(n_states, n_actions, n_states))
        p /= p.sum(axis=2, keepdims=True)
        r = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
        v, policy = value_iteration(p, r, gamma=0.9)
        q = r + 0.9 * (p @ v)
        sorted_q = np.sort(q, axis=1)
        margin = (sorted_q[:, -1] - sorted_q[:, -2]).min()
        spread = q.max() - q.min() + 1e-12
        if margin / spread >= gap:
            return p, r


# --------------------------------------------------------------------------
# discretization


def test_discretize_new_device_is_level_zero():
    assert discretize_wear(make_state(0.0)) == 0


def test_discretize_failed_is_level_six():
    for wear in (0.0, 0.3, 0.99):
        assert discretize_wear(make_state(wear, failed=True)) == 6


def test_discretize_midpoint_bin():
    assert discretize_wear(make_state(0.5)) == 3  # floor(3.5)


def test_discretize_full_wear_clamps():
    assert discretize_wear(make_state(1.0)) == 6


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_discretize_monotone(a, b):
    la, lb = discretize_wear(make_state(a)), discretize_wear(make_state(b))
    if a <= b:
        assert la <= lb


# --------------------------------------------------------------------------
# value iteration


def test_single_state_picks_cheaper_action():
    p = np.ones((1, 2, 1))
    r = np.array([[0.0, -5.0]])
    v, policy = value_iteration(p, r, gamma=0.9)
    assert v[0] == pytest.approx(0.0, abs=1e-9)
    assert policy[0] == 0


def test_two_state_chain_matches_geometric_series():
    # deterministic cycle 0 -> 1 -> 0 with rewards 1 then 0
    p = np.zeros((2, 1, 2))
    p[0, 0, 1] = 1.0
    p[1, 0, 0] = 1.0
    r = np.array([[1.0], [0.0]])
    gamma = 0.5
    v, _ = value_iteration(p, r, gamma, tol=1e-12)
    # V0 = 1 + g*V1, V1 = g*V0 -> V0 = 1/(1-g^2)
    assert v[0] == pytest.approx(1.0 / (1.0 - gamma**2), abs=1e-9)
    assert v[1] == pytest.approx(gamma / (1.0 - gamma**2), abs=1e-9)


def test_value_iteration_matches_policy_enumeration():
    rng = RngStream(0, "mdp")
    for _ in range(5):
        p, r = random_mdp(rng, n_states=5, n_actions=2)
        v, policy = value_iteration(p, r, gamma=0.9, tol=1e-12)
        best, best_v = enumerate_optimal_policy(p, r, gamma=0.9)
        np.testing.assert_array_equal(policy, best)
        np.testing.assert_allclose(v, best_v, atol=1e-7)


def test_value_iteration_rejects_non_stochastic_rows():
    p = np.ones((2, 2, 2))
    r = np.zeros((2, 2))
    with pytest.raises(ValueError):
        value_iteration(p, r, gamma=0.9)


def test_value_iteration_contracts():
    rng = RngStream(1, "mdp")
    p, r = random_mdp(rng, 4, 2)
    gamma = 0.9
    v = np.zeros(4)
    gaps = []
    for _ in range(30):
        v_new = (r + gamma * (p @ v)).max(axis=1)
        gaps.append(np.max(np.abs(v_new - v)))
        v = v_new
    for a, b in zip(gaps[5:-1], gaps[6:]):
        assert b <= gamma * a + 1e-12


# --------------------------------------------------------------------------
# q-learning on explicit processes


class ExplicitEnv:
    """Rollout wrapper for an explicit (P, R) process."""

    def __init__(self, p, r, seed):
        self.p, self.r = p, r
        self.rng = RngStream(seed, "explicit-env")
        self.state = 0

    def reset(self):
        self.state = int(self.rng.integers(0, self.p.shape[0]))
        return self.state

    def step(self, action):
        s = self.state
        nxt = int(np.searchsorted(np.cumsum(self.p[s, action]), self.rng.uniform()))
        nxt = min(nxt, self.p.shape[0] - 1)
        cost = -self.r[s, action]  # env reports costs; learner negates
        self.state = nxt
        return nxt, cost


def q_learning_explicit(p, r, episodes, seed):
    """Tabular control on an explicit process (same update rule, generic table)."""
    n_states, n_actions = r.shape
    q = np.zeros((n_states, n_actions))
    rng = RngStream(seed, "q-explicit")
    env = ExplicitEnv(p, r, seed)
    horizon = 10
    for episode in range(episodes):
        frac = episode / max(1, episodes - 1)
        alpha = 0.5 + (0.02 - 0.5) * min(1.0, 2 * frac)
        epsilon = 1.0 + (0.05 - 1.0) * min(1.0, 2 * frac)
        s = env.reset()
        explore = rng.uniform(size=horizon)
        randoms = rng.integers(0, n_actions, size=horizon)
        for t in range(horizon):
            a = int(randoms[t]) if explore[t] < epsilon else int(np.argmax(q[s]))
            s2, cost = env.step(a)
            target = -cost + 0.9 * q[s2].max()
            q[s, a] += alpha * (target - q[s, a])
            s = s2
    return q


def test_single_update_formula():
    q = np.zeros((3, 2))
    s, a, r_val = 1, 0, -7.0
    alpha, gamma = 1.0, 0.0
    q[s, a] += alpha * (r_val + gamma * q[1].max() - q[s, a])
    assert q[s, a] == -7.0


def test_q_learning_matches_value_iteration_on_small_processes():
    rng = RngStream(2, "mdp")
    for trial in range(3):
        p, r = random_mdp(rng, n_states=3, n_actions=2)
        q = q_learning_explicit(p, r, episodes=50_000, seed=trial)
        _, optimal = value_iteration(p, r, gamma=0.9, tol=1e-12)
        np.testing.assert_array_equal(q.argmax(axis=1), optimal)


# --------------------------------------------------------------------------
# q-learning on the simulator


@pytest.fixture(scope="module")
def trained_table():
    cfg = FleetConfig(seed=5)
    env = SingleDeviceEnv(cfg, seed=5)
    return q_learning(env, QLearningConfig(episodes=300, episode_length=300, seed=5))


def test_simulator_policy_severity_non_decreasing(trained_table):
    policy = greedy_policy(trained_table)
    visited = trained_table.visits.sum(axis=1) > 0
    acts = policy.actions[visited]
    assert np.all(np.diff(acts) >= 0)
    assert policy.actions[6] == 3  # failed level must replace


# --------------------------------------------------------------------------
# greedy extraction


def test_greedy_strict_argmax():
    t = QTable.zeros()
    t.values[2] = [0.0, 5.0, 1.0, -1.0]
    assert greedy_policy(t).action_for(2) == 1


def test_greedy_tie_prefers_lower_severity():
    t = QTable.zeros()
    t.values[3] = [2.0, 2.0, 0.0, 0.0]
    assert greedy_policy(t).action_for(3) == 0


def test_greedy_invariant_to_positive_scaling():
    t = QTable.zeros()
    t.values = RngStream(3, "q").normal(size=(7, 4))
    base = greedy_policy(t).actions
    t2 = QTable(t.values * 3.5, t.visits)
    np.testing.assert_array_equal(greedy_policy(t2).actions, base)


def test_policy_table_roundtrip(tmp_path):
    table = PolicyTable(np.array([0, 0, 1, 2, 2, 3, 3]))
    path = tmp_path / "policy_table.txt"
    table.write(path)
    back = PolicyTable.read(path)
    np.testing.assert_array_equal(back.actions, table.actions)
    text = path.read_text()
    assert text.startswith("wear_level,action_name\n0,do_nothing")
