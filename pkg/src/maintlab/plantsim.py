"""Synthetic device-fleet generator and interactive maintenance environment.

A fleet of devices degrades stochastically; four maintenance actions with
increasing cost and effect are available each step. The simulator exposes
three layers:

* a pure per-step transition kernel (:func:`step` / :func:`step_devices`),
* a logging behavior policy that produces realistic maintenance traces
  (mostly do-nothing, occasional tinkering, replacement after failure),
* dataset generation plus lossless CSV persistence and re-ingestion.

Dynamics, per step and device (wear lives in [0, 1]):

1. wear degrades by ``base_wear_rate`` plus device noise plus the realized
   group shock (group shocks include a persistent "stress regime" bonus
   that raises the whole group's wear rate for stretches of time, which is
   what makes groupmates informative about a device's near future);
2. the chosen action applies: minor/major maintenance multiply wear by
   ``1 - repair_fraction``, replacement resets wear and age to zero and is
   the only action that clears the failed flag;
3. a non-replaced, non-failed device fails with probability
   ``hazard_base + hazard_max * logistic(k * (wear - midpoint))`` (a freshly
   replaced device cannot fail on its installation step);
4. cost = action base cost, plus the downtime penalty if the device ends
   the step failed;
5. sensors are regenerated as monotone functions of wear plus noise; a
   failed device saturates its error-rate channel at 1.0.

The behavior policy that labels the generated dataset escalates with wear
and models operator attention windows: each device is actively tended for
two of every three inspection spans and left alone otherwise, which yields
both heavy do-nothing traffic and genuine high-wear excursions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterator

import numpy as np

from .numerics.rng import RngStream

__all__ = [
    "MaintenanceAction",
    "ACTION_NAMES",
    "SENSOR_NAMES",
    "CSV_HEADER",
    "FleetConfig",
    "DeviceState",
    "Record",
    "Dataset",
    "Fleet",
    "step",
    "step_devices",
    "behavior_policy",
    "behavior_actions",
    "generate_dataset",
    "write_csv",
    "read_csv",
]


class MaintenanceAction(IntEnum):
    DO_NOTHING = 0
    MINOR_MAINTENANCE = 1
    MAJOR_MAINTENANCE = 2
    REPLACE = 3


ACTION_NAMES = ("do_nothing", "minor_maintenance", "major_maintenance", "replace")
SENSOR_NAMES = ("wear", "vibration", "temperature", "pressure", "error_rate")
N_SENSORS = 5
CSV_HEADER = "device_id,time_step,group_id,wear,vibration,temperature,pressure,error_rate,action,cost,failed"


@dataclass(frozen=True)
class FleetConfig:
    """Fleet size, economics, degradation law, and behavior-policy mix."""

    n_devices: int = 50
    n_steps: int = 2000
    n_groups: int = 5
    seed: int = 0

    action_costs: tuple = (0.0, 100.0, 500.0, 2000.0)
    downtime_penalty: float = 3000.0

    base_wear_rate: float = 0.008
    wear_noise_sigma: float = 0.001
    group_shock_sigma: float = 0.0015
    stress_enter_prob: float = 0.01
    stress_exit_prob: float = 0.03
    stress_wear_bonus: float = 0.016

    hazard_base: float = 0.012
    hazard_max: float = 0.06
    hazard_steepness: float = 12.0
    hazard_midpoint: float = 0.60

    minor_repair_fraction: float = 0.3
    major_repair_fraction: float = 0.7

    # behavior policy: attention windows plus wear-zone action mixes
    replace_on_fail_prob: float = 0.85
    attend_span: int = 250
    attend_cycle: int = 3
    zone_edges: tuple = (0.02, 0.50, 0.80)
    # per zone: (do_nothing, minor, major, replace) probabilities
    calm_weights: tuple = (0.97, 0.03, 0.0, 0.0)
    tinker_weights: tuple = (0.62, 0.32, 0.06, 0.0)
    alarm_weights: tuple = (0.50, 0.15, 0.30, 0.05)
    critical_weights: tuple = (0.30, 0.05, 0.30, 0.35)
    initial_wear_max: float = 0.30

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError("n_devices must be >= 1")
        if self.n_groups < 1:
            raise ValueError("n_groups must be >= 1")
        if len(self.action_costs) != 4:
            raise ValueError("action_costs must list exactly four costs")
        if any(c < 0 for c in self.action_costs):
            raise ValueError("action costs must be non-negative")
        if list(self.action_costs) != sorted(self.action_costs):
            raise ValueError("action costs must be non-decreasing in severity")
        for frac in (self.minor_repair_fraction, self.major_repair_fraction):
            if not 0.0 <= frac <= 1.0:
                raise ValueError("repair fractions must lie in [0, 1]")
        for weights in (self.calm_weights, self.tinker_weights, self.alarm_weights, self.critical_weights):
            if len(weights) != 4 or abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("behavior zone weights must be 4 probabilities summing to 1")

    def group_of(self, device_id) -> np.ndarray:
        """Round-robin group assignment: device i belongs to group i mod G."""
        return np.asarray(device_id) % self.n_groups


@dataclass
class DeviceState:
    """One device's condition at a decision epoch."""

    device_id: int
    group_id: int
    wear: float
    sensors: np.ndarray
    failed: bool
    age: int

    def copy(self) -> "DeviceState":
        return DeviceState(
            self.device_id, self.group_id, self.wear, self.sensors.copy(), self.failed, self.age
        )


@dataclass(frozen=True)
class Record:
    """One logged row of the fleet dataset."""

    device_id: int
    time_step: int
    group_id: int
    sensors: tuple
    action: int
    cost: float
    failed: int


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def _sensor_model(cfg: FleetConfig, wear, failed, noise) -> np.ndarray:
    """Monotone-in-wear sensor maps with heterogeneous scales and noise.

    Failure has its own signature beyond saturated error rate: a broken
    device rattles and overheats well outside the healthy-wear envelope,
    so the failed condition is identifiable from the sensor vector alone.
    """
    n = wear.shape[0]
    failed = np.asarray(failed, dtype=bool)
    s = np.empty((n, N_SENSORS))
    s[:, 0] = wear
    s[:, 1] = 0.2 + 1.5 * wear + 0.05 * noise[:, 0] + 1.2 * failed
    s[:, 2] = 40.0 + 30.0 * wear**2 + 1.0 * noise[:, 1] + 20.0 * failed
    s[:, 3] = 5.0 - 2.0 * wear + 0.1 * noise[:, 2]
    err = np.clip(_logistic(10.0 * (wear - 0.6)) + 0.02 * noise[:, 3], 0.0, 1.0)
    s[:, 4] = np.where(failed, 1.0, err)
    return s


def step_devices(cfg, wear, failed, age, actions, shocks, rng: RngStream):
    """Vectorized transition for a batch of devices.

    ``shocks`` is the realized per-device group shock for this step (drawn
    once per group by the caller). Returns
    ``(wear', failed', age', sensors', costs, failure_events)``.
    """
    wear = np.asarray(wear, dtype=np.float64)
    failed = np.asarray(failed, dtype=bool)
    age = np.asarray(age, dtype=np.int64)
    actions = np.asarray(actions, dtype=np.int64)
    n = wear.shape[0]

    dev_noise = rng.normal(0.0, cfg.wear_noise_sigma, size=n)
    fail_draws = rng.uniform(size=n)
    sensor_noise = rng.normal(size=(n, 4))

    degraded = np.clip(wear + cfg.base_wear_rate + dev_noise + shocks, 0.0, 1.0)
    new_wear = np.where(
        actions == MaintenanceAction.REPLACE,
        0.0,
        np.where(
            actions == MaintenanceAction.MAJOR_MAINTENANCE,
            degraded * (1.0 - cfg.major_repair_fraction),
            np.where(
                actions == MaintenanceAction.MINOR_MAINTENANCE,
                degraded * (1.0 - cfg.minor_repair_fraction),
                degraded,
            ),
        ),
    )
    replaced = actions == MaintenanceAction.REPLACE
    new_failed = failed & ~replaced
    new_age = np.where(replaced, 0, age + 1)

    hazard = cfg.hazard_base + cfg.hazard_max * _logistic(
        cfg.hazard_steepness * (new_wear - cfg.hazard_midpoint)
    )
    events = (~new_failed) & (~replaced) & (fail_draws < hazard)
    new_failed = new_failed | events

    costs = np.asarray(cfg.action_costs, dtype=np.float64)[actions] + cfg.downtime_penalty * new_failed
    sensors = _sensor_model(cfg, new_wear, new_failed, sensor_noise)
    return new_wear, new_failed, new_age, sensors, costs, events


def step(state: DeviceState, action, group_shock: float, rng: RngStream, cfg: FleetConfig = None):
    """Single-device transition; returns ``(next_state, cost, failure_event)``."""
    cfg = cfg or FleetConfig()
    w, f, a, s, c, e = step_devices(
        cfg,
        np.array([state.wear]),
        np.array([state.failed]),
        np.array([state.age]),
        np.array([int(action)]),
        np.array([group_shock]),
        rng,
    )
    nxt = DeviceState(state.device_id, state.group_id, float(w[0]), s[0], bool(f[0]), int(a[0]))
    return nxt, float(c[0]), bool(e[0])


def behavior_actions(cfg, wear, failed, age, device_ids, rng: RngStream) -> np.ndarray:
    """Vectorized logging policy: escalates with wear, replaces failures.

    Devices are attended in ``attend_cycle - 1`` out of every
    ``attend_cycle`` inspection spans (a device-offset schedule); while
    unattended only failures get a response, so wear excursions deep into
    the hazard zone appear in the data.
    """
    wear = np.asarray(wear)
    failed = np.asarray(failed, dtype=bool)
    age = np.asarray(age)
    device_ids = np.asarray(device_ids)
    n = wear.shape[0]
    draws = rng.uniform(size=n)

    actions = np.zeros(n, dtype=np.int64)

    # failure response dominates everything else
    actions[failed & (draws < cfg.replace_on_fail_prob)] = MaintenanceAction.REPLACE

    attended = ((age // cfg.attend_span) + device_ids) % cfg.attend_cycle != 0
    zone = np.digitize(wear, cfg.zone_edges)
    weights = np.array(
        [cfg.calm_weights, cfg.tinker_weights, cfg.alarm_weights, cfg.critical_weights]
    )
    cum = np.cumsum(weights, axis=1)
    healthy = ~failed
    active = healthy & attended
    picked = (draws[active, None] >= cum[zone[active], :3]).sum(axis=1)
    actions[active] = picked
    # unattended healthy devices: leave alone
    return actions


def behavior_policy(state: DeviceState, rng: RngStream, cfg: FleetConfig = None) -> MaintenanceAction:
    """Single-device view of the logging policy."""
    cfg = cfg or FleetConfig()
    a = behavior_actions(
        cfg,
        np.array([state.wear]),
        np.array([state.failed]),
        np.array([state.age]),
        np.array([state.device_id]),
        rng,
    )
    return MaintenanceAction(int(a[0]))


class Fleet:
    """Mutable vectorized fleet state plus its group stress regimes."""

    def __init__(self, cfg: FleetConfig, rng: RngStream):
        self.cfg = cfg
        n = cfg.n_devices
        self.device_ids = np.arange(n)
        self.groups = cfg.group_of(self.device_ids)
        self.wear = rng.uniform(0.0, cfg.initial_wear_max, size=n)
        self.failed = np.zeros(n, dtype=bool)
        self.age = np.zeros(n, dtype=np.int64)
        self.stressed = np.zeros(cfg.n_groups, dtype=bool)
        self.sensors = _sensor_model(cfg, self.wear, self.failed, rng.normal(size=(n, 4)))

    def draw_shocks(self, rng: RngStream) -> np.ndarray:
        """Advance group stress regimes and realize this step's group shocks."""
        cfg = self.cfg
        flips = rng.uniform(size=cfg.n_groups)
        self.stressed = np.where(
            self.stressed, flips >= cfg.stress_exit_prob, flips < cfg.stress_enter_prob
        )
        shocks = cfg.stress_wear_bonus * self.stressed + rng.normal(
            0.0, cfg.group_shock_sigma, size=cfg.n_groups
        )
        return shocks[self.groups]

    def apply(self, actions, shocks, rng: RngStream):
        """Advance every device one step; returns (costs, failure_events)."""
        self.wear, self.failed, self.age, self.sensors, costs, events = step_devices(
            self.cfg, self.wear, self.failed, self.age, actions, shocks, rng
        )
        return costs, events

    def refresh_sensors(self, rng: RngStream) -> None:
        """Regenerate sensor readings from the current wear/failed state."""
        n = self.cfg.n_devices
        self.sensors = _sensor_model(self.cfg, self.wear, self.failed, rng.normal(size=(n, 4)))

    def device_state(self, i: int) -> DeviceState:
        return DeviceState(
            int(self.device_ids[i]),
            int(self.groups[i]),
            float(self.wear[i]),
            self.sensors[i].copy(),
            bool(self.failed[i]),
            int(self.age[i]),
        )


@dataclass
class Dataset:
    """Columnar fleet log; rows ordered by (device_id, time_step)."""

    device_id: np.ndarray
    time_step: np.ndarray
    group_id: np.ndarray
    sensors: np.ndarray  # (n_rows, 5)
    action: np.ndarray
    cost: np.ndarray
    failed: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.device_id.shape[0]

    def devices(self) -> np.ndarray:
        return np.unique(self.device_id)

    def device_rows(self, device: int) -> np.ndarray:
        """Row indices of one device, ordered by time step."""
        idx = np.nonzero(self.device_id == device)[0]
        return idx[np.argsort(self.time_step[idx], kind="stable")]

    def records(self) -> Iterator[Record]:
        for i in range(self.n_rows):
            yield Record(
                int(self.device_id[i]),
                int(self.time_step[i]),
                int(self.group_id[i]),
                tuple(self.sensors[i]),
                int(self.action[i]),
                float(self.cost[i]),
                int(self.failed[i]),
            )

    def inferred_config(self, base: FleetConfig = None) -> FleetConfig:
        """A FleetConfig whose fleet-shape fields match this dataset."""
        base = base or FleetConfig()
        per_device = np.bincount(self.device_id - self.device_id.min())
        return replace(
            base,
            n_devices=int(self.devices().shape[0]),
            n_steps=int(per_device.max()),
            n_groups=int(np.unique(self.group_id).shape[0]),
        )


def generate_dataset(cfg: FleetConfig) -> Dataset:
    """Simulate the fleet under the logging behavior policy.

    Deterministic given ``cfg`` (including its seed): regenerating with an
    identical config yields a byte-identical CSV.
    """
    rng = RngStream(cfg.seed, "fleet")
    init_rng = rng.spawn("init")
    shock_rng = rng.spawn("shocks")
    behave_rng = rng.spawn("behavior")
    dyn_rng = rng.spawn("dynamics")

    fleet = Fleet(cfg, init_rng)
    n, t_max = cfg.n_devices, cfg.n_steps

    sensors = np.empty((t_max, n, N_SENSORS))
    actions = np.empty((t_max, n), dtype=np.int64)
    costs = np.empty((t_max, n))
    failed = np.empty((t_max, n), dtype=np.int64)

    for t in range(t_max):
        sensors[t] = fleet.sensors
        failed[t] = fleet.failed
        acts = behavior_actions(
            cfg, fleet.wear, fleet.failed, fleet.age, fleet.device_ids, behave_rng
        )
        actions[t] = acts
        shocks = fleet.draw_shocks(shock_rng)
        costs[t], _ = fleet.apply(acts, shocks, dyn_rng)

    # flatten device-major
    dev = np.repeat(np.arange(n), t_max)
    ts = np.tile(np.arange(t_max), n)
    order = lambda a: np.transpose(a, (1, 0, *range(2, a.ndim))).reshape(n * t_max, *a.shape[2:])
    return Dataset(
        device_id=dev,
        time_step=ts,
        group_id=cfg.group_of(dev),
        sensors=order(sensors),
        action=order(actions),
        cost=order(costs),
        failed=order(failed),
    )


# ---------------------------------------------------------------------------
# CSV persistence


def _format_float(x: float) -> str:
    # repr gives the shortest digit string that round-trips exactly
    return repr(float(x))


def write_csv(dataset: Dataset, path) -> None:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i in range(dataset.n_rows):
        s = dataset.sensors[i]
        buf.write(
            f"{int(dataset.device_id[i])},{int(dataset.time_step[i])},{int(dataset.group_id[i])},"
            f"{_format_float(s[0])},{_format_float(s[1])},{_format_float(s[2])},"
            f"{_format_float(s[3])},{_format_float(s[4])},"
            f"{int(dataset.action[i])},{_format_float(dataset.cost[i])},{int(dataset.failed[i])}\n"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


class CsvFormatError(ValueError):
    """Malformed fleet CSV (named column/row in the message)."""


def read_csv(path) -> Dataset:
    """Parse and validate a fleet CSV; raises CsvFormatError with row numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        expected = CSV_HEADER.split(",")
        got = header.split(",")
        if got != expected:
            missing = [c for c in expected if c not in got]
            extra = [c for c in got if c not in expected]
            detail = []
            if missing:
                detail.append(f"missing columns: {', '.join(missing)}")
            if extra:
                detail.append(f"unexpected columns: {', '.join(extra)}")
            raise CsvFormatError(
                "bad CSV header; " + ("; ".join(detail) if detail else f"got {header!r}")
            )
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(expected):
                raise CsvFormatError(f"row {lineno}: expected {len(expected)} fields, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise CsvFormatError(f"row {lineno}: non-numeric cell ({exc})") from None
            rows.append(vals)

    if not rows:
        raise CsvFormatError("CSV contains no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    action = arr[:, 8]
    failed = arr[:, 10]
    bad_action = np.nonzero((action < 0) | (action > 3) | (action != np.round(action)))[0]
    if bad_action.size:
        raise CsvFormatError(f"row {bad_action[0] + 2}: action code {action[bad_action[0]]!r} outside 0-3")
    bad_failed = np.nonzero((failed != 0) & (failed != 1))[0]
    if bad_failed.size:
        raise CsvFormatError(f"row {bad_failed[0] + 2}: failed flag must be 0 or 1")
    if np.any(arr[:, 9] < 0):
        bad = int(np.nonzero(arr[:, 9] < 0)[0][0])
        raise CsvFormatError(f"row {bad + 2}: negative cost")

    return Dataset(
        device_id=arr[:, 0].astype(np.int64),
        time_step=arr[:, 1].astype(np.int64),
        group_id=arr[:, 2].astype(np.int64),
        sensors=arr[:, 3:8].copy(),
        action=action.astype(np.int64),
        cost=arr[:, 9].copy(),
        failed=failed.astype(np.int64),
    )
