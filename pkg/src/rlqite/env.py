"""Term-reordering environment around the Trotterized evolution.

State is the current ordering schedule, actions are banks of adjacent
transpositions (one boolean per step-row position), and the only nonzero
reward arrives at the end of the episode, scored by the final energy of the
reordered run against the cached standard-ordering energy.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidStateError,
)
from .qite import OrderingSchedule, QiteConfig, run_qite, standard_schedule
from .states import Hamiltonian, Statevector, expectation, plus_state


def reward_fn(energy: float, e_std: float, mode: str) -> float:
    """Score a final energy against the standard-ordering energy.

    "clipped-log": -1 when energy <= e_std, else
    -1/log(clip(energy/e_std - 1, 0.01, 1.99)). This form is not monotone
    in the energy, so "shaped" offers a monotone alternative,
    (e_std - energy)/|e_std| clipped to [-2, 2].
    """
    if e_std == 0:
        raise InvalidArgumentError("reference energy must be nonzero")
    if mode == "clipped-log":
        if energy <= e_std:
            return -1.0
        x = float(np.clip(energy / e_std - 1.0, 0.01, 1.99))
        return -1.0 / float(np.log(x))
    if mode == "shaped":
        return float(np.clip((e_std - energy) / abs(e_std), -2.0, 2.0))
    raise InvalidArgumentError("reward mode must be clipped-log or shaped")


@dataclass
class SwapAction:
    """Bank of adjacent transpositions: entry (s, p) exchanges positions
    p and p+1 of Trotter-step row s."""

    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool).ravel()


@dataclass
class Observation:
    """Flattened schedule: slot (s, p) holds term_index / (m - 1)."""

    features: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).ravel()
        if self.features.size and (
            self.features.min() < 0 or self.features.max() > 1
        ):
            raise InvalidArgumentError("observation features must lie in [0, 1]")


def encode_schedule(schedule: OrderingSchedule) -> Observation:
    m = schedule.num_terms
    flat = np.concatenate([np.asarray(row, dtype=float) for row in schedule.orderings])
    return Observation(flat / (m - 1))


def decode_observation(obs: Observation, num_steps: int, num_terms: int) -> OrderingSchedule:
    if obs.features.size != num_steps * num_terms:
        raise InvalidArgumentError(
            f"observation length {obs.features.size} != {num_steps}*{num_terms}"
        )
    grid = np.rint(obs.features * (num_terms - 1)).astype(int)
    rows = [list(map(int, r)) for r in grid.reshape(num_steps, num_terms)]
    return OrderingSchedule(num_steps, rows)


def apply_swaps(schedule: OrderingSchedule, action: SwapAction) -> OrderingSchedule:
    """Apply the mask row by row, scanning positions left to right.

    The scan is sequential within a row, so adjacent true bits cascade:
    mask (0, 1) true at positions 0 and 1 sends [a, b, c] to [b, c, a].
    """
    n = schedule.num_steps
    m = schedule.num_terms
    if action.mask.size != n * (m - 1):
        raise InvalidArgumentError(
            f"swap mask length {action.mask.size} != {n}*({m}-1)"
        )
    rows = []
    for s, row in enumerate(schedule.orderings):
        new = list(row)
        base = s * (m - 1)
        for p in range(m - 1):
            if action.mask[base + p]:
                new[p], new[p + 1] = new[p + 1], new[p]
        rows.append(new)
    return OrderingSchedule(n, rows)


@dataclass
class EnvConfig:
    qite: QiteConfig
    hamiltonian: Hamiltonian
    episode_length: int = 16
    reward_mode: str = "shaped"
    e_std: float | None = None
    init_state: Statevector | None = None

    def __post_init__(self):
        if self.episode_length < 1:
            raise InvalidArgumentError("episode_length must be >= 1")
        if self.reward_mode not in ("clipped-log", "shaped"):
            raise InvalidArgumentError("reward mode must be clipped-log or shaped")
        if self.init_state is None:
            self.init_state = plus_state(self.hamiltonian.num_qubits)
        computed = schedule_energy(
            self.hamiltonian,
            self.init_state,
            self.qite,
            standard_schedule(self.hamiltonian, self.qite.num_trotter_steps),
        )
        if self.e_std is not None and abs(self.e_std - computed) > 1e-9:
            raise InvalidArgumentError(
                f"supplied e_std {self.e_std} != recomputed {computed}"
            )
        self.e_std = computed

    @property
    def num_steps(self) -> int:
        return self.qite.num_trotter_steps

    @property
    def num_terms(self) -> int:
        return len(self.hamiltonian.terms)

    @property
    def action_size(self) -> int:
        return self.num_steps * (self.num_terms - 1)

    @property
    def observation_size(self) -> int:
        return self.num_steps * self.num_terms


def schedule_energy(h, init, qite_cfg, schedule) -> float:
    """Final-state energy of one full run under the given ordering."""
    final, _ = run_qite(h, init, qite_cfg, schedule, trace=False)
    return expectation(final, h)


class OrderingEnv:
    """Episode: start at the standard schedule, apply one swap bank per step,
    collect the energy-based reward only on the final step."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.schedule = None
        self.t = 0
        self.done = True
        self.episode_records = []

    def reset(self) -> Observation:
        self.schedule = standard_schedule(self.cfg.hamiltonian, self.cfg.num_steps)
        self.t = 0
        self.done = False
        self.episode_records = []
        return encode_schedule(self.schedule)

    def step(self, action: SwapAction):
        if self.done:
            raise InvalidStateError("episode is done; call reset() first")
        self.schedule = apply_swaps(self.schedule, action)
        self.t += 1
        self.done = self.t >= self.cfg.episode_length
        reward = 0.0
        record = {
            "t": self.t,
            "observation_sha256": _obs_hash(self.schedule),
            "mask": [int(b) for b in action.mask],
            "reward": 0.0,
        }
        if self.done:
            energy = schedule_energy(
                self.cfg.hamiltonian,
                self.cfg.init_state,
                self.cfg.qite,
                self.schedule,
            )
            reward = reward_fn(energy, self.cfg.e_std, self.cfg.reward_mode)
            record["reward"] = reward
            record["E"] = energy
            record["E_std"] = self.cfg.e_std
            record["schedule"] = [list(r) for r in self.schedule.orderings]
        self.episode_records.append(record)
        return encode_schedule(self.schedule), reward, self.done

    def final_energy(self) -> float:
        """Energy of the current schedule (one fresh evaluation)."""
        return schedule_energy(
            self.cfg.hamiltonian, self.cfg.init_state, self.cfg.qite, self.schedule
        )


def _obs_hash(schedule: OrderingSchedule) -> str:
    payload = json.dumps(schedule.orderings).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def write_episode_log(records, path):
    """One JSON object per line, matching the step records."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def hamming_distance(a, b) -> int:
    """Differing mask bits between two episodes' concatenated swap banks."""
    abits = np.concatenate([np.asarray(x.mask, dtype=bool) for x in a])
    bbits = np.concatenate([np.asarray(x.mask, dtype=bool) for x in b])
    if abits.size != bbits.size:
        raise InvalidArgumentError(
            f"protocol lengths differ: {abits.size} vs {bbits.size}"
        )
    return int(np.count_nonzero(abits != bbits))
