"""Distributed proximal policy optimization over the reordering environment.

Evaluators collect complete episodes in parallel under a frozen policy
snapshot, a single learner normalizes advantages and applies several epochs
of the clipped surrogate + clipped value loss with entropy regularization,
and the updated weights are broadcast for the next round. Rewards are
discounted Monte-Carlo returns; there is no GAE.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericError
from .nets import (
    AdamState,
    MlpSpec,
    ParamSet,
    adam_step,
    backward,
    forward,
    init_adam,
    init_params,
    save_checkpoint,
)
from .env import SwapAction


@dataclass
class TrainConfig:
    iterations: int
    seed: int
    num_evaluators: int = 12
    episodes_per_evaluator: int = 1
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    update_steps: int = 4
    entropy_coeff: float = 0.01
    value_coeff: float = 0.5
    learning_rate: float = 3e-4
    hidden: tuple = (128, 128, 128, 128)
    reward_mode: str = "shaped"
    deterministic: bool = True

    def __post_init__(self):
        if not 0 < self.clip_epsilon < 1:
            raise InvalidArgumentError("clip_epsilon must be in (0, 1)")
        if not 0 <= self.gamma <= 1:
            raise InvalidArgumentError("gamma must be in [0, 1]")
        if self.iterations < 1 or self.num_evaluators < 1:
            raise InvalidArgumentError("iterations and num_evaluators must be >= 1")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be >= 0")


@dataclass
class Trajectory:
    """One complete episode under the behavior policy."""

    observations: np.ndarray  # (T, obs_dim), observation BEFORE each action
    masks: np.ndarray  # (T, action_dim) booleans
    log_probs: np.ndarray  # (T,) joint Bernoulli log-prob of each mask
    values: np.ndarray  # (T,) critic estimates at observation time
    rewards: np.ndarray  # (T,)
    final_energy: float | None = None
    final_schedule: list | None = None

    def __post_init__(self):
        if np.count_nonzero(self.rewards) > 1:
            raise InvalidArgumentError("episode carries more than one nonzero reward")
        if not np.isfinite(self.log_probs).all():
            raise InvalidArgumentError("non-finite behavior log-prob")

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())


@dataclass
class AdvantageBatch:
    returns: np.ndarray
    advantages: np.ndarray


@dataclass
class LearningCurvePoint:
    iteration: int
    mean_reward: float
    best_energy: float
    wall_time_s: float


def _joint_log_prob(logits: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Sum of per-slot Bernoulli log-probs, numerically stable."""
    log_p1 = -np.logaddexp(0.0, -logits)
    log_p0 = -np.logaddexp(0.0, logits)
    return np.where(masks, log_p1, log_p0).sum(axis=-1)


def run_episode(params: ParamSet, env, rng: np.random.Generator) -> Trajectory:
    """Sample one episode; the mask at each step is drawn per-slot from the
    logistic policy probabilities."""
    obs = env.reset()
    observations, masks, log_probs, values = [], [], [], []
    rewards = []
    done = False
    while not done:
        logits, value = forward(params, obs.features)
        probs = 1.0 / (1.0 + np.exp(-logits))
        mask = rng.random(probs.size) < probs
        observations.append(obs.features)
        masks.append(mask)
        log_probs.append(_joint_log_prob(logits, mask))
        values.append(value)
        obs, reward, done = env.step(SwapAction(mask))
        rewards.append(reward)
    final_e = None
    final_schedule = None
    records = getattr(env, "episode_records", None)
    if records and "E" in records[-1]:
        final_e = records[-1]["E"]
    schedule = getattr(env, "schedule", None)
    if schedule is not None:
        final_schedule = [list(r) for r in schedule.orderings]
    return Trajectory(
        np.array(observations),
        np.array(masks),
        np.array(log_probs),
        np.array(values),
        np.array(rewards),
        final_e,
        final_schedule,
    )


def collect(params: ParamSet, env_factory, cfg: TrainConfig, iteration: int):
    """Run every evaluator concurrently, each with its own environment and
    RNG stream; results aggregate in evaluator order, so a fixed
    (snapshot, seed, iteration) triple reproduces the batch exactly."""

    def worker(ev: int):
        env = env_factory(ev)
        out = []
        for episode in range(cfg.episodes_per_evaluator):
            rng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, iteration, ev, episode])
            )
            out.append(run_episode(params, env, rng))
        return out

    trajectories = []
    with ThreadPoolExecutor(max_workers=cfg.num_evaluators) as pool:
        futures = [pool.submit(worker, ev) for ev in range(cfg.num_evaluators)]
        for fut in futures:
            trajectories.extend(fut.result())
    return trajectories


def compute_returns_advantages(trajectories, gamma: float) -> AdvantageBatch:
    """Backward-recursed discounted returns per episode, advantages
    G - V batch-normalized to zero mean and unit std (floor 1e-8)."""
    if not trajectories:
        raise InvalidArgumentError("empty trajectory batch")
    if not 0 <= gamma <= 1:
        raise InvalidArgumentError("gamma must be in [0, 1]")
    all_returns = []
    all_values = []
    for traj in trajectories:
        g = 0.0
        returns = np.empty_like(traj.rewards)
        for t in range(len(traj.rewards) - 1, -1, -1):
            g = traj.rewards[t] + gamma * g
            returns[t] = g
        all_returns.append(returns)
        all_values.append(traj.values)
    returns = np.concatenate(all_returns)
    advantages = returns - np.concatenate(all_values)
    if advantages.size > 1:
        advantages = (advantages - advantages.mean()) / max(
            float(advantages.std()), 1e-8
        )
    return AdvantageBatch(returns, advantages)


def flatten_batch(trajectories):
    obs = np.concatenate([t.observations for t in trajectories])
    masks = np.concatenate([t.masks for t in trajectories])
    log_probs = np.concatenate([t.log_probs for t in trajectories])
    values = np.concatenate([t.values for t in trajectories])
    return obs, masks, log_probs, values


def ppo_loss(
    params: ParamSet,
    obs: np.ndarray,
    masks: np.ndarray,
    old_log_probs: np.ndarray,
    old_values: np.ndarray,
    batch: AdvantageBatch,
    clip_epsilon: float,
    entropy_coeff: float,
    value_coeff: float,
):
    """Clipped-surrogate PPO loss and its exact parameter gradients.

    Minimized loss = -E[min(r A, clip(r, 1-eps, 1+eps) A)]
                     + value_coeff * E[max((V-G)^2, (Vclip-G)^2)]
                     - entropy_coeff * E[H(policy)].
    """
    if obs.shape[0] == 0:
        raise InvalidArgumentError("empty batch")
    n = obs.shape[0]
    adv = batch.advantages
    returns = batch.returns

    logits, values = forward(params, obs)
    new_log_probs = _joint_log_prob(logits, masks)
    ratio = np.exp(new_log_probs - old_log_probs)
    if not np.isfinite(ratio).all():
        bad = int(np.argmax(~np.isfinite(ratio)))
        raise NumericError(f"non-finite likelihood ratio at batch tuple {bad}")

    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    surr1 = ratio * adv
    surr2 = clipped * adv
    policy_obj = np.minimum(surr1, surr2)

    v_clip = old_values + np.clip(values - old_values, -clip_epsilon, clip_epsilon)
    vloss1 = (values - returns) ** 2
    vloss2 = (v_clip - returns) ** 2
    value_loss = np.maximum(vloss1, vloss2)

    probs = 1.0 / (1.0 + np.exp(-logits))
    log_p1 = -np.logaddexp(0.0, -logits)
    log_p0 = -np.logaddexp(0.0, logits)
    entropy = -(probs * log_p1 + (1.0 - probs) * log_p0).sum(axis=-1)

    loss = float(
        -policy_obj.mean()
        + value_coeff * value_loss.mean()
        - entropy_coeff * entropy.mean()
    )

    # policy gradient: the unclipped branch carries gradient only where the
    # min selects it; the clipped branch is flat in the saturated regions
    use_unclipped = surr1 <= surr2
    dlogp = np.where(use_unclipped, ratio * adv, 0.0)
    dlogits = -(dlogp[:, None] * (masks - probs)) / n
    # entropy term: dH/dlogit = -p (1 - p) logit
    dlogits += entropy_coeff * (probs * (1.0 - probs) * logits) / n
    # value term: gradient flows only where the unclipped square is active
    dvalues = value_coeff * 2.0 * (values - returns) * (vloss1 >= vloss2) / n

    grads = backward(params, obs, dlogits, dvalues)
    return loss, grads


@dataclass
class TrainResult:
    params: ParamSet
    adam: AdamState
    curve: list
    best_energy: float
    best_schedule: list | None
    best_reward: float


def train(
    cfg: TrainConfig,
    env_factory,
    out_dir: str | None = None,
    resume_from=None,
) -> TrainResult:
    """Synchronous DPPO loop: collect, normalize advantages, run
    update_steps epochs of the clipped loss, broadcast, repeat.

    Emits one learning-curve point per iteration and tracks the best
    (lowest-energy) schedule any evaluator has produced. With out_dir set,
    persists the final checkpoint and the best schedule as JSON.
    """
    probe_env = env_factory(0)
    probe_obs = probe_env.reset()
    obs_dim = probe_obs.features.size
    if resume_from:
        params, adam = resume_from
        if params.spec.input_dim != obs_dim:
            raise InvalidArgumentError("resume checkpoint does not fit the environment")
    else:
        action_dim = probe_env.cfg.action_size
        spec = MlpSpec(obs_dim, tuple(cfg.hidden), action_dim)
        params = init_params(
            spec, np.random.default_rng(np.random.SeedSequence([cfg.seed]))
        )
        adam = init_adam(params, cfg.learning_rate)

    curve = []
    best_energy = np.inf
    best_schedule = None
    best_reward = -np.inf
    start = time.monotonic()
    for iteration in range(cfg.iterations):
        trajectories = collect(params, env_factory, cfg, iteration)
        batch = compute_returns_advantages(trajectories, cfg.gamma)
        obs, masks, old_log_probs, old_values = flatten_batch(trajectories)

        for traj in trajectories:
            if traj.final_energy is not None and traj.final_energy < best_energy:
                best_energy = traj.final_energy
                best_schedule = traj.final_schedule
        mean_reward = float(np.mean([t.total_reward for t in trajectories]))
        best_reward = max(best_reward, mean_reward)

        try:
            for _ in range(cfg.update_steps):
                _, grads = ppo_loss(
                    params,
                    obs,
                    masks,
                    old_log_probs,
                    old_values,
                    batch,
                    cfg.clip_epsilon,
                    cfg.entropy_coeff,
                    cfg.value_coeff,
                )
                params, adam = adam_step(params, grads, adam)
        except NumericError as exc:
            raise NumericError(f"iteration {iteration}: {exc}") from exc

        wall = 0.0 if cfg.deterministic else time.monotonic() - start
        curve.append(
            LearningCurvePoint(iteration, mean_reward, float(best_energy), wall)
        )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_checkpoint(os.path.join(out_dir, "checkpoint.bin"), params, adam)
        if best_schedule is not None:
            with open(
                os.path.join(out_dir, "best_schedule.json"), "w", encoding="utf-8"
            ) as fh:
                json.dump(
                    {"best_energy": best_energy, "rows": best_schedule}, fh, indent=1
                )
    return TrainResult(params, adam, curve, float(best_energy), best_schedule, best_reward)


def greedy_rollout(params: ParamSet, env):
    """Deterministic protocol: swap wherever the policy probability is
    >= 0.5. Returns the final schedule and its evaluated energy."""
    obs = env.reset()
    done = False
    actions = []
    while not done:
        logits, _ = forward(params, obs.features)
        mask = logits >= 0.0  # sigmoid(x) >= 0.5 iff x >= 0
        actions.append(SwapAction(mask))
        obs, _, done = env.step(SwapAction(mask))
    records = getattr(env, "episode_records", None)
    energy = records[-1]["E"] if records and "E" in records[-1] else None
    return env.schedule, energy, actions
