"""Experience storage: off-policy replay ring and on-policy rollout buffer.

The replay buffer stores both the policy's action and the executed
(perturbed) action, since the critic regression runs on what was actually
executed. The rollout buffer additionally keeps the exploration direction
and the per-step value estimate needed for advantage computation.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class Transition:
    """One environment interaction.

    `executed_action` is the perturbed action actually sent to the
    environment (off-policy); `direction` is the exploration direction the
    policy saw (on-policy). Either may be None depending on the setting.
    """

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    executed_action: np.ndarray = None
    direction: np.ndarray = None


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    executed_actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray  # float 0/1; 1 only on true termination


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity, state_dim, action_dim):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.states = np.zeros((self.capacity, state_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.executed_actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, state_dim))
        self.dones = np.zeros(self.capacity)
        self.pos = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, tr: Transition):
        state = np.asarray(tr.state, dtype=float)
        next_state = np.asarray(tr.next_state, dtype=float)
        action = np.asarray(tr.action, dtype=float)
        executed = tr.executed_action if tr.executed_action is not None else tr.action
        executed = np.asarray(executed, dtype=float)
        if state.shape != (self.state_dim,) or next_state.shape != (self.state_dim,):
            raise ShapeError(f"transition state shape {state.shape} != ({self.state_dim},)")
        if action.shape != (self.action_dim,) or executed.shape != (self.action_dim,):
            raise ShapeError(f"transition action shape {action.shape} != ({self.action_dim},)")
        i = self.pos
        self.states[i] = state
        self.actions[i] = action
        self.executed_actions[i] = executed
        self.rewards[i] = float(tr.reward)
        self.next_states[i] = next_state
        self.dones[i] = 1.0 if tr.done else 0.0
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng: np.random.Generator) -> TransitionBatch:
        """Uniform sample with replacement; deterministic given the stream state."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=int(batch_size))
        return TransitionBatch(
            self.states[idx], self.actions[idx], self.executed_actions[idx],
            self.rewards[idx], self.next_states[idx], self.dones[idx])

    def ordered_indices(self):
        """Indices oldest-to-newest, accounting for ring wraparound."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return np.concatenate([np.arange(self.pos, self.capacity), np.arange(self.pos)])


class RolloutBuffer:
    """Fixed-horizon on-policy storage, cleared after each update phase.

    `dones` marks episode boundaries of any kind (termination or horizon
    truncation): the rewards-to-go recursion resets there. `values` holds the
    state-value estimates recorded at collection time.
    """

    def __init__(self, horizon, state_dim, action_dim, direction_dim):
        self.horizon = int(horizon)
        self.states = np.zeros((horizon, state_dim))
        self.directions = np.zeros((horizon, direction_dim))
        self.actions = np.zeros((horizon, action_dim))
        self.rewards = np.zeros(horizon)
        self.next_states = np.zeros((horizon, state_dim))
        self.dones = np.zeros(horizon, dtype=bool)
        self.values = np.zeros(horizon)
        self.pos = 0

    def __len__(self):
        return self.pos

    @property
    def full(self):
        return self.pos == self.horizon

    def add(self, state, direction, action, reward, next_state, done, value):
        if self.full:
            raise ShapeError("rollout buffer already holds a full horizon")
        i = self.pos
        self.states[i] = state
        self.directions[i] = direction
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self.values[i] = value
        self.pos += 1

    def clear(self):
        self.pos = 0


def rewards_to_go(rewards, dones, discount=1.0, tail_value=0.0):
    """Reversed cumulative (optionally discounted) reward sums.

    R_t = r_t + discount * R_{t+1}, computed backwards; the running sum
    resets at episode boundaries marked in `dones`. `tail_value` seeds the
    recursion for the final segment (a bootstrap for rollouts that end
    mid-episode); with the default 0 and discount 1 this is the plain
    reversed reward sum.
    """
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty rollout")
    dones = np.asarray(dones, dtype=bool)
    if dones.shape != rewards.shape:
        raise ShapeError("rewards and dones must have the same length")
    out = np.empty_like(rewards)
    running = float(tail_value)
    for t in range(rewards.size - 1, -1, -1):
        if dones[t]:
            running = 0.0
        running = rewards[t] + discount * running
        out[t] = running
    return out


def transition_json_line(step, state, action, executed_action, reward,
                         next_state, done, td_error=None) -> str:
    """One transition as a JSON line for the export log."""
    record = {
        "step": int(step),
        "state": [float(v) for v in state],
        "action": [float(v) for v in action],
        "executed_action": [float(v) for v in executed_action],
        "reward": float(reward),
        "next_state": [float(v) for v in next_state],
        "done": bool(done),
        "td_error": None if td_error is None else float(td_error),
    }
    return json.dumps(record)
