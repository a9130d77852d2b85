"""On-policy advantage actor-critic with a diagonal-Gaussian policy.

Both the policy mean network and the value network receive the state
concatenated with an exploration direction; during evaluation the direction
is all-zeros, which makes evaluation behavior bitwise independent of the
explorer. One combined Adam step updates policy mean, log-std, and value
network together under a single global gradient-norm clip.
"""

from dataclasses import dataclass

import numpy as np

from .buffers import rewards_to_go
from .errors import DivergenceError, ShapeError
from .nets import (
    Adam,
    backward,
    clip_global_norm,
    forward,
    gradient_list,
    init_mlp,
    parameters,
)

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class RolloutStats:
    """Per-step quantities of one update: log-probs, values, advantages, returns."""

    log_probs: np.ndarray
    values: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    policy_loss: float
    value_loss: float
    grad_norm: float


class OnPolicyAgent:
    def __init__(self, env_spec, rng, hidden_sizes=(64, 64), hidden_activation="tanh",
                 learning_rate=1.3e-3, gamma=0.99, horizon=32,
                 value_loss_coef=0.5, entropy_coef=0.0, max_grad_norm=0.5,
                 direction_dim=None):
        self.state_dim = env_spec.state_dim
        self.action_dim = env_spec.action_dim
        self.direction_dim = env_spec.state_dim if direction_dim is None else int(direction_dim)
        self.action_low = np.asarray(env_spec.action_low, dtype=float)
        self.action_high = np.asarray(env_spec.action_high, dtype=float)
        self.gamma = float(gamma)
        self.horizon = int(horizon)
        self.value_loss_coef = float(value_loss_coef)
        self.entropy_coef = float(entropy_coef)
        self.max_grad_norm = float(max_grad_norm)
        self.hidden_sizes = tuple(hidden_sizes)
        self.hidden_activation = hidden_activation
        self.learning_rate = float(learning_rate)
        # On-policy runs update once per collected horizon.
        self.actor_update_period = 1

        in_dim = self.state_dim + self.direction_dim
        self.mean_net = init_mlp([in_dim, *hidden_sizes, self.action_dim], rng,
                                 hidden_activation=hidden_activation)
        self.log_std = np.zeros(self.action_dim)
        self.value_net = init_mlp([in_dim, *hidden_sizes, 1], rng,
                                  hidden_activation=hidden_activation)
        self._params = parameters(self.mean_net) + [self.log_std] + parameters(self.value_net)
        self.opt = Adam(self._params, learning_rate)
        self.update_count = 0

    # ----------------------------------------------------------------- acting

    def _policy_input(self, states, directions):
        states = np.asarray(states, dtype=float)
        directions = np.asarray(directions, dtype=float)
        if states.ndim == 1:
            return np.concatenate([states, directions])
        return np.concatenate([states, directions], axis=1)

    def sample_action(self, state, direction, rng: np.random.Generator):
        """Sample from the Gaussian policy at (state, direction).

        Returns the bounds-clipped action and the log-probability of the
        unclipped sample.
        """
        mu = forward(self.mean_net, self._policy_input(state, direction))
        sigma = np.exp(self.log_std)
        raw = mu + sigma * rng.standard_normal(self.action_dim)
        log_prob = float(np.sum(
            -0.5 * ((raw - mu) / sigma) ** 2 - self.log_std - 0.5 * LOG_2PI))
        return np.clip(raw, self.action_low, self.action_high), log_prob

    def deterministic_action(self, state, direction):
        """Greedy (mean) action, used for evaluation with zero directions."""
        mu = forward(self.mean_net, self._policy_input(state, direction))
        return np.clip(mu, self.action_low, self.action_high)

    def value(self, states, directions):
        out = forward(self.value_net, self._policy_input(states, directions))
        return float(out[0]) if out.ndim == 1 else out[:, 0]

    def log_probs(self, states, directions, actions):
        """Log-probabilities of given actions under the current policy."""
        mu = forward(self.mean_net, self._policy_input(states, directions))
        sigma = np.exp(self.log_std)
        z = (np.asarray(actions, dtype=float) - mu) / sigma
        return np.sum(-0.5 * z ** 2 - self.log_std - 0.5 * LOG_2PI, axis=-1)

    # --------------------------------------------------------------- learning

    def compute_returns(self, rollout, explorer=None):
        """Rewards-to-go value targets for a full rollout.

        Boundaries inside the rollout reset the sum; a rollout that ends
        mid-episode bootstraps from the value of the following state (with
        the direction the explorer would emit there).
        """
        if not rollout.full:
            raise ShapeError("on-policy update requires a full rollout")
        last = rollout.horizon - 1
        tail = 0.0
        if not rollout.dones[last]:
            next_state = rollout.next_states[last]
            if explorer is not None:
                next_dir = explorer.direction(next_state)
            else:
                next_dir = np.zeros(self.direction_dim)
            tail = self.value(next_state, next_dir)
        return rewards_to_go(rollout.rewards, rollout.dones, self.gamma, tail_value=tail)

    def value_loss(self, states, directions, returns):
        """Mean squared error between value targets and V(state, direction)."""
        v = self.value(states, directions)
        return float(np.mean((np.asarray(returns, dtype=float) - v) ** 2))

    def gradients(self, rollout, returns):
        """Combined loss gradients over (mean net, log-std, value net).

        Advantages are returns minus the value baseline (treated as
        constants for the policy term), normalized per rollout. Returns
        (stats, flat gradient list matching the optimizer's parameter list);
        the gradients are unclipped.
        """
        if not rollout.full:
            raise ShapeError("on-policy update requires a full rollout")
        n = rollout.horizon
        states = rollout.states
        directions = rollout.directions
        actions = rollout.actions
        returns = np.asarray(returns, dtype=float)
        x = self._policy_input(states, directions)
        mu = forward(self.mean_net, x)
        sigma = np.exp(self.log_std)
        var = sigma ** 2
        v = forward(self.value_net, x)[:, 0]

        advantages = returns - v
        adv_std = float(advantages.std())
        adv_norm = (advantages - advantages.mean()) / (adv_std + 1e-8)

        z = (actions - mu) / sigma
        log_probs = np.sum(-0.5 * z ** 2 - self.log_std - 0.5 * LOG_2PI, axis=1)
        policy_loss = float(-np.mean(log_probs * adv_norm))
        value_loss = float(np.mean((returns - v) ** 2))
        total = policy_loss + self.value_loss_coef * value_loss
        if not np.isfinite(total):
            raise DivergenceError(f"on-policy loss diverged ({total})")

        d_mu = -(adv_norm[:, None]) * (actions - mu) / var / n
        d_log_std = -np.sum(adv_norm[:, None] * (z ** 2 - 1.0), axis=0) / n
        if self.entropy_coef != 0.0:
            # entropy of a diagonal Gaussian rises one-for-one with log_std
            d_log_std -= self.entropy_coef
        d_v = self.value_loss_coef * 2.0 * (v - returns) / n

        mean_grads = backward(self.mean_net, x, d_mu)
        value_grads = backward(self.value_net, x, d_v[:, None])
        grads = gradient_list(mean_grads) + [d_log_std] + gradient_list(value_grads)
        stats = RolloutStats(log_probs, v, adv_norm, returns,
                             policy_loss, value_loss, 0.0)
        return stats, grads

    def update(self, rollout, returns) -> RolloutStats:
        """One combined policy/value Adam step over a full rollout, with the
        joint gradient norm clipped to `max_grad_norm`."""
        stats, grads = self.gradients(rollout, returns)
        stats.grad_norm = clip_global_norm(grads, self.max_grad_norm)
        self.opt.step(self._params, grads)
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)
        self.update_count += 1
        return stats

    # ------------------------------------------------------------ persistence

    def state_arrays(self):
        out = {}
        for name, net in (("policy_mean", self.mean_net), ("value", self.value_net)):
            for li, (w, b) in enumerate(zip(net.weights, net.biases)):
                out[f"{name}_w{li}"] = w
                out[f"{name}_b{li}"] = b
        out["log_std"] = self.log_std
        return out
