"""Undirected exploration baselines: additive Gaussian noise and greedy.

Both implement the same strategy interface as the learned explorer so the
off-policy training loop can swap them freely: `perturb` maps the policy's
action to the executed action, `perturb_target` maps the target policy's
next action to the action used inside the bootstrapped TD target.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class GaussianNoiseConfig:
    std: float = 0.1


def gaussian_perturb(action, config: GaussianNoiseConfig, rng: np.random.Generator,
                     low, high):
    """Executed action = clip(a + eps), eps ~ N(0, std^2 I)."""
    action = np.asarray(action, dtype=float)
    noise = rng.normal(0.0, config.std, size=action.shape) if config.std > 0 \
        else np.zeros_like(action)
    return np.clip(action + noise, low, high)


def greedy(action):
    """No exploration: the executed action is the policy's action."""
    return action


class GreedyExploration:
    """No action noise and no target smoothing anywhere."""

    name = "greedy"
    update_count = 0

    def perturb(self, state, action):
        return greedy(action)

    def perturb_target(self, next_states, next_actions):
        return next_actions


class GaussianExploration:
    """Additive Gaussian action noise, plus clipped Gaussian target smoothing
    when the underlying algorithm uses it (the twin-critic variant does)."""

    name = "gaussian"
    update_count = 0

    def __init__(self, config: GaussianNoiseConfig, rng, low, high,
                 target_smoothing=False, smoothing_std=0.2, smoothing_clip=0.5,
                 smoothing_rng=None):
        self.config = config
        self.rng = rng
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.target_smoothing = bool(target_smoothing)
        self.smoothing_std = float(smoothing_std)
        self.smoothing_clip = float(smoothing_clip)
        self.smoothing_rng = smoothing_rng if smoothing_rng is not None else rng

    def perturb(self, state, action):
        return gaussian_perturb(action, self.config, self.rng, self.low, self.high)

    def perturb_target(self, next_states, next_actions):
        if not self.target_smoothing or self.smoothing_std == 0.0:
            return next_actions
        eps = self.smoothing_rng.normal(0.0, self.smoothing_std, size=next_actions.shape)
        eps = np.clip(eps, -self.smoothing_clip, self.smoothing_clip)
        return np.clip(next_actions + eps, self.low, self.high)
