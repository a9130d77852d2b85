"""Learned directed exploration: a network trained to maximize TD error.

The explorer is a deterministic network mapping states to perturbations. In
the off-policy setting the perturbation is added to the policy's action
(executed action = clip(a + lam * xi(s))); a slowly-tracking target copy of
the explorer perturbs the next action inside the bootstrapped TD target. In
the on-policy setting the perturbation is a state-space direction that the
policy and value networks receive alongside the state.

Training ascends the agent's own prediction error: the squared TD error of
the first critic (off-policy) or the squared value-network residual against
the rewards-to-go (on-policy), with the bootstrap target held constant. The
gradient reaches the explorer through the critic's (or value network's)
input gradient, scaled by lam: the deterministic-policy-gradient chain.

By construction the explorer mirrors the agent's actor: same hidden layout,
same activation, same learning rate, same update period. Construction fails
fast if any of these is overridden to a different value.
"""

import numpy as np

from .errors import ConfigError
from .nets import (
    adam_for_net,
    adam_step,
    backward,
    copy_mlp,
    forward,
    init_mlp,
    soft_update,
)


class TdErrorExplorer:
    """Behavioral + target explorer networks plus the scale factor lam."""

    name = "discover"

    def __init__(self, mode, state_dim, output_dim, lam, rng,
                 actor_hidden_sizes, actor_activation, actor_learning_rate,
                 actor_update_period, output_scale=1.0,
                 hidden_sizes=None, activation=None, learning_rate=None,
                 update_period=None, no_delayed_updates=False,
                 no_target_network=False, no_target_smoothing=False):
        if mode not in ("on_policy", "off_policy"):
            raise ConfigError(f"unknown explorer mode {mode!r}")
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {lam}")

        hidden_sizes = tuple(actor_hidden_sizes) if hidden_sizes is None else tuple(hidden_sizes)
        activation = actor_activation if activation is None else activation
        learning_rate = actor_learning_rate if learning_rate is None else learning_rate
        update_period = actor_update_period if update_period is None else update_period
        mismatches = []
        if hidden_sizes != tuple(actor_hidden_sizes):
            mismatches.append(f"hidden_sizes {hidden_sizes} != actor {tuple(actor_hidden_sizes)}")
        if activation != actor_activation:
            mismatches.append(f"activation {activation!r} != actor {actor_activation!r}")
        if learning_rate != actor_learning_rate:
            mismatches.append(f"learning_rate {learning_rate} != actor {actor_learning_rate}")
        if update_period != actor_update_period:
            mismatches.append(f"update_period {update_period} != actor {actor_update_period}")
        if mismatches:
            raise ConfigError(
                "explorer must mirror the actor's hyper-parameters: " + "; ".join(mismatches))

        self.mode = mode
        self.lam = float(lam)
        self.update_period = int(update_period)
        self.learning_rate = float(learning_rate)
        self.no_delayed_updates = bool(no_delayed_updates)
        self.no_target_network = bool(no_target_network)
        self.no_target_smoothing = bool(no_target_smoothing)

        out_act = "scaled_tanh" if mode == "off_policy" else "tanh"
        self.net = init_mlp([state_dim, *hidden_sizes, output_dim], rng,
                            hidden_activation=activation,
                            output_activation=out_act, output_scale=output_scale)
        if mode == "off_policy" and not no_target_network:
            self.target_net = copy_mlp(self.net)
        else:
            self.target_net = None
        self.opt = adam_for_net(self.net, learning_rate)
        self.evaluation_mode = False
        self.update_count = 0
        self.target_sync_count = 0

    # ------------------------------------------------------------------ acting

    def direction(self, state):
        """On-policy exploration direction lam * xi(s); zeros in evaluation."""
        state = np.asarray(state, dtype=float)
        if self.evaluation_mode or self.lam == 0.0:
            shape = (self.net.output_dim,) if state.ndim == 1 \
                else (state.shape[0], self.net.output_dim)
            return np.zeros(shape)
        return self.lam * forward(self.net, state)

    def perturb(self, state, action, low=None, high=None):
        """Executed action clip(a + lam * xi(s), bounds)."""
        if self.lam == 0.0:
            return action
        perturbed = action + self.lam * forward(self.net, state)
        if low is None:
            low, high = self._bounds()
        return np.clip(perturbed, low, high)

    def perturb_target(self, next_states, next_actions, low=None, high=None):
        """Target-side smoothing clip(a' + lam * xi_target(s'), bounds).

        Falls back to the behavioral explorer when the target network is
        ablated, and to the unperturbed action when target smoothing is
        ablated.
        """
        if self.no_target_smoothing or self.lam == 0.0:
            return next_actions
        net = self.net if self.target_net is None else self.target_net
        perturbed = next_actions + self.lam * forward(net, next_states)
        if low is None:
            low, high = self._bounds()
        return np.clip(perturbed, low, high)

    def _bounds(self):
        scale = self.net.output_scale
        return -scale, scale

    # ---------------------------------------------------------------- training

    def gradients_off(self, agent, batch, targets=None):
        """Loss gradients for the off-policy objective -mean squared TD error.

        Recomputes fresh policy actions a = pi(s), forms the perturbed action
        a + lam * xi(s) (unclipped, so the gradient survives saturation of the
        bounds), and backpropagates 2*delta*(-dQ/da)*lam through the explorer.
        The bootstrap target y is a constant; critic and actor are untouched.
        `targets` may carry precomputed y values (target networks do not move
        between the critic update and this one, so they are identical).
        Returns (batch-mean squared TD error, explorer gradients).
        """
        states = agent.normalize(batch.states)
        actions = forward(agent.actor, states)
        xi = forward(self.net, states)
        perturbed = actions + self.lam * xi
        if targets is None:
            y = agent.td_target(batch.rewards, batch.next_states, batch.dones, self)
        else:
            y = targets
        critic = agent.critics[0]
        x = np.concatenate([states, perturbed], axis=1)
        q = forward(critic, x)[:, 0]
        delta = y - q
        objective = float(np.mean(delta ** 2))
        n = states.shape[0]
        # minimizing -mean(delta^2): d/dq = 2*delta/n
        upstream = (2.0 * delta / n)[:, None]
        critic_grads = backward(critic, x, upstream)
        d_action = critic_grads.input_gradient[:, states.shape[1]:]
        return objective, backward(self.net, states, self.lam * d_action)

    def update_off(self, agent, batch, targets=None) -> float:
        """One ascent step on the batch-mean squared TD error (off-policy)."""
        objective, grads = self.gradients_off(agent, batch, targets)
        adam_step(self.net, grads, self.opt)
        self.update_count += 1
        return objective

    def gradients_on(self, agent, rollout, returns):
        """Loss gradients for the on-policy objective -mean squared residual.

        `returns` are the fixed rewards-to-go targets. The value network's
        parameters are read but never written. Returns (mean squared
        residual, explorer gradients).
        """
        states = np.asarray(rollout.states[:len(rollout)], dtype=float)
        returns = np.asarray(returns, dtype=float)
        xi = forward(self.net, states)
        eta = self.lam * xi
        v_in = np.concatenate([states, eta], axis=1)
        v = forward(agent.value_net, v_in)[:, 0]
        residual = returns - v
        objective = float(np.mean(residual ** 2))
        n = states.shape[0]
        upstream = (2.0 * residual / n)[:, None]
        value_grads = backward(agent.value_net, v_in, upstream)
        d_eta = value_grads.input_gradient[:, states.shape[1]:]
        return objective, backward(self.net, states, self.lam * d_eta)

    def update_on(self, agent, rollout, returns) -> float:
        """One ascent step on the mean squared value residual (on-policy)."""
        objective, grads = self.gradients_on(agent, rollout, returns)
        adam_step(self.net, grads, self.opt)
        self.update_count += 1
        return objective

    def sync_target(self, tau: float):
        """Soft-update the target explorer toward the behavioral one."""
        if self.target_net is not None:
            soft_update(self.target_net, self.net, tau)
            self.target_sync_count += 1
