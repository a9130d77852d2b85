"""Off-policy deterministic actor-critic cores (DDPG- and TD3-style).

One class covers both: the twin-critic variant takes the elementwise minimum
over target critics in the bootstrap and delays actor/target updates; the
single-critic variant updates everything every step, L2-regularizes its
critic, and normalizes observations with running statistics. The exploration
strategy (learned explorer, Gaussian noise, or greedy) is injected and owns
both the executed-action perturbation and the target-side smoothing.
"""

import numpy as np

from .errors import ConfigError, DivergenceError
from .nets import (
    adam_for_net,
    adam_step,
    backward,
    copy_mlp,
    forward,
    init_mlp,
    soft_update,
)
from .normalize import RunningNorm


class OffPolicyAgent:
    def __init__(self, algo, env_spec, rng,
                 hidden_sizes=(256, 256), hidden_activation="relu",
                 actor_lr=3e-4, critic_lr=3e-4, gamma=0.99, tau=5e-3,
                 actor_update_period=2, critic_weight_decay=0.0,
                 normalize_observations=False):
        if algo not in ("ddpg", "td3"):
            raise ConfigError(f"unknown off-policy algorithm {algo!r}")
        high = np.asarray(env_spec.action_high, dtype=float)
        low = np.asarray(env_spec.action_low, dtype=float)
        if not np.allclose(-low, high) or not np.allclose(high, high[0]):
            raise ConfigError("action bounds must be symmetric and uniform across dimensions")

        self.algo = algo
        self.twin = algo == "td3"
        self.state_dim = env_spec.state_dim
        self.action_dim = env_spec.action_dim
        self.action_low = low
        self.action_high = high
        self.action_bound = float(high[0])
        self.gamma = float(gamma)
        self.tau = float(tau)
        self.actor_update_period = int(actor_update_period)
        self.critic_weight_decay = float(critic_weight_decay)
        self.hidden_sizes = tuple(hidden_sizes)
        self.hidden_activation = hidden_activation
        self.actor_lr = float(actor_lr)
        self.critic_lr = float(critic_lr)

        sdim, adim = self.state_dim, self.action_dim
        self.actor = init_mlp([sdim, *hidden_sizes, adim], rng,
                              hidden_activation=hidden_activation,
                              output_activation="scaled_tanh",
                              output_scale=self.action_bound)
        n_critics = 2 if self.twin else 1
        self.critics = [init_mlp([sdim + adim, *hidden_sizes, 1], rng,
                                 hidden_activation=hidden_activation)
                        for _ in range(n_critics)]
        self.actor_target = copy_mlp(self.actor)
        self.critic_targets = [copy_mlp(c) for c in self.critics]
        self.actor_opt = adam_for_net(self.actor, actor_lr)
        self.critic_opts = [adam_for_net(c, critic_lr) for c in self.critics]
        self.normalizer = RunningNorm(sdim) if normalize_observations else None
        self.critic_update_count = 0
        self.actor_update_count = 0
        self.target_update_count = 0

    # ----------------------------------------------------------------- acting

    def normalize(self, states):
        if self.normalizer is None:
            return np.asarray(states, dtype=float)
        return self.normalizer.normalize(states)

    def observe(self, state):
        """Feed one collected state into the running normalizer (training only)."""
        if self.normalizer is not None:
            self.normalizer.update(state)

    def select_action(self, state):
        """Deterministic policy action, within bounds by construction."""
        return forward(self.actor, self.normalize(state))

    # --------------------------------------------------------------- learning

    def td_target(self, rewards, next_states, dones, strategy):
        """Bootstrapped targets y = r + (1 - done) * gamma * Q_target'.

        The next action comes from the target actor and is perturbed by the
        active strategy's target-side rule; the twin variant takes the
        elementwise minimum over target critics. No gradients flow through y.
        """
        ns = self.normalize(next_states)
        next_actions = forward(self.actor_target, ns)
        perturbed = strategy.perturb_target(ns, next_actions)
        x = np.concatenate([ns, perturbed], axis=1)
        q = forward(self.critic_targets[0], x)[:, 0]
        if self.twin:
            q = np.minimum(q, forward(self.critic_targets[1], x)[:, 0])
        return np.asarray(rewards, dtype=float) + (1.0 - np.asarray(dones, dtype=float)) * self.gamma * q

    def update_critics(self, batch, targets):
        """One Adam step per critic on the executed-action regression.

        Loss per critic is the batch MSE between the bootstrapped targets and
        Q(s, executed_action). Returns the summed pre-update loss.
        """
        states = self.normalize(batch.states)
        x = np.concatenate([states, batch.executed_actions], axis=1)
        n = x.shape[0]
        total = 0.0
        for critic, opt in zip(self.critics, self.critic_opts):
            q = forward(critic, x)[:, 0]
            err = q - targets
            loss = float(np.mean(err ** 2))
            if not np.isfinite(loss):
                raise DivergenceError(f"critic loss diverged ({loss})")
            total += loss
            grads = backward(critic, x, (2.0 * err / n)[:, None])
            if self.critic_weight_decay > 0.0:
                # gradient of the L2 term wd * ||theta||^2
                for gw, w in zip(grads.weights, critic.weights):
                    gw += 2.0 * self.critic_weight_decay * w
                for gb, b in zip(grads.biases, critic.biases):
                    gb += 2.0 * self.critic_weight_decay * b
            adam_step(critic, grads, opt)
        self.critic_update_count += 1
        return total

    def actor_gradients(self, states):
        """Deterministic-policy-gradient of the loss -mean Q1(s, pi(s)).

        The critic's input gradient with respect to the action is chained
        through the actor; critics are read-only. Returns the batch-mean Q
        objective and the actor's loss gradients.
        """
        s = self.normalize(states)
        actions = forward(self.actor, s)
        x = np.concatenate([s, actions], axis=1)
        critic = self.critics[0]
        q = forward(critic, x)[:, 0]
        objective = float(np.mean(q))
        if not np.isfinite(objective):
            raise DivergenceError(f"actor objective diverged ({objective})")
        n = s.shape[0]
        upstream = np.full((n, 1), -1.0 / n)  # minimize -mean(Q)
        critic_grads = backward(critic, x, upstream)
        d_action = critic_grads.input_gradient[:, self.state_dim:]
        return objective, backward(self.actor, s, d_action)

    def update_actor(self, states):
        """One DPG ascent step on mean Q1(s, pi(s)); returns the pre-update objective."""
        objective, actor_grads = self.actor_gradients(states)
        adam_step(self.actor, actor_grads, self.actor_opt)
        self.actor_update_count += 1
        return objective

    def update_targets(self):
        """Soft-update every target network by tau."""
        soft_update(self.actor_target, self.actor, self.tau)
        for target, critic in zip(self.critic_targets, self.critics):
            soft_update(target, critic, self.tau)
        self.target_update_count += 1

    # ------------------------------------------------------------ persistence

    def state_arrays(self):
        """All network parameters keyed for npz persistence."""
        out = {}
        nets = {"actor": self.actor, "actor_target": self.actor_target}
        for i, c in enumerate(self.critics):
            nets[f"critic{i + 1}"] = c
        for i, c in enumerate(self.critic_targets):
            nets[f"critic{i + 1}_target"] = c
        for name, net in nets.items():
            for li, (w, b) in enumerate(zip(net.weights, net.biases)):
                out[f"{name}_w{li}"] = w
                out[f"{name}_b{li}"] = b
        if self.normalizer is not None:
            out["norm_count"] = np.array([self.normalizer.count])
            out["norm_mean"] = self.normalizer.mean
            out["norm_m2"] = self.normalizer.m2
        return out

    def load_state_arrays(self, arrays):
        nets = {"actor": self.actor, "actor_target": self.actor_target}
        for i, c in enumerate(self.critics):
            nets[f"critic{i + 1}"] = c
        for i, c in enumerate(self.critic_targets):
            nets[f"critic{i + 1}_target"] = c
        for name, net in nets.items():
            for li in range(len(net.weights)):
                net.weights[li][:] = arrays[f"{name}_w{li}"]
                net.biases[li][:] = arrays[f"{name}_b{li}"]
        if self.normalizer is not None and "norm_mean" in arrays:
            self.normalizer.load_state_dict({
                "count": int(arrays["norm_count"][0]),
                "mean": arrays["norm_mean"],
                "m2": arrays["norm_m2"],
            })
