"""Toy continuous-control environments, deterministic given a seed.

Two families at desk scale: a velocity-integrating point mass on the unit
box (dense and sparse reward variants) and the classic torque-limited
pendulum swing-up. Actions are clipped to bounds rather than rejected.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

ENV_NAMES = ("pointmass_dense", "pointmass_sparse", "pendulum")

DEFAULT_HORIZON = 200


@dataclass
class EnvSpec:
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_episode_steps: int = DEFAULT_HORIZON


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool
    truncated: bool


def _make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class PointMass:
    """2-D point mass: action is acceleration, goal in the upper-right corner.

    State (px, py, vx, vy). Dynamics v' = clamp(v + dt*a), p' = clamp(p + dt*v')
    with dt = 0.05, positions and velocities clamped to [-1, 1]. Dense variant
    rewards -dist(p', goal) per step; sparse variant pays 1 only inside the
    goal radius. Reaching the goal ends the episode in both variants.
    """

    DT = 0.05
    GOAL = np.array([0.8, 0.8])
    GOAL_RADIUS = 0.1

    def __init__(self, seed, sparse=False, max_episode_steps=DEFAULT_HORIZON):
        self.spec = EnvSpec(4, 2, -np.ones(2), np.ones(2), max_episode_steps)
        self.sparse = sparse
        self._rng = _make_rng(seed)
        self.position = np.zeros(2)
        self.velocity = np.zeros(2)
        self._steps = 0
        self._active = False

    def reset(self, seed=None):
        if seed is not None:
            self._rng = _make_rng(seed)
        self.position = self._rng.uniform(-0.1, 0.1, size=2)
        self.velocity = np.zeros(2)
        self._steps = 0
        self._active = True
        return self._obs()

    def _obs(self):
        return np.concatenate([self.position, self.velocity])

    def step(self, action):
        if not self._active:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        action = np.asarray(action, dtype=float)
        if action.shape != (2,):
            raise ShapeError(f"point mass expects a 2-vector action, got shape {action.shape}")
        a = np.clip(action, self.spec.action_low, self.spec.action_high)
        self.velocity = np.clip(self.velocity + self.DT * a, -1.0, 1.0)
        self.position = np.clip(self.position + self.DT * self.velocity, -1.0, 1.0)
        self._steps += 1
        dist = float(np.linalg.norm(self.position - self.GOAL))
        at_goal = dist < self.GOAL_RADIUS
        if self.sparse:
            reward = 1.0 if at_goal else 0.0
        else:
            reward = -dist
        done = at_goal
        truncated = self._steps >= self.spec.max_episode_steps
        if done or truncated:
            self._active = False
        return StepResult(self._obs(), reward, done, truncated)


class Pendulum:
    """Torque-limited pendulum swing-up; never terminates, horizon-truncated only.

    Observation (cos th, sin th, th_dot); torque bound 2. Reward is the
    negative quadratic cost on wrapped angle, angular velocity, and torque,
    evaluated at the pre-update state as in the classic control benchmark.
    """

    G = 10.0
    LENGTH = 1.0
    MASS = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0

    def __init__(self, seed, max_episode_steps=DEFAULT_HORIZON):
        self.spec = EnvSpec(3, 1, -2.0 * np.ones(1), 2.0 * np.ones(1), max_episode_steps)
        self._rng = _make_rng(seed)
        self.theta = 0.0
        self.theta_dot = 0.0
        self._steps = 0
        self._active = False

    def reset(self, seed=None):
        if seed is not None:
            self._rng = _make_rng(seed)
        self.theta = float(self._rng.uniform(-np.pi, np.pi))
        self.theta_dot = float(self._rng.uniform(-1.0, 1.0))
        self._steps = 0
        self._active = True
        return self._obs()

    def _obs(self):
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])

    @staticmethod
    def _wrap(angle):
        return ((angle + np.pi) % (2.0 * np.pi)) - np.pi

    def step(self, action):
        if not self._active:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        action = np.asarray(action, dtype=float)
        if action.shape != (1,):
            raise ShapeError(f"pendulum expects a 1-vector action, got shape {action.shape}")
        u = float(np.clip(action, -self.MAX_TORQUE, self.MAX_TORQUE)[0])
        th_norm = self._wrap(self.theta)
        reward = -(th_norm ** 2 + 0.1 * self.theta_dot ** 2 + 0.001 * u ** 2)
        accel = (3.0 * self.G / (2.0 * self.LENGTH)) * np.sin(self.theta) \
            + (3.0 / (self.MASS * self.LENGTH ** 2)) * u
        self.theta_dot = float(np.clip(self.theta_dot + accel * self.DT,
                                       -self.MAX_SPEED, self.MAX_SPEED))
        self.theta = self.theta + self.theta_dot * self.DT
        self._steps += 1
        truncated = self._steps >= self.spec.max_episode_steps
        if truncated:
            self._active = False
        return StepResult(self._obs(), reward, False, truncated)


def make_env(name: str, seed, max_episode_steps=DEFAULT_HORIZON):
    """Construct a named environment with its own RNG.

    `seed` may be an int or an existing numpy Generator (to share a stream).
    """
    if name == "pointmass_dense":
        return PointMass(seed, sparse=False, max_episode_steps=max_episode_steps)
    if name == "pointmass_sparse":
        return PointMass(seed, sparse=True, max_episode_steps=max_episode_steps)
    if name == "pendulum":
        return Pendulum(seed, max_episode_steps=max_episode_steps)
    raise ConfigError(f"unknown environment {name!r}; valid names: {', '.join(ENV_NAMES)}")
