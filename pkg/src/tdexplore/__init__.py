"""Directed exploration for continuous control via TD-error maximization.

A self-contained toolkit: a numpy MLP core with manual backprop, toy
continuous-control environments, DDPG/TD3 and A2C agent cores, a learned
explorer that perturbs actions (off-policy) or states (on-policy) to maximize
the agent's TD error, undirected exploration baselines, and an experiment
harness with deterministic seeded runs.
"""

from .buffers import ReplayBuffer, RolloutBuffer, Transition, rewards_to_go
from .config import AgentConfig, default_config, desk_config, load_config
from .envs import EnvSpec, StepResult, make_env
from .errors import ConfigError, DivergenceError, ShapeError
from .explorer import TdErrorExplorer
from .harness import EvalRecord, RunResult, ablation_sweep, evaluate, run, run_sweep, smooth
from .nets import Adam, Gradients, Mlp, backward, finite_diff_gradient, forward, init_mlp, soft_update
from .noise import GaussianNoiseConfig, gaussian_perturb, greedy
from .off_policy import OffPolicyAgent
from .on_policy import OnPolicyAgent
from .rng import RngStreams

__version__ = "0.1.0"

__all__ = [
    "Adam", "AgentConfig", "ConfigError", "DivergenceError", "EnvSpec",
    "EvalRecord", "GaussianNoiseConfig", "Gradients", "Mlp", "OffPolicyAgent",
    "OnPolicyAgent", "ReplayBuffer", "RolloutBuffer", "RngStreams",
    "RunResult", "ShapeError", "StepResult", "TdErrorExplorer", "Transition",
    "ablation_sweep", "backward", "default_config", "desk_config", "evaluate",
    "finite_diff_gradient", "forward", "gaussian_perturb", "greedy",
    "init_mlp", "load_config", "make_env", "rewards_to_go", "run",
    "run_sweep", "smooth", "soft_update",
]
