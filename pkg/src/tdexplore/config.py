"""Run configuration: one flat record, JSON round-trip, per-algorithm defaults.

Defaults follow the published per-algorithm hyper-parameter tables; the desk
profile shrinks network width, batch size, and warmup so that a full 30k-step
run finishes in tens of seconds on one CPU core. Every field maps 1:1 to a
key in the flat JSON config document; CLI flags override file values.
"""

import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError

ALGOS = ("ddpg", "td3", "a2c")
EXPLORATIONS = ("discover", "gaussian", "greedy")
ABLATIONS = ("no_dpu", "no_tn", "no_tsr")
LAMBDA_GRID = (0.0, 0.1, 0.3, 0.6, 0.9, 1.0)

# Constant added to the training seed when seeding evaluation environments,
# so every evaluation reuses the same set of start states.
EVAL_SEED_OFFSET = 10000


@dataclass
class AgentConfig:
    algo: str = "td3"
    env: str = "pointmass_dense"
    exploration: str = "greedy"
    lam: float = 0.3  # serialized as "lambda"
    seed: int = 0
    seeds: tuple = ()  # used by sweeps; empty means just `seed`
    total_steps: int = 30000
    eval_interval: int = 1000
    eval_episodes: int = 10
    warmup_steps: int = 1000
    max_episode_steps: int = 200
    ablation: tuple = ()

    # shared network / optimization settings
    gamma: float = 0.99
    hidden_sizes: tuple = (256, 256)
    hidden_activation: str = "relu"
    batch_size: int = 256
    buffer_capacity: int = 10 ** 6

    # off-policy settings
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    tau: float = 5e-3
    actor_update_period: int = 2
    critic_weight_decay: float = 0.0
    normalize_observations: bool = False
    smoothing_noise_std: float = 0.2
    smoothing_clip: float = 0.5
    gaussian_noise_std: float = 0.1

    # on-policy settings
    learning_rate: float = 1.3e-3
    horizon: int = 32
    value_loss_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float = 0.5

    # explorer overrides; None inherits the actor's value (anything else must
    # match it exactly, enforced at construction)
    explorer_lr: float = None
    explorer_hidden_sizes: tuple = None
    explorer_activation: str = None
    explorer_update_period: int = None
    perturb_warmup: bool = False

    # run bookkeeping
    eval_seed_offset: int = EVAL_SEED_OFFSET
    log_transitions: bool = False
    track_schedule: bool = False


_ALGO_DEFAULTS = {
    "td3": dict(critic_lr=3e-4, actor_lr=3e-4, tau=5e-3, batch_size=256,
                actor_update_period=2, hidden_sizes=(256, 256),
                hidden_activation="relu", normalize_observations=False,
                critic_weight_decay=0.0, lam=0.3),
    "ddpg": dict(critic_lr=1e-3, actor_lr=1e-4, tau=1e-3, batch_size=64,
                 actor_update_period=1, hidden_sizes=(400, 300),
                 hidden_activation="relu", normalize_observations=True,
                 critic_weight_decay=1e-2, lam=0.3),
    "a2c": dict(learning_rate=1.3e-3, hidden_sizes=(64, 64),
                hidden_activation="tanh", horizon=32, lam=0.1,
                actor_update_period=1),
}


def default_config(algo="td3", **overrides) -> AgentConfig:
    """Config with the published per-algorithm defaults, plus overrides."""
    if algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {algo!r}; valid: {', '.join(ALGOS)}")
    cfg = AgentConfig(algo=algo, **_ALGO_DEFAULTS[algo])
    cfg = replace(cfg, **overrides)
    return validate(cfg)


def desk_config(algo="td3", **overrides) -> AgentConfig:
    """Desk-scale profile: smaller networks and batches for fast CPU runs.

    The training mechanics are unchanged; only width, batch size, and warmup
    shrink so a 30k-step run completes in tens of seconds.
    """
    desk = dict(hidden_sizes=(64, 64), batch_size=64, warmup_steps=1000)
    desk.update(overrides)
    return default_config(algo, **desk)


def validate(cfg: AgentConfig) -> AgentConfig:
    if cfg.algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {cfg.algo!r}")
    if cfg.exploration not in EXPLORATIONS:
        raise ConfigError(f"unknown exploration {cfg.exploration!r}; "
                          f"valid: {', '.join(EXPLORATIONS)}")
    if cfg.algo == "a2c" and cfg.exploration == "gaussian":
        raise ConfigError("gaussian action noise applies to off-policy algorithms only")
    if not 0.0 <= cfg.lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {cfg.lam}")
    bad = set(cfg.ablation) - set(ABLATIONS)
    if bad:
        raise ConfigError(f"unknown ablation flags {sorted(bad)}; valid: {ABLATIONS}")
    if cfg.ablation and (cfg.exploration != "discover" or cfg.algo == "a2c"):
        raise ConfigError("ablation flags require exploration=discover and an "
                          "off-policy algorithm")
    for name in ("total_steps",):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be >= 0")
    for name in ("eval_interval", "eval_episodes", "max_episode_steps",
                 "batch_size", "horizon", "actor_update_period"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if cfg.warmup_steps < 0:
        raise ConfigError("warmup_steps must be >= 0")
    return cfg


def config_to_dict(cfg: AgentConfig) -> dict:
    d = asdict(cfg)
    d["lambda"] = d.pop("lam")
    for key in ("seeds", "ablation", "hidden_sizes", "explorer_hidden_sizes"):
        if d[key] is not None:
            d[key] = list(d[key])
    return d


def apply_overrides(cfg: AgentConfig, d: dict) -> AgentConfig:
    """Override config fields from a (possibly sparse) dict of JSON keys."""
    d = dict(d)
    if "lambda" in d:
        d["lam"] = d.pop("lambda")
    known = {f.name for f in fields(AgentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("seeds", "ablation", "hidden_sizes", "explorer_hidden_sizes"):
        if key in d and d[key] is not None:
            d[key] = tuple(d[key])
    return validate(replace(cfg, **d))


def config_from_dict(d: dict) -> AgentConfig:
    """Build a config from a flat dict: per-algorithm defaults first, then
    the dict's keys on top."""
    algo = d.get("algo", "td3")
    if algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {algo!r}; valid: {', '.join(ALGOS)}")
    base = AgentConfig(algo=algo, **_ALGO_DEFAULTS[algo])
    return apply_overrides(base, d)


def load_config(path) -> AgentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: AgentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
