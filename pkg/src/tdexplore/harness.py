"""Experiment runner: wires agents, explorers, environments, and buffers.

One `run(config)` executes the full training/evaluation protocol for a single
seed: act, store, update on the algorithm's schedule, and every
`eval_interval` steps roll 10 deterministic episodes in a fresh evaluation
environment seeded `seed + eval_seed_offset` (exploration disabled, no
updates). Runs are bit-reproducible: every stochastic component draws from
its own named stream, so re-running a config yields byte-identical CSVs.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .buffers import ReplayBuffer, RolloutBuffer, Transition, transition_json_line
from .config import (
    ABLATIONS,
    LAMBDA_GRID,
    AgentConfig,
    config_to_dict,
    validate,
)
from .envs import make_env
from .errors import ConfigError, DivergenceError
from .explorer import TdErrorExplorer
from .noise import GaussianExploration, GaussianNoiseConfig, GreedyExploration
from .off_policy import OffPolicyAgent
from .on_policy import OnPolicyAgent
from .rng import RngStreams


@dataclass
class EvalRecord:
    """One evaluation: per-episode returns plus their mean and std."""

    step: int
    returns: list
    mean: float
    std: float
    seed: int


@dataclass
class ScheduleTrace:
    """Step indices at which each update kind fired (for schedule checks)."""

    critic_steps: list
    actor_steps: list
    explorer_steps: list
    target_explorer_steps: list


@dataclass
class RunResult:
    config: AgentConfig
    records: list
    counters: dict
    last10_mean: float
    schedule: ScheduleTrace = None


# --------------------------------------------------------------------- builders

def build_agent(cfg: AgentConfig, env_spec, rng):
    if cfg.algo == "a2c":
        return OnPolicyAgent(env_spec, rng, hidden_sizes=cfg.hidden_sizes,
                             hidden_activation=cfg.hidden_activation,
                             learning_rate=cfg.learning_rate, gamma=cfg.gamma,
                             horizon=cfg.horizon,
                             value_loss_coef=cfg.value_loss_coef,
                             entropy_coef=cfg.entropy_coef,
                             max_grad_norm=cfg.max_grad_norm)
    return OffPolicyAgent(cfg.algo, env_spec, rng, hidden_sizes=cfg.hidden_sizes,
                          hidden_activation=cfg.hidden_activation,
                          actor_lr=cfg.actor_lr, critic_lr=cfg.critic_lr,
                          gamma=cfg.gamma, tau=cfg.tau,
                          actor_update_period=cfg.actor_update_period,
                          critic_weight_decay=cfg.critic_weight_decay,
                          normalize_observations=cfg.normalize_observations)


def build_strategy(cfg: AgentConfig, agent, env_spec, streams: RngStreams):
    """Exploration strategy for a run; the learned explorer is initialized
    from the init stream after the agent, so enabling it never shifts the
    agent's own initialization draws."""
    if cfg.exploration == "greedy":
        return GreedyExploration()
    if cfg.exploration == "gaussian":
        return GaussianExploration(
            GaussianNoiseConfig(cfg.gaussian_noise_std), streams.action_noise,
            env_spec.action_low, env_spec.action_high,
            target_smoothing=(cfg.algo == "td3"),
            smoothing_std=cfg.smoothing_noise_std,
            smoothing_clip=cfg.smoothing_clip,
            smoothing_rng=streams.smoothing)
    if cfg.algo == "a2c":
        return TdErrorExplorer(
            "on_policy", env_spec.state_dim, agent.direction_dim, cfg.lam,
            streams.init,
            actor_hidden_sizes=agent.hidden_sizes,
            actor_activation=agent.hidden_activation,
            actor_learning_rate=agent.learning_rate,
            actor_update_period=agent.actor_update_period,
            hidden_sizes=cfg.explorer_hidden_sizes,
            activation=cfg.explorer_activation,
            learning_rate=cfg.explorer_lr,
            update_period=cfg.explorer_update_period)
    return TdErrorExplorer(
        "off_policy", env_spec.state_dim, env_spec.action_dim, cfg.lam,
        streams.init,
        actor_hidden_sizes=agent.hidden_sizes,
        actor_activation=agent.hidden_activation,
        actor_learning_rate=agent.actor_lr,
        actor_update_period=agent.actor_update_period,
        output_scale=agent.action_bound,
        hidden_sizes=cfg.explorer_hidden_sizes,
        activation=cfg.explorer_activation,
        learning_rate=cfg.explorer_lr,
        update_period=cfg.explorer_update_period,
        no_delayed_updates="no_dpu" in cfg.ablation,
        no_target_network="no_tn" in cfg.ablation,
        no_target_smoothing="no_tsr" in cfg.ablation)


# ------------------------------------------------------------------- evaluation

def evaluate(agent, env_name, episodes, seed, max_episode_steps=200,
             step=0, record_seed=None) -> EvalRecord:
    """Deterministic evaluation: greedy actions, zero directions, no updates.

    A fresh environment is constructed from `seed`, so repeated evaluations
    replay the same set of start states. The agent is never mutated.
    """
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    env = make_env(env_name, int(seed), max_episode_steps)
    on_policy = isinstance(agent, OnPolicyAgent)
    zero_dir = np.zeros(agent.direction_dim) if on_policy else None
    returns = []
    for _ in range(episodes):
        state = env.reset()
        total = 0.0
        while True:
            if on_policy:
                action = agent.deterministic_action(state, zero_dir)
            else:
                action = agent.select_action(state)
            res = env.step(action)
            total += res.reward
            state = res.next_state
            if res.done or res.truncated:
                break
        returns.append(total)
    return EvalRecord(int(step), returns, float(np.mean(returns)),
                      float(np.std(returns)),
                      int(seed if record_seed is None else record_seed))


def last10_mean(records) -> float:
    """Summary statistic: mean of the last (up to) 10 evaluation means."""
    tail = records[-10:]
    return float(np.mean([r.mean for r in tail]))


def smooth(series, window=5):
    """Trailing moving average, truncated at the start of the series."""
    if window < 1:
        raise ConfigError("window must be >= 1")
    series = np.asarray(series, dtype=float)
    out = np.empty_like(series)
    for i in range(series.size):
        out[i] = series[max(0, i - window + 1):i + 1].mean()
    return out


# --------------------------------------------------------------------- training

def run(cfg: AgentConfig, out_dir=None) -> RunResult:
    """Execute one seeded training run and (optionally) write its artifacts.

    Writes results.csv, manifest.json, agent.npz, and (when enabled)
    transitions.jsonl into `out_dir`. Raises DivergenceError after writing a
    diagnostic record if training produces non-finite losses.
    """
    cfg = validate(cfg)
    streams = RngStreams(cfg.seed)
    env = make_env(cfg.env, streams.env, cfg.max_episode_steps)
    agent = build_agent(cfg, env.spec, streams.init)
    strategy = build_strategy(cfg, agent, env.spec, streams)
    trace = ScheduleTrace([], [], [], []) if cfg.track_schedule else None

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    tlog = None
    if out_dir is not None and cfg.log_transitions:
        tlog = open(os.path.join(out_dir, "transitions.jsonl"), "w")

    records = []

    def do_eval(step):
        records.append(evaluate(agent, cfg.env, cfg.eval_episodes,
                                cfg.seed + cfg.eval_seed_offset,
                                cfg.max_episode_steps, step=step,
                                record_seed=cfg.seed))

    try:
        if cfg.algo == "a2c":
            _train_on_policy(cfg, env, agent, strategy, streams, do_eval, tlog, trace)
        else:
            _train_off_policy(cfg, env, agent, strategy, streams, do_eval, tlog, trace)
    except DivergenceError as err:
        if out_dir is not None:
            with open(os.path.join(out_dir, "diverged.json"), "w") as fh:
                json.dump({"error": str(err),
                           "counters": _counters(agent, strategy)}, fh, indent=2)
        raise
    finally:
        if tlog is not None:
            tlog.close()

    counters = _counters(agent, strategy)
    result = RunResult(cfg, records, counters, last10_mean(records), trace)
    if out_dir is not None:
        _write_results_csv(os.path.join(out_dir, "results.csv"), records, cfg.seed)
        _write_manifest(os.path.join(out_dir, "manifest.json"), cfg, streams,
                        counters, result.last10_mean)
        _save_networks(os.path.join(out_dir, "agent.npz"), agent, strategy)
    return result


def _train_off_policy(cfg, env, agent, strategy, streams, do_eval, tlog, trace):
    spec = env.spec
    buffer = ReplayBuffer(cfg.buffer_capacity, spec.state_dim, spec.action_dim)
    discover = cfg.exploration == "discover"
    explorer = strategy if discover else None

    state = env.reset()
    agent.observe(state)
    do_eval(0)
    train_iters = 0
    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.warmup_steps:
            action = streams.warmup.uniform(spec.action_low, spec.action_high)
            if discover and cfg.perturb_warmup:
                executed = explorer.perturb(agent.normalize(state), action)
            else:
                executed = action
        else:
            action = agent.select_action(state)
            executed = strategy.perturb(agent.normalize(state), action)
        res = env.step(executed)
        # done marks true termination only; horizon truncation keeps the
        # bootstrap alive in the TD targets
        buffer.push(Transition(state, action, res.reward, res.next_state,
                               res.done, executed_action=executed))
        if tlog is not None:
            tlog.write(transition_json_line(step, state, action, executed,
                                            res.reward, res.next_state,
                                            res.done) + "\n")
        agent.observe(res.next_state)
        if res.done or res.truncated:
            state = env.reset()
            agent.observe(state)
        else:
            state = res.next_state

        if step > cfg.warmup_steps:
            train_iters += 1
            batch = buffer.sample(cfg.batch_size, streams.buffer)
            targets = agent.td_target(batch.rewards, batch.next_states,
                                      batch.dones, strategy)
            agent.update_critics(batch, targets)
            if trace is not None:
                trace.critic_steps.append(step)
            actor_due = train_iters % cfg.actor_update_period == 0
            explorer_due = discover and (explorer.no_delayed_updates or actor_due)
            if actor_due:
                agent.update_actor(batch.states)
                if trace is not None:
                    trace.actor_steps.append(step)
            if explorer_due:
                # same batch and same targets as the critic update: the
                # explorer never consumes extra sampling draws
                explorer.update_off(agent, batch, targets)
                if trace is not None:
                    trace.explorer_steps.append(step)
            targets_due = actor_due if cfg.algo == "td3" else True
            if targets_due:
                agent.update_targets()
                if discover and explorer.target_net is not None:
                    explorer.sync_target(cfg.tau)
                    if trace is not None:
                        trace.target_explorer_steps.append(step)
        if step % cfg.eval_interval == 0:
            do_eval(step)


def _train_on_policy(cfg, env, agent, strategy, streams, do_eval, tlog, trace):
    spec = env.spec
    discover = cfg.exploration == "discover"
    explorer = strategy if discover else None
    rollout = RolloutBuffer(cfg.horizon, spec.state_dim, spec.action_dim,
                            agent.direction_dim)
    zero_dir = np.zeros(agent.direction_dim)

    state = env.reset()
    do_eval(0)
    for step in range(1, cfg.total_steps + 1):
        direction = explorer.direction(state) if discover else zero_dir
        action, _ = agent.sample_action(state, direction, streams.action_noise)
        res = env.step(action)
        boundary = res.done or res.truncated
        rollout.add(state, direction, action, res.reward, res.next_state,
                    boundary, agent.value(state, direction))
        if tlog is not None:
            tlog.write(transition_json_line(step, state, action, action,
                                            res.reward, res.next_state,
                                            res.done) + "\n")
        state = env.reset() if boundary else res.next_state

        if rollout.full:
            returns = agent.compute_returns(rollout, explorer)
            if discover:
                explorer.update_on(agent, rollout, returns)
                if trace is not None:
                    trace.explorer_steps.append(step)
            agent.update(rollout, returns)
            if trace is not None:
                trace.actor_steps.append(step)
            rollout.clear()
        if step % cfg.eval_interval == 0:
            do_eval(step)


def _counters(agent, strategy):
    counters = {
        "explorer_updates": int(getattr(strategy, "update_count", 0)),
        "target_explorer_syncs": int(getattr(strategy, "target_sync_count", 0)),
    }
    if isinstance(agent, OnPolicyAgent):
        counters["policy_updates"] = agent.update_count
    else:
        counters["critic_updates"] = agent.critic_update_count
        counters["actor_updates"] = agent.actor_update_count
        counters["target_updates"] = agent.target_update_count
    return counters


# ----------------------------------------------------------------- file output

def _write_results_csv(path, records, seed):
    lines = ["step,seed,mean_return,std_return"]
    for r in records:
        lines.append(f"{r.step},{seed},{r.mean!r},{r.std!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_manifest(path, cfg, streams, counters, summary):
    manifest = {
        "config": config_to_dict(cfg),
        "stream_spawn_keys": streams.spawn_keys,
        "eval_seed": cfg.seed + cfg.eval_seed_offset,
        "counters": counters,
        "last10_mean": summary,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _save_networks(path, agent, strategy):
    arrays = dict(agent.state_arrays())
    if isinstance(strategy, TdErrorExplorer):
        for li, (w, b) in enumerate(zip(strategy.net.weights, strategy.net.biases)):
            arrays[f"explorer_w{li}"] = w
            arrays[f"explorer_b{li}"] = b
        if strategy.target_net is not None:
            for li, (w, b) in enumerate(zip(strategy.target_net.weights,
                                            strategy.target_net.biases)):
                arrays[f"explorer_target_w{li}"] = w
                arrays[f"explorer_target_b{li}"] = b
    np.savez(path, **arrays)


def load_run_networks(run_dir):
    """Rebuild the agent (and explorer, if any) from a finished run's files."""
    from .config import config_from_dict  # local import to avoid cycles at startup

    with open(os.path.join(run_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    cfg = config_from_dict(manifest["config"])
    spec = make_env(cfg.env, 0, cfg.max_episode_steps).spec
    rng = np.random.default_rng(0)
    agent = build_agent(cfg, spec, rng)
    arrays = np.load(os.path.join(run_dir, "agent.npz"))
    agent.load_state_arrays(arrays)
    explorer = None
    if cfg.exploration == "discover" and cfg.algo != "a2c":
        streams = RngStreams(0)
        explorer = build_strategy(cfg, agent, spec, streams)
        for li in range(len(explorer.net.weights)):
            explorer.net.weights[li][:] = arrays[f"explorer_w{li}"]
            explorer.net.biases[li][:] = arrays[f"explorer_b{li}"]
        if explorer.target_net is not None:
            for li in range(len(explorer.target_net.weights)):
                explorer.target_net.weights[li][:] = arrays[f"explorer_target_w{li}"]
                explorer.target_net.biases[li][:] = arrays[f"explorer_target_b{li}"]
    return cfg, agent, explorer


# --------------------------------------------------------------------- sweeping

def sweep_settings(cfg: AgentConfig, mode: str):
    """Named config variants for one sweep mode."""
    base = replace(cfg, ablation=())
    if mode == "lambda":
        return [(f"lambda_{v}", replace(base, exploration="discover", lam=v))
                for v in LAMBDA_GRID]
    if mode == "ablation":
        if cfg.exploration != "discover":
            raise ConfigError("ablation sweeps require exploration=discover")
        settings = [(f"lambda_{v}", replace(base, exploration="discover", lam=v))
                    for v in LAMBDA_GRID]
        if cfg.algo != "a2c":
            # the delayed-update/target-network/smoothing toggles only exist
            # in the off-policy setting
            for flag in ABLATIONS:
                settings.append((flag, replace(base, exploration="discover",
                                               ablation=(flag,))))
        return settings
    if mode == "baselines":
        settings = [("discover", replace(base, exploration="discover"))]
        if cfg.algo != "a2c":
            settings.append(("gaussian", replace(base, exploration="gaussian")))
        settings.append(("greedy", replace(base, exploration="greedy")))
        return settings
    raise ConfigError(f"unknown sweep mode {mode!r}; valid: lambda, ablation, baselines")


def _sweep_worker(job):
    name, cfg, out_dir = job
    result = run(cfg, out_dir)
    return {"setting": name, "seed": cfg.seed, "last10_mean": result.last10_mean}


def run_sweep(cfg: AgentConfig, mode: str, out_dir=None, workers=1):
    """Run every (setting, seed) pair of a sweep; returns summary rows.

    Writes per-run artifacts under out_dir/<setting>/seed_<n>/ and a
    summary.csv with one row per setting per seed. Rows keep the job order,
    so output files are deterministic.
    """
    seeds = tuple(cfg.seeds) if cfg.seeds else (cfg.seed,)
    jobs = []
    for name, setting_cfg in sweep_settings(cfg, mode):
        for seed in seeds:
            sub = None if out_dir is None else os.path.join(out_dir, name, f"seed_{seed}")
            jobs.append((name, replace(setting_cfg, seed=seed), sub))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(job) for job in jobs]
    if out_dir is not None:
        lines = ["setting,seed,last10_mean"]
        for row in rows:
            lines.append(f"{row['setting']},{row['seed']},{row['last10_mean']!r}")
        with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return rows


def ablation_sweep(cfg: AgentConfig, out_dir=None, workers=1):
    """The full ablation grid: six lambda values plus the off-policy toggles."""
    return run_sweep(cfg, "ablation", out_dir=out_dir, workers=workers)
