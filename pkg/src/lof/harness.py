"""Experiment orchestration: satisfaction and composability protocols over
the delivery tasks, with metrics written as CSV.

The satisfaction protocol trains each method from scratch and periodically
freezes its current policy for a batch of evaluation rollouts; the x-axis is
raw environment interactions.  Option-based methods share one set of option
trainers per seed, since options are task-independent; their x-axis budget
is option-training steps.  The composability protocol starts from fully
trained options and measures how many meta-policy retraining steps a new
task needs.

CSV schema (one row per evaluation point):
    method,task,seed,steps,mean_return,std_return,satisfaction
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import ltl
from .automata import DELIVERY_PARTITION, Fsa, fsa_isomorphic, hand_coded_task_fsas
from .baselines import FlatOptionsConfig, QrmConfig, QrmTrainer, train_flat_options
from .gridworld import EnvironmentMdp, make_env
from .options import OptionTrainConfig, OptionTrainer, optimal_option
from .planner import (
    EventModel,
    LofQlTrainer,
    MetaQlConfig,
    PlannerConfig,
    hmdp_value_iteration,
    logical_value_iteration,
)
from .runtime import GOAL_REACHED, normalize_return, rollout, task_bounds
from .translate import translate_cosafe_to_fsa

TASKS = {
    "sequential": "F(a & F(b & F(c & F h))) & G !o",
    "if": "(((F(c & F a)) & (G !can)) | ((F a) & (F can))) & G !o",
    "or": "F((a | b) & F c) & G !o",
    "composite": "(((F((a | b) & F(c & F h))) & (G !can)) | "
                 "((F((a | b) & F h)) & (F can))) & G !o",
}

METHODS = ("lof-vi", "lof-ql", "greedy", "flat", "qrm")
OPTION_METHODS = ("lof-vi", "lof-ql", "greedy", "flat")

CSV_FIELDS = ("method", "task", "seed", "steps",
              "mean_return", "std_return", "satisfaction")


@dataclass(frozen=True)
class ExperimentConfig:
    map: str = "delivery"
    tasks: tuple = tuple(TASKS)
    methods: tuple = METHODS
    seeds: int = 10
    master_seed: int = 0
    option_episodes: int = 1600
    option_max_steps: int = 100
    alpha: float = 1.0
    epsilon: float = 0.15
    gamma: float = 1.0
    eval_every: int = 2000
    rollouts_per_eval: int = 10
    rollout_cap: int = 400
    lofql_eval_episodes: int = 2000
    lofql_retrain_episodes: int = 400
    lofql_retrain_eval_every: int = 10
    flat_episodes: int = 500
    max_retrain_sweeps: int = 50
    events: dict | None = None

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        for key in ("tasks", "methods"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def resolve_map_text(name: str) -> str:
    """A packaged map name (delivery, scenario) or a filesystem path."""
    from importlib import resources
    packaged = resources.files("lof").joinpath("maps", f"{name}.map")
    if packaged.is_file():
        return packaged.read_text()
    with open(name) as fh:
        return fh.read()


def build_environment(config: ExperimentConfig) -> tuple:
    env = make_env(resolve_map_text(config.map), gamma=config.gamma)
    probs = config.events if config.events is not None else env.event_probs
    return env, EventModel.bernoulli(probs)


def task_fsa(name: str) -> Fsa:
    split = ltl.split_spec(ltl.parse_ltl(TASKS[name]),
                           safety_props=("o",), event_props=("can",))
    return translate_cosafe_to_fsa(split.liveness, DELIVERY_PARTITION)


def compute_task_bounds(env: EnvironmentMdp, fsa: Fsa, events: EventModel,
                        cap: int) -> tuple:
    """Per-task normalization bounds: the best value over event outcomes
    from the flat oracle, and a worst case of paying every step."""
    s0 = env.state_index()[env.start]
    f0 = fsa.states.index(fsa.initial)
    best = max(hmdp_value_iteration(fsa, env, ev)[0][f0, 0, s0]
               for ev, _ in events.outcomes())
    return task_bounds(best, cap, env)


def _evaluate(kind, policy, fsa, env, options, events, bounds, cap,
              n_rollouts, seed):
    """Run a batch of seeded rollouts and summarize them."""
    returns = []
    satisfied = 0
    for i in range(n_rollouts):
        tr = rollout(kind, policy, fsa, env, options, events,
                     cap=cap, seed=seed * 10_000 + i)
        returns.append(normalize_return(tr.raw_return, bounds).normalized)
        satisfied += tr.terminal == GOAL_REACHED
    return (float(np.mean(returns)), float(np.std(returns)),
            satisfied / n_rollouts)


def _row(method, task, seed, steps, summary):
    mean, std, sat = summary
    return {"method": method, "task": task, "seed": seed, "steps": steps,
            "mean_return": mean, "std_return": std, "satisfaction": sat}


def run_satisfaction(config: ExperimentConfig, progress=None) -> list:
    """Learning curves: periodically evaluate every method while it trains.
    Returns metric rows; ``progress`` (if given) is called with a status
    string once per seed."""
    env, events = build_environment(config)
    fsas = {name: task_fsa(name) for name in config.tasks}
    bounds = {name: compute_task_bounds(env, fsas[name], events,
                                        config.rollout_cap)
              for name in config.tasks}
    opt_cfg = OptionTrainConfig(
        episodes=config.option_episodes, max_steps=config.option_max_steps,
        alpha=config.alpha, epsilon=config.epsilon, gamma=config.gamma)
    total_steps = config.option_episodes * config.option_max_steps \
        * len(env.grid.subgoals)
    rows = []
    want_options = [m for m in config.methods if m in OPTION_METHODS]

    for seed in range(config.seeds):
        base = config.master_seed + 1000 * seed
        trainers = {}
        if want_options:
            trainers = {name: OptionTrainer(env, name,
                                            replace(opt_cfg, seed=base + i))
                        for i, name in enumerate(sorted(env.grid.subgoals))}
        qrm = {}
        if "qrm" in config.methods:
            qrm = {task: QrmTrainer(fsas[task], env, events,
                                    QrmConfig(episodes=0,
                                              max_steps=config.option_max_steps,
                                              alpha=config.alpha,
                                              epsilon=config.epsilon,
                                              seed=base + 77))
                   for task in config.tasks}

        checkpoint = config.eval_every
        done = False
        last_option_steps = -1
        while not done:
            if want_options:
                while sum(t.env_steps for t in trainers.values()) < checkpoint:
                    exhausted = True
                    for t in trainers.values():
                        if t.episodes_run < opt_cfg.episodes:
                            t.run_episodes(1)
                            exhausted = False
                    if exhausted:
                        break
                steps_now = sum(t.env_steps for t in trainers.values())
            if want_options and steps_now != last_option_steps:
                last_option_steps = steps_now
                options = {name: t.extract() for name, t in trainers.items()}
                for task in config.tasks:
                    fsa = fsas[task]
                    for method in want_options:
                        policy = None
                        if method == "lof-vi":
                            policy = logical_value_iteration(
                                fsa, options, env, events)
                        elif method == "lof-ql":
                            policy = LofQlTrainer(
                                fsa, options, env, events,
                                MetaQlConfig(episodes=0, seed=base + 5))
                            policy.run_episodes(config.lofql_eval_episodes)
                            policy = policy.metapolicy()
                        elif method == "flat":
                            policy = train_flat_options(
                                env, options,
                                FlatOptionsConfig(episodes=config.flat_episodes,
                                                  seed=base + 9))
                        summary = _evaluate(
                            method, policy, fsa, env, options, events,
                            bounds[task], config.rollout_cap,
                            config.rollouts_per_eval, base)
                        rows.append(_row(method, task, seed, steps_now, summary))
            for task, trainer in qrm.items():
                while trainer.env_steps < checkpoint \
                        and trainer.env_steps < total_steps:
                    trainer.run_episodes(1)
                summary = _evaluate("qrm", trainer.model(), fsas[task], env,
                                    {}, events, bounds[task],
                                    config.rollout_cap,
                                    config.rollouts_per_eval, base)
                rows.append(_row("qrm", task, seed, trainer.env_steps, summary))
            done = checkpoint >= total_steps
            checkpoint += config.eval_every
        if progress is not None:
            progress(f"seed {seed} done")
    return rows


def run_composability(config: ExperimentConfig, progress=None) -> list:
    """Meta-policy retraining curves on fixed, fully trained options.  The
    steps column counts retraining units: value-iteration sweeps for lof-vi,
    episodes for lof-ql, zero for greedy (it never retrains)."""
    env, events = build_environment(config)
    fsas = {name: task_fsa(name) for name in config.tasks}
    bounds = {name: compute_task_bounds(env, fsas[name], events,
                                        config.rollout_cap)
              for name in config.tasks}
    opt_cfg = OptionTrainConfig(
        episodes=config.option_episodes, max_steps=config.option_max_steps,
        alpha=config.alpha, epsilon=config.epsilon, gamma=config.gamma)
    rows = []
    for seed in range(config.seeds):
        base = config.master_seed + 1000 * seed
        options = {}
        for i, name in enumerate(sorted(env.grid.subgoals)):
            trainer = OptionTrainer(env, name, replace(opt_cfg, seed=base + i))
            trainer.run_episodes(opt_cfg.episodes)
            options[name] = trainer.extract()
        for task in config.tasks:
            fsa = fsas[task]
            if "lof-vi" in config.methods:
                for sweeps in range(1, config.max_retrain_sweeps + 1):
                    mp = logical_value_iteration(
                        fsa, options, env, events,
                        PlannerConfig(max_sweeps=sweeps))
                    summary = _evaluate("lof-vi", mp, fsa, env, options,
                                        events, bounds[task],
                                        config.rollout_cap,
                                        config.rollouts_per_eval, base)
                    rows.append(_row("lof-vi", task, seed, sweeps, summary))
                    if mp.sweeps < sweeps or mp.residual < 1e-9:
                        break
            if "lof-ql" in config.methods:
                trainer = LofQlTrainer(fsa, options, env, events,
                                       MetaQlConfig(episodes=0, seed=base + 5))
                while trainer.episodes_run < config.lofql_retrain_episodes:
                    trainer.run_episodes(config.lofql_retrain_eval_every)
                    summary = _evaluate("lof-ql", trainer.metapolicy(), fsa,
                                        env, options, events, bounds[task],
                                        config.rollout_cap,
                                        config.rollouts_per_eval, base)
                    rows.append(_row("lof-ql", task, seed,
                                     trainer.episodes_run, summary))
            if "greedy" in config.methods:
                summary = _evaluate("greedy", None, fsa, env, options, events,
                                    bounds[task], config.rollout_cap,
                                    config.rollouts_per_eval, base)
                rows.append(_row("greedy", task, seed, 0, summary))
        if progress is not None:
            progress(f"seed {seed} done")
    return rows


def run_oracle_suite(config: ExperimentConfig) -> list:
    """Self-checks with independent oracles: task translation against the
    transcribed automata, option termination, and option-level planning
    against flat value iteration.  Returns (name, passed, detail) tuples."""
    env, events = build_environment(config)
    report = []

    hand = hand_coded_task_fsas()
    for name in config.tasks:
        ok = fsa_isomorphic(task_fsa(name), hand[name], DELIVERY_PARTITION)
        report.append((f"translation-isomorphic-{name}", ok, ""))

    options = {name: optimal_option(env, name, config.gamma)
               for name in sorted(env.grid.subgoals)}
    for name, opt in options.items():
        ok = bool(np.all(opt.steps >= 0))
        report.append((f"option-terminates-{name}", ok,
                       "" if ok else "non-terminating start states"))

    s0 = env.state_index()[env.start]
    for name in config.tasks:
        fsa = task_fsa(name)
        f0 = fsa.states.index(fsa.initial)
        for assignment, _ in events.outcomes():
            mp = logical_value_iteration(
                fsa, options, env, EventModel.fixed_assignment(assignment))
            v_star, _ = hmdp_value_iteration(fsa, env, assignment,
                                             gamma=config.gamma)
            diff = abs(mp.v[f0, s0] - v_star[f0, 0, s0])
            ok = diff <= 1e-9
            tag = ",".join(f"{k}={int(v)}" for k, v in sorted(assignment.items()))
            report.append((f"planner-oracle-{name}-{tag}", ok, f"diff={diff:.3g}"))
    return report


def write_metrics(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def read_metrics(path) -> list:
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            row["seed"] = int(row["seed"])
            row["steps"] = int(row["steps"])
            for key in ("mean_return", "std_return", "satisfaction"):
                row[key] = float(row[key])
            out.append(row)
        return out
