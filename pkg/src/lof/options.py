"""Subgoal options: tabular Q-learning of one policy per subgoal, plus exact
reward and transition models obtained by evaluating the learned policy on the
deterministic environment.

An option for subgoal p can start anywhere, runs its greedy policy, and
terminates exactly when the agent stands on p's cell.  Its reward model holds
the discounted cost of running it to termination from every start; its
transition model is a point mass on the subgoal cell scaled by gamma^k, where
k is the number of primitive steps taken.  Starts whose trajectory cycles
before reaching the subgoal are marked with a -inf reward sentinel and zero
transition mass.

The general variants track a safety-automaton state alongside the grid cell,
so path-dependent safety costs show up in the models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .automata import SafetyAutomaton, trivial_safety_automaton
from .gridworld import ACTIONS, EnvironmentMdp

NONTERMINATING = -np.inf


@dataclass(frozen=True)
class OptionTrainConfig:
    episodes: int = 1600
    max_steps: int = 100
    alpha: float = 1.0
    epsilon: float = 0.15
    epsilon_final: float | None = None
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if self.episodes < 1 or self.max_steps < 1:
            raise ValueError("episodes and max_steps must be >= 1")

    def epsilon_at(self, episode: int) -> float:
        if self.epsilon_final is None or self.episodes <= 1:
            return self.epsilon
        frac = episode / (self.episodes - 1)
        return self.epsilon + frac * (self.epsilon_final - self.epsilon)


@dataclass(frozen=True)
class LogicalOption:
    """A trained subgoal option together with its exact models.

    Arrays are indexed [safety state, environment state]; with the trivial
    one-state safety automaton the leading axis has length 1.  ``reward`` is
    -inf and ``mass`` is 0 where the policy never reaches the subgoal.
    """
    subgoal: str
    goal_state: int
    policy: np.ndarray       # (n_fs, n_s) int
    reward: np.ndarray       # (n_fs, n_s) float, R_o
    mass: np.ndarray         # (n_fs, n_s) float, E[gamma^k]
    steps: np.ndarray        # (n_fs, n_s) int, -1 where non-terminating
    terminal_fs: np.ndarray  # (n_fs, n_s) int, -1 where non-terminating
    q: np.ndarray | None = None
    config: OptionTrainConfig | None = None

    @property
    def n_safety_states(self) -> int:
        return self.policy.shape[0]

    def terminates(self) -> np.ndarray:
        return self.steps >= 0


def _product_reward(env: EnvironmentMdp, safety: SafetyAutomaton,
                    fs_name: str, cell, action) -> float:
    """Step reward plus the safety cost charged for entering the next cell
    while the safety automaton sits in fs_name."""
    nxt = env.step(cell, action)
    _, safety_true = env.label(nxt)
    return env.step_reward + safety.cost(fs_name, safety_true)


class OptionTrainer:
    """Incremental epsilon-greedy Q-learning for one subgoal option, kept
    resumable so experiment curves can interleave training with evaluation.
    Counts raw environment interactions in ``env_steps``."""

    def __init__(self, env: EnvironmentMdp, subgoal: str,
                 config: OptionTrainConfig | None = None,
                 safety: SafetyAutomaton | None = None):
        self.env = env
        self.subgoal = subgoal
        self.config = config or OptionTrainConfig()
        self.safety = safety or trivial_safety_automaton(env.safety_costs)
        if subgoal not in env.grid.subgoals:
            raise KeyError(f"subgoal {subgoal!r} not present on the map")
        self.states = env.states
        self.index = env.state_index()
        self.goal_state = self.index[env.grid.subgoals[subgoal]]
        self.fs_index = {name: i for i, name in enumerate(self.safety.states)}
        n_fs, n_s = len(self.safety.states), len(self.states)
        self.q = np.zeros((n_fs, n_s, len(ACTIONS)))
        self.rng = np.random.default_rng(self.config.seed)
        self.episodes_run = 0
        self.env_steps = 0

    def run_episodes(self, n: int) -> None:
        cfg = self.config
        n_fs, n_s = self.q.shape[0], self.q.shape[1]
        for _ in range(n):
            s = int(self.rng.integers(n_s))
            fs = int(self.rng.integers(n_fs))
            eps = cfg.epsilon_at(self.episodes_run)
            self.episodes_run += 1
            if s == self.goal_state:
                continue
            for _ in range(cfg.max_steps):
                if self.rng.random() < eps:
                    a = int(self.rng.integers(len(ACTIONS)))
                else:
                    a = int(np.argmax(self.q[fs, s]))
                cell = self.states[s]
                nxt_cell = self.env.step(cell, a)
                _, safety_true = self.env.label(nxt_cell)
                r = self.env.step_reward \
                    + self.safety.cost(self.safety.states[fs], safety_true)
                nxt_fs = self.fs_index[
                    self.safety.step(self.safety.states[fs], safety_true, {})]
                nxt = self.index[nxt_cell]
                done = nxt == self.goal_state
                target = r if done else r + cfg.gamma * np.max(self.q[nxt_fs, nxt])
                self.q[fs, s, a] += cfg.alpha * (target - self.q[fs, s, a])
                self.env_steps += 1
                s, fs = nxt, nxt_fs
                if done:
                    break

    def extract(self) -> LogicalOption:
        policy = np.argmax(self.q, axis=2).astype(np.int64)
        option = evaluate_option_models(self.env, policy, self.subgoal,
                                        self.config.gamma, self.safety)
        return replace(option, q=self.q.copy(), config=self.config)


def train_option(env: EnvironmentMdp, subgoal: str,
                 config: OptionTrainConfig | None = None,
                 safety: SafetyAutomaton | None = None) -> LogicalOption:
    """Learn the option policy for one subgoal with epsilon-greedy tabular
    Q-learning, then attach exact models via evaluate_option_models."""
    trainer = OptionTrainer(env, subgoal, config, safety)
    trainer.run_episodes(trainer.config.episodes)
    return trainer.extract()


def train_option_general(env: EnvironmentMdp, safety: SafetyAutomaton,
                         subgoal: str,
                         config: OptionTrainConfig | None = None) -> LogicalOption:
    """Option learning on the product of the grid and a safety automaton."""
    return train_option(env, subgoal, config, safety=safety)


def optimal_option(env: EnvironmentMdp, subgoal: str, gamma: float = 1.0,
                   safety: SafetyAutomaton | None = None) -> LogicalOption:
    """Exactly optimal option policy by value iteration on the product of the
    grid and the safety automaton, with the subgoal cell absorbing."""
    safety = safety or trivial_safety_automaton(env.safety_costs)
    if subgoal not in env.grid.subgoals:
        raise KeyError(f"subgoal {subgoal!r} not present on the map")
    states = env.states
    index = env.state_index()
    goal_state = index[env.grid.subgoals[subgoal]]
    n_fs = len(safety.states)
    n_s = len(states)
    fs_index = {name: i for i, name in enumerate(safety.states)}

    # precompute deterministic product transitions and rewards
    nxt = np.zeros((n_fs, n_s, len(ACTIONS)), dtype=np.int64)
    nxt_fs = np.zeros_like(nxt)
    rew = np.zeros((n_fs, n_s, len(ACTIONS)))
    for fs, fs_name in enumerate(safety.states):
        for s, cell in enumerate(states):
            for a in ACTIONS:
                nc = env.step(cell, a)
                _, safety_true = env.label(nc)
                nxt[fs, s, a] = index[nc]
                nxt_fs[fs, s, a] = fs_index[safety.step(fs_name, safety_true, {})]
                rew[fs, s, a] = env.step_reward + safety.cost(fs_name, safety_true)

    v = np.zeros((n_fs, n_s))
    for _ in range(4 * n_fs * n_s):
        cont = np.where(nxt == goal_state, 0.0, v[nxt_fs, nxt])
        qv = rew + gamma * cont
        qv[:, goal_state, :] = 0.0
        new_v = qv.max(axis=2)
        if np.max(np.abs(new_v - v)) < 1e-12:
            v = new_v
            break
        v = new_v
    qv = rew + gamma * np.where(nxt == goal_state, 0.0, v[nxt_fs, nxt])
    qv[:, goal_state, :] = 0.0
    policy = np.argmax(qv, axis=2).astype(np.int64)
    option = evaluate_option_models(env, policy, subgoal, gamma, safety)
    return replace(option, q=qv)


def evaluate_option_models(env: EnvironmentMdp, policy: np.ndarray,
                           subgoal: str, gamma: float = 1.0,
                           safety: SafetyAutomaton | None = None) -> LogicalOption:
    """Exact policy evaluation on the deterministic chain induced by the
    policy.  Walks each start to the subgoal (or to a cycle) and records the
    discounted reward, step count, discount mass, and terminal safety state."""
    safety = safety or trivial_safety_automaton(env.safety_costs)
    states = env.states
    index = env.state_index()
    goal_state = index[env.grid.subgoals[subgoal]]
    n_fs = len(safety.states)
    n_s = len(states)
    if policy.ndim == 1:
        policy = np.tile(policy, (n_fs, 1))
    if policy.shape != (n_fs, n_s):
        raise ValueError(f"policy shape {policy.shape} does not match "
                         f"({n_fs}, {n_s})")
    fs_index = {name: i for i, name in enumerate(safety.states)}

    reward = np.full((n_fs, n_s), NONTERMINATING)
    mass = np.zeros((n_fs, n_s))
    steps = np.full((n_fs, n_s), -1, dtype=np.int64)
    terminal_fs = np.full((n_fs, n_s), -1, dtype=np.int64)

    for fs0 in range(n_fs):
        for s0 in range(n_s):
            if s0 == goal_state:
                reward[fs0, s0] = 0.0
                mass[fs0, s0] = 1.0
                steps[fs0, s0] = 0
                terminal_fs[fs0, s0] = fs0
                continue
            fs, s = fs0, s0
            total = 0.0
            discount = 1.0
            seen = {(fs, s)}
            k = 0
            while True:
                a = int(policy[fs, s])
                cell = states[s]
                nc = env.step(cell, a)
                _, safety_true = env.label(nc)
                total += discount * (env.step_reward
                                     + safety.cost(safety.states[fs], safety_true))
                discount *= gamma
                fs = fs_index[safety.step(safety.states[fs], safety_true, {})]
                s = index[nc]
                k += 1
                if s == goal_state:
                    reward[fs0, s0] = total
                    mass[fs0, s0] = discount
                    steps[fs0, s0] = k
                    terminal_fs[fs0, s0] = fs
                    break
                if (fs, s) in seen:
                    break  # cycle: sentinel values stand
                seen.add((fs, s))

    return LogicalOption(subgoal=subgoal, goal_state=goal_state, policy=policy,
                         reward=reward, mass=mass, steps=steps,
                         terminal_fs=terminal_fs)


def verify_option(env: EnvironmentMdp, option: LogicalOption) -> list:
    """Cells (paired with the safety state index) from which the option's
    policy fails to reach its subgoal.  Empty means the option always
    terminates, the premise behind optimal meta-planning."""
    states = env.states
    failures = []
    for fs in range(option.n_safety_states):
        for s, cell in enumerate(states):
            if option.steps[fs, s] < 0:
                failures.append((fs, cell))
    return failures


def train_all_options(env: EnvironmentMdp,
                      config: OptionTrainConfig | None = None,
                      safety: SafetyAutomaton | None = None,
                      method: str = "qlearning") -> dict:
    """One option per subgoal on the map, keyed by subgoal name.  Each option
    gets an independent seed stream derived from the base seed."""
    config = config or OptionTrainConfig()
    out = {}
    for i, name in enumerate(sorted(env.grid.subgoals)):
        if method == "qlearning":
            cfg = replace(config, seed=config.seed + i)
            out[name] = train_option(env, name, cfg, safety=safety)
        elif method == "dp":
            out[name] = optimal_option(env, name, config.gamma, safety=safety)
        else:
            raise ValueError(f"unknown training method {method!r}")
    return out


# ---------------------------------------------------------------------------
# Bundle serialization
# ---------------------------------------------------------------------------

def options_to_json(options: dict) -> dict:
    doc = {"kind": "options", "subgoals": {}}
    for name, opt in sorted(options.items()):
        entry = {
            "goal_state": int(opt.goal_state),
            "policy": opt.policy.tolist(),
            "reward": [[None if not np.isfinite(x) else x for x in row]
                       for row in opt.reward],
            "mass": opt.mass.tolist(),
            "steps": opt.steps.tolist(),
            "terminal_fs": opt.terminal_fs.tolist(),
        }
        if opt.config is not None:
            entry["config"] = {
                "episodes": opt.config.episodes,
                "max_steps": opt.config.max_steps,
                "alpha": opt.config.alpha,
                "epsilon": opt.config.epsilon,
                "epsilon_final": opt.config.epsilon_final,
                "gamma": opt.config.gamma,
                "seed": opt.config.seed,
            }
        doc["subgoals"][name] = entry
    return doc


def options_from_json(doc: dict) -> dict:
    if doc.get("kind") != "options":
        raise ValueError("not an option bundle")
    out = {}
    for name, entry in doc["subgoals"].items():
        reward = np.array([[NONTERMINATING if x is None else x for x in row]
                           for row in entry["reward"]])
        cfg = None
        if "config" in entry:
            cfg = OptionTrainConfig(**entry["config"])
        out[name] = LogicalOption(
            subgoal=name,
            goal_state=int(entry["goal_state"]),
            policy=np.array(entry["policy"], dtype=np.int64),
            reward=reward,
            mass=np.array(entry["mass"]),
            steps=np.array(entry["steps"], dtype=np.int64),
            terminal_fs=np.array(entry["terminal_fs"], dtype=np.int64),
            config=cfg)
    return out


def save_options(options: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(options_to_json(options), fh, indent=1)


def load_options(path) -> dict:
    with open(path) as fh:
        return options_from_json(json.load(fh))
