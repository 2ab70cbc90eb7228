"""Meta-policy computation over logical options.

Logical value iteration sweeps a Bellman backup over automaton states and
environment states where the actions are whole options: executing option o
from (f, s) earns the option's modeled reward, lands on o's subgoal cell,
and steps the automaton with that cell's label plus the event assignment.
The general variant threads a safety-automaton state through the backup so
path-dependent safety costs are planned over, not just summed.

Also here: the option-level Q-learning planner that needs only sampled
automaton transitions, the greedy one-step baseline, and flat value
iteration over primitive actions on the full product, which serves as the
optimality oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .automata import Fsa, SafetyAutomaton, trivial_safety_automaton
from .gridworld import ACTIONS, EnvironmentMdp, event_distribution, sample_events

NEG_INF = -np.inf


@dataclass(frozen=True)
class PlannerConfig:
    max_sweeps: int = 1000
    tol: float = 1e-9
    gamma: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class EventModel:
    """Event propositions, either frozen to one assignment or independent
    Bernoulli draws.  ``outcomes`` enumerates assignments with weights for
    planning; ``sample`` draws one assignment for a rollout episode."""
    probs: dict = field(default_factory=dict)
    fixed: dict | None = None

    @classmethod
    def fixed_assignment(cls, assignment: dict) -> "EventModel":
        return cls(probs={}, fixed=dict(assignment))

    @classmethod
    def bernoulli(cls, probs: dict) -> "EventModel":
        return cls(probs=dict(probs))

    def outcomes(self):
        if self.fixed is not None:
            return [(dict(self.fixed), 1.0)]
        return event_distribution(self.probs)

    def sample(self, rng: np.random.Generator) -> dict:
        if self.fixed is not None:
            return dict(self.fixed)
        return sample_events(self.probs, rng)


@dataclass(frozen=True)
class MetaPolicy:
    """Q(f, s, o), V(f, s) and the greedy option choice mu(f, s).  In the
    general formulation the state axis is the flattened (f_s, s) product and
    ``n_safety_states`` records the factorization."""
    fsa_states: tuple
    option_names: tuple
    q: np.ndarray   # (n_f, n_state, n_o)
    v: np.ndarray   # (n_f, n_state)
    mu: np.ndarray  # (n_f, n_state) int, -1 where no option is viable
    sweeps: int
    residual: float
    n_safety_states: int = 1

    def option_at(self, f_index: int, state_index: int,
                  fs_index: int = 0) -> int | None:
        flat = fs_index * (self.q.shape[1] // self.n_safety_states) + state_index \
            if self.n_safety_states > 1 else state_index
        o = int(self.mu[f_index, flat])
        return None if o < 0 else o


def _fsa_successors(fsa: Fsa, option_names, event_outcomes):
    """table[f_index][o_index] = list of (f'_index, weight) after option o
    terminates on its subgoal cell, marginalized over event outcomes."""
    f_index = {f: i for i, f in enumerate(fsa.states)}
    table = []
    for f in fsa.states:
        row = []
        for name in option_names:
            buckets = {}
            for events, w in event_outcomes:
                f2 = fsa.step(f, frozenset([name]), events)
                buckets[f2] = buckets.get(f2, 0.0) + w
            row.append([(f_index[f2], w) for f2, w in sorted(buckets.items())])
        table.append(row)
    return table


def _greedy_tables(q: np.ndarray):
    v = q.max(axis=2)
    mu = q.argmax(axis=2).astype(np.int64)
    mu[~np.isfinite(v)] = -1
    return v, mu


def logical_value_iteration(fsa: Fsa, options: dict, env: EnvironmentMdp,
                            events: EventModel,
                            config: PlannerConfig | None = None,
                            reward_weights: dict | None = None) -> MetaPolicy:
    """Option-level value iteration on (f, s) with the simple one-state
    safety treatment (safety costs inside the option rewards).

    Options that never terminate from a state, and every option evaluated at
    its own subgoal cell, enter the backup as -inf so the max ignores them;
    an all -inf row marks (f, s) as unsatisfiable from there.
    """
    config = config or PlannerConfig()
    option_names = tuple(sorted(options))
    n_f, n_s, n_o = len(fsa.states), len(env.states), len(option_names)
    goal_f = fsa.states.index(fsa.goal)
    succ = _fsa_successors(fsa, option_names, events.outcomes())
    weights = reward_weights or {}

    r_o = np.empty((n_o, n_s))
    mass = np.empty((n_o, n_s))
    goal_state = np.empty(n_o, dtype=np.int64)
    for o, name in enumerate(option_names):
        opt = options[name]
        r_o[o] = opt.reward[0]
        mass[o] = opt.mass[0]
        goal_state[o] = opt.goal_state
        r_o[o, opt.goal_state] = NEG_INF  # running o on its own cell is a no-op
        mass[o, opt.goal_state] = 0.0

    v = np.zeros((n_f, n_s))
    sweeps = 0
    residual = np.inf
    q = np.full((n_f, n_s, n_o), NEG_INF)
    for sweeps in range(1, config.max_sweeps + 1):
        for f in range(n_f):
            if f == goal_f:
                q[f] = 0.0
                continue
            for o in range(n_o):
                cont = sum(w * v[f2, goal_state[o]] for f2, w in succ[f][o])
                rf = weights.get(fsa.states[f], 1.0)
                q[f, :, o] = rf * r_o[o] + mass[o] * cont
        new_v = q.max(axis=2)
        new_v[goal_f] = 0.0
        both = np.isfinite(new_v) & np.isfinite(v)
        residual = float(np.max(np.abs(new_v[both] - v[both]))) if both.any() else 0.0
        changed_shape = not np.array_equal(np.isfinite(new_v), np.isfinite(v))
        v = new_v
        if residual < config.tol and not changed_shape and sweeps > 1:
            break
    v_out, mu = _greedy_tables(q)
    v_out[goal_f] = 0.0
    return MetaPolicy(fsa_states=tuple(fsa.states), option_names=option_names,
                      q=q, v=v_out, mu=mu, sweeps=sweeps, residual=residual)


def logical_value_iteration_general(fsa: Fsa, safety: SafetyAutomaton,
                                    options: dict, env: EnvironmentMdp,
                                    events: EventModel,
                                    config: PlannerConfig | None = None,
                                    reward_weights: dict | None = None) -> MetaPolicy:
    """Value iteration on (f, f_s, s) with options trained on the product of
    the grid and a safety automaton.  The option model supplies the terminal
    safety state for each start, which is where the safety-automaton
    transition enters the backup."""
    config = config or PlannerConfig()
    option_names = tuple(sorted(options))
    n_f, n_fs, n_s = len(fsa.states), len(safety.states), len(env.states)
    n_o = len(option_names)
    goal_f = fsa.states.index(fsa.goal)
    succ = _fsa_successors(fsa, option_names, events.outcomes())
    weights = reward_weights or {}

    v = np.zeros((n_f, n_fs, n_s))
    q = np.full((n_f, n_fs, n_s, n_o), NEG_INF)
    sweeps = 0
    residual = np.inf
    for sweeps in range(1, config.max_sweeps + 1):
        for f in range(n_f):
            if f == goal_f:
                q[f] = 0.0
                continue
            rf = weights.get(fsa.states[f], 1.0)
            for o, name in enumerate(option_names):
                opt = options[name]
                col = np.full((n_fs, n_s), NEG_INF)
                for fs in range(n_fs):
                    for s in range(n_s):
                        if s == opt.goal_state or opt.steps[fs, s] < 0:
                            continue
                        fs2 = opt.terminal_fs[fs, s]
                        cont = sum(w * v[f2, fs2, opt.goal_state]
                                   for f2, w in succ[f][o])
                        col[fs, s] = rf * opt.reward[fs, s] \
                            + opt.mass[fs, s] * cont
                q[f, :, :, o] = col
        new_v = q.max(axis=3)
        new_v[goal_f] = 0.0
        both = np.isfinite(new_v) & np.isfinite(v)
        residual = float(np.max(np.abs(new_v[both] - v[both]))) if both.any() else 0.0
        changed_shape = not np.array_equal(np.isfinite(new_v), np.isfinite(v))
        v = new_v
        if residual < config.tol and not changed_shape and sweeps > 1:
            break
    flat_q = q.reshape(n_f, n_fs * n_s, n_o)
    v_out, mu = _greedy_tables(flat_q)
    v_out[goal_f] = 0.0
    return MetaPolicy(fsa_states=tuple(fsa.states), option_names=option_names,
                      q=flat_q, v=v_out, mu=mu, sweeps=sweeps,
                      residual=residual, n_safety_states=n_fs)


# ---------------------------------------------------------------------------
# Option-level Q-learning planner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetaQlConfig:
    episodes: int = 1000
    max_options_per_episode: int = 50
    alpha: float = 1.0
    epsilon: float = 0.3
    gamma: float = 1.0
    seed: int = 0


class LofQlTrainer:
    """Episodic epsilon-greedy Q-learning over options on (f, s).

    Never reads the automaton transition function analytically: each episode
    draws an event assignment, simulates option outcomes from the models,
    and observes which automaton state results.  Kept incremental so the
    experiment harness can interleave training and evaluation.
    """

    def __init__(self, fsa: Fsa, options: dict, env: EnvironmentMdp,
                 events: EventModel, config: MetaQlConfig | None = None):
        self.fsa = fsa
        self.env = env
        self.events = events
        self.config = config or MetaQlConfig()
        self.option_names = tuple(sorted(options))
        self.options = options
        self.states = env.states
        self.goal_f = fsa.states.index(fsa.goal)
        self.rng = np.random.default_rng(self.config.seed)
        n_f, n_s, n_o = len(fsa.states), len(self.states), len(self.option_names)
        self.q = np.zeros((n_f, n_s, n_o))
        self.viable = np.ones((n_s, n_o), dtype=bool)
        for o, name in enumerate(self.option_names):
            opt = options[name]
            self.viable[:, o] = opt.steps[0] >= 0
            self.viable[opt.goal_state, o] = False
        self.episodes_run = 0
        self.env_steps = 0

    def _value(self, f: int, s: int) -> float:
        if f == self.goal_f:
            return 0.0
        viable = self.viable[s]
        if not viable.any():
            return NEG_INF
        return float(self.q[f, s, viable].max())

    def run_episodes(self, n: int) -> None:
        cfg = self.config
        for _ in range(n):
            events = self.events.sample(self.rng)
            f = int(self.rng.integers(len(self.fsa.states)))
            if f == self.goal_f:
                f = 0
            s = int(self.rng.integers(len(self.states)))
            for _ in range(cfg.max_options_per_episode):
                viable = np.flatnonzero(self.viable[s])
                if viable.size == 0:
                    break
                if self.rng.random() < cfg.epsilon:
                    o = int(viable[self.rng.integers(viable.size)])
                else:
                    masked = np.full(len(self.option_names), NEG_INF)
                    masked[viable] = self.q[f, s, viable]
                    o = int(np.argmax(masked))
                opt = self.options[self.option_names[o]]
                r = float(opt.reward[0, s])
                k = int(opt.steps[0, s])
                s2 = opt.goal_state
                f2 = self.fsa.states.index(
                    self.fsa.step(self.fsa.states[f],
                                  frozenset([opt.subgoal]), events))
                target = r + (cfg.gamma ** k) * max(self._value(f2, s2), NEG_INF)
                if not np.isfinite(target):
                    target = r
                self.q[f, s, o] += cfg.alpha * (target - self.q[f, s, o])
                self.env_steps += k
                f, s = f2, s2
                if f == self.goal_f:
                    break
            self.episodes_run += 1

    def metapolicy(self) -> MetaPolicy:
        q = self.q.copy()
        for o in range(len(self.option_names)):
            q[:, ~self.viable[:, o], o] = NEG_INF
        q[self.goal_f] = 0.0
        v, mu = _greedy_tables(q)
        v[self.goal_f] = 0.0
        return MetaPolicy(fsa_states=tuple(self.fsa.states),
                          option_names=self.option_names, q=q, v=v, mu=mu,
                          sweeps=self.episodes_run, residual=float("nan"))


def lof_q_learning(fsa: Fsa, options: dict, env: EnvironmentMdp,
                   events: EventModel,
                   config: MetaQlConfig | None = None) -> MetaPolicy:
    trainer = LofQlTrainer(fsa, options, env, events, config)
    trainer.run_episodes(trainer.config.episodes)
    return trainer.metapolicy()


# ---------------------------------------------------------------------------
# Greedy baseline
# ---------------------------------------------------------------------------

def greedy_metapolicy(fsa: Fsa, options: dict, f: str, state_index: int,
                      events: dict) -> str | None:
    """Pick the cheapest option whose subgoal advances the automaton from f
    right now, with no lookahead.  Returns the option name, or None when no
    single subgoal can advance the automaton under these events."""
    best_name = None
    best_reward = NEG_INF
    for name in sorted(options):
        opt = options[name]
        if fsa.step(f, frozenset([name]), events) == f:
            continue
        if state_index == opt.goal_state or opt.steps[0, state_index] < 0:
            continue
        r = float(opt.reward[0, state_index])
        if r > best_reward:
            best_reward = r
            best_name = name
    return best_name


# ---------------------------------------------------------------------------
# Flat product value iteration (the optimality oracle)
# ---------------------------------------------------------------------------

def hmdp_value_iteration(fsa: Fsa, env: EnvironmentMdp, events: dict,
                         gamma: float = 1.0, tol: float = 1e-12,
                         max_sweeps: int = 100_000,
                         safety: SafetyAutomaton | None = None):
    """Exact value iteration over primitive actions on the product of the
    task automaton, a safety automaton, and the grid, under one fixed event
    assignment.  Returns (V, pi) with V indexed [f, f_s, s]; the safety axis
    has length 1 for the default trivial automaton."""
    safety = safety or trivial_safety_automaton(env.safety_costs)
    states = env.states
    index = env.state_index()
    n_f, n_fs, n_s = len(fsa.states), len(safety.states), len(states)
    goal_f = fsa.states.index(fsa.goal)
    f_index = {f: i for i, f in enumerate(fsa.states)}
    fs_index = {f: i for i, f in enumerate(safety.states)}

    nxt_s = np.zeros((n_s, len(ACTIONS)), dtype=np.int64)
    nxt_fs = np.zeros((n_fs, n_s, len(ACTIONS)), dtype=np.int64)
    nxt_f = np.zeros((n_f, n_s, len(ACTIONS)), dtype=np.int64)
    rew = np.zeros((n_fs, n_s, len(ACTIONS)))
    for s, cell in enumerate(states):
        for a in ACTIONS:
            nc = env.step(cell, a)
            subgoals, safety_true = env.label(nc)
            nxt_s[s, a] = index[nc]
            for fs, fs_name in enumerate(safety.states):
                nxt_fs[fs, s, a] = fs_index[safety.step(fs_name, safety_true, events)]
                rew[fs, s, a] = env.step_reward + safety.cost(fs_name, safety_true)
            for f, f_name in enumerate(fsa.states):
                nxt_f[f, s, a] = f_index[fsa.step(f_name, subgoals, events)]

    v = np.zeros((n_f, n_fs, n_s))
    for _ in range(max_sweeps):
        qv = np.empty((n_f, n_fs, n_s, len(ACTIONS)))
        for f in range(n_f):
            if f == goal_f:
                qv[f] = 0.0
                continue
            for fs in range(n_fs):
                qv[f, fs] = rew[fs] + gamma * v[nxt_f[f, :, :], nxt_fs[fs, :, :],
                                                nxt_s]
        new_v = qv.max(axis=3)
        new_v[goal_f] = 0.0
        if np.max(np.abs(new_v - v)) < tol:
            v = new_v
            break
        v = new_v
    pi = qv.argmax(axis=3).astype(np.int64)
    return v, pi
