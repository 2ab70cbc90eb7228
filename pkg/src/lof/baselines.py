"""Non-hierarchical baselines: tabular reward-machine Q-learning (one flat
Q table per automaton state, updated counterfactually for every automaton
state on each transition) and a flat option-level learner that never sees the
automaton at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import Fsa
from .gridworld import ACTIONS, EnvironmentMdp
from .planner import NEG_INF, EventModel


@dataclass(frozen=True)
class QrmConfig:
    episodes: int = 1600
    max_steps: int = 100
    alpha: float = 1.0
    epsilon: float = 0.15
    gamma: float = 0.9
    goal_reward: float = 1.0
    seed: int = 0
    uniform_starts: bool = True


@dataclass(frozen=True)
class QrmModel:
    """Per-automaton-state Q tables; the goal state's table is all zero."""
    fsa_states: tuple
    q: np.ndarray  # (n_f, n_s, n_actions)
    goal_f: int

    def action(self, f_index: int, state_index: int) -> int:
        return int(np.argmax(self.q[f_index, state_index]))


class QrmTrainer:
    """Counterfactual Q-learning: each environment transition updates the
    table of every non-goal automaton state, using where that state would
    have gone under the observed label.  The training reward is sparse, paid
    only on a transition into the goal state, so a discount below one is
    what makes shorter routes preferable."""

    def __init__(self, fsa: Fsa, env: EnvironmentMdp, events: EventModel,
                 config: QrmConfig | None = None):
        self.fsa = fsa
        self.env = env
        self.events = events
        self.config = config or QrmConfig()
        self.states = env.states
        self.index = env.state_index()
        self.goal_f = fsa.states.index(fsa.goal)
        self.f_index = {f: i for i, f in enumerate(fsa.states)}
        self.q = np.zeros((len(fsa.states), len(self.states), len(ACTIONS)))
        self.rng = np.random.default_rng(self.config.seed)
        self.episodes_run = 0
        self.env_steps = 0
        self.updates = 0

    def run_episodes(self, n: int) -> None:
        cfg = self.config
        non_goal = [i for i in range(len(self.fsa.states)) if i != self.goal_f]
        start = self.index[self.env.start]
        for _ in range(n):
            events = self.events.sample(self.rng)
            if cfg.uniform_starts:
                s = int(self.rng.integers(len(self.states)))
            else:
                s = start
            f = self.f_index[self.fsa.initial]
            for _ in range(cfg.max_steps):
                if self.rng.random() < cfg.epsilon:
                    a = int(self.rng.integers(len(ACTIONS)))
                else:
                    a = int(np.argmax(self.q[f, s]))
                cell = self.states[s]
                nc = self.env.step(cell, a)
                subgoals, _ = self.env.label(nc)
                s2 = self.index[nc]
                for u in non_goal:
                    u2 = self.f_index[self.fsa.step(self.fsa.states[u],
                                                    subgoals, events)]
                    if u2 == self.goal_f:
                        target = cfg.goal_reward
                    else:
                        target = cfg.gamma * float(np.max(self.q[u2, s2]))
                    self.q[u, s, a] += cfg.alpha * (target - self.q[u, s, a])
                    self.updates += 1
                f = self.f_index[self.fsa.step(self.fsa.states[f],
                                               subgoals, events)]
                s = s2
                self.env_steps += 1
                if f == self.goal_f:
                    break
            self.episodes_run += 1

    def model(self) -> QrmModel:
        q = self.q.copy()
        q[self.goal_f] = 0.0
        return QrmModel(fsa_states=tuple(self.fsa.states), q=q,
                        goal_f=self.goal_f)


def train_qrm(env: EnvironmentMdp, fsa: Fsa, events: EventModel,
              config: QrmConfig | None = None) -> QrmModel:
    trainer = QrmTrainer(fsa, env, events, config)
    trainer.run_episodes(trainer.config.episodes)
    return trainer.model()


# ---------------------------------------------------------------------------
# Flat options: no automaton anywhere
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatOptionsConfig:
    episodes: int = 500
    max_options: int = 20
    alpha: float = 0.5
    epsilon: float = 0.2
    gamma: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class FlatOptionsPolicy:
    """Q over (environment state, option) only; structurally incapable of
    tracking task progress."""
    option_names: tuple
    q: np.ndarray       # (n_s, n_o)
    viable: np.ndarray  # (n_s, n_o) bool

    def option_at(self, state_index: int) -> int | None:
        viable = self.viable[state_index]
        if not viable.any():
            return None
        masked = np.full(len(self.option_names), NEG_INF)
        masked[viable] = self.q[state_index, viable]
        return int(np.argmax(masked))


def train_flat_options(env: EnvironmentMdp, options: dict,
                       config: FlatOptionsConfig | None = None) -> FlatOptionsPolicy:
    """Option-level Q-learning on the grid alone.  The reward is just each
    option's cost; with no goal signal the learner settles on cheap nearby
    subgoals, which is exactly the failure mode being measured."""
    config = config or FlatOptionsConfig()
    option_names = tuple(sorted(options))
    n_s, n_o = len(env.states), len(option_names)
    q = np.zeros((n_s, n_o))
    viable = np.ones((n_s, n_o), dtype=bool)
    for o, name in enumerate(option_names):
        opt = options[name]
        viable[:, o] = opt.steps[0] >= 0
        viable[opt.goal_state, o] = False
    rng = np.random.default_rng(config.seed)
    for _ in range(config.episodes):
        s = int(rng.integers(n_s))
        for _ in range(config.max_options):
            cand = np.flatnonzero(viable[s])
            if cand.size == 0:
                break
            if rng.random() < config.epsilon:
                o = int(cand[rng.integers(cand.size)])
            else:
                masked = np.full(n_o, NEG_INF)
                masked[cand] = q[s, cand]
                o = int(np.argmax(masked))
            opt = options[option_names[o]]
            r = float(opt.reward[0, s])
            k = int(opt.steps[0, s])
            s2 = opt.goal_state
            nxt_cand = np.flatnonzero(viable[s2])
            boot = float(np.max(q[s2, nxt_cand])) if nxt_cand.size else 0.0
            q[s, o] += config.alpha * (r + (config.gamma ** k) * boot - q[s, o])
            s = s2
    return FlatOptionsPolicy(option_names=option_names, q=q, viable=viable)
