"""Execution of hierarchical policies on the product process, satisfaction
checking, and return bookkeeping.

A rollout freezes one event assignment for the whole episode, then runs the
policy: option-based policies commit to an option until its subgoal is
reached (re-selection happens only there), the reward-machine baseline picks
a primitive action every step.  The task automaton and the safety automaton
are stepped on every primitive transition using the labels of the cell being
entered, in the order environment step, labeling, automaton step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .automata import Fsa, SafetyAutomaton, trivial_safety_automaton
from .baselines import FlatOptionsPolicy, QrmModel
from .gridworld import EnvironmentMdp
from .planner import EventModel, MetaPolicy, greedy_metapolicy

GOAL_REACHED = "goal-reached"
STEP_CAP = "step-cap"
STUCK = "stuck"


@dataclass(frozen=True)
class TraceStep:
    t: int
    f: str
    f_s: str
    cell: tuple
    action: int
    reward: float
    option: str | None
    subgoals: frozenset
    safety_true: frozenset


@dataclass(frozen=True)
class Trace:
    steps: tuple
    terminal: str
    events: dict
    final_f: str
    final_cell: tuple

    @property
    def raw_return(self) -> float:
        return sum(st.reward for st in self.steps)

    def fsa_path(self) -> list:
        path = []
        for st in self.steps:
            if not path or path[-1] != st.f:
                path.append(st.f)
        return path


def _resolve_events(events, seed):
    if isinstance(events, EventModel):
        rng = np.random.default_rng(seed)
        return events.sample(rng)
    return dict(events)


def rollout(kind: str, policy, fsa: Fsa, env: EnvironmentMdp, options: dict,
            events, cap: int = 400, seed: int = 0,
            safety: SafetyAutomaton | None = None) -> Trace:
    """Run one episode.  ``kind`` is one of lof-vi, lof-ql, greedy, flat,
    qrm; ``policy`` is the matching artifact (MetaPolicy for the first two,
    None for greedy, FlatOptionsPolicy, QrmModel).  ``events`` may be a
    concrete assignment or an EventModel sampled once with ``seed``."""
    kind = kind.lower()
    safety = safety or trivial_safety_automaton(env.safety_costs)
    events = _resolve_events(events, seed)
    index = env.state_index()
    states = env.states
    fs_index = {name: i for i, name in enumerate(safety.states)}
    f_index = {name: i for i, name in enumerate(fsa.states)}

    f = fsa.initial
    f_s = safety.initial
    cell = env.start
    t = 0
    steps = []

    def primitive(action, option_name):
        nonlocal f, f_s, cell, t
        nc = env.step(cell, action)
        subgoals, safety_true = env.label(nc)
        r = env.step_reward + safety.cost(f_s, safety_true)
        steps.append(TraceStep(t=t, f=f, f_s=f_s, cell=cell, action=action,
                               reward=r, option=option_name,
                               subgoals=subgoals, safety_true=safety_true))
        f_s = safety.step(f_s, safety_true, events)
        f = fsa.step(f, subgoals, events)
        cell = nc
        t += 1

    from .gridworld import STAY

    stuck_seen = False
    while t < cap:
        if f == fsa.goal:
            break
        if kind == "qrm":
            a = policy.action(f_index[f], index[cell])
            primitive(a, None)
            continue

        # pick an option
        if kind in ("lof-vi", "lof-ql"):
            o = policy.option_at(f_index[f], index[cell], fs_index[f_s])
            name = None if o is None else policy.option_names[o]
        elif kind == "greedy":
            name = greedy_metapolicy(fsa, options, f, index[cell], events)
        elif kind == "flat":
            o = policy.option_at(index[cell])
            name = None if o is None else policy.option_names[o]
        else:
            raise ValueError(f"unknown policy kind {kind!r}")
        if name is None or cell == states[options[name].goal_state]:
            # no viable option (or only a no-op one): keep paying the step
            # cost in place; the automaton can still drift on events
            stuck_seen = True
            primitive(STAY, None)
            continue

        opt = options[name]
        goal_cell = states[opt.goal_state]
        while t < cap:
            fs_row = fs_index[f_s] if opt.policy.shape[0] > 1 else 0
            a = int(opt.policy[fs_row, index[cell]])
            primitive(a, name)
            if cell == goal_cell or f == fsa.goal:
                break
    if f == fsa.goal:
        terminal = GOAL_REACHED
    elif stuck_seen:
        terminal = STUCK
    else:
        terminal = STEP_CAP

    return Trace(steps=tuple(steps), terminal=terminal, events=events,
                 final_f=f, final_cell=cell)


def check_satisfaction(trace: Trace, fsa: Fsa) -> bool:
    """True iff the episode reached the automaton goal, cross-checked by
    replaying the recorded labels through a fresh automaton walk."""
    f = fsa.initial
    for st in trace.steps:
        if st.f != f:
            raise RuntimeError(f"trace inconsistency at t={st.t}: recorded "
                               f"state {st.f!r}, replay gives {f!r}")
        f = fsa.step(f, st.subgoals, trace.events)
    satisfied = f == fsa.goal
    if satisfied != (trace.terminal == GOAL_REACHED):
        raise RuntimeError("terminal status disagrees with label replay")
    return satisfied


@dataclass(frozen=True)
class EpisodeReturn:
    raw: float
    normalized: float


def normalize_return(raw: float, bounds: tuple) -> EpisodeReturn:
    """Affine map of the raw return onto [0, 1] given (min, max) bounds."""
    lo, hi = bounds
    if hi <= lo:
        raise ValueError("degenerate task bounds: max must exceed min")
    z = (raw - lo) / (hi - lo)
    return EpisodeReturn(raw=raw, normalized=float(min(1.0, max(0.0, z))))


def task_bounds(optimal_value: float, cap: int, env: EnvironmentMdp) -> tuple:
    """(min, max) achievable returns: the optimum from the flat oracle and
    the worst case of paying every step's cost plus the worst safety cost."""
    worst_step = env.step_reward + min([0.0] + list(env.safety_costs.values()))
    return (cap * worst_step, optimal_value)


def trace_to_jsonl(trace: Trace, path) -> None:
    with open(path, "w") as fh:
        for st in trace.steps:
            fh.write(json.dumps({
                "t": st.t, "f": st.f, "f_s": st.f_s,
                "cell": list(st.cell), "action": st.action,
                "reward": st.reward, "option": st.option,
                "subgoals": sorted(st.subgoals),
                "safety": sorted(st.safety_true),
            }) + "\n")
        fh.write(json.dumps({"terminal": trace.terminal,
                             "events": trace.events,
                             "raw_return": trace.raw_return}) + "\n")
