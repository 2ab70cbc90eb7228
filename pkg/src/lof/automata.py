"""Task automata: the liveness FSA, the safety automaton of the general
formulation, proposition partitioning, guard evaluation and validation.

Guards are Boolean formula ASTs (a restriction of the LTL AST) over the
subgoal and event propositions.  Transition semantics are deterministic with
an implicit self-loop on any assignment no explicit guard matches, and the
goal state is made absorbing at construction time.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import ltl
from .ltl import Formula, Prop, TRUE, parse_ltl, format_formula


class AutomatonError(Exception):
    pass


class NondeterminismError(AutomatonError):
    pass


@dataclass(frozen=True)
class PropositionPartition:
    """Disjoint split of the propositions into subgoals, safety propositions
    and event propositions."""
    subgoals: tuple
    safety: tuple
    events: tuple

    def __post_init__(self):
        groups = [set(self.subgoals), set(self.safety), set(self.events)]
        for i in range(3):
            for j in range(i + 1, 3):
                overlap = groups[i] & groups[j]
                if overlap:
                    raise AutomatonError(
                        f"propositions {sorted(overlap)} appear in more than "
                        "one partition class")

    @property
    def all_props(self):
        return set(self.subgoals) | set(self.safety) | set(self.events)

    def legal_assignments(self):
        """All (subgoals_true, events) pairs with at most one subgoal true."""
        subgoal_choices = [frozenset()] + [frozenset([p]) for p in self.subgoals]
        for sg in subgoal_choices:
            for bits in itertools.product([False, True], repeat=len(self.events)):
                yield sg, dict(zip(self.events, bits))


def parse_guard(text: str, props: Iterable[str]) -> Formula:
    g = parse_ltl(text, props)
    if not ltl._is_propositional(g):
        raise AutomatonError(f"guard '{text}' contains temporal operators")
    return g


def eval_guard(g: Formula, subgoals_true: Iterable[str],
               events: Mapping[str, bool]) -> bool:
    """Evaluate a guard under a (<=1 true) subgoal set and an event truth map.
    Propositions not mentioned in either are false."""
    subgoals_true = set(subgoals_true)
    assignment = dict(events)
    for p in subgoals_true:
        assignment[p] = True
    return _eval(g, assignment)


def _eval(g: Formula, a: Mapping[str, bool]) -> bool:
    if isinstance(g, ltl.TrueF):
        return True
    if isinstance(g, ltl.FalseF):
        return False
    if isinstance(g, Prop):
        return a.get(g.name, False)
    if isinstance(g, ltl.Not):
        return not _eval(g.child, a)
    if isinstance(g, ltl.And):
        return all(_eval(c, a) for c in g.children)
    if isinstance(g, ltl.Or):
        return any(_eval(c, a) for c in g.children)
    raise AutomatonError(f"non-propositional guard node {g}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    guard: Formula


@dataclass(frozen=True)
class Fsa:
    """Deterministic finite-state automaton for a liveness property.

    One initial state, one absorbing goal state, a positive reward per state,
    and guarded edges over subgoal and event propositions.
    """
    states: tuple
    edges: tuple
    initial: str
    goal: str
    reward: dict = field(default_factory=dict)

    @staticmethod
    def make(states, edges, initial, goal, reward=None) -> "Fsa":
        states = tuple(states)
        reward = dict(reward) if reward else {f: 1.0 for f in states}
        for f in states:
            reward.setdefault(f, 1.0)
        # absorbing goal: outgoing edges from the goal are dropped
        edges = tuple(e for e in edges if e.src != goal)
        return Fsa(states=states, edges=edges, initial=initial, goal=goal,
                   reward=reward)

    def out_edges(self, f: str):
        return [e for e in self.edges if e.src == f]

    def step(self, f: str, subgoals_true, events) -> str:
        if f not in self.states:
            raise AutomatonError(f"unknown FSA state {f!r}")
        successors = {e.dst for e in self.out_edges(f)
                      if eval_guard(e.guard, subgoals_true, events)}
        if len(successors) > 1:
            raise NondeterminismError(
                f"state {f!r} has {len(successors)} satisfied guards for "
                f"subgoals={sorted(subgoals_true)} events={events}")
        if successors:
            return successors.pop()
        return f


def validate_fsa(fsa: Fsa, partition: PropositionPartition):
    """Check all structural invariants; returns a list of violation strings
    (empty = valid)."""
    violations = []
    if fsa.initial not in fsa.states:
        violations.append(f"initial state {fsa.initial!r} not in states")
    if fsa.goal not in fsa.states:
        violations.append(f"goal state {fsa.goal!r} not in states")
    guard_props = set(partition.subgoals) | set(partition.events)
    for e in fsa.edges:
        if e.src not in fsa.states or e.dst not in fsa.states:
            violations.append(f"edge {e.src}->{e.dst} references unknown state")
        bad = ltl.propositions(e.guard) - guard_props
        if bad:
            violations.append(
                f"edge {e.src}->{e.dst} guard uses propositions {sorted(bad)} "
                "outside the subgoal/event classes")
    for f, r in fsa.reward.items():
        if not r > 0:
            violations.append(f"state {f!r} has non-positive reward {r}")
    if any(e.src == fsa.goal for e in fsa.edges):
        violations.append("goal state has outgoing edges (must be absorbing)")
    # determinism over every legal assignment
    for f in fsa.states:
        for sg, ev in partition.legal_assignments():
            try:
                fsa.step(f, sg, ev)
            except NondeterminismError as exc:
                violations.append(str(exc))
    # goal reachable from every state using subgoals alone (events false)
    no_events = {p: False for p in partition.events}
    reach_goal = {fsa.goal}
    changed = True
    while changed:
        changed = False
        for f in fsa.states:
            if f in reach_goal:
                continue
            for e in fsa.out_edges(f):
                if e.dst not in reach_goal:
                    continue
                if any(eval_guard(e.guard, sg, no_events)
                       for sg in [frozenset()] + [frozenset([p])
                                                  for p in partition.subgoals]):
                    reach_goal.add(f)
                    changed = True
                    break
    for f in fsa.states:
        if f not in reach_goal:
            violations.append(
                f"goal not reachable from state {f!r} using subgoals alone")
    return violations


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def fsa_to_json(fsa: Fsa) -> dict:
    return {
        "states": list(fsa.states),
        "initial": fsa.initial,
        "goal": fsa.goal,
        "reward": {f: fsa.reward[f] for f in fsa.states},
        "edges": [{"from": e.src, "to": e.dst,
                   "guard": format_formula(e.guard)} for e in fsa.edges],
    }


def fsa_from_json(doc: dict, partition: PropositionPartition | None = None) -> Fsa:
    props = None
    if partition is not None:
        props = set(partition.subgoals) | set(partition.events)
    edges = [Edge(e["from"], e["to"], parse_guard(e["guard"], props))
             for e in doc["edges"]]
    return Fsa.make(states=doc["states"], edges=edges, initial=doc["initial"],
                    goal=doc["goal"], reward=doc.get("reward"))


def save_fsa(fsa: Fsa, path) -> None:
    with open(path, "w") as fh:
        json.dump(fsa_to_json(fsa), fh, indent=2)


def load_fsa(path, partition: PropositionPartition | None = None) -> Fsa:
    with open(path) as fh:
        return fsa_from_json(json.load(fh), partition)


# ---------------------------------------------------------------------------
# Safety automaton (general formulation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SafetyAutomaton:
    """Safety property automaton over safety and event propositions.

    Every state is accepting; an assignment matched by no explicit guard is a
    violation and transitions to the violation sink at the configured cost.
    Costs are additive over matching (state, proposition-subset) entries.
    """
    states: tuple
    edges: tuple
    initial: str
    costs: tuple  # of (state, frozenset of props, cost)
    violation_state: str | None = None
    violation_cost: float = 0.0

    def step(self, f_s: str, safety_true, events) -> str:
        successors = {e.dst for e in self.edges if e.src == f_s
                      and eval_guard(e.guard, safety_true, events)}
        if len(successors) > 1:
            raise NondeterminismError(
                f"safety state {f_s!r} has multiple satisfied guards")
        if successors:
            return successors.pop()
        if self.violation_state is not None:
            return self.violation_state
        return f_s

    def cost(self, f_s: str, safety_true) -> float:
        active = set(safety_true)
        total = 0.0
        for state, props, c in self.costs:
            if state == f_s and set(props) <= active:
                total += c
        if self.violation_state is not None and f_s == self.violation_state:
            pass  # sink cost is charged on entry, by the caller
        return total

    def is_violation(self, f_s: str, safety_true, events) -> bool:
        return self.violation_state is not None and not any(
            eval_guard(e.guard, safety_true, events)
            for e in self.edges if e.src == f_s)


def trivial_safety_automaton(safety_costs: Mapping[str, float]) -> SafetyAutomaton:
    """One state, self-loop on everything, per-proposition costs.  This
    recovers the simple formulation where the safety automaton state can be
    ignored."""
    costs = tuple(("s0", frozenset([p]), c) for p, c in sorted(safety_costs.items())
                  if c != 0.0)
    return SafetyAutomaton(states=("s0",),
                           edges=(Edge("s0", "s0", TRUE),),
                           initial="s0", costs=costs)


# ---------------------------------------------------------------------------
# Isomorphism (deterministic automata, guard equivalence by truth table)
# ---------------------------------------------------------------------------

def fsa_isomorphic(left: Fsa, right: Fsa,
                   partition: PropositionPartition) -> bool:
    """Whether two deterministic FSAs are isomorphic modulo state names, with
    guard equivalence checked behaviorally over every legal assignment."""
    if len(left.states) != len(right.states):
        return False
    assignments = list(partition.legal_assignments())
    mapping = {left.initial: right.initial}
    queue = [left.initial]
    while queue:
        fl = queue.pop()
        fr = mapping[fl]
        for sg, ev in assignments:
            nl = left.step(fl, sg, ev)
            nr = right.step(fr, sg, ev)
            if nl in mapping:
                if mapping[nl] != nr:
                    return False
            else:
                if nr in mapping.values():
                    return False
                mapping[nl] = nr
                queue.append(nl)
    if len(mapping) != len(left.states):
        return False  # unreachable states cannot be matched
    return mapping[left.goal] == right.goal


# ---------------------------------------------------------------------------
# The four delivery-domain task automata, transcribed edge by edge
# ---------------------------------------------------------------------------

DELIVERY_PARTITION = PropositionPartition(
    subgoals=("a", "b", "c", "h"), safety=("o", "e"), events=("can",))


def _edges(props, spec):
    return [Edge(src, dst, parse_guard(guard, props)) for src, guard, dst in spec]


def hand_coded_task_fsas() -> dict:
    """The four delivery tasks as hand-coded automata (sequential, if, or,
    composite), used both as translation oracles and as planner inputs."""
    props = set(DELIVERY_PARTITION.subgoals) | set(DELIVERY_PARTITION.events)
    sequential = Fsa.make(
        states=("init", "s1", "s2", "s3", "goal"),
        edges=_edges(props, [
            ("init", "a", "s1"),
            ("s1", "b", "s2"),
            ("s2", "c", "s3"),
            ("s3", "h", "goal"),
        ]),
        initial="init", goal="goal")
    if_task = Fsa.make(
        states=("init", "s1", "s2", "s3", "goal"),
        edges=_edges(props, [
            ("init", "a & !can", "s1"),
            ("init", "c | (can & !a)", "s3"),
            ("init", "a & can", "goal"),
            ("s1", "c & !can", "s2"),
            ("s1", "can", "goal"),
            ("s2", "a | can", "goal"),
            ("s3", "a", "goal"),
        ]),
        initial="init", goal="goal")
    or_task = Fsa.make(
        states=("init", "s1", "goal"),
        edges=_edges(props, [
            ("init", "a | b", "s1"),
            ("s1", "c", "goal"),
        ]),
        initial="init", goal="goal")
    composite = Fsa.make(
        states=("init", "s1", "s2", "s3", "s4", "s5", "goal"),
        edges=_edges(props, [
            ("init", "(a | b) & !can", "s1"),
            ("init", "can & !a & !b", "s4"),
            ("init", "(a | b) & can", "s5"),
            ("s1", "h & !can", "s2"),
            ("s1", "c | (can & !h)", "s5"),
            ("s1", "h & can", "goal"),
            ("s2", "c & !can", "s3"),
            ("s2", "can", "goal"),
            ("s3", "h | can", "goal"),
            ("s4", "a | b", "s5"),
            ("s5", "h", "goal"),
        ]),
        initial="init", goal="goal")
    return {"sequential": sequential, "if": if_task, "or": or_task,
            "composite": composite}
