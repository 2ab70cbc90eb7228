"""Compile a co-safe liveness formula into a deterministic FSA.

The construction progresses the formula against every legal assignment
(at most one subgoal true per step, any event combination), explores the
reachable residuals, and then minimizes the resulting automaton so that
semantically equal residuals collapse into a single state.  Accepting
residuals are those already satisfied when the trace ends; the minimized
automaton must have exactly one accepting state and it becomes the goal.

Guard formulas on the edges are recovered from the satisfying assignment
sets with Quine-McCluskey minimization, using the illegal multi-subgoal
assignments as don't-cares.
"""

from __future__ import annotations

import itertools

import sympy
from sympy.logic import SOPform

from . import ltl
from .automata import Edge, Fsa, PropositionPartition
from .ltl import Formula, format_formula


class TranslationError(Exception):
    pass


class StateExplosionError(TranslationError):
    pass


def translate_cosafe_to_fsa(formula: Formula, partition: PropositionPartition,
                            max_states: int = 10_000) -> Fsa:
    ok, where = ltl.check_liveness(formula, partition.events)
    if not ok:
        raise TranslationError(
            f"formula is not co-safe (violating node at path {list(where)})")
    bad = ltl.propositions(formula) - set(partition.subgoals) - set(partition.events)
    if bad:
        raise TranslationError(
            f"liveness formula uses non-subgoal, non-event propositions {sorted(bad)}")

    root = ltl.simplify(ltl.to_nnf(formula))
    assignments = _legal_assignments(partition)

    # explore reachable residuals
    states = {root: 0}
    order = [root]
    delta = {}  # (state index, assignment index) -> state index
    frontier = [root]
    while frontier:
        f = frontier.pop()
        src = states[f]
        for ai, assignment in enumerate(assignments):
            g = ltl.progress(f, assignment)
            if g not in states:
                if len(states) >= max_states:
                    raise StateExplosionError(
                        f"residual count exceeded cap of {max_states} states")
                states[g] = len(order)
                order.append(g)
                frontier.append(g)
            delta[(src, ai)] = states[g]
    n = len(order)
    accepting = [ltl.empty_suffix_satisfied(f) for f in order]
    if not any(accepting):
        raise TranslationError("formula is unsatisfiable within finite traces")

    # The task ends the first time an accepting residual is reached, so
    # anything the raw progression would do afterwards is irrelevant.  Making
    # accepting states absorbing here lets minimization fold them all into a
    # single goal sink.
    for i, acc in enumerate(accepting):
        if acc:
            for ai in range(len(assignments)):
                delta[(i, ai)] = i

    block = _minimize(n, len(assignments), delta, accepting)
    return _build_fsa(order, assignments, delta, accepting, block, partition)


def _legal_assignments(partition: PropositionPartition):
    out = []
    for sg, ev in partition.legal_assignments():
        a = {p: False for p in partition.subgoals}
        a.update(ev)
        for p in sg:
            a[p] = True
        out.append(a)
    return out


def _minimize(n, n_sym, delta, accepting):
    """Moore partition refinement on a complete DFA; returns state -> block id."""
    block = [1 if acc else 0 for acc in accepting]
    while True:
        signature = {}
        new_block = [0] * n
        for s in range(n):
            sig = (block[s],) + tuple(block[delta[(s, ai)]] for ai in range(n_sym))
            if sig not in signature:
                signature[sig] = len(signature)
            new_block[s] = signature[sig]
        if new_block == block:
            return block
        block = new_block


def _build_fsa(order, assignments, delta, accepting, block, partition):
    init_block = block[0]
    accepting_blocks = {block[i] for i in range(len(order)) if accepting[i]}
    if len(accepting_blocks) > 1:
        raise TranslationError(
            "liveness formula yields more than one accepting state class; "
            "the supported fragment needs a single absorbing goal")
    goal_block = accepting_blocks.pop()

    # block-level transition function (consistent by construction)
    rep = {}
    for i, b in enumerate(block):
        rep.setdefault(b, i)
    bdelta = {}
    for b, i in rep.items():
        for ai in range(len(assignments)):
            bdelta[(b, ai)] = block[delta[(i, ai)]]

    # goal must be absorbing in the supported fragment
    if any(bdelta[(goal_block, ai)] != goal_block for ai in range(len(assignments))):
        raise TranslationError("accepting state class is not absorbing")

    # reachable blocks, then drop dead blocks (cannot reach the goal)
    reachable = {init_block}
    queue = [init_block]
    while queue:
        b = queue.pop()
        for ai in range(len(assignments)):
            nb = bdelta[(b, ai)]
            if nb not in reachable:
                reachable.add(nb)
                queue.append(nb)
    can_reach_goal = {goal_block}
    changed = True
    while changed:
        changed = False
        for b in reachable:
            if b in can_reach_goal:
                continue
            if any(bdelta[(b, ai)] in can_reach_goal
                   for ai in range(len(assignments))):
                can_reach_goal.add(b)
                changed = True
    live = [b for b in sorted(reachable) if b in can_reach_goal]
    if init_block not in live:
        raise TranslationError("goal state unreachable from the initial state")

    # stable state names in BFS order from the initial block
    names = {init_block: "init", goal_block: "goal"}
    counter = itertools.count(1)
    bfs = [init_block]
    seen = {init_block}
    while bfs:
        b = bfs.pop(0)
        for ai in range(len(assignments)):
            nb = bdelta[(b, ai)]
            if nb in seen or nb not in can_reach_goal:
                continue
            seen.add(nb)
            if nb not in names:
                names[nb] = f"s{next(counter)}"
            bfs.append(nb)

    variables = list(partition.subgoals) + list(partition.events)
    symbols = sympy.symbols(variables) if len(variables) > 1 else \
        [sympy.Symbol(variables[0])]
    dontcares = _illegal_minterms(partition)

    edges = []
    for b in live:
        if b == goal_block:
            continue
        by_dst = {}
        for ai, assignment in enumerate(assignments):
            nb = bdelta[(b, ai)]
            if nb == b or nb not in can_reach_goal:
                continue  # self-loops stay implicit; dead successors dropped
            by_dst.setdefault(nb, []).append(
                [int(assignment[v]) for v in variables])
        for nb, minterms in sorted(by_dst.items()):
            guard = _sympy_to_formula(SOPform(symbols, minterms, dontcares))
            edges.append(Edge(names[b], names[nb], guard))

    return Fsa.make(states=tuple(names[b] for b in live),
                    edges=edges, initial="init", goal="goal")


def _illegal_minterms(partition: PropositionPartition):
    n_sub = len(partition.subgoals)
    out = []
    for bits in itertools.product([0, 1], repeat=n_sub + len(partition.events)):
        if sum(bits[:n_sub]) >= 2:
            out.append(list(bits))
    return out


def _sympy_to_formula(expr) -> Formula:
    if expr is sympy.true or expr == True:  # noqa: E712 - sympy booleans
        return ltl.TRUE
    if expr is sympy.false or expr == False:  # noqa: E712
        return ltl.FALSE
    if isinstance(expr, sympy.Symbol):
        return ltl.Prop(expr.name)
    if isinstance(expr, sympy.Not):
        return ltl.Not(_sympy_to_formula(expr.args[0]))
    if isinstance(expr, sympy.And):
        kids = sorted((_sympy_to_formula(a) for a in expr.args),
                      key=format_formula)
        return ltl.And(tuple(kids))
    if isinstance(expr, sympy.Or):
        kids = sorted((_sympy_to_formula(a) for a in expr.args),
                      key=format_formula)
        return ltl.Or(tuple(kids))
    raise TranslationError(f"cannot convert sympy expression {expr!r}")
