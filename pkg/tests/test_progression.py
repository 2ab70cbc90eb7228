"""Progression, simplification and finite-trace acceptance, cross-checked
against the brute-force semantics oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from lof import ltl
from lof.ltl import (
    Always,
    Eventually,
    Next,
    Prop,
    Until,
    accepts,
    empty_suffix_satisfied,
    parse_ltl,
    progress,
    simplify,
)
from test_ltl_parser import formula_strategy


class TestProgress:
    def test_prop(self):
        assert progress(parse_ltl("a"), {"a": True}) == ltl.TRUE
        assert progress(parse_ltl("a"), {"a": False}) == ltl.FALSE
        assert progress(parse_ltl("a"), {}) == ltl.FALSE  # absent = false

    def test_eventually(self):
        f = parse_ltl("F a")
        assert progress(f, {"a": True}) == ltl.TRUE
        assert progress(f, {"a": False}) == f

    def test_always(self):
        f = parse_ltl("G !o")
        assert progress(f, {"o": False}) == f
        assert progress(f, {"o": True}) == ltl.FALSE

    def test_next_peels_one_step(self):
        assert progress(parse_ltl("X a"), {"a": True}) == Prop("a")
        assert progress(parse_ltl("X a"), {"a": False}) == Prop("a")

    def test_until_holds_while_waiting(self):
        f = parse_ltl("a U b")
        assert progress(f, {"a": True, "b": False}) == f
        assert progress(f, {"a": True, "b": True}) == ltl.TRUE
        assert progress(f, {"a": False, "b": False}) == ltl.FALSE

    def test_until_exhaustive_two_step_traces(self):
        # spec-level example: progression agrees with the semantics oracle on
        # every trace of length <= 2 over {a, b}
        f = parse_ltl("a U b")
        for tr in oracles.enumerate_traces(("a", "b"), 2):
            assert accepts(f, tr) == oracles.holds(f, tr)

    def test_sequential_task_progression(self):
        f = parse_ltl("F(a & F(b & F(c & F h)))")
        g = progress(f, {"a": True})
        # after seeing a, the obligation drops to the b-c-h chain
        assert accepts(g, ({"b": True}, {"c": True}, {"h": True}))
        assert not accepts(g, ({"c": True}, {"h": True}))


class TestSimplify:
    def test_idempotent(self):
        for text in ["a & a", "a | (a & b)", "!(!a)", "F F a", "G G a",
                     "a & !a", "a | !a", "true U b", "a & true", "a | false"]:
            f = simplify(parse_ltl(text))
            assert simplify(f) == f

    def test_boolean_rules(self):
        assert simplify(parse_ltl("a & a")) == Prop("a")
        assert simplify(parse_ltl("!(!a)")) == Prop("a")
        assert simplify(parse_ltl("a & !a")) == ltl.FALSE
        assert simplify(parse_ltl("a | !a")) == ltl.TRUE
        assert simplify(parse_ltl("a | (a & b)")) == Prop("a")
        assert simplify(parse_ltl("a & (a | b)")) == Prop("a")

    def test_temporal_rules(self):
        assert simplify(parse_ltl("F F a")) == Eventually(Prop("a"))
        assert simplify(parse_ltl("G G a")) == Always(Prop("a"))
        assert simplify(parse_ltl("F false")) == ltl.FALSE
        assert simplify(parse_ltl("G true")) == ltl.TRUE
        assert simplify(parse_ltl("true U b")) == Eventually(Prop("b"))
        assert simplify(parse_ltl("a U false")) == ltl.FALSE
        assert simplify(parse_ltl("X false")) == ltl.FALSE

    def test_empty_trace_distinctions_preserved(self):
        # these fold only on non-empty traces, so simplify must keep them
        assert simplify(parse_ltl("F true")) == Eventually(ltl.TRUE)
        assert simplify(parse_ltl("G false")) == Always(ltl.FALSE)
        assert simplify(parse_ltl("a U true")) == Until(Prop("a"), ltl.TRUE)

    def test_canonical_ordering(self):
        assert simplify(parse_ltl("b & a")) == simplify(parse_ltl("a & b"))
        assert simplify(parse_ltl("b | a | c")) == simplify(parse_ltl("c | a | b"))

    @settings(max_examples=200, deadline=None)
    @given(formula_strategy(("a", "b")),
           st.lists(st.fixed_dictionaries(
               {"a": st.booleans(), "b": st.booleans()}), max_size=4))
    def test_simplify_preserves_semantics(self, f, tr):
        tr = tuple(tr)
        assert oracles.holds(simplify(f), tr) == oracles.holds(f, tr)


class TestEmptySuffix:
    def test_rules(self):
        assert empty_suffix_satisfied(ltl.TRUE)
        assert not empty_suffix_satisfied(ltl.FALSE)
        assert not empty_suffix_satisfied(Prop("a"))
        assert empty_suffix_satisfied(parse_ltl("!a"))
        assert empty_suffix_satisfied(parse_ltl("G a"))
        assert not empty_suffix_satisfied(parse_ltl("F a"))
        assert not empty_suffix_satisfied(parse_ltl("X a"))
        assert not empty_suffix_satisfied(parse_ltl("a U b"))
        assert empty_suffix_satisfied(parse_ltl("G a & !b"))
        assert not empty_suffix_satisfied(parse_ltl("G a & F b"))

    def test_matches_oracle_on_empty_trace(self):
        for f in oracles.enumerate_formulas(("a", "b"), 2):
            assert empty_suffix_satisfied(f) == oracles.holds(f, ())


class TestAccepts:
    def test_empty_trace(self):
        assert accepts(ltl.TRUE, ())
        assert accepts(parse_ltl("G !o"), ())
        assert not accepts(parse_ltl("F a"), ())
        assert not accepts(parse_ltl("F true"), ())
        assert accepts(parse_ltl("G false"), ())

    def test_next_at_boundary(self):
        # at the last position, X evaluates its argument on the empty suffix
        assert accepts(parse_ltl("X true"), ({},))
        assert accepts(parse_ltl("X G a"), ({},))
        assert not accepts(parse_ltl("X a"), ({},))
        assert not accepts(parse_ltl("X F true"), ({},))

    def test_sequential_task_trace(self):
        f = parse_ltl("F(a & F(b & F(c & F h)))")
        good = ({"a": True}, {}, {"b": True}, {"c": True}, {"h": True})
        assert accepts(f, good)
        out_of_order = ({"b": True}, {"a": True}, {"c": True}, {"h": True})
        assert not accepts(f, out_of_order)

    @settings(max_examples=300, deadline=None)
    @given(formula_strategy(),
           st.lists(st.fixed_dictionaries(
               {"a": st.booleans(), "b": st.booleans(),
                "can": st.booleans()}), max_size=5))
    def test_matches_oracle_random_deep(self, f, tr):
        tr = tuple(tr)
        assert accepts(f, tr) == oracles.holds(f, tr)


class TestVectorizedOracle:
    """The exhaustive acceptance check relies on a vectorized evaluator and
    an automaton walk; validate both against the definitional versions."""

    def test_eval_all_traces_matches_holds(self):
        rng = np.random.default_rng(7)
        formulas = oracles.enumerate_formulas(("a", "b"), 2)
        picks = rng.choice(len(formulas), size=80, replace=False)
        for length in range(0, 4):
            syms = oracles.trace_symbols(2, length)
            cache = {}
            for i in picks:
                f = formulas[i]
                vec = oracles.eval_all_traces(f, ["a", "b"], syms, cache)
                for t in range(syms.shape[0]):
                    tr = tuple({"a": bool(syms[t, j] & 1),
                                "b": bool(syms[t, j] >> 1 & 1)}
                               for j in range(length))
                    assert vec[t, 0] == oracles.holds(f, tr)

    def test_automaton_walk_matches_accepts(self):
        rng = np.random.default_rng(8)
        formulas = oracles.enumerate_formulas(("a", "b"), 2)
        picks = rng.choice(len(formulas), size=80, replace=False)
        for length in range(0, 4):
            syms = oracles.trace_symbols(2, length)
            for i in picks:
                f = formulas[i]
                trans, acc = oracles.residual_automaton(f, ("a", "b"))
                got = oracles.progression_accepts_all(trans, acc, syms)
                for t in range(syms.shape[0]):
                    tr = tuple({"a": bool(syms[t, j] & 1),
                                "b": bool(syms[t, j] >> 1 & 1)}
                               for j in range(length))
                    assert got[t] == accepts(f, tr)
