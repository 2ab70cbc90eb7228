"""Parser, printer, and AST structure tests for the temporal logic front-end."""

import pytest
from hypothesis import given, strategies as st

from lof import ltl
from lof.ltl import (
    Always,
    And,
    Eventually,
    LtlSyntaxError,
    Next,
    Not,
    Or,
    Prop,
    UndeclaredPropositionError,
    Until,
    format_formula,
    parse_ltl,
    propositions,
)


def roundtrip(f):
    return parse_ltl(format_formula(f))


class TestParsing:
    def test_atoms(self):
        assert parse_ltl("a") == Prop("a")
        assert parse_ltl("true") == ltl.TRUE
        assert parse_ltl("false") == ltl.FALSE
        assert parse_ltl("True") == ltl.TRUE
        assert parse_ltl("False") == ltl.FALSE

    def test_unary_operators(self):
        assert parse_ltl("!a") == Not(Prop("a"))
        assert parse_ltl("X a") == Next(Prop("a"))
        assert parse_ltl("F a") == Eventually(Prop("a"))
        assert parse_ltl("G a") == Always(Prop("a"))

    def test_unicode_aliases(self):
        assert parse_ltl("¬a") == parse_ltl("!a")
        assert parse_ltl("a ∧ b") == parse_ltl("a & b")
        assert parse_ltl("a ∨ b") == parse_ltl("a | b")
        assert parse_ltl("◇a") == parse_ltl("F a")
        assert parse_ltl("□a") == parse_ltl("G a")
        assert parse_ltl("◯a") == parse_ltl("X a")

    def test_nary_flattening(self):
        f = parse_ltl("a & b & c")
        assert isinstance(f, And) and len(f.children) == 3
        g = parse_ltl("a | b | c")
        assert isinstance(g, Or) and len(g.children) == 3

    def test_precedence(self):
        # ! binds tighter than &, & tighter than |, | tighter than U
        assert parse_ltl("!a & b") == And((Not(Prop("a")), Prop("b")))
        assert parse_ltl("a & b | c") == Or((And((Prop("a"), Prop("b"))),
                                            Prop("c")))
        assert parse_ltl("a | b U c") == Until(Or((Prop("a"), Prop("b"))),
                                               Prop("c"))
        # unary temporal operators bind tighter than &
        assert parse_ltl("F a & b") == And((Eventually(Prop("a")), Prop("b")))

    def test_until_right_associative(self):
        f = parse_ltl("a U b U c")
        assert f == Until(Prop("a"), Until(Prop("b"), Prop("c")))

    def test_parentheses(self):
        assert parse_ltl("F (a & b)") == Eventually(And((Prop("a"), Prop("b"))))
        assert parse_ltl("(a | b) & c") == And((Or((Prop("a"), Prop("b"))),
                                                Prop("c")))

    def test_implication_desugaring(self):
        # a -> b becomes !a | b
        assert parse_ltl("a -> b") == Or((Not(Prop("a")), Prop("b")))
        # right associative, with the resulting Or chain flattened
        assert parse_ltl("a -> b -> c") == \
            Or((Not(Prop("a")), Not(Prop("b")), Prop("c")))

    def test_iff_desugaring(self):
        f = parse_ltl("a <-> b")
        assert isinstance(f, And)
        assert propositions(f) == frozenset({"a", "b"})

    def test_declared_propositions(self):
        assert parse_ltl("a & b", props={"a", "b"}) == And((Prop("a"),
                                                            Prop("b")))
        with pytest.raises(UndeclaredPropositionError) as err:
            parse_ltl("a & q", props={"a", "b"})
        assert err.value.name == "q"

    def test_task_formulas_parse(self):
        from lof.harness import TASKS
        for text in TASKS.values():
            f = parse_ltl(text)
            assert propositions(f) <= {"a", "b", "c", "h", "o", "can"}


class TestErrors:
    def test_empty(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("")
        with pytest.raises(LtlSyntaxError):
            parse_ltl("   ")

    def test_unexpected_character_offset(self):
        with pytest.raises(LtlSyntaxError) as err:
            parse_ltl("a & %b")
        assert err.value.offset == 4

    def test_dangling_operator(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("a &")
        with pytest.raises(LtlSyntaxError):
            parse_ltl("U b")

    def test_unbalanced_parens(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("(a & b")
        with pytest.raises(LtlSyntaxError):
            parse_ltl("a & b)")

    def test_trailing_tokens(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("a b")


# -- round-trip property ------------------------------------------------------

def formula_strategy(props=("a", "b", "can")):
    leaves = st.one_of(
        st.sampled_from([Prop(p) for p in props]),
        st.sampled_from([ltl.TRUE, ltl.FALSE]),
    )

    def extend(children):
        return st.one_of(
            st.builds(Not, children),
            st.builds(Next, children),
            st.builds(Eventually, children),
            st.builds(Always, children),
            # binary nodes flattened the way the parser flattens chains
            st.builds(lambda l, r: ltl._mk_and([l, r]), children, children),
            st.builds(lambda l, r: ltl._mk_or([l, r]), children, children),
            st.builds(Until, children, children),
        )

    return st.recursive(leaves, extend, max_leaves=12)


class TestRoundTrip:
    @given(formula_strategy())
    def test_print_parse_identity(self, f):
        assert roundtrip(f) == f

    def test_nested_until_parenthesized(self):
        f = Until(Until(Prop("a"), Prop("b")), Prop("c"))
        text = format_formula(f)
        assert roundtrip(f) == f
        assert "(" in text  # left-nested Until needs explicit grouping

    def test_examples(self):
        for text in ["F(a & F(b & F(c & F h))) & G !o",
                     "a U (b U c)", "!(a) | X X b", "G !o & F can"]:
            f = parse_ltl(text)
            assert roundtrip(f) == f


class TestCosafeChecks:
    def test_cosafe_accepts(self):
        for text in ["F a", "a U b", "X a & F b", "F (a & F b)"]:
            ok, where = ltl.check_cosafe(parse_ltl(text))
            assert ok and where is None

    def test_cosafe_rejects_always(self):
        ok, where = ltl.check_cosafe(parse_ltl("G !o"))
        assert not ok and where == ()
        ok, where = ltl.check_cosafe(parse_ltl("F a & G !o"))
        assert not ok and where == (1,)

    def test_cosafe_rejects_negated_temporal(self):
        ok, where = ltl.check_cosafe(parse_ltl("!(F a)"))
        assert not ok

    def test_liveness_allows_event_always(self):
        ok, _ = ltl.check_liveness(parse_ltl("F a & G !can"), ("can",))
        assert ok
        # but not over subgoals
        ok, _ = ltl.check_liveness(parse_ltl("F a & G !b"), ("can",))
        assert not ok


class TestSplitSpec:
    def test_splits_safety_conjunct(self):
        f = parse_ltl("F(a & F b) & G !o")
        split = ltl.split_spec(f, safety_props=("o",), event_props=("can",))
        assert split.safety_conjuncts == ("o",)
        assert split.liveness == parse_ltl("F(a & F b)")

    def test_keeps_event_always_in_liveness(self):
        f = parse_ltl("(F a & G !can) & G !o")
        split = ltl.split_spec(f, safety_props=("o",), event_props=("can",))
        assert split.safety_conjuncts == ("o",)
        assert "can" in str(split.liveness)

    def test_rejects_unsplittable(self):
        with pytest.raises(ltl.NonFactorableError):
            ltl.split_spec(parse_ltl("G (a | b)"), safety_props=("o",))
        with pytest.raises(ltl.NonFactorableError):
            ltl.split_spec(parse_ltl("G !o"), safety_props=("o",))

    def test_reassemble_inverse(self):
        for text in ["F a & G !o", "F(a & F b) & G !o & G !p"]:
            f = parse_ltl(text)
            split = ltl.split_spec(f, safety_props=("o", "p"))
            back = ltl.reassemble(split)
            assert ltl.simplify(back) == ltl.simplify(f)
