"""Linear temporal logic front-end: AST, parser, co-safe checks, liveness/safety
splitting, and one-step formula progression.

Formulas are immutable trees built from ``Prop``, ``TRUE``/``FALSE``, ``Not``,
n-ary ``And``/``Or``, and the temporal operators ``Next``, ``Until``,
``Eventually``, ``Always``.  Surface syntax is ASCII (``! & | -> <-> X U F G``)
with the usual unicode aliases.  ``->`` and ``<->`` are desugared at parse
time; ``F`` and ``G`` are kept as their own node kinds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


class LtlError(Exception):
    pass


class LtlSyntaxError(LtlError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UndeclaredPropositionError(LtlError):
    def __init__(self, name: str, offset: int = -1):
        super().__init__(f"undeclared proposition '{name}'")
        self.name = name
        self.offset = offset


class NonFactorableError(LtlError):
    """Raised when a specification cannot be split into liveness and safety."""


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple


@dataclass(frozen=True)
class Or(Formula):
    children: tuple


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    child: Formula


TRUE = TrueF()
FALSE = FalseF()


# ---------------------------------------------------------------------------
# Lexing / parsing
# ---------------------------------------------------------------------------

_SYMBOLS = {
    "<->": "IFF", "->": "IMPLIES", "(": "LPAREN", ")": "RPAREN",
    "!": "NOT", "&": "AND", "|": "OR",
    "¬": "NOT", "∧": "AND", "∨": "OR",
    "→": "IMPLIES", "↔": "IFF",
    "◯": "NEXT", "○": "NEXT", "◇": "EVENTUALLY",
    "□": "ALWAYS",
}

_KEYWORDS = {
    "X": "NEXT", "U": "UNTIL", "F": "EVENTUALLY", "G": "ALWAYS",
    "true": "TRUE", "True": "TRUE", "false": "FALSE", "False": "FALSE",
}


def _tokenize(text: str):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("<->", i):
            tokens.append(("IFF", "<->", i))
            i += 3
            continue
        if text.startswith("->", i):
            tokens.append(("IMPLIES", "->", i))
            i += 2
            continue
        if ch in _SYMBOLS:
            tokens.append((_SYMBOLS[ch], ch, i))
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in _KEYWORDS:
                tokens.append((_KEYWORDS[word], word, i))
            else:
                tokens.append(("IDENT", word, i))
            i = j
            continue
        raise LtlSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("EOF", "", n))
    return tokens


class _Parser:
    """Recursive descent parser.

    Precedence, tightest first: ! > X/F/G > & > | > U > -> > <->, with
    parentheses overriding.  U and -> associate to the right; chains of &
    and | are flattened into n-ary nodes.
    """

    def __init__(self, text: str, props):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.props = None if props is None else set(props)

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise LtlSyntaxError(f"expected {kind}, found {tok[1]!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.iff()
        tok = self.peek()
        if tok[0] != "EOF":
            raise LtlSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def iff(self) -> Formula:
        left = self.implies()
        while self.peek()[0] == "IFF":
            self.take()
            right = self.implies()
            left = _mk_and([_mk_or([Not(left), right]),
                            _mk_or([Not(right), left])])
        return left

    def implies(self) -> Formula:
        left = self.until()
        if self.peek()[0] == "IMPLIES":
            self.take()
            right = self.implies()
            return _mk_or([Not(left), right])
        return left

    def until(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "UNTIL":
            self.take()
            right = self.until()
            return Until(left, right)
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek()[0] == "OR":
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else _mk_or(parts)

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.peek()[0] == "AND":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else _mk_and(parts)

    def unary(self) -> Formula:
        kind, _, offset = self.peek()
        if kind == "NOT":
            self.take()
            return Not(self.unary())
        if kind == "NEXT":
            self.take()
            return Next(self.unary())
        if kind == "EVENTUALLY":
            self.take()
            return Eventually(self.unary())
        if kind == "ALWAYS":
            self.take()
            return Always(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, value, offset = self.take()
        if kind == "TRUE":
            return TRUE
        if kind == "FALSE":
            return FALSE
        if kind == "IDENT":
            if self.props is not None and value not in self.props:
                raise UndeclaredPropositionError(value, offset)
            return Prop(value)
        if kind == "LPAREN":
            f = self.iff()
            self.take("RPAREN")
            return f
        raise LtlSyntaxError(f"unexpected token {value!r}", offset)


def _mk_and(parts) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.children)
        else:
            flat.append(p)
    return And(tuple(flat))


def _mk_or(parts) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.children)
        else:
            flat.append(p)
    return Or(tuple(flat))


def parse_ltl(text: str, props: Iterable[str] | None = None) -> Formula:
    """Parse an LTL formula; ``props`` is the declared proposition set
    (pass None to skip the declaration check)."""
    if not text or not text.strip():
        raise LtlSyntaxError("empty formula", 0)
    return _Parser(text, props).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PRECEDENCE = {
    Until: 1, Or: 2, And: 3, Not: 4, Next: 4, Eventually: 4, Always: 4,
    Prop: 5, TrueF: 5, FalseF: 5,
}


def format_formula(f: Formula) -> str:
    return _fmt(f, 0)


def _fmt(f: Formula, parent_prec: int) -> str:
    prec = _PRECEDENCE[type(f)]
    if isinstance(f, Prop):
        s = f.name
    elif isinstance(f, TrueF):
        s = "true"
    elif isinstance(f, FalseF):
        s = "false"
    elif isinstance(f, Not):
        s = "!" + _fmt(f.child, prec)
    elif isinstance(f, Next):
        s = "X " + _fmt(f.child, prec)
    elif isinstance(f, Eventually):
        s = "F " + _fmt(f.child, prec)
    elif isinstance(f, Always):
        s = "G " + _fmt(f.child, prec)
    elif isinstance(f, And):
        s = " & ".join(_fmt(c, prec) for c in f.children)
    elif isinstance(f, Or):
        s = " | ".join(_fmt(c, prec) for c in f.children)
    elif isinstance(f, Until):
        # right associative: parenthesize a nested Until on the left
        s = _fmt(f.left, prec + 1) + " U " + _fmt(f.right, prec)
    else:
        raise TypeError(f)
    if prec < parent_prec:
        return "(" + s + ")"
    return s


def propositions(f: Formula) -> frozenset:
    """Names of all propositions occurring in f."""
    if isinstance(f, Prop):
        return frozenset([f.name])
    if isinstance(f, (TrueF, FalseF)):
        return frozenset()
    if isinstance(f, (Not, Next, Eventually, Always)):
        return propositions(f.child)
    if isinstance(f, Until):
        return propositions(f.left) | propositions(f.right)
    if isinstance(f, (And, Or)):
        out = frozenset()
        for c in f.children:
            out |= propositions(c)
        return out
    raise TypeError(f)


# ---------------------------------------------------------------------------
# Co-safety checks and negation normal form
# ---------------------------------------------------------------------------

def check_cosafe(f: Formula):
    """Return (ok, path) where path locates the first violating node.

    A formula is syntactically co-safe when it contains no Always and every
    temporal operator sits under an even number of negations.  The path is a
    list of child indices from the root to the offending node (empty list =
    root), or None when the formula is co-safe.
    """
    return _cosafe_walk(f, False, (), allow_always_over=None)


def check_liveness(f: Formula, event_props: Iterable[str]):
    """Co-safety check relaxed to admit Always over event-only propositional
    subformulas, which task specifications use to freeze control-flow
    branches (e.g. "unless cancelled")."""
    return _cosafe_walk(f, False, (), allow_always_over=frozenset(event_props))


def _cosafe_walk(f, negated, path, allow_always_over):
    if isinstance(f, (Prop, TrueF, FalseF)):
        return True, None
    if isinstance(f, Not):
        return _cosafe_walk(f.child, not negated, path + (0,), allow_always_over)
    if isinstance(f, (And, Or)):
        for i, c in enumerate(f.children):
            ok, where = _cosafe_walk(c, negated, path + (i,), allow_always_over)
            if not ok:
                return False, where
        return True, None
    if isinstance(f, Always):
        if negated:
            return False, path
        if allow_always_over is not None and _is_propositional(f.child) \
                and propositions(f.child) <= allow_always_over:
            return True, None
        return False, path
    if isinstance(f, (Next, Eventually)):
        if negated:
            return False, path
        return _cosafe_walk(f.child, negated, path + (0,), allow_always_over)
    if isinstance(f, Until):
        if negated:
            return False, path
        ok, where = _cosafe_walk(f.left, negated, path + (0,), allow_always_over)
        if not ok:
            return False, where
        return _cosafe_walk(f.right, negated, path + (1,), allow_always_over)
    raise TypeError(f)


def _is_propositional(f: Formula) -> bool:
    if isinstance(f, (Prop, TrueF, FalseF)):
        return True
    if isinstance(f, Not):
        return _is_propositional(f.child)
    if isinstance(f, (And, Or)):
        return all(_is_propositional(c) for c in f.children)
    return False


def to_nnf(f: Formula, negated: bool = False) -> Formula:
    """Push negations down to propositions.

    Negating a temporal operator is rejected (that would need the Release
    operator, outside the supported fragment); callers check co-safety first.
    """
    if isinstance(f, TrueF):
        return FALSE if negated else TRUE
    if isinstance(f, FalseF):
        return TRUE if negated else FALSE
    if isinstance(f, Prop):
        return Not(f) if negated else f
    if isinstance(f, Not):
        return to_nnf(f.child, not negated)
    if isinstance(f, And):
        kids = tuple(to_nnf(c, negated) for c in f.children)
        return _mk_or(list(kids)) if negated else _mk_and(list(kids))
    if isinstance(f, Or):
        kids = tuple(to_nnf(c, negated) for c in f.children)
        return _mk_and(list(kids)) if negated else _mk_or(list(kids))
    if negated:
        raise LtlError(f"cannot negate temporal operator in {f}")
    if isinstance(f, Next):
        return Next(to_nnf(f.child))
    if isinstance(f, Eventually):
        return Eventually(to_nnf(f.child))
    if isinstance(f, Always):
        return Always(to_nnf(f.child))
    if isinstance(f, Until):
        return Until(to_nnf(f.left), to_nnf(f.right))
    raise TypeError(f)


# ---------------------------------------------------------------------------
# Simplification / canonical form
# ---------------------------------------------------------------------------

def simplify(f: Formula) -> Formula:
    """Bottom-up Boolean simplification with canonical child ordering.

    Applies constant folding, double negation, idempotence, absorption and
    complement rules, sorts And/Or children by printed form, and collapses
    nested Eventually/Always.  Syntactically equal residuals then compare
    equal, which is what formula progression needs to terminate.
    """
    if isinstance(f, (Prop, TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        c = simplify(f.child)
        if isinstance(c, TrueF):
            return FALSE
        if isinstance(c, FalseF):
            return TRUE
        if isinstance(c, Not):
            return c.child
        return Not(c)
    if isinstance(f, Next):
        c = simplify(f.child)
        if isinstance(c, FalseF):
            return FALSE
        return Next(c)
    if isinstance(f, Eventually):
        c = simplify(f.child)
        # F true is kept as-is: it differs from true on the empty trace.
        if isinstance(c, FalseF):
            return c
        if isinstance(c, Eventually):
            return c
        return Eventually(c)
    if isinstance(f, Always):
        c = simplify(f.child)
        # G false is kept as-is: it differs from false on the empty trace.
        if isinstance(c, TrueF):
            return c
        if isinstance(c, Always):
            return c
        return Always(c)
    if isinstance(f, Until):
        left = simplify(f.left)
        right = simplify(f.right)
        if isinstance(right, FalseF):
            return right
        if isinstance(left, TrueF):
            return Eventually(right)
        return Until(left, right)
    if isinstance(f, And):
        return _simplify_nary(f.children, is_and=True)
    if isinstance(f, Or):
        return _simplify_nary(f.children, is_and=False)
    raise TypeError(f)


def _simplify_nary(children, is_and: bool) -> Formula:
    absorb_const = FALSE if is_and else TRUE   # dominates the connective
    drop_const = TRUE if is_and else FALSE     # identity element
    kids = []
    for c in children:
        c = simplify(c)
        if isinstance(c, And) and is_and or isinstance(c, Or) and not is_and:
            kids.extend(c.children)
        else:
            kids.append(c)
    uniq = {}
    for c in kids:
        if c == absorb_const:
            return absorb_const
        if c == drop_const:
            continue
        uniq[format_formula(c)] = c
    kids = list(uniq.values())
    # complement: p and !p together decide the whole connective
    keys = set(uniq)
    for c in kids:
        if isinstance(c, Not) and format_formula(c.child) in keys:
            return absorb_const
    # absorption: under And drop any Or-child containing another conjunct,
    # dually under Or drop any And-child containing another disjunct
    inner = Or if is_and else And
    kept = []
    for c in kids:
        if isinstance(c, inner):
            inner_keys = {format_formula(g) for g in c.children}
            if any(k in inner_keys for k in keys - {format_formula(c)}):
                continue
        kept.append(c)
    kept.sort(key=format_formula)
    if not kept:
        return drop_const
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept)) if is_and else Or(tuple(kept))


# ---------------------------------------------------------------------------
# Progression
# ---------------------------------------------------------------------------

def progress(f: Formula, assignment: Mapping[str, bool]) -> Formula:
    """One-step formula progression against a truth assignment.

    The result is the residual obligation on the remainder of the trace,
    Boolean-simplified and canonically ordered.
    """
    return simplify(_progress(f, assignment))


def _progress(f: Formula, a) -> Formula:
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Prop):
        return TRUE if a.get(f.name, False) else FALSE
    if isinstance(f, Not):
        return Not(_progress(f.child, a))
    if isinstance(f, And):
        return _mk_and([_progress(c, a) for c in f.children])
    if isinstance(f, Or):
        return _mk_or([_progress(c, a) for c in f.children])
    if isinstance(f, Next):
        return f.child
    if isinstance(f, Eventually):
        return _mk_or([_progress(f.child, a), f])
    if isinstance(f, Always):
        return _mk_and([_progress(f.child, a), f])
    if isinstance(f, Until):
        return _mk_or([_progress(f.right, a),
                       _mk_and([_progress(f.left, a), f])])
    raise TypeError(f)


def empty_suffix_satisfied(f: Formula) -> bool:
    """Whether the residual is satisfied once the trace ends: Eventually,
    Until and Next are strong (unsatisfied), Always is weak (satisfied)."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Prop):
        return False
    if isinstance(f, Not):
        return not empty_suffix_satisfied(f.child)
    if isinstance(f, And):
        return all(empty_suffix_satisfied(c) for c in f.children)
    if isinstance(f, Or):
        return any(empty_suffix_satisfied(c) for c in f.children)
    if isinstance(f, (Next, Eventually, Until)):
        return False
    if isinstance(f, Always):
        return True
    raise TypeError(f)


def accepts(f: Formula, trace) -> bool:
    """Whether the finite trace (a sequence of truth assignments) satisfies f,
    decided by iterated progression."""
    residual = simplify(f)
    for assignment in trace:
        residual = progress(residual, assignment)
    return empty_suffix_satisfied(residual)


# ---------------------------------------------------------------------------
# Liveness / safety splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecSplit:
    liveness: Formula
    safety_conjuncts: tuple  # proposition names forbidden under Always


def split_spec(f: Formula, safety_props: Iterable[str],
               event_props: Iterable[str] = ()) -> SpecSplit:
    """Split a top-level conjunction into a co-safe liveness formula and the
    safety propositions forbidden under Always.

    Each conjunct must either be a liveness formula (co-safe, modulo
    event-only Always) or have the shape ``G !p`` with ``p`` a declared
    safety proposition; anything else is rejected.
    """
    safety_props = set(safety_props)
    conjuncts = f.children if isinstance(f, And) else (f,)
    live = []
    safe = []
    for c in conjuncts:
        if isinstance(c, Always) and isinstance(c.child, Not) \
                and isinstance(c.child.child, Prop) \
                and c.child.child.name in safety_props:
            safe.append(c.child.child.name)
            continue
        ok, where = check_liveness(c, event_props)
        if not ok:
            raise NonFactorableError(
                f"conjunct '{c}' is neither co-safe nor of the form G !p "
                f"(violating node at path {list(where)})")
        live.append(c)
    if not live:
        raise NonFactorableError("specification has no liveness part")
    liveness = live[0] if len(live) == 1 else And(tuple(live))
    return SpecSplit(liveness=liveness, safety_conjuncts=tuple(safe))


def reassemble(split: SpecSplit) -> Formula:
    """Inverse of split_spec up to associativity/commutativity of And."""
    parts = list(split.liveness.children) if isinstance(split.liveness, And) \
        else [split.liveness]
    parts += [Always(Not(Prop(p))) for p in split.safety_conjuncts]
    return parts[0] if len(parts) == 1 else And(tuple(parts))
