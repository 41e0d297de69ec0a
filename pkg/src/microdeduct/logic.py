"""Quantifier-free integer formulas with a two-state (pre/post) vocabulary.

Program expressions and annotation clauses share these trees: a MicroC
expression is a :class:`Term`, a condition is a :class:`Formula`.  All nodes
are frozen dataclasses, so structurally equal trees compare and hash equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Optional

MACHINE_MIN = -(2**31)
MACHINE_MAX = 2**31 - 1

LOCATION_KINDS = ("global", "param", "local", "deref", "logic")


@dataclass(frozen=True)
class Location:
    """A storage location.  ``deref`` locations are ``*p`` for a reference
    parameter ``p``; ``logic`` locations are analysis-internal symbols."""

    kind: str
    name: str
    owner: Optional[str] = None

    def __post_init__(self):
        if self.kind not in LOCATION_KINDS:
            raise ValueError(f"unknown location kind {self.kind!r}")

    def __str__(self) -> str:
        return "*" + self.name if self.kind == "deref" else self.name

    @property
    def sort_key(self):
        return (str(self), self.kind, self.owner or "")


def glob(name: str) -> Location:
    return Location("global", name)


# --------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return render_term(self)


@dataclass(frozen=True)
class Int(Term):
    value: int


@dataclass(frozen=True)
class Var(Term):
    loc: Location


@dataclass(frozen=True)
class Old(Term):
    loc: Location


@dataclass(frozen=True)
class Result(Term):
    pass


@dataclass(frozen=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


RESULT = Result()
LEAF_TYPES = (Var, Old, Result)


# --------------------------------------------------------------------------
# Formulas


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return render_formula(self)


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Valid(Formula):
    """``\\valid(p)`` for a reference parameter ``p``."""

    loc: Location


TRUE = BoolConst(True)
FALSE = BoolConst(False)

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
NEGATED_CMP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
FLIPPED_CMP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}

_CMP_FN = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


# --------------------------------------------------------------------------
# Constructors


def const(n: int) -> Int:
    return Int(n)


def var(loc: Location) -> Var:
    return Var(loc)


def conj(*fs: Formula) -> Formula:
    """Flattening conjunction; drops ``true``, absorbs ``false``."""
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.args)
        elif f == TRUE:
            continue
        elif f == FALSE:
            return FALSE
        else:
            out.append(f)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, Or):
            out.extend(f.args)
        elif f == FALSE:
            continue
        elif f == TRUE:
            return TRUE
        else:
            out.append(f)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def implies(a: Formula, b: Formula) -> Formula:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Implies(a, b)


def negate(f: Formula) -> Formula:
    """Logical negation pushed one level (comparisons flip, constants fold)."""
    if isinstance(f, BoolConst):
        return FALSE if f.value else TRUE
    if isinstance(f, Cmp):
        return Cmp(NEGATED_CMP[f.op], f.left, f.right)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def eq(a: Term, b: Term) -> Cmp:
    return Cmp("==", a, b)


def le(a: Term, b: Term) -> Cmp:
    return Cmp("<=", a, b)


def in_range(t: Term, lo: Optional[int], hi: Optional[int]) -> Formula:
    parts = []
    if lo is not None:
        parts.append(Cmp("<=", Int(lo), t))
    if hi is not None:
        parts.append(Cmp("<=", t, Int(hi)))
    return conj(*parts)


def conjuncts(f: Formula) -> tuple:
    if isinstance(f, And):
        return f.args
    if f == TRUE:
        return ()
    return (f,)


def disjuncts(f: Formula) -> tuple:
    if isinstance(f, Or):
        return f.args
    if f == FALSE:
        return ()
    return (f,)


# --------------------------------------------------------------------------
# Traversal


def term_leaves(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, LEAF_TYPES):
            yield t
        elif isinstance(t, Neg):
            stack.append(t.arg)
        elif isinstance(t, (Add, Sub, Mul)):
            stack.append(t.right)
            stack.append(t.left)


def formula_terms(f: Formula) -> Iterator[Term]:
    stack = [f]
    while stack:
        f = stack.pop()
        if isinstance(f, Cmp):
            yield f.left
            yield f.right
        elif isinstance(f, (And, Or)):
            stack.extend(reversed(f.args))
        elif isinstance(f, Not):
            stack.append(f.arg)
        elif isinstance(f, Implies):
            stack.append(f.right)
            stack.append(f.left)


def leaves(f: Formula) -> list:
    """Distinct leaf terms (``Var``, ``Old``, ``Result``) in first-seen order."""
    seen = {}
    for t in formula_terms(f):
        for leaf in term_leaves(t):
            seen.setdefault(leaf, None)
    return list(seen)


def valid_atoms(f: Formula) -> list:
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Valid):
            out.append(g.loc)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, Implies):
            stack.extend((g.left, g.right))
    return out


def map_term(t: Term, leaf_fn: Callable[[Term], Optional[Term]]) -> Term:
    if isinstance(t, LEAF_TYPES):
        r = leaf_fn(t)
        return t if r is None else r
    if isinstance(t, Int):
        return t
    if isinstance(t, Neg):
        a = map_term(t.arg, leaf_fn)
        return t if a is t.arg else Neg(a)
    left = map_term(t.left, leaf_fn)
    right = map_term(t.right, leaf_fn)
    if left is t.left and right is t.right:
        return t
    return type(t)(left, right)


def map_formula(
    f: Formula,
    leaf_fn: Callable[[Term], Optional[Term]],
    valid_fn: Optional[Callable[[Location], Optional[Formula]]] = None,
) -> Formula:
    """Rebuild ``f`` replacing leaf terms (and optionally ``\\valid`` atoms)."""
    if isinstance(f, Cmp):
        left = map_term(f.left, leaf_fn)
        right = map_term(f.right, leaf_fn)
        if left is f.left and right is f.right:
            return f
        return Cmp(f.op, left, right)
    if isinstance(f, (And, Or)):
        args = tuple(map_formula(a, leaf_fn, valid_fn) for a in f.args)
        if all(a is b for a, b in zip(args, f.args)):
            return f
        return type(f)(args)
    if isinstance(f, Not):
        a = map_formula(f.arg, leaf_fn, valid_fn)
        return f if a is f.arg else Not(a)
    if isinstance(f, Implies):
        left = map_formula(f.left, leaf_fn, valid_fn)
        right = map_formula(f.right, leaf_fn, valid_fn)
        if left is f.left and right is f.right:
            return f
        return Implies(left, right)
    if isinstance(f, Valid) and valid_fn is not None:
        r = valid_fn(f.loc)
        return f if r is None else r
    return f


def substitute(f: Formula, mapping: Mapping[Location, Term]) -> Formula:
    """Simultaneously replace plain occurrences of mapped locations.

    ``\\old(x)`` occurrences are left untouched.
    """
    if not mapping:
        return f

    def leaf(t):
        if isinstance(t, Var):
            return mapping.get(t.loc)
        return None

    return map_formula(f, leaf)


def substitute_term(t: Term, mapping: Mapping[Location, Term]) -> Term:
    return map_term(t, lambda x: mapping.get(x.loc) if isinstance(x, Var) else None)


def substitute_old(f: Formula, mapping: Mapping[Location, Term]) -> Formula:
    def leaf(t):
        if isinstance(t, Old):
            return mapping.get(t.loc)
        return None

    return map_formula(f, leaf)


def substitute_leaves(f: Formula, mapping: Mapping[Term, Term]) -> Formula:
    return map_formula(f, mapping.get)


class FreeLocations(NamedTuple):
    current: frozenset
    old: frozenset

    @property
    def all(self) -> frozenset:
        return self.current | self.old


def free_locations(f: Formula) -> FreeLocations:
    cur, old = set(), set()
    for leaf in leaves(f):
        if isinstance(leaf, Var):
            cur.add(leaf.loc)
        elif isinstance(leaf, Old):
            old.add(leaf.loc)
    for loc in valid_atoms(f):
        cur.add(loc)
    return FreeLocations(frozenset(cur), frozenset(old))


def mentions_result(f: Formula) -> bool:
    return any(isinstance(leaf, Result) for leaf in leaves(f))


def normalize_ensures(f: Formula, footprint: Optional[Iterable[Location]]) -> Formula:
    """Two-state form of an ensures clause for the call rule.

    Afterwards ``\\old(l)`` names the pre-state and a plain ``l`` the post-state;
    plain occurrences of locations outside ``footprint`` are rewritten to their
    pre-state, which equates them across the call.  ``footprint=None`` means
    the callee may write anything.
    """
    if footprint is None:
        return f
    fp = frozenset(footprint)

    def leaf(t):
        if isinstance(t, Var) and t.loc not in fp and t.loc.kind != "logic":
            return Old(t.loc)
        return None

    return map_formula(f, leaf)


# --------------------------------------------------------------------------
# Evaluation


class EvaluationError(Exception):
    pass


def eval_term(t: Term, value_of: Callable[[Term], int]) -> int:
    if isinstance(t, Int):
        return t.value
    if isinstance(t, LEAF_TYPES):
        return value_of(t)
    if isinstance(t, Neg):
        return -eval_term(t.arg, value_of)
    a = eval_term(t.left, value_of)
    b = eval_term(t.right, value_of)
    if isinstance(t, Add):
        return a + b
    if isinstance(t, Sub):
        return a - b
    return a * b


def eval_formula(
    f: Formula,
    value_of: Callable[[Term], int] | Mapping[Term, int],
    valid_of: Optional[Callable[[Location], bool]] = None,
) -> bool:
    """Evaluate with mathematical integers.  ``value_of`` maps leaf terms."""
    if not callable(value_of):
        table = value_of

        def value_of(leaf, table=table):
            try:
                return table[leaf]
            except KeyError:
                raise EvaluationError(f"no value for {render_term(leaf)}") from None

    return _eval(f, value_of, valid_of)


def _eval(f, value_of, valid_of) -> bool:
    if isinstance(f, Cmp):
        return _CMP_FN[f.op](eval_term(f.left, value_of), eval_term(f.right, value_of))
    if isinstance(f, And):
        return all(_eval(a, value_of, valid_of) for a in f.args)
    if isinstance(f, Or):
        return any(_eval(a, value_of, valid_of) for a in f.args)
    if isinstance(f, Not):
        return not _eval(f.arg, value_of, valid_of)
    if isinstance(f, Implies):
        return (not _eval(f.left, value_of, valid_of)) or _eval(f.right, value_of, valid_of)
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Valid):
        return True if valid_of is None else valid_of(f.loc)
    raise TypeError(f"not a formula: {f!r}")


def cmp_holds(op: str, a: int, b: int) -> bool:
    return _CMP_FN[op](a, b)


# --------------------------------------------------------------------------
# Simplification


def simplify_term(t: Term) -> Term:
    if isinstance(t, (Int, Var, Old, Result)):
        return t
    if isinstance(t, Neg):
        a = simplify_term(t.arg)
        if isinstance(a, Int):
            return Int(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    a = simplify_term(t.left)
    b = simplify_term(t.right)
    if isinstance(a, Int) and isinstance(b, Int):
        if isinstance(t, Add):
            return Int(a.value + b.value)
        if isinstance(t, Sub):
            return Int(a.value - b.value)
        return Int(a.value * b.value)
    if isinstance(t, Add):
        if a == Int(0):
            return b
        if b == Int(0):
            return a
    elif isinstance(t, Sub):
        if b == Int(0):
            return a
        if a == b:
            return Int(0)
    else:
        if a == Int(0) or b == Int(0):
            return Int(0)
        if a == Int(1):
            return b
        if b == Int(1):
            return a
    return type(t)(a, b)


def _term_poly(t: Term) -> dict:
    """Polynomial over leaf terms: monomial (sorted tuple of leaves) -> coefficient."""
    if isinstance(t, Int):
        return {(): t.value} if t.value else {}
    if isinstance(t, LEAF_TYPES):
        return {(t,): 1}
    if isinstance(t, Neg):
        return {m: -c for m, c in _term_poly(t.arg).items()}
    a = _term_poly(t.left)
    b = _term_poly(t.right)
    out = {}
    if isinstance(t, (Add, Sub)):
        k = 1 if isinstance(t, Add) else -1
        out = dict(a)
        for m, c in b.items():
            out[m] = out.get(m, 0) + k * c
    else:
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(sorted(ma + mb, key=_leaf_key))
                out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def _leaf_key(t: Term):
    return (render_term(t), repr(t))


def _monomial_term(m: tuple) -> Term:
    out = m[0]
    for leaf in m[1:]:
        out = Mul(out, leaf)
    return out


def canonical_term(t: Term) -> Term:
    """Expanded sum-of-monomials form with a fixed monomial order.

    Monomials are ordered by degree (highest first) then by their leaves;
    the constant comes last.  Equal polynomials give equal trees.
    """
    p = _term_poly(t)
    if not p:
        return Int(0)
    monos = sorted((m for m in p if m), key=lambda m: (-len(m), [_leaf_key(x) for x in m]))
    out = None
    for m in monos:
        c = p[m]
        body = _monomial_term(m)
        mag = body if abs(c) == 1 else Mul(Int(abs(c)), body)
        if out is None:
            if c > 0:
                out = mag
            else:
                out = Neg(body) if c == -1 else Mul(Int(c), body)
        else:
            out = Add(out, mag) if c > 0 else Sub(out, mag)
    c = p.get((), 0)
    if out is None:
        return Int(c)
    if c > 0:
        out = Add(out, Int(c))
    elif c < 0:
        out = Sub(out, Int(-c))
    return out


def terms_equal(a: Term, b: Term) -> bool:
    """Equality as polynomials."""
    return _term_poly(a) == _term_poly(b)


def _dedupe(items):
    return tuple(dict.fromkeys(items))


def _simplify_once(f: Formula) -> Formula:
    if isinstance(f, Cmp):
        a = simplify_term(f.left)
        b = simplify_term(f.right)
        if isinstance(a, Int) and isinstance(b, Int):
            return TRUE if _CMP_FN[f.op](a.value, b.value) else FALSE
        if a == b:
            return TRUE if f.op in ("==", "<=", ">=") else FALSE
        return Cmp(f.op, a, b)
    if isinstance(f, And):
        parts = conj(*(_simplify_once(a) for a in f.args))
        if isinstance(parts, And):
            args = _dedupe(parts.args)
            if any(negate(a) in args for a in args if not isinstance(a, (And, Or))):
                return FALSE
            return args[0] if len(args) == 1 else And(args)
        return parts
    if isinstance(f, Or):
        parts = disj(*(_simplify_once(a) for a in f.args))
        if isinstance(parts, Or):
            args = _dedupe(parts.args)
            if any(negate(a) in args for a in args if not isinstance(a, (And, Or))):
                return TRUE
            return args[0] if len(args) == 1 else Or(args)
        return parts
    if isinstance(f, Not):
        a = _simplify_once(f.arg)
        if isinstance(a, (BoolConst, Cmp, Not)):
            return negate(a)
        if isinstance(a, And):
            return disj(*(negate(x) for x in a.args))
        if isinstance(a, Or):
            return conj(*(negate(x) for x in a.args))
        if isinstance(a, Implies):
            return conj(a.left, negate(a.right))
        return Not(a)
    if isinstance(f, Implies):
        a = _simplify_once(f.left)
        b = _simplify_once(f.right)
        if a == b:
            return TRUE
        if b == FALSE:
            return negate(a)
        return implies(a, b)
    return f


def simplify(f: Formula) -> Formula:
    """Fold constants, drop neutral elements, deduplicate; iterated to a fixpoint."""
    for _ in range(64):
        g = _simplify_once(f)
        if g == f:
            return g
        f = g
    return f


def factor_disjunction(f: Formula) -> Formula:
    """Pull conjuncts shared by every disjunct out of a disjunction."""
    ds = disjuncts(f)
    if len(ds) < 2:
        return f
    cs = [conjuncts(d) for d in ds]
    common = [c for c in cs[0] if all(c in other for other in cs[1:])]
    if not common:
        return f
    rest = [conj(*(c for c in cj if c not in common)) for cj in cs]
    return conj(*common, disj(*rest))


# --------------------------------------------------------------------------
# Rendering (ACSL-subset concrete syntax)

_PREC_ADD = 6
_PREC_MUL = 7
_PREC_UNARY = 8


def _term_prec(t: Term) -> int:
    if isinstance(t, (Add, Sub)):
        return _PREC_ADD
    if isinstance(t, Mul):
        return _PREC_MUL
    if isinstance(t, Neg):
        return _PREC_UNARY
    if isinstance(t, Int) and t.value < 0:
        return _PREC_UNARY
    return 10


def render_term(t: Term) -> str:
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Var):
        return str(t.loc)
    if isinstance(t, Old):
        return f"\\old({t.loc})"
    if isinstance(t, Result):
        return "\\result"
    if isinstance(t, Neg):
        inner = t.arg
        if isinstance(inner, Int) and inner.value >= 0:
            return f"-({inner.value})"
        s = render_term(inner)
        if _term_prec(inner) < _PREC_UNARY:
            return f"-({s})"
        return f"- {s}" if s.startswith("-") else f"-{s}"
    op, prec = {Add: ("+", _PREC_ADD), Sub: ("-", _PREC_ADD), Mul: ("*", _PREC_MUL)}[type(t)]
    left = render_term(t.left)
    if _term_prec(t.left) < prec:
        left = f"({left})"
    right = render_term(t.right)
    if _term_prec(t.right) <= prec:
        right = f"({right})"
    return f"{left} {op} {right}"


_PREC_IMPL = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_CMP = 4
_PREC_NOT = 5


def _formula_prec(f: Formula) -> int:
    if isinstance(f, Implies):
        return _PREC_IMPL
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, Cmp):
        return _PREC_CMP
    if isinstance(f, Not):
        return _PREC_NOT
    return 10


def render_formula(f: Formula) -> str:
    if isinstance(f, BoolConst):
        return "\\true" if f.value else "\\false"
    if isinstance(f, Cmp):
        return f"{render_term(f.left)} {f.op} {render_term(f.right)}"
    if isinstance(f, Valid):
        return f"\\valid({f.loc.name})"
    if isinstance(f, Not):
        s = render_formula(f.arg)
        if _formula_prec(f.arg) < 10:
            s = f"({s})"
        return "!" + s
    if isinstance(f, (And, Or)):
        op = " && " if isinstance(f, And) else " || "
        prec = _formula_prec(f)
        parts = []
        for a in f.args:
            s = render_formula(a)
            # same-operator children are parenthesised to keep the tree shape
            if _formula_prec(a) <= prec:
                s = f"({s})"
            parts.append(s)
        return op.join(parts)
    if isinstance(f, Implies):
        left = render_formula(f.left)
        if _formula_prec(f.left) <= _PREC_IMPL:
            left = f"({left})"
        right = render_formula(f.right)
        if _formula_prec(f.right) < _PREC_IMPL:
            right = f"({right})"
        return f"{left} ==> {right}"
    raise TypeError(f"not a formula: {f!r}")


def big_and(fs: Iterable[Formula]) -> Formula:
    return conj(*fs)


def big_or(fs: Iterable[Formula]) -> Formula:
    return disj(*fs)


def sum_terms(ts: Iterable[Term]) -> Term:
    ts = list(ts)
    if not ts:
        return Int(0)
    return reduce(Add, ts)
