"""Concrete big-step interpreter and bounded-exhaustive checkers.

Arithmetic is mathematical but every intermediate value is checked against
the 32-bit range; leaving it is a fault.  Enumeration order is fixed:
locations sorted by name, each domain ascending, the last location varying
fastest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .frontend.ast import (
    Assign,
    Call,
    CallStmt,
    Contract,
    Decl,
    If,
    ModuleAst,
    Ref,
    Return,
    Span,
    While,
)
from .logic import (
    MACHINE_MAX,
    MACHINE_MIN,
    Add,
    And,
    BoolConst,
    Cmp,
    Formula,
    Implies,
    Int,
    Location,
    Mul,
    Neg,
    Not,
    Old,
    Or,
    Result,
    Sub,
    Term,
    Valid,
    Var,
    cmp_holds,
    eval_formula,
    leaves,
    render_term,
)

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_CAP = 10**6
DEFAULT_DOMAIN = (-8, 8)


@dataclass(frozen=True)
class Fault:
    kind: str  # overflow | invalid-deref | budget
    span: Span
    message: str


@dataclass(frozen=True)
class RunOutcome:
    env: dict  # globals and storage cells after the run
    result: Optional[int] = None
    fault: Optional[Fault] = None

    @property
    def ok(self) -> bool:
        return self.fault is None

    @property
    def status(self) -> str:
        if self.fault is None:
            return "ok"
        return "budget" if self.fault.kind == "budget" else "fault"


class _Abort(Exception):
    def __init__(self, fault: Fault):
        self.fault = fault


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


class Tracer:
    """Observation hooks; the default does nothing.

    ``values`` arguments map the locations visible in the current function
    (globals, params, locals in scope, ``*p`` cells) to integers.
    """

    def enter(self, fn: str, values: dict):
        pass

    def point(self, fn: str, span: Span, values: dict):
        pass

    def call_enter(self, caller: str, call: Call, callee_values: dict):
        pass

    def call_exit(self, caller: str, call: Call, callee_pre: dict, callee_post: dict, result):
        pass

    def exit(self, fn: str, values: dict, result):
        pass


class _Frame:
    __slots__ = ("fn", "values", "refs")

    def __init__(self, fn, values, refs):
        self.fn = fn
        self.values = values  # params and locals
        self.refs = refs  # ref param name -> target location


class Interpreter:
    def __init__(self, m: ModuleAst, budget: int = DEFAULT_STEP_BUDGET, tracer: Optional[Tracer] = None):
        self.m = m
        self.budget = budget
        self.steps = 0
        self.tracer = tracer
        self.cells = {}

    # memory -------------------------------------------------------------
    def _cell(self, frame: _Frame, loc: Location, span) -> Location:
        if loc.kind == "deref":
            target = frame.refs.get(loc.name)
            if target is None or target not in self.cells:
                raise _Abort(Fault("invalid-deref", span, f"invalid dereference of '{loc.name}'"))
            return target
        return loc

    def read(self, frame: _Frame, loc: Location, span) -> int:
        if loc.kind in ("param", "local"):
            return frame.values[loc]
        return self.cells[self._cell(frame, loc, span)]

    def write(self, frame: _Frame, loc: Location, value: int, span):
        if loc.kind in ("param", "local"):
            frame.values[loc] = value
        else:
            self.cells[self._cell(frame, loc, span)] = value

    def visible(self, frame: _Frame) -> dict:
        out = {Location("global", g): self.cells[Location("global", g)] for g in self.m.globals}
        out.update(frame.values)
        for p, target in frame.refs.items():
            if target in self.cells:
                out[Location("deref", p, frame.fn)] = self.cells[target]
        return out

    # expressions --------------------------------------------------------
    def term(self, frame: _Frame, t: Term, span) -> int:
        if isinstance(t, Int):
            v = t.value
        elif isinstance(t, Var):
            return self.read(frame, t.loc, span)
        elif isinstance(t, Old):
            # parameters are immutable, so \old(x) is x
            return self.read(frame, t.loc, span)
        elif isinstance(t, Neg):
            v = -self.term(frame, t.arg, span)
        else:
            a = self.term(frame, t.left, span)
            b = self.term(frame, t.right, span)
            if isinstance(t, Add):
                v = a + b
            elif isinstance(t, Sub):
                v = a - b
            elif isinstance(t, Mul):
                v = a * b
            else:
                raise TypeError(f"not a term: {t!r}")
        if v < MACHINE_MIN or v > MACHINE_MAX:
            raise _Abort(Fault("overflow", span, f"arithmetic overflow in '{render_term(t)}'"))
        return v

    def cond(self, frame: _Frame, f: Formula, span) -> bool:
        if isinstance(f, Cmp):
            return cmp_holds(f.op, self.term(frame, f.left, span), self.term(frame, f.right, span))
        if isinstance(f, And):
            return all(self.cond(frame, a, span) for a in f.args)
        if isinstance(f, Or):
            return any(self.cond(frame, a, span) for a in f.args)
        if isinstance(f, Not):
            return not self.cond(frame, f.arg, span)
        if isinstance(f, Implies):
            return (not self.cond(frame, f.left, span)) or self.cond(frame, f.right, span)
        if isinstance(f, BoolConst):
            return f.value
        if isinstance(f, Valid):
            return frame.refs.get(f.loc.name) in self.cells
        raise TypeError(f"not a formula: {f!r}")

    # statements ---------------------------------------------------------
    def tick(self, span):
        self.steps += 1
        if self.steps > self.budget:
            raise _Abort(Fault("budget", span, "step budget exhausted"))

    def block(self, frame: _Frame, stmts):
        for s in stmts:
            self.stmt(frame, s)

    def _value(self, frame, v, span):
        if isinstance(v, Call):
            return self.call(frame, v)
        return self.term(frame, v, span)

    def stmt(self, frame: _Frame, s):
        self.tick(s.span)
        if isinstance(s, Decl):
            frame.values[s.loc] = self._value(frame, s.init, s.span)
        elif isinstance(s, Assign):
            self.write(frame, s.target, self._value(frame, s.value, s.span), s.span)
        elif isinstance(s, CallStmt):
            self.call(frame, s.call)
        elif isinstance(s, If):
            self.block(frame, s.then if self.cond(frame, s.cond, s.span) else s.orelse)
            return
        elif isinstance(s, While):
            while self.cond(frame, s.cond, s.span):
                self.tick(s.span)
                self.block(frame, s.body)
            return
        elif isinstance(s, Return):
            raise _Returned(None if s.value is None else self.term(frame, s.value, s.span))
        else:
            raise TypeError(f"not a statement: {s!r}")
        if self.tracer is not None:
            self.tracer.point(frame.fn, s.span, self.visible(frame))

    def call(self, frame: _Frame, c: Call):
        callee = self.m.function(c.callee)
        values, refs = {}, {}
        for p, a in zip(callee.params, c.args):
            if p.is_ref:
                assert isinstance(a, Ref)
                refs[p.name] = frame.refs.get(a.loc.name) if a.loc.kind == "deref" else a.loc
            else:
                values[callee.param_loc(p)] = self.term(frame, a, c.span)
        # caller locals passed by reference become addressable cells; a
        # forwarded reference already points at a cell
        moved = {t for t in refs.values() if t is not None and t.kind == "local" and t not in self.cells}
        for target in moved:
            self.cells[target] = frame.values[target]
        inner = _Frame(callee.name, values, refs)
        pre = self.visible(inner) if self.tracer is not None else None
        if self.tracer is not None:
            self.tracer.call_enter(frame.fn, c, pre)
        try:
            result = self.run(inner)
        finally:
            for target in moved:
                frame.values[target] = self.cells.pop(target)
        if self.tracer is not None:
            self.tracer.call_exit(frame.fn, c, pre, self.visible(inner), result)
        return result

    def run(self, frame: _Frame):
        if self.tracer is not None:
            self.tracer.enter(frame.fn, self.visible(frame))
        result = None
        try:
            self.block(frame, self.m.function(frame.fn).body)
        except _Returned as r:
            result = r.value
        if self.tracer is not None:
            self.tracer.exit(frame.fn, self.visible(frame), result)
        return result


def exec_function(
    m: ModuleAst,
    fn: str,
    env: Mapping[Location, int],
    args=(),
    budget: int = DEFAULT_STEP_BUDGET,
    tracer: Optional[Tracer] = None,
) -> RunOutcome:
    """Run ``fn``.  ``env`` holds globals (and any cells reference arguments
    point to); ``args`` are ints for value parameters and target
    :class:`Location` s (or None, meaning invalid) for reference parameters."""
    f = m.function(fn)
    interp = Interpreter(m, budget, tracer)
    interp.cells = dict(env)
    for g in m.global_locations:
        if g not in interp.cells:
            raise ValueError(f"global '{g}' has no value")
    values, refs = {}, {}
    for p, a in zip(f.params, args):
        if p.is_ref:
            refs[p.name] = a
        else:
            values[f.param_loc(p)] = a
    try:
        result = interp.run(_Frame(fn, values, refs))
    except _Abort as e:
        return RunOutcome(dict(interp.cells), None, e.fault)
    return RunOutcome(dict(interp.cells), result, None)


# --------------------------------------------------------------------------
# Bounded exhaustive checking


class EnumerationRefused(Exception):
    """The requested domain exceeds the enumeration cap; not a verdict."""


def _domains(names: list, bounds, default):
    out = []
    size = 1
    for n in names:
        lo, hi = bounds.get(n, default) if bounds else default
        out.append(range(lo, hi + 1))
        size *= max(0, hi - lo + 1)
    return out, size


def contract_locations(m: ModuleAst, fn: str) -> list:
    """Locations enumerated for ``fn``: globals, value params and ``*p`` cells."""
    f = m.function(fn)
    locs = list(m.global_locations) + list(f.param_locations) + list(f.deref_locations)
    return sorted(locs, key=lambda l: l.sort_key)


@dataclass(frozen=True)
class ContractCheck:
    status: str  # holds | counterexample | budget
    env: Optional[dict] = None  # pre-state of the first failing run
    kind: Optional[str] = None  # fault | ensures | assigns
    detail: str = ""
    checked: int = 0

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def _lookup(bounds, loc):
    if not bounds:
        return None
    if loc in bounds:
        return bounds[loc]
    return bounds.get(str(loc))


def check_contract(
    m: ModuleAst,
    fn: str,
    c: Optional[Contract] = None,
    bounds=None,
    cap: int = DEFAULT_CAP,
    default=DEFAULT_DOMAIN,
    budget: int = DEFAULT_STEP_BUDGET,
) -> ContractCheck:
    """Run ``fn`` from every bounded pre-state satisfying ``c.requires``.

    ``bounds`` maps locations (or their printed names) to ``(lo, hi)``.
    Reference parameters are bound to their own ``*p`` cells.
    """
    f = m.function(fn)
    if c is None:
        c = f.contract or Contract()
    locs = contract_locations(m, fn)
    ranges, size = [], 1
    for loc in locs:
        lo, hi = _lookup(bounds, loc) or default
        ranges.append(range(lo, hi + 1))
        size *= max(0, hi - lo + 1)
    if size > cap:
        raise EnumerationRefused(f"{size} environments exceed the cap of {cap}")
    pre_f, post_f = c.pre, c.post
    assigned = c.assigned
    args = [f.deref_loc(p) if p.is_ref else None for p in f.params]
    value_idx = [(i, f.param_loc(p)) for i, p in enumerate(f.params) if not p.is_ref]
    checked = 0
    for combo in itertools.product(*ranges):
        pre = dict(zip(locs, combo))
        if not eval_formula(pre_f, _reader(pre, pre, None)):
            continue
        checked += 1
        for i, loc in value_idx:
            args[i] = pre[loc]
        store = {l: v for l, v in pre.items() if l.kind != "param"}
        out = exec_function(m, fn, store, args, budget)
        if out.fault is not None:
            if out.fault.kind == "budget":
                return ContractCheck("budget", pre, "budget", out.fault.message, checked)
            return ContractCheck("counterexample", pre, "fault", out.fault.message, checked)
        post = dict(out.env)
        post.update({l: v for l, v in pre.items() if l.kind == "param"})
        if not eval_formula(post_f, _reader(pre, post, out.result)):
            return ContractCheck("counterexample", pre, "ensures", "ensures violated", checked)
        if assigned is not None:
            changed = sorted((l for l in store if post[l] != pre[l]), key=lambda l: l.sort_key)
            outside = [l for l in changed if l not in assigned]
            if outside:
                return ContractCheck(
                    "counterexample", pre, "assigns", "writes outside assigns: " + ", ".join(map(str, outside)), checked
                )
    return ContractCheck("holds", None, None, "", checked)


def _reader(pre: dict, post: dict, result):
    def value_of(t):
        if isinstance(t, Old):
            return pre[t.loc]
        if isinstance(t, Var):
            return post[t.loc]
        if isinstance(t, Result):
            if result is None:
                raise KeyError("\\result")
            return result
        raise TypeError(t)

    return value_of


# --------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class FormulaCheck:
    holds_for_all: bool
    counterexample: Optional[dict] = field(default=None, compare=False)
    witness: Optional[dict] = field(default=None, compare=False)
    enumerated: int = 0

    @property
    def status(self) -> str:
        return "holds" if self.holds_for_all else "counterexample"

    @property
    def satisfiable(self) -> bool:
        return self.witness is not None


def _py_term(t: Term, names: dict) -> str:
    if isinstance(t, Int):
        return f"({t.value})"
    if isinstance(t, (Var, Old, Result)):
        return names[t]
    if isinstance(t, Neg):
        return f"(-{_py_term(t.arg, names)})"
    op = {Add: "+", Sub: "-", Mul: "*"}[type(t)]
    return f"({_py_term(t.left, names)} {op} {_py_term(t.right, names)})"


def _py_formula(f: Formula, names: dict) -> str:
    if isinstance(f, Cmp):
        return f"({_py_term(f.left, names)} {f.op} {_py_term(f.right, names)})"
    if isinstance(f, And):
        return "(" + " and ".join(_py_formula(a, names) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " or ".join(_py_formula(a, names) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {_py_formula(f.arg, names)})"
    if isinstance(f, Implies):
        return f"(not {_py_formula(f.left, names)} or {_py_formula(f.right, names)})"
    if isinstance(f, BoolConst):
        return "True" if f.value else "False"
    if isinstance(f, Valid):
        return "True"
    raise TypeError(f"not a formula: {f!r}")


def compile_formula(f: Formula, order: list):
    """A Python predicate taking the values of ``order`` (leaf terms) positionally."""
    names = {leaf: f"a{i}" for i, leaf in enumerate(order)}
    args = ", ".join(names[l] for l in order)
    src = f"lambda {args}: {_py_formula(f, names)}"
    return eval(src, {"__builtins__": {}})  # noqa: S307 - generated from our own AST


def check_formula(f: Formula, bounds=None, cap: int = DEFAULT_CAP, default=DEFAULT_DOMAIN) -> FormulaCheck:
    """Exhaustive evaluation over bounded leaves (``\\valid`` holds).

    ``bounds`` maps leaf terms or locations to ``(lo, hi)``; others use ``default``.
    """
    order = sorted(leaves(f), key=lambda t: (render_term(t), repr(t)))
    ranges, size = [], 1
    for leaf in order:
        r = None
        if bounds:
            r = bounds.get(leaf)
            if r is None and isinstance(leaf, Var):
                r = bounds.get(leaf.loc)
        lo, hi = r or default
        ranges.append(range(lo, hi + 1))
        size *= max(0, hi - lo + 1)
    if size > cap:
        raise EnumerationRefused(f"{size} environments exceed the cap of {cap}")
    pred = compile_formula(f, order)
    cex = wit = None
    n = 0
    if not order:
        n = 1
        if pred():
            wit = {}
        else:
            cex = {}
        return FormulaCheck(cex is None, cex, wit, n)
    for combo in itertools.product(*ranges):
        n += 1
        if pred(*combo):
            if wit is None:
                wit = dict(zip(order, combo))
        elif cex is None:
            cex = dict(zip(order, combo))
        if cex is not None and wit is not None:
            break
    return FormulaCheck(cex is None, cex, wit, n)
