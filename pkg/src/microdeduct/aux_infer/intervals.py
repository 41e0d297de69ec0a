"""Interval abstract interpretation over MicroC.

The analysis runs once over the whole program from the entry function,
inlining calls, so each helper sees the join of the states reaching its call
sites.  Bounds are ``None`` for an infinite side; an environment of ``None``
is unreachable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend.ast import (
    Assign,
    Call,
    CallStmt,
    Decl,
    FunctionDef,
    If,
    ModuleAst,
    Return,
    While,
)
from ..logic import (
    MACHINE_MAX,
    MACHINE_MIN,
    RESULT,
    Add,
    And,
    BoolConst,
    Cmp,
    Formula,
    Int,
    Location,
    Mul,
    Neg,
    Old,
    Or,
    Result,
    Sub,
    Term,
    Var,
    conjuncts,
)

WIDEN_AFTER = 3


@dataclass(frozen=True)
class Interval:
    lo: Optional[int] = None
    hi: Optional[int] = None

    @property
    def is_empty(self) -> bool:
        return self.lo is not None and self.hi is not None and self.lo > self.hi

    @property
    def is_top(self) -> bool:
        return self.lo is None and self.hi is None

    @property
    def finite(self) -> bool:
        return self.lo is not None or self.hi is not None

    def contains(self, v: int) -> bool:
        return (self.lo is None or self.lo <= v) and (self.hi is None or v <= self.hi)

    def leq(self, other: "Interval") -> bool:
        if self.is_empty:
            return True
        if other.is_empty:
            return False
        lo_ok = other.lo is None or (self.lo is not None and self.lo >= other.lo)
        hi_ok = other.hi is None or (self.hi is not None and self.hi <= other.hi)
        return lo_ok and hi_ok

    def join(self, o: "Interval") -> "Interval":
        if self.is_empty:
            return o
        if o.is_empty:
            return self
        lo = None if self.lo is None or o.lo is None else min(self.lo, o.lo)
        hi = None if self.hi is None or o.hi is None else max(self.hi, o.hi)
        return Interval(lo, hi)

    def meet(self, o: "Interval") -> "Interval":
        lo = o.lo if self.lo is None else self.lo if o.lo is None else max(self.lo, o.lo)
        hi = o.hi if self.hi is None else self.hi if o.hi is None else min(self.hi, o.hi)
        r = Interval(lo, hi)
        return EMPTY if r.is_empty else r

    def widen(self, o: "Interval") -> "Interval":
        if self.is_empty:
            return o
        if o.is_empty:
            return self
        lo = self.lo if (self.lo is not None and o.lo is not None and o.lo >= self.lo) else None
        hi = self.hi if (self.hi is not None and o.hi is not None and o.hi <= self.hi) else None
        return Interval(lo, hi)

    def narrow(self, o: "Interval") -> "Interval":
        if self.is_empty or o.is_empty:
            return EMPTY
        return Interval(o.lo if self.lo is None else self.lo, o.hi if self.hi is None else self.hi)

    def __neg__(self) -> "Interval":
        if self.is_empty:
            return EMPTY
        return Interval(None if self.hi is None else -self.hi, None if self.lo is None else -self.lo)

    def __add__(self, o: "Interval") -> "Interval":
        if self.is_empty or o.is_empty:
            return EMPTY
        lo = None if self.lo is None or o.lo is None else self.lo + o.lo
        hi = None if self.hi is None or o.hi is None else self.hi + o.hi
        return Interval(lo, hi)

    def __sub__(self, o: "Interval") -> "Interval":
        return self + (-o)

    def __mul__(self, o: "Interval") -> "Interval":
        if self.is_empty or o.is_empty:
            return EMPTY
        # four corners, with None as infinity of the right sign
        corners = [_mul_bound(a, b) for a in _bounds(self) for b in _bounds(o)]
        lo = None if any(c == "-inf" for c in corners) else min(c for c in corners if isinstance(c, int))
        hi = None if any(c == "+inf" for c in corners) else max(c for c in corners if isinstance(c, int))
        return Interval(lo, hi)

    def __str__(self) -> str:
        if self.is_empty:
            return "empty"
        lo = "-oo" if self.lo is None else str(self.lo)
        hi = "+oo" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"


EMPTY = Interval(1, 0)
TOP = Interval()
MACHINE = Interval(MACHINE_MIN, MACHINE_MAX)


def _bounds(i: Interval):
    return ("-inf" if i.lo is None else i.lo, "+inf" if i.hi is None else i.hi)


def _sign(x) -> int:
    if x == "-inf":
        return -1
    if x == "+inf":
        return 1
    return (x > 0) - (x < 0)


def _mul_bound(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return a * b
    s = _sign(a) * _sign(b)
    if s == 0:
        return 0
    return "+inf" if s > 0 else "-inf"


# --------------------------------------------------------------------------
# Environments (None = unreachable)


def env_join(a, b):
    if a is None:
        return b
    if b is None:
        return a
    keys = set(a) | set(b)
    return {k: a.get(k, TOP).join(b.get(k, TOP)) if k in a and k in b else TOP for k in keys}


def env_leq(a, b) -> bool:
    if a is None:
        return True
    if b is None:
        return False
    return all(k in a and a[k].leq(v) for k, v in b.items()) and all(k in b for k in a)


def env_widen(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return {k: a[k].widen(b[k]) if k in a and k in b else TOP for k in set(a) | set(b)}


def env_narrow(a, b):
    if a is None or b is None:
        return None if b is None else a
    return {k: a[k].narrow(b[k]) if k in b else a[k] for k in a}


def eval_interval(t: Term, value_of) -> Interval:
    if isinstance(t, Int):
        return Interval(t.value, t.value)
    if isinstance(t, (Var, Old, Result)):
        return value_of(t)
    if isinstance(t, Neg):
        return -eval_interval(t.arg, value_of)
    a = eval_interval(t.left, value_of)
    b = eval_interval(t.right, value_of)
    if isinstance(t, Add):
        return a + b
    if isinstance(t, Sub):
        return a - b
    if isinstance(t, Mul):
        return a * b
    raise TypeError(f"not a term: {t!r}")


def _flip(op: str) -> str:
    return {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}[op]


def _restrict(i: Interval, op: str, r: Interval) -> Interval:
    """Values of ``i`` that may satisfy ``x op y`` for some ``y`` in ``r``."""
    if r.is_empty:
        return EMPTY
    if op == "<=":
        return i.meet(Interval(None, r.hi))
    if op == "<":
        return i.meet(Interval(None, None if r.hi is None else r.hi - 1))
    if op == ">=":
        return i.meet(Interval(r.lo, None))
    if op == ">":
        return i.meet(Interval(None if r.lo is None else r.lo + 1, None))
    if op == "==":
        return i.meet(r)
    # x != c only refines at the interval ends
    if r.lo is not None and r.lo == r.hi and not i.is_empty:
        c = r.lo
        if i.lo == c:
            i = Interval(c + 1, i.hi)
        if i.hi == c:
            i = Interval(i.lo, c - 1)
        return EMPTY if i.is_empty else i
    return i


# --------------------------------------------------------------------------
# Whole-program analysis


@dataclass
class IntervalResult:
    """Intervals keyed by each function's own view of locations.

    ``points[(fn, span)]`` holds the state after a simple statement,
    ``entry[fn]`` the joined state at function entry, ``exit[fn]`` the joined
    state at return (with ``\\result``).
    """

    points: dict = field(default_factory=dict)
    entry: dict = field(default_factory=dict)
    exit: dict = field(default_factory=dict)
    loop_iterations: dict = field(default_factory=dict)
    program_points: int = 0


def seed_env(m: ModuleAst, f: FunctionDef, requires: Formula) -> dict:
    """Entry state from ``v op c`` / ``c op v`` conjuncts; everything else is dropped."""
    env = {loc: TOP for loc in _view_locations(m, f)}
    for c in conjuncts(requires):
        if not isinstance(c, Cmp):
            continue
        l, r, op = c.left, c.right, c.op
        if isinstance(r, (Var, Old)) and isinstance(l, Int):
            l, r, op = r, l, _flip(op)
        if isinstance(l, (Var, Old)) and isinstance(r, Int) and l.loc in env:
            env[l.loc] = _restrict(env[l.loc], op, Interval(r.value, r.value))
    return {k: v.meet(MACHINE) for k, v in env.items()}


def _view_locations(m: ModuleAst, f: FunctionDef) -> list:
    return list(m.global_locations) + list(f.param_locations) + list(f.deref_locations)


class _Frame:
    def __init__(self, fn: FunctionDef, refs: dict):
        self.fn = fn
        self.refs = refs  # ref param name -> root location
        self.returned = None  # joined env at returns
        self.result = EMPTY


class IntervalAnalyzer:
    def __init__(self, m: ModuleAst, widen_after: int = WIDEN_AFTER):
        self.m = m
        self.widen_after = widen_after
        self.res = IntervalResult()
        self.recording = True
        self.res.program_points = sum(1 for f in m.functions for _ in _points(f.body))

    # views --------------------------------------------------------------
    def root(self, frame: _Frame, loc: Location) -> Location:
        return frame.refs[loc.name] if loc.kind == "deref" else loc

    def view(self, env: dict, frame: _Frame) -> dict:
        out = {}
        for g in self.m.global_locations:
            out[g] = env[g]
        for loc, v in env.items():
            if loc.owner == frame.fn.name and loc.kind in ("param", "local"):
                out[loc] = v
        for p in frame.fn.ref_params:
            out[frame.fn.deref_loc(p)] = env[frame.refs[p.name]]
        return out

    def _record(self, table: dict, key, view: dict):
        if self.recording:
            table[key] = env_join(table.get(key), view)

    def term(self, t: Term, env: dict, frame: _Frame) -> Interval:
        return eval_interval(t, lambda leaf: env.get(self.root(frame, leaf.loc), TOP) if isinstance(leaf, Var) else TOP)

    # conditions ------------------------------------------------------------
    def filter(self, f: Formula, env, frame: _Frame, positive: bool = True):
        if env is None:
            return None
        if isinstance(f, BoolConst):
            return env if f.value == positive else None
        if isinstance(f, Cmp):
            op = f.op
            if not positive:
                op = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}[op]
            env = dict(env)
            for side, other, o in ((f.left, f.right, op), (f.right, f.left, _flip(op))):
                if isinstance(side, Var):
                    r = self.root(frame, side.loc)
                    cur = env.get(r, TOP)
                    new = _restrict(cur, o, self.term(other, env, frame))
                    if new.is_empty:
                        return None
                    env[r] = new
            # a comparison between constants-only intervals may still be empty
            a, b = self.term(f.left, env, frame), self.term(f.right, env, frame)
            if _definitely_false(op, a, b):
                return None
            return env
        from ..logic import Implies, Not

        if isinstance(f, Not):
            return self.filter(f.arg, env, frame, not positive)
        if isinstance(f, Implies):
            return self.filter(Or((Not(f.left), f.right)), env, frame, positive)
        conj_like = isinstance(f, And) == positive
        if conj_like:
            for a in f.args:
                env = self.filter(a, env, frame, positive)
                if env is None:
                    return None
            return env
        out = None
        for a in f.args:
            out = env_join(out, self.filter(a, env, frame, positive))
        return out

    # statements --------------------------------------------------------------
    def block(self, stmts, env, frame: _Frame):
        for s in stmts:
            if env is None:
                return None
            env = self.stmt(s, env, frame)
        return env

    def stmt(self, s, env: dict, frame: _Frame):
        if isinstance(s, (Decl, Assign)):
            target = s.loc if isinstance(s, Decl) else self.root(frame, s.target)
            value = s.init if isinstance(s, Decl) else s.value
            if isinstance(value, Call):
                env, r = self.call(value, env, frame)
                if env is None:
                    return None
            else:
                r = self.term(value, env, frame)
            env = dict(env)
            env[target] = r
            self._record(self.res.points, (frame.fn.name, s.span), self.view(env, frame))
            return env
        if isinstance(s, CallStmt):
            env, _ = self.call(s.call, env, frame)
            if env is not None:
                self._record(self.res.points, (frame.fn.name, s.span), self.view(env, frame))
            return env
        if isinstance(s, Return):
            r = EMPTY if s.value is None else self.term(s.value, env, frame)
            frame.returned = env_join(frame.returned, env)
            frame.result = frame.result.join(r)
            return None
        if isinstance(s, If):
            t = self.block(s.then, self.filter(s.cond, env, frame), frame)
            e = self.block(s.orelse, self.filter(s.cond, env, frame, False), frame)
            return env_join(t, e)
        if isinstance(s, While):
            return self.loop(s, env, frame)
        raise TypeError(f"not a statement: {s!r}")

    def loop(self, s: While, env: dict, frame: _Frame):
        was = self.recording
        self.recording = False
        head = env
        n = 0
        while True:
            n += 1
            body = self.block(s.body, self.filter(s.cond, head, frame), frame)
            new = env_join(env, body)
            if env_leq(new, head):
                break
            head = env_widen(head, new) if n > self.widen_after else env_join(head, new)
        # one narrowing pass
        body = self.block(s.body, self.filter(s.cond, head, frame), frame)
        head = env_narrow(head, env_join(env, body))
        self.res.loop_iterations[(frame.fn.name, s.span)] = max(n, self.res.loop_iterations.get((frame.fn.name, s.span), 0))
        self.recording = was
        if was:
            self.block(s.body, self.filter(s.cond, head, frame), frame)
        return self.filter(s.cond, head, frame, False)

    def call(self, c: Call, env: dict, frame: _Frame):
        callee = self.m.function(c.callee)
        refs = {}
        inner_env = {k: v for k, v in env.items()}
        for p, a in zip(callee.params, c.args):
            if p.is_ref:
                refs[p.name] = self.root(frame, a.loc)
            else:
                inner_env[callee.param_loc(p)] = self.term(a, env, frame).meet(MACHINE)
        for g in self.m.global_locations:
            inner_env[g] = inner_env[g].meet(MACHINE)
        inner = _Frame(callee, refs)
        self._record(self.res.entry, callee.name, self.view(inner_env, inner))
        out = self.run(inner, inner_env)
        if out is None:
            return None, EMPTY
        out = {k: v for k, v in out.items() if not (k.owner == callee.name and k.kind in ("param", "local"))}
        for g in self.m.global_locations:
            out[g] = out[g].meet(MACHINE)
        return out, inner.result.meet(MACHINE) if callee.returns_int else TOP

    def run(self, frame: _Frame, env: dict):
        fall = self.block(frame.fn.body, env, frame)
        final = env_join(frame.returned, fall)
        if final is not None:
            view = self.view(final, frame)
            if frame.fn.returns_int:
                view[RESULT] = frame.result
            self._record(self.res.exit, frame.fn.name, view)
        return final


def _points(stmts):
    from ..frontend.ast import walk

    for s in walk(stmts):
        if isinstance(s, (Decl, Assign, CallStmt)):
            yield s


def _definitely_false(op: str, a: Interval, b: Interval) -> bool:
    if a.is_empty or b.is_empty:
        return True
    if op == "<=":
        return a.lo is not None and b.hi is not None and a.lo > b.hi
    if op == "<":
        return a.lo is not None and b.hi is not None and a.lo >= b.hi
    if op == ">=":
        return _definitely_false("<=", b, a)
    if op == ">":
        return _definitely_false("<", b, a)
    if op == "==":
        return a.meet(b).is_empty
    return a.lo is not None and a.lo == a.hi == b.lo == b.hi


def analyze_intervals(m: ModuleAst, widen_after: int = WIDEN_AFTER) -> IntervalResult:
    """Whole-program fixpoint from the entry requires, calls inlined."""
    an = IntervalAnalyzer(m, widen_after)
    entry = m.function(m.entry)
    env = seed_env(m, entry, entry.contract.pre if entry.contract else BoolConst(True))
    refs = {p.name: entry.deref_loc(p) for p in entry.ref_params}
    frame = _Frame(entry, refs)
    an._record(an.res.entry, entry.name, dict(env))
    an.run(frame, env)
    return an.res


def analyze_function(m: ModuleAst, fn: str, env: dict) -> IntervalResult:
    """Analyse ``fn`` alone from ``env`` (its own view), inlining callees."""
    an = IntervalAnalyzer(m)
    f = m.function(fn)
    refs = {p.name: f.deref_loc(p) for p in f.ref_params}
    frame = _Frame(f, refs)
    start = {k: v for k, v in env.items()}
    for loc in _view_locations(m, f):
        start.setdefault(loc, MACHINE)
    an._record(an.res.entry, fn, dict(start))
    an.run(frame, start)
    return an.res
