"""Weakest-precondition verification conditions and their discharge.

Each function yields one VC per obligation.  A VC is generated by running
``wp`` over the whole body with a *focus*: the focused obligation is
asserted, every other one is assumed (it has a VC of its own).  Call sites
use only the callee's contract.  Loops use their invariant; a ghost flag per
loop (``passed$k``) records whether a path went through it, so the final
postcondition is checked once for loop-free paths (``f/ensures``) and once
per loop for paths leaving it (``f/loop#k/exit``).

Values produced by calls and loops are Skolemized into fresh names, each
typed as a 32-bit integer, as are the function's inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .aux_infer.effects import bind_location, effects, stmt_writes
from .frontend.ast import (
    Assign,
    Call,
    CallStmt,
    Decl,
    FunctionDef,
    If,
    ModuleAst,
    Ref,
    Return,
    NO_SPAN,
    Span,
    While,
    call_of,
    site_index,
    walk,
)
from .logic import (
    FALSE,
    MACHINE_MAX,
    MACHINE_MIN,
    TRUE,
    Formula,
    Int,
    Location,
    Not,
    Old,
    Result,
    Var,
    conj,
    eq,
    implies,
    in_range,
    map_formula,
    normalize_ensures,
    render_formula,
    simplify,
    substitute,
)
from .solver import SolverLimits, check_valid


class WPError(Exception):
    """A VC cannot be generated (missing contract or invariant)."""

    def __init__(self, message: str, span: Span = NO_SPAN):
        super().__init__(message)
        self.span = span


@dataclass(frozen=True)
class VC:
    name: str
    hypothesis: Formula
    goal: Formula
    span: Span = field(default=NO_SPAN, compare=False)
    function: str = ""
    kind: str = ""

    @property
    def formula(self) -> Formula:
        return implies(self.hypothesis, self.goal)


@dataclass(frozen=True)
class VCResult:
    vc: VC
    status: str  # verified | failed | unknown
    countermodel: Optional[dict] = None  # printed name -> value
    reason: Optional[str] = None


@dataclass
class Report:
    results: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if any(r.status == "failed" for r in self.results):
            return "failed"
        if any(r.status == "unknown" for r in self.results):
            return "unknown"
        return "verified"

    @property
    def verified_count(self) -> int:
        return sum(r.status == "verified" for r in self.results)

    def result(self, name: str) -> VCResult:
        for r in self.results:
            if r.vc.name == name:
                return r
        raise KeyError(name)

    @property
    def names(self) -> list:
        return [r.vc.name for r in self.results]


def _typed(t) -> Formula:
    return in_range(t, MACHINE_MIN, MACHINE_MAX)


def _fresh(tag: str) -> Var:
    return Var(Location("logic", tag))


def ghost(k: int) -> Location:
    return Location("logic", f"passed${k}")


# --------------------------------------------------------------------------
# The calculus


class _WP:
    def __init__(self, m: ModuleAst, f: FunctionDef, focus, eff: dict):
        self.m = m
        self.f = f
        self.focus = focus  # ("ensures",) | ("call", span) | ("init"|"preserve"|"exit", k)
        self.eff = eff
        self.sites = site_index(f)
        self.loops = {s.span: k for k, s in enumerate((s for s in walk(f.body) if isinstance(s, While)), 1)}

    def block(self, stmts, q: Formula, r: Formula) -> Formula:
        for s in reversed(stmts):
            q = self.stmt(s, q, r)
        return q

    def stmt(self, s, q: Formula, r: Formula) -> Formula:
        if isinstance(s, (Decl, Assign)):
            target = s.loc if isinstance(s, Decl) else s.target
            value = s.init if isinstance(s, Decl) else s.value
            if isinstance(value, Call):
                return self.call(value, target, q)
            return substitute(q, {target: value})
        if isinstance(s, CallStmt):
            return self.call(s.call, None, q)
        if isinstance(s, Return):
            if s.value is None:
                return r
            return map_formula(r, lambda t: s.value if isinstance(t, Result) else None)
        if isinstance(s, If):
            a = self.block(s.then, q, r)
            b = self.block(s.orelse, q, r)
            return simplify(conj(implies(s.cond, a), implies(Not(s.cond), b)))
        if isinstance(s, While):
            return self.loop(s, q, r)
        raise TypeError(f"not a statement: {s!r}")

    # calls ----------------------------------------------------------------
    def call(self, c: Call, target: Optional[Location], q: Formula) -> Formula:
        callee = self.m.function(c.callee)
        if callee.contract is None or callee.contract.is_empty():
            raise WPError(f"missing contract for '{c.callee}' called from '{self.f.name}'", c.span)
        k = self.sites[c.span]
        tag = f"{c.callee}#{k}"
        contract = callee.contract
        footprint = contract.assigned
        if footprint is None:
            footprint = self.eff[c.callee]
        # callee vocabulary -> caller terms at the call
        pre_map, cells = {}, {}
        for p, a in zip(callee.params, c.args):
            if p.is_ref:
                assert isinstance(a, Ref)
                cells[callee.deref_loc(p)] = a.loc
                pre_map[callee.deref_loc(p)] = Var(a.loc)
            else:
                pre_map[callee.param_loc(p)] = a
        pre = map_formula(contract.pre, lambda t: pre_map.get(t.loc) if isinstance(t, Var) else None, lambda _: TRUE)

        written = []
        for loc in sorted(footprint, key=lambda l: l.sort_key):
            b = bind_location(loc, callee, c, self.f.name)
            if b is not None:
                written.append((loc, b))
        fresh = {b: _fresh(f"{tag}.{b}") for _, b in written}
        result = _fresh(f"{tag}.\\result") if callee.returns_int else None

        post = normalize_ensures(contract.post, footprint)

        def post_leaf(t):
            if isinstance(t, Result):
                return result
            loc = t.loc
            if isinstance(t, Old) or loc.kind == "param":
                return pre_map.get(loc, Var(loc) if loc.kind == "global" else None)
            b = cells.get(loc, loc)
            return fresh.get(b)

        post = map_formula(post, post_leaf, lambda _: TRUE)
        mapping = dict(fresh)
        if target is not None:
            mapping[target] = result
        q2 = substitute(q, mapping)
        typing = conj(*(_typed(v) for v in fresh.values()), *([_typed(result)] if result is not None else []))
        body = implies(conj(typing, post), q2)
        if self.focus == ("call", c.span):
            return conj(pre, body)
        return implies(pre, body)

    # loops ----------------------------------------------------------------
    def loop(self, s: While, q: Formula, r: Formula) -> Formula:
        k = self.loops[s.span]
        inv = s.invariant
        written = sorted(stmt_writes(self.m, self.f.name, s.body, self.eff), key=lambda l: l.sort_key)
        havoc = {l: _fresh(f"loop#{k}.{l}") for l in written}
        typing = conj(*(_typed(v) for v in havoc.values()))
        body_post = inv if self.focus == ("preserve", k) else TRUE
        body = self.block(s.body, body_post, TRUE)
        after = substitute(q, {ghost(k): Int(1)})
        inner = conj(
            implies(conj(inv, s.cond), body),
            implies(conj(inv, Not(s.cond)), after),
        )
        inner = implies(typing, substitute(inner, havoc))
        if self.focus == ("init", k):
            return conj(inv, inner)
        return implies(inv, inner)


def _entry_hypothesis(m: ModuleAst, f: FunctionDef) -> Formula:
    typing = [_typed(Var(g)) for g in m.global_locations]
    typing += [_typed(Var(l)) for l in f.param_locations]
    typing += [_typed(Var(l)) for l in f.deref_locations]
    pre = f.contract.pre if f.contract is not None else TRUE
    return conj(*typing, pre)


def _finish(f: Formula) -> Formula:
    """Pre-state = entry state; ghost flags start at 0."""

    def leaf(t):
        if isinstance(t, Old):
            return Var(t.loc)
        if isinstance(t, Var) and t.loc.kind == "logic" and t.loc.name.startswith("passed$"):
            return Int(0)
        return None

    return simplify(map_formula(f, leaf))


def wp(stmts, post: Formula, m: ModuleAst = None, f: FunctionDef = None, result_post: Formula = None) -> Formula:
    """Weakest precondition of ``stmts`` for ``post`` with every obligation asserted.

    Calls and loops need ``m`` and ``f`` for their contracts and names.  A
    ``return`` establishes ``result_post`` (default: ``post``).
    """
    if f is None:
        f = FunctionDef("_", (), False, tuple(stmts))
    if m is None:
        m = ModuleAst((), (f,), f.name)
    calc = _AllWP(m, f, effects(m))
    return simplify(calc.block(tuple(stmts), post, post if result_post is None else result_post))


class _AllWP(_WP):
    """Every call-site requires and loop invariant asserted in one formula."""

    def __init__(self, m, f, eff):
        super().__init__(m, f, None, eff)

    def call(self, c, target, q):
        self.focus = ("call", c.span)
        try:
            return super().call(c, target, q)
        finally:
            self.focus = None

    def loop(self, s, q, r):
        k = self.loops[s.span]
        inv = s.invariant
        written = sorted(stmt_writes(self.m, self.f.name, s.body, self.eff), key=lambda l: l.sort_key)
        havoc = {l: _fresh(f"loop#{k}.{l}") for l in written}
        typing = conj(*(_typed(v) for v in havoc.values()))
        body = self.block(s.body, inv, TRUE)
        inner = conj(implies(conj(inv, s.cond), body), implies(conj(inv, Not(s.cond)), q))
        return conj(inv, implies(typing, substitute(inner, havoc)))


# --------------------------------------------------------------------------
# VC generation


def _obligations(f: FunctionDef) -> list:
    """(name, focus, span, kind) in source order after the ensures VC."""
    out = [(f"{f.name}/ensures", ("ensures",), f.span, "ensures")]
    idx = site_index(f)
    loop_k = 0
    for s in walk(f.body):
        if isinstance(s, While):
            loop_k += 1
            for kind in ("init", "preserve", "exit"):
                out.append((f"{f.name}/loop#{loop_k}/{kind}", (kind, loop_k), s.span, f"loop-{kind}"))
        c = call_of(s)
        if c is not None:
            k = idx[c.span]
            suffix = "" if k == 1 else f"#{k}"
            out.append((f"{f.name}/call:{c.callee}/requires{suffix}", ("call", c.span), c.span, "call-requires"))
    return out


def function_vcs(m: ModuleAst, f: FunctionDef, eff: Optional[dict] = None) -> list:
    eff = eff if eff is not None else effects(m)
    hyp = _entry_hypothesis(m, f)
    post = f.contract.post if f.contract is not None else TRUE
    nloops = sum(1 for s in walk(f.body) if isinstance(s, While))
    vcs = []
    for name, focus, span, kind in _obligations(f):
        if focus[0] == "ensures":
            guard = conj(*(eq(Var(ghost(k)), Int(0)) for k in range(1, nloops + 1)))
            r = implies(guard, post)
        elif focus[0] == "exit":
            r = implies(eq(Var(ghost(focus[1])), Int(1)), post)
        else:
            r = TRUE
        calc = _WP(m, f, focus, eff)
        goal = _finish(calc.block(f.body, r, r))
        vcs.append(VC(name, hyp, goal, span, f.name, kind))
    # frame: every location the body may write must be declared
    declared = f.contract.assigned if f.contract is not None else None
    if declared is not None:
        for loc in sorted(eff[f.name], key=lambda l: l.sort_key):
            vcs.append(VC(f"{f.name}/assigns:{loc}", TRUE, TRUE if loc in declared else FALSE, f.span, f.name, "assigns"))
    return vcs


def generate_vcs(m: ModuleAst) -> list:
    """All VCs of the module; helpers without a contract are an error."""
    for h in m.helpers:
        if h.contract is None or h.contract.is_empty():
            raise WPError(f"missing contract for helper '{h.name}'", h.span)
    eff = effects(m)
    out = []
    for f in m.functions:
        out.extend(function_vcs(m, f, eff))
    return out


def discharge(vc: VC, limits: SolverLimits = SolverLimits()) -> VCResult:
    v = check_valid(vc.formula, limits)
    if v.valid:
        return VCResult(vc, "verified")
    if v.is_sat:
        model = {k: val for k, val in sorted(v.named_model().items())}
        return VCResult(vc, "failed", model)
    return VCResult(vc, "unknown", None, v.reason)


def verify(m: ModuleAst, limits: SolverLimits = SolverLimits()) -> Report:
    t0 = time.perf_counter()
    report = Report()
    for h in m.helpers:
        if h.contract is not None and h.contract.pre == FALSE:
            report.warnings.append(f"helper '{h.name}' has requires \\false; its VCs hold vacuously")
    for vc in generate_vcs(m):
        report.results.append(discharge(vc, limits))
    report.timings["wp"] = time.perf_counter() - t0
    return report


def describe(r: VCResult) -> str:
    line = f"{r.vc.name} [{r.vc.span}]: {r.status}"
    if r.countermodel:
        line += " countermodel {" + ", ".join(f"{k} = {v}" for k, v in r.countermodel.items()) + "}"
    if r.reason:
        line += f" ({r.reason})"
    return line


__all__ = [
    "Report",
    "VC",
    "VCResult",
    "WPError",
    "describe",
    "discharge",
    "function_vcs",
    "generate_vcs",
    "render_formula",
    "verify",
    "wp",
]
