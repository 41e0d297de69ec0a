"""Functional contract inference by forward symbolic execution.

Functions are processed callers first.  Each one is executed symbolically
from its requires (the entry from its user requires, a helper from the
disjunction of the contexts recorded at its call sites), with callee bodies
inlined, so the strongest postcondition of the run is exact for loop-free
code.  While executing ``f`` the context reaching each direct call site is
projected onto the callee's vocabulary; the final states give ``f``'s
ensures.

Symbols: a global or ``*p`` cell at function entry is ``\\old(x)``; a value
parameter is itself (parameters are immutable); values produced by loop
havoc are fresh ``logic`` locations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from .aux_infer.effects import effects, stmt_writes
from .frontend.ast import (
    Assign,
    Call,
    CallStmt,
    Clause,
    Contract,
    Decl,
    FunctionDef,
    If,
    ModuleAst,
    Return,
    Span,
    While,
    site_index,
)
from .frontend.validate import accessed_globals, aliased_globals, call_graph, ref_targets
from .logic import (
    FALSE,
    LEAF_TYPES,
    RESULT,
    TRUE,
    And,
    BoolConst,
    Cmp,
    Formula,
    Int,
    Location,
    Not,
    Old,
    Or,
    Sub,
    Term,
    Var,
    _leaf_key,
    _term_poly,
    canonical_term,
    conj,
    disj,
    eq,
    factor_disjunction,
    leaves,
    map_formula,
    map_term,
    negate,
    render_formula,
    simplify,
    term_leaves,
    valid_atoms,
)
from .solver import SolverLimits, check_sat, nnf
from .solver.linear import Infeasible, dedupe, eliminate, normalize

log = logging.getLogger(__name__)


class InferenceFailure(Exception):
    """Inference gave up (path explosion); distinct from a failed proof."""


@dataclass(frozen=True)
class FuncInferConfig:
    state_cap: int = 4096
    prune: bool = True  # drop branches whose path condition is unsatisfiable
    solver: SolverLimits = SolverLimits(node_budget=50_000)


@dataclass(frozen=True)
class CallSiteSummary:
    callee: str
    caller: str
    site: Span
    context: Formula
    binding: tuple  # (param name, Term) pairs for value parameters, one per state

    @property
    def site_id(self) -> str:
        return f"{self.caller}@{self.site}"


@dataclass(frozen=True)
class SymbolicState:
    store: dict
    path: tuple = ()
    ret: Optional[Term] = None
    done: bool = False

    def assume(self, f: Formula) -> "SymbolicState":
        return replace(self, path=self.path + tuple(c for c in _conjuncts(f) if c != TRUE))

    def set(self, loc: Location, value: Term) -> "SymbolicState":
        store = dict(self.store)
        store[loc] = value
        return replace(self, store=store)

    @property
    def path_formula(self) -> Formula:
        return conj(*self.path)


def _conjuncts(f: Formula):
    return f.args if isinstance(f, And) else (f,)


@dataclass
class FunctionalResult:
    module: ModuleAst
    summaries: list
    requires: dict
    ensures: dict
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class _Frame:
    fn: str
    refs: dict  # ref param name -> root location


# --------------------------------------------------------------------------
# Formula helpers


def canonical_formula(f: Formula) -> Formula:
    """Canonical polynomial sides on every comparison, then simplify."""

    def walk(g):
        if isinstance(g, Cmp):
            return Cmp(g.op, canonical_term(g.left), canonical_term(g.right))
        if isinstance(g, And):
            return conj(*(walk(a) for a in g.args))
        if isinstance(g, Or):
            return disj(*(walk(a) for a in g.args))
        if isinstance(g, Not):
            return negate(walk(g.arg)) if isinstance(g.arg, (Cmp, BoolConst)) else Not(walk(g.arg))
        return g

    return simplify(walk(f))


def _weaken(f: Formula, ok, dropped: list) -> Formula:
    """Replace atoms of an NNF formula that mention a leaf outside ``ok`` by true."""
    if isinstance(f, Cmp):
        if all(ok(leaf) for t in (f.left, f.right) for leaf in term_leaves(t)):
            return f
        dropped.append(f)
        return TRUE
    if isinstance(f, And):
        return conj(*(_weaken(a, ok, dropped) for a in f.args))
    if isinstance(f, Or):
        return disj(*(_weaken(a, ok, dropped) for a in f.args))
    return f


def _solve_symbols(view: list, is_symbol) -> dict:
    """Map symbols to terms over visible names using ``name == term`` facts.

    Exact matches first, then terms linear in one unmapped symbol with a unit
    coefficient, until nothing changes.  ``view`` is a list of (name, term).
    """
    mapping = {}
    for v, t in view:
        if isinstance(t, LEAF_TYPES) and is_symbol(t) and t not in mapping:
            mapping[t] = v
    changed = True
    while changed:
        changed = False
        for v, t in view:
            p = _term_poly(t)
            if any(len(m) > 1 for m in p):
                continue
            unmapped = [m[0] for m in p if m and is_symbol(m[0]) and m[0] not in mapping]
            if len(unmapped) != 1 or abs(p[(unmapped[0],)]) != 1:
                continue
            s = unmapped[0]
            if any(m and not is_symbol(m[0]) for m in p):
                continue
            c = p[(s,)]
            rest = _poly_term({m: k for m, k in p.items() if m != (s,)}, mapping)
            expr = canonical_term(_sub(v, rest) if c == 1 else _sub(rest, v))
            mapping[s] = expr
            changed = True
    return mapping


def _sub(a: Term, b: Term) -> Term:
    from .logic import Sub

    return Sub(a, b)


def _poly_term(p: dict, mapping: dict) -> Term:
    from .logic import Add, Mul

    out = Int(0)
    for m, c in p.items():
        t = Int(c)
        for leaf in m:
            t = Mul(t, mapping.get(leaf, leaf))
        out = Add(out, t)
    return canonical_term(out)


def project(path: Formula, view: list, is_symbol, dropped: list) -> Formula:
    """Express ``path`` plus the ``name == term`` facts of ``view`` over the
    names of ``view`` alone, weakening whatever cannot be expressed."""
    mapping = _solve_symbols(view, is_symbol)

    def sub_term(t):
        return canonical_term(map_term(t, lambda leaf: mapping.get(leaf)))

    facts = []
    for v, t in view:
        t2 = sub_term(t)
        if t2 != v:
            facts.append(eq(v, t2))
    body = map_formula(path, lambda leaf: mapping.get(leaf))
    f = nnf(conj(*facts, body))
    visible = {v for v, _ in view}
    ok = lambda leaf: leaf in visible or not is_symbol(leaf)  # noqa: E731
    f = _fm_project(f, ok)
    f = _weaken(f, ok, dropped)
    return canonical_formula(f)


_FM_LIMIT = 200


def _le_polys(c: Cmp) -> Optional[list]:
    """``c`` as polynomials ``p <= 0`` (None for ``!=``)."""
    p = _term_poly(Sub(c.left, c.right))
    neg = {m: -k for m, k in p.items()}
    plus1 = lambda q: {**q, (): q.get((), 0) + 1}  # noqa: E731
    return {
        "<=": [p],
        "<": [plus1(p)],
        ">=": [neg],
        ">": [plus1(neg)],
        "==": [p, neg],
    }.get(c.op)


def _fm_project(f: Formula, ok) -> Formula:
    """Eliminate hidden leaves from the linear top-level conjuncts by Fourier-Motzkin.

    Only conjuncts whose hidden leaves occur linearly take part; the result
    is the rational shadow, tightened to integers, so it is implied by the
    input (a sound weakening).  Everything else is returned unchanged.
    """
    parts = list(_conjuncts(f))
    hidden_of = lambda c: {x for x in leaves(c) if not ok(x)}  # noqa: E731
    pool, kept = [], []
    for c in parts:
        hidden = hidden_of(c)
        polys = _le_polys(c) if hidden and isinstance(c, Cmp) else None
        if polys is None or any(len(m) > 1 and any(not ok(x) for x in m) for q in polys for m in q):
            kept.append(c)
            continue
        pool.extend(polys)
    if not pool:
        return f
    # the linear module wants orderable atom keys
    monos = {}
    key = lambda m: "*".join(_leaf_key(x)[0] + "#" + _leaf_key(x)[1] for x in m)  # noqa: E731
    cons = []
    try:
        for q in pool:
            for m in q:
                if m:
                    monos[key(m)] = m
            r = normalize({key(m): k for m, k in q.items() if m}, q.get((), 0))
            if r is not None:
                cons.append(r)
        cons = dedupe(cons)
        hidden = sorted({key(m) for m in monos.values() if len(m) == 1 and not ok(m[0])})
        for x in hidden:
            cons, _ = eliminate(cons, x)
            if len(cons) > _FM_LIMIT:
                return f
    except Infeasible:
        return FALSE
    cons = [({monos[k]: v for k, v in c.items()}, k) for c, k in cons]
    cons = [c for c in cons if all(ok(x) for m in c[0] for x in m)]
    return conj(*kept, *_constraints_formula(cons))


def _constraints_formula(cons: list) -> list:
    """``coeffs . m + k <= 0`` back to comparisons; opposite pairs become ``==``."""
    from .logic import Add, Mul

    def lhs(coeffs):
        t = Int(0)
        for m, k in sorted(coeffs.items(), key=lambda mk: [_leaf_key(x) for x in mk[0]]):
            term = Int(k)
            for x in m:
                term = Mul(term, x)
            t = Add(t, term)
        return canonical_term(t)

    keyed = {tuple(sorted(((tuple(map(_leaf_key, m)), k) for m, k in c.items()))): (c, k) for c, k in cons}
    out, used = [], set()
    for key, (coeffs, k) in keyed.items():
        if key in used:
            continue
        neg_key = tuple(sorted((m, -v) for m, v in key))
        other = keyed.get(neg_key)
        if other is not None and other[1] == -k:
            used.add(neg_key)
            out.append(Cmp("==", lhs(coeffs), Int(-k)))
        else:
            out.append(Cmp("<=", lhs(coeffs), Int(-k)))
        used.add(key)
    return out


def _locations(f: Formula) -> set:
    return {leaf.loc for leaf in leaves(f) if isinstance(leaf, (Var, Old))} | set(valid_atoms(f))


def slice_relevant(f: Formula, relevant) -> Formula:
    """Keep the top-level conjuncts connected to ``relevant`` through shared locations.

    The dropped conjuncts constrain only locations the kept ones never
    mention, so for satisfiable inputs the projection onto ``relevant`` is
    unchanged.
    """
    parts = [(c, _locations(c)) for c in _conjuncts(f)]
    reach = set(relevant)
    keep = [False] * len(parts)
    changed = True
    while changed:
        changed = False
        for i, (c, locs) in enumerate(parts):
            if not keep[i] and (locs & reach or not locs):
                keep[i] = True
                reach |= locs
                changed = True
    return conj(*(c for (c, _), k in zip(parts, keep) if k))


# --------------------------------------------------------------------------
# Symbolic executor


class SymbolicExecutor:
    def __init__(self, m: ModuleAst, config: FuncInferConfig, record_in: Optional[str] = None):
        self.m = m
        self.config = config
        self.record_in = record_in
        self.eff = effects(m)
        self.accessed = accessed_globals(m)
        self.targets = ref_targets(m)
        self.sites = {}  # (callee, span, index) -> list of (context, binding)
        self.site_order = []
        self.notes = []
        self.fresh = 0

    # evaluation -----------------------------------------------------------
    def root(self, frame: _Frame, loc: Location) -> Location:
        if loc.kind == "deref":
            return frame.refs[loc.name]
        return loc

    def term(self, t: Term, st: SymbolicState, frame: _Frame) -> Term:
        def leaf(x):
            if isinstance(x, Var):
                return st.store[self.root(frame, x.loc)]
            return None

        return canonical_term(map_term(t, leaf))

    def cond(self, f: Formula, st: SymbolicState, frame: _Frame) -> Formula:
        def leaf(x):
            if isinstance(x, Var):
                return st.store[self.root(frame, x.loc)]
            return None

        return canonical_formula(map_formula(f, leaf, lambda loc: TRUE))

    def feasible(self, st: SymbolicState) -> bool:
        if not self.config.prune:
            return True
        if any(c == FALSE for c in st.path):
            return False
        return not check_sat(st.path_formula, self.config.solver).is_unsat

    def havoc(self, fn: str) -> Term:
        self.fresh += 1
        return Var(Location("logic", f"{fn}$h{self.fresh}"))

    def _cap(self, states: list) -> list:
        if len(states) > self.config.state_cap:
            raise InferenceFailure(f"path explosion: more than {self.config.state_cap} symbolic states")
        return states

    # statements -----------------------------------------------------------
    def block(self, stmts, states: list, frame: _Frame) -> list:
        for s in stmts:
            live = [st for st in states if not st.done]
            if not live:
                break
            finished = [st for st in states if st.done]
            states = finished + self.stmt(s, live, frame)
            self._cap(states)
        return states

    def stmt(self, s, states: list, frame: _Frame) -> list:
        if isinstance(s, (Decl, Assign)):
            target = s.loc if isinstance(s, Decl) else self.root(frame, s.target)
            value = s.init if isinstance(s, Decl) else s.value
            if isinstance(value, Call):
                return [st.set(target, r) for st, r in self.call(value, states, frame)]
            return [st.set(target, self.term(value, st, frame)) for st in states]
        if isinstance(s, CallStmt):
            return [st for st, _ in self.call(s.call, states, frame)]
        if isinstance(s, Return):
            return [
                replace(st, ret=None if s.value is None else self.term(s.value, st, frame), done=True) for st in states
            ]
        if isinstance(s, If):
            then_states, else_states = [], []
            for st in states:
                c = self.cond(s.cond, st, frame)
                t, e = st.assume(c), st.assume(canonical_formula(negate(c) if isinstance(c, Cmp) else Not(c)))
                if self.feasible(t):
                    then_states.append(t)
                if self.feasible(e):
                    else_states.append(e)
            return self.block(s.then, then_states, frame) + self.block(s.orelse, else_states, frame)
        if isinstance(s, While):
            return self.loop(s, states, frame)
        raise TypeError(f"not a statement: {s!r}")

    def loop(self, s: While, states: list, frame: _Frame) -> list:
        written = stmt_writes(self.m, frame.fn, s.body, self.eff)
        roots = sorted({self.root(frame, l) for l in written}, key=lambda l: l.sort_key)
        out = []
        for st in states:
            for r in roots:
                st = st.set(r, self.havoc(frame.fn))
            st = st.assume(self.cond(s.invariant, st, frame))
            c = self.cond(s.cond, st, frame)
            body = st.assume(c)
            if self.feasible(body):
                self.block(s.body, [body], frame)  # only for the call sites inside
            exit_st = st.assume(canonical_formula(Not(c)))
            if self.feasible(exit_st):
                out.append(exit_st)
        return out

    def call(self, c: Call, states: list, frame: _Frame) -> list:
        callee = self.m.function(c.callee)
        idx = site_index(self.m.function(frame.fn))[c.span]
        refs = {}
        for p, a in zip(callee.params, c.args):
            if p.is_ref:
                refs[p.name] = self.root(frame, a.loc)
        inner = _Frame(c.callee, refs)
        out = []
        for st in states:
            entry = st
            binding = []
            for p, a in zip(callee.params, c.args):
                if not p.is_ref:
                    v = self.term(a, st, frame)
                    entry = entry.set(callee.param_loc(p), v)
                    binding.append((p.name, v))
            if frame.fn == self.record_in:
                self.record(c, callee, idx, entry, inner, tuple(binding))
            for fin in self.block(callee.body, [replace(entry, ret=None, done=False)], inner):
                store = {l: v for l, v in fin.store.items() if not (l.owner == c.callee and l.kind in ("param", "local"))}
                out.append((SymbolicState(store, fin.path), fin.ret))
        self._cap(out)
        return out

    def visible_view(self, callee: FunctionDef, st: SymbolicState, frame: _Frame) -> list:
        view = []
        for g in self.m.global_locations:
            view.append((Var(g), st.store[g]))
        for p in callee.value_params:
            view.append((Var(callee.param_loc(p)), st.store[callee.param_loc(p)]))
        for p in callee.ref_params:
            view.append((Var(callee.deref_loc(p)), st.store[frame.refs[p.name]]))
        return view

    def record(self, c: Call, callee: FunctionDef, idx: int, st: SymbolicState, inner: _Frame, binding):
        dropped = []
        view = self.visible_view(callee, st, inner)
        visible_terms = {v for v, _ in view}
        ctx = project(st.path_formula, view, lambda leaf: leaf not in visible_terms, dropped)
        relevant = set(callee.param_locations) | set(callee.deref_locations) | set(self.accessed[callee.name])
        ctx = slice_relevant(ctx, relevant)
        for d in dropped:
            note = f"{self.record_in} -> {callee.name} at {c.span}: dropped constraint {render_formula(d)}"
            if note not in self.notes:
                self.notes.append(note)
        key = (callee.name, c.span, idx)
        if key not in self.sites:
            self.sites[key] = []
            self.site_order.append(key)
        self.sites[key].append((ctx, binding))

    def summaries(self) -> list:
        out = []
        for key in self.site_order:
            callee, span, _ = key
            entries = self.sites[key]
            ctx = canonical_formula(factor_disjunction(canonical_formula(disj(*(e[0] for e in entries)))))
            out.append(CallSiteSummary(callee, self.record_in, span, ctx, tuple(e[1] for e in entries)))
        return out


# --------------------------------------------------------------------------
# Entry-state symbols


def initial_state(m: ModuleAst, f: FunctionDef) -> tuple:
    store = {}
    for g in m.global_locations:
        store[g] = Old(g)
    for p in f.value_params:
        store[f.param_loc(p)] = Var(f.param_loc(p))
    refs = {}
    for p in f.ref_params:
        cell = f.deref_loc(p)
        store[cell] = Old(cell)
        refs[p.name] = cell
    return SymbolicState(store), _Frame(f.name, refs)


def to_symbols(f: Formula) -> Formula:
    """Pre-state vocabulary to entry symbols: globals and cells become ``\\old``."""

    def leaf(t):
        if isinstance(t, Var) and t.loc.kind in ("global", "deref"):
            return Old(t.loc)
        return None

    return map_formula(f, leaf, lambda loc: TRUE)


def run_function(m: ModuleAst, fn: str, requires: Formula, config: FuncInferConfig, record: bool = True):
    """Execute ``fn`` from ``requires``; returns (executor, final states)."""
    f = m.function(fn)
    ex = SymbolicExecutor(m, config, record_in=fn if record else None)
    st, frame = initial_state(m, f)
    st = st.assume(canonical_formula(to_symbols(requires)))
    if not ex.feasible(st):
        return ex, []
    return ex, ex.block(f.body, [st], frame)


def ensures_of(m: ModuleAst, fn: str, states: list, notes: Optional[list] = None, requires: Formula = TRUE) -> Formula:
    """Two-state ensures from final symbolic states; loop symbols projected away.

    Globals ``fn`` never touches (even through callees) get a plain frame
    equality ``g == \\old(g)`` outside the per-state disjunction.
    """
    f = m.function(fn)
    aliased = aliased_globals(m, fn)
    framed = set(accessed_globals(m)[fn]) | _locations(requires)
    disjuncts = []
    for st in states:
        view = []
        for g in m.global_locations:
            if g not in aliased and g in framed:
                view.append((Var(g), st.store[g]))
        for p in f.ref_params:
            view.append((Var(f.deref_loc(p)), st.store[f.deref_loc(p)]))
        if f.returns_int and st.ret is not None:
            view.append((RESULT, st.ret))
        dropped = []
        d = project(st.path_formula, view, lambda leaf: isinstance(leaf, Var) and leaf.loc.kind == "logic", dropped)
        if dropped and notes is not None:
            for c in dropped:
                note = f"{fn}: ensures weakened, dropped {render_formula(c)}"
                if note not in notes:
                    notes.append(note)
        disjuncts.append(d)
    body = canonical_formula(factor_disjunction(canonical_formula(disj(*disjuncts))))
    if not states:
        return body
    frame = [eq(Var(g), Old(g)) for g in m.global_locations if g not in aliased and g not in framed]
    return canonical_formula(conj(*frame, body))


def summarize(m: ModuleAst, fn: str, requires: Formula, config: Optional[FuncInferConfig] = None) -> Formula:
    """Strongest postcondition of ``fn`` from ``requires`` as an ensures formula."""
    config = config or FuncInferConfig()
    _, states = run_function(m, fn, requires, config, record=False)
    return ensures_of(m, fn, states, requires=requires)


def infer_requires(fn: str, summaries) -> Formula:
    """Disjunction of the contexts recorded for ``fn`` (false when uncalled)."""
    ctxs = [s.context for s in summaries if s.callee == fn]
    if not ctxs:
        return FALSE
    return canonical_formula(factor_disjunction(canonical_formula(disj(*ctxs))))


def _processing_order(m: ModuleAst) -> list:
    return list(reversed(call_graph(m)))  # callers before callees


def analyze(m: ModuleAst, config: Optional[FuncInferConfig] = None) -> FunctionalResult:
    config = config or FuncInferConfig()
    summaries, requires, ensures, notes, warnings = [], {}, {}, [], []
    entry = m.function(m.entry)
    for name in _processing_order(m):
        if name == m.entry:
            pre = entry.contract.pre
        else:
            pre = infer_requires(name, summaries)
            if pre == FALSE and not any(s.callee == name for s in summaries):
                warnings.append(f"helper '{name}' is never called from '{m.entry}'; requires \\false")
        ex, states = run_function(m, name, pre, config)
        if name == m.entry and not states:
            warnings.append(f"entry requires of '{name}' is unsatisfiable; no call contexts")
        summaries.extend(ex.summaries())
        for n in ex.notes:
            if n not in notes:
                notes.append(n)
        if name != m.entry:
            requires[name] = pre
            ensures[name] = ensures_of(m, name, states, notes, pre)
    annotated = m
    for h in m.helpers:
        annotated = annotated.replace_function(h.with_contract(_merge(h.contract, requires[h.name], ensures[h.name])))
    return FunctionalResult(annotated, summaries, requires, ensures, notes, warnings)


def _merge(old: Optional[Contract], pre: Formula, post: Formula) -> Contract:
    base = (old or Contract()).without("functional")
    req = tuple(c for c in base.requires if c.provenance == "auxiliary")
    ens = tuple(c for c in base.ensures if c.provenance == "auxiliary")
    fr = () if pre == TRUE else (Clause(pre, "functional"),)
    fe = () if post == TRUE else (Clause(post, "functional"),)
    return Contract(req + fr, fe + ens, base.assigns)


def symexec(m: ModuleAst, config: Optional[FuncInferConfig] = None) -> list:
    """All call-site summaries, each recorded in its caller's own run."""
    return analyze(m, config).summaries


def infer_functional(m: ModuleAst, config: Optional[FuncInferConfig] = None) -> ModuleAst:
    """Annotate every helper with functional requires/ensures."""
    return analyze(m, config).module
