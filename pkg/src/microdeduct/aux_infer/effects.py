"""Write effects and pointer use, transitively closed over the call graph."""

from __future__ import annotations

from typing import Optional

from ..frontend.ast import Assign, Call, Decl, FunctionDef, ModuleAst, Ref, call_of, walk
from ..frontend.validate import stmt_terms, accessed_globals, call_graph
from ..logic import Location, Var, term_leaves


def bind_location(loc: Location, callee: FunctionDef, call: Call, caller: str) -> Optional[Location]:
    """Translate a location of ``callee`` to the caller's view at ``call``.

    Globals map to themselves, ``*q`` maps to the argument's target (a global,
    a caller local, or the caller's own ``*p``).  Callee locals give None.
    """
    if loc.kind == "global":
        return loc
    if loc.kind != "deref":
        return None
    for p, a in zip(callee.params, call.args):
        if p.name == loc.name and p.is_ref and isinstance(a, Ref):
            if a.loc.kind == "deref":
                return Location("deref", a.loc.name, caller)
            return a.loc
    return None


def direct_writes(f: FunctionDef) -> set:
    return {s.target for s in walk(f.body) if isinstance(s, Assign) and s.target.kind in ("global", "deref")}


def call_writes(m: ModuleAst, call: Call, caller: str, eff: dict) -> set:
    """Caller-side locations (including caller locals) a call may write."""
    callee = m.function(call.callee)
    out = set()
    for loc in eff[call.callee]:
        b = bind_location(loc, callee, call, caller)
        if b is not None:
            out.add(b)
    return out


def effects(m: ModuleAst) -> dict:
    """Function name -> frozenset of written globals and own ``*p`` cells."""
    eff = {}
    for name in call_graph(m):
        f = m.function(name)
        acc = direct_writes(f)
        for c in f.calls():
            acc |= {l for l in call_writes(m, c, name, eff) if l.kind in ("global", "deref")}
        eff[name] = frozenset(acc)
    return eff


def stmt_writes(m: ModuleAst, fn: str, stmts, eff: dict) -> set:
    """Every location (locals included) a statement list may write."""
    out = set()
    for s in walk(stmts):
        if isinstance(s, Assign):
            out.add(s.target)
        elif isinstance(s, Decl):
            out.add(s.loc)
        c = call_of(s)
        if c is not None:
            out |= call_writes(m, c, fn, eff)
    return out


def read_globals(m: ModuleAst) -> dict:
    """Function name -> globals it or a callee reads or writes by name."""
    return accessed_globals(m)


def _dereferences(f: FunctionDef) -> set:
    out = set()
    for s in walk(f.body):
        if isinstance(s, Assign) and s.target.kind == "deref":
            out.add(s.target.name)
        for t in stmt_terms(s):
            for leaf in term_leaves(t):
                if isinstance(leaf, Var) and leaf.loc.kind == "deref":
                    out.add(leaf.loc.name)
    return out


def used_pointers(m: ModuleAst) -> dict:
    """Function name -> ref params dereferenced here or by a callee they reach."""
    out = {}
    for name in call_graph(m):
        f = m.function(name)
        used = _dereferences(f)
        for c in f.calls():
            callee = m.function(c.callee)
            for p, a in zip(callee.params, c.args):
                if p.is_ref and isinstance(a, Ref) and a.loc.kind == "deref" and p.name in out[c.callee]:
                    used.add(a.loc.name)
        out[name] = frozenset(used)
    return out
