"""Module-level checks: resolution of calls, entry selection, recursion,
return discipline and reference-parameter aliasing."""

from __future__ import annotations

from collections import defaultdict

from ..logic import Location, Var, formula_terms, term_leaves
from .ast import (
    Assign,
    Call,
    CallStmt,
    Decl,
    Diagnostic,
    FrontendError,
    FunctionDef,
    If,
    ModuleAst,
    Ref,
    Return,
    While,
    call_of,
    walk,
)
from .parser import parse_raw


def _diag(span, msg, category):
    return Diagnostic("error", span, msg, category)


def parse_module(source: str) -> ModuleAst:
    """Parse, resolve and validate a MicroC module.

    Raises :class:`FrontendError` carrying the diagnostics on rejection.
    """
    globals_, functions = parse_raw(source)
    return check_module(globals_, functions)


def check_module(globals_, functions, entry=None) -> ModuleAst:
    diags = []
    fmap = {f.name: f for f in functions}
    if len(fmap) != len(functions):
        seen = set()
        for f in functions:
            if f.name in seen:
                diags.append(_diag(f.span, f"duplicate function '{f.name}'", "resolution"))
            seen.add(f.name)
    if set(fmap) & set(globals_):
        for name in sorted(set(fmap) & set(globals_)):
            diags.append(_diag(fmap[name].span, f"'{name}' is both a global and a function", "resolution"))

    for f in functions:
        diags.extend(_check_function(f, fmap))

    if entry is None:
        candidates = [f for f in functions if f.contract is not None and f.contract.has_user_clauses]
        if not candidates:
            span = functions[0].span if functions else None
            from .ast import NO_SPAN

            diags.append(
                _diag(span or NO_SPAN, "no entry function: exactly one function must carry a user contract", "resolution")
            )
        elif len(candidates) > 1:
            for f in candidates[1:]:
                diags.append(
                    _diag(
                        f.span,
                        f"only the entry function may carry a user contract; '{candidates[0].name}' and '{f.name}' both do",
                        "unsupported",
                    )
                )
        else:
            entry = candidates[0].name
    if diags:
        raise FrontendError(diags)

    m = ModuleAst(tuple(globals_), tuple(functions), entry)
    for f in functions:
        for c in f.calls():
            if c.callee == entry:
                diags.append(_diag(c.span, f"the entry function '{entry}' must not be called", "unsupported"))
    if diags:
        raise FrontendError(diags)
    call_graph(m)  # raises on recursion
    diags.extend(_check_aliasing(m))
    if diags:
        raise FrontendError(diags)
    return m


def _check_function(f: FunctionDef, fmap) -> list:
    diags = []
    for s in walk(f.body):
        if isinstance(s, Return):
            if f.returns_int and s.value is None:
                diags.append(_diag(s.span, f"'{f.name}' must return a value", "resolution"))
            if not f.returns_int and s.value is not None:
                diags.append(_diag(s.span, f"void function '{f.name}' returns a value", "resolution"))
        c = call_of(s)
        if c is not None:
            diags.extend(_check_call(c, fmap, value_used=not isinstance(s, CallStmt)))
    for s in walk(f.body):
        if isinstance(s, While):
            for inner in walk(s.body):
                if isinstance(inner, Return):
                    diags.append(_diag(inner.span, "unsupported construct: return inside a loop", "unsupported"))
    if f.returns_int and not _always_returns(f.body):
        diags.append(_diag(f.span, f"'{f.name}' may reach its end without returning a value", "unsupported"))
    return diags


def _check_call(c: Call, fmap, value_used: bool) -> list:
    callee = fmap.get(c.callee)
    if callee is None:
        return [_diag(c.span, f"unknown function '{c.callee}'", "resolution")]
    diags = []
    if value_used and not callee.returns_int:
        diags.append(_diag(c.span, f"void function '{c.callee}' used as a value", "resolution"))
    if len(c.args) != len(callee.params):
        diags.append(
            _diag(c.span, f"'{c.callee}' expects {len(callee.params)} argument(s), got {len(c.args)}", "resolution")
        )
        return diags
    for p, a in zip(callee.params, c.args):
        if p.is_ref and not isinstance(a, Ref):
            diags.append(_diag(c.span, f"reference parameter '{p.name}' of '{c.callee}' needs '&x' or a pointer", "resolution"))
        if not p.is_ref and isinstance(a, Ref):
            diags.append(_diag(c.span, f"unsupported construct: address passed to value parameter '{p.name}'", "unsupported"))
    return diags


def _always_returns(stmts) -> bool:
    for s in stmts:
        if isinstance(s, Return):
            return True
        if isinstance(s, If) and _always_returns(s.then) and _always_returns(s.orelse):
            return True
    return False


def callees(f: FunctionDef) -> list:
    return list(dict.fromkeys(c.callee for c in f.calls()))


def call_graph(m: ModuleAst) -> list:
    """Function names in reverse topological order (callees before callers)."""
    order, state = [], {}

    def visit(name, stack):
        st = state.get(name)
        if st == "done":
            return
        if st == "active":
            cycle = stack[stack.index(name):] + [name]
            f = m.function(name)
            raise FrontendError(
                [_diag(f.span, "unsupported construct: recursion (" + " -> ".join(cycle) + ")", "unsupported")]
            )
        state[name] = "active"
        for callee in callees(m.function(name)):
            visit(callee, stack + [name])
        state[name] = "done"
        order.append(name)

    for f in m.functions:
        visit(f.name, [])
    return order


def reachable(m: ModuleAst, root: str) -> set:
    seen, todo = set(), [root]
    while todo:
        n = todo.pop()
        if n in seen:
            continue
        seen.add(n)
        todo.extend(callees(m.function(n)))
    return seen


# --------------------------------------------------------------------------
# Name-level access and reference targets


def stmt_terms(s):
    """Value terms a statement evaluates (call arguments, conditions, invariants)."""
    if isinstance(s, Decl):
        v = s.init
    elif isinstance(s, Assign):
        v = s.value
    elif isinstance(s, Return):
        v = s.value
    else:
        v = None
    if isinstance(v, Call):
        yield from (a for a in v.args if not isinstance(a, Ref))
    elif v is not None:
        yield v
    if isinstance(s, CallStmt):
        yield from (a for a in s.call.args if not isinstance(a, Ref))
    if isinstance(s, (If, While)):
        yield from formula_terms(s.cond)
    if isinstance(s, While):
        for inv in s.invariants:
            yield from formula_terms(inv)


def named_globals(f: FunctionDef) -> set:
    """Globals mentioned by name in ``f``'s body (reads, writes, ``&g``)."""
    out = set()
    for s in walk(f.body):
        for t in stmt_terms(s):
            for leaf in term_leaves(t):
                if isinstance(leaf, Var) and leaf.loc.kind == "global":
                    out.add(leaf.loc)
        if isinstance(s, Assign) and s.target.kind == "global":
            out.add(s.target)
        c = call_of(s)
        if c is not None:
            for a in c.args:
                if isinstance(a, Ref) and a.loc.kind == "global":
                    out.add(a.loc)
    return out


def accessed_globals(m: ModuleAst) -> dict:
    """Transitive closure of :func:`named_globals` over the call graph."""
    out = {}
    for name in call_graph(m):
        f = m.function(name)
        acc = set(named_globals(f))
        for c in callees(f):
            acc |= out[c]
        out[name] = acc
    return out


def ref_targets(m: ModuleAst) -> dict:
    """Map ``(function, ref param)`` to the root locations it may point to.

    Roots are globals, caller locals, or the function's own ``*p`` cell when
    the function is never called (entry or unused helper).
    """
    targets = defaultdict(set)
    order = list(reversed(call_graph(m)))  # callers first
    called = set()
    for f in m.functions:
        for c in f.calls():
            called.add(c.callee)
    for name in order:
        f = m.function(name)
        if name not in called:
            for p in f.ref_params:
                targets[(name, p.name)].add(f.deref_loc(p))
        for c in f.calls():
            callee = m.function(c.callee)
            for p, a in zip(callee.params, c.args):
                if p.is_ref and isinstance(a, Ref):
                    targets[(c.callee, p.name)] |= _roots(a.loc, name, targets)
    return dict(targets)


def _roots(loc: Location, fn: str, targets) -> set:
    if loc.kind == "deref":
        return set(targets.get((fn, loc.name), set()))
    return {loc}


def aliased_globals(m: ModuleAst, fn: str, targets=None) -> set:
    """Globals some reference parameter of ``fn`` may point to."""
    if targets is None:
        targets = ref_targets(m)
    out = set()
    for p in m.function(fn).ref_params:
        out |= {t for t in targets.get((fn, p.name), ()) if t.kind == "global"}
    return out


def _check_aliasing(m: ModuleAst) -> list:
    diags = []
    targets = ref_targets(m)
    access = accessed_globals(m)
    for f in m.functions:
        for c in f.calls():
            roots = []
            callee = m.function(c.callee)
            for p, a in zip(callee.params, c.args):
                if p.is_ref and isinstance(a, Ref):
                    r = _roots(a.loc, f.name, targets)
                    for other in roots:
                        if r & other:
                            diags.append(
                                _diag(c.span, f"unsupported construct: aliased reference arguments in call to '{c.callee}'", "unsupported")
                            )
                    roots.append(r)
        for p in f.ref_params:
            for g in targets.get((f.name, p.name), ()):
                if g.kind == "global" and g in access[f.name]:
                    diags.append(
                        _diag(
                            f.span,
                            f"unsupported construct: '*{p.name}' may alias global '{g.name}', which '{f.name}' also accesses",
                            "unsupported",
                        )
                    )
    return diags
