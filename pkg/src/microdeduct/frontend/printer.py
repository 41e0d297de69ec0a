"""Pretty-printer producing MicroC source that reparses to the same AST."""

from __future__ import annotations

from ..logic import render_formula, render_term
from .ast import (
    Assign,
    Call,
    CallStmt,
    Contract,
    Decl,
    FunctionDef,
    If,
    ModuleAst,
    Ref,
    Return,
    While,
)

INDENT = "  "


def _tag(provenance: str) -> str:
    return "" if provenance == "user" else f" // {provenance}"


def render_contract(c: Contract) -> list:
    clauses = []
    for cl in c.requires:
        clauses.append(f"requires {render_formula(cl.formula)};{_tag(cl.provenance)}")
    for cl in c.ensures:
        clauses.append(f"ensures {render_formula(cl.formula)};{_tag(cl.provenance)}")
    if c.assigns is not None:
        locs = ", ".join(str(l) for l in c.assigns.locations) or "\\nothing"
        clauses.append(f"assigns {locs};{_tag(c.assigns.provenance)}")
    if not clauses:
        return []
    lines = ["/*@ " + clauses[0]]
    lines += ["    " + cl for cl in clauses[1:]]
    lines.append("*/")
    return lines


def render_arg(a) -> str:
    if isinstance(a, Ref):
        return a.loc.name if a.loc.kind == "deref" else "&" + a.loc.name
    return render_term(a)


def render_call(c: Call) -> str:
    return f"{c.callee}({', '.join(render_arg(a) for a in c.args)})"


def _value(v) -> str:
    return render_call(v) if isinstance(v, Call) else render_term(v)


def render_stmts(stmts, depth: int) -> list:
    pad = INDENT * depth
    out = []
    for s in stmts:
        if isinstance(s, Decl):
            out.append(f"{pad}int {s.loc.name} = {_value(s.init)};")
        elif isinstance(s, Assign):
            out.append(f"{pad}{s.target} = {_value(s.value)};")
        elif isinstance(s, CallStmt):
            out.append(f"{pad}{render_call(s.call)};")
        elif isinstance(s, Return):
            out.append(f"{pad}return;" if s.value is None else f"{pad}return {render_term(s.value)};")
        elif isinstance(s, If):
            out.extend(_render_if(s, depth, pad))
        elif isinstance(s, While):
            invs = [f"loop invariant {render_formula(i)};" for i in s.invariants]
            out.append(f"{pad}/*@ {invs[0]}")
            out.extend(f"{pad}    {i}" for i in invs[1:])
            out.append(f"{pad}*/")
            out.append(f"{pad}while ({render_formula(s.cond)}) {{")
            out.extend(render_stmts(s.body, depth + 1))
            out.append(f"{pad}}}")
        else:
            raise TypeError(f"not a statement: {s!r}")
    return out


def _render_if(s: If, depth: int, pad: str, prefix: str = "") -> list:
    out = [f"{pad if not prefix else ''}{prefix}if ({render_formula(s.cond)}) {{"]
    out.extend(render_stmts(s.then, depth + 1))
    if not s.orelse:
        out.append(f"{pad}}}")
    elif len(s.orelse) == 1 and isinstance(s.orelse[0], If):
        nested = _render_if(s.orelse[0], depth, pad, prefix=f"{pad}}} else ")
        out.extend(nested)
    else:
        out.append(f"{pad}}} else {{")
        out.extend(render_stmts(s.orelse, depth + 1))
        out.append(f"{pad}}}")
    return out


def render_function(f: FunctionDef) -> list:
    lines = render_contract(f.contract) if f.contract is not None else []
    params = ", ".join(f"int *{p.name}" if p.is_ref else f"int {p.name}" for p in f.params)
    rtype = "int" if f.returns_int else "void"
    lines.append(f"{rtype} {f.name}({params}) {{")
    lines.extend(render_stmts(f.body, 1))
    lines.append("}")
    return lines


def emit_source(m: ModuleAst) -> str:
    """Render a module; every contract precedes its function as ``/*@ ... */``."""
    chunks = []
    if m.globals:
        chunks.append("\n".join(f"int {g};" for g in m.globals))
    for f in m.functions:
        chunks.append("\n".join(render_function(f)))
    return "\n\n".join(chunks) + "\n"
