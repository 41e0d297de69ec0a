"""Seeded random generators for differential testing.

Everything is driven by a ``random.Random`` so a failing case is replayed
from its seed.  Programs are produced as MicroC text and go through the real
parser.  Generated programs are loop-free, acyclic and use at most one
variable-by-variable product, which keeps every value of a run from inputs
in [-8, 8] far inside the 32-bit range.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .logic import (
    Add,
    Cmp,
    Formula,
    Int,
    Location,
    Mul,
    Neg,
    Not,
    Sub,
    Term,
    Var,
    conj,
    disj,
    implies,
)

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


# --------------------------------------------------------------------------
# Formulas


def gen_term(rng: random.Random, leaves: list, depth: int = 2, products: bool = True) -> Term:
    """A term over ``leaves``; products have at most two variable factors."""
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.3:
            return Int(rng.randint(-4, 4))
        return rng.choice(leaves)
    r = rng.random()
    if products and r < 0.2:
        a, b = rng.choice(leaves), rng.choice(leaves)
        return Mul(a, b)
    if r < 0.3:
        return Mul(Int(rng.randint(-3, 3)), rng.choice(leaves))
    if r < 0.4:
        return Neg(gen_term(rng, leaves, depth - 1, False))
    op = Add if r < 0.7 else Sub
    return op(gen_term(rng, leaves, depth - 1, False), gen_term(rng, leaves, depth - 1, products and r < 0.55))


def gen_atom(rng: random.Random, leaves: list, products: bool = True) -> Cmp:
    return Cmp(rng.choice(CMP_OPS), gen_term(rng, leaves, 2, products), gen_term(rng, leaves, 1, False))


def gen_formula(rng: random.Random, leaves: list, depth: int = 3, products: bool = True) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        return gen_atom(rng, leaves, products)
    r = rng.random()
    sub = lambda: gen_formula(rng, leaves, depth - 1, products)  # noqa: E731
    if r < 0.35:
        return conj(*(sub() for _ in range(rng.randint(2, 3))))
    if r < 0.7:
        return disj(*(sub() for _ in range(rng.randint(2, 3))))
    if r < 0.85:
        return Not(sub())
    return implies(sub(), sub())


def formula_leaves(n: int) -> list:
    return [Var(Location("global", f"x{i}")) for i in range(n)]


def gen_solver_case(seed: int) -> tuple:
    """(formula, locations) with 1..4 locations."""
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    leaves = formula_leaves(n)
    return gen_formula(rng, leaves, rng.randint(1, 3)), [v.loc for v in leaves]


# --------------------------------------------------------------------------
# Statements (loop-free, call-free) with a postcondition


@dataclass
class _Budget:
    products: int = 1


def _expr_text(rng: random.Random, names: list, depth: int, budget: _Budget) -> str:
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.3:
            c = rng.randint(-3, 3)
            return str(c) if c >= 0 else f"({c})"
        return rng.choice(names)
    r = rng.random()
    if r < 0.2 and budget.products > 0:
        budget.products -= 1
        return f"{rng.choice(names)} * {rng.choice(names)}"
    if r < 0.3:
        return f"{rng.randint(2, 3)} * {rng.choice(names)}"
    if r < 0.4:
        return f"-{rng.choice(names)}"
    op = rng.choice(["+", "-"])
    return f"({_expr_text(rng, names, depth - 1, budget)} {op} {_expr_text(rng, names, depth - 1, budget)})"


def _cond_text(rng: random.Random, names: list, budget: _Budget) -> str:
    a = _expr_text(rng, names, 1, budget)
    b = _expr_text(rng, names, 0, budget)
    c = f"{a} {rng.choice(CMP_OPS)} {b}"
    r = rng.random()
    if r < 0.15:
        return f"{c} && {rng.choice(names)} {rng.choice(CMP_OPS)} {rng.randint(-3, 3)}"
    if r < 0.3:
        return f"{c} || {rng.choice(names)} {rng.choice(CMP_OPS)} {rng.randint(-3, 3)}"
    if r < 0.35:
        return f"!({c})"
    return c


def _stmts_text(rng: random.Random, targets: list, names: list, depth: int, budget: _Budget, indent: str) -> list:
    out = []
    for _ in range(rng.randint(1, 3)):
        if depth > 0 and rng.random() < 0.3:
            out.append(f"{indent}if ({_cond_text(rng, names, budget)}) {{")
            out += _stmts_text(rng, targets, names, depth - 1, budget, indent + "  ")
            if rng.random() < 0.6:
                out.append(f"{indent}}} else {{")
                out += _stmts_text(rng, targets, names, depth - 1, budget, indent + "  ")
            out.append(f"{indent}}}")
        else:
            out.append(f"{indent}{rng.choice(targets)} = {_expr_text(rng, names, 2, budget)};")
    return out


@dataclass(frozen=True)
class StmtCase:
    source: str  # a module whose ``main`` body is the statement
    post: Formula
    names: tuple  # global names, all inputs


def gen_stmt_case(seed: int) -> StmtCase:
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    names = [f"g{i}" for i in range(n)]
    budget = _Budget(1)
    body = _stmts_text(rng, names, names, 2, budget, "  ")
    src = "".join(f"int {g};\n" for g in names) + "\n/*@ requires \\true; */\nvoid main() {\n" + "\n".join(body) + "\n}\n"
    leaves = [Var(Location("global", g)) for g in names]
    return StmtCase(src, gen_formula(rng, leaves, 2, products=rng.random() < 0.3), tuple(names))


# --------------------------------------------------------------------------
# Whole programs


@dataclass(frozen=True)
class ProgramCase:
    source: str
    seed: int
    globals: tuple
    candidate: Optional[str] = None  # extra ensures clause, possibly false


@dataclass
class _Helper:
    name: str
    params: list  # (name, is_ref)
    returns: bool
    lines: list = field(default_factory=list)


def _gen_helper(rng: random.Random, name: str, globals_: list, earlier: list, budget: _Budget) -> _Helper:
    nparams = rng.randint(0, 2 if len(globals_) < 2 else 1) or (1 if not globals_ else 0)
    params = []
    for i in range(nparams):
        is_ref = i == nparams - 1 and rng.random() < 0.25
        params.append((f"{'p' if is_ref else 'a'}{i}", is_ref))
    returns = rng.random() < 0.7
    h = _Helper(name, params, returns)
    readable = [p if not r else f"*{p}" for p, r in params] + list(globals_)
    writable = list(globals_) + [f"*{p}" for p, r in params if r]
    lines = []
    local = None
    if rng.random() < 0.4:
        local = "t"
        lines.append(f"  int t = {_expr_text(rng, readable, 1, budget)};")
        readable = readable + ["t"]
        writable = writable + ["t"]
    if earlier and rng.random() < 0.5:
        callee = rng.choice(earlier)
        call = _call_text(rng, callee, readable, writable, local, globals_)
        if call:
            lines.append("  " + call)
    if writable:
        lines += _stmts_text(rng, writable, readable, 1, budget, "  ")
    if returns:
        if rng.random() < 0.3:
            c = _cond_text(rng, readable, budget)
            lines.append(f"  if ({c}) {{")
            lines.append(f"    return {_expr_text(rng, readable, 1, budget)};")
            lines.append("  }")
        lines.append(f"  return {_expr_text(rng, readable, 1, budget)};")
    h.lines = lines
    return h


def _call_text(rng, callee: _Helper, readable, writable, local, globals_) -> str:
    args = []
    for p, is_ref in callee.params:
        if is_ref:
            # addresses of globals would alias the callee's own global accesses
            cands = ([f"&{local}"] if local else []) + [w[1:] for w in writable if w.startswith("*")]
            if not cands:
                return ""
            args.append(rng.choice(cands))
        else:
            args.append(_expr_text(rng, readable, 1, _Budget(0)))
    call = f"{callee.name}({', '.join(args)})"
    plain = [w for w in writable]
    if callee.returns and plain and rng.random() < 0.8:
        return f"{rng.choice(plain)} = {call};"
    return f"{call};"


def gen_program(seed: int, max_helpers: int = 3) -> ProgramCase:
    """A loop-free program: up to ``max_helpers`` helpers and a contracted ``main``.

    ``main`` requires every global in [-8, 8], so exhaustive enumeration over
    that box is the exact truth of its contract.  The ensures clause is left
    for the caller to fill in (see :func:`with_entry_ensures`).
    """
    rng = random.Random(seed)
    globals_ = [f"g{i}" for i in range(rng.randint(1, 2))]
    budget = _Budget(1)
    helpers = []
    for i in range(rng.randint(1, max_helpers)):
        helpers.append(_gen_helper(rng, f"h{i}", globals_, helpers, budget))
    main_lines = []
    readable = list(globals_) + ["v"]
    main_lines.append(f"  int v = {rng.choice(globals_)};")
    for _ in range(rng.randint(1, 3)):
        callee = rng.choice(helpers)
        call = _call_text(rng, callee, readable, list(globals_) + ["v"], "v", globals_)
        if call:
            main_lines.append("  " + call)
    if rng.random() < 0.5:
        main_lines.append(f"  {rng.choice(globals_)} = {_expr_text(rng, readable, 1, _Budget(0))};")
    out = [f"int {g};" for g in globals_] + [""]
    for h in helpers:
        ps = ", ".join(f"int *{p}" if r else f"int {p}" for p, r in h.params)
        out.append(f"{'int' if h.returns else 'void'} {h.name}({ps}) {{")
        out += h.lines
        out.append("}")
        out.append("")
    req = " && ".join(f"-8 <= {g} && {g} <= 8" for g in globals_)
    out.append(f"/*@ requires {req};\n    ENSURES\n*/")
    out.append("void main() {")
    out += main_lines
    out.append("}")
    return ProgramCase("\n".join(out) + "\n", seed, tuple(globals_))


def with_entry_ensures(case: ProgramCase, clauses: list) -> str:
    body = "\n    ".join(f"ensures {c};" for c in clauses) if clauses else "ensures \\true;"
    return case.source.replace("ENSURES", body)


def gen_candidate_post(rng: random.Random, globals_: tuple) -> str:
    """A random relation between final and initial global values."""
    from .logic import Old, render_formula

    leaves = [Var(Location("global", g)) for g in globals_] + [Old(Location("global", g)) for g in globals_]
    return render_formula(gen_formula(rng, leaves, 1, products=False))
