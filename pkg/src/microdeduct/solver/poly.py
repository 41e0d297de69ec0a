"""Integer polynomials keyed by sorted monomials of variable names."""

from __future__ import annotations

from math import gcd

from ..logic import LEAF_TYPES, Add, Int, Mul, Neg, Sub, Term

ONE = ()  # the constant monomial


def const_poly(c: int) -> dict:
    return {ONE: c} if c else {}


def var_poly(name: str) -> dict:
    return {(name,): 1}


def padd(a: dict, b: dict, k: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + k * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def pscale(a: dict, k: int) -> dict:
    if k == 0:
        return {}
    return {m: c * k for m, c in a.items()}


def pmul(a: dict, b: dict) -> dict:
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(sorted(ma + mb))
            v = out.get(m, 0) + ca * cb
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def from_term(t: Term, name_of) -> dict:
    if isinstance(t, Int):
        return const_poly(t.value)
    if isinstance(t, LEAF_TYPES):
        return var_poly(name_of(t))
    if isinstance(t, Neg):
        return pscale(from_term(t.arg, name_of), -1)
    a = from_term(t.left, name_of)
    b = from_term(t.right, name_of)
    if isinstance(t, Add):
        return padd(a, b)
    if isinstance(t, Sub):
        return padd(a, b, -1)
    if isinstance(t, Mul):
        return pmul(a, b)
    raise TypeError(f"not a term: {t!r}")


def substitute(p: dict, var: str, repl: dict) -> dict:
    """Replace ``var`` by polynomial ``repl`` (expanding products)."""
    if not any(var in m for m in p):
        return p
    out = {}
    for m, c in p.items():
        k = m.count(var)
        if k == 0:
            out = padd(out, {m: c})
            continue
        rest = tuple(v for v in m if v != var)
        term = {rest: c}
        for _ in range(k):
            term = pmul(term, repl)
        out = padd(out, term)
    return out


def constant(p: dict) -> int:
    return p.get(ONE, 0)


def is_constant(p: dict) -> bool:
    return all(m == ONE for m in p)


def variables(p: dict) -> set:
    return {v for m in p for v in m}


def nonlinear_monomials(p: dict) -> list:
    return [m for m in p if len(m) > 1]


def content(p: dict) -> int:
    g = 0
    for m, c in p.items():
        if m != ONE:
            g = gcd(g, c)
    return g


def evaluate(p: dict, model: dict) -> int:
    total = 0
    for m, c in p.items():
        v = c
        for name in m:
            v *= model.get(name, 0)
        total += v
    return total


def render(p: dict) -> str:
    if not p:
        return "0"
    parts = []
    for m, c in sorted(p.items(), key=lambda kv: (len(kv[0]), kv[0])):
        mon = "*".join(m)
        if not mon:
            parts.append(str(c))
        elif c == 1:
            parts.append(mon)
        elif c == -1:
            parts.append("-" + mon)
        else:
            parts.append(f"{c}*{mon}")
    return " + ".join(parts)
