"""Fourier–Motzkin elimination over the integers.

A constraint is ``(coeffs, const)`` meaning ``sum(c * x) + const <= 0`` with
integer coefficients.  Bounds are tightened to integers after every
combination (divide by the coefficient gcd, round the constant up), and models
are built by back-substitution with bounded backtracking.
"""

from __future__ import annotations

from math import gcd
from typing import Optional

FM_CONSTRAINT_LIMIT = 4000


class Infeasible(Exception):
    pass


class ResourceExhausted(Exception):
    def __init__(self, reason: str = "resource limit exceeded"):
        super().__init__(reason)
        self.reason = reason


class Budget:
    """Shared work counter for one solver query."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def tick(self, n: int = 1):
        self.used += n
        if self.used > self.limit:
            raise ResourceExhausted("resource limit exceeded")


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def normalize(coeffs: dict, const: int):
    """Tighten ``coeffs . x + const <= 0``; returns None when trivially true."""
    coeffs = {k: v for k, v in coeffs.items() if v}
    if not coeffs:
        if const > 0:
            raise Infeasible()
        return None
    g = 0
    for v in coeffs.values():
        g = gcd(g, v)
    if g > 1:
        coeffs = {k: v // g for k, v in coeffs.items()}
        const = _ceil_div(const, g)
    return coeffs, const


def _key(coeffs: dict):
    return tuple(sorted(coeffs.items()))


def dedupe(cons: list) -> list:
    best = {}
    for coeffs, const in cons:
        k = _key(coeffs)
        prev = best.get(k)
        if prev is None or const > prev[1]:
            best[k] = (coeffs, const)
    # opposite pairs: a.x + c1 <= 0 and -a.x + c2 <= 0 need c1 + c2 <= 0
    for k, (coeffs, const) in best.items():
        neg = tuple((v, -c) for v, c in k)
        other = best.get(neg)
        if other is not None and const + other[1] > 0:
            raise Infeasible()
    return list(best.values())


def eliminate(cons: list, var) -> tuple:
    """Eliminate ``var``; returns (new constraints, constraints that mentioned var)."""
    pos, neg, rest = [], [], []
    for c in cons:
        a = c[0].get(var, 0)
        if a > 0:
            pos.append(c)
        elif a < 0:
            neg.append(c)
        else:
            rest.append(c)
    out = list(rest)
    for pc, pk in pos:
        a = pc[var]
        for nc, nk in neg:
            b = -nc[var]
            coeffs = {}
            for k, v in pc.items():
                if k != var:
                    coeffs[k] = coeffs.get(k, 0) + b * v
            for k, v in nc.items():
                if k != var:
                    coeffs[k] = coeffs.get(k, 0) + a * v
            r = normalize(coeffs, b * pk + a * nk)
            if r is not None:
                out.append(r)
    return dedupe(out), pos + neg


def _pick(cons: list, atoms) -> object:
    best, best_cost = None, None
    for v in atoms:
        p = n = 0
        for coeffs, _ in cons:
            a = coeffs.get(v, 0)
            if a > 0:
                p += 1
            elif a < 0:
                n += 1
        cost = (p * n - p - n, str(v))
        if best_cost is None or cost < best_cost:
            best, best_cost = v, cost
    return best


def _atoms(cons: list) -> set:
    out = set()
    for coeffs, _ in cons:
        out.update(coeffs)
    return out


def bounds_of(var, cons: list, fixed: dict):
    """Integer bounds for ``var`` from constraints whose other atoms are fixed."""
    lo, hi = None, None
    for coeffs, const in cons:
        a = coeffs.get(var, 0)
        if a == 0:
            continue
        rest = const
        for k, v in coeffs.items():
            if k != var:
                rest += v * fixed.get(k, 0)
        # a * var + rest <= 0
        if a > 0:
            b = (-rest) // a
            hi = b if hi is None else min(hi, b)
        else:
            b = _ceil_div(rest, -a)
            lo = b if lo is None else max(lo, b)
    return lo, hi


def candidates(lo: Optional[int], hi: Optional[int], limit: int):
    """Values in [lo, hi] ordered by distance from the point nearest 0."""
    if lo is not None and hi is not None and lo > hi:
        return [], True
    centre = 0
    if lo is not None and centre < lo:
        centre = lo
    if hi is not None and centre > hi:
        centre = hi
    out = [centre]
    step = 1
    exhausted = False
    while len(out) < limit:
        up, down = centre + step, centre - step
        grew = False
        if hi is None or up <= hi:
            out.append(up)
            grew = True
        if len(out) < limit and (lo is None or down >= lo):
            out.append(down)
            grew = True
        if not grew:
            exhausted = True
            break
        step += 1
    if lo is not None and hi is not None and hi - lo + 1 <= len(out):
        exhausted = True
    return out, exhausted


def solve(cons: list, budget: Budget, extra_atoms=(), search_limit: int = 64):
    """Decide integer feasibility.

    Returns ``("unsat", None)``, ``("sat", model)`` or ``("unknown", reason)``.
    """
    try:
        work = dedupe([c for c in (normalize(*c) for c in cons) if c is not None])
    except Infeasible:
        return "unsat", None
    layers = []
    atoms = _atoms(work)
    try:
        while atoms:
            budget.tick()
            v = _pick(work, sorted(atoms, key=str))
            work, used = eliminate(work, v)
            layers.append((v, used))
            if len(work) > FM_CONSTRAINT_LIMIT:
                return "unknown", "formula too large (elimination blow-up)"
            atoms = _atoms(work)
    except Infeasible:
        return "unsat", None

    model = {}
    complete = [True]
    order = list(reversed(layers))

    def search(i: int) -> bool:
        if i == len(order):
            return True
        budget.tick()
        v, used = order[i]
        lo, hi = bounds_of(v, used, model)
        vals, exhausted = candidates(lo, hi, search_limit)
        if not exhausted:
            complete[0] = False
        for val in vals:
            model[v] = val
            if search(i + 1):
                return True
        model.pop(v, None)
        return False

    if search(0):
        for a in extra_atoms:
            model.setdefault(a, 0)
        return "sat", model
    if complete[0]:
        return "unsat", None
    return "unknown", "integer search budget exhausted"


def project_bounds(cons: list, var, budget: Budget):
    """Integer bounds of ``var`` over the rational projection of ``cons``."""
    try:
        work = dedupe([c for c in (normalize(*c) for c in cons) if c is not None])
        atoms = _atoms(work) - {var}
        while atoms:
            budget.tick()
            v = _pick(work, sorted(atoms, key=str))
            work, _ = eliminate(work, v)
            if len(work) > FM_CONSTRAINT_LIMIT:
                return None, None
            atoms = _atoms(work) - {var}
    except Infeasible:
        return 1, 0
    return bounds_of(var, work, {})
