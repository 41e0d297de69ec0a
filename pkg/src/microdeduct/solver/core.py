"""Satisfiability of quantifier-free integer formulas.

Pipeline per query: negation normal form, then a depth-first walk over the
disjunctive normal form (at most ``dnf_cap`` cubes, with a cheap relaxed
check pruning branches early).  Each cube is decided by

* equality elimination through unit-coefficient variables, which expands
  products and so folds ``x = c`` into ``x*y`` and rewrites ``x = y`` inside
  ``x*z`` (the congruence rules for product atoms);
* Fourier–Motzkin elimination on the linear residue, every distinct product
  monomial standing for an opaque atom, with ``x*x >= |x|`` lemmas;
* a case split on the bounded variable of a product with the smallest range,
  falling back to a windowed model search before answering UNKNOWN.

Leaves (``x``, ``\\old(x)``, ``\\result``) are independent variables.
``\\valid`` atoms are taken to hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..logic import (
    FALSE,
    NEGATED_CMP,
    TRUE,
    And,
    BoolConst,
    Cmp,
    Formula,
    Implies,
    Not,
    Old,
    Or,
    Result,
    Valid,
    Var,
    conj,
    eval_formula,
    leaves,
    negate,
)
from . import poly as P
from .linear import Budget, ResourceExhausted, project_bounds, solve

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SolverLimits:
    dnf_cap: int = 4096
    node_budget: int = 200_000
    search_window: int = 64  # fallback model search over [-w, w]
    split_limit: int = 256  # widest range split exhaustively
    candidate_limit: int = 64  # values tried per variable in integer search


DEFAULT_LIMITS = SolverLimits()


@dataclass(frozen=True)
class SolverVerdict:
    """``model`` maps leaf terms to integers; present exactly on SAT.

    For :func:`check_valid` and :func:`entails` the verdict is about the
    negated query: UNSAT means valid and the model is a countermodel.
    """

    outcome: str
    model: Optional[dict] = field(default=None, compare=False)
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.outcome == SAT

    @property
    def is_unsat(self) -> bool:
        return self.outcome == UNSAT

    @property
    def is_unknown(self) -> bool:
        return self.outcome == UNKNOWN

    @property
    def valid(self) -> bool:
        return self.outcome == UNSAT

    @property
    def countermodel(self) -> Optional[dict]:
        return self.model

    def named_model(self) -> dict:
        from ..logic import render_term

        return {render_term(k): v for k, v in (self.model or {}).items()}


class ModelCheckFailure(AssertionError):
    pass


# --------------------------------------------------------------------------
# Normal forms


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form over ``Cmp``/``BoolConst``; ``\\valid`` becomes true."""
    if isinstance(f, BoolConst):
        return f if positive else negate(f)
    if isinstance(f, Valid):
        return TRUE if positive else FALSE
    if isinstance(f, Cmp):
        return f if positive else Cmp(NEGATED_CMP[f.op], f.left, f.right)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, Implies):
        if positive:
            return _or(nnf(f.left, False), nnf(f.right, True))
        return _and(nnf(f.left, True), nnf(f.right, False))
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return _and(*parts) if positive else _or(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return _or(*parts) if positive else _and(*parts)
    raise TypeError(f"not a formula: {f!r}")


def _and(*fs):
    return conj(*fs)


def _or(*fs):
    from ..logic import disj

    return disj(*fs)


# --------------------------------------------------------------------------
# Literals: ("le", p) means p <= 0, ("eq", p) means p == 0


def _leaf_name(t) -> str:
    if isinstance(t, Var):
        loc = t.loc
        return f"v|{loc.kind}|{loc.owner or ''}|{loc.name}"
    if isinstance(t, Old):
        loc = t.loc
        return f"o|{loc.kind}|{loc.owner or ''}|{loc.name}"
    if isinstance(t, Result):
        return "r|"
    raise TypeError(t)


def cmp_literals(c: Cmp) -> list:
    """Literal alternatives for a comparison (two for ``!=``)."""
    p = P.padd(P.from_term(c.left, _leaf_name), P.from_term(c.right, _leaf_name), -1)
    one = P.const_poly(1)
    if c.op == "<=":
        return [("le", p)]
    if c.op == "<":
        return [("le", P.padd(p, one))]
    if c.op == ">=":
        return [("le", P.pscale(p, -1))]
    if c.op == ">":
        return [("le", P.padd(P.pscale(p, -1), one))]
    if c.op == "==":
        return [("eq", p)]
    return [("le", P.padd(p, one)), ("le", P.padd(P.pscale(p, -1), one))]


class _Unsat(Exception):
    pass


def _freeze(p: dict):
    return tuple(sorted(p.items()))


# --------------------------------------------------------------------------
# Cube theory


class _Theory:
    def __init__(self, limits: SolverLimits, budget: Budget):
        self.limits = limits
        self.budget = budget

    # equality elimination -------------------------------------------------
    def eliminate_equalities(self, lits: list):
        """Returns (inequalities, substitutions in elimination order)."""
        les, eqs = [], []
        for kind, p in lits:
            (eqs if kind == "eq" else les).append(p)
        subst = []
        while eqs:
            self.budget.tick()
            p = eqs.pop(0)
            if P.is_constant(p):
                if P.constant(p) != 0:
                    raise _Unsat()
                continue
            g = P.content(p)
            if g > 1 and P.constant(p) % g != 0:
                raise _Unsat()
            v = _unit_var(p)
            if v is None:
                les.append(p)
                les.append(P.pscale(p, -1))
                continue
            c = p[(v,)]
            rest = P.padd(p, {(v,): c}, -1)
            repl = P.pscale(rest, -c)  # c = +-1 so v = -rest / c = -c * rest
            subst.append((v, repl))
            eqs = [P.substitute(q, v, repl) for q in eqs]
            les = [P.substitute(q, v, repl) for q in les]
        out = []
        seen = set()
        for p in les:
            if P.is_constant(p):
                if P.constant(p) > 0:
                    raise _Unsat()
                continue
            k = _freeze(p)
            if k not in seen:
                seen.add(k)
                out.append(p)
        return out, subst

    def linear_constraints(self, les: list) -> list:
        cons = []
        squares = set()
        for p in les:
            coeffs = {m: c for m, c in p.items() if m != P.ONE}
            cons.append((coeffs, P.constant(p)))
            for m in coeffs:
                if len(m) == 2 and m[0] == m[1]:
                    squares.add(m)
        for m in sorted(squares):
            x = (m[0],)
            cons.append(({m: -1}, 0))  # m >= 0
            cons.append(({m: -1, x: 1}, 0))  # m >= x
            cons.append(({m: -1, x: -1}, 0))  # m >= -x
        cons.extend(_mccormick(les))
        return cons

    # relaxed check --------------------------------------------------------
    def relaxed_unsat(self, lits: list) -> bool:
        try:
            les, _ = self.eliminate_equalities(lits)
        except _Unsat:
            return True
        return _fm_infeasible(self.linear_constraints(les), self.budget)

    # full check -----------------------------------------------------------
    def decide(self, lits: list):
        """Returns (outcome, model over names, reason)."""
        try:
            les, subst = self.eliminate_equalities(lits)
        except _Unsat:
            return UNSAT, None, None
        cons = self.linear_constraints(les)
        outcome, model = solve(cons, self.budget, search_limit=self.limits.candidate_limit)
        if outcome == "unsat":
            return UNSAT, None, None
        nonlinear = sorted({m for p in les for m in P.nonlinear_monomials(p)})
        if outcome == "sat":
            base = {m[0]: v for m, v in model.items() if len(m) == 1}
            if all(_mono_value(m, base) == model.get(m, 0) for m in nonlinear):
                return SAT, _back_substitute(base, subst), None
        if not nonlinear:
            return UNKNOWN, None, model  # linear search gave up (model holds reason)
        return self._split(lits, les, cons, nonlinear, subst)

    def _split(self, lits, les, cons, nonlinear, subst):
        names = sorted({v for m in nonlinear for v in m})
        ranges = []
        for v in names:
            lo, hi = project_bounds(cons, (v,), self.budget)
            if lo is not None and hi is not None and lo > hi:
                return UNSAT, None, None
            size = None if lo is None or hi is None else hi - lo + 1
            ranges.append((size is None, size or 0, v, lo, hi))
        ranges.sort()
        unbounded, size, v, lo, hi = ranges[0]
        exact = not unbounded and size <= self.limits.split_limit
        if exact:
            values = _ordered(lo, hi)
        else:
            w = self.limits.search_window
            values = _ordered(max(-w, lo) if lo is not None else -w, min(w, hi) if hi is not None else w)
        reason = None
        for c in values:
            self.budget.tick()
            sub_lits = [("le", p) for p in les] + [("eq", P.padd(P.var_poly(v), P.const_poly(c), -1))]
            outcome, model, r = self.decide(sub_lits)
            if outcome == SAT:
                return SAT, _back_substitute(model, subst), None
            if outcome == UNKNOWN:
                reason = reason or r
        if exact and reason is None:
            return UNSAT, None, None
        return UNKNOWN, None, reason or f"nonlinear atom {'*'.join(_display(x) for x in nonlinear[0])} unresolved"


def _mccormick(les: list) -> list:
    """Envelope of each degree-2 monomial whose factors have finite unary bounds."""
    facts = _Facts([], les)
    monos = sorted({m for p in les for m in p if len(m) == 2})
    out = []
    for m in monos:
        x, y = m
        lx, hx, ly, hy = facts.lo.get(x), facts.hi.get(x), facts.lo.get(y), facts.hi.get(y)
        if None in (lx, hx, ly, hy):
            continue
        X, Y = (x,), (y,)

        def le(cm, cx, cy, k):  # cm*m + cx*x + cy*y + k <= 0
            d = {}
            for key, c in ((m, cm), (X, cx), (Y, cy)):
                if c:
                    d[key] = d.get(key, 0) + c
            out.append(({k2: v for k2, v in d.items() if v}, k))

        # m >= lx*y + ly*x - lx*ly ; m >= hx*y + hy*x - hx*hy
        le(-1, ly, lx, -lx * ly)
        le(-1, hy, hx, -hx * hy)
        # m <= hx*y + ly*x - hx*ly ; m <= lx*y + hy*x - lx*hy
        le(1, -ly, -hx, hx * ly)
        le(1, -hy, -lx, lx * hy)
    return out


def _display(name: str) -> str:
    kind, _, rest = name.partition("|")
    if kind == "r":
        return "\\result"
    base = rest.rsplit("|", 1)[-1]
    return f"\\old({base})" if kind == "o" else base


def _fm_infeasible(cons, budget) -> bool:
    """Relaxed (rational, tightened) infeasibility: projection only, no search."""
    lo, hi = project_bounds(cons, None, budget)
    return lo is not None and hi is not None and lo > hi


def _unit_var(p: dict) -> Optional[str]:
    in_nonlinear = {v for m in P.nonlinear_monomials(p) for v in m}
    cands = [m[0] for m, c in p.items() if len(m) == 1 and abs(c) == 1 and m[0] not in in_nonlinear]
    return min(cands) if cands else None


def _mono_value(m, base) -> int:
    v = 1
    for name in m:
        v *= base.get(name, 0)
    return v


def _back_substitute(base: dict, subst: list) -> dict:
    model = dict(base)
    for v, repl in reversed(subst):
        model[v] = P.evaluate(repl, model)
    return model


def _ordered(lo: int, hi: int) -> list:
    if lo > hi:
        return []
    centre = min(max(0, lo), hi)
    out = [centre]
    step = 1
    while True:
        grew = False
        if centre + step <= hi:
            out.append(centre + step)
            grew = True
        if centre - step >= lo:
            out.append(centre - step)
            grew = True
        if not grew:
            return out
        step += 1


# --------------------------------------------------------------------------
# DNF walk


class _TooLarge(Exception):
    pass


class _Facts:
    """Cheap consequences of a cube: its equalities as substitutions and unary bounds."""

    def __init__(self, subst: list, les: list):
        self.subst = subst
        self.lo, self.hi = {}, {}
        for p in les:
            lin = [m for m in p if m != P.ONE]
            if len(lin) != 1 or len(lin[0]) != 1:
                continue
            v, c, k = lin[0][0], p[lin[0]], P.constant(p)
            # c*v + k <= 0
            if c > 0:
                b = (-k) // c
                self.hi[v] = min(self.hi.get(v, b), b)
            else:
                b = _ceil_div(k, -c)
                self.lo[v] = max(self.lo.get(v, b), b)

    def reduce(self, p: dict) -> dict:
        for v, repl in self.subst:
            if any(v in m for m in p):
                p = P.substitute(p, v, repl)
        return p

    def range(self, p: dict):
        lo, hi = 0, 0
        for m, c in p.items():
            mlo, mhi = 1, 1
            for v in m:
                a, b = self.lo.get(v), self.hi.get(v)
                mlo, mhi = _imul(mlo, mhi, a, b)
            tlo, thi = _iscale(mlo, mhi, c)
            lo = None if lo is None or tlo is None else lo + tlo
            hi = None if hi is None or thi is None else hi + thi
        return lo, hi

    def literal(self, lit) -> Optional[bool]:
        kind, p = lit
        p = self.reduce(p)
        lo, hi = self.range(p)
        if kind == "le":
            if hi is not None and hi <= 0:
                return True
            if lo is not None and lo > 0:
                return False
            return None
        if lo is not None and lo == hi:
            return lo == 0
        if (lo is not None and lo > 0) or (hi is not None and hi < 0):
            return False
        g = P.content(p)
        if g > 1 and P.constant(p) % g != 0:
            return False
        return None


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _imul(alo, ahi, blo, bhi):
    """Product of intervals; None marks an infinite side."""
    if alo is not None and alo == ahi == 0 or blo is not None and blo == bhi == 0:
        return 0, 0
    if None in (alo, ahi, blo, bhi):
        # sign reasoning only when both are non-negative
        if alo is not None and blo is not None and alo >= 0 and blo >= 0:
            return alo * blo, (None if ahi is None or bhi is None else ahi * bhi)
        return None, None
    cands = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
    return min(cands), max(cands)


def _iscale(lo, hi, c):
    if c >= 0:
        return (None if lo is None else lo * c), (None if hi is None else hi * c)
    return (None if hi is None else hi * c), (None if lo is None else lo * c)


def _quick(g, facts: _Facts, lits_of) -> Optional[bool]:
    """Three-valued evaluation of an NNF formula under ``facts``."""
    if isinstance(g, BoolConst):
        return g.value
    if isinstance(g, tuple):
        return facts.literal(g[1])
    if isinstance(g, Cmp):
        alts = lits_of(g)
        vals = [facts.literal(a) for a in alts]
        if any(v is True for v in vals):
            return True
        return False if all(v is False for v in vals) else None
    if isinstance(g, And):
        unknown = False
        for a in g.args:
            v = _quick(a, facts, lits_of)
            if v is False:
                return False
            unknown |= v is None
        return None if unknown else True
    if isinstance(g, Or):
        unknown = False
        for a in g.args:
            v = _quick(a, facts, lits_of)
            if v is True:
                return True
            unknown |= v is None
        return None if unknown else False
    return None


def _search(f: Formula, theory: _Theory, cap: int):
    """DPLL-style walk: flatten, propagate, branch on the narrowest disjunction."""
    cubes = [0]
    unknown = [None]
    atoms_cache = {}

    def lits_of(c: Cmp):
        r = atoms_cache.get(c)
        if r is None:
            r = cmp_literals(c)
            atoms_cache[c] = r
        return r

    def facts_of(cube):
        try:
            les, subst = theory.eliminate_equalities(cube)
        except _Unsat:
            return None
        return _Facts(subst, les)

    def dfs(pending: list, cube: list):
        cube = list(cube)
        ors = []
        stack = list(pending)
        while True:
            while stack:
                g = stack.pop()
                if isinstance(g, BoolConst):
                    if not g.value:
                        return None
                    continue
                if isinstance(g, And):
                    stack.extend(g.args)
                    continue
                if isinstance(g, tuple):
                    cube.append(g[1])
                    continue
                if isinstance(g, Cmp):
                    alts = lits_of(g)
                    if len(alts) == 1:
                        cube.append(alts[0])
                        continue
                    g = Or(tuple(("lit", a) for a in alts))
                ors.append(g)
            if not ors:
                break
            theory.budget.tick()
            facts = facts_of(cube)
            if facts is None:
                return None
            live = []
            for g in ors:
                alts = []
                done = False
                for a in g.args:
                    v = _quick(a, facts, lits_of)
                    if v is True:
                        done = True
                        break
                    if v is None:
                        alts.append(a)
                if done:
                    continue
                if not alts:
                    return None
                live.append(alts)
            units = [a[0] for a in live if len(a) == 1]
            if units:
                stack.extend(units)
                ors = [Or(tuple(a)) for a in live if len(a) > 1]
                continue
            if not live:
                ors = []
                break
            if theory.relaxed_unsat(cube):
                return None
            live.sort(key=len)
            branch, rest = live[0], [Or(tuple(a)) for a in live[1:]]
            for alt in branch:
                r = dfs(rest + [alt], cube)
                if r is not None:
                    return r
            return None
        cubes[0] += 1
        if cubes[0] > cap:
            raise _TooLarge()
        outcome, model, reason = theory.decide(cube)
        if outcome == SAT:
            return model
        if outcome == UNKNOWN and unknown[0] is None:
            unknown[0] = reason if isinstance(reason, str) else "integer search budget exhausted"
        return None

    model = dfs([f], [])
    return model, unknown[0]


def check_sat(f: Formula, limits: SolverLimits = DEFAULT_LIMITS) -> SolverVerdict:
    """Decide ``f``; every SAT model is re-evaluated against ``f``."""
    g = nnf(f)
    budget = Budget(limits.node_budget)
    theory = _Theory(limits, budget)
    try:
        named, reason = _search(g, theory, limits.dnf_cap)
    except _TooLarge:
        return SolverVerdict(UNKNOWN, None, "formula too large")
    except ResourceExhausted as e:
        return SolverVerdict(UNKNOWN, None, e.reason)
    if named is None:
        if reason is not None:
            return SolverVerdict(UNKNOWN, None, reason)
        return SolverVerdict(UNSAT)
    model = {leaf: named.get(_leaf_name(leaf), 0) for leaf in leaves(f)}
    if not eval_formula(f, lambda t: model[t]):
        raise ModelCheckFailure(f"solver model does not satisfy the query: {model}")
    return SolverVerdict(SAT, model)


def goals(f: Formula, hyps=()) -> list:
    """Split ``H => (A => B1 && B2)`` into ``(H && A, B1)`` and ``(H && A, B2)``."""
    if isinstance(f, Implies):
        return goals(f.right, hyps + (f.left,))
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(goals(a, hyps))
        return out
    if f == TRUE:
        return []
    return [(hyps, f)]


def check_valid(f: Formula, limits: SolverLimits = DEFAULT_LIMITS) -> SolverVerdict:
    """Validity via unsatisfiability of the negation, one conjunct at a time."""
    reason = None
    for hyps, goal in goals(f):
        v = check_sat(conj(*hyps, Not(goal)) if hyps else Not(goal), limits)
        if v.is_sat:
            return v
        if v.is_unknown and reason is None:
            reason = v.reason
    if reason is not None:
        return SolverVerdict(UNKNOWN, None, reason)
    return SolverVerdict(UNSAT)


def entails(a: Formula, b: Formula, limits: SolverLimits = DEFAULT_LIMITS) -> SolverVerdict:
    return check_valid(Implies(a, b), limits)
