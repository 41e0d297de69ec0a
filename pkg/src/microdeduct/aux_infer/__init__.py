"""Auxiliary contract inference: value ranges, frame conditions and pointer validity."""

from __future__ import annotations

from ..frontend.ast import Assigns, Clause, Contract, ModuleAst
from ..logic import RESULT, Int, Location, Valid, Var, eq, in_range
from .effects import effects, read_globals, used_pointers
from .intervals import (
    EMPTY,
    MACHINE,
    TOP,
    Interval,
    IntervalResult,
    analyze_function,
    analyze_intervals,
)


def infer_assigns(m: ModuleAst, fn: str, eff=None) -> Assigns:
    """The transitive write set of ``fn`` (empty renders as ``\\nothing``)."""
    eff = eff if eff is not None else effects(m)
    return Assigns(tuple(sorted(eff[fn], key=lambda l: l.sort_key)), "auxiliary")


def infer_validity(m: ModuleAst, fn: str, used=None) -> list:
    """``\\valid(p)`` for each reference parameter dereferenced here or below."""
    used = used if used is not None else used_pointers(m)
    f = m.function(fn)
    return [Valid(Location("param", p.name, fn)) for p in f.ref_params if p.name in used[fn]]


def _range_clause(term, iv: Interval):
    if iv.lo is not None and iv.lo == iv.hi:
        return Clause(eq(term, Int(iv.lo)), "auxiliary")
    return Clause(in_range(term, iv.lo, iv.hi), "auxiliary")


def _strip(m: ModuleAst) -> ModuleAst:
    for h in m.helpers:
        if h.contract is not None:
            m = m.replace_function(h.with_contract(h.contract.without("auxiliary")))
    return m


def infer_auxiliary(m: ModuleAst, intervals: IntervalResult = None) -> ModuleAst:
    """Merge range, validity and assigns clauses into every helper contract.

    Existing auxiliary clauses are replaced, so a second run changes nothing.
    """
    m = _strip(m)
    res = intervals or analyze_intervals(m)
    eff = effects(m)
    reads = read_globals(m)
    used = used_pointers(m)
    out = m
    for h in m.helpers:
        base = h.contract or Contract()
        entry = res.entry.get(h.name)
        req, ens = [], []
        if entry is not None:
            locs = list(h.param_locations) + sorted(reads[h.name], key=lambda l: l.sort_key)
            locs += list(h.deref_locations)
            for loc in locs:
                iv = entry.get(loc, MACHINE).meet(MACHINE)
                if iv != MACHINE and not iv.is_empty:
                    req.append(_range_clause(Var(loc), iv))
            exit_env = analyze_function(m, h.name, entry).exit.get(h.name)
            if exit_env is not None:
                written = [l for l in sorted(eff[h.name], key=lambda l: l.sort_key)]
                targets = [(Var(l), exit_env.get(l, TOP)) for l in written]
                if h.returns_int:
                    targets.append((RESULT, exit_env.get(RESULT, TOP)))
                for term, iv in targets:
                    if iv.is_empty or MACHINE.leq(iv):
                        continue
                    if iv.finite:
                        ens.append(_range_clause(term, iv))
        req += [Clause(v, "auxiliary") for v in infer_validity(m, h.name, used)]
        contract = Contract(
            tuple(req) + base.requires,
            base.ensures + tuple(ens),
            infer_assigns(m, h.name, eff),
        )
        out = out.replace_function(h.with_contract(contract))
    return out


__all__ = [
    "EMPTY",
    "MACHINE",
    "TOP",
    "Interval",
    "IntervalResult",
    "analyze_function",
    "analyze_intervals",
    "effects",
    "infer_assigns",
    "infer_auxiliary",
    "infer_validity",
]
