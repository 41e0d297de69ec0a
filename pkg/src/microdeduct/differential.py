"""One-case checks behind the differential campaigns.

Each ``*_case(seed)`` function generates a case, runs the tool and the
oracle on it, and returns an outcome record; campaigns (tests, scripts) loop
over seeds and aggregate.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from . import oracle
from .aux_infer import analyze_intervals, infer_auxiliary
from .frontend import emit_source, parse_module
from .func_infer import InferenceFailure, analyze
from .fuzz import gen_candidate_post, gen_program, gen_solver_case, gen_stmt_case, with_entry_ensures
from .logic import Location, Var, conj, eval_formula, in_range, render_formula
from .solver import SolverLimits, check_sat
from .wp import verify, wp

DOMAIN = (-8, 8)


# --------------------------------------------------------------------------
# Solver vs enumeration


@dataclass(frozen=True)
class SolverOutcome:
    seed: int
    formula: str
    verdict: str  # SAT | UNSAT | UNKNOWN
    truth: bool  # satisfiable on the domain box
    agrees: bool  # verdict consistent with the box (UNKNOWN counts as consistent)
    model_ok: bool = True  # a SAT model satisfies the formula


def solver_case(seed: int, limits: SolverLimits = SolverLimits()) -> SolverOutcome:
    """Compare a verdict with enumeration over [-8, 8].

    The formula is conjoined with the box bounds, so enumeration is the exact
    truth and any SAT/UNSAT disagreement is a solver bug.
    """
    f, locs = gen_solver_case(seed)
    boxed = conj(f, *(in_range(Var(l), *DOMAIN) for l in locs))
    v = check_sat(boxed, limits)
    truth = oracle.check_formula(f, {l: DOMAIN for l in locs}).witness is not None
    agrees = v.is_unknown or (v.is_sat == truth)
    model_ok = not v.is_sat or eval_formula(boxed, v.model)
    return SolverOutcome(seed, render_formula(f), v.outcome, truth, agrees, model_ok)


# --------------------------------------------------------------------------
# WP vs execution


@dataclass(frozen=True)
class WPOutcome:
    seed: int
    source: str
    post: str
    checked: int
    unsound: Optional[dict] = None  # env satisfying wp whose run misses the post
    not_weakest: Optional[dict] = None  # env reaching the post that wp rejects


def wp_case(seed: int) -> WPOutcome:
    case = gen_stmt_case(seed)
    m = parse_module(case.source)
    f = m.function("main")
    pre = wp(f.body, case.post, m, f)
    locs = [Location("global", g) for g in case.names]
    order = [Var(l) for l in locs]
    post_fn = oracle.compile_formula(case.post, order)
    pre_fn = oracle.compile_formula(pre, order)
    unsound = not_weakest = None
    checked = 0
    for values in itertools.product(range(DOMAIN[0], DOMAIN[1] + 1), repeat=len(locs)):
        env = dict(zip(locs, values))
        checked += 1
        run = oracle.exec_function(m, "main", env)
        assert run.ok, run.fault  # generated statements cannot fault on the box
        post_holds = post_fn(*(run.env[l] for l in locs))
        pre_holds = pre_fn(*values)
        if pre_holds and not post_holds and unsound is None:
            unsound = {str(k): v for k, v in env.items()}
        if post_holds and not pre_holds and not_weakest is None:
            not_weakest = {str(k): v for k, v in env.items()}
    return WPOutcome(seed, case.source, render_formula(case.post), checked, unsound, not_weakest)


# --------------------------------------------------------------------------
# Whole pipeline vs execution


class Recorder(oracle.Tracer):
    """Observed values per program point, function entry and exit."""

    def __init__(self):
        self.points = {}
        self.entries = {}
        self.exits = {}

    @staticmethod
    def _add(store, key, values):
        seen = store.setdefault(key, {})
        for loc, v in values.items():
            seen.setdefault(loc, set()).add(v)

    def point(self, fn, span, values):
        self._add(self.points, (fn, span), values)

    def enter(self, fn, values):
        self._add(self.entries, fn, values)

    def exit(self, fn, values, result):
        self._add(self.exits, fn, values)


@dataclass
class PipelineOutcome:
    seed: int
    source: str = ""
    status: str = "ok"  # ok | skipped | inference-failed
    contract_true: Optional[bool] = None
    verdict: Optional[str] = None  # wp report status
    helper_violations: list = field(default_factory=list)  # (helper, detail)
    interval_escapes: list = field(default_factory=list)  # (where, location, value, interval)
    dropped: bool = False
    runs: int = 0

    @property
    def sound(self) -> bool:
        """No helper counterexample and no verified-but-false entry contract."""
        return not self.helper_violations and not (self.verdict == "verified" and self.contract_true is False)

    @property
    def complete(self) -> bool:
        """A true entry contract was verified."""
        return not self.contract_true or self.verdict == "verified"


def entry_runs(m, recorder=None):
    """Final global values of ``main`` for every box state; None on a fault."""
    locs = list(m.global_locations)
    finals = []
    for values in itertools.product(range(DOMAIN[0], DOMAIN[1] + 1), repeat=len(locs)):
        env = dict(zip(locs, values))
        run = oracle.exec_function(m, m.entry, env, tracer=recorder)
        if not run.ok:
            return None
        finals.append((env, run.env))
    return finals


def interval_escapes(res, rec: Recorder) -> list:
    out = []

    def check(where, env, observed):
        if env is None:
            return
        for loc, vals in observed.items():
            iv = env.get(loc)
            if iv is None:
                continue
            for v in vals:
                if not iv.contains(v):
                    out.append((where, str(loc), v, str(iv)))

    for key, observed in rec.points.items():
        check(f"{key[0]}@{key[1]}", res.points.get(key), observed)
    for fn, observed in rec.entries.items():
        check(f"{fn}/entry", res.entry.get(fn), observed)
    return out


def pipeline_case(seed: int, candidate: bool = True) -> PipelineOutcome:
    """Generate a program, build a true entry contract plus an optional random
    clause, and compare the pipeline's verdict and contracts with execution."""
    case = gen_program(seed)
    out = PipelineOutcome(seed)
    base = parse_module(with_entry_ensures(case, []))
    rec = Recorder()
    finals = entry_runs(base, rec)
    if finals is None:
        out.status = "skipped"  # a run faulted; no meaningful contract
        return out
    out.runs = len(finals)
    out.interval_escapes = interval_escapes(analyze_intervals(base), rec)

    clauses = []
    for g in base.global_locations:
        vals = [post[g] for _, post in finals]
        clauses.append(f"{min(vals)} <= {g} && {g} <= {max(vals)}")
    rng = random.Random(seed ^ 0x5EED)
    if candidate and rng.random() < 0.5:
        clauses.append(gen_candidate_post(rng, case.globals))
    src = with_entry_ensures(case, clauses)
    out.source = src
    m = parse_module(src)
    out.contract_true = oracle.check_contract(m, m.entry, default=DOMAIN).holds

    try:
        fr = analyze(m)
    except InferenceFailure:
        out.status = "inference-failed"
        return out
    out.dropped = bool(fr.notes)
    annotated = parse_module(emit_source(infer_auxiliary(parse_module(emit_source(fr.module)))))
    for h in annotated.helpers:
        chk = oracle.check_contract(annotated, h.name, default=DOMAIN)
        if chk.status == "counterexample":
            out.helper_violations.append((h.name, f"{chk.kind}: {chk.detail} at {chk.env}"))
    out.verdict = verify(annotated).status
    return out


__all__ = [
    "DOMAIN",
    "Recorder",
    "entry_runs",
    "interval_escapes",
    "PipelineOutcome",
    "SolverOutcome",
    "WPOutcome",
    "pipeline_case",
    "solver_case",
    "wp_case",
]
