import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import formula, g
from microdeduct import oracle
from microdeduct.frontend import Assigns, Clause, Contract, parse_module
from microdeduct.fuzz import gen_program, with_entry_ensures
from microdeduct.logic import FALSE, TRUE, Location

# A hand-written saturate contract in the expected inferred shape.
SATURATE = """int in;
int out;

/*@ requires 0 <= x <= 2147483647; // auxiliary
    requires lim == 10 && x == in; // functional
    ensures 0 <= \\result <= 10; // auxiliary
    ensures (\\result == \\old(in) || \\result == 10) && in == \\old(in); // functional
    assigns \\nothing; // auxiliary
*/
int saturate(int x, int lim) {
  if (x > lim) return lim;
  else return x;
}

/*@ requires in >= 0; */
void main() {
  int tmp = saturate(in, 10);
  out = tmp;
}
"""

IN, OUT = Location("global", "in"), Location("global", "out")


# --------------------------------------------------------------------------
# exec_function


@pytest.mark.parametrize("x, expected", [(7, 7), (15, 10)])
def test_saturate_runs(example, x, expected):
    run = oracle.exec_function(example, "saturate", {IN: 0, OUT: 0}, (x, 10))
    assert run.ok and run.result == expected


def test_main_squares(example):
    run = oracle.exec_function(example, "main", {IN: 5, OUT: 0})
    assert run.ok and run.env[OUT] == 25


def test_overflow_fault(example):
    run = oracle.exec_function(example, "main", {IN: 10, OUT: 0})
    assert run.ok
    src = "int g;\n/*@ requires \\true; */\nvoid main() { g = g * g; }\n"
    run = oracle.exec_function(parse_module(src), "main", {Location("global", "g"): 2**16})
    assert run.status == "fault" and run.fault.kind == "overflow"
    assert run.fault.span.line == 3


def test_invalid_dereference():
    src = "int g;\nvoid set(int *p) { *p = 1; }\n/*@ requires \\true; */\nvoid main() { int t = 0; set(&t); }\n"
    m = parse_module(src)
    run = oracle.exec_function(m, "set", {Location("global", "g"): 0}, (None,))
    assert run.fault is not None and run.fault.kind == "invalid-deref"


def test_budget_is_distinct():
    src = (
        "int g;\n/*@ requires \\true; */\nvoid main() {\n"
        "  /*@ loop invariant \\true; */\n  while (g == g) { g = 0; }\n}\n"
    )
    run = oracle.exec_function(parse_module(src), "main", {Location("global", "g"): 0}, budget=500)
    assert run.status == "budget"


# --------------------------------------------------------------------------
# check_contract


def test_reference_saturate_contract_holds():
    m = parse_module(SATURATE)
    chk = oracle.check_contract(m, "saturate", bounds={"in": (0, 20), "x": (0, 20), "lim": (10, 10), "out": (0, 0)})
    assert chk.holds
    assert chk.checked == 21


def test_requires_false_is_vacuous(example):
    c = Contract((Clause(FALSE),), (Clause(FALSE),))
    chk = oracle.check_contract(example, "saturate", c)
    assert chk.holds and chk.checked == 0


def test_wrong_result_counterexample(example):
    res = formula("\\result == 0")
    c = Contract((), (Clause(res),))
    chk = oracle.check_contract(example, "saturate", c, bounds={"x": (1, 1), "lim": (10, 10), "in": (0, 0), "out": (0, 0)})
    assert chk.status == "counterexample" and chk.kind == "ensures"
    assert chk.env[Location("param", "x", "saturate")] == 1


def test_refusal_above_cap(example):
    with pytest.raises(oracle.EnumerationRefused):
        oracle.check_contract(example, "saturate", default=(-1000, 1000))


def test_assigns_violation_reported(example):
    c = Contract((), (), Assigns(()))
    chk = oracle.check_contract(example, "write_output", c, default=(-2, 2))
    assert chk.kind == "assigns" and "out" in chk.detail


# --------------------------------------------------------------------------
# check_formula


def test_square_bound_holds():
    chk = oracle.check_formula(formula("x <= 10 ==> x * x <= 100", "x"), {g("x"): (0, 10)})
    assert chk.holds_for_all


def test_square_dominates():
    assert oracle.check_formula(formula("x * x >= x", "x"), {g("x"): (-5, 5)}).holds_for_all


def test_strict_square_counterexample():
    chk = oracle.check_formula(formula("x * x > x", "x"), {g("x"): (0, 5)})
    assert not chk.holds_for_all and chk.counterexample == {g("x"): 0}
    assert chk.witness == {g("x"): 2}


def test_constant_formula():
    assert oracle.check_formula(TRUE).holds_for_all


# --------------------------------------------------------------------------
# Properties

seeds = st.integers(min_value=0, max_value=10**6)


@settings(max_examples=40, deadline=None)
@given(seeds, st.randoms(use_true_random=False))
def test_assigns_check_is_exact(seed, rnd):
    """A violation is flagged iff some run changes a location outside the set."""
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    h = rnd.choice(m.helpers)
    globs = list(m.global_locations)
    allowed = tuple(l for l in globs if rnd.random() < 0.5)
    chk = oracle.check_contract(m, h.name, Contract((), (), Assigns(allowed)), default=(-3, 3))
    if chk.kind in ("fault", "budget"):
        return
    locs = oracle.contract_locations(m, h.name)
    changed = False
    for combo in itertools.product(range(-3, 4), repeat=len(locs)):
        pre = dict(zip(locs, combo))
        args = [h.deref_loc(p) if p.is_ref else pre[h.param_loc(p)] for p in h.params]
        store = {l: v for l, v in pre.items() if l.kind != "param"}
        run = oracle.exec_function(m, h.name, store, args)
        if any(run.env[l] != pre[l] for l in store if l not in allowed):
            changed = True
            break
    assert (chk.kind == "assigns") == changed


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_deterministic_counterexamples(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    rng = random.Random(seed)
    h = rng.choice(m.helpers)
    c = Contract((), (Clause(FALSE),))
    a = oracle.check_contract(m, h.name, c, default=(-2, 2))
    b = oracle.check_contract(m, h.name, c, default=(-2, 2))
    assert a == b
    if a.status == "counterexample" and a.kind == "ensures":
        # the first environment in lexicographic enumeration order
        locs = oracle.contract_locations(m, h.name)
        assert [a.env[l] for l in locs] == [-2] * len(locs)
