from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from helpers import annotate, formula
from microdeduct import oracle
from microdeduct.differential import pipeline_case, wp_case
from microdeduct.frontend import Return, emit_source, parse_module
from microdeduct.logic import FALSE, TRUE, Cmp, Int, Location, Var, conj, render_formula
from microdeduct.solver import SolverLimits, entails
from microdeduct.wp import WPError, describe, function_vcs, generate_vcs, verify, wp

ENTRY = "/*@ requires \\true; */\n"


def body_module(body: str, *names: str):
    src = "".join(f"int {n};\n" for n in names) + ENTRY + "void main() {\n" + body + "\n}\n"
    m = parse_module(src)
    return m, m.function("main")


# --------------------------------------------------------------------------
# wp


def test_assignment_rule():
    m, f = body_module("  out = x;", "out", "x", "in")
    pre = wp(f.body, formula("out == in * in", "out", "x", "in"), m, f)
    assert render_formula(pre) == "x == in * in"


def test_skip():
    q = formula("x > 3", "x")
    assert wp((), q) == q


def test_conditional_splits_guard():
    m, f = body_module("  if (x > 0) { y = x; } else { y = -x; }", "x", "y")
    pre = wp(f.body, formula("y >= 0", "x", "y"), m, f)
    assert entails(TRUE, pre).valid


def test_call_site_requires(example_annotated):
    m = example_annotated
    f = m.function("main")
    pre = wp(f.body[1:2], TRUE, m, f)
    tmp = Var(Location("local", "tmp", "main"))
    instance = conj(Cmp("==", Int(10), Int(10)), Cmp("==", tmp, Var(Location("global", "in"))))
    assert entails(pre, instance).valid


def test_call_uses_contract_only(example_annotated):
    """Changing a callee body (not its contract) leaves the caller's VCs alone."""
    m = example_annotated
    sat = m.function("saturate")
    other = m.replace_function(replace(sat, body=(Return(Int(0)),)))
    assert function_vcs(m, m.function("main")) == function_vcs(other, other.function("main"))


# --------------------------------------------------------------------------
# generate_vcs


def test_running_example_vc_names(example_annotated):
    names = [vc.name for vc in generate_vcs(example_annotated)]
    for want in ("main/ensures", "main/call:saturate/requires", "saturate/ensures"):
        assert want in names
    assert len(names) == len(set(names)) == 8


def test_missing_contract(example):
    with pytest.raises(WPError, match="missing contract for helper 'read_input'"):
        generate_vcs(example)


def test_requires_false_is_vacuous():
    src = "int g;\nvoid h() { g = 1; }\n" + ENTRY + "void main() { g = 0; }\n"
    m = annotate(src)
    rep = verify(m)
    vcs = [vc for vc in generate_vcs(m) if vc.function == "h" and vc.kind == "ensures"]
    assert entails(vcs[0].hypothesis, FALSE).valid
    assert all(r.status == "verified" for r in rep.results)
    assert any("requires \\false" in w for w in rep.warnings)


def test_write_outside_assigns(example_annotated):
    src = emit_source(example_annotated).replace("  out = x;\n", "  out = x;\n  in = 0;\n")
    rep = verify(parse_module(src))
    r = rep.result("write_output/assigns:in")
    assert r.status == "failed"
    assert rep.result("write_output/assigns:out").status == "verified"


def test_loop_vcs():
    src = """int s;
int n;
/*@ requires 0 <= n && n <= 100;
    ensures 2 * s == n * (n + 1);
*/
void main() {
  int i = 0;
  s = 0;
  /*@ loop invariant 0 <= i && i <= n && 2 * s == i * (i + 1); */
  while (i < n) {
    i = i + 1;
    s = s + i;
  }
}
"""
    rep = verify(parse_module(src))
    assert rep.names == ["main/ensures", "main/loop#1/init", "main/loop#1/preserve", "main/loop#1/exit"]
    assert rep.status == "verified"
    wrong = verify(parse_module(src.replace("ensures 2 * s", "ensures 3 * s")))
    assert wrong.result("main/loop#1/exit").status == "failed"


# --------------------------------------------------------------------------
# verify


def test_running_example_verifies(example_annotated):
    rep = verify(example_annotated)
    assert rep.status == "verified"
    assert rep.verified_count == len(rep.results)


def test_weakened_ensures_countermodel(example_source):
    src = example_source.replace(
        "ensures (in <= 10 ==> out == in*in) && (in > 10 ==> out == 100);", "ensures out == in;"
    )
    rep = verify(annotate(src))
    r = rep.result("main/ensures")
    assert r.status == "failed"
    cm = r.countermodel
    assert cm["in"] >= 2 or cm["in"] < 0
    # the oracle agrees the countermodel input breaks the contract
    m = parse_module(src)
    run = oracle.exec_function(m, "main", {Location("global", "in"): cm["in"], Location("global", "out"): 0})
    if run.ok and cm["in"] >= 0:
        assert run.env[Location("global", "out")] != cm["in"]
    assert "countermodel {" in describe(r)


def test_oracle_confirms_smallest_failure(example_source):
    src = example_source.replace(
        "ensures (in <= 10 ==> out == in*in) && (in > 10 ==> out == 100);", "ensures out == in;"
    )
    m = parse_module(src)
    chk = oracle.check_contract(m, "main", bounds={"in": (0, 20), "out": (0, 0)})
    assert chk.kind == "ensures" and chk.env[Location("global", "in")] == 2


def test_cap_gives_unknown(example_annotated):
    rep = verify(example_annotated, SolverLimits(dnf_cap=1, node_budget=1))
    assert rep.status == "unknown"
    assert all(r.status in ("verified", "unknown") for r in rep.results)


# --------------------------------------------------------------------------
# Properties

seeds = st.integers(min_value=0, max_value=10**6)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_wp_sound_and_weakest(seed):
    out = wp_case(seed)
    assert out.unsound is None, out
    assert out.not_weakest is None, out


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_no_false_positives(seed):
    out = pipeline_case(seed)
    assert out.sound, out
    assert out.complete, out
