import itertools

import pytest
from hypothesis import given, settings, strategies as st

from helpers import formula
from microdeduct import oracle
from microdeduct.frontend import emit_source, parse_module
from microdeduct.func_infer import (
    FuncInferConfig,
    InferenceFailure,
    analyze,
    infer_functional,
    infer_requires,
    summarize,
    symexec,
)
from microdeduct.fuzz import gen_program, with_entry_ensures
from microdeduct.logic import (
    FALSE,
    RESULT,
    Int,
    Location,
    Old,
    Var,
    conj,
    eval_formula,
    free_locations,
    map_formula,
)
from microdeduct.solver import entails

ENTRY = "/*@ requires \\true; */\n"


def as_params(f, fn, *names):
    """Rename globals ``names`` to parameters of ``fn`` (test formulas are read as globals)."""

    def leaf(t):
        if isinstance(t, (Var, Old)) and t.loc.kind == "global" and t.loc.name in names:
            return Var(Location("param", t.loc.name, fn))
        return None

    return map_formula(f, leaf)


def mutual(a, b) -> bool:
    return entails(a, b).valid and entails(b, a).valid


# --------------------------------------------------------------------------
# symexec


def test_saturate_site(example):
    (site,) = [s for s in symexec(example) if s.callee == "saturate"]
    assert site.caller == "main"
    (binding,) = site.binding
    assert dict(binding)["lim"] == Int(10)
    assert dict(binding)["x"] == Old(Location("global", "in"))
    want = as_params(formula("lim == 10 && x == in", "lim", "x", "in"), "saturate", "lim", "x")
    assert entails(site.context, want).valid


def test_write_output_site(example):
    (site,) = [s for s in symexec(example) if s.callee == "write_output"]
    names = ("x", "in")
    exact = as_params(formula("(in * in == x && 0 <= in && in <= 10) || (10 * 10 == x && in >= 11)", *names), "write_output", "x")
    sliced = as_params(formula("x == 100 || (x == in * in && 0 <= in && in <= 10)", *names), "write_output", "x")
    # the recorded context is a sound weakening of the exact one
    assert entails(exact, site.context).valid
    assert entails(site.context, sliced).valid


def test_context_vocabulary(example):
    for s in symexec(example):
        callee = example.function(s.callee)
        allowed = set(example.global_locations) | set(callee.param_locations) | set(callee.deref_locations)
        fl = free_locations(s.context)
        assert fl.current <= allowed and not fl.old


def test_unsatisfiable_entry(example_source):
    src = example_source.replace("requires in >= 0;", "requires in >= 0 && in < 0;")
    res = analyze(parse_module(src))
    assert res.summaries == []
    assert any("unsatisfiable" in w for w in res.warnings)
    assert all(res.requires[h] == FALSE for h in res.requires)


def test_state_cap_is_inference_failure():
    lines = ["int g;", "int h;", ENTRY + "void main() {"]
    for i in range(8):
        lines.append(f"  if (g > {i}) {{ h = h + {i}; }} else {{ h = h - {i}; }}")
    lines.append("}")
    with pytest.raises(InferenceFailure):
        analyze(parse_module("\n".join(lines) + "\n"), FuncInferConfig(state_cap=16, prune=False))


# --------------------------------------------------------------------------
# infer_requires


def test_saturate_requires(example):
    res = analyze(example)
    want = as_params(formula("lim == 10 && x == in && in >= 0", "lim", "x", "in"), "saturate", "lim", "x")
    assert mutual(res.requires["saturate"], want)


def test_two_sites_disjoin():
    src = "int g;\nint h(int a) { return a; }\n" + ENTRY + "void main() { int t = h(1); t = h(2); g = t; }\n"
    res = analyze(parse_module(src))
    assert mutual(res.requires["h"], as_params(formula("a == 1 || a == 2", "a", "g"), "h", "a"))


def test_uncalled_helper():
    src = "int g;\nvoid h() { g = 1; }\n" + ENTRY + "void main() { g = 0; }\n"
    res = analyze(parse_module(src))
    assert res.requires["h"] == FALSE
    assert infer_requires("h", res.summaries) == FALSE
    assert any("never called" in w for w in res.warnings)


# --------------------------------------------------------------------------
# summarize


def test_saturate_ensures(example):
    res = analyze(example)
    ens = res.ensures["saturate"]
    pre = res.requires["saturate"]
    assert entails(conj(pre, ens), formula("\\result == \\old(in) || \\result == 10", "in")).valid
    assert entails(ens, formula("in == \\old(in)", "in")).valid


def test_empty_body_is_identity_frame():
    src = "int a;\nint b;\nvoid nop() { }\n" + ENTRY + "void main() { nop(); }\n"
    m = parse_module(src)
    ens = summarize(m, "nop", formula("\\true", "a", "b"))
    assert mutual(ens, formula("a == \\old(a) && b == \\old(b)", "a", "b", result=False))


def test_read_input_ensures(example):
    res = analyze(example)
    ens = res.ensures["read_input"]
    assert entails(ens, formula("\\result == \\old(in) && in == \\old(in)", "in")).valid
    chk = oracle.check_contract(res.module, "read_input", bounds={"in": (-8, 8), "out": (-2, 2)})
    assert chk.holds


# --------------------------------------------------------------------------
# infer_functional


def test_all_helpers_annotated(example):
    m = infer_functional(example)
    for h in m.helpers:
        assert h.contract is not None and h.contract.requires
        assert all(c.provenance == "functional" for c in h.contract.requires)
    assert m.function("main").contract == example.function("main").contract


def test_no_helpers_is_identity():
    m = parse_module("int g;\n/*@ requires g >= 0; ensures g == 1; */\nvoid main() { g = 1; }\n")
    assert infer_functional(m) == m


def test_chain():
    src = (
        "int g;\nint r;\n"
        "int inner(int a) { return a + 1; }\n"
        "void outer(int b) { r = inner(b * 2); }\n"
        "/*@ requires -5 <= g && g <= 5; ensures r == 2 * g + 1; */\n"
        "void main() { outer(g); }\n"
    )
    m = infer_functional(parse_module(src))
    assert emit_source(m).index("int inner") < emit_source(m).index("void outer")
    for name in ("inner", "outer"):
        assert m.function(name).contract is not None
        assert oracle.check_contract(m, name).holds


def test_rerun_replaces_functional_clauses(example):
    once = infer_functional(example)
    assert infer_functional(parse_module(emit_source(once))) == once


# --------------------------------------------------------------------------
# Properties

seeds = st.integers(min_value=0, max_value=10**6)


class _Sites(oracle.Tracer):
    def __init__(self):
        self.seen = []

    def call_enter(self, caller, call, callee_values):
        self.seen.append((call.callee, dict(callee_values)))


def _analyzed(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    try:
        return m, analyze(m)
    except InferenceFailure:
        return m, None


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_requires_soundness(seed):
    m, res = _analyzed(seed)
    if res is None:
        return
    locs = list(m.global_locations)
    for values in itertools.product(range(-8, 9, 4), repeat=len(locs)):
        tr = _Sites()
        run = oracle.exec_function(m, m.entry, dict(zip(locs, values)), tracer=tr)
        if not run.ok:
            continue
        for callee, vals in tr.seen:
            env = {Var(l): v for l, v in vals.items()}
            assert eval_formula(res.requires[callee], env), (callee, vals)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_ensures_soundness(seed):
    m, res = _analyzed(seed)
    if res is None:
        return
    for h in res.module.helpers:
        chk = oracle.check_contract(res.module, h.name, default=(-6, 6))
        assert chk.status != "counterexample", (h.name, chk)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ensures_exactness(seed):
    """Without dropped constraints, ensures pins down every post value."""
    m, res = _analyzed(seed)
    if res is None or res.notes:
        return
    for h in res.module.helpers:
        c = h.contract
        locs = oracle.contract_locations(res.module, h.name)
        for combo in itertools.product(range(-3, 4), repeat=len(locs)):
            pre = dict(zip(locs, combo))
            pre_env = {Var(l): v for l, v in pre.items()}
            if not eval_formula(c.pre, pre_env):
                continue
            args = [h.deref_loc(p) if p.is_ref else pre[h.param_loc(p)] for p in h.params]
            store = {l: v for l, v in pre.items() if l.kind != "param"}
            run = oracle.exec_function(res.module, h.name, store, args)
            if not run.ok:
                continue
            env = {Old(l): v for l, v in pre.items()}
            env.update({Var(l): v for l, v in pre.items() if l.kind == "param"})
            env.update({Var(l): run.env[l] for l in store})
            if h.returns_int:
                env[RESULT] = run.result
            assert eval_formula(c.post, env)
            for key in [k for k in env if not isinstance(k, Old) and not (isinstance(k, Var) and k.loc.kind == "param")]:
                bumped = dict(env)
                bumped[key] += 1
                assert not eval_formula(c.post, bumped), (h.name, key, pre)
