import itertools

from hypothesis import given, settings, strategies as st

from helpers import corpus
from microdeduct import oracle
from microdeduct.aux_infer import (
    EMPTY,
    TOP,
    Interval,
    analyze_intervals,
    effects,
    infer_assigns,
    infer_auxiliary,
    infer_validity,
)
from microdeduct.differential import Recorder, entry_runs, interval_escapes
from microdeduct.frontend import Assign, emit_source, parse_module, walk
from microdeduct.fuzz import gen_program, with_entry_ensures
from microdeduct.logic import MACHINE_MAX, Location, Valid, render_formula

ENTRY = "/*@ requires \\true; */\n"
IN, OUT = Location("global", "in"), Location("global", "out")
TMP = Location("local", "tmp", "main")


def _main_points(m, res):
    main = m.function("main")
    spans = [s.span for s in main.body]
    return [res.points.get(("main", sp)) for sp in spans]


# --------------------------------------------------------------------------
# Interval domain


def test_interval_basics():
    assert Interval(0, 10) * Interval(-2, 3) == Interval(-20, 30)
    assert Interval(0, None) + Interval(1, 1) == Interval(1, None)
    assert Interval(0, 5).meet(Interval(6, 9)) == EMPTY
    assert Interval(0, 5).join(Interval(8, 9)) == Interval(0, 9)
    assert Interval(0, 5).widen(Interval(0, 6)) == Interval(0, None)
    assert Interval(0, None).narrow(Interval(0, 7)) == Interval(0, 7)
    assert TOP.is_top and EMPTY.is_empty


ivals = st.builds(
    lambda a, b, lo_inf, hi_inf: Interval(None if lo_inf else min(a, b), None if hi_inf else max(a, b)),
    st.integers(-20, 20),
    st.integers(-20, 20),
    st.booleans(),
    st.booleans(),
)


def _members(i):
    lo = -25 if i.lo is None else i.lo
    hi = 25 if i.hi is None else i.hi
    return range(lo, hi + 1)


@settings(max_examples=300, deadline=None)
@given(ivals, ivals)
def test_arithmetic_is_sound(a, b):
    for x in _members(a):
        for y in _members(b):
            assert (a + b).contains(x + y)
            assert (a - b).contains(x - y)
            assert (a * b).contains(x * y)
    for x in _members(a):
        assert (-a).contains(-x)


@settings(max_examples=200, deadline=None)
@given(ivals, ivals)
def test_lattice_laws(a, b):
    assert a.leq(a.join(b)) and b.leq(a.join(b))
    assert a.meet(b).leq(a) and a.meet(b).leq(b)
    assert a.leq(a.widen(b)) and b.leq(a.widen(b))


# --------------------------------------------------------------------------
# analyze_intervals


def test_entry_seed(example):
    res = analyze_intervals(example)
    assert res.entry["main"][IN] == Interval(0, MACHINE_MAX)


def test_running_example_ranges(example):
    res = analyze_intervals(example)
    after_read, after_sat, after_sq, after_write = _main_points(example, res)
    assert after_read[TMP] == Interval(0, MACHINE_MAX)
    assert after_sat[TMP] == Interval(0, 10)
    assert after_sq[TMP] == Interval(0, 100)
    assert after_write[OUT] == Interval(0, 100)


def test_unreachable_branch():
    src = "int g;\nint h;\n/*@ requires g <= 0; */\nvoid main() {\n  if (g > 5) {\n    h = 1;\n  }\n  h = 2;\n}\n"
    m = parse_module(src)
    res = analyze_intervals(m)
    inner = m.function("main").body[0].then[0]
    assert res.points.get(("main", inner.span)) is None


LOOP = """int s;
int n;
/*@ requires 0 <= n && n <= 50;
    ensures s >= 0;
*/
void main() {
  int i = 0;
  s = 0;
  /*@ loop invariant 0 <= i && i <= n && s >= 0; */
  while (i < n) {
    i = i + 1;
    s = s + i;
  }
}
"""


def test_widening_terminates_quickly():
    m = parse_module(LOOP)
    res = analyze_intervals(m)
    (iters,) = res.loop_iterations.values()
    assert iters <= 3 + res.program_points
    last = res.points[("main", m.function("main").body[1].span)]
    assert last[Location("global", "s")] == Interval(0, 0)
    body_end = res.points[("main", m.function("main").body[2].body[1].span)]
    assert body_end[Location("local", "i", "main")] == Interval(1, 50)


def test_widening_threshold_counts():
    m = parse_module(LOOP)
    quick = analyze_intervals(m, widen_after=1)
    (iters,) = quick.loop_iterations.values()
    assert iters <= 1 + quick.program_points


# --------------------------------------------------------------------------
# infer_assigns / infer_validity


def test_assigns_running_example(example):
    assert infer_assigns(example, "write_output").locations == (OUT,)
    assert infer_assigns(example, "saturate").locations == ()


def test_assigns_transitive():
    src = "int out;\nvoid w(int x) { out = x; }\nvoid f() { w(1); }\n" + ENTRY + "void main() { f(); }\n"
    assert infer_assigns(parse_module(src), "f").locations == (Location("global", "out"),)


def test_validity_deref():
    src = "int g;\nvoid set(int *p) { *p = 1; }\n" + ENTRY + "void main() { int t = 0; set(&t); g = t; }\n"
    assert infer_validity(parse_module(src), "set") == [Valid(Location("param", "p", "set"))]


def test_validity_unused_pointer():
    src = "int g;\nvoid skip(int *p) { g = 1; }\n" + ENTRY + "void main() { int t = 0; skip(&t); }\n"
    assert infer_validity(parse_module(src), "skip") == []


def test_validity_by_reference_output():
    src = (
        "int in;\nint out;\nvoid write_output(int *p, int x) { *p = x; }\n"
        "void forward(int *q) { write_output(q, 3); }\n"
        "/*@ requires \\true; */\nvoid main() { int t = 0; forward(&t); out = t; }\n"
    )
    m = parse_module(src)
    assert infer_validity(m, "write_output") == [Valid(Location("param", "p", "write_output"))]
    assert infer_validity(m, "forward") == [Valid(Location("param", "q", "forward"))]


# --------------------------------------------------------------------------
# infer_auxiliary


def _clauses(m, fn, kind):
    c = m.function(fn).contract
    return [render_formula(x.formula) for x in getattr(c, kind) if x.provenance == "auxiliary"]


def test_saturate_clauses(example_annotated):
    assert "0 <= x && x <= 2147483647" in _clauses(example_annotated, "saturate", "requires")
    assert "0 <= \\result && \\result <= 10" in _clauses(example_annotated, "saturate", "ensures")


def test_write_output_clauses(example_annotated):
    assert "0 <= out && out <= 100" in _clauses(example_annotated, "write_output", "ensures")
    assert example_annotated.function("write_output").contract.assigns.locations == (OUT,)


def test_clause_order(example_annotated):
    c = example_annotated.function("saturate").contract
    provs = [x.provenance for x in c.requires]
    assert provs == sorted(provs, key=lambda p: p != "auxiliary")
    provs = [x.provenance for x in c.ensures]
    assert provs == sorted(provs, key=lambda p: p == "auxiliary")


def test_unbounded_helper_gets_no_ranges():
    src = "int g;\nint id(int a) { return a; }\n" + ENTRY + "void main() { g = id(g); }\n"
    m = infer_auxiliary(parse_module(src))
    assert _clauses(m, "id", "requires") == []
    assert _clauses(m, "id", "ensures") == []


def test_auxiliary_idempotent(example_annotated):
    again = infer_auxiliary(example_annotated)
    assert again == example_annotated
    assert emit_source(again) == emit_source(example_annotated)


def test_eval_module_ranges():
    m = infer_auxiliary(parse_module(corpus("eval_module.c")))
    assert "0 <= \\result && \\result <= 3" in _clauses(m, "alarm_level", "ensures")
    assert "0 <= \\result && \\result <= 200" in _clauses(m, "scale_pressure", "ensures")


# --------------------------------------------------------------------------
# Properties

seeds = st.integers(min_value=0, max_value=10**6)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_interval_soundness(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    rec = Recorder()
    if entry_runs(m, rec) is None:
        return
    assert interval_escapes(analyze_intervals(m), rec) == []


class _Interp(oracle.Interpreter):
    def write(self, frame, loc, value, span):
        cell = self._cell(frame, loc, span) if loc.kind == "deref" else loc
        if cell is not None and cell.kind in ("global", "deref"):
            self.writes.add(cell)
        self.spans.add(span)
        return super().write(frame, loc, value, span)


def _write_spans(m, fn, seen=None):
    """Spans of every write statement in ``fn`` and its callees."""
    seen = set() if seen is None else seen
    f = m.function(fn)
    out = {s.span for s in walk(f.body) if isinstance(s, Assign) and s.target.kind in ("global", "deref")}
    for c in f.calls():
        if c.callee not in seen:
            seen.add(c.callee)
            out |= _write_spans(m, c.callee, seen)
    return out


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_effects_sound_and_exact_when_reachable(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    eff = effects(m)
    for h in m.helpers:
        locs = oracle.contract_locations(m, h.name)
        writes, spans = set(), set()
        for combo in itertools.product(range(-3, 4), repeat=len(locs)):
            pre = dict(zip(locs, combo))
            it = _Interp(m)
            it.writes, it.spans = writes, spans
            it.cells = {l: v for l, v in pre.items() if l.kind != "param"}
            vals = {h.param_loc(p): pre[h.param_loc(p)] for p in h.value_params}
            refs = {p.name: h.deref_loc(p) for p in h.ref_params}
            try:
                it.run(oracle._Frame(h.name, vals, refs))
            except Exception:
                pass  # a fault ends the run; the writes so far still count
        assert writes <= set(eff[h.name])
        if _write_spans(m, h.name) <= spans:
            assert writes == set(eff[h.name])


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_idempotence_generated(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    once = infer_auxiliary(m)
    assert infer_auxiliary(parse_module(emit_source(once))) == once
