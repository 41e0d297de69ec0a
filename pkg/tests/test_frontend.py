import pytest
from hypothesis import given, settings, strategies as st

from helpers import annotate, corpus
from microdeduct import oracle
from microdeduct.frontend import FrontendError, call_graph, emit_source, parse_module
from microdeduct.fuzz import gen_program, with_entry_ensures

ENTRY = "/*@ requires \\true; */\n"


def reject(src: str) -> FrontendError:
    with pytest.raises(FrontendError) as info:
        parse_module(src)
    return info.value


# --------------------------------------------------------------------------
# parse_module


def test_running_example_functions(example):
    assert [f.name for f in example.functions] == ["read_input", "write_output", "saturate", "main"]
    assert example.entry == "main"
    assert example.globals == ("in", "out")


def test_empty_source_has_no_entry():
    e = reject("")
    assert e.categories == {"resolution"}
    assert "no entry" in str(e)


def test_recursion_rejected():
    src = "int g;\nint f(int x) { int y = f(x); return y; }\n" + ENTRY + "void main() { g = f(1); }\n"
    e = reject(src)
    assert "unsupported" in e.categories
    assert "recursion" in str(e)


def test_mutual_recursion_rejected():
    src = (
        "int g;\nvoid a() { b(); }\nvoid b() { a(); }\n" + ENTRY + "void main() { a(); }\n"
    )
    assert "recursion" in str(reject(src))


@pytest.mark.parametrize(
    "src, needle",
    [
        ("int g;\nvoid f(int *p) { *(p + 1) = 0; }\n" + ENTRY + "void main() { int t = 0; f(&t); }", "pointer arithmetic"),
        ("int g;\nvoid f(int **p) { }\n" + ENTRY + "void main() { }", "nested pointers"),
        ("int g;\n" + ENTRY + "void main() { static int t = 0; g = t; }", "static"),
        ("float g;\n" + ENTRY + "void main() { }", "floating-point"),
        ("int g;\n" + ENTRY + "void main() { g = 1.5; }", "floating-point"),
        ("int g;\n" + ENTRY + "void main() { while (g < 3) { g = g + 1; } }", "loop invariant"),
    ],
    ids=["ptr-arith", "nested-ptr", "static-local", "float-decl", "float-literal", "loop-no-invariant"],
)
def test_unsupported_constructs(src, needle):
    e = reject(src)
    assert e.categories == {"unsupported"}
    assert needle in str(e)
    assert all(d.span.line > 0 for d in e.diagnostics)


@pytest.mark.parametrize(
    "src, category",
    [
        ("int g;\n" + ENTRY + "void main() { h = 1; }", "resolution"),
        ("int g;\nint g;\n" + ENTRY + "void main() { }", "resolution"),
        ("int g;\n" + ENTRY + "void main() { g = ; }", "parse"),
        ("int g;\n/*@ requires \\old(g) == 1; */\nvoid main() { }", "resolution"),
        ("int g;\nvoid f(int x) { x = 1; }\n" + ENTRY + "void main() { f(1); }", "unsupported"),
    ],
    ids=["unknown-name", "duplicate", "syntax", "old-in-requires", "param-assign"],
)
def test_other_rejections(src, category):
    assert reject(src).categories == {category}


def test_single_user_contract():
    src = "int g;\n" + ENTRY + "void f() { }\n" + ENTRY + "void main() { f(); }\n"
    e = reject(src)
    assert e.categories == {"unsupported"}
    assert "only the entry function" in str(e)


def test_result_only_in_int_function():
    src = "int g;\n/*@ requires \\true; ensures \\result == 0; */\nvoid main() { }\n"
    assert "resolution" in reject(src).categories


def test_old_of_value_parameter_is_the_parameter():
    src = "int g;\n/*@ requires x >= 0; ensures \\result == \\old(x); */\nint main(int x) { return x; }\n"
    for text in (src, src.replace("\\old(x)", "x")):
        m = parse_module(text)
        assert oracle.check_contract(m, "main").holds


def test_address_only_as_reference_argument():
    src = "int g;\nvoid f(int x) { g = x; }\n" + ENTRY + "void main() { int t = 0; f(&t); }\n"
    reject(src)


# --------------------------------------------------------------------------
# emit_source


def test_emitted_entry_contract(example):
    text = emit_source(example)
    assert "requires in >= 0;" in text
    assert "ensures (in <= 10 ==> out == in * in) && (in > 10 ==> out == 100);" in text


def test_assigns_nothing_rendered(example_annotated):
    text = emit_source(example_annotated)
    assert "assigns \\nothing;" in text
    assert "assigns out;" in text


@pytest.mark.parametrize("name", ["running_example.c", "eval_module.c"])
def test_corpus_round_trip(name):
    m = parse_module(corpus(name))
    once = emit_source(m)
    assert parse_module(once) == m
    assert emit_source(parse_module(once)) == once


def test_annotated_round_trip(example_annotated):
    text = emit_source(example_annotated)
    assert parse_module(text) == example_annotated
    assert emit_source(parse_module(text)) == text


def test_implication_is_right_associative():
    src = "int a;\nint b;\nint c;\n/*@ requires a == 1 ==> b == 1 ==> c == 1; */\nvoid main() { }\n"
    m = parse_module(src)
    explicit = parse_module(src.replace("b == 1 ==> c == 1", "(b == 1 ==> c == 1)"))
    assert m == explicit


def test_and_binds_tighter_than_or():
    src = "int a;\nint b;\nint c;\n/*@ requires a == 1 || b == 1 && c == 1; */\nvoid main() { }\n"
    m = parse_module(src)
    assert m == parse_module(src.replace("b == 1 && c == 1", "(b == 1 && c == 1)"))
    assert m != parse_module(src.replace("a == 1 || b == 1", "(a == 1 || b == 1)"))


seeds = st.integers(min_value=0, max_value=10**6)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_generated_round_trip(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    text = emit_source(m)
    assert parse_module(text) == m
    assert emit_source(parse_module(text)) == text


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_annotated_generated_round_trip(seed):
    m = annotate(with_entry_ensures(gen_program(seed), []))
    text = emit_source(m)
    assert parse_module(text) == m


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_parse_is_deterministic(seed):
    src = with_entry_ensures(gen_program(seed), [])
    assert parse_module(src) == parse_module(src)


_INJECT = [
    ("  int v = ", "  static int w = 0;\n  int v = "),
    ("void main() {", "void main() {\n  float w = 0;"),
    ("void main() {", "void main() {\n  while (v < 0) { v = v + 1; }"),
]


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(_INJECT))
def test_rejection_completeness(seed, inject):
    old, new = inject
    src = with_entry_ensures(gen_program(seed), []).replace(old, new, 1)
    e = reject(src)
    assert "unsupported" in e.categories


# --------------------------------------------------------------------------
# call_graph


def test_call_graph_running_example(example):
    order = list(call_graph(example))
    assert order[-1] == "main"
    assert set(order[:-1]) == {"read_input", "saturate", "write_output"}


def test_call_graph_singleton():
    m = parse_module("int g;\n" + ENTRY + "void main() { g = 1; }\n")
    assert list(call_graph(m)) == ["main"]


def test_call_graph_chain():
    src = "int x;\nvoid g() { x = 1; }\nvoid f() { g(); }\n" + ENTRY + "void main() { f(); }\n"
    assert list(call_graph(parse_module(src))) == ["g", "f", "main"]


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_callees_precede_callers(seed):
    m = parse_module(with_entry_ensures(gen_program(seed), []))
    pos = {name: i for i, name in enumerate(call_graph(m))}
    for f in m.functions:
        for c in f.calls():
            assert pos[c.callee] < pos[f.name]
