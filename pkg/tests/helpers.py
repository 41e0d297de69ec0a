"""Helpers shared by the test modules."""

from __future__ import annotations

from importlib import resources

from microdeduct.aux_infer import infer_auxiliary
from microdeduct.frontend import emit_source, parse_module
from microdeduct.func_infer import analyze
from microdeduct.logic import Location, Var


def corpus(name: str) -> str:
    return resources.files("microdeduct.corpus").joinpath(name).read_text(encoding="utf-8")


def formula(text: str, *names: str, result: bool = True):
    """Parse ``text`` as an ensures clause over globals ``names``."""
    decls = "".join(f"int {n};\n" for n in names)
    ret = "int" if result else "void"
    body = "return 0;" if result else ""
    src = f"{decls}/*@ requires \\true;\n    ensures {text};\n*/\n{ret} main() {{ {body} }}\n"
    return parse_module(src).function("main").contract.post


def g(name: str) -> Var:
    return Var(Location("global", name))


def annotate(source: str):
    """Functional then auxiliary inference, each through emitted text."""
    m = parse_module(emit_source(analyze(parse_module(source)).module))
    return parse_module(emit_source(infer_auxiliary(m)))
