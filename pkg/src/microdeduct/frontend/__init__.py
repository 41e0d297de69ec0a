"""MicroC frontend: lexing, parsing, validation and pretty-printing."""

from .ast import (
    Assign,
    Assigns,
    Call,
    CallStmt,
    Clause,
    Contract,
    Decl,
    Diagnostic,
    FrontendError,
    FunctionDef,
    If,
    ModuleAst,
    Param,
    Ref,
    Return,
    Span,
    While,
    call_of,
    walk,
)
from .printer import emit_source
from .validate import (
    accessed_globals,
    aliased_globals,
    call_graph,
    check_module,
    parse_module,
    ref_targets,
)

__all__ = [
    "Assign", "Assigns", "Call", "CallStmt", "Clause", "Contract", "Decl", "Diagnostic",
    "FrontendError", "FunctionDef", "If", "ModuleAst", "Param", "Ref", "Return", "Span",
    "While", "accessed_globals", "aliased_globals", "call_graph", "call_of", "check_module",
    "emit_source", "parse_module", "ref_targets", "walk",
]
