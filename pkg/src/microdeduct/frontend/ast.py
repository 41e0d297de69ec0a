"""MicroC abstract syntax.  Expressions are :mod:`microdeduct.logic` trees."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..logic import Formula, Location, Term, conj

PROVENANCES = ("user", "functional", "auxiliary")


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NO_SPAN = Span(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: Span
    message: str
    category: str  # parse | unsupported | resolution

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: [{self.category}] {self.message}"


class FrontendError(Exception):
    """Raised when a module is rejected; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def categories(self) -> set:
        return {d.category for d in self.diagnostics}


# --------------------------------------------------------------------------
# Contracts


@dataclass(frozen=True)
class Clause:
    formula: Formula
    provenance: str = "user"


@dataclass(frozen=True)
class Assigns:
    locations: tuple  # empty tuple renders as \nothing
    provenance: str = "user"


@dataclass(frozen=True)
class Contract:
    requires: tuple = ()
    ensures: tuple = ()
    assigns: Optional[Assigns] = None

    @property
    def pre(self) -> Formula:
        return conj(*(c.formula for c in self.requires))

    @property
    def post(self) -> Formula:
        return conj(*(c.formula for c in self.ensures))

    @property
    def assigned(self) -> Optional[frozenset]:
        return None if self.assigns is None else frozenset(self.assigns.locations)

    @property
    def has_user_clauses(self) -> bool:
        clauses = [*self.requires, *self.ensures]
        if self.assigns is not None:
            clauses.append(self.assigns)
        return any(c.provenance == "user" for c in clauses)

    def without(self, provenance: str) -> "Contract":
        assigns = self.assigns
        if assigns is not None and assigns.provenance == provenance:
            assigns = None
        return Contract(
            tuple(c for c in self.requires if c.provenance != provenance),
            tuple(c for c in self.ensures if c.provenance != provenance),
            assigns,
        )

    def is_empty(self) -> bool:
        return not self.requires and not self.ensures and self.assigns is None


# --------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Ref:
    """Address argument: ``&x``, or a reference parameter passed on (target ``*p``)."""

    loc: Location


Arg = Union[Term, Ref]


@dataclass(frozen=True)
class Call:
    callee: str
    args: tuple
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Decl:
    loc: Location
    init: Union[Term, Call]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Location
    value: Union[Term, Call]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class CallStmt:
    call: Call
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class If:
    cond: Formula
    then: tuple
    orelse: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class While:
    cond: Formula
    invariants: tuple
    body: tuple
    span: Span = field(default=NO_SPAN, compare=False)

    @property
    def invariant(self) -> Formula:
        return conj(*self.invariants)


@dataclass(frozen=True)
class Return:
    value: Optional[Term] = None
    span: Span = field(default=NO_SPAN, compare=False)


Stmt = Union[Decl, Assign, CallStmt, If, While, Return]


def call_of(stmt) -> Optional[Call]:
    if isinstance(stmt, CallStmt):
        return stmt.call
    if isinstance(stmt, (Decl, Assign)) and isinstance(
        stmt.init if isinstance(stmt, Decl) else stmt.value, Call
    ):
        return stmt.init if isinstance(stmt, Decl) else stmt.value
    return None


def walk(stmts):
    """Pre-order iteration over statements, descending into branches and loops."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)
        elif isinstance(s, While):
            yield from walk(s.body)


def site_index(f) -> dict:
    """Call span -> occurrence number of that callee within ``f`` (from 1)."""
    out, seen = {}, {}
    for c in f.calls():
        seen[c.callee] = seen.get(c.callee, 0) + 1
        out[c.span] = seen[c.callee]
    return out


# --------------------------------------------------------------------------
# Functions and modules


@dataclass(frozen=True)
class Param:
    name: str
    is_ref: bool = False


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple
    returns_int: bool
    body: tuple
    contract: Optional[Contract] = None
    span: Span = field(default=NO_SPAN, compare=False)

    def param_loc(self, p: Param) -> Location:
        return Location("param", p.name, self.name)

    def deref_loc(self, p: Param) -> Location:
        return Location("deref", p.name, self.name)

    @property
    def value_params(self) -> tuple:
        return tuple(p for p in self.params if not p.is_ref)

    @property
    def ref_params(self) -> tuple:
        return tuple(p for p in self.params if p.is_ref)

    @property
    def param_locations(self) -> tuple:
        return tuple(self.param_loc(p) for p in self.value_params)

    @property
    def deref_locations(self) -> tuple:
        return tuple(self.deref_loc(p) for p in self.ref_params)

    def calls(self):
        for s in walk(self.body):
            c = call_of(s)
            if c is not None:
                yield c

    def with_contract(self, contract: Optional[Contract]) -> "FunctionDef":
        return FunctionDef(self.name, self.params, self.returns_int, self.body, contract, self.span)


@dataclass(frozen=True)
class ModuleAst:
    globals: tuple
    functions: tuple
    entry: str

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    @property
    def global_locations(self) -> tuple:
        return tuple(Location("global", g) for g in self.globals)

    @property
    def helpers(self) -> tuple:
        return tuple(f for f in self.functions if f.name != self.entry)

    def replace_function(self, fn: FunctionDef) -> "ModuleAst":
        return ModuleAst(
            self.globals,
            tuple(fn if f.name == fn.name else f for f in self.functions),
            self.entry,
        )
