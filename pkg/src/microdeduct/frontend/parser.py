"""Recursive-descent parser for MicroC and its ACSL-style annotations.

Expressions are first parsed into untyped :class:`Raw` trees with C
precedence (plus ``==>``), then converted into logic terms/formulas against a
scope.  Conversion is where pointer misuse, nested ``\\old`` and the like are
rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..logic import (
    FALSE,
    TRUE,
    Add,
    And,
    Cmp,
    Formula,
    Implies,
    Int,
    Location,
    Mul,
    Neg,
    Not,
    Old,
    Or,
    RESULT,
    Result,
    Sub,
    Term,
    Valid,
    Var,
    map_term,
)
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
    Param,
    Ref,
    Return,
    Span,
    While,
)
from .lexer import Token, tokenize

UNSUPPORTED_KEYWORDS = {
    "static": "static variables",
    "float": "floating-point arithmetic",
    "double": "floating-point arithmetic",
    "for": "for loops (use while with a loop invariant)",
    "do": "do-while loops",
    "switch": "switch statements",
    "goto": "goto",
    "break": "break",
    "continue": "continue",
    "struct": "structs",
    "union": "unions",
    "enum": "enums",
    "typedef": "typedefs",
    "char": "non-int types",
    "long": "non-int types",
    "short": "non-int types",
    "unsigned": "non-int types",
    "signed": "non-int types",
    "const": "type qualifiers",
    "volatile": "type qualifiers",
    "extern": "extern declarations",
    "sizeof": "sizeof",
}
C_KEYWORDS = {"int", "void", "if", "else", "while", "return"} | set(UNSUPPORTED_KEYWORDS)


def _unsupported(span, msg):
    return FrontendError([Diagnostic("error", span, msg, "unsupported")])


def _parse_error(span, msg):
    return FrontendError([Diagnostic("error", span, msg, "parse")])


def _resolution(span, msg):
    return FrontendError([Diagnostic("error", span, msg, "resolution")])


@dataclass
class Raw:
    kind: str  # num name deref addr old result valid bool neg not bin call
    span: Span
    value: object = None
    args: list = field(default_factory=list)
    parens: bool = False


_REL_OPS = ("<", "<=", ">", ">=")
_EQ_OPS = ("==", "!=")


@dataclass
class Scope:
    """Name resolution context for converting raw expressions."""

    fn_name: str
    globals: set
    params: dict  # name -> Param
    locals: set
    allow_old: bool = False
    allow_result: bool = False
    in_annotation: bool = False
    declared: set = field(default_factory=set)  # every local name in the function

    def child(self) -> "Scope":
        return Scope(self.fn_name, self.globals, self.params, set(self.locals), declared=self.declared)

    def lookup(self, name: str, span: Span) -> Location:
        if name in self.locals:
            return Location("local", name, self.fn_name)
        if name in self.params:
            return Location("param", name, self.fn_name)
        if name in self.globals:
            return Location("global", name)
        raise _resolution(span, f"unknown name '{name}'")


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.globals: list = []
        self.function_names: set = set()

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident", "builtin") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}'")
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in C_KEYWORDS:
            self.fail("expected identifier")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise _parse_error(t.span, f"{msg}, found {found}")

    def check_unsupported_keyword(self):
        t = self.tok
        if t.kind == "ident" and t.text in UNSUPPORTED_KEYWORDS:
            what = UNSUPPORTED_KEYWORDS[t.text]
            if t.text == "static":
                what = "local static variables" if self._in_body else "static declarations"
            raise _unsupported(t.span, f"unsupported construct: {what}")
        if t.kind == "float":
            raise _unsupported(t.span, "unsupported construct: floating-point arithmetic")

    _in_body = False

    # -- module --------------------------------------------------------------

    def parse_module(self):
        functions = []
        while self.tok.kind != "eof":
            raw_contract = None
            if self.tok.kind == "annot_start":
                raw_contract = self.parse_contract_annotation()
            self.check_unsupported_keyword()
            start = self.tok
            if self.accept("int"):
                returns_int = True
            elif self.accept("void"):
                returns_int = False
            else:
                self.fail("expected declaration")
            if self.at("*"):
                raise _unsupported(self.tok.span, "unsupported construct: pointer-typed globals or results")
            name_tok = self.expect_ident()
            name = name_tok.text
            if self.at("("):
                functions.append(self.parse_function(name, returns_int, raw_contract, start.span))
                continue
            if raw_contract is not None:
                raise _parse_error(start.span, "annotation must precede a function definition")
            if not returns_int:
                raise _parse_error(start.span, "global of type void")
            if self.at("["):
                raise _unsupported(self.tok.span, "unsupported construct: arrays")
            if self.at("="):
                raise _unsupported(self.tok.span, "unsupported construct: global initialisers")
            self.expect(";")
            if name in self.globals or name in self.function_names:
                raise _resolution(name_tok.span, f"duplicate definition of '{name}'")
            self.globals.append(name)
        return tuple(self.globals), tuple(functions)

    def parse_function(self, name, returns_int, raw_contract, span):
        if name in self.function_names or name in self.globals:
            raise _resolution(span, f"duplicate definition of '{name}'")
        self.function_names.add(name)
        self.expect("(")
        params = []
        if self.at("void") and self.peek().text == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                self.check_unsupported_keyword()
                self.expect("int")
                is_ref = False
                if self.accept("*"):
                    is_ref = True
                    if self.at("*"):
                        raise _unsupported(self.tok.span, "unsupported construct: nested pointers")
                pt = self.expect_ident()
                if self.at("["):
                    raise _unsupported(self.tok.span, "unsupported construct: arrays")
                if any(p.name == pt.text for p in params):
                    raise _resolution(pt.span, f"duplicate parameter '{pt.text}'")
                if pt.text in self.globals:
                    raise _resolution(pt.span, f"parameter '{pt.text}' shadows a global")
                params.append(Param(pt.text, is_ref))
                if not self.accept(","):
                    break
        self.expect(")")
        if self.at(";"):
            raise _unsupported(self.tok.span, "unsupported construct: function declaration without body")
        pmap = {p.name: p for p in params}
        scope = Scope(name, set(self.globals), pmap, set())
        contract = None
        if raw_contract is not None:
            contract = self.convert_contract(raw_contract, scope, returns_int)
        self.expect("{")
        self._in_body = True
        body = self.parse_block_items(scope)
        self._in_body = False
        self.expect("}")
        return FunctionDef(name, tuple(params), returns_int, tuple(body), contract, span)

    # -- annotations ---------------------------------------------------------

    def parse_contract_annotation(self):
        self.advance()  # /*@
        clauses = []
        while self.tok.kind != "annot_end":
            t = self.tok
            if t.kind == "prov":
                self.fail("provenance tag must follow a clause")
            if t.kind != "ident":
                self.fail("expected contract clause")
            kw = t.text
            self.advance()
            if kw in ("requires", "ensures"):
                raw = self.parse_expr(annotation=True)
                self.expect(";")
                clauses.append((kw, raw, self.take_provenance(), t.span))
            elif kw == "assigns":
                locs = self.parse_assigns_list()
                self.expect(";")
                clauses.append((kw, locs, self.take_provenance(), t.span))
            elif kw in ("loop",):
                raise _parse_error(t.span, "loop annotation outside a loop")
            else:
                raise _unsupported(t.span, f"unsupported annotation clause '{kw}'")
        self.advance()
        return clauses

    def take_provenance(self) -> str:
        if self.tok.kind == "prov":
            return self.advance().text
        return "user"

    def parse_assigns_list(self):
        if self.accept("\\nothing"):
            return []
        locs = []
        while True:
            t = self.tok
            if self.accept("*"):
                name = self.expect_ident()
                locs.append(("deref", name.text, t.span))
            else:
                name = self.expect_ident()
                locs.append(("name", name.text, t.span))
            if not self.accept(","):
                break
        return locs

    def convert_contract(self, raw_clauses, scope: Scope, returns_int: bool) -> Contract:
        requires, ensures = [], []
        assigns = None
        for kw, raw, prov, span in raw_clauses:
            if kw == "requires":
                s = Scope(scope.fn_name, scope.globals, scope.params, set(), in_annotation=True)
                requires.append(Clause(self.to_formula(raw, s), prov))
            elif kw == "ensures":
                s = Scope(
                    scope.fn_name,
                    scope.globals,
                    scope.params,
                    set(),
                    allow_old=True,
                    allow_result=returns_int,
                    in_annotation=True,
                )
                ensures.append(Clause(self.to_formula(raw, s), prov))
            else:
                if assigns is not None:
                    raise _parse_error(span, "more than one assigns clause")
                locs = []
                for kind, name, lspan in raw:
                    if kind == "deref":
                        p = scope.params.get(name)
                        if p is None or not p.is_ref:
                            raise _resolution(lspan, f"'*{name}' is not a reference parameter")
                        locs.append(Location("deref", name, scope.fn_name))
                    else:
                        if name not in scope.globals:
                            raise _resolution(lspan, f"assigns may only list globals or '*p', got '{name}'")
                        locs.append(Location("global", name))
                assigns = Assigns(tuple(dict.fromkeys(locs)), prov)
        return Contract(tuple(requires), tuple(ensures), assigns)

    def parse_loop_annotation(self, scope: Scope):
        self.advance()  # /*@
        invariants = []
        while self.tok.kind != "annot_end":
            t = self.tok
            if t.kind == "ident" and t.text == "loop":
                self.advance()
                kw = self.expect_ident()
                if kw.text != "invariant":
                    raise _unsupported(kw.span, f"unsupported loop annotation 'loop {kw.text}'")
                raw = self.parse_expr(annotation=True)
                self.expect(";")
                s = Scope(
                    scope.fn_name,
                    scope.globals,
                    scope.params,
                    set(scope.locals),
                    allow_old=True,
                    in_annotation=True,
                )
                invariants.append(self.to_formula(raw, s))
            elif t.kind == "ident":
                raise _unsupported(t.span, f"unsupported annotation '{t.text}' inside a function body")
            else:
                self.fail("expected 'loop invariant'")
        self.advance()
        if not invariants:
            raise _unsupported(self.tok.span, "unsupported construct: loop without loop invariant")
        return invariants

    # -- statements ----------------------------------------------------------

    def parse_block_items(self, scope: Scope) -> list:
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("expected '}'")
            out.extend(self.parse_statement(scope))
        return out

    def parse_body_stmt(self, scope: Scope) -> tuple:
        return tuple(self.parse_statement(scope.child()))

    def parse_statement(self, scope: Scope) -> list:
        self.check_unsupported_keyword()
        t = self.tok
        if t.kind == "annot_start":
            invariants = self.parse_loop_annotation(scope)
            if not self.at("while"):
                self.fail("loop annotation must precede 'while'")
            return [self.parse_while(scope, invariants)]
        if self.at("while"):
            raise _unsupported(t.span, "unsupported construct: loop without loop invariant")
        if self.accept("{"):
            items = self.parse_block_items(scope.child())
            self.expect("}")
            return items
        if self.accept("if"):
            self.expect("(")
            cond = self.to_formula(self.parse_expr(), scope)
            self.expect(")")
            then = self.parse_body_stmt(scope)
            orelse = ()
            if self.accept("else"):
                orelse = self.parse_body_stmt(scope)
            return [If(cond, then, orelse, t.span)]
        if self.accept("return"):
            if self.accept(";"):
                return [Return(None, t.span)]
            raw = self.parse_expr()
            self.expect(";")
            if raw.kind == "call":
                raise _unsupported(raw.span, "unsupported construct: call in return expression")
            return [Return(self.to_term(raw, scope), t.span)]
        if self.accept("int"):
            if self.at("*"):
                raise _unsupported(self.tok.span, "unsupported construct: local pointer variables")
            name = self.expect_ident()
            if self.at("["):
                raise _unsupported(self.tok.span, "unsupported construct: arrays")
            if name.text in scope.declared or name.text in scope.params or name.text in scope.globals:
                raise _resolution(name.span, f"redeclaration or shadowing of '{name.text}'")
            if not self.accept("="):
                if self.at(";"):
                    raise _unsupported(self.tok.span, "unsupported construct: local declaration without initialiser")
                self.fail("expected '='")
            raw = self.parse_expr()
            self.expect(";")
            init = self.to_value(raw, scope)
            scope.locals.add(name.text)
            scope.declared.add(name.text)
            return [Decl(Location("local", name.text, scope.fn_name), init, t.span)]
        if self.at("*"):
            self.advance()
            if self.at("*"):
                raise _unsupported(self.tok.span, "unsupported construct: nested pointers")
            if self.at("("):
                raise _unsupported(self.tok.span, "unsupported construct: pointer arithmetic")
            name = self.expect_ident()
            p = scope.params.get(name.text)
            if p is None or not p.is_ref:
                raise _unsupported(name.span, f"dereference of non-pointer '{name.text}'")
            self.expect_assign_op()
            raw = self.parse_expr()
            self.expect(";")
            target = Location("deref", name.text, scope.fn_name)
            return [Assign(target, self.to_value(raw, scope), t.span)]
        if t.kind == "ident" and t.text not in C_KEYWORDS:
            if self.peek().text == "(":
                raw = self.parse_expr()
                self.expect(";")
                return [CallStmt(self.to_call(raw, scope), t.span)]
            name = self.advance()
            self.expect_assign_op()
            raw = self.parse_expr()
            self.expect(";")
            loc = scope.lookup(name.text, name.span)
            if loc.kind == "param":
                if scope.params[name.text].is_ref:
                    raise _unsupported(name.span, "unsupported construct: assignment to a pointer")
                raise _unsupported(name.span, f"assignment to value parameter '{name.text}'")
            return [Assign(loc, self.to_value(raw, scope), t.span)]
        self.fail("expected statement")

    def expect_assign_op(self):
        if self.tok.text in ("+=", "-=", "*=", "++", "--"):
            raise _unsupported(self.tok.span, f"unsupported operator '{self.tok.text}'")
        self.expect("=")

    def parse_while(self, scope, invariants):
        t = self.expect("while")
        self.expect("(")
        cond = self.to_formula(self.parse_expr(), scope)
        self.expect(")")
        body = self.parse_body_stmt(scope)
        return While(cond, tuple(invariants), body, t.span)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self, annotation: bool = False) -> Raw:
        self._annotation = annotation
        return self.parse_implies()

    def parse_implies(self) -> Raw:
        left = self.parse_or()
        if self.at("==>"):
            t = self.advance()
            if not self._annotation:
                raise _parse_error(t.span, "'==>' is only allowed in annotations")
            right = self.parse_implies()
            return Raw("bin", t.span, "==>", [left, right])
        if self.at("<==>"):
            raise _unsupported(self.tok.span, "unsupported operator '<==>'")
        return left

    def parse_or(self) -> Raw:
        left = self.parse_and()
        while self.at("||"):
            t = self.advance()
            left = Raw("bin", t.span, "||", [left, self.parse_and()])
        return left

    def parse_and(self) -> Raw:
        left = self.parse_eq()
        while self.at("&&"):
            t = self.advance()
            left = Raw("bin", t.span, "&&", [left, self.parse_eq()])
        return left

    def parse_eq(self) -> Raw:
        left = self.parse_rel()
        while self.tok.kind == "op" and self.tok.text in _EQ_OPS:
            t = self.advance()
            left = Raw("bin", t.span, t.text, [left, self.parse_rel()])
        return left

    def parse_rel(self) -> Raw:
        left = self.parse_add()
        while self.tok.kind == "op" and self.tok.text in _REL_OPS:
            t = self.advance()
            left = Raw("bin", t.span, t.text, [left, self.parse_add()])
        return left

    def parse_add(self) -> Raw:
        left = self.parse_mul()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.advance()
            left = Raw("bin", t.span, t.text, [left, self.parse_mul()])
        return left

    def parse_mul(self) -> Raw:
        left = self.parse_unary()
        while True:
            if self.at("*"):
                t = self.advance()
                left = Raw("bin", t.span, "*", [left, self.parse_unary()])
            elif self.at("/") or self.at("%"):
                raise _unsupported(self.tok.span, "unsupported construct: division")
            elif self.tok.text in ("&", "|", "^", "<<", ">>"):
                raise _unsupported(self.tok.span, "unsupported construct: bitwise operators")
            else:
                return left

    def parse_unary(self) -> Raw:
        t = self.tok
        self.check_unsupported_keyword()
        if self.at("-"):
            self.advance()
            if self.tok.kind == "int":
                n = self.advance()
                return Raw("num", t.span, -int(n.text))
            return Raw("neg", t.span, None, [self.parse_unary()])
        if self.at("!"):
            self.advance()
            return Raw("not", t.span, None, [self.parse_unary()])
        if self.at("*"):
            self.advance()
            if self.at("*"):
                raise _unsupported(self.tok.span, "unsupported construct: nested pointers")
            if self.at("("):
                raise _unsupported(self.tok.span, "unsupported construct: pointer arithmetic")
            name = self.expect_ident()
            return Raw("deref", t.span, name.text)
        if self.at("&"):
            self.advance()
            if self.at("&") or self.at("*"):
                raise _unsupported(self.tok.span, "unsupported construct: nested pointers")
            name = self.expect_ident()
            return Raw("addr", t.span, name.text)
        if self.tok.text in ("++", "--", "~"):
            raise _unsupported(t.span, f"unsupported operator '{t.text}'")
        return self.parse_postfix()

    def parse_postfix(self) -> Raw:
        r = self.parse_primary()
        if self.tok.text in ("++", "--", "[", "->", "."):
            raise _unsupported(self.tok.span, f"unsupported construct '{self.tok.text}'")
        return r

    def parse_primary(self) -> Raw:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Raw("num", t.span, int(t.text))
        if t.kind == "ident" and t.text not in C_KEYWORDS:
            self.advance()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_or_arg())
                        if not self.accept(","):
                            break
                self.expect(")")
                return Raw("call", t.span, t.text, args)
            return Raw("name", t.span, t.text)
        if t.kind == "builtin":
            if not self._annotation:
                raise _parse_error(t.span, f"'{t.text}' is only allowed in annotations")
            self.advance()
            if t.text == "\\result":
                return Raw("result", t.span)
            if t.text in ("\\true", "\\false"):
                return Raw("bool", t.span, t.text == "\\true")
            if t.text == "\\old":
                self.expect("(")
                inner = self.parse_implies()
                self.expect(")")
                return Raw("old", t.span, None, [inner])
            if t.text == "\\valid":
                self.expect("(")
                if self.accept("&"):
                    name = self.expect_ident()
                    self.expect(")")
                    return Raw("valid", t.span, ("&", name.text))
                name = self.expect_ident()
                self.expect(")")
                return Raw("valid", t.span, ("", name.text))
            raise _unsupported(t.span, f"unsupported logic construct '{t.text}'")
        if self.accept("("):
            inner = self.parse_implies()
            self.expect(")")
            inner.parens = True
            return inner
        self.fail("expected expression")

    def parse_or_arg(self) -> Raw:
        saved = self._annotation
        r = self.parse_implies()
        self._annotation = saved
        return r

    # -- conversion ----------------------------------------------------------

    def to_value(self, raw: Raw, scope: Scope):
        if raw.kind == "call" and not raw.parens:
            return self.to_call(raw, scope)
        return self.to_term(raw, scope)

    def to_call(self, raw: Raw, scope: Scope) -> Call:
        if raw.kind != "call":
            raise _parse_error(raw.span, "expected a call")
        args = []
        for a in raw.args:
            if a.kind == "addr":
                loc = scope.lookup(a.value, a.span)
                if loc.kind == "param":
                    raise _unsupported(a.span, "unsupported construct: address of a parameter")
                args.append(Ref(loc))
            elif a.kind == "name" and not a.parens and a.value in scope.params and scope.params[a.value].is_ref:
                args.append(Ref(Location("deref", a.value, scope.fn_name)))
            else:
                args.append(self.to_term(a, scope))
        return Call(raw.value, tuple(args), raw.span)

    def to_term(self, raw: Raw, scope: Scope) -> Term:
        k = raw.kind
        if k == "num":
            if not scope.in_annotation and not (-(2**31) <= raw.value <= 2**31 - 1):
                raise _unsupported(raw.span, "integer literal out of 32-bit range")
            return Int(raw.value)
        if k == "name":
            loc = scope.lookup(raw.value, raw.span)
            if loc.kind == "param" and scope.params[raw.value].is_ref:
                raise _unsupported(raw.span, f"unsupported construct: pointer arithmetic or pointer value use of '{raw.value}'")
            return Var(loc)
        if k == "deref":
            p = scope.params.get(raw.value)
            if p is None or not p.is_ref:
                if raw.value in scope.params or raw.value in scope.locals or raw.value in scope.globals:
                    raise _unsupported(raw.span, f"dereference of non-pointer '{raw.value}'")
                raise _resolution(raw.span, f"unknown name '{raw.value}'")
            return Var(Location("deref", raw.value, scope.fn_name))
        if k == "addr":
            raise _unsupported(raw.span, "unsupported construct: '&' outside a call argument")
        if k == "result":
            if not scope.allow_result:
                raise _resolution(raw.span, "'\\result' is not allowed here")
            return RESULT
        if k == "old":
            if not scope.allow_old:
                raise _resolution(raw.span, "'\\old' is not allowed here")
            inner = self.to_term(raw.args[0], Scope(
                scope.fn_name, scope.globals, scope.params, scope.locals,
                allow_old=False, allow_result=False, in_annotation=True,
            ))
            return map_term(inner, _old_leaf(raw.span))
        if k == "neg":
            return Neg(self.to_term(raw.args[0], scope))
        if k == "bin" and raw.value in ("+", "-", "*"):
            a = self.to_term(raw.args[0], scope)
            b = self.to_term(raw.args[1], scope)
            return {"+": Add, "-": Sub, "*": Mul}[raw.value](a, b)
        if k == "call":
            raise _unsupported(raw.span, "unsupported construct: call inside an expression")
        raise _unsupported(raw.span, "unsupported construct: condition used as an integer value")

    def to_formula(self, raw: Raw, scope: Scope) -> Formula:
        k = raw.kind
        if k == "bool":
            return TRUE if raw.value else FALSE
        if k == "not":
            return Not(self.to_formula(raw.args[0], scope))
        if k == "valid":
            amp, name = raw.value
            if amp:
                raise _unsupported(raw.span, "'\\valid' takes a reference parameter in MicroC")
            p = scope.params.get(name)
            if p is None or not p.is_ref:
                raise _resolution(raw.span, f"'\\valid({name})': not a reference parameter")
            return Valid(Location("param", name, scope.fn_name))
        if k == "bin":
            op = raw.value
            if op == "==>":
                return Implies(self.to_formula(raw.args[0], scope), self.to_formula(raw.args[1], scope))
            if op in ("&&", "||"):
                parts = []
                self._collect(raw.args[0], op, parts)
                parts.append(raw.args[1])
                fs = tuple(self.to_formula(p, scope) for p in parts)
                return And(fs) if op == "&&" else Or(fs)
            if op in _REL_OPS or op in _EQ_OPS:
                return self._comparison(raw, scope)
        if k == "call":
            raise _unsupported(raw.span, "unsupported construct: call inside a condition")
        raise _unsupported(raw.span, "unsupported construct: integer used as a condition")

    def _collect(self, raw: Raw, op: str, out: list):
        if raw.kind == "bin" and raw.value == op and not raw.parens:
            self._collect(raw.args[0], op, out)
            out.append(raw.args[1])
        else:
            out.append(raw)

    def _comparison(self, raw: Raw, scope: Scope) -> Formula:
        # flatten unparenthesised chains a <= b <= c
        operands, ops = [raw.args[1]], [raw.value]
        left = raw.args[0]
        while left.kind == "bin" and (left.value in _REL_OPS or left.value in _EQ_OPS) and not left.parens:
            operands.append(left.args[1])
            ops.append(left.value)
            left = left.args[0]
        operands.append(left)
        operands.reverse()
        ops.reverse()
        if len(ops) > 1 and not scope.in_annotation:
            raise _unsupported(raw.span, "unsupported construct: chained comparison in code")
        terms = [self.to_term(o, scope) for o in operands]
        cmps = tuple(Cmp(op, terms[i], terms[i + 1]) for i, op in enumerate(ops))
        return cmps[0] if len(cmps) == 1 else And(cmps)


def _old_leaf(span):
    def leaf(t):
        if isinstance(t, Var):
            if t.loc.kind == "local":
                raise _resolution(span, f"'\\old' of local variable '{t.loc.name}'")
            return Old(t.loc)
        if isinstance(t, Old):
            raise _resolution(span, "nested '\\old'")
        if isinstance(t, Result):
            raise _resolution(span, "'\\result' inside '\\old'")
        return None

    return leaf


def parse_raw(source: str):
    """Parse without module-level validation: returns (globals, functions)."""
    return Parser(source).parse_module()
