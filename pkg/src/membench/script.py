"""Parser and evaluator for the set/relation script language.

The language is a small ISCC-style subset:

    Name := [n] -> { Tuple[i, j] : 0 <= i < n and j = i + 1 };
    Rel  := [n] -> { Tuple[i] -> [i, 0] : 0 <= i < n };
    codegen (Rel * Name);

Supported pieces: conjunctions of affine (in)equalities with chained
comparison operators, `exists v, ... :` prefixes, unions written as
`;`-separated pieces inside one literal, and the `*` operator (map-domain
restriction or set intersection, chosen by operand kinds).  `#` starts a
comment that runs to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .isets import (
    EQ, GE, AffExpr, BasicMap, BasicSet, Constraint, ISetError, Space, UMap,
    USet, intersect, restrict_domain,
)


class ScriptError(Exception):
    """Syntax or semantic error in a script, with source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class NameRef:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StarOp:
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Literal:
    value: USet | UMap


Expr = NameRef | StarOp | Literal


@dataclass(frozen=True)
class Script:
    """Ordered named definitions plus exactly one codegen directive."""

    definitions: tuple[tuple[str, Expr], ...]
    codegen_expr: Expr


# --- Tokenizer ---------------------------------------------------------------

_PUNCT = ("->", ":=", "<=", ">=", "==", "{", "}", "[", "]", "(", ")", ",",
          ";", ":", "*", "+", "-", "<", ">", "=")


@dataclass(frozen=True)
class Token:
    kind: str   # 'name' | 'int' | 'punct' | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        matched = None
        for p in _PUNCT:
            if text.startswith(p, i):
                matched = p
                break
        if matched:
            tokens.append(Token("punct", matched, line, col))
            i += len(matched)
            col += len(matched)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ScriptError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# --- Parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ScriptError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                              tok.line, tok.col)
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text

    # script := (NAME ':=' expr ';' | 'codegen' '(' expr ')' ';')*
    def parse_script(self) -> Script:
        defs: list[tuple[str, Expr]] = []
        codegen_expr = None
        defined: set[str] = set()
        while self.peek().kind != "eof":
            tok = self.next()
            if tok.kind != "name":
                raise ScriptError(f"expected a definition or codegen, found {tok.text!r}",
                                  tok.line, tok.col)
            if tok.text == "codegen":
                if codegen_expr is not None:
                    raise ScriptError("more than one codegen directive",
                                      tok.line, tok.col)
                self.expect("(")
                codegen_expr = self.parse_expr(defined)
                self.expect(")")
                self.expect(";")
            else:
                self.expect(":=")
                expr = self.parse_expr(defined)
                self.expect(";")
                defs.append((tok.text, expr))
                defined.add(tok.text)
        if codegen_expr is None:
            tok = self.peek()
            raise ScriptError("script has no codegen directive", tok.line, tok.col)
        return Script(tuple(defs), codegen_expr)

    def parse_expr(self, defined: set[str]) -> Expr:
        left = self.parse_term(defined)
        while self.at("*"):
            tok = self.next()
            right = self.parse_term(defined)
            left = StarOp(left, right, tok.line, tok.col)
        return left

    def parse_term(self, defined: set[str]) -> Expr:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            e = self.parse_expr(defined)
            self.expect(")")
            return e
        if tok.text == "[" or tok.text == "{":
            return Literal(self.parse_literal())
        if tok.kind == "name":
            self.next()
            if tok.text not in defined:
                raise ScriptError(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            return NameRef(tok.text, tok.line, tok.col)
        raise ScriptError(f"expected an expression, found {tok.text!r}",
                          tok.line, tok.col)

    # literal := ('[' names ']' '->')? '{' piece (';' piece)* ';'? '}'
    def parse_literal(self) -> USet | UMap:
        params: tuple[str, ...] = ()
        if self.at("["):
            self.next()
            params = tuple(self.parse_name_list("]"))
            self.expect("]")
            self.expect("->")
        self.expect("{")
        pieces = []
        while True:
            pieces.append(self.parse_piece(params))
            if self.at(";"):
                self.next()
                if self.at("}"):
                    break
                continue
            break
        self.expect("}")
        kinds = {isinstance(p, BasicMap) for p in pieces}
        if len(kinds) > 1:
            tok = self.peek()
            raise ScriptError("cannot mix set and map pieces in one literal",
                              tok.line, tok.col)
        if isinstance(pieces[0], BasicMap):
            return UMap(tuple(pieces))
        return USet(tuple(pieces))

    def parse_name_list(self, closer: str) -> list[str]:
        names = []
        if self.at(closer):
            return names
        while True:
            tok = self.next()
            if tok.kind != "name":
                raise ScriptError(f"expected a name, found {tok.text!r}",
                                  tok.line, tok.col)
            names.append(tok.text)
            if self.at(","):
                self.next()
                continue
            return names

    def parse_piece(self, params: tuple[str, ...]):
        tok = self.peek()
        in_name, in_dims = self.parse_tuple(require_name=True)
        for d in in_dims:
            if d in params:
                raise ScriptError(f"dim {d!r} shadows a parameter", tok.line, tok.col)
        out_dims = None
        out_name = ""
        implicit: list[Constraint] = []
        if self.at("->"):
            self.next()
            out_name = ""
            if self.peek().kind == "name":
                out_name = self.next().text
            bound = set(params) | set(in_dims)
            out_dims = self.parse_out_dims(bound, implicit)
        constraints: list[Constraint] = list(implicit)
        exists: list[str] = []
        if self.at(":"):
            self.next()
            scope = set(params) | set(in_dims) | set(out_dims or ())
            self.parse_formula(scope, constraints, exists)
        if out_dims is None:
            return BasicSet(Space(params, in_name, tuple(in_dims)),
                            tuple(constraints), tuple(exists))
        return BasicMap(params, in_name, tuple(in_dims),
                        out_name, tuple(out_dims), tuple(constraints),
                        tuple(exists))

    def parse_out_dims(self, bound: set[str],
                       implicit: list[Constraint]) -> list[str]:
        """Parse an output tuple.

        Each position is either a fresh name (a new output dim) or an affine
        expression over visible names, which introduces a fresh dim pinned to
        the expression by an implicit equality (the `S[i] -> [i - h, 1]`
        idiom).
        """
        open_tok = self.expect("[")
        # pre-scan the raw names inside the tuple so generated fresh names
        # cannot collide with a later position
        reserved = set(bound)
        k = self.pos
        while self.tokens[k].text != "]":
            if self.tokens[k].kind == "name":
                reserved.add(self.tokens[k].text)
            if self.tokens[k].kind == "eof":
                raise ScriptError("unterminated output tuple",
                                  open_tok.line, open_tok.col)
            k += 1
        out_dims: list[str] = []
        if not self.at("]"):
            j = 0
            while True:
                tok = self.peek()
                nxt = self.tokens[self.pos + 1].text
                if (tok.kind == "name" and tok.text not in bound
                        and tok.text not in out_dims and nxt in (",", "]")):
                    self.next()
                    out_dims.append(tok.text)
                else:
                    expr = self.parse_sum(bound | set(out_dims))
                    fresh = f"o{j}"
                    while fresh in reserved or fresh in out_dims:
                        fresh += "_"
                    implicit.append(Constraint(AffExpr.var(fresh) - expr, EQ))
                    out_dims.append(fresh)
                j += 1
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect("]")
        return out_dims

    def parse_tuple(self, require_name: bool = True) -> tuple[str, list[str]]:
        name = ""
        if self.peek().kind == "name":
            name = self.next().text
        elif require_name:
            tok = self.peek()
            raise ScriptError(f"expected a tuple name, found {tok.text!r}",
                              tok.line, tok.col)
        self.expect("[")
        dims = self.parse_name_list("]")
        self.expect("]")
        return name, dims

    # formula := 'exists' names ':' formula | chain ('and' chain)*
    def parse_formula(self, scope: set[str], constraints: list[Constraint],
                      exists: list[str]):
        if self.peek().kind == "name" and self.peek().text == "exists":
            self.next()
            names = []
            while True:
                tok = self.next()
                if tok.kind != "name":
                    raise ScriptError(f"expected existential name, found {tok.text!r}",
                                      tok.line, tok.col)
                if tok.text in scope:
                    raise ScriptError(f"existential {tok.text!r} shadows another name",
                                      tok.line, tok.col)
                names.append(tok.text)
                if self.at(","):
                    self.next()
                    continue
                break
            self.expect(":")
            exists.extend(names)
            self.parse_formula(scope | set(names), constraints, exists)
            return
        self.parse_chain(scope, constraints)
        while self.peek().kind == "name" and self.peek().text == "and":
            self.next()
            self.parse_formula(scope, constraints, exists)

    _RELOPS = ("<=", "<", ">=", ">", "=", "==")

    def parse_chain(self, scope: set[str], constraints: list[Constraint]):
        left = self.parse_sum(scope)
        tok = self.peek()
        if tok.text not in self._RELOPS:
            raise ScriptError(f"expected a comparison, found {tok.text!r}",
                              tok.line, tok.col)
        count = 0
        while self.peek().text in self._RELOPS:
            op = self.next().text
            right = self.parse_sum(scope)
            constraints.append(_relate(left, op, right))
            left = right
            count += 1
        if count == 0:
            raise ScriptError("constraint without comparison", tok.line, tok.col)

    def parse_sum(self, scope: set[str]) -> AffExpr:
        expr = self.parse_product(scope)
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.parse_product(scope)
            expr = expr + rhs if op == "+" else expr - rhs
        return expr

    def parse_product(self, scope: set[str]) -> AffExpr:
        expr = self.parse_atom(scope)
        while self.at("*"):
            tok = self.next()
            rhs = self.parse_atom(scope)
            if expr.is_constant():
                expr = rhs * expr.const
            elif rhs.is_constant():
                expr = expr * rhs.const
            else:
                raise ScriptError("non-affine product of two variables",
                                  tok.line, tok.col)
        return expr

    def parse_atom(self, scope: set[str]) -> AffExpr:
        tok = self.next()
        if tok.text == "-":
            return -self.parse_atom(scope)
        if tok.text == "(":
            e = self.parse_sum(scope)
            self.expect(")")
            return e
        if tok.kind == "int":
            return AffExpr.constant(int(tok.text))
        if tok.kind == "name":
            if tok.text not in scope:
                raise ScriptError(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            return AffExpr.var(tok.text)
        raise ScriptError(f"expected a term, found {tok.text!r}", tok.line, tok.col)


def _relate(left: AffExpr, op: str, right: AffExpr) -> Constraint:
    if op in ("=", "=="):
        return Constraint(left - right, EQ)
    if op == "<=":
        return Constraint(right - left, GE)
    if op == "<":
        return Constraint(right - left - 1, GE)
    if op == ">=":
        return Constraint(left - right, GE)
    return Constraint(left - right - 1, GE)  # '>'


# --- Public API --------------------------------------------------------------

def parse_script(text: str) -> Script:
    """Parse script source into an AST (definitions in source order)."""
    return _Parser(text).parse_script()


def parse_set(text: str) -> USet:
    """Parse a single set literal such as `[n] -> { S[i] : 0 <= i < n }`."""
    p = _Parser(text)
    value = p.parse_literal()
    if p.peek().kind != "eof":
        tok = p.peek()
        raise ScriptError(f"trailing input {tok.text!r}", tok.line, tok.col)
    if not isinstance(value, USet):
        raise ScriptError("expected a set literal, found a map")
    return value


def parse_map(text: str) -> UMap:
    """Parse a single map literal."""
    p = _Parser(text)
    value = p.parse_literal()
    if p.peek().kind != "eof":
        tok = p.peek()
        raise ScriptError(f"trailing input {tok.text!r}", tok.line, tok.col)
    if not isinstance(value, UMap):
        raise ScriptError("expected a map literal, found a set")
    return value


def eval_expr(expr: Expr, env: dict[str, USet | UMap]) -> USet | UMap:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, NameRef):
        try:
            return env[expr.name]
        except KeyError:
            raise ScriptError(f"unknown identifier {expr.name!r}",
                              expr.line, expr.col) from None
    if isinstance(expr, StarOp):
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        try:
            if isinstance(left, UMap) and isinstance(right, USet):
                return restrict_domain(left, right)
            if isinstance(left, USet) and isinstance(right, USet):
                return intersect(left, right)
            if isinstance(left, USet) and isinstance(right, UMap):
                return restrict_domain(right, left)
        except ISetError as exc:
            raise ScriptError(str(exc), expr.line, expr.col) from exc
        raise ScriptError("the * operator is not defined for two maps",
                          expr.line, expr.col)
    raise TypeError(f"bad expression node {expr!r}")


def eval_script(script: Script) -> USet | UMap:
    """Evaluate a script and return the value passed to codegen."""
    env: dict[str, USet | UMap] = {}
    for name, expr in script.definitions:
        env[name] = eval_expr(expr, env)
    return eval_expr(script.codegen_expr, env)
