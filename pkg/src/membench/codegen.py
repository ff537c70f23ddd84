"""Polyhedral scanning: turn sets and schedule maps into loop nests.

Loop bounds are derived by Fourier-Motzkin elimination over the rational
relaxation, which is sound for scanning: the visited integer points are
exactly the set's points because over-approximated outer ranges only ever
produce empty inner loops.  The resulting LoopAst can be interpreted in
Python (the test path: no C toolchain needed) or printed as C99 text.

Everything here is a pure function over immutable inputs; safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

from .isets import (
    EQ, GE, AffExpr, BasicMap, BasicSet, Constraint, UMap, USet,
    fm_eliminate, normalize, schedule_check, to_inequalities,
)


class CodegenError(Exception):
    pass


class UnboundedDimension(CodegenError):
    pass


class UnsupportedUnionShape(CodegenError):
    pass


class UnknownStatement(CodegenError):
    pass


# ---------------------------------------------------------------------------
# Loop AST
# ---------------------------------------------------------------------------

FLOOR = "floor"
CEIL = "ceil"


@dataclass(frozen=True)
class BoundExpr:
    """numerator / denominator with explicit rounding direction.

    A denominator of 1 carries no rounding; otherwise lower bounds round up
    (ceild) and upper bounds round down (floord).
    """

    numerator: AffExpr
    denominator: int = 1
    rounding: str | None = None

    def __post_init__(self):
        if self.denominator < 1:
            raise ValueError("denominator must be positive")
        if (self.denominator == 1) != (self.rounding is None):
            raise ValueError("rounding iff denominator > 1")

    def evaluate(self, env: dict[str, int]) -> int:
        num = self.numerator.evaluate(env)
        if self.denominator == 1:
            return num
        if self.rounding == FLOOR:
            return num // self.denominator
        return -((-num) // self.denominator)


@dataclass(frozen=True)
class Loop:
    iterator: str
    lowers: tuple[BoundExpr, ...]   # effective lower bound: max of these
    uppers: tuple[BoundExpr, ...]   # effective upper bound: min of these
    body: "Node"


@dataclass(frozen=True)
class StmtCall:
    name: str
    args: tuple[AffExpr, ...]


@dataclass(frozen=True)
class Seq:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Guard:
    conditions: tuple[Constraint, ...]
    body: "Node"


Node = Loop | StmtCall | Seq | Guard


def loop_depth(node: Node) -> int:
    if isinstance(node, Loop):
        return 1 + loop_depth(node.body)
    if isinstance(node, Guard):
        return loop_depth(node.body)
    if isinstance(node, Seq):
        return max((loop_depth(c) for c in node.children), default=0)
    return 0


def interpret(node: Node, bindings: dict[str, int]) -> list[tuple[str, tuple[int, ...]]]:
    """Execute the AST, returning (statement, args) in execution order.

    This interpreter is the oracle-facing twin of the C emitter; tests
    compare its trace against the brute-force point enumeration.
    """
    out: list[tuple[str, tuple[int, ...]]] = []
    _run(node, dict(bindings), out)
    return out


def _run(node: Node, env: dict[str, int], out):
    if isinstance(node, Seq):
        for child in node.children:
            _run(child, env, out)
    elif isinstance(node, Guard):
        if all(c.holds(env) for c in node.conditions):
            _run(node.body, env, out)
    elif isinstance(node, Loop):
        lo = max(b.evaluate(env) for b in node.lowers)
        hi = min(b.evaluate(env) for b in node.uppers)
        for value in range(lo, hi + 1):
            env[node.iterator] = value
            _run(node.body, env, out)
        env.pop(node.iterator, None)
    elif isinstance(node, StmtCall):
        out.append((node.name, tuple(a.evaluate(env) for a in node.args)))
    else:
        raise TypeError(f"bad AST node {node!r}")


# ---------------------------------------------------------------------------
# Bound derivation
# ---------------------------------------------------------------------------

def fm_bounds(ineqs: list[AffExpr], dim: str) -> tuple[list[BoundExpr], list[BoundExpr]]:
    """Split a projected system into lower/upper bounds for `dim`.

    Each `a*dim + rest >= 0` with a > 0 yields lower ceild(-rest, a); with
    a < 0 it yields upper floord(rest, -a).  Inequalities not involving
    `dim` are ignored here.  Syntactic duplicates are removed; redundant
    bounds are tolerated (they cost a max/min operand, not correctness).
    """
    lowers: list[BoundExpr] = []
    uppers: list[BoundExpr] = []
    for e in ineqs:
        a = e.coeff(dim)
        if a == 0:
            continue
        rest = e - AffExpr.var(dim, a)
        if a > 0:
            b = BoundExpr(-rest, a, CEIL) if a > 1 else BoundExpr(-rest)
            if b not in lowers:
                lowers.append(b)
        else:
            b = BoundExpr(rest, -a, FLOOR) if a < -1 else BoundExpr(rest)
            if b not in uppers:
                uppers.append(b)
    lowers.sort(key=_bound_sort_key)
    uppers.sort(key=_bound_sort_key)
    return lowers, uppers


def _bound_sort_key(b: BoundExpr):
    """Simple operands first inside max/min: constants, then bare variables,
    then compound expressions.  Purely cosmetic; any order is correct."""
    e = b.numerator
    coeffs = [abs(c) for _, c in e.terms]
    return (len(e.terms), max(coeffs, default=0), abs(e.const),
            b.denominator, str(e))


def _scan(dims: tuple[str, ...], constraints, body: Node,
          context: str) -> Node:
    """Wrap `body` in loops scanning `dims` lexicographically.

    `constraints` range over dims and parameters only (no existentials).
    Original parameter-only constraints become a guard around the nest;
    FM-derived parameter rows are dropped because a violated one always
    implies an empty loop range somewhere.
    """
    ineqs = to_inequalities(constraints)
    param_guards = [Constraint(e, GE) for e in ineqs
                    if not (e.vars() & set(dims)) and e.vars()]

    # project out inner dims, innermost first; levels[k] bounds dims[k]
    levels: list[list[AffExpr]] = [None] * len(dims)
    sys = list(ineqs)
    for k in range(len(dims) - 1, -1, -1):
        levels[k] = sys
        sys = fm_eliminate(sys, dims[k])
    # a constant contradiction anywhere surfaces in the fully projected
    # system: the set is empty for every parameter binding
    if any(not e.vars() and e.const < 0 for e in sys):
        return Seq(())

    node = body
    for k in range(len(dims) - 1, -1, -1):
        lowers, uppers = fm_bounds(levels[k], dims[k])
        if not lowers or not uppers:
            missing = "lower" if not lowers else "upper"
            raise UnboundedDimension(
                f"dimension {dims[k]!r} of {context} has no {missing} bound")
        if _constant_empty(lowers, uppers):
            return Seq(())
        node = Loop(dims[k], tuple(lowers), tuple(uppers), node)
    if param_guards:
        node = Guard(tuple(dict.fromkeys(param_guards)), node)
    return node


def _constant_empty(lowers, uppers) -> bool:
    """True when fully constant bounds already contradict (prunes loops a
    runtime binding could never enter)."""
    if any(b.numerator.vars() for b in lowers + uppers):
        return False
    lo = max(b.evaluate({}) for b in lowers)
    hi = min(b.evaluate({}) for b in uppers)
    return lo > hi


# ---------------------------------------------------------------------------
# Set and map code generation
# ---------------------------------------------------------------------------

def codegen_set(s: USet | BasicSet) -> Node:
    """Loop nest enumerating the set in lexicographic order, with an
    identity-schedule statement call at the innermost level."""
    if isinstance(s, BasicSet):
        s = USet((s,))
    s = normalize(s)
    nests = []
    for piece in s.pieces:
        if piece.is_obviously_empty():
            continue
        if not piece.dims:
            raise CodegenError(f"set {piece.space.tuple_name!r} has no dimensions")
        call = StmtCall(piece.space.tuple_name,
                        tuple(AffExpr.var(d) for d in piece.dims))
        nests.append(_scan(piece.dims, piece.constraints, call,
                           f"set {piece.space.tuple_name!r}"))
    if not nests:
        return Seq(())
    if len(nests) == 1:
        return nests[0]
    # disjoint pieces execute one after the other, in piece order
    return Seq(tuple(nests))


def codegen_map(m: UMap | BasicMap) -> Node:
    """Loop nest scanning the map's output (time) dims lexicographically,
    calling the input statement with arguments recovered from the schedule.

    Union pieces are supported in two shapes: pieces that differ only in
    constant trailing output dims fuse into one nest with ordered calls
    (the stream-interleaving case), otherwise pieces are emitted as
    sequential nests in piece order.
    """
    if isinstance(m, BasicMap):
        m = UMap((m,))
    m = normalize(m)
    pieces = tuple(p for p in m.pieces if not p.is_obviously_empty())
    if not pieces:
        return Seq(())
    tables = schedule_check(UMap(pieces))
    arity = {len(p.out_dims) for p in pieces}
    if len(arity) > 1:
        raise UnsupportedUnionShape("union pieces disagree on output arity")

    scanned = []
    for piece, table in zip(pieces, tables):
        scanned.append(_piece_out_system(piece, table))
    if not scanned:
        return Seq(())
    if len(scanned) == 1:
        dims, cons, call = scanned[0]
        return _scan(dims, cons, call, f"schedule of {m.in_tuple!r}")
    fused = _try_fuse_trailing_constants(scanned)
    if fused is not None:
        return fused
    return Seq(tuple(_scan(dims, cons, call, f"schedule of {m.in_tuple!r}")
                     for dims, cons, call in scanned))


def _piece_out_system(piece: BasicMap, table: dict[str, AffExpr]):
    """Rewrite a map piece into (out dims renamed c0.., constraints over
    them, statement call with recovered arguments)."""
    rename = {d: f"c{k}" for k, d in enumerate(piece.out_dims)}
    cons = []
    for c in piece.constraints:
        expr = c.expr
        for in_dim, repl in table.items():
            expr = expr.substitute(in_dim, repl)
        cons.append(Constraint(expr.rename(rename), c.kind))
    args = tuple(table[d].rename(rename) for d in piece.in_dims)
    dims = tuple(rename[d] for d in piece.out_dims)
    return dims, tuple(dict.fromkeys(cons)), StmtCall(piece.in_tuple, args)


def _trailing_constants(dims, cons):
    """Values of the suffix dims that are pinned to integer constants."""
    consts: dict[str, int] = {}
    for c in cons:
        if c.kind != EQ:
            continue
        vs = list(c.expr.vars())
        if len(vs) == 1 and abs(c.expr.coeff(vs[0])) == 1:
            a = c.expr.coeff(vs[0])
            consts[vs[0]] = -c.expr.const * a
    suffix: list[int] = []
    for d in reversed(dims):
        if d in consts:
            suffix.append(consts[d])
        else:
            break
    suffix.reverse()
    return suffix


def _try_fuse_trailing_constants(scanned):
    """Fuse pieces that differ only in constant trailing out dims into one
    nest whose innermost body is an ordered statement sequence."""
    dims0 = scanned[0][0]
    tails = []
    for dims, cons, _ in scanned:
        if dims != dims0:
            return None
        tails.append(_trailing_constants(dims, cons))
    depth = min(len(t) for t in tails)
    if depth == 0:
        return None
    # use the shortest common constant suffix length shared by all pieces
    keyed = []
    prefix = dims0[:-depth]
    if not prefix:
        return None
    for (dims, cons, call), tail in zip(scanned, tails):
        key = tuple(tail[-depth:])
        keyed.append((key, cons, call))
    if len({k for k, _, _ in keyed}) != len(keyed):
        return None  # two pieces share a time point: not a valid schedule
    keyed.sort(key=lambda item: item[0])

    # Merge every piece's prefix constraints into one bound set.  This is
    # the intersection of the piece ranges; the fused shape requires pieces
    # to cover the same prefix range at every runtime binding (the shipped
    # interleave constructor guarantees it when the factor divides n).
    merged: list[Constraint] = []
    calls = []
    for key, cons, call in keyed:
        sub = dict(zip(dims0[-depth:], key))
        empty = False
        for c in cons:
            expr = c.expr
            for d, v in sub.items():
                expr = expr.substitute(d, AffExpr.constant(v))
            t = Constraint(expr, c.kind).tighten()
            if t is False:
                empty = True
                break
            if t is not True and t not in merged:
                merged.append(t)
        if not empty:
            calls.append(call)
    if not calls:
        return Seq(())
    body = Seq(tuple(calls)) if len(calls) > 1 else calls[0]
    return _scan(prefix, tuple(merged), body, "fused schedule")


# ---------------------------------------------------------------------------
# C emission
# ---------------------------------------------------------------------------

_HELPERS = {
    "floord": "#ifndef floord\n#define floord(a, b) "
              "(((a) < 0) ? -((-(a) + (b) - 1) / (b)) : (a) / (b))\n#endif",
    "ceild": "#ifndef ceild\n#define ceild(a, b) "
             "(((a) < 0) ? -((-(a)) / (b)) : ((a) + (b) - 1) / (b))\n#endif",
    "max": "#ifndef max\n#define max(a, b) (((a) > (b)) ? (a) : (b))\n#endif",
    "min": "#ifndef min\n#define min(a, b) (((a) < (b)) ? (a) : (b))\n#endif",
}


def _c_expr(e: AffExpr) -> str:
    parts = []
    for v, c in e.terms:
        if c == 1:
            term = v
        elif c == -1:
            term = f"-{v}"
        else:
            term = f"{c} * {v}"
        if not parts:
            parts.append(term)
        elif term.startswith("-"):
            parts.append(f"- {term[1:]}")
        else:
            parts.append(f"+ {term}")
    if e.const or not parts:
        if not parts:
            parts.append(str(e.const))
        elif e.const > 0:
            parts.append(f"+ {e.const}")
        else:
            parts.append(f"- {-e.const}")
    return " ".join(parts)


def _c_bound(b: BoundExpr, used: set[str]) -> str:
    num = _c_expr(b.numerator)
    if b.denominator == 1:
        return num
    fn = "floord" if b.rounding == FLOOR else "ceild"
    used.add(fn)
    return f"{fn}({num}, {b.denominator})"


def _c_minmax(exprs: list[str], fn: str, used: set[str]) -> str:
    if len(exprs) == 1:
        return exprs[0]
    used.add(fn)
    acc = exprs[-1]
    for e in reversed(exprs[:-1]):
        acc = f"{fn}({e}, {acc})"
    return acc


def _c_condition(c: Constraint) -> str:
    op = "==" if c.kind == EQ else ">="
    return f"{_c_expr(c.expr)} {op} 0"


def emit_kernel_c(ast: Node, stmt_table: dict[str, int]) -> str:
    """Render the AST as C99 text with floord/ceild/max/min helpers emitted
    once (only the ones used).  Output is deterministic for a given AST."""
    used: set[str] = set()
    lines: list[str] = []
    _emit(ast, stmt_table, 0, used, lines)
    if not lines:
        return ""
    header = [_HELPERS[h] for h in ("floord", "ceild", "max", "min") if h in used]
    return "\n".join(header + lines) + "\n"


def _emit(node: Node, stmt_table: dict[str, int], indent: int,
          used: set[str], lines: list[str]):
    pad = "  " * indent
    if isinstance(node, Seq):
        for child in node.children:
            _emit(child, stmt_table, indent, used, lines)
    elif isinstance(node, Guard):
        cond = " && ".join(_c_condition(c) for c in node.conditions) or "1"
        lines.append(f"{pad}if ({cond}) {{")
        _emit(node.body, stmt_table, indent + 1, used, lines)
        lines.append(f"{pad}}}")
    elif isinstance(node, Loop):
        lo = _c_minmax([_c_bound(b, used) for b in node.lowers], "max", used)
        hi = _c_minmax([_c_bound(b, used) for b in node.uppers], "min", used)
        it = node.iterator
        lines.append(f"{pad}for (int {it} = {lo}; {it} <= {hi}; {it} += 1)")
        # statement macros may expand to several C statements, so anything
        # but a directly nested loop gets braces
        if isinstance(node.body, Loop):
            _emit(node.body, stmt_table, indent + 1, used, lines)
        else:
            lines[-1] += " {"
            _emit(node.body, stmt_table, indent + 1, used, lines)
            lines.append(f"{pad}}}")
    elif isinstance(node, StmtCall):
        if node.name not in stmt_table:
            raise UnknownStatement(f"statement {node.name!r} is not declared")
        if stmt_table[node.name] != len(node.args):
            raise UnknownStatement(
                f"statement {node.name!r} takes {stmt_table[node.name]} "
                f"arguments, called with {len(node.args)}")
        args = ", ".join(_c_expr(a) for a in node.args)
        lines.append(f"{pad}{node.name}({args});")
    else:
        raise TypeError(f"bad AST node {node!r}")


def stmt_names(node: Node) -> dict[str, int]:
    """Collect statement names and arities appearing in an AST."""
    table: dict[str, int] = {}
    def walk(n: Node):
        if isinstance(n, Seq):
            for c in n.children:
                walk(c)
        elif isinstance(n, (Guard, Loop)):
            walk(n.body)
        elif isinstance(n, StmtCall):
            table.setdefault(n.name, len(n.args))
    walk(node)
    return table
