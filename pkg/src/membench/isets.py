"""Parameterized integer sets and relations with affine constraints.

This is the restricted Presburger fragment the benchmark scripts need:
conjunctions of affine equalities/inequalities over named iterators and
parameters, unions of disjoint pieces, and existential variables that are
eliminable by substitution (each one pinned by an equality with a +/-1
coefficient).  All arithmetic is exact Python integer arithmetic, so there
is no overflow or rounding anywhere in the pipeline.

The module also provides the brute-force enumeration oracle used by the
test suite: scan a bounding box derived by Fourier-Motzkin projection and
filter by the original constraints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import gcd


class ISetError(Exception):
    """Base class for set-algebra errors."""


class SpaceMismatch(ISetError):
    pass


class NonEliminableExistential(ISetError):
    pass


class UnboundedSetError(ISetError):
    pass


class UnboundParameter(ISetError):
    pass


class NotInvertibleAsSchedule(ISetError):
    pass


# ---------------------------------------------------------------------------
# Affine expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffExpr:
    """Integer affine expression: sum of coeff*var terms plus a constant.

    Canonical form stores terms sorted by variable name with no zero
    coefficients, which makes AffExpr hashable and syntactic comparison
    reliable.
    """

    terms: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def make(coeffs: dict[str, int], const: int = 0) -> "AffExpr":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return AffExpr(items, const)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "AffExpr":
        return AffExpr.make({name: coeff})

    @staticmethod
    def constant(c: int) -> "AffExpr":
        return AffExpr((), c)

    @property
    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    def vars(self) -> set[str]:
        return {v for v, _ in self.terms}

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: "AffExpr | int") -> "AffExpr":
        if isinstance(other, int):
            return AffExpr(self.terms, self.const + other)
        coeffs = self.coeffs
        for v, c in other.terms:
            coeffs[v] = coeffs.get(v, 0) + c
        return AffExpr.make(coeffs, self.const + other.const)

    def __sub__(self, other: "AffExpr | int") -> "AffExpr":
        if isinstance(other, int):
            return AffExpr(self.terms, self.const - other)
        return self + (-other)

    def __neg__(self) -> "AffExpr":
        return AffExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __mul__(self, k: int) -> "AffExpr":
        if k == 0:
            return AffExpr((), 0)
        return AffExpr(tuple((v, c * k) for v, c in self.terms), self.const * k)

    __rmul__ = __mul__

    def substitute(self, name: str, repl: "AffExpr") -> "AffExpr":
        c = self.coeff(name)
        if c == 0:
            return self
        coeffs = self.coeffs
        del coeffs[name]
        base = AffExpr.make(coeffs, self.const)
        return base + repl * c

    def rename(self, mapping: dict[str, str]) -> "AffExpr":
        coeffs: dict[str, int] = {}
        for v, c in self.terms:
            nv = mapping.get(v, v)
            coeffs[nv] = coeffs.get(nv, 0) + c
        return AffExpr.make(coeffs, self.const)

    def evaluate(self, env: dict[str, int]) -> int:
        total = self.const
        for v, c in self.terms:
            total += c * env[v]
        return total

    def __str__(self) -> str:
        parts = []
        for v, c in self.terms:
            if c == 1:
                term = v
            elif c == -1:
                term = f"-{v}"
            else:
                term = f"{c}*{v}"
            if parts and not term.startswith("-"):
                parts.append(f"+ {term}")
            elif parts:
                parts.append(f"- {term[1:]}")
            else:
                parts.append(term)
        if self.const or not parts:
            c = self.const
            if parts:
                parts.append(f"+ {c}" if c >= 0 else f"- {-c}")
            else:
                parts.append(str(c))
        return " ".join(parts)


EQ = "=="
GE = ">="


@dataclass(frozen=True)
class Constraint:
    """expr == 0 or expr >= 0 over iterators, parameters and existentials."""

    expr: AffExpr
    kind: str  # EQ or GE

    def __post_init__(self):
        if self.kind not in (EQ, GE):
            raise ValueError(f"bad constraint kind {self.kind!r}")

    def tighten(self) -> "Constraint | bool":
        """Normalize by the gcd of the coefficients.

        Returns True for a trivially satisfied constraint, False for a
        trivially contradictory one, otherwise the tightened constraint.
        For >=, the constant is floor-divided (integer tightening); for ==,
        a non-divisible constant means no integer solutions.
        """
        coeffs = [c for _, c in self.expr.terms]
        if not coeffs:
            if self.kind == EQ:
                return self.expr.const == 0
            return self.expr.const >= 0
        g = 0
        for c in coeffs:
            g = gcd(g, abs(c))
        if g == 1:
            return self
        terms = tuple((v, c // g) for v, c in self.expr.terms)
        if self.kind == EQ:
            if self.expr.const % g != 0:
                return False
            return Constraint(AffExpr(terms, self.expr.const // g), EQ)
        # floor division tightens a >= constraint without losing points
        return Constraint(AffExpr(terms, self.expr.const // g), GE)

    def substitute(self, name: str, repl: AffExpr) -> "Constraint":
        return Constraint(self.expr.substitute(name, repl), self.kind)

    def rename(self, mapping: dict[str, str]) -> "Constraint":
        return Constraint(self.expr.rename(mapping), self.kind)

    def holds(self, env: dict[str, int]) -> bool:
        v = self.expr.evaluate(env)
        return v == 0 if self.kind == EQ else v >= 0

    def __str__(self) -> str:
        op = "=" if self.kind == EQ else ">="
        return f"{self.expr} {op} 0"


FALSE_CONSTRAINT = Constraint(AffExpr.constant(-1), GE)


def _clean(constraints) -> tuple[Constraint, ...]:
    """Tighten constraints, drop trivial truths, collapse contradictions."""
    out: list[Constraint] = []
    seen = set()
    for c in constraints:
        t = c.tighten()
        if t is True:
            continue
        if t is False:
            return (FALSE_CONSTRAINT,)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return tuple(out)


# ---------------------------------------------------------------------------
# Spaces, sets, maps
# ---------------------------------------------------------------------------

def _check_unique(names, what: str):
    seen = set()
    for n in names:
        if n in seen:
            raise ISetError(f"duplicate name {n!r} in {what}")
        seen.add(n)


@dataclass(frozen=True)
class Space:
    """Named tuple space: parameters plus ordered iterator names."""

    params: tuple[str, ...]
    tuple_name: str
    dims: tuple[str, ...]

    def __post_init__(self):
        _check_unique(tuple(self.params) + tuple(self.dims), f"space {self.tuple_name}")


@dataclass(frozen=True)
class BasicSet:
    space: Space
    constraints: tuple[Constraint, ...]
    exists: tuple[str, ...] = ()

    @property
    def dims(self) -> tuple[str, ...]:
        return self.space.dims

    @property
    def params(self) -> tuple[str, ...]:
        return self.space.params

    def all_vars(self) -> tuple[str, ...]:
        return self.params + self.dims + self.exists

    def is_obviously_empty(self) -> bool:
        return FALSE_CONSTRAINT in self.constraints

    def with_constraints(self, constraints) -> "BasicSet":
        return BasicSet(self.space, _clean(constraints), self.exists)

    def __str__(self) -> str:
        return format_piece(self.params, self.space.tuple_name, self.dims,
                            None, None, self.constraints, self.exists)


@dataclass(frozen=True)
class BasicMap:
    """Relation from an input tuple to an output tuple.

    Constraints range over params + in_dims + out_dims (+ existentials).
    """

    params: tuple[str, ...]
    in_tuple: str
    in_dims: tuple[str, ...]
    out_tuple: str
    out_dims: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    exists: tuple[str, ...] = ()

    def __post_init__(self):
        _check_unique(self.params + self.in_dims + self.out_dims + self.exists,
                      f"map {self.in_tuple}->{self.out_tuple}")

    def is_obviously_empty(self) -> bool:
        return FALSE_CONSTRAINT in self.constraints

    def with_constraints(self, constraints) -> "BasicMap":
        return BasicMap(self.params, self.in_tuple, self.in_dims,
                        self.out_tuple, self.out_dims, _clean(constraints),
                        self.exists)

    def __str__(self) -> str:
        return format_piece(self.params, self.in_tuple, self.in_dims,
                            self.out_tuple, self.out_dims, self.constraints,
                            self.exists)


@dataclass(frozen=True)
class USet:
    """Union of BasicSets over a shared parameter list.

    Pieces are required to be pairwise disjoint on integer points; the
    enumeration oracle verifies this in tests at small sizes.
    """

    pieces: tuple[BasicSet, ...]

    def __post_init__(self):
        if not self.pieces:
            raise ISetError("USet needs at least one piece")

    @property
    def params(self) -> tuple[str, ...]:
        return _union_params(p.params for p in self.pieces)

    @property
    def tuple_name(self) -> str:
        return self.pieces[0].space.tuple_name

    @property
    def arity(self) -> int:
        return len(self.pieces[0].dims)

    def normalize(self) -> "USet":
        return USet(tuple(normalize(p) for p in self.pieces))

    def __str__(self) -> str:
        return format_union(self.params, [piece_body(p) for p in self.pieces])


@dataclass(frozen=True)
class UMap:
    pieces: tuple[BasicMap, ...]

    def __post_init__(self):
        if not self.pieces:
            raise ISetError("UMap needs at least one piece")

    @property
    def params(self) -> tuple[str, ...]:
        return _union_params(p.params for p in self.pieces)

    @property
    def in_tuple(self) -> str:
        return self.pieces[0].in_tuple

    @property
    def in_arity(self) -> int:
        return len(self.pieces[0].in_dims)

    @property
    def out_arity(self) -> int:
        return len(self.pieces[0].out_dims)

    def normalize(self) -> "UMap":
        return UMap(tuple(normalize(p) for p in self.pieces))

    def __str__(self) -> str:
        return format_union(self.params, [piece_body(p) for p in self.pieces])


def _union_params(param_lists) -> tuple[str, ...]:
    out: list[str] = []
    for params in param_lists:
        for p in params:
            if p not in out:
                out.append(p)
    return tuple(out)


def format_piece(params, in_name, in_dims, out_name, out_dims, constraints,
                 exists) -> str:
    head = f"[{', '.join(params)}] -> " if params else ""
    body = _piece_text(in_name, in_dims, out_name, out_dims, constraints, exists)
    return f"{head}{{ {body} }}"


def piece_body(p) -> str:
    """The text between the braces for one set or map piece."""
    if isinstance(p, BasicSet):
        return _piece_text(p.space.tuple_name, p.dims, None, None,
                           p.constraints, p.exists)
    return _piece_text(p.in_tuple, p.in_dims, p.out_tuple, p.out_dims,
                       p.constraints, p.exists)


def _piece_text(in_name, in_dims, out_name, out_dims, constraints, exists) -> str:
    tup = f"{in_name}[{', '.join(in_dims)}]"
    if out_dims is not None:
        tup += f" -> {out_name or ''}[{', '.join(out_dims)}]"
    cons = " and ".join(_constraint_text(c) for c in constraints)
    if exists:
        cons = f"exists {', '.join(exists)} : {cons}" if cons else \
            f"exists {', '.join(exists)} : 0 = 0"
    return f"{tup} : {cons}" if cons else tup


def _constraint_text(c: Constraint) -> str:
    op = "=" if c.kind == EQ else ">="
    return f"{c.expr} {op} 0"


def format_union(params, piece_bodies) -> str:
    head = f"[{', '.join(params)}] -> " if params else ""
    return f"{head}{{ {'; '.join(piece_bodies)} }}"


# ---------------------------------------------------------------------------
# Normalization: existential elimination + integer tightening
# ---------------------------------------------------------------------------

def normalize(bs):
    """Eliminate existential variables by substituting their defining
    equalities, then tighten all constraints.

    Only the substitution-eliminable fragment is supported: every
    existential must occur in some equality with coefficient +1 or -1.
    The integer point set is preserved exactly.
    """
    if isinstance(bs, BasicSet):
        cons, exists = _eliminate(bs.constraints, bs.exists)
        return BasicSet(bs.space, cons, exists)
    if isinstance(bs, BasicMap):
        cons, exists = _eliminate(bs.constraints, bs.exists)
        return BasicMap(bs.params, bs.in_tuple, bs.in_dims, bs.out_tuple,
                        bs.out_dims, cons, exists)
    if isinstance(bs, (USet, UMap)):
        return bs.normalize()
    raise TypeError(f"cannot normalize {type(bs).__name__}")


def _eliminate(constraints, exists):
    cons = list(constraints)
    remaining = list(exists)
    while remaining:
        progressed = False
        for var in list(remaining):
            defn = None
            for c in cons:
                if c.kind == EQ and abs(c.expr.coeff(var)) == 1:
                    defn = c
                    break
            if defn is None:
                continue
            a = defn.expr.coeff(var)
            # a*var + rest == 0  =>  var = -rest/a  (a is +/-1)
            rest = defn.expr - AffExpr.var(var, a)
            repl = rest * (-a)
            cons = [c.substitute(var, repl) for c in cons if c is not defn]
            remaining.remove(var)
            progressed = True
        if not progressed:
            raise NonEliminableExistential(
                f"existential(s) {remaining} have no defining equality with "
                f"unit coefficient")
    return _clean(cons), ()


# ---------------------------------------------------------------------------
# Set operations
# ---------------------------------------------------------------------------

def _unify_set_spaces(a: BasicSet, b: BasicSet) -> tuple[Space, BasicSet]:
    """Rename b's dims to a's and merge params; returns the merged space and
    the renamed b."""
    if a.space.tuple_name != b.space.tuple_name:
        raise SpaceMismatch(
            f"tuple names differ: {a.space.tuple_name!r} vs {b.space.tuple_name!r}")
    if len(a.dims) != len(b.dims):
        raise SpaceMismatch(
            f"arity mismatch: {len(a.dims)} vs {len(b.dims)} for "
            f"{a.space.tuple_name!r}")
    params = _union_params([a.params, b.params])
    rename = dict(zip(b.dims, a.dims))
    # existentials of b may collide with a's names
    taken = set(params) | set(a.dims) | set(a.exists)
    ex_map = {}
    for e in b.exists:
        ne = e
        while ne in taken:
            ne += "'"
        ex_map[e] = ne
        taken.add(ne)
    rename.update(ex_map)
    b2 = BasicSet(Space(params, a.space.tuple_name, a.dims),
                  tuple(c.rename(rename) for c in b.constraints),
                  tuple(ex_map[e] for e in b.exists))
    return Space(params, a.space.tuple_name, a.dims), b2


def intersect(a: USet, b: USet) -> USet:
    """Pointwise intersection; pieces are intersected pairwise."""
    out = []
    for pa in a.pieces:
        for pb in b.pieces:
            space, pb2 = _unify_set_spaces(pa, pb)
            merged = BasicSet(space,
                              _clean(pa.constraints + pb2.constraints),
                              pa.exists + pb2.exists)
            out.append(merged)
    return USet(tuple(out))


def restrict_domain(m: UMap, s: USet) -> UMap:
    """Keep only pairs of m whose input point lies in s (script operator *)."""
    out = []
    for pm in m.pieces:
        for ps in s.pieces:
            if pm.in_tuple != ps.space.tuple_name:
                raise SpaceMismatch(
                    f"map input {pm.in_tuple!r} does not match set tuple "
                    f"{ps.space.tuple_name!r}")
            if len(pm.in_dims) != len(ps.dims):
                raise SpaceMismatch(
                    f"map input arity {len(pm.in_dims)} vs set arity "
                    f"{len(ps.dims)}")
            params = _union_params([pm.params, ps.params])
            rename = dict(zip(ps.dims, pm.in_dims))
            taken = set(params) | set(pm.in_dims) | set(pm.out_dims) | set(pm.exists)
            ex_map = {}
            for e in ps.exists:
                ne = e
                while ne in taken:
                    ne += "'"
                ex_map[e] = ne
                taken.add(ne)
            rename.update(ex_map)
            extra = tuple(c.rename(rename) for c in ps.constraints)
            out.append(BasicMap(params, pm.in_tuple, pm.in_dims,
                                pm.out_tuple, pm.out_dims,
                                _clean(pm.constraints + extra),
                                pm.exists + tuple(ex_map[e] for e in ps.exists)))
    return UMap(tuple(out))


def compose(after: UMap, before: UMap) -> UMap:
    """Relation composition: x -> z when x -> y in `before` and y -> z in
    `after`.  Mid-tuple variables are treated as existentials and must be
    substitution-eliminable (true for all shipped transform constructors)."""
    out = []
    for p1 in before.pieces:
        for p2 in after.pieces:
            if len(p1.out_dims) != len(p2.in_dims):
                raise SpaceMismatch(
                    f"composition arity mismatch: {len(p1.out_dims)} vs "
                    f"{len(p2.in_dims)}")
            params = _union_params([p1.params, p2.params])
            taken = set(params) | set(p1.in_dims) | set(p1.exists)
            mid = []
            for d in p1.out_dims:
                nd = d
                while nd in taken:
                    nd += "'"
                mid.append(nd)
                taken.add(nd)
            ren1 = dict(zip(p1.out_dims, mid))
            out_dims = []
            for d in p2.out_dims:
                nd = d
                while nd in taken:
                    nd += "'"
                out_dims.append(nd)
                taken.add(nd)
            ren2 = dict(zip(p2.in_dims, mid))
            ren2.update(dict(zip(p2.out_dims, out_dims)))
            ex2 = []
            for e in p2.exists:
                ne = e
                while ne in taken:
                    ne += "'"
                ren2[e] = ne
                ex2.append(ne)
                taken.add(ne)
            cons = [c.rename(ren1) for c in p1.constraints]
            cons += [c.rename(ren2) for c in p2.constraints]
            piece = BasicMap(params, p1.in_tuple, p1.in_dims,
                             p2.out_tuple, tuple(out_dims), _clean(cons),
                             p1.exists + tuple(mid) + tuple(ex2))
            out.append(normalize(piece))
    return UMap(tuple(out))


# ---------------------------------------------------------------------------
# Schedule inversion
# ---------------------------------------------------------------------------

def schedule_check(m: UMap) -> list[dict[str, AffExpr]]:
    """For each piece, express every input dim as an affine function of the
    output dims and parameters, using the piece's equality constraints.

    This is what lets codegen reconstruct statement arguments from loop
    iterators.  Raises NotInvertibleAsSchedule when some input dim is not
    determined.
    """
    tables = []
    for piece in m.pieces:
        if piece.exists:
            raise NotInvertibleAsSchedule(
                "schedule_check requires a normalized map (run normalize first)")
        allowed = set(piece.params) | set(piece.out_dims)
        eqs = [c.expr for c in piece.constraints if c.kind == EQ]
        known: dict[str, AffExpr] = {}
        unknown = set(piece.in_dims)
        while unknown:
            progressed = False
            for expr in eqs:
                expr2 = expr
                for v, repl in known.items():
                    expr2 = expr2.substitute(v, repl)
                free_in = [v for v in expr2.vars() if v in unknown]
                if len(free_in) != 1:
                    continue
                x = free_in[0]
                a = expr2.coeff(x)
                if abs(a) != 1:
                    continue
                if any(v not in allowed and v != x for v in expr2.vars()):
                    continue
                rest = expr2 - AffExpr.var(x, a)
                known[x] = rest * (-a)
                unknown.remove(x)
                progressed = True
            if not progressed:
                raise NotInvertibleAsSchedule(
                    f"input dim(s) {sorted(unknown)} of {piece.in_tuple!r} are "
                    f"not affine functions of the output dims")
        tables.append(known)
    return tables


# ---------------------------------------------------------------------------
# Fourier-Motzkin elimination (exact integer arithmetic, rational relaxation)
# ---------------------------------------------------------------------------

def to_inequalities(constraints) -> list[AffExpr]:
    """Expand equalities into inequality pairs; result items mean expr >= 0."""
    out = []
    for c in constraints:
        if c.kind == EQ:
            out.append(c.expr)
            out.append(-c.expr)
        else:
            out.append(c.expr)
    return out


def fm_eliminate(ineqs: list[AffExpr], var: str) -> list[AffExpr]:
    """Eliminate `var` from a system of expr >= 0 inequalities.

    Sound over the integers (the projection is a superset of the true
    integer shadow); exact for the rational relaxation.
    """
    lowers = []   # a > 0:  a*var >= -rest
    uppers = []   # a < 0:  (-a)*var <= rest
    rest = []
    for e in ineqs:
        a = e.coeff(var)
        if a > 0:
            lowers.append(e)
        elif a < 0:
            uppers.append(e)
        else:
            rest.append(e)
    out = list(rest)
    for lo in lowers:
        a = lo.coeff(var)
        for up in uppers:
            b = -up.coeff(var)
            # b*(lo) + a*(up) cancels var
            combined = lo * b + up * a
            out.append(combined)
    # tighten and dedupe
    cleaned = _clean(Constraint(e, GE) for e in out)
    if FALSE_CONSTRAINT in cleaned:
        return [FALSE_CONSTRAINT.expr]
    return [c.expr for c in cleaned]


def _var_bounds(ineqs: list[AffExpr], var: str, others: list[str]):
    """Project away `others`, then return concrete (lo, hi) for `var`.

    Expressions must be ground (no free names) after the projection; used
    by the enumeration oracle.
    """
    sys = list(ineqs)
    for o in others:
        sys = fm_eliminate(sys, o)
    lo = None
    hi = None
    for e in sys:
        a = e.coeff(var)
        if a == 0:
            if not e.vars() and e.const < 0:
                return (1, 0)  # infeasible: empty range
            continue
        # a*var + c >= 0
        c = e.const
        if a > 0:
            b = _ceil_div(-c, a)
            lo = b if lo is None else max(lo, b)
        else:
            b = _floor_div(c, -a)
            hi = b if hi is None else min(hi, b)
    if lo is None or hi is None:
        raise UnboundedSetError(
            f"dimension {var!r} has no finite {'lower' if lo is None else 'upper'} bound")
    return (lo, hi)


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# ---------------------------------------------------------------------------
# Enumeration oracle
# ---------------------------------------------------------------------------

def enumerate_points(s: USet | BasicSet, bindings: dict[str, int]) -> list[tuple[int, ...]]:
    """All integer points of the set, sorted lexicographically.

    This is the testing oracle for code generation: a bounding box for every
    dimension (and existential) is derived by Fourier-Motzkin projection,
    the box is scanned, and candidate points are filtered by the original
    constraints.  Existentials are scanned as extra inner coordinates and
    projected out.
    """
    pieces = s.pieces if isinstance(s, USet) else (s,)
    points: set[tuple[int, ...]] = set()
    for piece in pieces:
        points.update(_enumerate_piece(piece, bindings))
    return sorted(points)


def _enumerate_piece(piece: BasicSet, bindings: dict[str, int]):
    for p in piece.params:
        if p not in bindings:
            raise UnboundParameter(f"parameter {p!r} has no binding")
    cons = list(piece.constraints)
    for p in piece.params:
        cons = [c.substitute(p, AffExpr.constant(bindings[p])) for c in cons]
    cons = _clean(cons)
    if FALSE_CONSTRAINT in cons:
        return []
    scan_vars = list(piece.dims) + list(piece.exists)
    ineqs = to_inequalities(cons)
    ranges = []
    for v in scan_vars:
        others = [o for o in scan_vars if o != v]
        lo, hi = _var_bounds(ineqs, v, others)
        if lo > hi:
            return []
        ranges.append(range(lo, hi + 1))
    ndims = len(piece.dims)
    out = []
    for combo in itertools.product(*ranges):
        env = dict(zip(scan_vars, combo))
        if all(c.holds(env) for c in cons):
            out.append(combo[:ndims])
    return out


def enumerate_pairs(m: UMap | BasicMap, bindings: dict[str, int]):
    """All (input point, output point) pairs of a map, sorted lex by
    (out, in).  Oracle counterpart of enumerate_points for relations."""
    pieces = m.pieces if isinstance(m, UMap) else (m,)
    pairs = set()
    for piece in pieces:
        space = Space(piece.params, piece.in_tuple,
                      piece.in_dims + piece.out_dims)
        as_set = BasicSet(space, piece.constraints, piece.exists)
        k = len(piece.in_dims)
        for pt in _enumerate_piece(as_set, bindings):
            pairs.add((pt[k:], pt[:k]))
    return sorted(pairs)
