"""Constructors for execution-order transformations, expressed as relations.

Each constructor returns a map (or union map) that can be applied to a run
schedule with restrict_domain and handed to codegen_map, so patterns never
need editing to test a different execution order.  Constructors are pure;
the returned values are immutable.
"""

from __future__ import annotations

from .isets import AffExpr, BasicMap, Constraint, EQ, GE, UMap


class TransformError(Exception):
    pass


class NotAPermutation(TransformError):
    pass


class BadTileSize(TransformError):
    pass


class UnsupportedArity(TransformError):
    pass


_STMT = "S"


def interchange(arity: int, permutation: tuple[int, ...],
                tuple_name: str = _STMT) -> BasicMap:
    """Reorder loop dims: output position k carries input dim permutation[k].

    interchange(2, (1, 0)) is the classic swap {S[i,j] -> [j,i]}.
    """
    if sorted(permutation) != list(range(arity)):
        raise NotAPermutation(
            f"{permutation!r} is not a permutation of 0..{arity - 1}")
    in_dims = tuple(f"i{k}" for k in range(arity))
    out_dims = tuple(f"c{k}" for k in range(arity))
    cons = tuple(
        Constraint(AffExpr.var(out_dims[k]) - AffExpr.var(in_dims[p]), EQ)
        for k, p in enumerate(permutation))
    return BasicMap((), tuple_name, in_dims, tuple_name, out_dims, cons)


def tile(arity: int, tiled_dims: tuple[int, ...], sizes: tuple[int, ...],
         tuple_name: str = _STMT) -> BasicMap:
    """Rectangular tiling: one tile iterator per tiled dim, ordered before
    the point dims.  Tiling every dim is full blocking; a subset gives the
    partial-blocking variant (2D slices of a 3D space).
    """
    if len(tiled_dims) != len(sizes):
        raise BadTileSize("one size per tiled dim required")
    if len(set(tiled_dims)) != len(tiled_dims):
        raise BadTileSize(f"tiled dims {tiled_dims!r} are not distinct")
    if any(d < 0 or d >= arity for d in tiled_dims):
        raise BadTileSize(f"tiled dims {tiled_dims!r} out of range for arity {arity}")
    if any(s < 1 for s in sizes):
        raise BadTileSize(f"tile sizes must be positive, got {sizes!r}")
    in_dims = tuple(f"i{k}" for k in range(arity))
    tile_dims = tuple(f"t{k}" for k in tiled_dims)
    out_point = tuple(f"c{len(tiled_dims) + k}" for k in range(arity))
    out_dims = tuple(f"c{k}" for k in range(len(tiled_dims))) + out_point
    cons = [Constraint(AffExpr.var(out_point[k]) - AffExpr.var(in_dims[k]), EQ)
            for k in range(arity)]
    # size*t <= i <= size*t + size - 1 pins each point dim to its tile
    for t_name, d, size in zip(out_dims[:len(tiled_dims)], tiled_dims, sizes):
        i = AffExpr.var(in_dims[d])
        t = AffExpr.var(t_name)
        cons.append(Constraint(i - t * size, GE))
        cons.append(Constraint(t * size - i + (size - 1), GE))
    return BasicMap((), tuple_name, in_dims, tuple_name, out_dims, tuple(cons))


def interleave(halves_param: str = "h", factor: int = 2,
               tuple_name: str = _STMT) -> UMap:
    """Split a 1-dim stream into `factor` equal blocks and fuse them into a
    single loop, so one iteration touches `factor` widely separated points.

    The block length is the symbolic parameter `halves_param`; the harness
    binds it to n/factor and requires factor | n.  Block b maps i to
    [i - b*h, b], so codegen emits one loop with `factor` ordered calls.
    """
    if factor < 1:
        raise UnsupportedArity(f"interleave factor must be >= 1, got {factor}")
    h = AffExpr.var(halves_param)
    i = AffExpr.var("i0")
    pieces = []
    for b in range(factor):
        out0 = AffExpr.var("c0")
        out1 = AffExpr.var("c1")
        cons = (
            Constraint(out0 - (i - h * b), EQ),
            Constraint(out1 - AffExpr.constant(b), EQ),
            Constraint(i - h * b, GE),                      # b*h <= i
            Constraint(h * (b + 1) - i - 1, GE),            # i < (b+1)*h
        )
        pieces.append(BasicMap((halves_param,), tuple_name, ("i0",),
                               tuple_name, ("c0", "c1"), cons))
    return UMap(tuple(pieces))


# --- CLI spec parsing --------------------------------------------------------

def parse_transform_spec(spec: str):
    """Parse a --transform option value.

    Forms: `interchange=1,0`, `tile=0:32,1:64,2:16`, `interleave=2`.
    Returns (kind, payload) where payload is the parsed argument tuple.
    """
    if "=" not in spec:
        raise TransformError(f"bad transform spec {spec!r} (expected kind=args)")
    kind, _, args = spec.partition("=")
    kind = kind.strip()
    try:
        if kind == "interchange":
            perm = tuple(int(x) for x in args.split(","))
            return ("interchange", perm)
        if kind == "tile":
            pairs = []
            for item in args.split(","):
                d, _, s = item.partition(":")
                pairs.append((int(d), int(s)))
            return ("tile", tuple(pairs))
        if kind == "interleave":
            return ("interleave", int(args))
    except ValueError as exc:
        raise TransformError(f"bad transform spec {spec!r}: {exc}") from exc
    raise TransformError(f"unknown transform kind {kind!r}")


def build_transform(kind: str, payload, arity: int, tuple_name: str):
    """Materialize a parsed transform spec against a schedule of the given
    arity and statement name."""
    if kind == "interchange":
        if len(payload) != arity:
            raise NotAPermutation(
                f"permutation {payload!r} does not match arity {arity}")
        return UMap((interchange(arity, payload, tuple_name),))
    if kind == "tile":
        dims = tuple(d for d, _ in payload)
        sizes = tuple(s for _, s in payload)
        return UMap((tile(arity, dims, sizes, tuple_name),))
    if kind == "interleave":
        if arity != 1:
            raise UnsupportedArity(
                f"interleave applies to 1-dim schedules, arity is {arity}")
        return interleave("h", payload, tuple_name)
    raise TransformError(f"unknown transform kind {kind!r}")
