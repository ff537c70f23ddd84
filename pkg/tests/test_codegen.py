"""Loop scanning: oracle equivalence, schedule order, C emission."""

import random

import pytest

from membench.codegen import (
    BoundExpr, FLOOR, Guard, Loop, Seq, UnboundedDimension,
    UnknownStatement, codegen_map, codegen_set, emit_kernel_c, interpret,
    loop_depth, stmt_names,
)
from membench.isets import AffExpr, enumerate_points
from membench.script import eval_script, parse_map, parse_script, parse_set


def run_points(ast, bindings):
    return [args for _, args in interpret(ast, bindings)]


class TestCodegenSet:
    def test_single_loop(self):
        s = parse_set("[n] -> { S[j] : 0 <= j < n }")
        ast = codegen_set(s)
        assert isinstance(ast, Loop)
        assert ast.iterator == "j"
        assert run_points(ast, {"n": 5}) == [(j,) for j in range(5)]

    def test_heat_interior_nest(self):
        s = parse_set("[n] -> { S[i,j] : 1 <= i <= n and 1 <= j <= n }")
        ast = codegen_set(s)
        assert loop_depth(ast) == 2
        assert run_points(ast, {"n": 4}) == enumerate_points(s, {"n": 4})

    def test_empty_set_gives_empty_seq(self):
        s = parse_set("{ S[i] : 1 <= i < 1 }")
        assert codegen_set(s) == Seq(())

    def test_triangle(self):
        s = parse_set("[n] -> { S[i,j] : 0 <= i < n and i <= j < n }")
        ast = codegen_set(s)
        for n in (0, 1, 4, 7):
            assert run_points(ast, {"n": n}) == enumerate_points(s, {"n": n})

    def test_equality_folds_into_bounds(self):
        s = parse_set("[n] -> { S[i,j] : 0 <= i < n and j = i + 2 }")
        ast = codegen_set(s)
        assert run_points(ast, {"n": 3}) == [(0, 2), (1, 3), (2, 4)]

    def test_coarse_equality_visits_multiples_only(self):
        # 2j = i constrains the inner loop to even i rows
        s = parse_set("{ S[i,j] : 0 <= i < 7 and 2*j = i }")
        ast = codegen_set(s)
        assert run_points(ast, {}) == [(0, 0), (2, 1), (4, 2), (6, 3)]

    def test_param_only_equality_becomes_guard(self):
        s = parse_set("[n] -> { S[i] : 0 <= i < 4 and n = 3 }")
        ast = codegen_set(s)
        assert isinstance(ast, Guard)
        assert run_points(ast, {"n": 3}) == [(i,) for i in range(4)]
        assert run_points(ast, {"n": 5}) == []

    def test_unbounded_dimension_named(self):
        s = parse_set("[n] -> { S[i,j] : 0 <= i < n and j >= 0 }")
        with pytest.raises(UnboundedDimension, match="'j'"):
            codegen_set(s)

    def test_union_pieces_sequential(self):
        s = parse_set("{ S[i] : 0 <= i < 3; S[i] : 10 <= i < 12 }")
        ast = codegen_set(s)
        assert run_points(ast, {}) == [(0,), (1,), (2,), (10,), (11,)]

    def test_normalizes_existentials_first(self):
        s = parse_set("[n] -> { S[tk,k] : exists rk : 0 <= rk < 4 and "
                      "k = 4*tk + rk and 0 <= k < n }")
        ast = codegen_set(s)
        assert run_points(ast, {"n": 9}) == enumerate_points(s, {"n": 9})


class TestFmBounds:
    def test_divided_upper_bound(self):
        from membench.codegen import fm_bounds
        from membench.isets import AffExpr
        # 32*c0 <= n  ==>  c0 <= floord(n, 32)
        ineqs = [AffExpr.make({"n": 1, "c0": -32})]
        lowers, uppers = fm_bounds(ineqs, "c0")
        assert lowers == []
        assert uppers == [BoundExpr(AffExpr.var("n"), 32, FLOOR)]

    def test_multiple_lowers_render_as_max(self):
        from membench.codegen import fm_bounds
        from membench.isets import AffExpr
        # c3 >= 1 and c3 >= 32*c0
        ineqs = [AffExpr.make({"c3": 1}, -1),
                 AffExpr.make({"c3": 1, "c0": -32})]
        lowers, uppers = fm_bounds(ineqs, "c3")
        assert {str(b.numerator) for b in lowers} == {"1", "32*c0"}
        assert all(b.denominator == 1 for b in lowers)

    def test_unit_coefficients_no_division(self):
        from membench.codegen import fm_bounds
        from membench.isets import AffExpr
        # 0 <= j and j <= n - 1
        ineqs = [AffExpr.var("j"), AffExpr.make({"n": 1, "j": -1}, -1)]
        lowers, uppers = fm_bounds(ineqs, "j")
        assert lowers == [BoundExpr(AffExpr.constant(0))]
        assert uppers == [BoundExpr(AffExpr.make({"n": 1}, -1))]

    def test_syntactic_duplicates_removed(self):
        from membench.codegen import fm_bounds
        from membench.isets import AffExpr
        ineqs = [AffExpr.var("j"), AffExpr.var("j")]
        lowers, _ = fm_bounds(ineqs, "j")
        assert len(lowers) == 1


class TestUnionDisjointness:
    def test_interleave_pieces_disjoint_on_points(self):
        from membench.isets import enumerate_pairs
        from membench.script import parse_map
        m = parse_map("[n, h] -> { S[i] -> [i, 0] : 0 <= i < h; "
                      "S[i] -> [i - h, 1] : h <= i < 2*h }")
        binding = {"n": 8, "h": 4}
        per_piece = [len(enumerate_pairs(piece, binding)) for piece in
                     (m.pieces[0], m.pieces[1])]
        assert sum(per_piece) == len(enumerate_pairs(m, binding))


class TestOracleEquivalence:
    def test_randomized_sets_match_oracle(self):
        rng = random.Random(1234)
        for trial in range(80):
            ndim = rng.randint(1, 3)
            dims = ", ".join("ijk"[:ndim])
            lines = []
            for d in "ijk"[:ndim]:
                lo = rng.randint(-4, 2)
                hi = lo + rng.randint(0, 8)
                lines.append(f"{lo} <= {d} <= {hi}")
            for _ in range(rng.randint(0, 3)):
                coeffs = [rng.randint(-3, 3) for _ in range(ndim)]
                expr = " + ".join(f"{c}*{d}" for c, d in zip(coeffs, "ijk"))
                lines.append(f"{expr} <= {rng.randint(-4, 10)}")
            text = f"{{ S[{dims}] : {' and '.join(lines)} }}"
            s = parse_set(text)
            ast = codegen_set(s)
            assert run_points(ast, {}) == enumerate_points(s, {}), text

    def test_parametric_sets_match_oracle(self):
        rng = random.Random(77)
        for trial in range(30):
            ndim = rng.randint(1, 2)
            dims = ", ".join("ij"[:ndim])
            lines = []
            for d in "ij"[:ndim]:
                lines.append(f"0 <= {d} and {d} <= n + {rng.randint(-3, 3)}")
            if ndim == 2:
                lines.append(f"{rng.randint(-2, 2)}*i + j <= n")
            text = f"[n] -> {{ S[{dims}] : {' and '.join(lines)} }}"
            s = parse_set(text)
            ast = codegen_set(s)
            for n in (1, 4, 12):
                assert run_points(ast, {"n": n}) == enumerate_points(s, {"n": n}), text


class TestCodegenMap:
    def test_interchange_order(self):
        text = ("D := [n] -> { S[i,j] : 1 <= i <= n and 1 <= j <= n };\n"
                "T := { S[i,j] -> [j,i] };\ncodegen(T * D);")
        m = eval_script(parse_script(text))
        ast = codegen_map(m)
        trace = interpret(ast, {"n": 3})
        # executed in lexicographic (j, i) order; args are original (i, j)
        args = [a for _, a in trace]
        assert args == [(i, j) for j in range(1, 4) for i in range(1, 4)]

    def test_tiled_nest_structure(self):
        text = ("D := [n] -> { S[k,j,i] : 1 <= k <= n and 1 <= j <= n and 1 <= i <= n };\n"
                "T := [n] -> { S[k,j,i] -> S[tk,tj,ti,k,j,i] : exists rk,rj,ri :\n"
                "0<=rk<32 and k=tk*32+rk and 0<=rj<64 and j=tj*64+rj and 0<=ri<16 and i=ti*16+ri };\n"
                "codegen(T * D);")
        m = eval_script(parse_script(text))
        ast = codegen_map(m)
        assert loop_depth(ast) == 6
        # tile loop upper bound floord(n, 32) appears on the outermost loop
        node = ast
        while not isinstance(node, Loop):
            node = node.body
        assert BoundExpr(AffExpr.var("n"), 32, FLOOR) in node.uppers
        trace = run_points(ast, {"n": 40})
        domain = parse_set("[n] -> { S[k,j,i] : 1 <= k <= n and 1 <= j <= n and 1 <= i <= n }")
        assert sorted(trace) == enumerate_points(domain, {"n": 40})
        assert len(trace) == 40 ** 3

    def test_interleave_fuses_to_single_loop(self):
        text = ("D := [n,h] -> { S[i] : 0 <= i < n };\n"
                "T := [n,h] -> { S[i] -> [i, 0] : 0 <= i < h; "
                "S[i] -> [i - h, 1] : h <= i < 2*h };\n"
                "codegen(T * D);")
        m = eval_script(parse_script(text))
        ast = codegen_map(m)
        assert loop_depth(ast) == 1
        body = ast
        while not isinstance(body, Loop):
            body = body.body
        assert isinstance(body.body, Seq)
        assert len(body.body.children) == 2
        trace = run_points(ast, {"n": 8, "h": 4})
        assert trace == [(0,), (4,), (1,), (5,), (2,), (6,), (3,), (7,)]

    def test_map_on_empty_domain(self):
        text = ("D := { S[i] : 1 <= i < 1 };\nT := { S[i] -> [i] };\n"
                "codegen(T * D);")
        m = eval_script(parse_script(text))
        assert codegen_map(m) == Seq(())

    def test_schedule_order_is_image_lex_order(self):
        # reversal schedule: execute in descending i
        text = ("D := [n] -> { S[i] : 0 <= i < n };\n"
                "T := [n] -> { S[i] -> [n - i] };\ncodegen(T * D);")
        m = eval_script(parse_script(text))
        ast = codegen_map(m)
        assert run_points(ast, {"n": 5}) == [(4,), (3,), (2,), (1,), (0,)]


class TestScheduleCorrectness:
    def test_skewed_schedule(self):
        # wavefront-style skew: time = (i, i + j)
        text = ("D := [n] -> { S[i,j] : 0 <= i < n and 0 <= j < n };\n"
                "T := { S[i,j] -> [i, i + j] };\ncodegen(T * D);")
        from membench.script import eval_script, parse_script
        m = eval_script(parse_script(text))
        ast = codegen_map(m)
        trace = [args for _, args in interpret(ast, {"n": 4})]
        assert sorted(trace) == [(i, j) for i in range(4) for j in range(4)]
        images = [(i, i + j) for i, j in trace]
        assert images == sorted(images)

    def test_randomized_invertible_schedules(self):
        """Executed argument multiset equals the domain, and execution order
        is the lexicographic order of schedule images."""
        import random

        from membench.isets import enumerate_pairs
        from membench.script import eval_script, parse_script

        rng = random.Random(0x5EED)
        for trial in range(40):
            n0 = rng.randint(1, 6)
            n1 = rng.randint(1, 6)
            swap = rng.random() < 0.5
            shift0 = rng.randint(-3, 3)
            shift1 = rng.randint(-3, 3)
            skew = rng.randint(-2, 2)
            a, b = ("j", "i") if swap else ("i", "j")
            out0 = f"{a} + {shift0}"
            out1 = f"{b} + {skew}*{a} + {shift1}"
            text = (f"D := {{ S[i,j] : 0 <= i < {n0} and 0 <= j < {n1} }};\n"
                    f"T := {{ S[i,j] -> [{out0}, {out1}] }};\n"
                    f"codegen(T * D);")
            m = eval_script(parse_script(text))
            ast = codegen_map(m)
            trace = [args for _, args in interpret(ast, {})]
            domain = [(i, j) for i in range(n0) for j in range(n1)]
            assert sorted(trace) == domain, text
            pairs = enumerate_pairs(m, {})     # sorted by (image, point)
            assert trace == [point for _, point in pairs], text


class TestEmitC:
    def test_triad_loop_text(self):
        s = parse_set("[n] -> { Triad_run[j] : 0 <= j < n }")
        ast = codegen_set(s)
        text = emit_kernel_c(ast, {"Triad_run": 1})
        assert "for (int j = 0; j <= n - 1; j += 1)" in text
        assert "Triad_run(j);" in text
        assert "floord" not in text

    def test_tiled_text_contains_floord_and_max(self):
        text_script = (
            "D := [n] -> { S[k,j,i] : 1 <= k <= n and 1 <= j <= n and 1 <= i <= n };\n"
            "T := [n] -> { S[k,j,i] -> S[tk,tj,ti,k,j,i] : exists rk,rj,ri :\n"
            "0<=rk<32 and k=tk*32+rk and 0<=rj<64 and j=tj*64+rj and 0<=ri<16 and i=ti*16+ri };\n"
            "codegen(T * D);")
        m = eval_script(parse_script(text_script))
        out = emit_kernel_c(codegen_map(m), {"S": 3})
        assert "floord(n, 32)" in out
        assert "max(1, 32 * c0)" in out
        assert "min(n, 32 * c0 + 31)" in out
        assert "S(c3, c4, c5);" in out
        assert "#define floord" in out

    def test_empty_seq_emits_nothing(self):
        assert emit_kernel_c(Seq(()), {}) == ""

    def test_unknown_statement_rejected(self):
        s = parse_set("{ S[i] : 0 <= i < 2 }")
        with pytest.raises(UnknownStatement):
            emit_kernel_c(codegen_set(s), {"T": 1})
        with pytest.raises(UnknownStatement):
            emit_kernel_c(codegen_set(s), {"S": 2})

    def test_deterministic(self):
        s = parse_set("[n] -> { S[i,j] : 0 <= i < n and i <= j < n + 4 }")
        a = emit_kernel_c(codegen_set(s), {"S": 2})
        b = emit_kernel_c(codegen_set(s), {"S": 2})
        assert a == b

    def test_emitted_c_floord_matches_python_semantics(self):
        # floord/ceild macros must agree with Python floor division for
        # negative numerators; checked symbolically here.
        def c_floord(a, b):
            return -((-a + b - 1) // b) if a < 0 else a // b

        def c_ceild(a, b):
            return -((-a) // b) if a < 0 else (a + b - 1) // b

        for a in range(-40, 41):
            for b in (1, 2, 3, 16, 32):
                assert c_floord(a, b) == a // b
                assert c_ceild(a, b) == -((-a) // b)

    def test_stmt_names_collects_arities(self):
        s = parse_set("{ S[i,j] : 0 <= i < 2 and 0 <= j < 2 }")
        assert stmt_names(codegen_set(s)) == {"S": 2}
