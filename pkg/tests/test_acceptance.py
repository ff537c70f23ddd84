"""Acceptance suite: one test per acceptance criterion, oracle-based.

Each test prints a `[acceptance] <name>: PASS` line when it succeeds, so a
verbose run doubles as the acceptance report.  None of these tests needs a
C toolchain: the loop-AST interpreter stands in for compiled drivers.
"""

import random
import time
from pathlib import Path

from membench.codegen import codegen_map, codegen_set, interpret, loop_depth
from membench.harness import (
    RunConfig, RunRecord, SweepOptions, band_of, linear_footprint, plan_sweep,
)
from membench.isets import (
    AffExpr, BasicSet, Constraint, GE, Space, USet, enumerate_points,
    normalize, restrict_domain,
)
from membench.machine import CacheLevel, MachineDesc
from membench.reports import parse_jsonl, record_to_dict, render_jsonl
from membench.script import eval_script, parse_script, parse_set
from membench.transforms import interchange, interleave, tile
from membench.isets import UMap

REPO = Path(__file__).resolve().parents[1]

TILED_3D_SCRIPT = """\
Domain_run := [n] -> {
    STM_3DS_run[k,j,i] : i <= n and i >= 1 and j<=n and j >= 1 and k<=n and k >= 1;
};
Tiling := [n] -> {
    STM_3DS_run[k,j,i] -> STM_3DS_run[tk,tj,ti,k,j,i]:exists rk,rj,ri:
                    0<=rk<32 and k=tk*32+rk
                and 0<=rj<64 and j=tj*64+rj
                and 0<=ri<16 and i=ti*16+ri;
};
codegen (Tiling * Domain_run);
"""

R2_MACHINE = MachineDesc((
    CacheLevel("L1", 32 * 1024, 64, "core"),
    CacheLevel("L2", 256 * 1024, 64, "core"),
    CacheLevel("L3", 35 * 1024 * 1024, 64, "domain"),
), cores_per_domain=14, domains=2)


def _report(name: str, ok: bool):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


def _random_normalized_set(rng: random.Random):
    """<= 3 dims, extra constraint coefficients in [-3, 3], optionally one
    parameter; every dim boxed so the set is bounded."""
    ndim = rng.randint(1, 3)
    dims = tuple("ijk"[:ndim])
    use_param = rng.random() < 0.5
    params = ("n",) if use_param else ()
    cons = []
    for d in dims:
        lo = rng.randint(-4, 2)
        cons.append(Constraint(AffExpr.var(d) - lo, GE))
        if use_param and rng.random() < 0.4:
            # d <= n + c, plus a hard cap to keep the box finite
            cons.append(Constraint(
                AffExpr.var("n") + rng.randint(-2, 2) - AffExpr.var(d), GE))
            cons.append(Constraint(AffExpr.constant(lo + 10) - AffExpr.var(d), GE))
        else:
            cons.append(Constraint(
                AffExpr.constant(lo + rng.randint(0, 8)) - AffExpr.var(d), GE))
    for _ in range(rng.randint(0, 3)):
        coeffs = {d: rng.randint(-3, 3) for d in dims}
        if use_param and rng.random() < 0.3:
            coeffs["n"] = rng.randint(-2, 2)
        cons.append(Constraint(
            AffExpr.make(coeffs, rng.randint(-6, 10)), GE))
    s = USet((BasicSet(Space(params, "S", dims), tuple(cons)),))
    binding = {"n": rng.randint(1, 12)} if use_param else {}
    return s, binding


def test_codegen_oracle_equivalence():
    """500 randomized normalized sets: interpreting the generated loop nest
    must enumerate exactly the oracle's lexicographic point list."""
    rng = random.Random(0xC0DE)
    t0 = time.monotonic()
    mismatches = 0
    for trial in range(500):
        s, binding = _random_normalized_set(rng)
        ast = codegen_set(s)
        got = [args for _, args in interpret(ast, binding)]
        expected = enumerate_points(s, binding)
        if got != expected:
            mismatches += 1
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"
    _report("codegen-oracle-equivalence (500 sets, "
            f"{elapsed:.1f}s)", mismatches == 0)


def test_tiled_stencil_nest_structure():
    """The classic tiled-stencil script yields a 6-deep nest with
    floord(n,32)-form uppers and max(1, 32*c0)-form lowers, and executes
    exactly the untiled domain's points at n=70."""
    from membench.codegen import BoundExpr, FLOOR, Loop, emit_kernel_c

    m = eval_script(parse_script(TILED_3D_SCRIPT))
    ast = codegen_map(m)
    ok = loop_depth(ast) == 6

    loops = []
    node = ast
    while isinstance(node, Loop):
        loops.append(node)
        node = node.body
        while not isinstance(node, Loop) and hasattr(node, "body"):
            node = node.body
        if not isinstance(node, Loop):
            break
    ok = ok and BoundExpr(AffExpr.var("n"), 32, FLOOR) in loops[0].uppers
    c3 = loops[3]
    lower_exprs = {str(b.numerator) for b in c3.lowers}
    ok = ok and lower_exprs == {"1", "32*c0"}

    text = emit_kernel_c(ast, {"STM_3DS_run": 3})
    ok = ok and "floord(n, 32)" in text
    ok = ok and "max(1, 32 * c0)" in text
    ok = ok and "min(n, 32 * c0 + 31)" in text

    executed = sorted(args for _, args in interpret(ast, {"n": 70}))
    domain = parse_set(
        "[n] -> { S[k,j,i] : 1 <= k <= n and 1 <= j <= n and 1 <= i <= n }")
    ok = ok and executed == enumerate_points(domain, {"n": 70})
    _report("tiled-stencil-nest-structure (6-deep, n=70)", ok)


def test_interchange_order():
    """Under the swap relation, execution order equals the lexicographic
    order of (j, i) tuples on the 5x5 interior domain."""
    domain = parse_set("{ S[i0,i1] : 1 <= i0 <= 5 and 1 <= i1 <= 5 }")
    m = UMap((interchange(2, (1, 0)),))
    ast = codegen_map(restrict_domain(m, domain))
    got = [args for _, args in interpret(ast, {})]
    expected = [(i, j) for j in range(1, 6) for i in range(1, 6)]
    _report("interchange-execution-order (5x5 interior)", got == expected)


def test_transform_bijection():
    """Tiling (16/32/64, full and partial) and interleaving (f=2,4) must
    preserve the executed point multiset exactly."""
    ok = True
    domain3 = parse_set("[n] -> { S[i0,i1,i2] : 1 <= i0 <= n and "
                        "1 <= i1 <= n and 1 <= i2 <= n }")
    full_cases = [((16, 16, 16), 70), ((32, 32, 32), 70), ((64, 64, 64), 70),
                  ((32, 64, 16), 70)]
    for sizes, n in full_cases:
        m = UMap((tile(3, (0, 1, 2), sizes),))
        got = sorted(args for _, args in
                     interpret(codegen_map(restrict_domain(m, domain3)), {"n": n}))
        ok = ok and got == enumerate_points(domain3, {"n": n})

    partial_cases = [((16, 64), 40), ((32, 32), 40), ((64, 16), 40)]
    for sizes, n in partial_cases:
        m = UMap((tile(3, (1, 2), sizes),))
        got = sorted(args for _, args in
                     interpret(codegen_map(restrict_domain(m, domain3)), {"n": n}))
        ok = ok and got == enumerate_points(domain3, {"n": n})

    domain1 = parse_set("[n,h] -> { S[i0] : 0 <= i0 < n }")
    for f, n in ((2, 4096), (4, 4096), (2, 70), (4, 68)):
        m = interleave("h", f)
        got = sorted(args for _, args in
                     interpret(codegen_map(restrict_domain(m, domain1)),
                               {"n": n, "h": n // f}))
        ok = ok and got == [(i,) for i in range(n)]
    _report("transform-bijection (tile 16/32/64 full+partial, interleave 2/4)", ok)


def test_normalization_soundness():
    """Existential elimination preserves integer point sets on 200
    randomized eliminable instances."""
    rng = random.Random(0xE11)
    failures = 0
    for trial in range(200):
        ndim = rng.randint(1, 2)
        dims = tuple("ij"[:ndim])
        nex = rng.randint(1, 2)
        exists = tuple(f"r{k}" for k in range(nex))
        cons = []
        for d in dims:
            lo = rng.randint(-3, 2)
            cons.append(Constraint(AffExpr.var(d) - lo, GE))
            cons.append(Constraint(AffExpr.constant(lo + rng.randint(0, 6))
                                   - AffExpr.var(d), GE))
        for e in exists:
            # defining equality with unit coefficient: e = sum(c*d) + c0
            coeffs = {d: rng.randint(-2, 2) for d in dims}
            expr = AffExpr.make(coeffs, rng.randint(-3, 3)) - AffExpr.var(e)
            from membench.isets import EQ
            cons.append(Constraint(expr, EQ))
            # extra range constraint through the existential
            cons.append(Constraint(AffExpr.var(e) + rng.randint(0, 8), GE))
            cons.append(Constraint(AffExpr.constant(rng.randint(0, 8))
                                   - AffExpr.var(e), GE))
        s = USet((BasicSet(Space((), "S", dims), tuple(cons), exists),))
        ns = normalize(s)
        if any(p.exists for p in ns.pieces):
            failures += 1
            continue
        if enumerate_points(s, {}) != enumerate_points(ns, {}):
            failures += 1
    _report("normalization-soundness (200 eliminable instances)", failures == 0)


def test_report_round_trip_and_bandwidth_invariant():
    """jsonl serialize -> parse -> serialize must be byte-identical and the
    bandwidth arithmetic must be recomputable from stored fields."""
    meta = {"timestamp": "2026-01-01T00:00:00Z", "host": "node01",
            "toolchain": "cc -O3 -fopenmp", "template_hash": "aaaa",
            "pattern_hash": "bbbb", "tool_version": "0.1.0",
            "omp_env": {"OMP_NUM_THREADS": "2", "OMP_PROC_BIND": "",
                        "OMP_PLACES": ""}}
    records = [
        RunRecord(RunConfig("triad", "unified", (), 1000, 1, 1000), 0.125,
                  1000000, 24, {}, "pass", dict(meta)),
        RunRecord(RunConfig("triad", "independent", ("interleave=2",),
                            4096, 28, 1000, ("L1D_MISS", "CA_SHR")),
                  0.3333333333333333, 4096000, 24,
                  {"L1D_MISS": 123456, "CA_SHR": "unsupported"}, "pass",
                  dict(meta)),
        RunRecord(RunConfig("jacobi1d", "independent", (), 512, 4, 10),
                  0.0625, 5120, 16, {}, "fail", dict(meta)),
    ]
    text1 = render_jsonl(records)
    parsed = parse_jsonl(text1)
    text2 = render_jsonl(parsed)
    ok = text1 == text2 and parsed == sorted(
        records, key=lambda r: (r.config.pattern, r.config.template,
                                r.config.n, r.config.threads))
    for r in parsed:
        d = record_to_dict(r)
        ok = ok and d["bytes_counted"] == d["bytes_per_instance"] * d["instances_executed"]
        ok = ok and d["bandwidth_bytes_per_second"] == d["bytes_counted"] / d["elapsed_seconds"]
    _report("report-round-trip-and-bandwidth-invariant", ok)


def test_sweep_planner_r2_triad():
    """R2-node hierarchy (32KB/256KB/35MB, 64B lines) with the 24n triad
    footprint: at least 4 sizes strictly inside every band, each agreeing
    with hand arithmetic."""
    f = linear_footprint(24)
    opts = SweepOptions(points_per_level=4, ntimes=1000)
    configs = plan_sweep(R2_MACHINE, f, opts, "triad")

    l1, l2, l3 = (32 * 1024, 256 * 1024, 35 * 1024 * 1024)
    hand_bands = {"L1": (l1 // 2, l1), "L2": (l1, l2), "L3": (l2, l3),
                  "DRAM": (l3, 4 * l3)}
    by_band: dict[str, list[int]] = {}
    ok = True
    for c in configs:
        band = band_of(R2_MACHINE, f, c.n, c.threads)
        by_band.setdefault(band, []).append(c.n)
        lo, hi = hand_bands[band]
        ok = ok and lo < 24 * c.n < hi
    ok = ok and set(by_band) == set(hand_bands)
    ok = ok and all(len(v) >= 4 for v in by_band.values())
    ns = [c.n for c in configs]
    ok = ok and ns == sorted(set(ns))
    _report("sweep-planner-r2-bands (>=4 sizes per band, hand-checked)", ok)
