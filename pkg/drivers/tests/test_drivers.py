"""End-to-end driver tests: generate with the CLI, compile with the system
C compiler, run under the argv/stdout protocol.

These tests exercise the C templates and the counter shim.  They consume
the benchmark tool only through its external surfaces: the `membench`
command line and the driver protocol.  A C compiler with OpenMP support is
required; the whole suite is sized to stay well under a minute.
"""

import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[2]
PATTERNS = REPO / "patterns"
TEMPLATES = REPO / "drivers" / "templates"

CC = shutil.which("cc") or shutil.which("gcc")
pytestmark = pytest.mark.skipif(CC is None, reason="no C compiler on PATH")


def membench(*args):
    return subprocess.run(
        [sys.executable, "-m", "membench", "--templates", str(TEMPLATES),
         *map(str, args)],
        capture_output=True, text=True, cwd=REPO)


def gen(out_dir, pattern, *extra):
    proc = membench("--out", out_dir, "gen", PATTERNS / pattern, *extra)
    assert proc.returncode == 0, proc.stderr
    return Path(out_dir)


def compile_bundle(bundle: Path, with_shim: bool = False):
    sources = ["driver.c"] + (["perf_counters.c"] if with_shim else [])
    cmd = [CC, "-O3", "-fopenmp", "-std=gnu99", *sources, "-lm", "-o", "driver"]
    proc = subprocess.run(cmd, cwd=bundle, capture_output=True, text=True)
    assert proc.returncode == 0, f"{' '.join(cmd)}\n{proc.stderr}"
    return bundle / "driver"


def run_driver(exe: Path, *argv):
    proc = subprocess.run([str(exe), *map(str, argv)], capture_output=True,
                          text=True)
    values = {}
    for line in proc.stdout.splitlines():
        if "=" in line:
            key, _, val = line.partition("=")
            values[key] = val
    return proc.returncode, values, proc.stdout


class TestEndToEndTriad:
    def test_unified_and_independent_agree(self, tmp_path):
        """Both template families must validate the same expected value
        (init 1/3/4 with scalar 3.0 gives 15.0) and report bandwidth > 0;
        budget: under 30 seconds including compilation."""
        t0 = time.monotonic()
        results = {}
        for pattern, template in (("triad", "unified"),
                                  ("triad-independent", "independent")):
            bundle = gen(tmp_path / template, pattern, "--template", template)
            exe = compile_bundle(bundle)
            rc, values, raw = run_driver(exe, 4096, 2, 10)
            assert rc == 0, raw
            assert values["validation"] == "pass", raw
            elapsed = float(values["elapsed_seconds"])
            instances = int(values["instances_executed"])
            assert elapsed > 0 and instances > 0
            bandwidth = 24 * instances / elapsed
            assert bandwidth > 0
            results[template] = values
        assert time.monotonic() - t0 < 30.0
        # unified runs n instances per repetition; independent runs them in
        # every one of the two threads
        assert int(results["unified"]["instances_executed"]) == 4096 * 10
        assert int(results["independent"]["instances_executed"]) == 4096 * 10 * 2

    def test_both_validate_the_same_literal_value(self):
        for pattern in ("triad", "triad-independent"):
            spec = (PATTERNS / pattern / "kernel.spec").read_text()
            assert "CHECK(A_map(i) == 15.0)" in spec


class TestNowaitClause:
    def test_split_pragma_form_compiles_and_validates(self, tmp_path):
        bundle = gen(tmp_path, "triad", "--clause", "schedule(static) nowait")
        header = (bundle / "pattern.h").read_text()
        assert "#define MB_SPLIT_PARALLEL 1" in header
        driver = (bundle / "driver.c").read_text()
        assert "MB_PRAGMA(omp for CLAUSE)" in driver
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 4096, 2, 10)
        assert rc == 0 and values["validation"] == "pass", raw

    def test_chunked_nowait_clause(self, tmp_path):
        bundle = gen(tmp_path, "triad", "--clause",
                     "schedule(static, n/t) nowait")
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 4096, 2, 10)
        assert rc == 0 and values["validation"] == "pass", raw


class TestPaddedJacobi:
    def test_padded_layout_compiles_and_asserts_line_alignment(self, tmp_path):
        """The driver's validation pass checks that per-thread base rows sit
        a whole number of 64-byte lines apart."""
        bundle = gen(tmp_path, "jacobi1d-padded", "--template", "independent")
        header = (bundle / "pattern.h").read_text()
        assert "mb_d % 64 != 0" in header
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 1024, 2, 10)
        assert rc == 0 and values["validation"] == "pass", raw


class TestCounters:
    def test_counter_events_reported_or_unsupported(self, tmp_path):
        bundle = gen(tmp_path, "triad", "--template", "unified+counters",
                     "--counters", "L1D_MISS")
        assert (bundle / "perf_counters.c").exists()
        exe = compile_bundle(bundle, with_shim=True)
        rc, values, raw = run_driver(exe, 4096, 2, 10,
                                     "--counters", "L1D_MISS")
        assert rc == 0 and values["validation"] == "pass", raw
        value = values["counter.L1D_MISS"]
        if value != "unsupported":
            assert int(value) >= 0

    def test_unknown_event_is_unsupported_not_fatal(self, tmp_path):
        bundle = gen(tmp_path, "triad", "--template", "unified+counters",
                     "--counters", "NO_SUCH_EVENT")
        exe = compile_bundle(bundle, with_shim=True)
        rc, values, raw = run_driver(exe, 1024, 1, 2,
                                     "--counters", "NO_SUCH_EVENT")
        assert rc == 0 and values["validation"] == "pass", raw
        assert values["counter.NO_SUCH_EVENT"] == "unsupported"


SUITE = [("triad", "unified"), ("triad-independent", "independent"),
         ("triad-interleaved", "unified"), ("hexad", "unified"),
         ("jacobi1d", "unified"), ("jacobi1d-padded", "independent"),
         ("jacobi2d", "unified"), ("jacobi3d", "unified")]


@pytest.mark.parametrize("pattern,template", SUITE)
def test_dry_run_sources_compile_unmodified(tmp_path, pattern, template):
    bundle = gen(tmp_path, pattern, "--template", template)
    exe = compile_bundle(bundle)
    rc, values, raw = run_driver(exe, 64, 2, 2)
    assert rc == 0 and values["validation"] == "pass", raw


class TestTransformsEndToEnd:
    def test_tiled_jacobi3d_validates(self, tmp_path):
        bundle = gen(tmp_path, "jacobi3d", "--transform", "tile=0:32,1:64,2:16")
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 70, 2, 2)
        assert rc == 0 and values["validation"] == "pass", raw
        assert int(values["instances_executed"]) == 70 ** 3 * 2

    def test_interchanged_jacobi2d_validates(self, tmp_path):
        bundle = gen(tmp_path, "jacobi2d", "--transform", "interchange=1,0")
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 64, 2, 2)
        assert rc == 0 and values["validation"] == "pass", raw

    def test_interleaved_triad_validates_and_guards_divisibility(self, tmp_path):
        bundle = gen(tmp_path, "triad", "--transform", "interleave=2")
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 4096, 2, 4)
        assert rc == 0 and values["validation"] == "pass", raw
        rc, _, _ = run_driver(exe, 4095, 2, 4)
        assert rc == 2


class TestBuildErrorPaths:
    def test_broken_statement_macro_surfaces_compiler_diagnostics(self, tmp_path):
        broken = tmp_path / "broken-pattern"
        src = PATTERNS / "triad"
        broken.mkdir()
        for f in src.iterdir():
            text = f.read_text()
            if f.name == "kernel.spec":
                text = text.replace(
                    "Triad_run(i) = A_map(i) = B_map(i) + scalar * C_map(i);",
                    "Triad_run(i) = A_map(i) = B_map(i +;")
            (broken / f.name).write_text(text)
        proc = membench("--out", tmp_path / "b", "build", broken)
        assert proc.returncode == 2
        assert "CompileFailed" in proc.stderr
        assert "error" in proc.stderr.lower()

    def test_missing_compiler_reported(self, tmp_path):
        proc = membench("--toolchain", "/no/such/cc -O3",
                        "--out", tmp_path / "b", "build", PATTERNS / "triad")
        assert proc.returncode == 2
        assert "CompilerNotFound" in proc.stderr


class TestProtocolSurface:
    def test_warmup_flag_accepted(self, tmp_path):
        bundle = gen(tmp_path, "triad")
        exe = compile_bundle(bundle)
        rc, values, raw = run_driver(exe, 1024, 1, 3, "--warmup", 0)
        assert rc == 0 and values["validation"] == "pass", raw

    def test_bad_usage_exits_nonzero(self, tmp_path):
        bundle = gen(tmp_path, "triad")
        exe = compile_bundle(bundle)
        rc, _, _ = run_driver(exe)
        assert rc == 2

    def test_cli_bench_end_to_end(self, tmp_path):
        """The bench subcommand drives generate -> build -> execute ->
        report and produces a parseable jsonl report."""
        out = tmp_path / "report.jsonl"
        proc = membench("--out", out, "bench", PATTERNS / "triad",
                        "-n", 4096, "--threads", 2, "--ntimes", 10)
        assert proc.returncode == 0, proc.stderr
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1
        import json
        rec = json.loads(lines[0])
        assert rec["validation"] == "pass"
        assert rec["bytes_per_instance"] == 24
        assert rec["bandwidth_bytes_per_second"] > 0
        assert rec["metadata"]["toolchain"].startswith("cc")

    def test_cli_sweep_small_ladder(self, tmp_path):
        """A reduced sweep over an artificial tiny machine file: plans,
        builds once, executes every config, reports bands."""
        machine = tmp_path / "machine.txt"
        machine.write_text(
            "L1.capacity = 8192\nL1.scope = core\n"
            "L2.capacity = 65536\nL2.scope = core\n"
            "cores_per_domain = 2\ndomains = 1\n")
        out = tmp_path / "sweep.jsonl"
        proc = membench("--machine", machine, "--out", out,
                        "bench", PATTERNS / "triad", "--sweep", "auto",
                        "--threads", 1, "--ntimes", 3,
                        "--points-per-level", 2)
        assert proc.returncode == 0, proc.stderr
        import json
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) >= 6
        assert all(r["validation"] == "pass" for r in records)
        ns = [r["n"] for r in records]
        assert ns == sorted(ns)
