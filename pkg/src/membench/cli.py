"""Command line entry point.

Subcommands: codegen, inspect, gen, build, run, sweep, bench, report.
Global flags: --machine, --templates, --toolchain, --out, --format.
Module errors exit with status 2 and a provenance-tagged diagnostic.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import tempfile
from pathlib import Path

from . import __version__
from .codegen import CodegenError, codegen_map, codegen_set, emit_kernel_c, stmt_names
from .driverkit import (
    DriverError, TemplateKind, ToolchainConfig, build, instantiate,
    write_bundle,
)
from .harness import (
    HarnessError, RunConfig, SweepOptions, bytes_per_instance_for,
    execute_repeated, make_metadata, pattern_footprint, plan_sweep,
)
from .isets import ISetError, UMap
from .machine import MachineError, detect_machine, load_machine
from .patterns import PatternError, load_pattern, validate_pattern
from .reports import ReportError, read_report, render_table, write_report
from .script import ScriptError, eval_script, parse_script
from .transforms import TransformError

_ERRORS = (ISetError, ScriptError, CodegenError, PatternError, TransformError,
           DriverError, HarnessError, MachineError, ReportError)


def _toolchain_from(text: str | None) -> ToolchainConfig:
    if not text:
        return ToolchainConfig()
    parts = text.split()
    return ToolchainConfig(cc=parts[0], flags=tuple(parts[1:]))


def _machine_from(args) -> object:
    if args.machine:
        return load_machine(args.machine)
    return detect_machine()


def _pattern_hash(pattern_dir: Path) -> str:
    h = hashlib.sha256()
    for f in sorted(pattern_dir.iterdir()):
        if f.is_file():
            h.update(f.name.encode())
            h.update(f.read_bytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_codegen(args) -> int:
    text = Path(args.script).read_text()
    script = parse_script(text)
    value = eval_script(script)
    if isinstance(value, UMap):
        ast = codegen_map(value)
    else:
        ast = codegen_set(value)
    sys.stdout.write(emit_kernel_c(ast, stmt_names(ast)))
    return 0


def cmd_inspect(args) -> int:
    p = load_pattern(args.pattern)
    print(f"pattern {p.name}")
    for s in p.spaces:
        pad = f" pad={s.padding}" if s.padding != 1 else ""
        print(f"  space {s.name}: rank {s.rank}, extent {' x '.join(s.extents)}, "
              f"{s.element}, {s.layout}{pad}")
    for m in p.mappings:
        print(f"  mapping {m.name}({', '.join(m.iterators)}) = {m.body}")
    for s in p.statements:
        print(f"  statement {s.name} [{s.role}]")
    if p.clause:
        print(f"  clause: {p.clause}")
    for prm in p.params:
        print(f"  param {prm.name} : {prm.ctype} = {prm.value}")
    print(f"  bytes_per_instance: {bytes_per_instance_for(p)}"
          + ("" if p.bytes_override is None else " (explicit)"))
    diags = validate_pattern(p)
    for d in diags:
        print(f"  {d}")
    return 0 if not any(d.severity == "error" for d in diags) else 2


def _instantiate_from_args(args):
    p = load_pattern(args.pattern)
    kind = TemplateKind.parse(args.template)
    if args.counters:
        kind = TemplateKind(kind.base, counters=True)
    return p, instantiate(
        p, kind, transforms=tuple(args.transform),
        clause_override=args.clause, templates_dir=args.templates,
        toolchain=_toolchain_from(args.toolchain))


def cmd_gen(args) -> int:
    _, bundle = _instantiate_from_args(args)
    out = Path(args.out or f"build/{bundle.pattern}-{bundle.kind.name}")
    write_bundle(bundle, out)
    print(out)
    return 0


def cmd_build(args) -> int:
    _, bundle = _instantiate_from_args(args)
    out = Path(args.out or f"build/{bundle.pattern}-{bundle.kind.name}")
    exe, cmdline = build(bundle, out)
    print(exe)
    return 0


def _run_configs(args, p, machine) -> list[RunConfig]:
    counters = tuple(args.counters.split(",")) if args.counters else ()
    if getattr(args, "sweep", None) == "auto":
        opts = SweepOptions(
            points_per_level=args.points_per_level,
            threads=args.threads, ntimes=args.ntimes,
            template=args.template, transforms=tuple(args.transform),
            counters=counters, warmup=args.warmup)
        footprint = pattern_footprint(p, args.threads)
        return plan_sweep(machine, footprint, opts, p.name)
    if getattr(args, "sizes", None):
        sizes = [int(s) for s in args.sizes.split(",")]
    else:
        sizes = [args.n]
    return [RunConfig(p.name, args.template, tuple(args.transform), n,
                      args.threads, args.ntimes, counters, args.warmup)
            for n in sizes]


def _execute_all(args, p, bundle, configs, machine) -> int:
    out_dir = Path(args.out or "results")
    with tempfile.TemporaryDirectory(prefix="membench-") as tmp:
        exe, cmdline = build(bundle, tmp)
        meta = make_metadata(
            toolchain=cmdline, template_hash=bundle.template_hash,
            pattern_hash=_pattern_hash(Path(args.pattern)),
            extra={"machine_detected": machine.detected,
                   "clause": args.clause if args.clause is not None else p.clause,
                   "template": bundle.kind.name})
        bpi = bytes_per_instance_for(p)
        records = []
        for cfg in configs:
            rec = execute_repeated(str(exe), cfg, bpi, repeats=args.repeats,
                                   metadata=dict(meta))
            flag = "ok" if rec.valid else "VALIDATION FAILED"
            print(f"  n={cfg.n} threads={cfg.threads} "
                  f"{rec.bandwidth_gbps:.3f} GB/s [{flag}]", file=sys.stderr)
            records.append(rec)
    report_path = (out_dir if out_dir.suffix else
                   out_dir / f"{p.name}-{bundle.kind.name}.{args.format}")
    footprint = pattern_footprint(p, configs[0].threads)
    write_report(records, args.format, report_path, machine, footprint)
    print(report_path)
    return 0 if all(r.valid for r in records) else 1


def cmd_run(args) -> int:
    machine = _machine_from(args)
    p, bundle = _instantiate_from_args(args)
    configs = _run_configs(args, p, machine)
    return _execute_all(args, p, bundle, configs, machine)


def cmd_sweep(args) -> int:
    args.sweep = "auto"
    return cmd_run(args)


def cmd_bench(args) -> int:
    machine = _machine_from(args)
    p, bundle = _instantiate_from_args(args)
    if args.dry_run:
        out = Path(args.out or f"build/{bundle.pattern}-{bundle.kind.name}")
        write_bundle(bundle, out)
        print(out)
        return 0
    configs = _run_configs(args, p, machine)
    return _execute_all(args, p, bundle, configs, machine)


def cmd_report(args) -> int:
    records = read_report(args.input)
    machine = load_machine(args.machine) if args.machine else None
    footprint = None
    if args.pattern and machine is not None:
        p = load_pattern(args.pattern)
        threads = records[0].config.threads if records else 1
        footprint = pattern_footprint(p, threads)
    if args.out:
        write_report(records, args.format, args.out, machine, footprint)
        print(args.out)
    else:
        if args.format == "table":
            sys.stdout.write(render_table(records, machine, footprint))
        else:
            from .reports import render_csv, render_jsonl
            render = render_csv if args.format == "csv" else render_jsonl
            sys.stdout.write(render(records))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common_pattern_args(sp, with_run_opts: bool):
    sp.add_argument("pattern", help="pattern directory")
    sp.add_argument("--template", default="unified",
                    help="unified | independent (+counters)")
    sp.add_argument("--transform", action="append", default=[],
                    metavar="SPEC",
                    help="interchange=1,0 | tile=0:32,1:64 | interleave=2 "
                         "(repeatable)")
    sp.add_argument("--clause", default=None,
                    help="override the pattern's OpenMP clause text")
    sp.add_argument("--counters", default="",
                    help="comma-separated hardware counter names")
    if with_run_opts:
        sp.add_argument("-n", type=int, default=4096, help="problem size")
        sp.add_argument("--sizes", default="",
                        help="comma-separated explicit problem sizes")
        sp.add_argument("--threads", "-t", type=int, default=1)
        sp.add_argument("--ntimes", type=int, default=1000,
                        help="timed repetitions of the kernel")
        sp.add_argument("--warmup", type=int, default=1,
                        help="untimed repetitions before timing")
        sp.add_argument("--repeats", type=int, default=1,
                        help="measure each config this many times; the "
                             "median run is reported with min/median/max "
                             "spread in metadata")
        sp.add_argument("--points-per-level", type=int, default=4)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="membench",
        description="pattern-driven memory benchmarking with polyhedral "
                    "loop generation")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--machine", default=None,
                    help="machine description file (wins over detection)")
    ap.add_argument("--templates", default=None,
                    help="driver template directory")
    ap.add_argument("--toolchain", default=None,
                    help="compiler command line, e.g. 'gcc -O3 -fopenmp'")
    ap.add_argument("--out", default=None, help="output file or directory")
    ap.add_argument("--format", default="jsonl",
                    choices=("jsonl", "csv", "table"))
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("codegen", help="print kernel C for a schedule script")
    sp.add_argument("script")
    sp.set_defaults(fn=cmd_codegen)

    sp = sub.add_parser("inspect", help="show a pattern and its diagnostics")
    sp.add_argument("pattern")
    sp.set_defaults(fn=cmd_inspect)

    sp = sub.add_parser("gen", help="write driver sources without compiling")
    _add_common_pattern_args(sp, with_run_opts=False)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("build", help="generate and compile a driver")
    _add_common_pattern_args(sp, with_run_opts=False)
    sp.set_defaults(fn=cmd_build)

    sp = sub.add_parser("run", help="run one or more explicit configurations")
    _add_common_pattern_args(sp, with_run_opts=True)
    sp.set_defaults(fn=cmd_run, sweep=None, dry_run=False)

    sp = sub.add_parser("sweep", help="plan and run a cache-hierarchy sweep")
    _add_common_pattern_args(sp, with_run_opts=True)
    sp.set_defaults(fn=cmd_sweep, dry_run=False)

    sp = sub.add_parser("bench",
                        help="end to end: generate, build, execute, report")
    _add_common_pattern_args(sp, with_run_opts=True)
    sp.add_argument("--sweep", choices=("auto", "off"), default="off")
    sp.add_argument("--dry-run", action="store_true",
                    help="stop after writing driver sources")
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("report", help="convert a jsonl report")
    sp.add_argument("input")
    sp.add_argument("--pattern", default=None,
                    help="pattern directory (enables band grouping)")
    sp.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _ERRORS as exc:
        print(f"membench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"membench: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
