"""Driver bundle assembly and compilation.

A bundle is a directory of C sources: the chosen template (`driver.c`), the
generated pattern header (`pattern.h`), the generated or passthrough kernel
fragments (`body_init.c`, `body_run.c`, `body_val.c`), and glue includes
that bind the run-statement macro either to its real body or to an
instance counter.  Templates are plain files in a templates directory and
can be overridden by path; this module only splices text and shells out to
the C compiler.
"""

from __future__ import annotations

import hashlib
import os
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .codegen import codegen_map, codegen_set, emit_kernel_c
from .isets import USet, restrict_domain
from .patterns import (
    PERTHREAD, PatternSpec, RawKernelC, StatementMacro, UNIFIED,
    validate_pattern,
)
from .script import eval_script
from .transforms import build_transform, parse_transform_spec

C_TYPES = {"double": "double", "float": "float", "int64": "long long"}

TEMPLATE_FILES = ("unified.c", "independent.c", "driver_common.h")
SHIM_FILES = ("perf_counters.h", "perf_counters.c")

TEMPLATES_ENV_VAR = "MEMBENCH_TEMPLATES"


class DriverError(Exception):
    pass


class TemplateLayoutMismatch(DriverError):
    pass


class CompilerNotFound(DriverError):
    pass


class CompileFailed(DriverError):
    pass


@dataclass(frozen=True)
class TemplateKind:
    """unified | independent base, optionally wrapped with counters."""

    base: str
    counters: bool = False

    def __post_init__(self):
        if self.base not in (UNIFIED, "independent"):
            raise DriverError(f"unknown template base {self.base!r}")

    @property
    def name(self) -> str:
        return self.base + ("+counters" if self.counters else "")

    @staticmethod
    def parse(text: str) -> "TemplateKind":
        base, _, rest = text.partition("+")
        return TemplateKind(base, counters=rest == "counters")


@dataclass(frozen=True)
class ToolchainConfig:
    cc: str = "cc"
    flags: tuple[str, ...] = ("-O3", "-fopenmp", "-std=gnu99")

    def command(self, sources: list[str], out: str) -> list[str]:
        return [self.cc, *self.flags, *sources, "-lm", "-o", out]


@dataclass(frozen=True)
class DriverBundle:
    pattern: str
    kind: TemplateKind
    files: dict[str, str]              # filename -> content
    sources: tuple[str, ...]           # files handed to the compiler
    toolchain: ToolchainConfig
    protocol: dict = field(default_factory=lambda: {
        "argv": "<n> <threads> <ntimes> [--counters E1,E2,...] [--warmup R]",
        "stdout": ["elapsed_seconds", "instances_executed", "validation",
                   "threads", "counter.<NAME>"],
        "exit": "0 iff validation passes",
    })

    @property
    def template_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.files):
            h.update(name.encode())
            h.update(self.files[name].encode())
        return h.hexdigest()[:16]


def find_templates_dir(explicit: str | Path | None = None) -> Path:
    """Resolution order: explicit path, $MEMBENCH_TEMPLATES, ./drivers/templates,
    the repo checkout next to this package.  An explicit path must exist."""
    if explicit:
        c = Path(explicit)
        if (c / "unified.c").is_file():
            return c
        raise DriverError(f"no driver templates in {c} (unified.c missing)")
    candidates = []
    env = os.environ.get(TEMPLATES_ENV_VAR)
    if env:
        candidates.append(Path(env))
    candidates.append(Path("drivers/templates"))
    candidates.append(Path(__file__).resolve().parents[2] / "drivers/templates")
    for c in candidates:
        if (c / "unified.c").is_file():
            return c
    raise DriverError(
        "no driver templates found; pass --templates or set "
        f"${TEMPLATES_ENV_VAR} (searched: {', '.join(str(c) for c in candidates)})")


# ---------------------------------------------------------------------------
# Kernel fragment generation
# ---------------------------------------------------------------------------

def generate_fragment(p: PatternSpec, role: str,
                      transforms: tuple[str, ...] = ()) -> str:
    """C text for one schedule (init/run/val), applying transforms to
    script schedules of the run role."""
    sched = p.schedules[role]
    if isinstance(sched, RawKernelC):
        if transforms and role == "run":
            raise DriverError(
                f"pattern {p.name!r} has a raw C run kernel; transforms need a "
                f"script schedule")
        return sched.text
    value = eval_script(sched)
    if transforms and role == "run":
        for spec in transforms:
            kind, payload = parse_transform_spec(spec)
            if isinstance(value, USet):
                arity = value.arity
                name = value.tuple_name
                tmap = build_transform(kind, payload, arity, name)
                value = restrict_domain(tmap, value)
            else:
                from .isets import compose
                tmap = build_transform(kind, payload, value.out_arity,
                                       value.pieces[0].out_tuple or
                                       value.in_tuple)
                value = compose(tmap, value)
    stmt_table = {s.name: len(s.iterators) for s in p.statements}
    ast = codegen_set(value) if isinstance(value, USet) else codegen_map(value)
    return emit_kernel_c(ast, stmt_table)


# ---------------------------------------------------------------------------
# pattern.h generation
# ---------------------------------------------------------------------------

def _alloc_line(space, threads_expr: str = "t") -> tuple[str, str]:
    ctype = C_TYPES[space.element]
    exts = [f"(size_t)({e})" for e in space.extents]
    if space.layout == PERTHREAD:
        rows = f"(size_t)({threads_expr}) * {space.padding}"
        dims = exts
        cells = " * ".join([rows] + dims)
        if space.rank == 1:
            decl = (f"{ctype} (*{space.name})[{exts[0]}] = "
                    f"({ctype} (*)[{exts[0]}]) mb_alloc(sizeof({ctype}) * {cells});")
        else:
            arr = "".join(f"[{e}]" for e in exts)
            decl = (f"{ctype} (*{space.name}){arr} = "
                    f"({ctype} (*){arr}) mb_alloc(sizeof({ctype}) * {cells});")
    else:
        cells = " * ".join(exts)
        if space.rank == 1:
            decl = (f"{ctype} *{space.name} = "
                    f"({ctype} *) mb_alloc(sizeof({ctype}) * {cells});")
        else:
            arr = "".join(f"[{e}]" for e in exts[1:])
            decl = (f"{ctype} (*{space.name}){arr} = "
                    f"({ctype} (*){arr}) mb_alloc(sizeof({ctype}) * {cells});")
    return decl, f"free({space.name});"


def _val_extra(p: PatternSpec) -> str:
    """Per-thread base-address distance checks for padded layouts: padded
    rows must start a whole number of 64-byte lines apart."""
    checks = []
    for s in p.spaces:
        if s.layout != PERTHREAD:
            continue
        if (s.padding * s.element_size) % 64 != 0:
            continue
        zeros = "[0]" * s.rank
        checks.append(
            f"for (int mb_t = 1; mb_t < threads; mb_t++) {{ "
            f"size_t mb_d = (size_t)((char *)&{s.name}[mb_t * {s.padding}]{zeros} - "
            f"(char *)&{s.name}[(mb_t - 1) * {s.padding}]{zeros}); "
            f"if (mb_d % 64 != 0) mb_check_errors += 1; }}")
    if not checks:
        return "do { } while (0)"
    return "do { " + " ".join(checks) + " } while (0)"


def _transform_runtime_support(p: PatternSpec, transforms: tuple[str, ...]):
    """Synthesize driver-side parameters a transform needs at runtime.

    Interleaving by f introduces the block-length parameter h = n / f and
    requires f | n; patterns that already declare h keep their own."""
    extra: list = []
    prechecks: list[str] = []
    declared = {prm.name for prm in p.params}
    from .patterns import KernelParam
    for spec in transforms:
        kind, payload = parse_transform_spec(spec)
        if kind != "interleave":
            continue
        f = payload
        if "h" in declared or any(prm.name == "h" for prm in extra):
            continue
        extra.append(KernelParam("h", "long", f"n / {f}"))
        prechecks.append(
            f'if (n % {f} != 0) {{ fprintf(stderr, "error: n must be '
            f'divisible by {f} for interleave\\n"); return 2; }}')
    return tuple(extra), prechecks


def generate_pattern_header(p: PatternSpec, kind: TemplateKind,
                            clause_override: str | None = None,
                            extra_params: tuple = (),
                            prechecks: list[str] | None = None) -> str:
    clause = p.clause if clause_override is None else clause_override
    alloc, frees = zip(*(_alloc_line(s) for s in p.spaces))
    lines = [
        f"/* generated declarations for pattern '{p.name}' */",
        "#ifndef MB_PATTERN_H",
        "#define MB_PATTERN_H",
        "",
        f'#define MB_PATTERN_NAME "{p.name}"',
        f"#define CLAUSE {clause}".rstrip(),
    ]
    if "nowait" in clause.split():
        lines.append("#define MB_SPLIT_PARALLEL 1")
    if kind.counters:
        lines.append("#define MB_ENABLE_COUNTERS 1")
    lines += [
        "",
        "/* data spaces */",
        "#define MB_ALLOC_DATA \\",
    ]
    lines += [f"  {line} \\" for line in alloc[:-1]]
    lines.append(f"  {alloc[-1]}")
    lines.append("#define MB_FREE_DATA " + " ".join(frees))
    lines.append("")
    all_params = tuple(p.params) + tuple(extra_params)
    if all_params:
        decls = " ".join(f"const {prm.ctype} {prm.name} = {prm.value};"
                         for prm in all_params)
        lines.append(f"#define MB_PARAM_DECLS {decls}")
    else:
        lines.append("#define MB_PARAM_DECLS")
    if prechecks:
        lines.append("#define MB_PRECHECK do { " + " ".join(prechecks) +
                     " } while (0)")
    else:
        lines.append("#define MB_PRECHECK do { } while (0)")
    lines += ["", "/* memory mappings */"]
    for m in p.mappings:
        lines.append(f"#define {m.name}({', '.join(m.iterators)}) {m.body}")
    lines += ["", "/* statements */"]
    for s in p.statements:
        name = f"{s.name}_body" if s.role == "run" else s.name
        lines.append(f"#define {name}({', '.join(s.iterators)}) {s.body}")
    lines += [
        "",
        f"#define MB_VAL_EXTRA {_val_extra(p)}",
        "",
        "#endif /* MB_PATTERN_H */",
        "",
    ]
    return "\n".join(lines)


def _bind_files(run: StatementMacro) -> dict[str, str]:
    args = ", ".join(run.iterators)
    return {
        "bind_run_real.c":
            f"#define {run.name}({args}) {run.name}_body({args})\n",
        "bind_run_count.c":
            f"#define {run.name}({args}) mb_instance_count += 1;\n",
        "unbind_run.c": f"#undef {run.name}\n",
    }


# ---------------------------------------------------------------------------
# Instantiation and build
# ---------------------------------------------------------------------------

def instantiate(p: PatternSpec, kind: TemplateKind,
                transforms: tuple[str, ...] = (),
                clause_override: str | None = None,
                templates_dir: str | Path | None = None,
                toolchain: ToolchainConfig | None = None) -> DriverBundle:
    """Assemble a complete driver bundle for a pattern and template kind.

    Per-thread data spaces require the independent template and vice versa
    (unified kernels have no thread id for per-thread addressing, and the
    independent template without private spaces would race on shared data).
    """
    diags = [d for d in validate_pattern(p) if d.severity == "error"]
    if diags:
        raise DriverError("; ".join(str(d) for d in diags))
    if p.has_perthread and kind.base != "independent":
        raise TemplateLayoutMismatch(
            f"pattern {p.name!r} has per-thread data spaces; use the "
            f"independent template")
    if kind.base == "independent" and not p.has_perthread:
        raise TemplateLayoutMismatch(
            f"pattern {p.name!r} has only unified data spaces; the "
            f"independent template needs per-thread spaces")

    tdir = find_templates_dir(templates_dir)
    toolchain = toolchain or ToolchainConfig()
    extra_params, prechecks = _transform_runtime_support(p, transforms)
    files: dict[str, str] = {}
    files["driver.c"] = (tdir / f"{kind.base}.c").read_text()
    files["driver_common.h"] = (tdir / "driver_common.h").read_text()
    files["pattern.h"] = generate_pattern_header(p, kind, clause_override,
                                                 extra_params, prechecks)
    for role in ("init", "run", "val"):
        files[f"body_{role}.c"] = generate_fragment(
            p, role, transforms if role == "run" else ())
    files.update(_bind_files(p.statement("run")))
    sources = ["driver.c"]
    if kind.counters:
        for name in SHIM_FILES:
            files[name] = (tdir / name).read_text()
        sources.append("perf_counters.c")
    return DriverBundle(p.name, kind, files, tuple(sources), toolchain)


def write_bundle(bundle: DriverBundle, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in bundle.files.items():
        (out / name).write_text(text)
    return out


def build(bundle: DriverBundle, out_dir: str | Path,
          exe_name: str = "driver") -> tuple[Path, str]:
    """Write and compile a bundle; returns (exe path, exact command line)."""
    out = write_bundle(bundle, out_dir)
    cc = bundle.toolchain.cc
    if shutil.which(cc) is None:
        raise CompilerNotFound(f"C compiler {cc!r} not found on PATH")
    exe = out / exe_name
    cmd = bundle.toolchain.command(list(bundle.sources), exe_name)
    proc = subprocess.run(cmd, cwd=out, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileFailed(
            f"{' '.join(cmd)} failed with exit {proc.returncode}:\n{proc.stderr}")
    return exe, " ".join(cmd)
