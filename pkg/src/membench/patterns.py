"""Pattern directories: kernel declarations plus init/run/val schedules.

A pattern directory contains:

    kernel.spec   sectioned key = value text (format below)
    init.pset     schedule scripts (set/relation language), or
    init.c        raw passthrough kernel C (the script wins if both exist)
    run.pset / run.c
    val.pset / val.c

kernel.spec sections:

    [spaces]      Name = rank:1 extent:n [elem:double] [pad:1]
                  [layout:unified|perthread]
    [mappings]    A_map(i) = A[i]
    [statements]  Triad_run(i) = A_map(i) = B_map(i) + scalar * C_map(i);
                  (role from the name suffix: _init, _run, _val)
    [clause]      clause = schedule(static)
    [params]      scalar = 3.0          (optionally `name = type: expr`)
    [measure]     bytes_per_instance = 24   (optional override)

Statement bodies stay opaque C text; the loader only lexes them far enough
to check that data is touched through declared mappings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .script import Script, ScriptError, parse_script

ELEMENT_SIZES = {"double": 8, "float": 4, "int64": 8}

UNIFIED = "unified"
PERTHREAD = "perthread"

ROLE_INIT = "init"
ROLE_RUN = "run"
ROLE_VAL = "val"


class PatternError(Exception):
    """Problem loading or validating a pattern directory."""


@dataclass(frozen=True)
class DataSpace:
    name: str
    rank: int
    extents: tuple[str, ...]      # C expressions over n and t, one per rank
    element: str = "double"
    padding: int = 1              # row padding factor, in elements
    layout: str = UNIFIED

    @property
    def element_size(self) -> int:
        return ELEMENT_SIZES[self.element]


@dataclass(frozen=True)
class MemoryMapping:
    name: str
    iterators: tuple[str, ...]
    body: str                     # C index expression template


@dataclass(frozen=True)
class StatementMacro:
    name: str
    role: str                     # init | run | val
    iterators: tuple[str, ...]
    body: str


@dataclass(frozen=True)
class KernelParam:
    name: str
    ctype: str
    value: str                    # C initializer expression


@dataclass(frozen=True)
class RawKernelC:
    """Raw passthrough kernel code, used instead of a schedule script."""
    text: str


@dataclass(frozen=True)
class PatternSpec:
    name: str
    spaces: tuple[DataSpace, ...]
    mappings: tuple[MemoryMapping, ...]
    statements: tuple[StatementMacro, ...]
    clause: str
    params: tuple[KernelParam, ...]
    schedules: dict[str, Script | RawKernelC]
    bytes_override: int | None = None

    def space(self, name: str) -> DataSpace:
        for s in self.spaces:
            if s.name == name:
                return s
        raise KeyError(name)

    def statement(self, role: str) -> StatementMacro:
        for s in self.statements:
            if s.role == role:
                return s
        raise KeyError(role)

    @property
    def has_perthread(self) -> bool:
        return any(s.layout == PERTHREAD for s in self.spaces)


@dataclass(frozen=True)
class Diagnostic:
    severity: str                 # error | warning
    code: str
    message: str
    location: str = ""

    def __str__(self) -> str:
        where = f" [{self.location}]" if self.location else ""
        return f"{self.severity}: {self.code}: {self.message}{where}"


# ---------------------------------------------------------------------------
# kernel.spec parsing
# ---------------------------------------------------------------------------

_SECTIONS = ("spaces", "mappings", "statements", "clause", "params", "measure")
_NAME_ARGS = re.compile(r"^([A-Za-z_]\w*)\s*\(([^)]*)\)$")


def _parse_sections(text: str, where: str) -> dict[str, list[tuple[str, str, int]]]:
    sections: dict[str, list[tuple[str, str, int]]] = {s: [] for s in _SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in sections:
                raise PatternError(f"{where}:{lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise PatternError(f"{where}:{lineno}: content before any section")
        if "=" not in line:
            raise PatternError(f"{where}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        sections[current].append((key.strip(), value.strip(), lineno))
    return sections


_SPACE_ATTR = re.compile(r"\b(rank|extent|elem|pad|layout)\s*:")


def _parse_space(key: str, value: str, where: str, lineno: int) -> DataSpace:
    fields = {"rank": None, "extent": None, "elem": "double", "pad": "1",
              "layout": UNIFIED}
    parts = _SPACE_ATTR.split(value)
    if parts[0].strip():
        raise PatternError(f"{where}:{lineno}: bad space attribute {parts[0].strip()!r}")
    for k, v in zip(parts[1::2], parts[2::2]):
        v = v.strip()
        if not v:
            raise PatternError(f"{where}:{lineno}: empty value for {k}:")
        fields[k] = v
    if fields["rank"] is None or fields["extent"] is None:
        raise PatternError(f"{where}:{lineno}: space {key!r} needs rank: and extent:")
    rank = int(fields["rank"])
    extents = tuple(e.strip() for e in fields["extent"].split(";"))
    if len(extents) == 1 and rank > 1:
        extents = extents * rank
    if len(extents) != rank:
        raise PatternError(
            f"{where}:{lineno}: space {key!r} has {len(extents)} extents for rank {rank}")
    if fields["elem"] not in ELEMENT_SIZES:
        raise PatternError(f"{where}:{lineno}: unknown element kind {fields['elem']!r}")
    if fields["layout"] not in (UNIFIED, PERTHREAD):
        raise PatternError(f"{where}:{lineno}: unknown layout {fields['layout']!r}")
    pad = int(fields["pad"])
    if rank < 1 or pad < 1:
        raise PatternError(f"{where}:{lineno}: rank and pad must be >= 1")
    return DataSpace(key, rank, extents, fields["elem"], pad, fields["layout"])


def _parse_callable(key: str, where: str, lineno: int) -> tuple[str, tuple[str, ...]]:
    m = _NAME_ARGS.match(key)
    if not m:
        raise PatternError(f"{where}:{lineno}: expected Name(iters), got {key!r}")
    name = m.group(1)
    args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
    return name, args


def _statement_role(name: str) -> str | None:
    for role in (ROLE_INIT, ROLE_RUN, ROLE_VAL):
        if name.endswith("_" + role):
            return role
    return None


def load_pattern(path: str | Path) -> PatternSpec:
    """Load and cross-reference a pattern directory."""
    root = Path(path)
    spec_file = root / "kernel.spec"
    if not spec_file.is_file():
        raise PatternError(f"missing {spec_file}")
    sections = _parse_sections(spec_file.read_text(), str(spec_file))

    spaces = tuple(_parse_space(k, v, str(spec_file), ln)
                   for k, v, ln in sections["spaces"])
    if not spaces:
        raise PatternError(f"{spec_file}: no data spaces declared")

    mappings = []
    for key, value, ln in sections["mappings"]:
        name, iters = _parse_callable(key, str(spec_file), ln)
        mappings.append(MemoryMapping(name, iters, value))

    statements = []
    for key, value, ln in sections["statements"]:
        name, iters = _parse_callable(key, str(spec_file), ln)
        role = _statement_role(name)
        if role is None:
            raise PatternError(
                f"{spec_file}:{ln}: statement {name!r} must end in _init, _run or _val")
        statements.append(StatementMacro(name, role, iters, value))

    clause = ""
    for key, value, ln in sections["clause"]:
        if key != "clause":
            raise PatternError(f"{spec_file}:{ln}: expected clause = ...")
        clause = value

    params = []
    for key, value, ln in sections["params"]:
        ctype = "double"
        if ":" in value and value.split(":", 1)[0].strip() in ("int", "long", "double"):
            ctype, _, value = value.partition(":")
            ctype = ctype.strip()
            value = value.strip()
        params.append(KernelParam(key, ctype, value))

    bytes_override = None
    for key, value, ln in sections["measure"]:
        if key == "bytes_per_instance":
            bytes_override = int(value)
        else:
            raise PatternError(f"{spec_file}:{ln}: unknown measure key {key!r}")

    schedules: dict[str, Script | RawKernelC] = {}
    for role in (ROLE_INIT, ROLE_RUN, ROLE_VAL):
        pset = root / f"{role}.pset"
        raw = root / f"{role}.c"
        if pset.is_file():
            try:
                schedules[role] = parse_script(pset.read_text())
            except ScriptError as exc:
                raise PatternError(f"{pset}: {exc}") from exc
        elif raw.is_file():
            schedules[role] = RawKernelC(raw.read_text())
        elif role == ROLE_VAL:
            raise PatternError(
                f"{root}: MissingValidation: no val.pset or val.c (validation "
                f"is mandatory)")
        else:
            raise PatternError(f"{root}: missing {role}.pset or {role}.c")

    p = PatternSpec(root.name, spaces, mappings=tuple(mappings),
                    statements=tuple(statements), clause=clause,
                    params=tuple(params), schedules=schedules,
                    bytes_override=bytes_override)
    errors = [d for d in validate_pattern(p) if d.severity == "error"]
    if errors:
        raise PatternError("; ".join(str(d) for d in errors))
    return p


_TOKEN = re.compile(r"[A-Za-z_]\w*")


def validate_pattern(p: PatternSpec) -> list[Diagnostic]:
    """Cross-reference checks; an empty list means the pattern is clean."""
    diags: list[Diagnostic] = []
    space_names = {s.name for s in p.spaces}
    mapping_names = {m.name for m in p.mappings}

    run_stmts = [s for s in p.statements if s.role == ROLE_RUN]
    if len(run_stmts) != 1:
        diags.append(Diagnostic("error", "RunStatementCount",
                                f"need exactly one run statement, found {len(run_stmts)}"))
    if ROLE_VAL not in p.schedules:
        diags.append(Diagnostic("error", "MissingValidation",
                                "validation schedule is mandatory"))
    if not any(s.role == ROLE_VAL for s in p.statements):
        diags.append(Diagnostic("error", "MissingValidation",
                                "no validation statement macro"))

    for m in p.mappings:
        used_spaces = set(_TOKEN.findall(m.body)) & space_names
        if not used_spaces:
            diags.append(Diagnostic("error", "DanglingMapping",
                                    f"mapping {m.name!r} references no declared data space",
                                    m.name))
        refs_tid = "t_id" in _TOKEN.findall(m.body)
        for sname in used_spaces:
            sp = p.space(sname)
            if sp.layout == PERTHREAD and not refs_tid:
                diags.append(Diagnostic("error", "MappingMissingThreadId",
                                        f"mapping {m.name!r} addresses per-thread "
                                        f"space {sname!r} without t_id", m.name))

    for s in p.statements:
        tokens = set(_TOKEN.findall(s.body))
        direct = tokens & space_names
        if direct:
            diags.append(Diagnostic("warning", "DirectArrayAccess",
                                    f"statement {s.name!r} touches {sorted(direct)} "
                                    f"directly instead of via a mapping", s.name))
        dangling = {t for t in tokens
                    if t.endswith("_map") and t not in mapping_names}
        for t in sorted(dangling):
            diags.append(Diagnostic("error", "DanglingMappingReference",
                                    f"statement {s.name!r} uses undeclared mapping {t!r}",
                                    s.name))

    if p.has_perthread and any(s.layout == UNIFIED for s in p.spaces):
        diags.append(Diagnostic("warning", "MixedLayouts",
                                "pattern mixes unified and per-thread spaces"))
    return diags


def derive_bytes_per_instance(stmt: StatementMacro, p: PatternSpec) -> int:
    """Bytes of memory traffic counted per executed run-statement instance.

    Default rule: one element transfer per distinct mapping referenced in
    the body (the STREAM-style accounting).  An explicit
    `bytes_per_instance` in kernel.spec wins; reports echo whichever value
    was used.
    """
    if p.bytes_override is not None:
        return p.bytes_override
    mapping_by_name = {m.name: m for m in p.mappings}
    tokens = _TOKEN.findall(stmt.body)
    distinct = []
    for t in tokens:
        if t in mapping_by_name and t not in distinct:
            distinct.append(t)
    total = 0
    space_names = {s.name for s in p.spaces}
    for name in distinct:
        used = set(_TOKEN.findall(mapping_by_name[name].body)) & space_names
        elem = max((p.space(s).element_size for s in used), default=8)
        total += elem
    return total


# ---------------------------------------------------------------------------
# Serialization (round-trip support)
# ---------------------------------------------------------------------------

def serialize_pattern(p: PatternSpec) -> dict[str, str]:
    """Render a pattern back to its on-disk file contents, keyed by
    filename.  load_pattern on a directory with these contents yields an
    equal PatternSpec."""
    lines = ["[spaces]"]
    for s in p.spaces:
        extent = ";".join(s.extents)
        attrs = f"rank:{s.rank} extent:{extent}"
        if s.element != "double":
            attrs += f" elem:{s.element}"
        if s.padding != 1:
            attrs += f" pad:{s.padding}"
        if s.layout != UNIFIED:
            attrs += f" layout:{s.layout}"
        lines.append(f"{s.name} = {attrs}")
    lines.append("")
    lines.append("[mappings]")
    for m in p.mappings:
        lines.append(f"{m.name}({', '.join(m.iterators)}) = {m.body}")
    lines.append("")
    lines.append("[statements]")
    for s in p.statements:
        lines.append(f"{s.name}({', '.join(s.iterators)}) = {s.body}")
    lines.append("")
    if p.clause:
        lines.append("[clause]")
        lines.append(f"clause = {p.clause}")
        lines.append("")
    if p.params:
        lines.append("[params]")
        for prm in p.params:
            if prm.ctype == "double":
                lines.append(f"{prm.name} = {prm.value}")
            else:
                lines.append(f"{prm.name} = {prm.ctype}: {prm.value}")
        lines.append("")
    if p.bytes_override is not None:
        lines.append("[measure]")
        lines.append(f"bytes_per_instance = {p.bytes_override}")
        lines.append("")
    files = {"kernel.spec": "\n".join(lines)}
    for role, sched in p.schedules.items():
        if isinstance(sched, RawKernelC):
            files[f"{role}.c"] = sched.text
        else:
            files[f"{role}.pset"] = _render_script(sched)
    return files


def _render_script(script: Script) -> str:
    from .script import Literal, NameRef, StarOp

    def render(expr) -> str:
        if isinstance(expr, Literal):
            return str(expr.value)
        if isinstance(expr, NameRef):
            return expr.name
        if isinstance(expr, StarOp):
            return f"({render(expr.left)} * {render(expr.right)})"
        raise TypeError(expr)

    out = [f"{name} := {render(e)};" for name, e in script.definitions]
    out.append(f"codegen({render(script.codegen_expr)});")
    return "\n".join(out) + "\n"


def write_pattern(p: PatternSpec, path: str | Path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for fname, text in serialize_pattern(p).items():
        (root / fname).write_text(text)
