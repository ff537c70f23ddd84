"""Experiment orchestration: sweep planning, driver execution, records.

Runs execute sequentially by contract (one measurement at a time); the
records produced are immutable value objects whose bandwidth figures are
always recomputable from the stored raw fields.
"""

from __future__ import annotations

import ast
import datetime
import os
import platform
import subprocess
from dataclasses import dataclass, field

from .machine import CORE_SCOPE, MachineDesc
from .patterns import PatternSpec, derive_bytes_per_instance

GIGA = 1_000_000_000  # decimal GB/s; raw bytes and seconds are always stored

SCHEMA_VERSION = 1


class HarnessError(Exception):
    pass


class FootprintTooSmall(HarnessError):
    pass


class DriverCrashed(HarnessError):
    pass


class ProtocolParseError(HarnessError):
    pass


# ---------------------------------------------------------------------------
# Footprint models
# ---------------------------------------------------------------------------

_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant,
                  ast.Name, ast.Load, ast.Add, ast.Sub, ast.Mult, ast.Div,
                  ast.FloorDiv, ast.USub, ast.UAdd)


def eval_extent(expr: str, n: int, t: int) -> int:
    """Evaluate a C-style extent expression over n and t.

    Supports + - * / and parentheses; / is integer division, as it would be
    on C integer operands.
    """
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise HarnessError(f"unsupported extent expression {expr!r}")
        if isinstance(node, ast.Name) and node.id not in ("n", "t"):
            raise HarnessError(f"unknown name {node.id!r} in extent {expr!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            return int(node.value)
        if isinstance(node, ast.Name):
            return n if node.id == "n" else t
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        left, right = ev(node.left), ev(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        return left // right

    return ev(tree)


@dataclass(frozen=True)
class FootprintModel:
    """Maps a problem size n to allocated bytes.

    `total` is the whole allocation; `per_core` is the slice one core works
    on, used when comparing against core-private cache levels.
    """

    description: str
    _total: object
    _per_core: object = None
    min_n: int = 1

    def total_bytes(self, n: int) -> int:
        return int(self._total(n))

    def per_core_bytes(self, n: int) -> int:
        if self._per_core is None:
            return self.total_bytes(n)
        return int(self._per_core(n))

    def banding_bytes(self, n: int, scope: str) -> int:
        return self.per_core_bytes(n) if scope == CORE_SCOPE else self.total_bytes(n)


def linear_footprint(bytes_per_n: int, min_n: int = 1) -> FootprintModel:
    return FootprintModel(f"{bytes_per_n}*n", lambda n: bytes_per_n * n,
                          min_n=min_n)


def pattern_footprint(p: PatternSpec, threads: int) -> FootprintModel:
    """Derive the footprint from the pattern's data-space declarations.

    Per-thread spaces allocate their extent once per thread (padding
    included); unified spaces are shared, and a core's slice of them is the
    work-sharing split 1/threads.
    """
    def one_thread(n: int) -> int:
        total = 0
        for s in p.spaces:
            cells = 1
            for e in s.extents:
                cells *= max(0, eval_extent(e, n, threads))
            total += cells * s.element_size * s.padding
        return total

    def total(n: int) -> int:
        per = one_thread(n)
        mult = threads if p.has_perthread else 1
        return per * mult

    def per_core(n: int) -> int:
        per = one_thread(n)
        if p.has_perthread:
            return per
        return max(1, per // max(1, threads))

    return FootprintModel(f"pattern:{p.name}", total, per_core)


# ---------------------------------------------------------------------------
# Run configuration and records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    pattern: str
    template: str                      # unified | independent (+ "+counters")
    transforms: tuple[str, ...]
    n: int
    threads: int
    ntimes: int
    counters: tuple[str, ...] = ()
    warmup: int = 1

    def __post_init__(self):
        if self.n < 1 or self.threads < 1 or self.ntimes < 1:
            raise HarnessError("n, threads and ntimes must all be >= 1")

    def argv(self) -> list[str]:
        args = [str(self.n), str(self.threads), str(self.ntimes)]
        if self.counters:
            args += ["--counters", ",".join(self.counters)]
        if self.warmup != 1:
            args += ["--warmup", str(self.warmup)]
        return args


@dataclass(frozen=True)
class RunRecord:
    config: RunConfig
    elapsed_seconds: float
    instances_executed: int
    bytes_per_instance: int
    counters: dict[str, object]        # int or the literal "unsupported"
    validation: str                    # pass | fail
    metadata: dict[str, object] = field(default_factory=dict)

    @property
    def bytes_counted(self) -> int:
        return self.bytes_per_instance * self.instances_executed

    @property
    def bandwidth_bytes_per_second(self) -> float:
        return self.bytes_counted / self.elapsed_seconds

    @property
    def bandwidth_gbps(self) -> float:
        return self.bandwidth_bytes_per_second / GIGA

    @property
    def valid(self) -> bool:
        return self.validation == "pass"


def make_metadata(toolchain: str = "", template_hash: str = "",
                  pattern_hash: str = "", extra: dict | None = None) -> dict:
    from . import __version__
    env = {name: os.environ.get(name, "") for name in
           ("OMP_NUM_THREADS", "OMP_PROC_BIND", "OMP_PLACES")}
    meta = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc)
                     .strftime("%Y-%m-%dT%H:%M:%SZ"),
        "host": platform.node(),
        "toolchain": toolchain,
        "template_hash": template_hash,
        "pattern_hash": pattern_hash,
        "tool_version": __version__,
        "omp_env": env,
    }
    if extra:
        meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# Sweep planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepOptions:
    points_per_level: int = 4
    l1_start_fraction: float = 0.5     # ladder starts at this fraction of L1
    llc_end_multiple: float = 4.0      # ladder ends at this multiple of LLC
    explicit_sizes: tuple[int, ...] = ()
    threads: int = 1
    ntimes: int = 1000
    template: str = "unified"
    transforms: tuple[str, ...] = ()
    counters: tuple[str, ...] = ()
    warmup: int = 1


def sweep_bands(machine: MachineDesc, opts: SweepOptions) -> list[tuple[str, int, int]]:
    """(name, lo, hi) byte bands; samples land strictly inside each."""
    bands = []
    lo = int(machine.levels[0].capacity * opts.l1_start_fraction)
    for level in machine.levels:
        bands.append((level.name, lo, level.capacity))
        lo = level.capacity
    bands.append(("DRAM", machine.llc.capacity,
                  int(machine.llc.capacity * opts.llc_end_multiple)))
    return bands


def band_of(machine: MachineDesc, footprint: FootprintModel, n: int,
            threads: int, opts: SweepOptions | None = None) -> str:
    """Name of the cache band a configuration's working set falls in."""
    opts = opts or SweepOptions()
    for name, lo, hi in sweep_bands(machine, opts):
        scope = _band_scope(machine, name)
        b = footprint.banding_bytes(n, scope)
        if b <= hi:
            return name
    return "DRAM+"


def _band_scope(machine: MachineDesc, band_name: str) -> str:
    for level in machine.levels:
        if level.name == band_name:
            return level.scope
    return machine.llc.scope


_N_CAP = 1 << 50    # no realistic working set needs a larger problem size


def _max_n_with(footprint: FootprintModel, scope: str, target: int,
                lo_n: int) -> int | None:
    """Largest n with banding bytes <= target, or None if already above."""
    if footprint.banding_bytes(lo_n, scope) > target:
        return None
    hi = lo_n
    while footprint.banding_bytes(hi, scope) <= target:
        hi *= 2
        if hi > _N_CAP:
            raise HarnessError(
                f"footprint {footprint.description} never exceeds {target} "
                f"bytes; does it grow with n?")
    lo = hi // 2
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if footprint.banding_bytes(mid, scope) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def plan_sweep(machine: MachineDesc, footprint: FootprintModel,
               opts: SweepOptions, pattern_name: str = "") -> list[RunConfig]:
    """Geometric working-set ladder across every cache band.

    Raises FootprintTooSmall when the pattern cannot produce a working set
    below the first level's capacity at its minimum size.
    """
    def cfg(n: int) -> RunConfig:
        return RunConfig(pattern_name, opts.template, tuple(opts.transforms),
                         n, opts.threads, opts.ntimes,
                         tuple(opts.counters), opts.warmup)

    if opts.explicit_sizes:
        return [cfg(n) for n in opts.explicit_sizes]

    l1 = machine.levels[0]
    if footprint.banding_bytes(footprint.min_n, l1.scope) >= l1.capacity:
        raise FootprintTooSmall(
            f"footprint {footprint.description} is "
            f"{footprint.banding_bytes(footprint.min_n, l1.scope)} bytes at "
            f"n={footprint.min_n}, not below L1 ({l1.capacity} bytes)")

    sizes: list[int] = []
    for name, lo, hi in sweep_bands(machine, opts):
        scope = _band_scope(machine, name)
        pp = opts.points_per_level
        for i in range(1, pp + 1):
            target = int(lo * (hi / lo) ** (i / (pp + 1)))
            n = _max_n_with(footprint, scope, target, footprint.min_n)
            if n is None:
                continue
            # nudge into the open interval (lo, hi)
            while footprint.banding_bytes(n, scope) <= lo and n < _N_CAP:
                n += 1
            if footprint.banding_bytes(n, scope) >= hi or n >= _N_CAP:
                continue
            if n not in sizes:
                sizes.append(n)
    sizes.sort()
    return [cfg(n) for n in sizes]


# ---------------------------------------------------------------------------
# Driver execution
# ---------------------------------------------------------------------------

REQUIRED_KEYS = ("elapsed_seconds", "instances_executed", "validation", "threads")


def parse_driver_output(text: str) -> dict[str, str]:
    """Parse the driver stdout protocol (key=value lines)."""
    values: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ProtocolParseError(f"not a key=value line: {line!r}\n--- raw ---\n{text}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ProtocolParseError(
            f"driver output missing {missing}\n--- raw ---\n{text}")
    return values


def execute(exe_path: str, cfg: RunConfig, bytes_per_instance: int,
            metadata: dict | None = None, timeout: float = 600.0) -> RunRecord:
    """Run a driver executable under the argv/stdout protocol.

    A failed validation yields a RunRecord flagged invalid; it is kept, not
    dropped.  DriverCrashed means the process died without speaking the
    protocol at all.
    """
    env = dict(os.environ)
    env["OMP_NUM_THREADS"] = str(cfg.threads)
    try:
        proc = subprocess.run([exe_path] + cfg.argv(), capture_output=True,
                              text=True, env=env, timeout=timeout)
    except FileNotFoundError as exc:
        raise DriverCrashed(f"driver not found: {exe_path}") from exc
    except subprocess.TimeoutExpired as exc:
        raise DriverCrashed(f"driver timed out after {timeout}s") from exc
    try:
        values = parse_driver_output(proc.stdout)
    except ProtocolParseError:
        if proc.returncode != 0:
            raise DriverCrashed(
                f"driver exited {proc.returncode} without protocol output; "
                f"stderr:\n{proc.stderr}") from None
        raise
    try:
        elapsed = float(values["elapsed_seconds"])
        instances = int(values["instances_executed"])
    except ValueError as exc:
        raise ProtocolParseError(f"malformed numeric field: {exc}\n{proc.stdout}") from exc
    if elapsed <= 0:
        raise ProtocolParseError(f"non-positive elapsed_seconds: {elapsed}")
    counters: dict[str, object] = {}
    for key, value in values.items():
        if key.startswith("counter."):
            name = key[len("counter."):]
            counters[name] = value if value == "unsupported" else int(value)
    meta = dict(metadata or {})
    meta.setdefault("driver_threads_reported", int(values["threads"]))
    return RunRecord(cfg, elapsed, instances, bytes_per_instance, counters,
                     values["validation"], meta)


def execute_repeated(exe_path: str, cfg: RunConfig, bytes_per_instance: int,
                     repeats: int = 1, metadata: dict | None = None,
                     timeout: float = 600.0) -> RunRecord:
    """Run a configuration `repeats` times and keep the median-time run.

    The default of 1 reports a single measurement; with more repeats the
    record's metadata carries the min/median/max bandwidth spread and every
    raw elapsed time, while the headline fields come from the median run
    (so the bandwidth invariant still holds on stored fields).
    """
    if repeats < 1:
        raise HarnessError("repeats must be >= 1")
    records = [execute(exe_path, cfg, bytes_per_instance, metadata, timeout)
               for _ in range(repeats)]
    if repeats == 1:
        return records[0]
    records.sort(key=lambda r: r.elapsed_seconds)
    median = records[len(records) // 2]
    gbps = sorted(r.bandwidth_gbps for r in records)
    meta = dict(median.metadata)
    meta["repeats"] = {
        "count": repeats,
        "elapsed_all": [r.elapsed_seconds for r in records],
        "gbps_min": gbps[0],
        "gbps_median": median.bandwidth_gbps,
        "gbps_max": gbps[-1],
    }
    if any(not r.valid for r in records):
        # one bad repetition taints the configuration
        return RunRecord(median.config, median.elapsed_seconds,
                         median.instances_executed, median.bytes_per_instance,
                         median.counters, "fail", meta)
    return RunRecord(median.config, median.elapsed_seconds,
                     median.instances_executed, median.bytes_per_instance,
                     median.counters, median.validation, meta)


def bytes_per_instance_for(p: PatternSpec) -> int:
    return derive_bytes_per_instance(p.statement("run"), p)
