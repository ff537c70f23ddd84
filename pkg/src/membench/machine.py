"""Cache-hierarchy description: detection, file format, defaults.

The description drives working-set sweep planning: each cache level's
capacity bounds one band of the ladder.  Detection reads the sysfs cpu
cache topology when available and otherwise falls back to a documented
default, flagged `detected=False` so reports stay honest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

CORE_SCOPE = "core"
DOMAIN_SCOPE = "domain"

DEFAULT_LEVELS = (
    ("L1", 32 * 1024, 64, CORE_SCOPE),
    ("L2", 256 * 1024, 64, CORE_SCOPE),
    ("L3", 32 * 1024 * 1024, 64, DOMAIN_SCOPE),
)


class MachineError(Exception):
    pass


@dataclass(frozen=True)
class CacheLevel:
    name: str
    capacity: int          # bytes
    line_size: int         # bytes
    scope: str             # core | domain

    def __post_init__(self):
        if self.capacity <= 0 or self.line_size <= 0:
            raise MachineError(f"{self.name}: capacity and line size must be positive")
        if self.scope not in (CORE_SCOPE, DOMAIN_SCOPE):
            raise MachineError(f"{self.name}: unknown scope {self.scope!r}")


@dataclass(frozen=True)
class MachineDesc:
    levels: tuple[CacheLevel, ...]
    cores_per_domain: int = 1
    domains: int = 1
    detected: bool = False

    def __post_init__(self):
        caps = [lv.capacity for lv in self.levels]
        if not caps:
            raise MachineError("at least one cache level required")
        if any(a >= b for a, b in zip(caps, caps[1:])):
            raise MachineError("cache capacities must strictly increase by level")

    @property
    def llc(self) -> CacheLevel:
        return self.levels[-1]


def default_machine() -> MachineDesc:
    levels = tuple(CacheLevel(*args) for args in DEFAULT_LEVELS)
    return MachineDesc(levels, cores_per_domain=1, domains=1, detected=False)


# ---------------------------------------------------------------------------
# Plain-text machine files: one `key = value` per line, dotted level keys
# ---------------------------------------------------------------------------

def parse_machine_text(text: str, where: str = "<machine>") -> MachineDesc:
    """Format:

        L1.capacity = 32768
        L1.line_size = 64
        L1.scope = core
        ...
        cores_per_domain = 14
        domains = 2
    """
    levels: dict[str, dict[str, str]] = {}
    order: list[str] = []
    scalars = {"cores_per_domain": "1", "domains": "1", "detected": "true"}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MachineError(f"{where}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if "." in key:
            lvl, _, attr = key.partition(".")
            if lvl not in levels:
                levels[lvl] = {}
                order.append(lvl)
            levels[lvl][attr] = value
        elif key in scalars:
            scalars[key] = value
        else:
            raise MachineError(f"{where}:{lineno}: unknown key {key!r}")
    built = []
    for name in order:
        attrs = levels[name]
        try:
            built.append(CacheLevel(
                name,
                _parse_size(attrs["capacity"]),
                int(attrs.get("line_size", "64")),
                attrs.get("scope", CORE_SCOPE)))
        except KeyError as exc:
            raise MachineError(f"{where}: level {name} missing {exc}") from exc
    return MachineDesc(tuple(built),
                       cores_per_domain=int(scalars["cores_per_domain"]),
                       domains=int(scalars["domains"]),
                       detected=scalars["detected"].lower() in ("1", "true", "yes"))


def render_machine_text(m: MachineDesc) -> str:
    lines = []
    for lv in m.levels:
        lines.append(f"{lv.name}.capacity = {lv.capacity}")
        lines.append(f"{lv.name}.line_size = {lv.line_size}")
        lines.append(f"{lv.name}.scope = {lv.scope}")
    lines.append(f"cores_per_domain = {m.cores_per_domain}")
    lines.append(f"domains = {m.domains}")
    lines.append(f"detected = {'true' if m.detected else 'false'}")
    return "\n".join(lines) + "\n"


def load_machine(path: str | Path) -> MachineDesc:
    p = Path(path)
    return parse_machine_text(p.read_text(), str(p))


def _parse_size(text: str) -> int:
    m = re.fullmatch(r"(\d+)\s*([KMG]i?B?)?", text.strip(), re.IGNORECASE)
    if not m:
        raise MachineError(f"bad size {text!r}")
    value = int(m.group(1))
    suffix = (m.group(2) or "").upper()
    if suffix.startswith("K"):
        value *= 1024
    elif suffix.startswith("M"):
        value *= 1024 * 1024
    elif suffix.startswith("G"):
        value *= 1024 * 1024 * 1024
    return value


# ---------------------------------------------------------------------------
# Detection from the OS cache topology
# ---------------------------------------------------------------------------

def detect_machine(sysfs_root: str | Path = "/sys") -> MachineDesc:
    """Best-effort read of the cpu0 cache topology.

    Never raises: on any failure the documented default machine is returned
    with detected=False.
    """
    try:
        return _detect(Path(sysfs_root))
    except Exception:
        return default_machine()


def _detect(root: Path) -> MachineDesc:
    cache_dir = root / "devices/system/cpu/cpu0/cache"
    indices = sorted(cache_dir.glob("index*"),
                     key=lambda p: int(p.name.removeprefix("index")))
    if not indices:
        return default_machine()
    levels = []
    ncpus = len(list((root / "devices/system/cpu").glob("cpu[0-9]*"))) or 1
    for idx in indices:
        ctype = (idx / "type").read_text().strip()
        if ctype not in ("Data", "Unified"):
            continue
        level = (idx / "level").read_text().strip()
        size = _parse_size((idx / "size").read_text().strip())
        line = int((idx / "coherency_line_size").read_text().strip())
        shared = (idx / "shared_cpu_list").read_text().strip()
        nshared = _count_cpu_list(shared)
        scope = CORE_SCOPE if nshared <= 2 else DOMAIN_SCOPE
        levels.append(CacheLevel(f"L{level}", size, line, scope))
    if not levels:
        return default_machine()
    levels.sort(key=lambda lv: lv.capacity)
    # a level shared by k cores defines the domain size for planning
    widest = max(_count_cpu_list((idx / "shared_cpu_list").read_text().strip())
                 for idx in indices if (idx / "shared_cpu_list").is_file())
    cores_per_domain = max(1, widest)
    domains = max(1, ncpus // cores_per_domain)
    return MachineDesc(tuple(levels), cores_per_domain=cores_per_domain,
                       domains=domains, detected=True)


def _count_cpu_list(text: str) -> int:
    total = 0
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            total += int(b) - int(a) + 1
        else:
            total += 1
    return total
