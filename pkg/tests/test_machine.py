"""Machine description: file format, detection, defaults."""

import pytest

from membench.machine import (
    CacheLevel, MachineDesc, MachineError, default_machine, detect_machine,
    load_machine, parse_machine_text, render_machine_text,
)

R2_TEXT = """\
# dual-socket node used in the bandwidth study
L1.capacity = 32768
L1.line_size = 64
L1.scope = core
L2.capacity = 262144
L2.line_size = 64
L2.scope = core
L3.capacity = 36700160
L3.line_size = 64
L3.scope = domain
cores_per_domain = 14
domains = 2
"""


def r2_machine() -> MachineDesc:
    return parse_machine_text(R2_TEXT)


def test_parse_r2():
    m = r2_machine()
    assert [lv.name for lv in m.levels] == ["L1", "L2", "L3"]
    assert m.levels[0].capacity == 32 * 1024
    assert m.levels[1].capacity == 256 * 1024
    assert m.levels[2].capacity == 35 * 1024 * 1024
    assert all(lv.line_size == 64 for lv in m.levels)
    assert m.cores_per_domain == 14
    assert m.domains == 2


def test_round_trip(tmp_path):
    m = r2_machine()
    path = tmp_path / "machine.txt"
    path.write_text(render_machine_text(m))
    assert load_machine(path) == m


def test_capacities_must_increase():
    with pytest.raises(MachineError):
        MachineDesc((CacheLevel("L1", 4096, 64, "core"),
                     CacheLevel("L2", 4096, 64, "core")))


def test_default_machine_flags_not_detected():
    m = default_machine()
    assert not m.detected
    assert m.levels[0].capacity == 32 * 1024
    assert m.levels[-1].capacity == 32 * 1024 * 1024
    assert m.levels[0].line_size == 64


def test_size_suffixes():
    m = parse_machine_text("L1.capacity = 32K\nL2.capacity = 1M\n")
    assert m.levels[0].capacity == 32768
    assert m.levels[1].capacity == 1048576


def test_detect_from_synthetic_sysfs(tmp_path):
    cache = tmp_path / "devices/system/cpu/cpu0/cache"
    for i, (level, ctype, size, shared) in enumerate([
            ("1", "Data", "32K", "0,28"),
            ("1", "Instruction", "32K", "0,28"),
            ("2", "Unified", "256K", "0,28"),
            ("3", "Unified", "35840K", "0-13,28-41")]):
        d = cache / f"index{i}"
        d.mkdir(parents=True)
        (d / "level").write_text(level + "\n")
        (d / "type").write_text(ctype + "\n")
        (d / "size").write_text(size + "\n")
        (d / "coherency_line_size").write_text("64\n")
        (d / "shared_cpu_list").write_text(shared + "\n")
    for c in range(56):
        (tmp_path / f"devices/system/cpu/cpu{c}").mkdir(parents=True, exist_ok=True)
    m = detect_machine(tmp_path)
    assert m.detected
    assert [lv.name for lv in m.levels] == ["L1", "L2", "L3"]
    assert m.levels[2].capacity == 35840 * 1024
    assert m.levels[0].scope == "core"
    assert m.levels[2].scope == "domain"
    assert m.cores_per_domain == 28
    assert m.domains == 2


def test_detect_fallback_when_no_topology(tmp_path):
    m = detect_machine(tmp_path)
    assert m == default_machine()
    assert not m.detected
