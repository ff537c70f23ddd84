#!/usr/bin/env python3
"""Walkthrough: planning a working-set sweep across the cache hierarchy.

The planner places a geometric ladder of problem sizes so that every
cache level's capacity band gets sampled strictly inside its boundaries,
from half of L1 up to four times the last-level cache.  No hardware is
touched here: planning is pure arithmetic over a machine description.
"""

from pathlib import Path

from membench.harness import (
    SweepOptions, band_of, linear_footprint, pattern_footprint, plan_sweep,
)
from membench.machine import detect_machine, parse_machine_text
from membench.patterns import load_pattern

# the dual-socket node from the bandwidth study: 32K L1, 256K L2, 35M L3
R2 = parse_machine_text("""
L1.capacity = 32768
L1.scope = core
L2.capacity = 262144
L2.scope = core
L3.capacity = 36700160
L3.scope = domain
cores_per_domain = 14
domains = 2
""")

# triad moves 24 bytes per instance and allocates 24n bytes total
footprint = linear_footprint(24)
configs = plan_sweep(R2, footprint, SweepOptions(points_per_level=4), "triad")
print(f"{len(configs)} planned sizes:")
for cfg in configs:
    band = band_of(R2, footprint, cfg.n, cfg.threads)
    print(f"  n={cfg.n:>9}  footprint={24 * cfg.n:>12} B  band={band}")

# a pattern's declared data spaces produce the footprint automatically
triad = load_pattern(Path(__file__).resolve().parents[1] / "patterns/triad")
model = pattern_footprint(triad, threads=4)
print("\ntriad at n=100000, 4 threads:")
print("  total bytes    :", model.total_bytes(100000))
print("  per-core bytes :", model.per_core_bytes(100000))

print("\nthis machine (detected):")
m = detect_machine()
for level in m.levels:
    print(f"  {level.name}: {level.capacity} B, {level.line_size} B lines, "
          f"{level.scope}-scoped")
print("  detected:", m.detected)
