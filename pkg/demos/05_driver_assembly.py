#!/usr/bin/env python3
"""Walkthrough: how a benchmark driver is assembled from a pattern.

A driver bundle is plain text: the template skeleton, a generated header
with allocation/mapping/statement macros, and the generated kernel
fragments.  Nothing here invokes a compiler, so this runs anywhere; the
`build` and `bench` commands compile the same bundle with -O3 -fopenmp.
"""

from pathlib import Path

from membench.driverkit import TemplateKind, generate_fragment, instantiate
from membench.patterns import load_pattern

repo = Path(__file__).resolve().parents[1]
triad = load_pattern(repo / "patterns" / "triad")

print("# the timed kernel fragment (body_run.c)")
print(generate_fragment(triad, "run"))

print("# the same schedule, interleaved by 2 via a relation")
print(generate_fragment(triad, "run", ("interleave=2",)))

bundle = instantiate(triad, TemplateKind("unified"),
                     templates_dir=repo / "drivers" / "templates")
print("# bundle files")
for name in sorted(bundle.files):
    print(f"  {name} ({len(bundle.files[name])} bytes)")

print("\n# generated pattern header (excerpt)")
for line in bundle.files["pattern.h"].splitlines():
    if line.startswith("#define") and "MB_ALLOC" not in line:
        print(" ", line)

print("\n# per-thread padded layout allocates line-aligned thread rows")
padded = load_pattern(repo / "patterns" / "jacobi1d-padded")
b2 = instantiate(padded, TemplateKind("independent"),
                 templates_dir=repo / "drivers" / "templates")
for line in b2.files["pattern.h"].splitlines():
    if "mb_alloc" in line or "MB_VAL_EXTRA" in line:
        print(" ", line.strip(" \\"))
