#!/usr/bin/env python3
"""Walkthrough: rewriting execution order with relations.

Transformations are maps applied to a schedule domain; the kernel text is
regenerated rather than edited.  Interchange swaps loops, tiling blocks
the space, and interleaving fuses widely separated stream blocks into one
loop body to raise the number of concurrently advancing streams.
"""

from membench.codegen import codegen_map, emit_kernel_c, interpret
from membench.isets import UMap, restrict_domain
from membench.script import parse_set
from membench.transforms import interchange, interleave, tile

grid = parse_set("[n] -> { S[i0, i1] : 1 <= i0 <= n and 1 <= i1 <= n }")

print("# interchange: scan columns first")
swapped = restrict_domain(UMap((interchange(2, (1, 0)),)), grid)
print(emit_kernel_c(codegen_map(swapped), {"S": 2}))

print("# full 2-d tiling, 4x4 blocks")
tiled = restrict_domain(UMap((tile(2, (0, 1), (4, 4)),)), grid)
print(emit_kernel_c(codegen_map(tiled), {"S": 2}))

print("# interleave a 1-d stream by 2 (h = n/2, bound at run time)")
stream = parse_set("[n, h] -> { Triad_run[i0] : 0 <= i0 < n }")
fused = restrict_domain(interleave("h", 2, tuple_name="Triad_run"), stream)
print(emit_kernel_c(codegen_map(fused), {"Triad_run": 1}))

# every transform is a bijection on the domain points
trace = [args for _, args in interpret(codegen_map(tiled), {"n": 10})]
assert sorted(trace) == [(i, j) for i in range(1, 11) for j in range(1, 11)]
assert len(trace) == 100
print("tiling executed all 100 points exactly once (different order)")
