#!/usr/bin/env python3
"""Walkthrough: from a set script to a scanned loop nest.

The core abstraction is a parameterized integer set.  Code generation
scans its points in lexicographic order and prints C; the same AST can be
interpreted in Python, which is how the test suite checks every generated
loop against brute-force enumeration.
"""

from membench.codegen import codegen_set, emit_kernel_c, interpret
from membench.isets import enumerate_points
from membench.script import parse_set

# the canonical streaming kernel domain: one loop over n elements
stream = parse_set("[n] -> { Triad_run[j] : 0 <= j < n }")
print("# stream domain")
print(emit_kernel_c(codegen_set(stream), {"Triad_run": 1}))

# a stencil interior: two dimensions, halo excluded
interior = parse_set("[n] -> { S[i, j] : 1 <= i <= n and 1 <= j <= n }")
print("# 2-d interior")
print(emit_kernel_c(codegen_set(interior), {"S": 2}))

# non-trivial bounds: a triangle; note the inner loop's dependent bound
triangle = parse_set("[n] -> { S[i, j] : 0 <= i < n and i <= j < n }")
print("# triangle")
print(emit_kernel_c(codegen_set(triangle), {"S": 2}))

# the interpreter executes the AST without any C toolchain
ast = codegen_set(triangle)
trace = [args for _, args in interpret(ast, {"n": 4})]
oracle = enumerate_points(triangle, {"n": 4})
print("interpreted :", trace)
print("enumerated  :", oracle)
assert trace == oracle
print("loop nest visits exactly the set's points, in order")
