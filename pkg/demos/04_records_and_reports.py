#!/usr/bin/env python3
"""Walkthrough: run records and report formats.

A record stores raw bytes and seconds next to the derived bandwidth, so
any unit convention can be recomputed later; jsonl is the archival format
(byte-identical round trip), csv feeds external plotters, and the table
groups results by cache band.
"""

from membench.harness import RunConfig, RunRecord, linear_footprint
from membench.machine import default_machine
from membench.reports import parse_jsonl, render_csv, render_jsonl, render_table

meta = {"timestamp": "2026-08-09T00:00:00Z", "host": "demo",
        "toolchain": "cc -O3 -fopenmp", "template_hash": "0" * 16,
        "pattern_hash": "0" * 16, "tool_version": "0.1.0",
        "omp_env": {"OMP_NUM_THREADS": "2", "OMP_PROC_BIND": "",
                    "OMP_PLACES": ""}}

records = []
for n, secs in ((1200, 0.00021), (9000, 0.0016), (200000, 0.041),
                (3000000, 0.75)):
    cfg = RunConfig("triad", "unified", (), n, 2, 1000)
    records.append(RunRecord(cfg, secs, n * 1000, 24,
                             {"L1D_MISS": "unsupported"}, "pass", dict(meta)))

text = render_jsonl(records)
print("# jsonl (one record per line, canonical)")
print(text.splitlines()[0][:120], "...")
assert render_jsonl(parse_jsonl(text)) == text
print("round trip is byte-identical\n")

print("# csv")
print("\n".join(render_csv(records).splitlines()[:3]), "\n")

print("# table, grouped by cache band")
print(render_table(records, default_machine(), linear_footprint(24)))
