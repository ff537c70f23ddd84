"""Result persistence: jsonl (canonical), csv, and a grouped text table.

The jsonl form is the archival one: serialize -> parse -> serialize is
byte-identical, and every bandwidth figure can be recomputed from the raw
bytes/seconds stored alongside it.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .harness import RunConfig, RunRecord, SCHEMA_VERSION, FootprintModel
from .machine import MachineDesc

FORMATS = ("jsonl", "csv", "table")


class ReportError(Exception):
    pass


def record_to_dict(r: RunRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "pattern": r.config.pattern,
        "template": r.config.template,
        "transforms": list(r.config.transforms),
        "n": r.config.n,
        "threads": r.config.threads,
        "ntimes": r.config.ntimes,
        "warmup": r.config.warmup,
        "counters_requested": list(r.config.counters),
        "elapsed_seconds": r.elapsed_seconds,
        "instances_executed": r.instances_executed,
        "bytes_per_instance": r.bytes_per_instance,
        "bytes_counted": r.bytes_counted,
        "bandwidth_bytes_per_second": r.bandwidth_bytes_per_second,
        "bandwidth_gbps": r.bandwidth_gbps,
        "counters": dict(sorted(r.counters.items())),
        "validation": r.validation,
        "metadata": r.metadata,
    }


def record_from_dict(d: dict) -> RunRecord:
    cfg = RunConfig(
        pattern=d["pattern"],
        template=d["template"],
        transforms=tuple(d["transforms"]),
        n=d["n"],
        threads=d["threads"],
        ntimes=d["ntimes"],
        counters=tuple(d["counters_requested"]),
        warmup=d.get("warmup", 1),
    )
    return RunRecord(cfg, d["elapsed_seconds"], d["instances_executed"],
                     d["bytes_per_instance"], dict(d["counters"]),
                     d["validation"], dict(d["metadata"]))


def _record_sort_key(r: RunRecord):
    return (r.config.pattern, r.config.template, r.config.n, r.config.threads)


def render_jsonl(records) -> str:
    ordered = sorted(records, key=_record_sort_key)
    lines = [json.dumps(record_to_dict(r), sort_keys=True,
                        separators=(",", ":")) for r in ordered]
    return "\n".join(lines) + "\n" if lines else ""


def parse_jsonl(text: str) -> list[RunRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(record_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ReportError(f"line {lineno}: {exc}") from exc
    return records


def render_csv(records) -> str:
    ordered = sorted(records, key=_record_sort_key)
    counter_names = sorted({name for r in ordered for name in r.counters})
    base = ["pattern", "template", "transforms", "n", "threads", "ntimes",
            "elapsed_seconds", "instances_executed", "bytes_per_instance",
            "bytes_counted", "bandwidth_gbps", "validation"]
    fields = base + [f"counter.{c}" for c in counter_names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in ordered:
        row = [r.config.pattern, r.config.template,
               ";".join(r.config.transforms), r.config.n, r.config.threads,
               r.config.ntimes, r.elapsed_seconds, r.instances_executed,
               r.bytes_per_instance, r.bytes_counted,
               r.bandwidth_gbps, r.validation]
        row += [r.counters.get(c, "") for c in counter_names]
        w.writerow(row)
    return buf.getvalue()


def render_table(records, machine: MachineDesc | None = None,
                 footprint: FootprintModel | None = None) -> str:
    """Aligned human-readable view, grouped by cache band when a machine
    description and footprint model are supplied."""
    from .harness import band_of

    ordered = sorted(records, key=_record_sort_key)
    header = ["pattern", "template", "n", "threads", "GB/s", "valid"]
    groups: dict[str, list[RunRecord]] = {}
    if machine is not None and footprint is not None:
        for r in ordered:
            band = band_of(machine, footprint, r.config.n, r.config.threads)
            groups.setdefault(band, []).append(r)
        band_order = [lv.name for lv in machine.levels] + ["DRAM", "DRAM+"]
        keys = [b for b in band_order if b in groups]
    else:
        groups["all"] = list(ordered)
        keys = ["all"]

    rows_by_group = {}
    for key in keys:
        rows = []
        for r in groups[key]:
            flag = "pass" if r.valid else "FAIL"
            rows.append([r.config.pattern, r.config.template, str(r.config.n),
                         str(r.config.threads), f"{r.bandwidth_gbps:.3f}", flag])
        rows_by_group[key] = rows
    widths = [len(h) for h in header]
    for rows in rows_by_group.values():
        for row in rows:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]

    def fmt(row):
        return "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()

    out = []
    for key in keys:
        if machine is not None:
            out.append(f"== {key} ==")
        out.append(fmt(header))
        for row in rows_by_group[key]:
            out.append(fmt(row))
        out.append("")
    return "\n".join(out)


def write_report(records, fmt: str, path: str | Path,
                 machine: MachineDesc | None = None,
                 footprint: FootprintModel | None = None) -> Path:
    """Persist records in the requested format and return the path."""
    if not records:
        raise ReportError("no records to write")
    if fmt not in FORMATS:
        raise ReportError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "jsonl":
        text = render_jsonl(records)
    elif fmt == "csv":
        text = render_csv(records)
    else:
        text = render_table(records, machine, footprint)
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write {p}: {exc}") from exc
    return p


def read_report(path: str | Path) -> list[RunRecord]:
    return parse_jsonl(Path(path).read_text())
