"""CSV and JSON serialization of convergence traces."""

import csv
import json
import re
from pathlib import Path

RAW_COLUMNS = ("update_count", "dist_l1", "dual_value", "elapsed_ns")
AGGREGATE_COLUMNS = ("update_count", "mean_dist", "std_dist", "mean_dual")


def _is_aggregate(trace):
    return hasattr(trace, "mean_dist")


def _rows(trace):
    if _is_aggregate(trace):
        return AGGREGATE_COLUMNS, list(trace.rows())
    return RAW_COLUMNS, [tuple(rec) for rec in trace]


def _fmt(value):
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def write_trace(trace, fmt, path, metadata=None):
    """Write a raw :class:`~otscale.solvers.ConvergenceTrace` or an aggregate trace.

    CSV gets one header row and reals with 17 significant digits; JSON gets
    ``{"metadata": ..., "columns": [...], "records": [{...}, ...]}``.
    """
    columns, rows = _rows(trace)
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(x) for x in row])
    elif fmt == "json":
        doc = {
            "metadata": dict(metadata or {}),
            "columns": list(columns),
            "records": [dict(zip(columns, row)) for row in rows],
        }
        with path.open("w") as fh:
            json.dump(doc, fh, indent=1, allow_nan=False)
            fh.write("\n")
    else:
        raise ValueError(f"unknown trace format {fmt!r}")


def read_trace_json(path):
    """Inverse of the JSON branch of :func:`write_trace`; returns ``(metadata, records)``."""
    with open(path) as fh:
        doc = json.load(fh)
    return doc["metadata"], doc["records"]


def read_trace_csv(path):
    """Rows of a trace CSV as dicts of ints/floats."""
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            out.append({k: int(v) if k in ("update_count", "elapsed_ns") else float(v) for k, v in row.items()})
        return out


def safe_name(label):
    return re.sub(r"[^A-Za-z0-9.-]+", "_", label).strip("_")


def write_experiment(result, outdir, fmt):
    """Write ``aggregate_<label>.<fmt>`` per solver plus ``runs/<label>_pairNNN.<fmt>`` per run."""
    outdir = Path(outdir)
    (outdir / "runs").mkdir(parents=True, exist_ok=True)
    spec = result.spec
    paths = []
    for config in spec.solvers:
        label = config.label
        meta = spec.metadata(config)
        meta.pop("run_seed")
        path = outdir / f"aggregate_{safe_name(label)}.{fmt}"
        write_trace(result.aggregates[label], fmt, path, meta)
        paths.append(path)
        for p, (cfg, res) in enumerate(zip(result.run_configs[label], result.runs[label])):
            meta = spec.metadata(cfg)
            meta["pair"] = p
            meta["converged"] = res.converged
            meta["updates_used"] = res.updates_used
            path = outdir / "runs" / f"{safe_name(label)}_pair{p:03d}.{fmt}"
            write_trace(res.trace, fmt, path, meta)
            paths.append(path)
    return paths
