"""Text formats: CSV tables, JSON reports, trajectories and coefficient profiles."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .basis import build_mode_table


def _plain(obj):
    """JSON-friendly copy with numpy scalars and arrays converted."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def canonical_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def csv_text(rows, config):
    """RFC-4180 CSV with a '#' comment line carrying the config hash and version."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    buf.write(f"# hermlab={__version__} config_sha256={config_hash(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def write_csv(path, rows, config):
    Path(path).write_text(csv_text(rows, config))


def read_csv(path):
    """Rows of a CSV written by ``write_csv`` (header comment skipped), as strings."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path, obj):
    Path(path).write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# coefficient profiles and trajectories


def write_profile(path, coeffs):
    with open(path, "w") as fh:
        for rank, c in enumerate(np.asarray(coeffs, dtype=complex)):
            fh.write(f"{rank},{float(c.real)!r},{float(c.imag)!r}\n")


def read_profile(path, size=None):
    """Coefficient vector from lines 'rank,re,im'; missing ranks are zero."""
    entries = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"line {ln}: expected 'rank,re,im'")
            entries[int(parts[0])] = complex(float(parts[1]), float(parts[2]))
    n = size if size is not None else (max(entries) + 1 if entries else 0)
    out = np.zeros(n, dtype=complex)
    for r, c in entries.items():
        if r >= n or r < 0:
            raise ValueError(f"rank {r} outside table of size {n}")
        out[r] = c
    return out


def write_trajectory(path, traj):
    """Header JSON line, then one '# t=<time>' block of 'rank,re,im' rows per sample."""
    head = {
        "dimension": traj.table.dimension,
        "cutoff": traj.table.cutoff,
        "config": traj.config,
        "times": len(traj.times),
    }
    with open(path, "w") as fh:
        fh.write(canonical_json(head) + "\n")
        for t, c in zip(traj.times, traj.coeffs):
            fh.write(f"# t={float(t)!r}\n")
            for rank, z in enumerate(c):
                fh.write(f"{rank},{float(z.real)!r},{float(z.imag)!r}\n")


def read_trajectory(path):
    """(table, times, coeffs, header) from the text trajectory format."""
    with open(path) as fh:
        head = json.loads(fh.readline())
        table = build_mode_table(head["dimension"], head["cutoff"])
        times, blocks, cur = [], [], None
        for line in fh:
            line = line.strip()
            if line.startswith("# t="):
                times.append(float(line[4:]))
                cur = np.zeros(len(table), dtype=complex)
                blocks.append(cur)
            elif line:
                r, re, im = line.split(",")
                cur[int(r)] = complex(float(re), float(im))
    return table, np.array(times), np.array(blocks), head
