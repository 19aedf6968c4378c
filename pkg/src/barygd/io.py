"""Run artifacts: samples, per-iteration diagnostics, trajectories and metadata.

All floats are written with 17 significant digits so that a rerun with the
same configuration and seed is byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .core import project_barycenter
from .metrics import kde_1d, silverman_bandwidth

KDE_POINTS = 512


def fmt(v):
    """Fixed 17-significant-digit rendering of a finite float."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"refusing to write non-finite value {v!r}")
    return format(v, ".17g")


def _json_value(v):
    if isinstance(v, bool) or v is None or isinstance(v, (int, np.integer)):
        return json.dumps(int(v) if isinstance(v, np.integer) else v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return json.dumps(v)


def record_line(record):
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in record.to_dict().items()) + "}"


def _header(d, lead):
    return ",".join(lead + [f"x{k}" for k in range(d)])


def write_samples(path, ensemble):
    x = ensemble.particles
    N, n, d = x.shape
    bary = project_barycenter(ensemble)
    lines = [_header(d, ["particle", "marginal"])]
    for j in range(n):
        for i in range(N):
            lines.append(",".join([str(i), str(j)] + [fmt(v) for v in x[i, j]]))
    for i in range(N):
        lines.append(",".join([str(i), "barycenter"] + [fmt(v) for v in bary[i]]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectories(path, snapshots):
    with open(path, "w") as fh:
        if not snapshots:
            fh.write("t,particle,marginal\n")
            return
        N, n, d = snapshots[0][1].shape
        fh.write(_header(d, ["t", "particle", "marginal"]) + "\n")
        for t, x in snapshots:
            for i in range(N):
                for j in range(n):
                    fh.write(",".join([str(t), str(i), str(j)] + [fmt(v) for v in x[i, j]]) + "\n")


def write_diagnostics(path, records):
    with open(path, "w") as fh:
        for r in records:
            fh.write(record_line(r) + "\n")


def write_kde(path, samples):
    """Barycenter density estimate on a regular grid; returns the bandwidth used."""
    bw = silverman_bandwidth(samples)
    lo, hi = samples.min() - 3 * bw, samples.max() + 3 * bw
    grid = np.linspace(lo, hi, KDE_POINTS)
    dens = kde_1d(samples, bw, grid)
    Path(path).write_text("x,density\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(grid, dens)))
    return bw


def emit_run(diag, document, outdir):
    """Write the artifact set of a (possibly aborted) run into ``outdir``."""
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "samples": out / "samples.csv",
            "diagnostics": out / "diagnostics.jsonl",
            "trajectories": out / "trajectories.csv",
            "meta": out / "meta.json",
        }
        write_samples(files["samples"], diag.final)
        write_diagnostics(files["diagnostics"], diag.records)
        write_trajectories(files["trajectories"], diag.snapshots)
        meta = dict(document)
        meta["version"] = __version__
        files["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        summary = {"iterations_completed": len(diag.records), "aborted": diag.error is not None}
        if diag.final.dim == 1 and diag.final.n_particles >= 2:
            files["kde"] = out / "kde.csv"
            summary["kde_bandwidth"] = write_kde(files["kde"], project_barycenter(diag.final)[:, 0])
        if diag.reference is not None:
            summary["reference"] = diag.reference.to_dict()
        files["summary"] = out / "summary.json"
        files["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write run artifacts to {exc.filename or out}: {exc.strerror}") from exc
    return files
