"""Command line entry point: ``barygd run | gaussian-oracle | eval-w2 | lawgd-spectrum``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, build_config, load_document
from .core import GaussianMarginal
from .dynamics import DivergenceError, run
from .gaussian import GaussianMeasure, bures_w2, gaussian_barycenter
from .io import emit_run, fmt
from .lawgd import build_spectral_kernel
from .metrics import empirical_w2_assignment, quantile_w2_1d

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("barygd")


class _Collect(logging.Handler):
    def __init__(self):
        super().__init__(logging.INFO)
        self.lines = []

    def emit(self, record):
        self.lines.append(self.format(record))


def _load(path, seed=None, stride=None):
    doc = load_document(path)
    if isinstance(doc, dict):
        if seed is not None:
            doc["seed"] = seed
        if stride is not None:
            doc.setdefault("output", {})["stride"] = stride
    return build_config(doc)


def cmd_run(args):
    collect = _Collect()
    config_log = logging.getLogger("barygd.config")
    config_log.addHandler(collect)
    level, propagate = config_log.level, config_log.propagate
    config_log.setLevel(logging.INFO)
    config_log.propagate = args.verbose
    try:
        config, doc = _load(args.config, args.seed, args.stride)
    finally:
        config_log.removeHandler(collect)
        config_log.setLevel(level)
        config_log.propagate = propagate
    outdir = Path(args.out or doc["output"]["dir"])
    doc["output"]["dir"] = str(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "run.log").write_text("".join(line + "\n" for line in collect.lines))

    def progress(t, rec):
        if t % max(1, config.iterations // 10) == 0:
            log.info("t=%d alpha=%.4g h=%.4g cost=%.6g", t, rec.alpha, rec.h, rec.mean_cost)

    try:
        diag = run(config, progress=progress)
    except DivergenceError as err:
        log.error("%s", err)
        if err.diagnostics is not None:
            emit_run(err.diagnostics, doc, outdir)
        return EXIT_DIVERGED
    emit_run(diag, doc, outdir)
    last = diag.records[-1]
    summary = {"iterations": last.t, "mean_cost": last.mean_cost, "out": str(outdir)}
    if last.w2_ref is not None:
        summary["w2_ref"] = last.w2_ref
    print(json.dumps(summary))
    return EXIT_OK


def cmd_gaussian_oracle(args):
    config, _ = _load(args.config)
    if not all(isinstance(m, GaussianMarginal) for m in config.marginals):
        raise ConfigError("gaussian-oracle needs Gaussian marginals", ("marginals",))
    gs = [GaussianMeasure(m.mean, m.cov) for m in config.marginals]
    bary = gaussian_barycenter(gs, config.weights)
    n = len(gs)
    pairwise = [[bures_w2(gs[i], gs[j]) for j in range(n)] for i in range(n)]
    out = {
        "mean": bary.mean.tolist(),
        "cov": bary.cov.tolist(),
        "pairwise_w2": pairwise,
        "w2_to_barycenter": [bures_w2(g, bary) for g in gs],
        "variance": float(sum(w * bures_w2(g, bary) ** 2 for w, g in zip(config.weights, gs))),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def read_cloud(path):
    """Point cloud from CSV: one point per row, optional header row."""
    try:
        with open(path) as fh:
            first = fh.readline()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"{path} contains non-finite values")
    return data


def cmd_eval_w2(args):
    a, b = read_cloud(args.a), read_cloud(args.b)
    if a.shape[1] != b.shape[1]:
        raise ConfigError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[1] == 1:
        w2 = quantile_w2_1d(a, b)
    elif a.shape[0] != b.shape[0]:
        raise ConfigError(f"clouds in d > 1 must have equal sizes, got {a.shape[0]} and {b.shape[0]}")
    else:
        w2 = empirical_w2_assignment(a, b)
    print(fmt(w2))
    return EXIT_OK


def cmd_lawgd_spectrum(args):
    config, _ = _load(args.config)
    grid = config.backend if config.backend.kind == "lawgd" else None
    outdir = Path(args.out) if args.out else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    rows = ["marginal,k,eigenvalue"]
    for j, spec in enumerate(config.marginals):
        kw = {} if grid is None else {"a": grid.a, "b": grid.b, "M": grid.M, "K": grid.K}
        kern = build_spectral_kernel(spec, **kw)
        rows += [f"{j},{k + 1},{fmt(lam)}" for k, lam in enumerate(kern.eigenvalues)]
        if outdir is not None:
            header = "x," + ",".join(f"psi{k + 1}" for k in range(kern.eigenvalues.size))
            body = [
                ",".join([fmt(x)] + [fmt(v) for v in kern.eigenfunctions[:, i]])
                for i, x in enumerate(kern.grid)
            ]
            (outdir / f"eigenfunctions_m{j}.csv").write_text("\n".join([header] + body) + "\n")
    text = "\n".join(rows) + "\n"
    if outdir is not None:
        (outdir / "eigenvalues.csv").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="barygd", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and filled-in defaults")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run BARYGD and write samples, diagnostics and trajectories")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--stride", type=int, help="trajectory recording stride (0 disables)")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gaussian-oracle", help="closed-form barycenter of Gaussian marginals as JSON")
    g.add_argument("config")
    g.set_defaults(func=cmd_gaussian_oracle)

    e = sub.add_parser("eval-w2", help="exact empirical W2 between two CSV point clouds")
    e.add_argument("a")
    e.add_argument("b")
    e.set_defaults(func=cmd_eval_w2)

    s = sub.add_parser("lawgd-spectrum", help="eigenpairs of the LAWGD kernel as CSV")
    s.add_argument("config")
    s.add_argument("--out", help="directory for eigenvalue and eigenfunction tables")
    s.set_defaults(func=cmd_lawgd_spectrum)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
