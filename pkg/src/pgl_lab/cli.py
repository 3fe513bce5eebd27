"""``pgl-lab`` command line: experiment sweeps and learning from CSV data."""

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .experiment import ExperimentManifest, ManifestError, ingest_csv_signals, run_experiment
from .graph_domain import ContractError, PglConfig
from .metrics_apps import RollingWindowPlan, rolling_window_graphs, spectral_clustering
from .solver import learn_graph, pgl_solve


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _matrix_csv(M, names=None):
    rows = [[repr(float(v)) for v in r] for r in M]
    return _table(names, rows)


def _read_matrix(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    names = None
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        names, rows = rows[0], rows[1:]
    try:
        M = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ContractError(f"{path}: {exc}") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"{path}: covariance must be a square table")
    return M, names


def _config(args):
    upd = {}
    for flag, name in (("rho", "rho"), ("eta", "eta"), ("delta", "delta"), ("beta", "beta0"),
                       ("outer", "outer_iters"), ("inner", "inner_iters"), ("seed", "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            upd[name] = v
    return replace(PglConfig(), **upd)


def cmd_run(args):
    m = ExperimentManifest.load(args.manifest)
    if args.out:
        m = replace(m, output=args.out)
    res = run_experiment(m, workers=args.workers)
    if not m.output:
        sys.stdout.write(res.detail_csv())
    return 0


def cmd_solve(args):
    C, names = _read_matrix(args.cov)
    res = pgl_solve(C, _config(args), n_samples=args.samples)
    print(f"status={res.status} delta={res.delta:.4g} outer={len(res.objective_trace) - 1}", file=sys.stderr)
    _emit(_matrix_csv(res.S_hat, names), args.out)
    return 0


def _signals(args):
    X, names, _ = ingest_csv_signals(args.signals, args.transform)
    return X, names


def cmd_rolling(args):
    X, _ = _signals(args)
    plan = RollingWindowPlan(args.window, args.stride, args.method.upper(), _config(args))
    out = rolling_window_graphs(X, plan, workers=args.workers)
    rows = [[w.index, w.start, repr(w.lambda2), w.status, w.reason] for w in out]
    _emit(_table(["window", "start", "lambda2", "status", "reason"], rows), args.out)
    return 0


def cmd_cluster(args):
    X, names = _signals(args)
    Xc = X - X.mean(axis=1, keepdims=True)
    C = Xc @ Xc.T / X.shape[1]
    G, status = learn_graph(args.method, 0.5 * (C + C.T), X.shape[1], _config(args))
    labels = spectral_clustering(G, args.k, seed=args.seed or 0)
    print(f"status={status}", file=sys.stderr)
    _emit(_table(["node", "cluster"], [[n, int(c)] for n, c in zip(names, labels)]), args.out)
    return 0


def _solver_flags(p):
    p.add_argument("--rho", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--outer", type=int)
    p.add_argument("--inner", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write CSV here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="pgl-lab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment manifest (JSON)")
    p.add_argument("manifest")
    p.add_argument("--out", help="detail CSV path (overrides the manifest)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="learn a graph from a covariance CSV")
    p.add_argument("--cov", required=True)
    p.add_argument("--samples", type=int, help="sample count behind the covariance")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    for name, func, helptext in (("rolling", cmd_rolling, "lambda2 of graphs over sliding windows"),
                                 ("cluster", cmd_cluster, "spectral clustering of a learned graph")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--signals", required=True)
        p.add_argument("--transform", choices=["none", "logReturns"], default="none")
        p.add_argument("--method", default="pgl", type=str.upper, choices=["PGL", "GSR", "GL"])
        _solver_flags(p)
        if name == "rolling":
            p.add_argument("--window", type=int, default=30)
            p.add_argument("--stride", type=int, default=1)
            p.add_argument("--workers", type=int, default=1)
        else:
            p.add_argument("--k", type=int, default=4)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (ManifestError, ContractError, OSError) as exc:
        print(f"pgl-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
