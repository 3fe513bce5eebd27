"""Seeded Monte Carlo sweeps and CSV input/output.

A manifest fixes the data model, the sample-size grid, the learners and their
hyperparameters; :func:`run_experiment` expands it into independent cells
whose seeds depend only on the cell key, so the detail table does not depend
on execution order or worker count.
"""

import csv
import io
import itertools
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .graph_domain import ContractError, PglConfig
from .metrics_apps import nme, normalize_estimate, support_scores
from .solver import METHODS, learn_graph
from .synthetic import CovModel, GraphModel, derive_seed, gen_covariance, gen_graph, simulate_covariance

log = logging.getLogger(__name__)

DETAIL_COLUMNS = (
    "scenario", "method", "N", "R", "noise", "realization", "seed",
    "nme_raw", "nme_bestScale", "fscore", "wallClock", "status",
)
AGGREGATE_COLUMNS = (
    "scenario", "method", "N", "R", "noise", "realizations", "failures",
    "nme_raw", "nme_bestScale", "fscore", "wallClock",
)


class ManifestError(ContractError):
    pass


def _build(cls, data, what):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ManifestError(f"unknown {what} field(s): {sorted(extra)}")
    if "coeffs" in data and data["coeffs"] is not None:
        data["coeffs"] = tuple(data["coeffs"])
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"invalid {what}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentManifest:
    """A self-describing sweep.

    ``hyper_grid`` maps :class:`PglConfig` field names to lists of values;
    every combination is run for each method. With more than one combination
    the method label carries the setting, e.g. ``PGL[rho=0.1]``.

    Wall-clock times are only written when ``record_wallclock`` is set, since
    they are the one quantity that differs between identical reruns.
    """

    scenario: str
    graph: GraphModel = field(default_factory=GraphModel)
    covariance: CovModel = field(default_factory=CovModel)
    noise: float = 0.0
    R_grid: tuple = (1000,)
    methods: tuple = ("PGL", "GSR", "GL")
    config: PglConfig = field(default_factory=PglConfig)
    hyper_grid: dict = field(default_factory=dict)
    realizations: int = 1
    master_seed: int = 0
    output: str | None = None
    record_wallclock: bool = False

    def __post_init__(self):
        if not self.scenario:
            raise ManifestError("scenario id must be non-empty")
        if self.realizations < 1:
            raise ManifestError("need at least one realization")
        if self.noise < 0:
            raise ManifestError("noise must be nonnegative")
        if not self.R_grid or any(int(r) < 1 for r in self.R_grid):
            raise ManifestError("R_grid must hold positive sample counts")
        bad = [m for m in self.methods if m.upper() not in METHODS]
        if bad or not self.methods:
            raise ManifestError(f"methods must be drawn from {METHODS}, got {list(self.methods)}")
        names = {f.name for f in fields(PglConfig)}
        for key, values in self.hyper_grid.items():
            if key not in names:
                raise ManifestError(f"hyper_grid key {key!r} is not a solver setting")
            if not isinstance(values, (list, tuple)) or not values:
                raise ManifestError(f"hyper_grid[{key!r}] must be a non-empty list")
        for combo in self.variants():
            try:
                replace(self.config, **combo)
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"invalid hyperparameters {combo}: {exc}") from exc

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        required = {"scenario"}
        if missing := required - set(data):
            raise ManifestError(f"manifest is missing {sorted(missing)}")
        known = {f.name for f in fields(cls)}
        if extra := set(data) - known:
            raise ManifestError(f"unknown manifest field(s): {sorted(extra)}")
        data["graph"] = _build(GraphModel, data.get("graph"), "graph")
        data["covariance"] = _build(CovModel, data.get("covariance"), "covariance")
        data["config"] = _build(PglConfig, data.get("config"), "config")
        for key in ("R_grid", "methods"):
            if key in data:
                data[key] = tuple(data[key])
        if "R_grid" in data:
            data["R_grid"] = tuple(int(r) for r in data["R_grid"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ManifestError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ManifestError(f"{path}: manifest must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        """Every setting, defaults included, in JSON-compatible form."""
        out = asdict(self)
        out["R_grid"] = list(self.R_grid)
        out["methods"] = list(self.methods)
        cov = out["covariance"]
        if cov["coeffs"] is not None:
            cov["coeffs"] = list(cov["coeffs"])
        return out

    def variants(self):
        keys = sorted(self.hyper_grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.hyper_grid[k] for k in keys))]


@dataclass(frozen=True)
class Cell:
    method: str
    label: str
    R: int
    realization: int
    overrides: tuple


def _cells(m: ExperimentManifest):
    variants = m.variants()
    out = []
    for r in range(m.realizations):
        for R in m.R_grid:
            for method in m.methods:
                for combo in variants:
                    label = method.upper()
                    if len(variants) > 1:
                        label += "[" + ",".join(f"{k}={v}" for k, v in combo.items()) + "]"
                    out.append(Cell(method.upper(), label, int(R), r, tuple(combo.items())))
    return out


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def run_cell(m: ExperimentManifest, cell: Cell):
    """Generate the cell's data, run its learner and score the result.

    The graph and covariance depend only on the realization and the data only
    on (realization, R), so all methods of a realization see the same sample.
    """
    gseed = derive_seed(m.master_seed, m.scenario, "graph", cell.realization)
    cseed = derive_seed(m.master_seed, m.scenario, "cov", cell.realization)
    dseed = derive_seed(m.master_seed, m.scenario, "data", cell.R, cell.realization)
    seed = derive_seed(m.master_seed, m.scenario, cell.label, cell.R, cell.realization)
    row = {
        "scenario": m.scenario, "method": cell.label, "N": m.graph.n, "R": cell.R,
        "noise": m.noise, "realization": cell.realization, "seed": seed,
        "nme_raw": float("nan"), "nme_bestScale": float("nan"), "fscore": float("nan"),
        "wallClock": float("nan"), "status": "failed",
    }
    cfg = replace(m.config, seed=seed, **dict(cell.overrides))
    try:
        S_true = gen_graph(m.graph, gseed).S
        Sigma = gen_covariance(S_true, m.covariance, cseed)
        C = simulate_covariance(Sigma, cell.R, m.noise, dseed)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            G, status = learn_graph(cell.method, C, cell.R, cfg)
        elapsed = time.perf_counter() - t0
        row.update(
            nme_raw=nme(S_true, G),
            nme_bestScale=nme(S_true, normalize_estimate(G, "bestScale", S_true)),
            fscore=support_scores(S_true, G)["fscore"],
            status=status,
        )
        if m.record_wallclock:
            row["wallClock"] = elapsed
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("cell %s R=%d realization %d failed: %s", cell.label, cell.R, cell.realization, exc)
    return row


def _run_cell_args(args):
    return run_cell(*args)


def aggregate(rows):
    """Means over realizations of every (scenario, method, N, R, noise) group."""
    groups = {}
    for row in rows:
        key = tuple(row[c] for c in ("scenario", "method", "N", "R", "noise"))
        groups.setdefault(key, []).append(row)
    out = []
    for key, grp in groups.items():
        ok = [g for g in grp if g["status"] != "failed"]
        agg = dict(zip(("scenario", "method", "N", "R", "noise"), key))
        agg["realizations"] = len(ok)
        agg["failures"] = len(grp) - len(ok)
        for col in ("nme_raw", "nme_bestScale", "fscore", "wallClock"):
            vals = [g[col] for g in ok if not math.isnan(g[col])]
            agg[col] = float(np.mean(vals)) if vals else float("nan")
        out.append(agg)
    return out


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    detail: list
    aggregate: list

    def detail_csv(self):
        return rows_to_csv(self.detail, DETAIL_COLUMNS)

    def aggregate_csv(self):
        return rows_to_csv(self.aggregate, AGGREGATE_COLUMNS)


def run_experiment(manifest: ExperimentManifest, workers=1, write=True):
    """Run every cell of ``manifest``; rows come back in cell-key order.

    With ``write`` and a manifest ``output`` path, writes the detail CSV there,
    the aggregate next to it as ``<stem>_aggregate.csv`` and the fully
    materialised manifest as ``<stem>_manifest.json``.
    """
    cells = _cells(manifest)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            detail = list(pool.map(_run_cell_args, [(manifest, c) for c in cells]))
    else:
        detail = [run_cell(manifest, c) for c in cells]
    result = ExperimentResult(detail, aggregate(detail))
    if write and manifest.output:
        out = Path(manifest.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(result.detail_csv(), encoding="utf-8")
        out.with_name(out.stem + "_aggregate.csv").write_text(result.aggregate_csv(), encoding="utf-8")
        out.with_name(out.stem + "_manifest.json").write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return result


def ingest_csv_signals(path, transform="none"):
    """Read a node-per-column CSV into an ``n x D`` matrix.

    Parameters
    ----------
    path : str or path-like
        UTF-8 comma-separated file with a header row of node names and one
        row per time step.
    transform : {"none", "logReturns"}
        ``logReturns`` maps prices to ``log(p_t / p_{t-1})`` and drops the
        first time step.

    Returns
    -------
    X : ndarray, shape (n, D)
    names : list of str
    filled : int
        Number of empty cells forward-filled from the previous row.
    """
    if transform not in ("none", "logReturns"):
        raise ContractError(f"unknown transform {transform!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ContractError(f"{path}: empty file")
    names = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise ContractError(f"{path}: header only, no data rows")
    X = np.empty((len(body), len(names)))
    filled = 0
    for i, r in enumerate(body, start=2):
        if len(r) != len(names):
            raise ContractError(f"{path}: row {i} has {len(r)} cells, expected {len(names)}")
        for j, cell in enumerate(r):
            cell = cell.strip()
            if cell == "":
                if i == 2:
                    raise ContractError(f"{path}: row {i}, column {names[j]!r}: missing value with nothing to fill from")
                X[i - 2, j] = X[i - 3, j]
                filled += 1
                continue
            try:
                X[i - 2, j] = float(cell)
            except ValueError:
                raise ContractError(f"{path}: row {i}, column {names[j]!r}: non-numeric value {cell!r}") from None
    if filled:
        warnings.warn(f"{path}: forward-filled {filled} missing cell(s)", stacklevel=2)
    if transform == "logReturns":
        if X.shape[0] < 2:
            raise ContractError("log returns need at least two time steps")
        if np.any(X <= 0):
            raise ContractError("log returns need positive prices")
        X = np.log(X[1:] / X[:-1])
    return X.T.copy(), names, filled
