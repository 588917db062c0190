"""``ssel`` command line: select, eval and sweep.

Every command takes an optional JSON manifest; command-line flags override
manifest values. Outputs are written atomically into ``--out-dir`` and
carry the hash of the resolved manifest.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .dataset import StandardizationSpec, load_matrix, standardize
from .evaluation import CSV_COLUMNS, evaluate
from .solver import SolverConfig, solve

ALPHA_GRID = [1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6]
BETA_GRID = list(ALPHA_GRID)
LAMBDA_GRID = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]

SWEEP_COLUMNS = ("alpha", "beta", "lambda", "seed", "status", "n_features",
                 "acc_mean", "acc_std", "nmi_mean", "nmi_std", "manifest")

DEFAULT_MANIFEST = {
    "data": {"path": None, "format": "csv", "orientation": "features-rows"},
    "standardize": "zscore",
    "solver": {},
    "eval": {"trials": 10, "base_seed": 0},
    "labels": None,
    "out_dir": "ssel-out",
}

SOLVER_FLAGS = {"clusters": "clusters", "alpha": "alpha", "beta": "beta", "lam": "lam",
                "nu": "nu", "tol": "tol", "max_outer": "max_outer", "seed": "seed"}


class CLIError(Exception):
    pass


# -- manifest -------------------------------------------------------------

def _merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_manifest(args) -> dict:
    manifest = json.loads(json.dumps(DEFAULT_MANIFEST))
    if args.manifest:
        path = Path(args.manifest)
        try:
            loaded = json.loads(path.read_text())
        except FileNotFoundError:
            raise CLIError(f"manifest not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise CLIError(f"manifest {path} is not valid JSON: {exc}") from None
        manifest = _merge(manifest, loaded)
        for key in ("data",):
            p = manifest[key].get("path")
            if p and not Path(p).is_absolute():
                manifest[key]["path"] = str(path.parent / p)
        if manifest.get("labels") and not Path(manifest["labels"]).is_absolute():
            manifest["labels"] = str(path.parent / manifest["labels"])

    if args.data is not None:
        manifest["data"]["path"] = args.data
    if args.format is not None:
        manifest["data"]["format"] = args.format
    if args.orientation is not None:
        manifest["data"]["orientation"] = args.orientation
    if args.standardize is not None:
        manifest["standardize"] = args.standardize
    for flag, key in SOLVER_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            manifest["solver"][key] = val
    if args.trials is not None:
        manifest["eval"]["trials"] = args.trials
    if getattr(args, "labels", None) is not None:
        manifest["labels"] = args.labels
    if args.out_dir is not None:
        manifest["out_dir"] = args.out_dir
    if not manifest["data"]["path"]:
        raise CLIError("no dataset given (use --data or a manifest)")
    return manifest


def manifest_hash(manifest: dict) -> str:
    """Stable hash of everything that determines the outputs."""
    payload = {k: v for k, v in manifest.items() if k != "out_dir"}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def point_seed(base_seed: int, alpha: float, beta: float, lam: float) -> int:
    """Per-grid-point seed, independent of sweep order."""
    key = f"{int(base_seed)}|{float(alpha)!r}|{float(beta)!r}|{float(lam)!r}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "little") & 0x7FFFFFFF


# -- io -------------------------------------------------------------------

def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_data(manifest: dict):
    data = manifest["data"]
    X = load_matrix(data["path"], data.get("format", "csv"), data.get("orientation", "features-rows"))
    return standardize(X, StandardizationSpec(manifest.get("standardize", "zscore")))


def load_labels(path) -> np.ndarray:
    """Read one label per line (or comma/whitespace separated) and map to 0..C-1."""
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise CLIError(f"labels file not found: {path}") from None
    tokens = [t for line in text.splitlines() if not line.lstrip().startswith("#")
              for t in line.replace(",", " ").split()]
    if not tokens:
        raise CLIError(f"labels file {path} is empty")
    try:
        raw = np.array([float(t) for t in tokens])
        _, ids = np.unique(raw, return_inverse=True)
    except ValueError:
        _, ids = np.unique(np.array(tokens), return_inverse=True)
    return ids.astype(np.int64)


def load_selection(path) -> list:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise CLIError(f"selection file not found: {path}") from None
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(int(line))
    return out


def solver_config(manifest: dict, n_labels_classes=None, **overrides) -> SolverConfig:
    opts = dict(manifest["solver"])
    opts.update(overrides)
    if "clusters" not in opts:
        if n_labels_classes is None:
            raise CLIError("number of clusters unknown: pass --clusters or a labels file")
        opts["clusters"] = n_labels_classes
    return SolverConfig.from_dict(opts)


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _warn(msg):
    print(f"ssel: warning: {msg}", file=sys.stderr)


# -- commands -------------------------------------------------------------

def cmd_select(args) -> int:
    manifest = resolve_manifest(args)
    digest = manifest_hash(manifest)
    X = load_data(manifest)
    n_classes = None
    if manifest.get("labels"):
        n_classes = int(np.unique(load_labels(manifest["labels"])).size)
    cfg = solver_config(manifest, n_classes)
    result = solve(X, cfg)

    out = Path(manifest["out_dir"])
    summary = result.summary(cfg)
    summary["manifest_hash"] = digest
    summary["manifest"] = manifest
    trace = "".join(json.dumps(dict(r, manifest_hash=digest), sort_keys=True) + "\n"
                    for r in result.records)
    sel_text = f"# manifest {digest}\n" + "".join(f"{i}\n" for i in result.selected)
    atomic_write(out / "result.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    atomic_write(out / "trace.jsonl", trace)
    atomic_write(out / "selected.txt", sel_text)

    if not result.selected:
        _warn(f"no features selected at lambda={cfg.lam}; W is zero (try a smaller lambda)")
    print(f"selected {len(result.selected)} of {X.d} features in {result.iterations} iterations "
          f"({result.reason}); outputs in {out}")
    return 0 if result.converged else 2


def cmd_eval(args) -> int:
    manifest = resolve_manifest(args)
    digest = manifest_hash(manifest)
    X = load_data(manifest)
    if not manifest.get("labels"):
        raise CLIError("eval needs --labels")
    labels = load_labels(manifest["labels"])
    if labels.size != X.N:
        raise CLIError(f"{labels.size} labels for {X.N} samples")
    if args.all_features:
        selected, method = list(range(X.d)), "Baseline"
    elif args.selection:
        selected, method = load_selection(args.selection), "JASFS"
    else:
        raise CLIError("pass --selection FILE or --all-features")
    if any(not 0 <= i < X.d for i in selected):
        raise CLIError("selection contains out-of-range feature indices")
    ev = manifest["eval"]
    report = evaluate(X, selected, labels, trials=int(ev["trials"]), base_seed=int(ev["base_seed"]))

    out = Path(manifest["out_dir"])
    dataset = Path(manifest["data"]["path"]).stem
    row = report.csv_row(dataset, method)
    row["manifest"] = digest
    atomic_write(out / "eval.csv", _csv_text([row], CSV_COLUMNS + ("manifest",)))
    atomic_write(out / "eval.json",
                 report.to_json(dataset=dataset, method=method, manifest_hash=digest) + "\n")
    print(f"{method}: ACC {report.acc_mean:.4f} +/- {report.acc_std:.4f}, "
          f"NMI {report.nmi_mean:.4f} +/- {report.nmi_std:.4f} over {len(report.per_trial)} trials")
    return 0


def load_grid(path):
    grid = {"alpha": ALPHA_GRID, "beta": BETA_GRID, "lambda": LAMBDA_GRID}
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise CLIError(f"grid file not found: {path}") from None
        for key in grid:
            if key in loaded:
                grid[key] = [float(v) for v in loaded[key]]
    if not all(grid.values()):
        raise CLIError("grid is empty")
    return grid


def _point_key(alpha, beta, lam) -> str:
    return hashlib.sha256(f"{alpha!r}|{beta!r}|{lam!r}".encode()).hexdigest()[:20]


def _run_point(job):
    values, labels, manifest, alpha, beta, lam, seed, digest = job
    row = {"alpha": repr(alpha), "beta": repr(beta), "lambda": repr(lam), "seed": seed,
           "manifest": digest}
    with threadpool_limits(limits=1):
        try:
            cfg = solver_config(manifest, int(np.unique(labels).size),
                                alpha=alpha, beta=beta, lam=lam, seed=seed)
            result = solve(values, cfg)
            row["n_features"] = len(result.selected)
            if not result.selected:
                row.update(status="empty", acc_mean="", acc_std="", nmi_mean="", nmi_std="")
                return row
            ev = manifest["eval"]
            report = evaluate(values, result.selected, labels, trials=int(ev["trials"]),
                              base_seed=int(ev["base_seed"]))
        except Exception as exc:  # recorded per point; the sweep continues
            row.update(status=f"error: {type(exc).__name__}: {exc}", n_features="",
                       acc_mean="", acc_std="", nmi_mean="", nmi_std="")
            return row
    row.update(status="ok" if result.converged else "iteration-capped",
               acc_mean=repr(report.acc_mean), acc_std=repr(report.acc_std),
               nmi_mean=repr(report.nmi_mean), nmi_std=repr(report.nmi_std))
    return row


def _sort_key(row):
    ok = row["acc_mean"] != ""
    acc = float(row["acc_mean"]) if ok else 0.0
    return (not ok, -acc, float(row["alpha"]), float(row["beta"]), float(row["lambda"]))


def sweep_threads() -> int:
    raw = os.environ.get("SSEL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise CLIError(f"SSEL_THREADS must be an integer, got {raw!r}") from None


def cmd_sweep(args) -> int:
    manifest = resolve_manifest(args)
    grid = load_grid(args.grid)
    manifest["grid"] = grid
    digest = manifest_hash(manifest)
    X = load_data(manifest)
    if not manifest.get("labels"):
        raise CLIError("sweep needs --labels")
    labels = load_labels(manifest["labels"])
    if labels.size != X.N:
        raise CLIError(f"{labels.size} labels for {X.N} samples")

    out = Path(manifest["out_dir"])
    markers = out / "sweep_points"
    base_seed = int(manifest["solver"].get("seed", 0))
    rows, jobs = [], []
    for alpha, beta, lam in itertools.product(grid["alpha"], grid["beta"], grid["lambda"]):
        marker = markers / f"{_point_key(alpha, beta, lam)}.json"
        if marker.is_file():
            done = json.loads(marker.read_text())
            if done.get("manifest") == digest:
                rows.append(done)
                continue
        seed = point_seed(base_seed, alpha, beta, lam)
        jobs.append((X.values, labels, manifest, alpha, beta, lam, seed, digest))

    def record(row):
        key = _point_key(float(row["alpha"]), float(row["beta"]), float(row["lambda"]))
        atomic_write(markers / f"{key}.json", json.dumps(row, sort_keys=True))
        rows.append(row)

    workers = sweep_threads()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_run_point, jobs):
                record(row)
    else:
        for job in jobs:
            record(_run_point(job))

    rows.sort(key=_sort_key)
    atomic_write(out / "sweep.csv", _csv_text(rows, SWEEP_COLUMNS))
    n_ok = sum(r["acc_mean"] != "" for r in rows)
    print(f"{len(rows)} grid points ({n_ok} evaluated, {len(jobs)} run now); results in {out / 'sweep.csv'}")
    return 0 if n_ok >= 1 else 1


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="JSON run manifest")
    common.add_argument("--data", help="data matrix file")
    common.add_argument("--format", choices=("csv", "tsv", "dense-binary"))
    common.add_argument("--orientation", choices=("features-rows", "samples-rows"))
    common.add_argument("--standardize", choices=("none", "zscore", "minmax"))
    common.add_argument("--clusters", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", dest="max_outer", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--labels", help="ground-truth labels, one per sample")
    common.add_argument("--out-dir", dest="out_dir")

    parser = argparse.ArgumentParser(prog="ssel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("select", parents=[common], help="run feature selection")
    p_eval = sub.add_parser("eval", parents=[common], help="score a selection by K-means")
    p_eval.add_argument("--selection", help="selected-feature index file")
    p_eval.add_argument("--all-features", action="store_true", help="evaluate the all-features baseline")
    p_sweep = sub.add_parser("sweep", parents=[common], help="grid search over alpha, beta, lambda")
    p_sweep.add_argument("--grid", help="JSON file with alpha/beta/lambda lists")
    return parser


COMMANDS = {"select": cmd_select, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CLIError, OSError, ValueError, FloatingPointError) as exc:
        print(f"ssel: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
