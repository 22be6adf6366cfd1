"""Command-line front end: deterministic file-in/file-out pipelines.

Exit codes: 0 on success, 2 on malformed input (bad flags, unreadable or
invalid files), 1 on numeric failure.  Outputs are written to temporary
files and renamed into place, so a failing run never leaves partial output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import biomarker, cooccurrence, euclid, networks, stability
from .measures import load_distribution_json, load_points_csv
from .networks import EigensolverError
from .euclid import NonFiniteIterate


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return value


def _unit_interval(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text!r}")
    return value


def _thread_count(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("DIFFUSCOPE_THREADS")
    if env:
        try:
            n = int(env)
            if n >= 1:
                return n
        except ValueError:
            pass
    return os.cpu_count() or 1


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_many(pairs) -> None:
    """Write {path: text} with per-file temps; rename only after all writes."""
    staged = []
    try:
        for path, text in pairs:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def _field_csv_text(field: euclid.FrechetField) -> str:
    header = [f"x{k + 1}" for k in range(field.dim)] + ["value"]
    pts = field.grid_points()
    flat = field.values.reshape(-1)
    lines = [",".join(header)]
    for p, v in zip(pts, flat):
        lines.append(",".join(f"{c:.17g}" for c in p) + f",{v:.17g}")
    return "\n".join(lines) + "\n"


def _points_csv_text(points: np.ndarray) -> str:
    header = [f"x{j + 1}" for j in range(points.shape[1])]
    lines = [",".join(header)]
    for row in points:
        lines.append(",".join(f"{c:.17g}" for c in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_dff(args) -> int:
    alpha = load_points_csv(args.infile)
    outputs = []
    for raw, t in zip(args.t_raw, args.t):
        field = euclid.evaluate_field(alpha, t, resolution=args.resolution)
        outputs.append((Path(args.out_dir) / f"field_t{raw}.csv", _field_csv_text(field)))
    _atomic_write_many(outputs)
    return 0


def cmd_flow(args) -> int:
    alpha = load_points_csv(args.infile)
    t = args.t[0]
    step = args.step if args.step is not None else euclid.default_flow_step(alpha.dim, t)
    snaps = euclid.gradient_flow(
        alpha.points,
        alpha,
        t,
        step=step,
        max_iters=args.max_iters,
        tol=args.tol,
    )
    picks = np.linspace(0, len(snaps) - 1, args.snapshots).round().astype(int)
    outputs = []
    names = []
    for k, idx in enumerate(picks):
        name = f"snapshot_{k:04d}.csv"
        names.append(name)
        outputs.append((Path(args.out_dir) / name, _points_csv_text(snaps[idx])))
    manifest = json.dumps({"t": t, "step": step, "snapshots": names}, indent=2) + "\n"
    outputs.append((Path(args.out_dir) / "manifest.json", manifest))
    _atomic_write_many(outputs)
    return 0


def cmd_dfv(args) -> int:
    net = networks.load_network_json(args.net)
    dist = load_distribution_json(args.dist)
    spec = networks.spectrum(net)
    vectors = [networks.dfv(spec, dist, t) for t in args.t]
    if len(vectors) == 1:
        header = ["label", "value"]
    else:
        header = ["label"] + [f"value_t={raw}" for raw in args.t_raw]
    lines = [",".join(header)]
    for idx, label in enumerate(net.labels):
        lines.append(",".join([label] + [f"{v.values[idx]:.17g}" for v in vectors]))
    _atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    return 0


def cmd_wasserstein(args) -> int:
    from . import transport

    if args.net is not None:
        if args.xi is None or args.zeta is None:
            raise ValueError("network mode needs --xi and --zeta")
        net = networks.load_network_json(args.net)
        spec = networks.spectrum(net)
        xi = load_distribution_json(args.xi)
        zeta = load_distribution_json(args.zeta)
        result = transport.wasserstein_network(spec, xi, zeta, args.p)
    else:
        if args.a is None or args.b is None:
            raise ValueError("euclidean mode needs --a and --b point files")
        a = load_points_csv(args.a)
        b = load_points_csv(args.b)
        result = transport.wasserstein_euclidean(a, b, args.p)
    plan = [
        [int(i), int(j), float(result.plan.matrix[i, j])]
        for i, j in zip(*np.nonzero(result.plan.matrix > 0))
    ]
    doc = json.dumps({"p": result.p, "cost": result.cost, "plan": plan}, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(doc)
    else:
        _atomic_write_text(Path(args.out), doc)
    return 0


def cmd_stability(args) -> int:
    families = list(stability.FAMILIES) if args.family == "all" else [args.family]
    doc = stability.report_document(
        families, args.count, args.seed, threads=_thread_count(args)
    )
    _atomic_write_text(Path(args.out), stability.report_json(doc))
    return 0


def cmd_cooccur_build(args) -> int:
    table = cooccurrence.load_abundance_csv(args.infile)
    net = cooccurrence.build_pipeline(table, args.alpha, exclude_self=args.lans_exclude_self)
    edges = []
    for i in range(net.n):
        for j in range(i + 1, net.n):
            if net.weights[i, j] > 0:
                edges.append({"i": i, "j": j, "w": float(net.weights[i, j])})
    text = json.dumps({"labels": list(net.labels), "edges": edges}, indent=2) + "\n"
    _atomic_write_text(Path(args.out), text)
    return 0


def _biomarker_features(args, table):
    if args.features == "beta":
        return biomarker.beta_feature_matrix(table), None
    if args.net is None:
        raise ValueError("--features gamma needs --net")
    if args.t is None:
        raise ValueError("--features gamma needs --t")
    net = networks.load_network_json(args.net)
    if tuple(net.labels) != tuple(table.taxa):
        raise ValueError("network labels and table taxa must match in order")
    spec = networks.spectrum(net)
    return biomarker.gamma_feature_matrix(table, spec, args.t), net


def cmd_biomarker_train(args) -> int:
    table = cooccurrence.load_abundance_csv(args.table)
    labels = biomarker.load_labels_csv(args.labels)
    if labels.shape[0] != table.n_samples:
        raise ValueError("label count does not match sample count")
    feats, net = _biomarker_features(args, table)
    idx0 = np.nonzero(labels == 0)[0]
    idx1 = np.nonzero(labels == 1)[0]
    kind = "raw-frequency" if args.features == "beta" else "dfv"
    model = biomarker.fit_lda(
        feats[idx0], feats[idx1], feature_kind=kind,
        t=args.t if kind == "dfv" else None,
        taxa=table.taxa,
    )
    obj = {
        "direction": [float(v) for v in model.direction],
        "class_means": [[float(v) for v in row] for row in model.class_means],
        "feature_kind": model.feature_kind,
        "threshold": model.threshold,
        "t": model.t,
        "taxa": list(model.taxa),
    }
    _atomic_write_text(Path(args.out), json.dumps(obj, indent=2) + "\n")
    return 0


def _scores_for_table(args, model, table):
    if model.feature_kind == "dfv":
        if args.net is None:
            raise ValueError("scoring a dfv model needs --net")
        net = networks.load_network_json(args.net)
        if tuple(net.labels) != tuple(table.taxa):
            raise ValueError("network labels and table taxa must match in order")
        spec = networks.spectrum(net)
        feats = biomarker.gamma_feature_matrix(table, spec, model.t)
    else:
        feats = biomarker.beta_feature_matrix(table)
    return biomarker.score_many(model, feats)


def cmd_biomarker_score(args) -> int:
    model = biomarker.load_model_json(args.model)
    table = cooccurrence.load_abundance_csv(args.table)
    scores = _scores_for_table(args, model, table)
    lines = ["score"] + [f"{s:.17g}" for s in scores]
    _atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    return 0


def cmd_biomarker_roc(args) -> int:
    model = biomarker.load_model_json(args.model)
    table = cooccurrence.load_abundance_csv(args.table)
    labels = biomarker.load_labels_csv(args.labels)
    if labels.shape[0] != table.n_samples:
        raise ValueError("label count does not match sample count")
    scores = _scores_for_table(args, model, table)
    curve = biomarker.roc(scores[labels == 0], scores[labels == 1])
    lines = ["threshold,fpr,tpr"]
    for thr, f, t in zip(curve.thresholds, curve.fpr, curve.tpr):
        lines.append(f"{thr:.17g},{f:.17g},{t:.17g}")
    _atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    return 0


def cmd_biomarker_select(args) -> int:
    table = cooccurrence.load_abundance_csv(args.table)
    labels = biomarker.load_labels_csv(args.labels)
    alpha_grid = tuple(args.alpha_grid) if args.alpha_grid else None
    t_grid = tuple(args.t_grid) if args.t_grid else None
    alpha, t, surface = biomarker.select_parameters(
        table, labels, alpha_grid, t_grid, exclude_self=args.lans_exclude_self
    )
    doc = {
        "alpha": alpha,
        "t": t,
        "alpha_grid": list(alpha_grid or biomarker.DEFAULT_ALPHA_GRID),
        "t_grid": list(t_grid or biomarker.DEFAULT_T_GRID),
        "auc_surface": [[float(v) for v in row] for row in surface],
    }
    _atomic_write_text(Path(args.out), json.dumps(doc, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffuscope",
        description="Multiscale diffusion geometry for point clouds and weighted networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="cap for data-parallel sections (default: DIFFUSCOPE_THREADS or CPU count)")

    p = sub.add_parser("dff", help="evaluate diffusion Fréchet fields on a grid")
    p.add_argument("--in", dest="infile", required=True, help="point cloud CSV")
    p.add_argument("--t", dest="t_raw", action="append", required=True,
                   help="diffusion scale (repeatable)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resolution", type=int, default=None, help="grid points per axis")
    add_threads(p)
    p.set_defaults(fn=cmd_dff)

    p = sub.add_parser("flow", help="gradient-flow a point set under its Fréchet function")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t", dest="t_raw", action="append", required=True)
    p.add_argument("--snapshots", type=int, default=6)
    p.add_argument("--step", type=_positive_float, default=None)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--tol", type=_positive_float, default=None)
    p.add_argument("--out-dir", required=True)
    add_threads(p)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("dfv", help="diffusion Fréchet vectors of a vertex distribution")
    p.add_argument("--net", required=True, help="network JSON")
    p.add_argument("--dist", required=True, help="distribution JSON")
    p.add_argument("--t", dest="t_raw", action="append", required=True)
    p.add_argument("--out", required=True)
    add_threads(p)
    p.set_defaults(fn=cmd_dfv)

    p = sub.add_parser("wasserstein", help="exact W_p between two measures")
    p.add_argument("--p", type=_positive_float, default=1.0)
    p.add_argument("--a", default=None, help="point cloud CSV (euclidean mode)")
    p.add_argument("--b", default=None, help="point cloud CSV (euclidean mode)")
    p.add_argument("--net", default=None, help="network JSON (network mode)")
    p.add_argument("--xi", default=None, help="distribution JSON (network mode)")
    p.add_argument("--zeta", default=None, help="distribution JSON (network mode)")
    p.add_argument("--out", default=None, help="output JSON (default: stdout)")
    add_threads(p)
    p.set_defaults(fn=cmd_wasserstein)

    p = sub.add_parser("stability", help="randomized certification of the stability bounds")
    p.add_argument("--family", choices=list(stability.FAMILIES) + ["all"], default="all")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    add_threads(p)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("cooccur", help="co-occurrence network pipelines")
    cs = p.add_subparsers(dest="subcommand", required=True)
    b = cs.add_parser("build", help="correlation network + sparsification")
    b.add_argument("--alpha", type=_unit_interval, required=True)
    b.add_argument("--in", dest="infile", required=True, help="abundance CSV")
    b.add_argument("--out", required=True, help="network JSON")
    b.add_argument("--lans-exclude-self", action="store_true")
    add_threads(b)
    b.set_defaults(fn=cmd_cooccur_build)

    p = sub.add_parser("biomarker", help="LDA biomarkers over abundance tables")
    bs = p.add_subparsers(dest="subcommand", required=True)

    b = bs.add_parser("train")
    b.add_argument("--features", choices=["beta", "gamma"], required=True)
    b.add_argument("--t", type=_positive_float, default=None)
    b.add_argument("--net", default=None)
    b.add_argument("--table", required=True)
    b.add_argument("--labels", required=True)
    b.add_argument("--out", required=True)
    add_threads(b)
    b.set_defaults(fn=cmd_biomarker_train)

    b = bs.add_parser("score")
    b.add_argument("--model", required=True)
    b.add_argument("--table", required=True)
    b.add_argument("--net", default=None)
    b.add_argument("--out", required=True)
    add_threads(b)
    b.set_defaults(fn=cmd_biomarker_score)

    b = bs.add_parser("roc")
    b.add_argument("--model", required=True)
    b.add_argument("--table", required=True)
    b.add_argument("--labels", required=True)
    b.add_argument("--net", default=None)
    b.add_argument("--out", required=True)
    add_threads(b)
    b.set_defaults(fn=cmd_biomarker_roc)

    b = bs.add_parser("select")
    b.add_argument("--table", required=True)
    b.add_argument("--labels", required=True)
    b.add_argument("--alpha-grid", type=_unit_interval, action="append", default=None)
    b.add_argument("--t-grid", type=_positive_float, action="append", default=None)
    b.add_argument("--lans-exclude-self", action="store_true")
    b.add_argument("--out", required=True)
    add_threads(b)
    b.set_defaults(fn=cmd_biomarker_select)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "t_raw"):
        try:
            args.t = [_positive_float(raw) for raw in args.t_raw]
        except argparse.ArgumentTypeError as exc:
            parser.error(f"argument --t: {exc}")
    try:
        return args.fn(args)
    except (EigensolverError, NonFiniteIterate, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"diffuscope: numeric failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, IndexError, OSError, json.JSONDecodeError) as exc:
        print(f"diffuscope: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"diffuscope: numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
