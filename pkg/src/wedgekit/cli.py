"""Command-line entry point wiring ingestion, distances, training, and
evaluation into reproducible runs.

Every subcommand writes its artifacts into an output directory along
with ``config.json`` (the fully resolved run parameters) and
``manifest.json`` (package and dependency versions, input and output
content hashes, and the seed), so a finished run can be audited and
repeated exactly. All randomness flows from the single ``--seed`` flag
through named sub-streams, and errors print as one machine-parsable
line: ``error: <Type>: <message>``.

Exit codes: 0 on success, 1 on operation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, evaluate, splinenet
from .dataset import (
    Dataset,
    compute_stats,
    parse_json,
    parse_tudataset,
    write_json,
    write_tudataset,
)
from .editdist import CostModel, distance_matrix
from .refcorpus import CORPUS_NAME, REFERENCE_SEED, build_reference_dataset
from .splinenet import NetConfig, TrainConfig

__all__ = ["RunConfig", "UsageError", "main", "run"]

_METHOD_CHOICES = ("apx1", "apx2", "exact")


class UsageError(ValueError):
    """Command line that parses but asks for something contradictory."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one subcommand run."""

    subcommand: str
    data: Optional[str]
    out: str
    params: dict

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# plumbing


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_dataset(args) -> tuple[Dataset, dict]:
    """Dataset plus a manifest entry describing where it came from."""
    path = args.data if args.data is not None else os.environ.get("WEDGEKIT_DATA")
    if not path:
        return build_reference_dataset(), {
            "builtin": CORPUS_NAME,
            "builtin_seed": REFERENCE_SEED,
        }
    p = Path(path)
    if p.is_dir():
        d = parse_tudataset(p, getattr(args, "dataset_name", None))
        inputs = {f.name: _sha256(f) for f in sorted(p.glob("*.txt"))}
    else:
        d = parse_json(p)
        inputs = {p.name: _sha256(p)}
    return d, {"path": str(p), "files": inputs}


def _cost_model(args) -> CostModel:
    return CostModel(alpha=args.alpha, del_cost=args.del_cost)


def _write_run_records(args, inputs: dict, outdir: Path) -> None:
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("func", "data", "out") and not k.startswith("_")
    }
    RunConfig(
        subcommand=args.subcommand,
        data=args.data,
        out=str(outdir),
        params=params,
    ).to_json(outdir / "config.json")
    outputs = {
        f.name: _sha256(f)
        for f in sorted(outdir.iterdir())
        if f.is_file() and f.name != "manifest.json"
    }
    manifest = {
        "subcommand": args.subcommand,
        "package": {"name": "wedgekit", "version": __version__},
        "python": sys.version.split()[0],
        "dependencies": _dependency_versions(),
        "inputs": inputs,
        "outputs": outputs,
        "seed": getattr(args, "seed", None),
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dependency_versions() -> dict:
    import numba
    import scipy

    return {
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(args) -> None:
    d, inputs = _load_dataset(args)
    out = _outdir(args)
    name = getattr(args, "dataset_name", None) or CORPUS_NAME
    if args.format == "json":
        write_json(d, out / f"{name}.json")
    else:
        write_tudataset(d, out, name)
    _write_run_records(args, inputs, out)
    print(f"ingested {len(d)} graphs, {len(d.class_names)} classes -> {out}")


def _cmd_stats(args) -> None:
    d, inputs = _load_dataset(args)
    stats = compute_stats(d)
    out = _outdir(args)
    with open(out / "stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "graphs", "vertices", "edges", "h_max", "w_max"])
        for c in stats.classes:
            w.writerow([c.name, c.n_graphs, c.n_vertices, c.n_edges,
                        repr(c.h_max), repr(c.w_max)])
    evaluate.write_summary_json(
        out / "summary.json",
        {
            "total_graphs": stats.total_graphs,
            "total_vertices": stats.total_vertices,
            "total_edges": stats.total_edges,
            "classes": [asdict(c) for c in stats.classes],
        },
    )
    _write_run_records(args, inputs, out)
    print(
        f"{stats.total_graphs} graphs, {stats.total_vertices} vertices, "
        f"{stats.total_edges} edges -> {out}"
    )


def _compute_matrix(d: Dataset, args):
    return distance_matrix(
        d.graphs,
        method=args.method,
        cm=_cost_model(args),
        max_total_wedges=args.max_wedges,
    )


def _cmd_dist(args) -> None:
    d, inputs = _load_dataset(args)
    dm = _compute_matrix(d, args)
    out = _outdir(args)
    dm.to_csv(out / f"dist_{args.method}.csv")
    dm.to_json(out / f"dist_{args.method}.json")
    _write_run_records(args, inputs, out)
    print(f"{dm.values.shape[0]}x{dm.values.shape[1]} {dm.method} matrix -> {out}")


def _parse_id_list(text: Optional[str], n: int) -> Optional[list[int]]:
    if text is None:
        return None
    try:
        ids = [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"reference ids must be integers, got {text!r}") from None
    if not ids:
        raise UsageError("reference id list is empty")
    return ids


def _cmd_rank(args) -> None:
    d, inputs = _load_dataset(args)
    labels = d.labels
    dm = _compute_matrix(d, args)
    refs = _parse_id_list(args.reference_ids, len(d))
    if refs is None:
        refs = [int(r) for r in evaluate.class_references(labels)]
    out = _outdir(args)
    aucs = {}
    for ref in refs:
        curve = evaluate.rank_and_roc(dm.values, labels, ref)
        sign = d.graphs[ref].class_label
        stem = f"roc_{sign}" if sign not in aucs else f"roc_{sign}_{ref}"
        evaluate.write_roc_csv(out / f"{stem}.csv", curve)
        aucs[sign] = curve.auc if sign not in aucs else aucs[sign]
    perfect = sum(1 for a in aucs.values() if a >= 1.0)
    evaluate.write_summary_json(
        out / "summary.json",
        {"method": dm.method, "aucs": aucs, "perfect": perfect},
    )
    _write_run_records(args, inputs, out)
    print(f"{dm.method}: AUC 1.0 for {perfect}/{len(aucs)} references -> {out}")


def _cmd_knn(args) -> None:
    d, inputs = _load_dataset(args)
    dm = _compute_matrix(d, args)
    res = evaluate.cross_validate(
        dm.values,
        d.labels,
        n_folds=args.folds,
        k=args.k,
        seed=args.seed,
        method=dm.method,
    )
    out = _outdir(args)
    evaluate.write_cv_csv(out / "cv_results.csv", [res])
    evaluate.write_summary_json(
        out / "summary.json",
        {
            "method": res.method,
            "k": args.k,
            "folds": args.folds,
            "seed": args.seed,
            "fold_accuracies": [float(a) for a in res.fold_accuracies],
            "mean": res.mean,
            "stdev": res.stdev,
        },
    )
    _write_run_records(args, inputs, out)
    print(
        f"{res.method} {args.folds}-fold {args.k}-NN: "
        f"{res.mean:.2f} +- {res.stdev:.2f} -> {out}"
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        lr_late=args.lr_late,
        lr_switch_epoch=args.lr_switch_epoch,
        dropout=args.dropout,
        augment=args.augment,
        mix_clean=args.mix_clean,
        t_bound=args.t_bound,
        s_bound=args.s_bound,
        theta_bound=args.theta_bound,
        seed=args.seed,
    )


def _cmd_train(args) -> None:
    d, inputs = _load_dataset(args)
    cfg = _train_config(args)
    net_cfg = NetConfig(classes=len(d.class_names), self_loops=args.self_loops)
    r = splinenet.max_offset(d.graphs)
    net = splinenet.init_net(net_cfg, seed=args.seed, r_norm=r)
    trace = splinenet.train(net, d.graphs, d.labels, cfg)
    out = _outdir(args)
    splinenet.save_checkpoint(net, out / "checkpoint.bin")
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "accuracy"])
        for e, (lo, ac) in enumerate(zip(trace.loss, trace.accuracy)):
            w.writerow([e, repr(float(lo)), repr(float(ac))])
    _write_run_records(args, inputs, out)
    print(
        f"trained {args.epochs} epochs on {len(d)} graphs: "
        f"final loss {trace.loss[-1]:.4f}, accuracy {trace.accuracy[-1] * 100:.2f} -> {out}"
    )


def _cmd_predict(args) -> None:
    d, inputs = _load_dataset(args)
    net = splinenet.load_checkpoint(args.checkpoint)
    if net.config.classes != len(d.class_names):
        raise ValueError(
            f"checkpoint has {net.config.classes} classes, dataset has "
            f"{len(d.class_names)}"
        )
    inputs = dict(inputs)
    inputs["checkpoint"] = _sha256(Path(args.checkpoint))
    pred, probs = splinenet.predict(net, d.graphs)
    labels = d.labels
    out = _outdir(args)
    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_id", "predicted", "actual", "confidence"])
        for g, p, a, row in zip(d.graphs, pred, labels, probs):
            w.writerow(
                [g.graph_id, d.class_names[p], d.class_names[a], repr(float(row[p]))]
            )
    acc = float((pred == labels).mean() * 100.0)
    evaluate.write_summary_json(
        out / "summary.json", {"n": len(d), "accuracy": acc}
    )
    _write_run_records(args, inputs, out)
    print(f"predicted {len(d)} graphs, accuracy {acc:.2f} -> {out}")


def _cmd_bench(args) -> None:
    d, inputs = _load_dataset(args)
    fractions = [int(tok) for tok in args.fractions.replace(",", " ").split()]
    if any(not 0 < f <= 100 for f in fractions):
        raise UsageError(f"fractions must lie in (0, 100], got {fractions}")
    records = []
    if args.suite in ("ged", "both"):
        records += evaluate.bench_ged_scaling(
            d.graphs,
            d.labels,
            cm=_cost_model(args),
            fractions=fractions,
            seed=args.seed,
            k=args.k,
            repeats=args.repeats,
        )
    if args.suite in ("net", "both"):
        net_cfg = NetConfig(classes=len(d.class_names), self_loops=args.self_loops)
        cfg = replace(TrainConfig(), epochs=args.epochs, seed=args.seed)
        records += evaluate.bench_network(
            d.graphs,
            d.labels,
            net_cfg,
            cfg,
            fractions=fractions,
            seed=args.seed,
            repeats=args.repeats,
        )
    out = _outdir(args)
    evaluate.write_bench_csv(out / "bench.csv", records)
    summary = {"records": [asdict(r) for r in records], "linear_r2": {}}
    lines = []
    for method in sorted({r.method for r in records}):
        mine = [r for r in records if r.method == method]
        if len(mine) >= 2:
            r2 = evaluate.linear_r2(
                [r.n_train for r in mine], [r.mean_ms for r in mine]
            )
            summary["linear_r2"][method] = r2
            per_pair = mine[-1].mean_ms / (mine[-1].n_train * mine[-1].n_test)
            lines.append(f"{method}: R2 {r2:.4f}, {per_pair * 1e3:.2f} us/pair")
    evaluate.write_summary_json(out / "summary.json", summary)
    _write_run_records(args, inputs, out)
    print("; ".join(lines) if lines else f"{len(records)} records", "->", out)


# ---------------------------------------------------------------------------
# parser


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--data",
        default=None,
        help="dataset directory (multi-file layout) or JSON file; "
        "default $WEDGEKIT_DATA, else the built-in reference corpus",
    )
    p.add_argument(
        "--dataset-name",
        default=None,
        help="file basename when the dataset directory holds several corpora",
    )


def _add_cost_args(p: argparse.ArgumentParser) -> None:
    cm = CostModel()
    p.add_argument("--alpha", type=float, default=cm.alpha,
                   help="arrangement-term weight")
    p.add_argument("--del-cost", type=float, default=cm.del_cost,
                   help="vertex deletion/insertion cost D")


def _add_method_args(p: argparse.ArgumentParser, default: str = "apx2") -> None:
    p.add_argument("--method", choices=_METHOD_CHOICES, default=default,
                   help="edit-distance solver")
    p.add_argument("--max-wedges", type=int, default=20,
                   help="combined wedge bound for the exact solver")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="wedgekit",
        description="Wedge-graph edit distances and spline-kernel network "
        "classification, as reproducible runs.",
    )
    root.add_argument("--version", action="version", version=f"wedgekit {__version__}")
    sub = root.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        p.add_argument("--out", default=f"runs/{name}", help="output directory")
        p.set_defaults(func=func)
        _add_data_args(p)
        return p

    p = add("ingest", _cmd_ingest, "Load, validate, and rewrite a dataset.")
    p.add_argument("--format", choices=("json", "tu"), default="json",
                   help="output serialization")

    add("stats", _cmd_stats, "Per-class and corpus-level dataset statistics.")

    p = add("dist", _cmd_dist, "Compute the all-pairs distance matrix.")
    _add_method_args(p)
    _add_cost_args(p)

    p = add("rank", _cmd_rank, "Rank the corpus against reference signs; ROC/AUC.")
    _add_method_args(p)
    _add_cost_args(p)
    p.add_argument("--reference-ids", default=None,
                   help="comma-separated graph ids; default: first instance per class")

    p = add("knn", _cmd_knn, "Cross-validated nearest-neighbor classification.")
    _add_method_args(p)
    _add_cost_args(p)
    p.add_argument("--k", type=int, default=3, help="neighbors per vote")
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds")
    p.add_argument("--seed", type=int, default=0, help="split seed")

    p = add("train", _cmd_train, "Train the spline-kernel network.")
    cfg = TrainConfig()
    p.add_argument("--epochs", type=int, default=cfg.epochs)
    p.add_argument("--batch-size", type=int, default=cfg.batch_size)
    p.add_argument("--lr", type=float, default=cfg.lr, help="initial learning rate")
    p.add_argument("--lr-late", type=float, default=cfg.lr_late,
                   help="learning rate after the switch epoch")
    p.add_argument("--lr-switch-epoch", type=int, default=cfg.lr_switch_epoch)
    p.add_argument("--dropout", type=float, default=cfg.dropout)
    p.add_argument("--t-bound", type=float, default=cfg.t_bound,
                   help="augmentation translation bound T")
    p.add_argument("--s-bound", type=float, default=cfg.s_bound,
                   help="augmentation scaling bound S")
    p.add_argument("--theta-bound", type=float, default=cfg.theta_bound,
                   help="augmentation rotation bound Theta (radians)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--augment", dest="augment", action="store_true", default=cfg.augment,
                   help="train on per-epoch augmented copies")
    p.add_argument("--no-augment", dest="augment", action="store_false",
                   help="train on clean graphs only")
    p.add_argument("--mix-clean", action="store_true", default=cfg.mix_clean,
                   help="train on clean plus augmented copies")
    p.add_argument("--self-loops", action="store_true", default=False,
                   help="include each vertex in its own neighborhood")

    p = add("predict", _cmd_predict, "Classify a dataset with a trained checkpoint.")
    p.add_argument("--checkpoint", required=True, help="checkpoint file from train")

    p = add("bench", _cmd_bench, "Runtime benchmarks at growing training fractions.")
    _add_cost_args(p)
    p.add_argument("--suite", choices=("ged", "net", "both"), default="ged",
                   help="which timings to collect")
    p.add_argument("--fractions", default="25,50,75,100",
                   help="training-set percentages")
    p.add_argument("--repeats", type=int, default=10, help="timed runs per point")
    p.add_argument("--k", type=int, default=3, help="neighbors per vote")
    p.add_argument("--epochs", type=int, default=10,
                   help="epochs per timed training run (net suite)")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--self-loops", action="store_true", default=False)

    return root


def run(argv=None) -> int:
    """Parse argv, execute the subcommand, and map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args)
    except UsageError as e:
        print(f"error: {type(e).__name__}: {e}".replace("\n", "; "), file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary maps errors to exit 1
        print(f"error: {type(e).__name__}: {e}".replace("\n", "; "), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
