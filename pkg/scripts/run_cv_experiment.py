"""Ten-fold cross-validated classification accuracy of every method.

Edit-distance methods classify with 3-NN over the precomputed distance
matrix; the network trains ten independently initialized runs per fold,
once with geometric augmentation and once without. All folds come from
one seed, so the table is reproducible end to end. The full network
protocol takes roughly an hour and a half on one core; trim --runs or
--epochs for a quick look.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from wedgekit import evaluate
from wedgekit.editdist import apx_matrices, distance_matrix
from wedgekit.refcorpus import build_reference_dataset
from wedgekit.splinenet import NetConfig, TrainConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/cv", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="fold/init master seed")
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--runs", type=int, default=10, help="network runs per fold")
    ap.add_argument("--epochs", type=int, default=300)
    ap.add_argument("--exact", action="store_true",
                    help="also run the exact solver (minutes, not seconds)")
    ap.add_argument("--skip-network", action="store_true")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = build_reference_dataset()
    labels = np.asarray(d.labels)
    results = []

    dm1, dm2 = apx_matrices(d.graphs)
    for dm in ((dm1, dm2) if not args.exact else (dm1, dm2, None)):
        if dm is None:
            dm = distance_matrix(d.graphs, method="exact")
        res = evaluate.cross_validate(
            dm.values, labels, n_folds=args.folds, seed=args.seed, method=dm.method
        )
        results.append(res)
        print(f"{res.method:>6}: {res.mean:6.2f} +- {res.stdev:.2f}")

    if not args.skip_network:
        net_cfg = NetConfig(classes=len(d.class_names))
        for augment in (True, False):
            cfg = TrainConfig(epochs=args.epochs, augment=augment)
            tag = "NET-AUG" if augment else "NET-CLEAN"
            t0 = time.time()
            res = evaluate.network_cross_validate(
                list(d.graphs), labels, net_cfg, cfg,
                n_folds=args.folds, runs_per_fold=args.runs,
                seed=args.seed, method=tag,
                progress=lambda line: print(f"  {line}", flush=True),
            )
            results.append(res)
            print(f"{tag:>9}: {res.mean:6.2f} +- {res.stdev:.2f} "
                  f"[{(time.time() - t0) / 60:.1f} min]")

    evaluate.write_cv_csv(out / "cv_results.csv", results)
    evaluate.write_summary_json(
        out / "summary.json",
        {r.method: {"mean": r.mean, "stdev": r.stdev} for r in results},
    )
    print(f"-> {out}")


if __name__ == "__main__":
    main()
