"""Runtime scaling of distance-based classification and the network.

Times k-NN classification of a fixed half of the corpus while the
training pool grows through 25/50/75/100 percent, then fits a line to
mean time versus training-set size. Distance methods should scale
linearly in the number of comparisons with a per-pair cost in the
microsecond range; network timings are reported for contrast.
"""

import argparse
from pathlib import Path

import numpy as np

from wedgekit import evaluate
from wedgekit.refcorpus import build_reference_dataset
from wedgekit.splinenet import NetConfig, TrainConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/bench", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="split seed")
    ap.add_argument("--repeats", type=int, default=10, help="timed runs per point")
    ap.add_argument("--net", action="store_true", help="also time the network")
    ap.add_argument("--net-epochs", type=int, default=10)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = build_reference_dataset()
    labels = np.asarray(d.labels)

    records = evaluate.bench_ged_scaling(
        list(d.graphs), labels, seed=args.seed, repeats=args.repeats
    )
    if args.net:
        records += evaluate.bench_network(
            list(d.graphs), labels,
            NetConfig(classes=len(d.class_names)),
            TrainConfig(epochs=args.net_epochs),
            seed=args.seed, repeats=max(2, args.repeats // 5),
        )

    evaluate.write_bench_csv(out / "bench.csv", records)
    summary = {"linear_r2": {}, "us_per_pair": {}}
    for method in sorted({r.method for r in records}):
        mine = [r for r in records if r.method == method]
        print(f"{method}:")
        for r in mine:
            print(f"  {r.fraction:3d}% ({r.n_train:3d} train): "
                  f"{r.mean_ms:9.2f} +- {r.stdev_ms:.2f} ms")
        if len(mine) >= 2:
            r2 = evaluate.linear_r2([r.n_train for r in mine], [r.mean_ms for r in mine])
            summary["linear_r2"][method] = r2
            last = mine[-1]
            per_pair = last.mean_ms * 1e3 / (last.n_train * last.n_test)
            summary["us_per_pair"][method] = per_pair
            print(f"  R2 {r2:.4f}, {per_pair:.2f} us/pair at 100%")
    evaluate.write_summary_json(out / "summary.json", summary)
    print(f"-> {out}")


if __name__ == "__main__":
    main()
