"""Retrieval ranking of the corpus against one reference per class.

For both assignment heuristics this ranks all other graphs by distance
to each class reference, writes the ROC curve per reference, and
reports the per-class AUC plus how many references rank their class
perfectly. The expectation is that the costlier heuristic wins on the
arrangement-discriminated classes and never loses elsewhere.
"""

import argparse
from pathlib import Path

import numpy as np

from wedgekit import evaluate
from wedgekit.editdist import apx_matrices
from wedgekit.refcorpus import build_reference_dataset, reference_ids


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/ranking", help="output directory")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = build_reference_dataset()
    labels = np.asarray(d.labels)
    refs = reference_ids(d)
    dm1, dm2 = apx_matrices(d.graphs)

    summary = {}
    print(f"{'class':>6} {'APX1 AUC':>9} {'APX2 AUC':>9}")
    for method, dm in (("APX1", dm1), ("APX2", dm2)):
        aucs = {}
        for ref in refs:
            curve = evaluate.rank_and_roc(dm.values, labels, ref)
            sign = d.graphs[ref].class_label
            aucs[sign] = curve.auc
            evaluate.write_roc_csv(out / f"roc_{method.lower()}_{sign}.csv", curve)
        summary[method] = aucs
    for sign in d.class_names:
        print(f"{sign:>6} {summary['APX1'][sign]:9.4f} {summary['APX2'][sign]:9.4f}")
    perfect = {m: sum(1 for a in aucs.values() if a >= 1.0) for m, aucs in summary.items()}
    evaluate.write_summary_json(out / "summary.json", {"aucs": summary, "perfect": perfect})
    print(f"perfect rankings: APX1 {perfect['APX1']}/30, APX2 {perfect['APX2']}/30 -> {out}")


if __name__ == "__main__":
    main()
