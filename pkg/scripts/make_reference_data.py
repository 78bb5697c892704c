"""Materialize the built-in reference corpus to disk.

Writes both serializations (the multi-file benchmark layout and the
single JSON document) plus a stats table, so downstream runs can point
--data at either artifact instead of rebuilding the generator.
"""

import argparse
from pathlib import Path

from wedgekit.dataset import compute_stats, write_json
from wedgekit.refcorpus import CORPUS_NAME, build_reference_dataset, write_reference_corpus


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = build_reference_dataset()
    write_reference_corpus(out)
    write_json(d, out / f"{CORPUS_NAME}.json")

    stats = compute_stats(d)
    print(f"{stats.total_graphs} graphs, {stats.total_vertices} vertices, "
          f"{stats.total_edges} edges -> {out}")
    print(f"{'class':>6} {'graphs':>6} {'vertices':>8} {'edges':>6}")
    for c in stats.classes:
        print(f"{c.name:>6} {c.n_graphs:>6} {c.n_vertices:>8} {c.n_edges:>6}")


if __name__ == "__main__":
    main()
