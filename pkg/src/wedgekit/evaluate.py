"""Evaluation harness: retrieval ranking, cross-validation, benchmarks.

Everything here works on plain arrays so the same code paths serve the
edit-distance methods (via precomputed distance matrices) and the
network (via its predicted labels). Randomness is limited to fold
assignment and benchmark splits, both drawn from named streams of one
master seed, so a rerun reproduces every split exactly.

Conventions used throughout: distances tie-break toward the lower
graph id, k-NN votes tie-break toward the class of the nearest member
among the tied classes, accuracies are percentages, and ROC curves
start at (0, 0) and end at (1, 1) with the area computed by the
trapezoidal rule.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import splinenet
from .editdist import CostModel, cross_apx_matrices
from .graph import CuneiformGraph
from .seeding import STREAM_BENCH, STREAM_SPLITS, stream_rng
from .splinenet import EmptyTrainingSet, NetConfig, TrainConfig, _seed_keys

__all__ = [
    "EmptyTrainingSet",
    "TooFewGraphs",
    "UnknownReference",
    "FoldSplit",
    "RocCurve",
    "CvResult",
    "NetCvResult",
    "BenchRecord",
    "make_folds",
    "class_references",
    "rank_and_roc",
    "knn_classify",
    "cross_validate",
    "network_cross_validate",
    "bench_ged_scaling",
    "bench_network",
    "linear_r2",
    "write_roc_csv",
    "write_cv_csv",
    "write_bench_csv",
    "write_summary_json",
]


class TooFewGraphs(ValueError):
    """Not enough graphs for the requested split or statistic."""


class UnknownReference(ValueError):
    """A reference graph id that is not part of the collection."""


def _values(dm) -> np.ndarray:
    return np.asarray(getattr(dm, "values", dm), dtype=np.float64)


# ---------------------------------------------------------------------------
# folds


@dataclass(frozen=True)
class FoldSplit:
    """A seeded partition of range(n) into folds of near-equal size."""

    n: int
    n_folds: int
    fold_of: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def make_folds(n: int, n_folds: int, seed) -> FoldSplit:
    """Disjoint folds covering range(n); sizes differ by at most one."""
    if n_folds < 2:
        raise TooFewGraphs(f"need at least 2 folds, got {n_folds}")
    if n < n_folds:
        raise TooFewGraphs(f"{n} graphs cannot fill {n_folds} folds")
    perm = stream_rng(*_seed_keys(seed), STREAM_SPLITS).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % n_folds
    return FoldSplit(n=n, n_folds=n_folds, fold_of=fold_of)


def class_references(labels) -> np.ndarray:
    """Reference proxy per class: its first instance (lowest graph id)."""
    labels = np.asarray(labels)
    classes = int(labels.max()) + 1
    return np.array([int(np.argmax(labels == c)) for c in range(classes)])


# ---------------------------------------------------------------------------
# ranking and ROC


@dataclass(frozen=True)
class RocCurve:
    """ROC of ranking a collection by distance to one reference graph."""

    reference: int
    ranking: np.ndarray
    points: np.ndarray
    auc: float


def rank_and_roc(dm, labels, reference: int) -> RocCurve:
    """Rank every other graph by distance to the reference, sweep top-k.

    Distance ties order by graph id. Relevant means sharing the
    reference's class. The curve has one point per rank prefix plus the
    origin; its trapezoidal area is 1.0 exactly when every relevant
    graph precedes every irrelevant one, and 0.0 when they all trail.
    """
    d = _values(dm)
    labels = np.asarray(labels)
    n = len(labels)
    if not 0 <= reference < n:
        raise UnknownReference(f"reference {reference} not in [0, {n})")
    others = np.flatnonzero(np.arange(n) != reference)
    order = others[np.lexsort((others, d[reference, others]))]
    rel = labels[order] == labels[reference]
    npos = int(rel.sum())
    nneg = len(order) - npos
    if npos == 0 or nneg == 0:
        raise TooFewGraphs("ROC needs at least one relevant and one irrelevant graph")
    tpr = np.concatenate(([0.0], np.cumsum(rel) / npos))
    fpr = np.concatenate(([0.0], np.cumsum(~rel) / nneg))
    points = np.column_stack([fpr, tpr])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(reference=reference, ranking=order, points=points, auc=auc)


# ---------------------------------------------------------------------------
# k-NN classification


def knn_classify(
    dist,
    train_labels,
    k: int = 3,
    n_classes: Optional[int] = None,
    train_ids=None,
) -> np.ndarray:
    """Majority vote over the k nearest training graphs per query row.

    dist is (queries, train). Distance ties prefer the lower train id;
    a split vote falls to the tied class with the nearest member. The
    outcome depends only on the ordering of each row, so any strictly
    increasing transform of the distances leaves it unchanged.
    """
    dist = _values(dist)
    train_labels = np.asarray(train_labels)
    if dist.ndim != 2 or dist.shape[1] != len(train_labels):
        raise ValueError(f"distance block {dist.shape} does not match {len(train_labels)} labels")
    if len(train_labels) == 0:
        raise EmptyTrainingSet("cannot classify against zero training graphs")
    if not 1 <= k <= len(train_labels):
        raise TooFewGraphs(f"k={k} with {len(train_labels)} training graphs")
    ids = np.arange(len(train_labels)) if train_ids is None else np.asarray(train_ids)
    nc = n_classes if n_classes is not None else int(train_labels.max()) + 1
    out = np.empty(len(dist), dtype=np.int64)
    for q in range(len(dist)):
        order = np.lexsort((ids, dist[q]))[:k]
        votes = np.bincount(train_labels[order], minlength=nc)
        top = votes.max()
        tied = np.flatnonzero(votes == top)
        if len(tied) == 1:
            out[q] = tied[0]
        else:
            tied_set = set(int(c) for c in tied)
            for o in order:
                if int(train_labels[o]) in tied_set:
                    out[q] = train_labels[o]
                    break
    return out


@dataclass(frozen=True)
class CvResult:
    """Per-fold accuracies (percent) of one method plus their moments."""

    method: str
    fold_accuracies: np.ndarray
    mean: float
    stdev: float


def cross_validate(
    dm,
    labels,
    n_folds: int = 10,
    k: int = 3,
    seed=0,
    method: str = "",
) -> CvResult:
    """Seeded k-fold cross-validation of k-NN over a distance matrix."""
    d = _values(dm)
    labels = np.asarray(labels)
    split = make_folds(len(labels), n_folds, seed)
    accs = np.empty(n_folds)
    nc = int(labels.max()) + 1
    for f in range(n_folds):
        test = split.test_indices(f)
        train = split.train_indices(f)
        pred = knn_classify(d[np.ix_(test, train)], labels[train], k=k,
                            n_classes=nc, train_ids=train)
        accs[f] = (pred == labels[test]).mean() * 100.0
    return CvResult(
        method=method,
        fold_accuracies=accs,
        mean=float(accs.mean()),
        stdev=float(accs.std()),
    )


@dataclass(frozen=True)
class NetCvResult:
    """Network cross-validation: one accuracy per (fold, run)."""

    method: str
    run_accuracies: np.ndarray
    mean: float
    stdev: float

    @property
    def fold_accuracies(self) -> np.ndarray:
        return self.run_accuracies.mean(axis=1)


def network_cross_validate(
    graphs: Sequence[CuneiformGraph],
    labels,
    net_config: NetConfig,
    train_config: TrainConfig,
    n_folds: int = 10,
    runs_per_fold: int = 10,
    seed=0,
    method: str = "",
    progress: Optional[Callable[[str], None]] = None,
) -> NetCvResult:
    """Train runs_per_fold independently initialized replicas per fold.

    The offset normalization radius is refit on each training fold.
    Replica r of fold f initializes from stream (seed, f, r); the data
    order, augmentation and dropout streams are keyed by (seed, f), so
    the whole experiment is one seed away from reproducible.
    """
    labels = np.asarray(labels)
    split = make_folds(len(graphs), n_folds, seed)
    accs = np.empty((n_folds, runs_per_fold))
    base = _seed_keys(seed)
    for f in range(n_folds):
        test = split.test_indices(f)
        train = split.train_indices(f)
        tg = [graphs[i] for i in train]
        r = splinenet.max_offset(tg)
        nets = [
            splinenet.init_net(net_config, seed=base + (f, m), r_norm=r)
            for m in range(runs_per_fold)
        ]
        cfg = replace(train_config, seed=base + (f,))
        splinenet.train_ensemble(nets, tg, labels[train], cfg)
        pred, _ = splinenet.predict_ensemble(nets, [graphs[i] for i in test])
        accs[f] = (pred == labels[test][None]).mean(axis=1) * 100.0
        if progress is not None:
            progress(f"fold {f}: {accs[f].mean():.2f} +- {accs[f].std():.2f}")
    return NetCvResult(
        method=method,
        run_accuracies=accs,
        mean=float(accs.mean()),
        stdev=float(accs.std()),
    )


# ---------------------------------------------------------------------------
# runtime benchmarks


@dataclass(frozen=True)
class BenchRecord:
    """Wall time of one operation at one training fraction."""

    method: str
    fraction: int
    mean_ms: float
    stdev_ms: float
    n_train: int
    n_test: int


def _timed(fn, repeats: int, warmup: int) -> tuple[float, float]:
    for _ in range(warmup):
        fn()
    times = np.empty(repeats)
    for i in range(repeats):
        t0 = time.perf_counter()
        fn()
        times[i] = (time.perf_counter() - t0) * 1e3
    return float(times.mean()), float(times.std())


def _bench_split(n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    perm = stream_rng(*_seed_keys(seed), STREAM_BENCH).permutation(n)
    test = np.sort(perm[: n // 2])
    pool = np.sort(perm[n // 2 :])
    return test, pool


def bench_ged_scaling(
    graphs: Sequence[CuneiformGraph],
    labels,
    cm: CostModel = CostModel(),
    methods: Sequence[str] = ("APX1", "APX2"),
    fractions: Sequence[int] = (25, 50, 75, 100),
    seed=0,
    k: int = 3,
    repeats: int = 10,
    warmup: int = 1,
) -> list[BenchRecord]:
    """Time k-NN classification of a fixed half against growing training sets.

    The test half is fixed; the training pool grows through the given
    percentages (nested prefixes, so larger fractions contain smaller
    ones). Each timing covers the rectangular distance block plus the
    vote; the warmup run is discarded.
    """
    labels = np.asarray(labels)
    test, pool = _bench_split(len(graphs), seed)
    test_graphs = [graphs[i] for i in test]
    records = []
    for frac in fractions:
        ntr = max(k, round(len(pool) * frac / 100))
        train = pool[:ntr]
        train_graphs = [graphs[i] for i in train]
        tl = labels[train]
        nc = int(labels.max()) + 1
        for method in methods:
            pick = 0 if method.upper() == "APX1" else 1

            def run():
                block = cross_apx_matrices(test_graphs, train_graphs, cm)[pick]
                knn_classify(block, tl, k=k, n_classes=nc, train_ids=train)

            mean_ms, stdev_ms = _timed(run, repeats, warmup)
            records.append(
                BenchRecord(
                    method=method.upper(),
                    fraction=int(frac),
                    mean_ms=mean_ms,
                    stdev_ms=stdev_ms,
                    n_train=len(train),
                    n_test=len(test),
                )
            )
    return records


def bench_network(
    graphs: Sequence[CuneiformGraph],
    labels,
    net_config: NetConfig,
    train_config: TrainConfig,
    fractions: Sequence[int] = (25, 50, 75, 100),
    seed=0,
    repeats: int = 10,
    warmup: int = 1,
) -> list[BenchRecord]:
    """Time network training and inference separately per fraction.

    Training cost scales with the epoch count of the given config, so
    benchmark configs usually shrink it; inference is timed on the
    fixed test half with a net trained once per fraction.
    """
    labels = np.asarray(labels)
    test, pool = _bench_split(len(graphs), seed)
    test_graphs = [graphs[i] for i in test]
    base = _seed_keys(seed)
    records = []
    for frac in fractions:
        ntr = max(train_config.batch_size, round(len(pool) * frac / 100))
        train = pool[: min(ntr, len(pool))]
        tg = [graphs[i] for i in train]
        tl = labels[train]
        r = splinenet.max_offset(tg)

        def run_train():
            net = splinenet.init_net(net_config, seed=base + (int(frac),), r_norm=r)
            splinenet.train(net, tg, tl, train_config)

        mean_ms, stdev_ms = _timed(run_train, repeats, warmup)
        records.append(BenchRecord("NET-TRAIN", int(frac), mean_ms, stdev_ms, len(train), len(test)))

        net = splinenet.init_net(net_config, seed=base + (int(frac),), r_norm=r)
        splinenet.train(net, tg, tl, train_config)

        def run_infer():
            splinenet.predict(net, test_graphs)

        mean_ms, stdev_ms = _timed(run_infer, repeats, warmup)
        records.append(BenchRecord("NET-INFER", int(frac), mean_ms, stdev_ms, len(train), len(test)))
    return records


def linear_r2(x, y) -> float:
    """Coefficient of determination of the least-squares line y ~ x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2:
        raise TooFewGraphs("need at least two points for a fit")
    coef = np.polynomial.polynomial.polyfit(x, y, 1)
    resid = y - np.polynomial.polynomial.polyval(x, coef)
    ss_tot = ((y - y.mean()) ** 2).sum()
    if ss_tot == 0.0:
        return 1.0
    return float(1.0 - (resid**2).sum() / ss_tot)


# ---------------------------------------------------------------------------
# result files


def write_roc_csv(path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            w.writerow([repr(float(fpr)), repr(float(tpr))])


def write_cv_csv(path, results: Sequence) -> None:
    """Rows of (method, fold, accuracy) for CvResult or NetCvResult."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "fold", "accuracy"])
        for res in results:
            for f, acc in enumerate(res.fold_accuracies):
                w.writerow([res.method, f, repr(float(acc))])


def write_bench_csv(path, records: Sequence[BenchRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "fraction", "mean_ms", "stdev_ms", "n_train", "n_test"])
        for r in records:
            w.writerow([r.method, r.fraction, repr(r.mean_ms), repr(r.stdev_ms), r.n_train, r.n_test])


def write_summary_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
