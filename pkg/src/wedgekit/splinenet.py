"""Spline-kernel graph convolutional classifier for wedge graphs.

Vertices carry only a type encoding; geometry enters through per-edge
pseudo-coordinates, the normalized position offset between endpoints.
Each convolution weights its kernel by a degree-1 B-spline basis
evaluated at those coordinates, so a kernel is a small grid of control
values per channel pair and every edge activates at most four of them.
Three convolutions (widths 32, 64, 64, ELU) feed a mean pool over
vertices, dropout, and a dense softmax layer over sign classes.

Training follows the protocol the defaults encode: Adam, minibatches of
32, 300 epochs with a tenfold learning-rate drop after 200, and fresh
geometric augmentation of every training graph each epoch (rotation,
then anisotropic scale, then per-vertex jitter). ``train_ensemble``
fits several independently initialized replicas in one pass, vectorized
over the replica axis; that is how the cross-validation experiments run
many seeds per fold in tolerable time on one core.

All randomness flows through named streams of one master seed (see
``wedgekit.seeding``), so traces and checkpoints are bit-reproducible.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .graph import CuneiformGraph
from .seeding import STREAM_AUG, STREAM_DROPOUT, STREAM_INIT, STREAM_SHUFFLE, stream_rng

__all__ = [
    "NetConfig",
    "TrainConfig",
    "TrainTrace",
    "SplineNet",
    "DegenerateNormalization",
    "IsolatedVertex",
    "ShapeMismatch",
    "LabelOutOfRange",
    "EmptyTrainingSet",
    "input_features",
    "max_offset",
    "pseudo_coords",
    "bspline_basis",
    "conv_forward",
    "init_net",
    "augment",
    "forward",
    "predict",
    "predict_ensemble",
    "loss_and_grads",
    "train",
    "train_ensemble",
    "save_checkpoint",
    "load_checkpoint",
]

IN_DIM = 8

_MAGIC = b"WKSN"
_CHECKPOINT_VERSION = 1
_PARAM_ORDER = ("conv1", "conv2", "conv3", "dense_w", "dense_b")


def _seed_keys(seed) -> tuple[int, ...]:
    """Seeds are one int or a tuple of ints (e.g. (master, fold, run))."""
    if np.isscalar(seed):
        return (int(seed),)
    return tuple(int(x) for x in seed)


class DegenerateNormalization(ValueError):
    """Offset normalization radius is zero or not finite."""


class IsolatedVertex(ValueError):
    """A vertex has no incoming edge, so convolution is undefined there."""


class ShapeMismatch(ValueError):
    """Tensor shapes or checkpoint layout do not line up."""


class LabelOutOfRange(ValueError):
    """A class label falls outside [0, classes)."""


class EmptyTrainingSet(ValueError):
    """An operation that needs at least one graph received none."""


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters.

    widths are the three convolution output widths; grid is the number
    of spline control values per pseudo-coordinate axis (so each kernel
    holds grid**2 control values per channel pair). self_loops adds one
    self-edge per vertex at the neutral coordinate (0.5, 0.5).
    """

    widths: tuple[int, int, int] = (32, 64, 64)
    classes: int = 30
    grid: int = 5
    self_loops: bool = False

    def __post_init__(self):
        if len(self.widths) != 3 or any(w < 1 for w in self.widths):
            raise ShapeMismatch(f"widths must be three positive ints, got {self.widths}")
        if self.classes < 2:
            raise ShapeMismatch(f"need at least 2 classes, got {self.classes}")
        if self.grid < 2:
            raise ShapeMismatch(f"grid must be >= 2, got {self.grid}")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization and augmentation hyperparameters.

    The learning rate is lr until lr_switch_epoch, lr_late afterwards.
    When augment is set, every training graph is re-augmented at each
    epoch; the clean copy is replaced unless mix_clean is also set, in
    which case both copies are used. t_bound, s_bound and theta_bound
    are the per-vertex translation, anisotropic scale and rotation
    limits of one augmentation draw. compute_dtype is the internal
    arithmetic dtype of the trainer; parameters are kept in float64
    outside of training either way.
    """

    epochs: int = 300
    batch_size: int = 32
    lr: float = 0.01
    lr_late: float = 0.001
    lr_switch_epoch: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    dropout: float = 0.5
    augment: bool = True
    mix_clean: bool = False
    t_bound: float = 0.1
    s_bound: float = 1.4
    theta_bound: float = 0.6
    seed: "int | tuple[int, ...]" = 0
    compute_dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.s_bound < 1.0:
            raise ValueError(f"s_bound must be >= 1 so [1/s, s] is an interval, got {self.s_bound}")
        if self.t_bound < 0.0 or self.theta_bound < 0.0:
            raise ValueError("t_bound and theta_bound must be nonnegative")
        if self.compute_dtype not in ("float32", "float64"):
            raise ValueError(f"compute_dtype must be float32 or float64, got {self.compute_dtype}")


@dataclass
class TrainTrace:
    """Per-epoch training loss and accuracy of one replica."""

    loss: np.ndarray
    accuracy: np.ndarray


@dataclass
class SplineNet:
    """A trained or trainable classifier instance.

    params holds conv1..conv3 kernels of shape (grid**2, in, out), the
    dense weight (widths[2], classes) and bias (classes,), all float64.
    r_norm is the offset normalization radius fixed on the training
    fold. seed records the initialization stream.
    """

    config: NetConfig
    seed: "int | tuple[int, ...]"
    r_norm: float
    params: dict[str, np.ndarray] = field(repr=False)


# ---------------------------------------------------------------------------
# elementary ops


def input_features(g: CuneiformGraph) -> np.ndarray:
    """(|V|, 8) float64 one-hot-in-{-1,+1} type encoding.

    Slots 0..3 flag the point type, slots 4..6 the glyph type, slot 7
    is a constant +1. A depth vertex of a vertical wedge encodes as
    (+1, -1, -1, -1, +1, -1, -1, +1).
    """
    n = g.n_vertices
    f = np.full((n, IN_DIM), -1.0, dtype=np.float64)
    f[np.arange(n), g.point_types] = 1.0
    f[np.arange(n), 4 + g.glyph_types] = 1.0
    f[:, 7] = 1.0
    return f


def max_offset(graphs: Sequence[CuneiformGraph]) -> float:
    """Largest absolute offset component over all edges of all graphs.

    This is the normalization radius R fixed on a training fold; test
    graphs whose offsets exceed it saturate at the grid boundary.
    """
    if len(graphs) == 0:
        raise EmptyTrainingSet("cannot derive a normalization radius from zero graphs")
    r = 0.0
    for g in graphs:
        pos = g.positions
        e = g.edge_array
        off = pos[e[:, 1]] - pos[e[:, 0]]
        if off.size:
            r = max(r, float(np.abs(off).max()))
    return r


def _check_radius(r: float) -> float:
    if not np.isfinite(r) or r <= 0.0:
        raise DegenerateNormalization(f"normalization radius must be finite and > 0, got {r}")
    return float(r)


def _normalize_offsets(off: np.ndarray, r: float) -> np.ndarray:
    u = off / (2.0 * _check_radius(r)) + 0.5
    return np.clip(u, 0.0, 1.0)


def pseudo_coords(g: CuneiformGraph, r: float) -> np.ndarray:
    """(|E|, 2) coordinates u = (p_dst - p_src) / (2r) + 0.5 in [0, 1].

    Rows follow g.edge_array order. A zero offset (self loop) maps to
    the grid center (0.5, 0.5).
    """
    e = g.edge_array
    off = g.positions[e[:, 1]] - g.positions[e[:, 0]]
    return _normalize_offsets(off, r)


def _basis_2d(u: np.ndarray, grid: int):
    """Cells and weights of the degree-1 tensor-product B-spline basis.

    u has shape (..., 2) with entries in [0, 1]. Returns int64 cells
    (..., 4) indexing the flattened grid (cell = cy * grid + cx) and
    float64 weights (..., 4). Weights are nonnegative and sum to 1; a
    coordinate sitting exactly on a knot activates a single cell per
    axis.
    """
    m = grid - 1
    x = u * m
    ix = np.minimum(x.astype(np.int64), m - 1)
    t = x - ix
    tx, ty = t[..., 0], t[..., 1]
    cx, cy = ix[..., 0], ix[..., 1]
    cells = np.stack(
        [
            cy * grid + cx,
            cy * grid + cx + 1,
            (cy + 1) * grid + cx,
            (cy + 1) * grid + cx + 1,
        ],
        axis=-1,
    )
    w = np.stack(
        [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty],
        axis=-1,
    )
    return cells, w


def bspline_basis(u: np.ndarray, grid: int = 5):
    """Public wrapper around the basis evaluation, validating its input."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim < 1 or u.shape[-1] != 2:
        raise ShapeMismatch(f"coordinates must have trailing dimension 2, got {u.shape}")
    if u.size and (u.min() < -1e-12 or u.max() > 1.0 + 1e-12):
        raise ShapeMismatch("pseudo-coordinates must lie in [0, 1]")
    return _basis_2d(np.clip(u, 0.0, 1.0), grid)


def _in_degrees(dst: np.ndarray, n: int) -> np.ndarray:
    deg = np.bincount(dst, minlength=n)
    if (deg == 0).any():
        bad = int(np.flatnonzero(deg == 0)[0])
        raise IsolatedVertex(f"vertex {bad} has no incoming edge")
    return deg.astype(np.float64)


def conv_forward(
    features: np.ndarray,
    edges: np.ndarray,
    coords: np.ndarray,
    kernel: np.ndarray,
) -> np.ndarray:
    """One spline convolution: out_i = mean over in-edges of B(u) * K * f_src.

    features (n, l), edges (e, 2) as (src, dst) pairs, coords (e, 2) in
    [0, 1], kernel (grid**2, l, o). The mean runs over the in-edges of
    each vertex, so every vertex needs at least one. With a constant
    kernel c the output collapses to c times the mean summed feature of
    the in-neighborhood, which is the cheap sanity oracle used in tests.
    """
    features = np.asarray(features, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.int64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeMismatch(f"features must be (n, l), got {features.shape}")
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise ShapeMismatch(f"edges must be (e, 2), got {edges.shape}")
    if kernel.ndim != 3 or kernel.shape[1] != features.shape[1]:
        raise ShapeMismatch(f"kernel {kernel.shape} does not match feature width {features.shape[1]}")
    grid = round(kernel.shape[0] ** 0.5)
    if grid * grid != kernel.shape[0] or grid < 2:
        raise ShapeMismatch(f"kernel leading dim {kernel.shape[0]} is not a square grid")
    n, l = features.shape
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ShapeMismatch("edge endpoint out of range")
    cells, w = bspline_basis(coords, grid)
    if cells.shape[0] != edges.shape[0]:
        raise ShapeMismatch("coords and edges disagree on edge count")
    deg = _in_degrees(edges[:, 1], n)
    b = grid * grid
    p = np.zeros((n * b, l), dtype=np.float64)
    key = edges[:, 1, None] * b + cells
    np.add.at(p, key.ravel(), (features[edges[:, 0], None, :] * w[:, :, None]).reshape(-1, l))
    out = p.reshape(n, b * l) @ kernel.reshape(b * l, -1)
    return out / deg[:, None]


# ---------------------------------------------------------------------------
# network construction and checkpoints


def _param_shapes(cfg: NetConfig) -> dict[str, tuple[int, ...]]:
    b = cfg.grid * cfg.grid
    w1, w2, w3 = cfg.widths
    return {
        "conv1": (b, IN_DIM, w1),
        "conv2": (b, w1, w2),
        "conv3": (b, w2, w3),
        "dense_w": (w3, cfg.classes),
        "dense_b": (cfg.classes,),
    }


def init_net(config: NetConfig, seed: int, r_norm: float) -> SplineNet:
    """Fresh network with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights.

    fan_in is the input channel count of each tensor (the bias uses the
    dense fan-in). r_norm must be the max_offset of the training fold.
    """
    _check_radius(r_norm)
    rng = stream_rng(*_seed_keys(seed), STREAM_INIT)
    fan = {
        "conv1": IN_DIM,
        "conv2": config.widths[0],
        "conv3": config.widths[1],
        "dense_w": config.widths[2],
        "dense_b": config.widths[2],
    }
    params = {}
    for name, shape in _param_shapes(config).items():
        bound = 1.0 / np.sqrt(fan[name])
        params[name] = rng.uniform(-bound, bound, size=shape)
    keys = _seed_keys(seed)
    return SplineNet(
        config=config,
        seed=keys[0] if len(keys) == 1 else keys,
        r_norm=float(r_norm),
        params=params,
    )


def save_checkpoint(net: SplineNet, path) -> None:
    """Write a versioned binary checkpoint (bit-exact round trip)."""
    header = {
        "config": asdict(net.config),
        "seed": net.seed,
        "r_norm": net.r_norm.hex() if isinstance(net.r_norm, float) else float(net.r_norm).hex(),
        "params": [
            {"name": k, "shape": list(net.params[k].shape)} for k in _PARAM_ORDER
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for k in _PARAM_ORDER:
            fh.write(np.ascontiguousarray(net.params[k], dtype="<f8").tobytes())


def load_checkpoint(path) -> SplineNet:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ShapeMismatch(f"{path} is not a spline network checkpoint")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != _CHECKPOINT_VERSION:
            raise ShapeMismatch(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode())
        cfg_d = dict(header["config"])
        cfg_d["widths"] = tuple(cfg_d["widths"])
        config = NetConfig(**cfg_d)
        expected = _param_shapes(config)
        params = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            if expected.get(entry["name"]) != shape:
                raise ShapeMismatch(f"checkpoint tensor {entry['name']}{shape} does not fit {config}")
            raw = fh.read(8 * int(np.prod(shape)))
            params[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if set(params) != set(_PARAM_ORDER):
            raise ShapeMismatch("checkpoint is missing parameter tensors")
    seed = header["seed"]
    return SplineNet(
        config=config,
        seed=tuple(seed) if isinstance(seed, list) else int(seed),
        r_norm=float.fromhex(header["r_norm"]),
        params=params,
    )


# ---------------------------------------------------------------------------
# augmentation


def augment(g: CuneiformGraph, cfg: TrainConfig, rng: np.random.Generator) -> CuneiformGraph:
    """One augmentation draw: rotate, anisotropic scale, per-vertex jitter.

    theta ~ U[-theta_bound, theta_bound] about the origin, then
    (s1, s2) ~ U[1/s_bound, s_bound] per axis, then an independent
    translation ~ U[-t_bound, t_bound] per vertex and axis. With all
    bounds at their identity values the positions are returned bitwise
    unchanged, which pins the draw order.
    """
    pos = g.positions
    theta = rng.uniform(-cfg.theta_bound, cfg.theta_bound)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    scale = rng.uniform(1.0 / cfg.s_bound, cfg.s_bound, size=2)
    shift = rng.uniform(-cfg.t_bound, cfg.t_bound, size=pos.shape)
    return g.with_positions((pos @ rot.T) * scale + shift)


def _augment_positions(pos, vert_starts, cfg, rng):
    """Vectorized equivalent of augment() applied per graph in order."""
    out = np.empty_like(pos)
    for k in range(len(vert_starts) - 1):
        lo, hi = vert_starts[k], vert_starts[k + 1]
        theta = rng.uniform(-cfg.theta_bound, cfg.theta_bound)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        scale = rng.uniform(1.0 / cfg.s_bound, cfg.s_bound, size=2)
        shift = rng.uniform(-cfg.t_bound, cfg.t_bound, size=(hi - lo, 2))
        out[lo:hi] = (pos[lo:hi] @ rot.T) * scale + shift
    return out


# ---------------------------------------------------------------------------
# packed batches

class _Pack:
    """Concatenated arrays for a list of graphs, edges sorted by dst.

    Vertices of graph k occupy the contiguous range
    vert_starts[k]:vert_starts[k+1]; because the sort key is the global
    dst id, the edge ranges stay contiguous per graph as well.
    """

    __slots__ = (
        "n", "e", "n_graphs", "f0", "positions", "src", "dst",
        "deg", "dst_starts", "vert_starts", "edge_starts", "graph_of",
    )

    def __init__(self, graphs: Sequence[CuneiformGraph], self_loops: bool):
        if len(graphs) == 0:
            raise EmptyTrainingSet("no graphs to pack")
        sizes = np.array([g.n_vertices for g in graphs], dtype=np.int64)
        self.n_graphs = len(graphs)
        self.vert_starts = np.concatenate(([0], np.cumsum(sizes)))
        self.n = int(self.vert_starts[-1])
        self.f0 = np.concatenate([input_features(g) for g in graphs], axis=0)
        self.positions = np.concatenate([g.positions for g in graphs], axis=0)
        srcs, dsts = [], []
        for k, g in enumerate(graphs):
            e = g.edge_array
            base = self.vert_starts[k]
            s, d = e[:, 0] + base, e[:, 1] + base
            if self_loops:
                loop = np.arange(base, base + g.n_vertices, dtype=np.int64)
                s, d = np.concatenate([s, loop]), np.concatenate([d, loop])
            srcs.append(s)
            dsts.append(d)
        src = np.concatenate(srcs)
        dst = np.concatenate(dsts)
        order = np.argsort(dst, kind="stable")
        self.src, self.dst = src[order], dst[order]
        self.e = len(self.src)
        counts = np.bincount(self.dst, minlength=self.n)
        if (counts == 0).any():
            bad = int(np.flatnonzero(counts == 0)[0])
            raise IsolatedVertex(f"vertex {bad} has no incoming edge")
        self.deg = counts.astype(np.float64)
        self.dst_starts = np.concatenate(([0], np.cumsum(counts)))[:-1]
        self.edge_starts = np.searchsorted(self.dst, self.vert_starts)
        self.graph_of = np.repeat(np.arange(self.n_graphs), sizes)

    def basis(self, positions: np.ndarray, r: float, grid: int):
        off = positions[self.dst] - positions[self.src]
        return _basis_2d(_normalize_offsets(off, r), grid)


class _BatchView:
    """Edge and vertex arrays of one minibatch, locally renumbered."""

    __slots__ = (
        "n", "n_graphs", "f0", "src", "dst", "inv_deg", "vert_starts",
        "graph_of", "inv_sizes", "cells", "wts", "key_starts", "key_ends",
        "key_uniq", "src_gather", "w_sorted", "src_sorted_starts",
        "src_sorted_ends", "src_sorted_uniq", "dp_gather", "w_src_sorted",
    )


def _make_batch(pack: _Pack, gids, cells_buf, wts_buf, grid: int) -> _BatchView:
    """Slice a pack down to the given graphs.

    cells_buf/wts_buf give the epoch basis per global edge; for mixed
    clean+augmented epochs they are lists aligned with a per-graph
    buffer selector encoded in gids as (graph, buffer) pairs.
    """
    bv = _BatchView()
    if isinstance(gids, tuple):
        gids, bufs = gids
    else:
        bufs = None
    v_slices = [(pack.vert_starts[g], pack.vert_starts[g + 1]) for g in gids]
    e_slices = [(pack.edge_starts[g], pack.edge_starts[g + 1]) for g in gids]
    sizes = np.array([b - a for a, b in v_slices], dtype=np.int64)
    e_sizes = np.array([b - a for a, b in e_slices], dtype=np.int64)
    v_idx = np.concatenate([np.arange(a, b) for a, b in v_slices])
    e_idx = np.concatenate([np.arange(a, b) for a, b in e_slices])
    new_starts = np.concatenate(([0], np.cumsum(sizes)))
    # per-graph shift from global to local vertex ids, expanded per edge
    shift = np.array([pack.vert_starts[g] for g in gids], dtype=np.int64) - new_starts[:-1]
    e_shift = np.repeat(shift, e_sizes)
    bv.n = int(new_starts[-1])
    bv.n_graphs = len(gids)
    bv.f0 = pack.f0[v_idx]
    bv.src = pack.src[e_idx] - e_shift
    bv.dst = pack.dst[e_idx] - e_shift
    bv.inv_deg = (1.0 / pack.deg[v_idx])[:, None]
    bv.vert_starts = new_starts
    bv.graph_of = np.repeat(np.arange(len(gids)), sizes)
    bv.inv_sizes = (1.0 / sizes.astype(np.float64))[:, None]
    if bufs is None:
        bv.cells = cells_buf[e_idx]
        bv.wts = wts_buf[e_idx]
    else:
        bv.cells = np.concatenate(
            [cells_buf[f][a:b] for f, (a, b) in zip(bufs, e_slices)]
        )
        bv.wts = np.concatenate(
            [wts_buf[f][a:b] for f, (a, b) in zip(bufs, e_slices)]
        )

    b = grid * grid
    key = (bv.dst[:, None] * b + bv.cells).ravel()
    src_rep = np.repeat(bv.src, 4)
    w_flat = bv.wts.ravel()
    perm = np.argsort(key, kind="stable")
    ks = key[perm]
    first = np.empty(len(ks), dtype=bool)
    first[0] = True
    np.not_equal(ks[1:], ks[:-1], out=first[1:])
    bv.key_starts = np.flatnonzero(first)
    bv.key_ends = np.append(bv.key_starts[1:], len(ks))
    bv.key_uniq = ks[bv.key_starts]
    bv.src_gather = src_rep[perm]
    bv.w_sorted = w_flat[perm]
    # scatter-by-source layout for the backward pass
    perm2 = np.argsort(src_rep, kind="stable")
    ss = src_rep[perm2]
    first2 = np.empty(len(ss), dtype=bool)
    first2[0] = True
    np.not_equal(ss[1:], ss[:-1], out=first2[1:])
    bv.src_sorted_starts = np.flatnonzero(first2)
    bv.src_sorted_ends = np.append(bv.src_sorted_starts[1:], len(ss))
    bv.src_sorted_uniq = ss[bv.src_sorted_starts]
    bv.dp_gather = key[perm2]
    bv.w_src_sorted = w_flat[perm2]
    return bv


# ---------------------------------------------------------------------------
# forward / backward core (replica axis leading)


def _elu(z):
    # expm1 evaluated only on the clamped branch to avoid overflow noise
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z):
    return np.where(z > 0, z.dtype.type(1.0), np.exp(np.minimum(z, 0.0)))


@njit(cache=True)
def _seg_weighted_gather(a, idx, w, starts, ends, rows, out):
    """out[s, rows[r], :] += sum over segment r of w[j] * a[s, idx[j], :].

    Fused gather / weight / segment-sum used by both convolution
    scatter directions; plain loops so float32 accumulation order is
    fixed and runs stay bit-reproducible.
    """
    n_s, _, n_c = a.shape
    for s in range(n_s):
        for r in range(rows.shape[0]):
            row = rows[r]
            for j in range(starts[r], ends[r]):
                src = idx[j]
                ww = w[j]
                for c in range(n_c):
                    out[s, row, c] += ww * a[s, src, c]


@njit(cache=True)
def _seg_mean(a, starts, ends, inv, out):
    """out[s, r, :] = inv[r] * sum of a[s, starts[r]:ends[r], :]."""
    n_s, _, n_c = a.shape
    for s in range(n_s):
        for r in range(starts.shape[0]):
            for j in range(starts[r], ends[r]):
                for c in range(n_c):
                    out[s, r, c] += a[s, j, c]
            for c in range(n_c):
                out[s, r, c] *= inv[r]


def _scatter_p(bv: _BatchView, a, w_col, b: int, dtype):
    """Dense (S, n*b, l) basis-weighted aggregation of vertex features."""
    s, _, l = a.shape
    p = np.zeros((s, bv.n * b, l), dtype=dtype)
    _seg_weighted_gather(a, bv.src_gather, w_col, bv.key_starts, bv.key_ends, bv.key_uniq, p)
    return p


def _forward_core(stacked, bv: _BatchView, grid: int, mask, dtype):
    """Forward pass for S stacked replicas on one batch.

    Returns (logits, cache). mask is the inverted-dropout multiplier on
    the pooled vector, or None to skip dropout.
    """
    b = grid * grid
    w_col = np.ascontiguousarray(bv.w_sorted, dtype=dtype)
    f0 = np.ascontiguousarray(bv.f0, dtype=dtype)
    inv_deg = bv.inv_deg.astype(dtype)
    inv_sizes = np.ascontiguousarray(bv.inv_sizes[:, 0], dtype=dtype)

    cache = {"z": [], "p": []}
    a = f0[None]
    for layer, name in enumerate(("conv1", "conv2", "conv3")):
        k = stacked[name]
        s, _, l, o = k.shape
        p = _scatter_p(bv, a, w_col, b, dtype).reshape(-1, bv.n, b * l)
        z = np.matmul(p, k.reshape(s, b * l, o)) * inv_deg[None]
        a = _elu(z)
        cache["p"].append(p)
        cache["z"].append(z)

    pooled = np.zeros((a.shape[0], bv.n_graphs, a.shape[2]), dtype=dtype)
    _seg_mean(a, bv.vert_starts[:-1], bv.vert_starts[1:], inv_sizes, pooled)
    if mask is not None:
        pooled = pooled * mask
    logits = np.matmul(pooled, stacked["dense_w"]) + stacked["dense_b"][:, None, :]
    cache["pooled"] = pooled
    cache["mask"] = mask
    return logits, cache


def _softmax_loss(logits, labels):
    """Mean cross entropy per replica plus probabilities (stable form)."""
    zmax = logits.max(axis=-1, keepdims=True)
    ez = np.exp(logits - zmax)
    lse = zmax + np.log(ez.sum(axis=-1, keepdims=True))
    probs = np.exp(logits - lse)
    picked = np.take_along_axis(logits, labels[None, :, None], axis=-1)
    loss = (lse - picked).mean(axis=(1, 2))
    return loss, probs


def _backward_core(stacked, bv: _BatchView, grid: int, cache, probs, labels, dtype):
    """Gradients of the mean cross entropy for all replicas."""
    b = grid * grid
    s = probs.shape[0]
    n_graphs = probs.shape[1]
    w_src = np.ascontiguousarray(bv.w_src_sorted, dtype=dtype)
    inv_deg = bv.inv_deg.astype(dtype)

    dlogits = probs.copy()
    dlogits[:, np.arange(n_graphs), labels] -= 1.0
    dlogits *= dtype.type(1.0 / n_graphs)

    pooled = cache["pooled"]
    grads = {
        "dense_w": np.matmul(pooled.transpose(0, 2, 1), dlogits),
        "dense_b": dlogits.sum(axis=1),
    }
    dpooled = np.matmul(dlogits, stacked["dense_w"].transpose(0, 2, 1))
    if cache["mask"] is not None:
        dpooled = dpooled * cache["mask"]
    da = (dpooled * bv.inv_sizes[None].astype(dtype))[:, bv.graph_of, :]

    for layer, name in zip((2, 1, 0), ("conv3", "conv2", "conv1")):
        k = stacked[name]
        _, _, l, o = k.shape
        dzn = da * _elu_grad(cache["z"][layer]) * inv_deg[None]
        p = cache["p"][layer]
        grads[name] = np.matmul(p.transpose(0, 2, 1), dzn).reshape(s, b, l, o)
        if layer == 0:
            break
        dp = np.matmul(dzn, k.reshape(s, b * l, o).transpose(0, 2, 1))
        dp = np.ascontiguousarray(dp).reshape(s, bv.n * b, l)
        da = np.zeros((s, bv.n, l), dtype=dtype)
        _seg_weighted_gather(
            dp, bv.dp_gather, w_src,
            bv.src_sorted_starts, bv.src_sorted_ends, bv.src_sorted_uniq, da,
        )
    return grads


def _stack_params(nets: Sequence[SplineNet], dtype) -> dict[str, np.ndarray]:
    return {
        k: np.stack([net.params[k] for net in nets]).astype(dtype)
        for k in _PARAM_ORDER
    }


def _check_labels(labels, n_graphs: int, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n_graphs,):
        raise ShapeMismatch(f"expected {n_graphs} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        bad = labels[(labels < 0) | (labels >= classes)][0]
        raise LabelOutOfRange(f"label {bad} outside [0, {classes})")
    return labels


# ---------------------------------------------------------------------------
# public inference and loss


def _forward_graphs(net_or_nets, graphs, rng=None, dropout=0.5):
    nets = net_or_nets if isinstance(net_or_nets, (list, tuple)) else [net_or_nets]
    cfg = nets[0].config
    for other in nets[1:]:
        if other.config != cfg or other.r_norm != nets[0].r_norm:
            raise ShapeMismatch("ensemble members disagree on architecture or radius")
    pack = _Pack(graphs, cfg.self_loops)
    cells, wts = pack.basis(pack.positions, nets[0].r_norm, cfg.grid)
    bv = _make_batch(pack, list(range(pack.n_graphs)), cells, wts, cfg.grid)
    stacked = _stack_params(nets, np.float64)
    mask = None
    if rng is not None and dropout > 0.0:
        keep = 1.0 - dropout
        mask = (rng.random((len(nets), pack.n_graphs, cfg.widths[2])) < keep) / keep
    logits, cache = _forward_core(stacked, bv, cfg.grid, mask, np.dtype(np.float64))
    return logits, cache, bv, stacked


def forward(net: SplineNet, g: CuneiformGraph, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Class probabilities for one graph (dropout only if rng is given)."""
    logits, _, _, _ = _forward_graphs(net, [g], rng=rng)
    _, probs = _softmax_loss(logits, np.zeros(1, dtype=np.int64))
    return probs[0, 0]


def predict(net: SplineNet, graphs: Sequence[CuneiformGraph]):
    """(labels, probs) for a batch of graphs, deterministic."""
    logits, _, _, _ = _forward_graphs(net, graphs)
    _, probs = _softmax_loss(logits, np.zeros(len(graphs), dtype=np.int64))
    return probs[0].argmax(axis=-1), probs[0]


def predict_ensemble(nets: Sequence[SplineNet], graphs: Sequence[CuneiformGraph]):
    """Per-replica (labels, probs); shapes (S, n) and (S, n, classes)."""
    logits, _, _, _ = _forward_graphs(list(nets), graphs)
    _, probs = _softmax_loss(logits, np.zeros(len(graphs), dtype=np.int64))
    return probs.argmax(axis=-1), probs


def loss_and_grads(
    net: SplineNet,
    graphs: Sequence[CuneiformGraph],
    labels,
    rng: Optional[np.random.Generator] = None,
):
    """Mean cross entropy and analytic parameter gradients (float64).

    Dropout is active only when rng is given; the numerical gradient
    check runs with rng=None so the loss is a deterministic function of
    the parameters.
    """
    if len(graphs) == 0:
        raise EmptyTrainingSet("loss of an empty batch is undefined")
    labels = _check_labels(labels, len(graphs), net.config.classes)
    logits, cache, bv, stacked = _forward_graphs(net, graphs, rng=rng)
    loss, probs = _softmax_loss(logits, labels)
    grads = _backward_core(
        stacked, bv, net.config.grid, cache, probs, labels, np.dtype(np.float64)
    )
    return float(loss[0]), {k: grads[k][0] for k in _PARAM_ORDER}


# ---------------------------------------------------------------------------
# training


def _adam_step(params, m, v, grads, t, lr, cfg: TrainConfig, dtype):
    b1 = dtype.type(cfg.beta1)
    b2 = dtype.type(cfg.beta2)
    eps = dtype.type(cfg.adam_eps)
    c1 = dtype.type(1.0 / (1.0 - cfg.beta1**t))
    c2 = dtype.type(1.0 / (1.0 - cfg.beta2**t))
    lr = dtype.type(lr)
    for k in _PARAM_ORDER:
        g = grads[k]
        m[k] = b1 * m[k] + (1 - b1) * g
        v[k] = b2 * v[k] + (1 - b2) * g * g
        params[k] -= lr * (m[k] * c1) / (np.sqrt(v[k] * c2) + eps)


def train_ensemble(
    nets: Sequence[SplineNet],
    graphs: Sequence[CuneiformGraph],
    labels,
    cfg: TrainConfig,
) -> list[TrainTrace]:
    """Fit all replicas jointly on one training set (updates in place).

    Replicas share the shuffle order and the per-epoch augmentation
    draw; they differ in initialization and in their dropout masks.
    Shuffling, augmentation and dropout each consume a named stream of
    cfg.seed, so a rerun with the same inputs is bit-identical.
    """
    if len(graphs) == 0:
        raise EmptyTrainingSet("cannot train on zero graphs")
    nets = list(nets)
    net_cfg = nets[0].config
    for other in nets[1:]:
        if other.config != net_cfg or other.r_norm != nets[0].r_norm:
            raise ShapeMismatch("ensemble members disagree on architecture or radius")
    labels = _check_labels(labels, len(graphs), net_cfg.classes)
    dtype = np.dtype(cfg.compute_dtype)
    s = len(nets)

    pack = _Pack(graphs, net_cfg.self_loops)
    cells_clean, wts_clean = pack.basis(pack.positions, nets[0].r_norm, net_cfg.grid)

    params = _stack_params(nets, dtype)
    m = {k: np.zeros_like(p) for k, p in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    skeys = _seed_keys(cfg.seed)
    rng_shuffle = stream_rng(*skeys, STREAM_SHUFFLE)
    rng_aug = stream_rng(*skeys, STREAM_AUG)
    rng_drop = stream_rng(*skeys, STREAM_DROPOUT)

    n_graphs = pack.n_graphs
    keep = 1.0 - cfg.dropout
    losses = np.zeros((s, cfg.epochs))
    hits = np.zeros((s, cfg.epochs))
    t = 0

    for epoch in range(cfg.epochs):
        lr = cfg.lr if epoch < cfg.lr_switch_epoch else cfg.lr_late
        if cfg.augment:
            pos = _augment_positions(pack.positions, pack.vert_starts, cfg, rng_aug)
            cells_aug, wts_aug = pack.basis(pos, nets[0].r_norm, net_cfg.grid)
            if cfg.mix_clean:
                order = rng_shuffle.permutation(2 * n_graphs)
            else:
                order = rng_shuffle.permutation(n_graphs)
        else:
            order = rng_shuffle.permutation(n_graphs)

        seen = 0
        for lo in range(0, len(order), cfg.batch_size):
            chunk = order[lo : lo + cfg.batch_size]
            if cfg.augment and cfg.mix_clean:
                gids = (chunk % n_graphs, chunk // n_graphs)
                bv = _make_batch(
                    pack, (list(gids[0]), list(gids[1])),
                    [cells_clean, cells_aug], [wts_clean, wts_aug], net_cfg.grid,
                )
                blabels = labels[gids[0]]
            elif cfg.augment:
                bv = _make_batch(pack, list(chunk), cells_aug, wts_aug, net_cfg.grid)
                blabels = labels[chunk]
            else:
                bv = _make_batch(pack, list(chunk), cells_clean, wts_clean, net_cfg.grid)
                blabels = labels[chunk]

            mask = None
            if cfg.dropout > 0.0:
                draw = rng_drop.random((s, bv.n_graphs, net_cfg.widths[2]))
                mask = ((draw < keep) / keep).astype(dtype)

            logits, cache = _forward_core(params, bv, net_cfg.grid, mask, dtype)
            loss, probs = _softmax_loss(logits, blabels)
            grads = _backward_core(
                params, bv, net_cfg.grid, cache, probs, blabels, dtype
            )
            t += 1
            _adam_step(params, m, v, grads, t, lr, cfg, dtype)

            bsz = bv.n_graphs
            losses[:, epoch] += np.asarray(loss, dtype=np.float64) * bsz
            hits[:, epoch] += (logits.argmax(axis=-1) == blabels[None]).sum(axis=1)
            seen += bsz
        losses[:, epoch] /= seen
        hits[:, epoch] /= seen

    for i, net in enumerate(nets):
        net.params = {k: params[k][i].astype(np.float64) for k in _PARAM_ORDER}
    return [TrainTrace(loss=losses[i].copy(), accuracy=hits[i].copy()) for i in range(s)]


def train(
    net: SplineNet,
    graphs: Sequence[CuneiformGraph],
    labels,
    cfg: TrainConfig,
) -> TrainTrace:
    """Fit one network in place, returning its per-epoch trace."""
    return train_ensemble([net], graphs, labels, cfg)[0]
