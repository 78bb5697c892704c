"""Graph edit distance between wedge graphs.

Cost model: vertex substitution is the squared Euclidean distance
between same-labelled vertices (+inf across labels), arrangement-edge
substitution is the cosine distance of the two offset vectors weighted
by alpha, and every deleted or inserted element (vertex or directed
edge) costs del_cost. A wedge therefore deletes for 16*del_cost (four
vertices plus twelve clique edges), and each arrangement edge lost with
it for del_cost more.

Three solvers share the model. APX1 solves the wedge-level assignment
problem and reports the optimal assignment cost, ignoring arrangement
edges entirely. APX2 takes that assignment (with the deterministic
tie-break) and prices the full edit path it induces. EXACT minimizes
the full path cost over all wedge mappings by depth-first branch and
bound, seeded with the APX2 path and pruned with the assignment
relaxation as an admissible lower bound.

All three accumulate costs in a fixed order, so repeated runs are
bitwise reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .assignment import _canonicalize, _lapjv
from .graph import CuneiformGraph

INF = np.inf


@dataclass(frozen=True)
class CostModel:
    """alpha weights arrangement substitution, del_cost prices deletions.

    arr_del switches the per-edge charge for arrangement edges lost to
    wedge deletion/insertion between del_cost (True) and zero (False).
    """

    alpha: float = 1000.0
    del_cost: float = 1000.0
    arr_del: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.del_cost < 0:
            raise ValueError("alpha and del_cost must be non-negative")


class SizeBoundExceeded(ValueError):
    """Exact solver refused a pair above its combined wedge bound."""


@dataclass(frozen=True)
class EditPath:
    """A wedge mapping and the cost breakdown of the path it induces.

    mapping[a] is the target wedge of source wedge a, or -1 for
    deletion; target wedges missing from the mapping are insertions.
    zero_vector_pairs counts mapped wedge pairs whose arrangement
    offset degenerated to a zero vector in either graph.
    """

    mapping: np.ndarray
    vertex_mapping: np.ndarray
    sub_cost: float
    arr_sub_cost: float
    del_cost: float
    ins_cost: float
    zero_vector_pairs: int
    total: float


@dataclass(frozen=True)
class WedgeData:
    """Per-graph arrays the distance kernels consume."""

    glyphs: np.ndarray  # (w,) int64
    points: np.ndarray  # (w, 4, 2) float64, point-type order per wedge
    units: np.ndarray  # (w, w, 2) unit offsets between depth points
    norms: np.ndarray  # (w, w) offset lengths

    @property
    def n_wedges(self) -> int:
        return int(self.glyphs.shape[0])


def wedge_data(g: CuneiformGraph) -> WedgeData:
    w = g.n_wedges
    if w == 0:
        return WedgeData(
            np.zeros(0, np.int64),
            np.zeros((0, 4, 2)),
            np.zeros((0, 0, 2)),
            np.zeros((0, 0)),
        )
    glyphs = np.array([int(wd.glyph_type) for wd in g.wedges], dtype=np.int64)
    pos = g.positions
    points = np.stack([pos[list(wd.vertex_ids)] for wd in g.wedges])
    depth = np.ascontiguousarray(points[:, 0, :])
    off = depth[None, :, :] - depth[:, None, :]
    norms = np.sqrt((off**2).sum(axis=-1))
    units = np.zeros_like(off)
    nz = norms > 0
    units[nz] = off[nz] / norms[nz][:, None]
    return WedgeData(
        glyphs,
        np.ascontiguousarray(points),
        np.ascontiguousarray(units),
        np.ascontiguousarray(norms),
    )


# ---------------------------------------------------------------------------
# elementary costs


def vertex_sub_cost(u, v) -> float:
    if u.point_type != v.point_type or u.glyph_type != v.glyph_type:
        return INF
    dx = u.position[0] - v.position[0]
    dy = u.position[1] - v.position[1]
    return dx * dx + dy * dy


def arrangement_sub_cost(x, y, cm: CostModel = CostModel()) -> float:
    """alpha-weighted cosine distance; zero vectors cost alpha (one) or 0 (both)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx = float(np.hypot(x[0], x[1]))
    ny = float(np.hypot(y[0], y[1]))
    if nx == 0.0 and ny == 0.0:
        return 0.0
    if nx == 0.0 or ny == 0.0:
        return cm.alpha
    ux, uy = x / nx, y / ny
    if ux[0] == uy[0] and ux[1] == uy[1]:
        return 0.0
    c = min(1.0, max(-1.0, float(ux[0] * uy[0] + ux[1] * uy[1])))
    return cm.alpha * (1.0 - c)


def wedge_sub_cost(g: CuneiformGraph, i: int, h: CuneiformGraph, j: int) -> float:
    """+inf across glyph types, else the sum of 4 squared point distances."""
    wa, wb = g.wedges[i], h.wedges[j]
    if wa.glyph_type != wb.glyph_type:
        return INF
    pa = g.positions[list(wa.vertex_ids)]
    pb = h.positions[list(wb.vertex_ids)]
    return float(((pa - pb) ** 2).sum())


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _sub_block(gl, pts, s1, w1, s2, w2):
    SC = np.empty((w1, w2), np.float64)
    for a in range(w1):
        for b in range(w2):
            if gl[s1 + a] != gl[s2 + b]:
                SC[a, b] = np.inf
            else:
                acc = 0.0
                for t in range(4):
                    dx = pts[s1 + a, t, 0] - pts[s2 + b, t, 0]
                    dy = pts[s1 + a, t, 1] - pts[s2 + b, t, 1]
                    acc += dx * dx + dy * dy
                SC[a, b] = acc
    return SC


@njit(cache=True, inline="always")
def _pair_cost(U1, N1, U2, N2, a, a2, b, b2, alpha):
    # both directed edges between a mapped wedge pair, 2*alpha*(1 - cos)
    n1 = N1[a, a2]
    n2 = N2[b, b2]
    if n1 == 0.0 and n2 == 0.0:
        return 0.0
    if n1 == 0.0 or n2 == 0.0:
        return 2.0 * alpha
    if U1[a, a2, 0] == U2[b, b2, 0] and U1[a, a2, 1] == U2[b, b2, 1]:
        return 0.0
    c = U1[a, a2, 0] * U2[b, b2, 0] + U1[a, a2, 1] * U2[b, b2, 1]
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return 2.0 * alpha * (1.0 - c)


@njit(cache=True)
def _path_breakdown(mapping, SC, U1, N1, U2, N2, w2, alpha, D16, arr2D):
    """Cost components of one wedge mapping, in canonical order."""
    w1 = mapping.shape[0]
    sub = 0.0
    arr = 0.0
    dl = 0.0
    zeros = 0
    mapped = 0
    for a in range(w1):
        b = mapping[a]
        if b >= 0:
            sub += SC[a, b]
            mapped += 1
        else:
            dl += D16
    for a in range(w1):
        b = mapping[a]
        for a2 in range(a + 1, w1):
            b2 = mapping[a2]
            if b >= 0 and b2 >= 0:
                if N1[a, a2] == 0.0 or N2[b, b2] == 0.0:
                    zeros += 1
                arr += _pair_cost(U1, N1, U2, N2, a, a2, b, b2, alpha)
            else:
                dl += arr2D
    ins = (w2 - mapped) * D16
    ins += arr2D * ((w2 * (w2 - 1)) // 2 - (mapped * (mapped - 1)) // 2)
    total = sub + arr + dl + ins
    return sub, arr, dl, ins, zeros, total


@njit(cache=True)
def _build_eq_matrix(SC, D16):
    n, m = SC.shape
    k = n + m
    M = np.full((k, k), np.inf)
    for i in range(n):
        for j in range(m):
            M[i, j] = SC[i, j]
        M[i, m + i] = D16
    for j in range(m):
        M[n + j, j] = D16
    for i in range(n, k):
        for j in range(m, k):
            M[i, j] = 0.0
    return M


@njit(cache=True)
def _apx_pair(SC, U1, N1, U2, N2, alpha, D16, arr2D):
    """Assignment value (APX1) and induced full path cost (APX2)."""
    n, m = SC.shape
    M = _build_eq_matrix(SC, D16)
    col_of, u, v, ok = _lapjv(M)
    # feasible by construction: the all-delete/insert diagonal is finite
    mx = D16
    for i in range(n):
        for j in range(m):
            c = M[i, j]
            if c != np.inf and c > mx:
                mx = c
    tau = 1e-12 * mx
    if tau < 1e-9:
        tau = 1e-9
    col_of = _canonicalize(M, u, v, col_of, tau)
    k = n + m
    sel = np.empty(k, np.float64)
    for i in range(k):
        sel[i] = M[i, col_of[i]]
    sel.sort()
    apx1v = 0.0
    for i in range(k):
        apx1v += sel[i]
    mapping = np.empty(n, np.int64)
    for i in range(n):
        j = col_of[i]
        mapping[i] = j if j < m else -1
    sub, arr, dl, ins, zeros, total = _path_breakdown(
        mapping, SC, U1, N1, U2, N2, m, alpha, D16, arr2D
    )
    return apx1v, mapping, sub, arr, dl, ins, zeros, total


@njit(cache=True)
def _lap_bound(SC, used, depth, w2, D16):
    """Assignment relaxation over undecided rows and unused columns."""
    w1 = SC.shape[0]
    R = w1 - depth
    A = 0
    for b in range(w2):
        if not used[b]:
            A += 1
    k = R + A
    if k == 0:
        return 0.0
    M = np.full((k, k), np.inf)
    ci = 0
    for b in range(w2):
        if used[b]:
            continue
        for r in range(R):
            M[r, ci] = SC[depth + r, b]
        M[R + ci, ci] = D16
        ci += 1
    for r in range(R):
        M[r, A + r] = D16
    for i in range(R, k):
        for j in range(A, k):
            M[i, j] = 0.0
    col_of, u, v, ok = _lapjv(M)
    total = 0.0
    for i in range(k):
        total += M[i, col_of[i]]
    return total


@njit(cache=True)
def _exact_pair(SC, U1, N1, U2, N2, w2, alpha, D16, arr2D, seed_map, seed_ref):
    """Branch and bound over wedge mappings, seeded with the APX2 path.

    Internal accumulated costs can drift from the canonical breakdown
    order by rounding, so pruning keeps an eps margin and every
    near-best leaf is re-priced with the canonical breakdown before it
    may replace the incumbent.
    """
    w1 = SC.shape[0]
    best_map = seed_map.copy()
    best_ref = seed_ref
    if w1 == 0:
        return best_map, best_ref
    eps = 1e-9 * (abs(best_ref) + 1.0)
    pairs2 = (w2 * (w2 - 1)) // 2

    rowmin = np.zeros(w1 + 1, np.float64)
    for a in range(w1 - 1, -1, -1):
        mn = D16
        for b in range(w2):
            if SC[a, b] < mn:
                mn = SC[a, b]
        rowmin[a] = rowmin[a + 1] + mn

    mapping = np.full(w1, -2, np.int64)
    used = np.zeros(w2, np.bool_)
    maxc = w2 + 1
    cand = np.empty((w1, maxc), np.int64)
    ccost = np.empty((w1, maxc), np.float64)
    cnum = np.zeros(w1, np.int64)
    cidx = np.zeros(w1, np.int64)
    gst = np.zeros(w1 + 1, np.float64)
    mst = np.zeros(w1 + 1, np.int64)
    dst = np.zeros(w1 + 1, np.int64)

    depth = 0
    while True:
        # enumerate candidates for this depth, cheapest first
        kc = 0
        for b in range(w2):
            if used[b]:
                continue
            c = SC[depth, b]
            if c == np.inf:
                continue
            imm = c
            for a2 in range(depth):
                b2 = mapping[a2]
                if b2 == -1:
                    imm += arr2D
                else:
                    imm += _pair_cost(U1, N1, U2, N2, a2, depth, b2, b, alpha)
            cand[depth, kc] = b
            ccost[depth, kc] = imm
            kc += 1
        cand[depth, kc] = -1
        ccost[depth, kc] = D16 + arr2D * depth
        kc += 1
        for p in range(1, kc):
            cb = cand[depth, p]
            cc = ccost[depth, p]
            q = p - 1
            while q >= 0 and ccost[depth, q] > cc:
                ccost[depth, q + 1] = ccost[depth, q]
                cand[depth, q + 1] = cand[depth, q]
                q -= 1
            ccost[depth, q + 1] = cc
            cand[depth, q + 1] = cb
        cnum[depth] = kc
        cidx[depth] = 0

        descend = False
        while True:
            if cidx[depth] >= cnum[depth]:
                depth -= 1
                if depth < 0:
                    return best_map, best_ref
                b = cand[depth, cidx[depth]]
                if b >= 0:
                    used[b] = False
                cidx[depth] += 1
                continue
            b = cand[depth, cidx[depth]]
            g2 = gst[depth] + ccost[depth, cidx[depth]]
            mapped2 = mst[depth] + (1 if b >= 0 else 0)
            deleted2 = dst[depth] + (1 if b < 0 else 0)
            if depth == w1 - 1:
                leaf = g2 + (w2 - mapped2) * D16
                leaf += arr2D * (pairs2 - (mapped2 * (mapped2 - 1)) // 2)
                if leaf < best_ref + eps:
                    mapping[depth] = b
                    s, r, d0, i0, z, ref = _path_breakdown(
                        mapping, SC, U1, N1, U2, N2, w2, alpha, D16, arr2D
                    )
                    if ref < best_ref:
                        best_ref = ref
                        for t in range(w1):
                            best_map[t] = mapping[t]
                cidx[depth] += 1
                continue
            R = w1 - depth - 1
            A = w2 - mapped2
            cap = mapped2 + (R if R < A else A)
            arr_ins_lb = arr2D * (pairs2 - (cap * (cap - 1)) // 2)
            arr_del_lb = arr2D * deleted2 * R
            qb = g2 + rowmin[depth + 1] + arr_del_lb + arr_ins_lb
            if A > R:
                qb += (A - R) * D16
            if qb >= best_ref + eps:
                cidx[depth] += 1
                continue
            mapping[depth] = b
            if b >= 0:
                used[b] = True
            lb = g2 + _lap_bound(SC, used, depth + 1, w2, D16)
            lb += arr_del_lb + arr_ins_lb
            if lb >= best_ref + eps:
                if b >= 0:
                    used[b] = False
                cidx[depth] += 1
                continue
            gst[depth + 1] = g2
            mst[depth + 1] = mapped2
            dst[depth + 1] = deleted2
            depth += 1
            descend = True
            break
        if not descend:
            return best_map, best_ref


@njit(cache=True)
def _apx_matrix_kernel(wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D):
    N = wc.shape[0]
    A1 = np.zeros((N, N), np.float64)
    A2 = np.zeros((N, N), np.float64)
    for i in range(N):
        w1 = wc[i]
        U1 = units[us[i] : us[i] + w1 * w1].reshape((w1, w1, 2))
        N1 = norms[us[i] : us[i] + w1 * w1].reshape((w1, w1))
        for j in range(N):
            w2 = wc[j]
            SC = _sub_block(gl, pts, gs[i], w1, gs[j], w2)
            U2 = units[us[j] : us[j] + w2 * w2].reshape((w2, w2, 2))
            N2 = norms[us[j] : us[j] + w2 * w2].reshape((w2, w2))
            a1, mapping, s, r, d0, i0, z, a2v = _apx_pair(
                SC, U1, N1, U2, N2, alpha, D16, arr2D
            )
            A1[i, j] = a1
            A2[i, j] = a2v
    return A1, A2


@njit(cache=True)
def _apx_cross_kernel(wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D, nr):
    # rows 0..nr-1 against columns nr..N-1 of one packed corpus
    N = wc.shape[0]
    nc = N - nr
    A1 = np.zeros((nr, nc), np.float64)
    A2 = np.zeros((nr, nc), np.float64)
    for i in range(nr):
        w1 = wc[i]
        U1 = units[us[i] : us[i] + w1 * w1].reshape((w1, w1, 2))
        N1 = norms[us[i] : us[i] + w1 * w1].reshape((w1, w1))
        for j in range(nr, N):
            w2 = wc[j]
            SC = _sub_block(gl, pts, gs[i], w1, gs[j], w2)
            U2 = units[us[j] : us[j] + w2 * w2].reshape((w2, w2, 2))
            N2 = norms[us[j] : us[j] + w2 * w2].reshape((w2, w2))
            a1, mapping, s, r, d0, i0, z, a2v = _apx_pair(
                SC, U1, N1, U2, N2, alpha, D16, arr2D
            )
            A1[i, j - nr] = a1
            A2[i, j - nr] = a2v
    return A1, A2


@njit(cache=True)
def _exact_matrix_kernel(wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D):
    # exact values are symmetric; compute the upper triangle and mirror
    N = wc.shape[0]
    E = np.zeros((N, N), np.float64)
    for i in range(N):
        w1 = wc[i]
        U1 = units[us[i] : us[i] + w1 * w1].reshape((w1, w1, 2))
        N1 = norms[us[i] : us[i] + w1 * w1].reshape((w1, w1))
        for j in range(i + 1, N):
            w2 = wc[j]
            SC = _sub_block(gl, pts, gs[i], w1, gs[j], w2)
            U2 = units[us[j] : us[j] + w2 * w2].reshape((w2, w2, 2))
            N2 = norms[us[j] : us[j] + w2 * w2].reshape((w2, w2))
            a1, mapping, s, r, d0, i0, z, a2v = _apx_pair(
                SC, U1, N1, U2, N2, alpha, D16, arr2D
            )
            bmap, bref = _exact_pair(
                SC, U1, N1, U2, N2, w2, alpha, D16, arr2D, mapping, a2v
            )
            E[i, j] = bref
            E[j, i] = bref
    return E


# ---------------------------------------------------------------------------
# public API


def _kernel_args(cm: CostModel):
    arr2D = 2.0 * cm.del_cost if cm.arr_del else 0.0
    return cm.alpha, 16.0 * cm.del_cost, arr2D


def build_cost_matrix(
    g: CuneiformGraph, h: CuneiformGraph, cm: CostModel = CostModel()
) -> np.ndarray:
    """(n+m)x(n+m) wedge assignment matrix: substitutions upper-left,
    16*del_cost deletion/insertion diagonals, zeros lower-right."""
    d1, d2 = wedge_data(g), wedge_data(h)
    SC = _sub_block(
        np.concatenate([d1.glyphs, d2.glyphs]),
        np.concatenate([d1.points, d2.points]) if d1.n_wedges + d2.n_wedges else np.zeros((0, 4, 2)),
        0,
        d1.n_wedges,
        d1.n_wedges,
        d2.n_wedges,
    )
    return _build_eq_matrix(SC, 16.0 * cm.del_cost)


def _pair_arrays(g: CuneiformGraph, h: CuneiformGraph):
    d1, d2 = wedge_data(g), wedge_data(h)
    gl = np.concatenate([d1.glyphs, d2.glyphs])
    if d1.n_wedges + d2.n_wedges:
        pts = np.concatenate([d1.points, d2.points])
    else:
        pts = np.zeros((0, 4, 2))
    SC = _sub_block(gl, pts, 0, d1.n_wedges, d1.n_wedges, d2.n_wedges)
    return d1, d2, SC


def _edit_path(g, h, d1, d2, mapping, sub, arr, dl, ins, zeros, total) -> EditPath:
    pairs = []
    for a, b in enumerate(mapping):
        if b >= 0:
            for va, vb in zip(g.wedges[a].vertex_ids, h.wedges[b].vertex_ids):
                pairs.append((va, vb))
    vm = np.array(pairs, dtype=np.int64).reshape(len(pairs), 2)
    return EditPath(
        mapping=np.asarray(mapping, dtype=np.int64),
        vertex_mapping=vm,
        sub_cost=float(sub),
        arr_sub_cost=float(arr),
        del_cost=float(dl),
        ins_cost=float(ins),
        zero_vector_pairs=int(zeros),
        total=float(total),
    )


def apx1(g: CuneiformGraph, h: CuneiformGraph, cm: CostModel = CostModel()) -> float:
    """Optimal wedge assignment cost; arrangement edges play no part."""
    alpha, D16, arr2D = _kernel_args(cm)
    d1, d2, SC = _pair_arrays(g, h)
    v, *_ = _apx_pair(SC, d1.units, d1.norms, d2.units, d2.norms, alpha, D16, arr2D)
    return float(v)


def apx2(
    g: CuneiformGraph, h: CuneiformGraph, cm: CostModel = CostModel()
) -> tuple[float, EditPath]:
    """Full cost of the edit path induced by the optimal assignment."""
    alpha, D16, arr2D = _kernel_args(cm)
    d1, d2, SC = _pair_arrays(g, h)
    _, mapping, sub, arr, dl, ins, zeros, total = _apx_pair(
        SC, d1.units, d1.norms, d2.units, d2.norms, alpha, D16, arr2D
    )
    return float(total), _edit_path(g, h, d1, d2, mapping, sub, arr, dl, ins, zeros, total)


def exact(
    g: CuneiformGraph,
    h: CuneiformGraph,
    cm: CostModel = CostModel(),
    max_total_wedges: int = 20,
) -> tuple[float, EditPath]:
    """Minimum full edit-path cost over all wedge mappings."""
    if g.n_wedges + h.n_wedges > max_total_wedges:
        raise SizeBoundExceeded(
            f"graphs {g.graph_id} and {h.graph_id}: {g.n_wedges} + {h.n_wedges} "
            f"wedges exceeds bound {max_total_wedges}"
        )
    alpha, D16, arr2D = _kernel_args(cm)
    d1, d2, SC = _pair_arrays(g, h)
    _, mapping, sub, arr, dl, ins, zeros, total = _apx_pair(
        SC, d1.units, d1.norms, d2.units, d2.norms, alpha, D16, arr2D
    )
    best_map, best_ref = _exact_pair(
        SC,
        d1.units,
        d1.norms,
        d2.units,
        d2.norms,
        d2.n_wedges,
        alpha,
        D16,
        arr2D,
        mapping,
        total,
    )
    sub, arr, dl, ins, zeros, total = _path_breakdown(
        best_map, SC, d1.units, d1.norms, d2.units, d2.norms, d2.n_wedges, alpha, D16, arr2D
    )
    return float(best_ref), _edit_path(
        g, h, d1, d2, best_map, sub, arr, dl, ins, zeros, total
    )


def edit_path_cost(
    g: CuneiformGraph,
    h: CuneiformGraph,
    mapping: Sequence[int],
    cm: CostModel = CostModel(),
) -> float:
    """Full path cost of an arbitrary wedge mapping (-1 deletes)."""
    mapping = np.asarray(mapping, dtype=np.int64)
    if mapping.shape != (g.n_wedges,):
        raise ValueError(f"mapping must have length {g.n_wedges}")
    taken = mapping[mapping >= 0]
    if taken.size and (taken.max() >= h.n_wedges or np.unique(taken).size < taken.size):
        raise ValueError("mapping must be injective into the target wedges")
    for a, b in enumerate(mapping):
        if b >= 0 and g.wedges[a].glyph_type != h.wedges[b].glyph_type:
            return INF
    alpha, D16, arr2D = _kernel_args(cm)
    d1, d2, SC = _pair_arrays(g, h)
    *_, total = _path_breakdown(
        mapping, SC, d1.units, d1.norms, d2.units, d2.norms, d2.n_wedges, alpha, D16, arr2D
    )
    return float(total)


# ---------------------------------------------------------------------------
# distance matrices

_METHODS = ("APX1", "APX2", "EXACT")


@dataclass(frozen=True)
class DistanceMatrix:
    method: str
    graph_ids: tuple
    values: np.ndarray
    cost_model: CostModel = field(default_factory=CostModel)

    @property
    def symmetric(self) -> bool:
        # APX2 inherits the assignment tie-break, which need not commute
        return self.method in ("APX1", "EXACT")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", *[str(i) for i in self.graph_ids]])
            for gid, row in zip(self.graph_ids, self.values):
                w.writerow([str(gid), *[repr(float(x)) for x in row]])

    def to_json(self, path) -> None:
        payload = {
            "method": self.method,
            "alpha": self.cost_model.alpha,
            "del_cost": self.cost_model.del_cost,
            "arr_del": self.cost_model.arr_del,
            "graph_ids": list(self.graph_ids),
            "values": self.values.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @staticmethod
    def from_json(path) -> "DistanceMatrix":
        with open(path) as fh:
            payload = json.load(fh)
        return DistanceMatrix(
            method=payload["method"],
            graph_ids=tuple(payload["graph_ids"]),
            values=np.asarray(payload["values"], dtype=np.float64),
            cost_model=CostModel(
                alpha=payload["alpha"],
                del_cost=payload["del_cost"],
                arr_del=payload["arr_del"],
            ),
        )


def _pack(datas: Sequence[WedgeData]):
    N = len(datas)
    wc = np.array([d.n_wedges for d in datas], dtype=np.int64)
    gs = np.zeros(N + 1, dtype=np.int64)
    us = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(wc, out=gs[1:])
    np.cumsum(wc * wc, out=us[1:])
    tot = int(gs[-1])
    tot2 = int(us[-1])
    gl = np.zeros(tot, dtype=np.int64)
    pts = np.zeros((tot, 4, 2), dtype=np.float64)
    units = np.zeros((tot2, 2), dtype=np.float64)
    norms = np.zeros(tot2, dtype=np.float64)
    for i, d in enumerate(datas):
        w = d.n_wedges
        gl[gs[i] : gs[i] + w] = d.glyphs
        pts[gs[i] : gs[i] + w] = d.points
        units[us[i] : us[i] + w * w] = d.units.reshape(w * w, 2)
        norms[us[i] : us[i] + w * w] = d.norms.reshape(w * w)
    return wc, gs, gl, pts, us, units, norms


def apx_matrices(
    graphs: Sequence[CuneiformGraph], cm: CostModel = CostModel()
) -> tuple[DistanceMatrix, DistanceMatrix]:
    """APX1 and APX2 all-pairs matrices from one assignment pass each."""
    alpha, D16, arr2D = _kernel_args(cm)
    wc, gs, gl, pts, us, units, norms = _pack([wedge_data(g) for g in graphs])
    A1, A2 = _apx_matrix_kernel(wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D)
    ids = tuple(g.graph_id for g in graphs)
    return (
        DistanceMatrix("APX1", ids, A1, cm),
        DistanceMatrix("APX2", ids, A2, cm),
    )


def cross_apx_matrices(
    rows: Sequence[CuneiformGraph],
    cols: Sequence[CuneiformGraph],
    cm: CostModel = CostModel(),
) -> tuple[np.ndarray, np.ndarray]:
    """(len(rows), len(cols)) APX1 and APX2 arrays, one assignment pass.

    The rectangular form is what a classification run actually spends:
    every query against every training graph, nothing else.
    """
    alpha, D16, arr2D = _kernel_args(cm)
    datas = [wedge_data(g) for g in rows] + [wedge_data(g) for g in cols]
    wc, gs, gl, pts, us, units, norms = _pack(datas)
    return _apx_cross_kernel(
        wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D, len(rows)
    )


def distance_matrix(
    graphs: Sequence[CuneiformGraph],
    method: str = "APX2",
    cm: CostModel = CostModel(),
    max_total_wedges: int = 20,
) -> DistanceMatrix:
    method = method.upper()
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")
    if method in ("APX1", "APX2"):
        m1, m2 = apx_matrices(graphs, cm)
        return m1 if method == "APX1" else m2
    counts = [g.n_wedges for g in graphs]
    worst = sorted(range(len(counts)), key=lambda i: counts[i])[-2:]
    if len(worst) == 2 and counts[worst[0]] + counts[worst[1]] > max_total_wedges:
        i, j = worst
        raise SizeBoundExceeded(
            f"graphs {graphs[i].graph_id} and {graphs[j].graph_id} total "
            f"{counts[i] + counts[j]} wedges, exceeding bound {max_total_wedges}"
        )
    alpha, D16, arr2D = _kernel_args(cm)
    wc, gs, gl, pts, us, units, norms = _pack([wedge_data(g) for g in graphs])
    E = _exact_matrix_kernel(wc, gs, gl, pts, us, units, norms, alpha, D16, arr2D)
    return DistanceMatrix("EXACT", tuple(g.graph_id for g in graphs), E, cm)
