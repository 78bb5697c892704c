"""Deterministic reference corpus of 30 sign classes (267 graphs).

The corpus mirrors the published benchmark's shape: 30 syllable
classes with 9 instances each (8 for za/zi/zu), fixed per-class wedge
counts, and fixed per-class bounding-box maxima. Twenty instances
carry one extra wedge (three each for ku/zi/ti/ha/su, two for da, one
each for si/ni/du), so class-level modal sizes stay at the nominal
wedge count while the corpus totals land at 5,680 vertices and 23,922
edges.

Beyond the shape, the generator builds in the failure modes that make
the retrieval and classification numbers realistic rather than
saturated:

* four look-alike pairs (hi/hu, di/lu, ra/ru, bi/la) share glyph
  multisets and near-identical layouts, and two instances per class
  are blended toward the partner prototype, past the midpoint;
* li and tu share wedge shapes and near-coincident wedge positions,
  differing mainly in how the four horizontal wedges are arranged
  (a column versus a square), so position-only matching struggles
  while arrangement-aware matching separates them;
* the first ki instance, which doubles as the class reference in
  ranking experiments, has one badly displaced wedge, and na shares
  ki's glyph multiset, so ki's retrieval ranking is imperfect;
* ri reuses ka's layout mirrored left to right with identical wedge
  shapes, so the two classes agree in every local statistic and differ
  only in the chirality of the global arrangement; pairwise depth
  directions disagree strongly under the mirror, which edit distances
  price heavily, while orientation-preserving transforms (and any
  augmentation built from them) never map one class onto the other;
* structural twin groups (ku/zi/ti and ha/su) share a layout up to one
  wedge whose glyph letter is swapped and carry composition-matched
  extra wedges: an oversized ku instance has exactly the glyph multiset
  of an oversized zi or ti instance, so those instances are
  distinguishable only by where each glyph sits. Matching costs
  separate them via deletion floors between base multisets and glyph
  relocation pricing between the oversized ones, while a pooled
  feature vector keeps no what-is-present cue at all;
* every class whose oversized instances could otherwise be outranked
  by neighbours keeps its glyph multiset unmatchable against
  similar-sized classes, which forces deletion/insertion pricing on
  cross-class comparisons;
* every instance re-draws its wedge outlines with individual tilts and
  scale factors plus site-level scatter, so a class is a cloud whose
  intrinsic dimension is far above what eight or nine samples can pin
  down jointly with the pose manifold.

Everything is keyed off fixed integer seed sequences, so any single
instance can be regenerated independently and the corpus is bitwise
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path

import numpy as np

from .dataset import Dataset, write_tudataset
from .graph import GlyphType, PointType, build_from_wedges

REFERENCE_SEED = 31907

CORPUS_NAME = "wedges30"

_GLYPH_OF = {"V": GlyphType.VERTICAL, "H": GlyphType.HORIZONTAL, "W": GlyphType.WINKELHAKEN}

# canonical wedge outlines at unit scale, (depth, tail, right, left)
_SHAPES = {
    GlyphType.VERTICAL: np.array([(0.0, 0.0), (0.0, -1.0), (0.3, 0.18), (-0.3, 0.18)]),
    GlyphType.HORIZONTAL: np.array([(0.0, 0.0), (1.0, 0.0), (0.18, 0.3), (0.18, -0.3)]),
    GlyphType.WINKELHAKEN: np.array([(0.0, 0.0), (0.7, -0.7), (0.45, 0.12), (-0.12, -0.45)]),
}


@dataclass(frozen=True)
class ClassSpec:
    name: str
    count: int
    wedges: int
    h_max: float
    w_max: float
    glyphs: str  # one letter per wedge: V, H, or W


CLASS_TABLE = (
    ClassSpec("ba", 9, 9, 7.5, 12.7, "VVVHHHWWW"),
    ClassSpec("bi", 9, 6, 7.4, 11.7, "VVHHWW"),
    ClassSpec("bu", 9, 4, 10.0, 13.4, "VVHH"),
    ClassSpec("da", 9, 2, 5.3, 7.3, "VH"),
    ClassSpec("di", 9, 4, 7.5, 14.7, "VHHH"),
    ClassSpec("du", 9, 2, 7.7, 8.7, "VW"),
    ClassSpec("ha", 9, 5, 7.3, 13.9, "VVHHW"),
    ClassSpec("hi", 9, 4, 7.9, 10.0, "VVVH"),
    ClassSpec("hu", 9, 4, 7.5, 9.4, "VVVH"),
    ClassSpec("ka", 9, 5, 9.1, 11.1, "VVVHH"),
    ClassSpec("ki", 9, 4, 9.1, 5.8, "VVHW"),
    ClassSpec("ku", 9, 7, 7.4, 13.7, "VVVHHHW"),
    ClassSpec("la", 9, 6, 7.7, 11.4, "VVHHWW"),
    ClassSpec("li", 9, 7, 6.7, 10.6, "HHHHVVW"),
    ClassSpec("lu", 9, 4, 7.5, 15.0, "VHHH"),
    ClassSpec("na", 9, 4, 8.5, 14.4, "VVHW"),
    ClassSpec("ni", 9, 6, 9.9, 7.6, "VHHHHH"),
    ClassSpec("nu", 9, 4, 10.2, 8.6, "VVHH"),
    ClassSpec("ra", 9, 5, 7.7, 9.6, "VWWWW"),
    ClassSpec("ri", 9, 5, 8.9, 11.5, "VVVHH"),
    ClassSpec("ru", 9, 5, 8.2, 10.2, "VWWWW"),
    ClassSpec("sa", 9, 5, 10.0, 10.4, "HWWWW"),
    ClassSpec("si", 9, 6, 9.2, 11.2, "VHHWWW"),
    ClassSpec("su", 9, 5, 8.2, 11.7, "VVHWW"),
    ClassSpec("ta", 9, 4, 8.3, 8.4, "VVHH"),
    ClassSpec("ti", 9, 7, 12.6, 15.2, "VVHHHWW"),
    ClassSpec("tu", 9, 7, 10.5, 12.4, "HHHHVVW"),
    ClassSpec("za", 8, 6, 9.1, 9.2, "VVVVHW"),
    ClassSpec("zi", 8, 7, 8.9, 13.2, "VVVHHWW"),
    ClassSpec("zu", 8, 9, 10.3, 21.0, "VVVVHHHHW"),
)

CLASS_NAMES = tuple(spec.name for spec in CLASS_TABLE)
_INDEX = {spec.name: k for k, spec in enumerate(CLASS_TABLE)}

# instances carrying one extra wedge (appended to the high indices).
# Twin classes pick the extra glyph that lands their composition exactly
# on the partner's extra composition, so those instances lose the
# what-glyphs-are-present cue and keep only the which-site-carries-what
# one; the remaining extras go to classes with deletion-floor headroom.
_EXTRA_COUNT = {
    "ku": 3, "zi": 3, "ti": 3, "ha": 3, "su": 3,
    "si": 1, "ni": 1, "da": 2, "du": 1,
}
_EXTRA_GLYPH = {
    "ku": "W", "zi": "H", "ti": "V", "ha": "W", "su": "H",
    "si": "W", "ni": "H", "da": "V", "du": "V",
}

# look-alike pairs: the second class reuses the first one's layout with
# a structured offset; instances 4 and 5 of each class are blended
# toward the partner prototype
_BLEND_PAIRS = (("hi", "hu"), ("di", "lu"), ("ra", "ru"), ("bi", "la"))
_PARTNER = {}
for _a, _b in _BLEND_PAIRS:
    _PARTNER[_a] = _b
    _PARTNER[_b] = _a
_BLEND_INSTANCES = (4, 5)
_BLEND_BETAS = {4: 0.58, 5: 0.72}

# mirrored-layout pair: the second class is the first's left-right
# mirror image built from the same (unmirrored) wedge outlines
_MIRROR_PAIR = ("ka", "ri")

# structural twins: the twin reuses its base's layout with exactly one
# site's glyph letter replaced, so the classes agree everywhere except
# one wedge outline and its labels. Base-vs-base multisets differ by
# one letter, which edit distances price at a pose-independent deletion
# floor; together with the composition-matched extras above, the extra
# instances of a twin group are categorically identical across classes
# and distinguishable only by where each glyph sits.
_TWIN = {"zi": ("ku", "H", "W"), "ti": ("ku", "V", "W"), "su": ("ha", "H", "W")}

# geometry knobs (box frame is the unit square before fitting)
_SITE_JITTER = 0.10
_CLUSTER_JITTER = 0.05
_ROTATION = 0.12
_SCALE_RANGE = (0.82, 0.96)
_FULL_SCALE_INSTANCE = 1
_ORIGIN_JITTER = 1.0

# classes whose glyph multiset is unique at their wedge count get a wide
# pose manifold (strong rotation, downscale, anisotropic site stretch).
# Their edit distances stay class-separable regardless of pose because
# unmatchable wedges cost a fixed deletion floor, while a classifier
# trained on the handful of poses per fold has to interpolate the gaps.
_POSE_WIDE = frozenset(
    {"ba", "ha", "ku", "ni", "sa", "si", "su", "ti", "za", "zi", "zu"}
)
_WIDE_ROTATION = 0.55
_WIDE_SCALE_RANGE = (0.60, 0.98)
_WIDE_STRETCH = (0.85, 1.18)

# scribal-hand variation: every instance re-draws its wedge outlines
# with an individual tilt about the depth point and an outline scale
# factor, on top of the site scatter. Eight or nine samples cannot pin
# down a class cloud of this intrinsic dimension together with the
# pose manifold, so a classifier only reaches the published accuracy
# once pose is factored out of the learning problem; edit distances
# price the same variation as small quadratic position terms, far
# below any glyph-mismatch floor.
_WEDGE_TILT = 0.35
_WEDGE_SCALE_JITTER = (0.78, 1.22)

# li and tu occurrences scatter widely across the tablet, each class
# in its own region, and the last two instances of each class sit as a
# tight pair inside the partner's region. Position-only matching then
# ranks partner instances ahead of most of the stray's own class (its
# one nearby classmate is outvoted under 3-NN), while the arrangement
# term keeps the whole class together.
_LI_ORIGINS = np.array(
    [(0.4, 0.3), (1.9, 0.5), (0.2, 1.8), (2.3, 2.2), (1.1, 1.3),
     (2.1, 0.9), (0.9, 2.3), (4.55, 4.55), (4.75, 4.72)]
)
_TU_ORIGINS = np.array(
    [(3.8, 3.6), (5.5, 3.8), (3.5, 5.4), (5.7, 5.6), (4.6, 4.7),
     (5.4, 4.5), (4.1, 5.6), (1.15, 1.2), (1.32, 1.4)]
)

_MIN_SEP = {2: 0.45, 4: 0.3, 5: 0.28, 6: 0.24, 7: 0.22, 9: 0.18}

# handcrafted layouts for the arrangement-discriminated pair: four
# horizontal wedges in a tight column (li) or square (tu) plus three
# shared peripheral wedges; the clusters are concentric and tight, so
# position-only matching sees little difference while the pairwise
# depth directions disagree by 45-90 degrees
_LI_SITES = np.array(
    [(0.5, 0.41), (0.5, 0.57), (0.5, 0.73), (0.5, 0.89),
     (0.1, 0.82), (0.14, 0.2), (0.88, 0.55)]
)
_TU_SITES = np.array(
    [(0.45, 0.49), (0.55, 0.49), (0.45, 0.81), (0.55, 0.81),
     (0.1, 0.82), (0.14, 0.2), (0.88, 0.55)]
)

_KI_SCRIBAL_SHIFT = np.array([0.3, -0.26])


def _sample_sites(rng: np.random.Generator, n: int, min_sep: float) -> np.ndarray:
    """Rejection-sample n sites in the unit box, pairwise separated."""
    sites: list[np.ndarray] = []
    while len(sites) < n:
        p = rng.uniform(0.08, 0.92, 2)
        if all(np.hypot(*(p - q)) >= min_sep for q in sites):
            sites.append(p)
    return np.array(sites)


@lru_cache(maxsize=None)
def _prototype(name: str):
    """Class prototype: wedge sites, per-site glyphs, local scales (box frame)."""
    spec = CLASS_TABLE[_INDEX[name]]
    rng = np.random.default_rng([REFERENCE_SEED, 77, _INDEX[name]])
    if name in ("li", "tu"):
        sites = (_LI_SITES if name == "li" else _TU_SITES).copy()
        site_glyphs = list(spec.glyphs)
    elif name == _MIRROR_PAIR[1]:
        base_sites, base_glyphs, base_scales = _prototype(_MIRROR_PAIR[0])[:3]
        sites = base_sites.copy()
        sites[:, 0] = 1.0 - sites[:, 0]
        site_glyphs = list(base_glyphs)
        scales = base_scales * rng.uniform(0.97, 1.03, spec.wedges)
        return sites, site_glyphs, scales, spec
    elif name in _TWIN:
        base, _, new = _TWIN[name]
        base_sites, base_glyphs, base_scales = _prototype(base)[:3]
        sites = base_sites.copy()
        site_glyphs = list(base_glyphs)
        site_glyphs[_swap_site(name)] = new
        # the swap must land exactly on this class's declared multiset
        assert sorted(site_glyphs) == sorted(spec.glyphs)
        scales = base_scales * rng.uniform(0.97, 1.03, spec.wedges)
        return sites, site_glyphs, scales, spec
    elif name in _PARTNER and _PARTNER[name] in _INDEX and _INDEX[_PARTNER[name]] < _INDEX[name]:
        base_sites, base_glyphs, base_scales = _prototype(_PARTNER[name])[:3]
        offs = rng.uniform(0.22, 0.34, spec.wedges)
        angs = rng.uniform(0.0, 2 * np.pi, spec.wedges)
        sites = np.clip(
            base_sites + offs[:, None] * np.column_stack([np.cos(angs), np.sin(angs)]),
            0.02,
            0.98,
        )
        site_glyphs = list(base_glyphs)
        scales = base_scales * rng.uniform(0.95, 1.05, spec.wedges)
        return sites, site_glyphs, scales, spec
    else:
        sites = _sample_sites(rng, spec.wedges, _MIN_SEP[spec.wedges])
        site_glyphs = [spec.glyphs[k] for k in rng.permutation(spec.wedges)]
    scales = rng.uniform(0.12, 0.2, spec.wedges)
    return sites, site_glyphs, scales, spec


@lru_cache(maxsize=None)
def _twin_geometry(base: str):
    """Extra-wedge site, its scale, and per-letter swap sites of a group.

    The extra site and the swapped sites are chosen jointly to maximize
    their smallest pairwise distance, so the glyph relocations that
    edit distances price between oversized twin instances stay long;
    classes without twins just take the max-clearance extra site.
    """
    sites, letters = _prototype(base)[:2]
    rng = np.random.default_rng([REFERENCE_SEED, 78, _INDEX[base]])
    draws = rng.uniform(0.08, 0.92, (256, 2))
    escale = float(rng.uniform(0.12, 0.18))
    clearance = np.array([min(np.hypot(*(p - q)) for q in sites) for p in draws])
    swap_letters = sorted({old for b, old, _ in _TWIN.values() if b == base})
    if not swap_letters:
        return draws[int(np.argmax(clearance))], escale, {}
    cands = draws[clearance >= 0.2]
    pools = [[k for k, g in enumerate(letters) if g == l] for l in swap_letters]
    best = None
    for combo in product(*pools):
        pts = [sites[k] for k in combo]
        legs = [np.hypot(*(pts[i] - pts[j])) for i in range(len(pts)) for j in range(i)]
        for e in cands:
            m = min(legs + [np.hypot(*(p - e)) for p in pts])
            if best is None or m > best[0]:
                best = (m, e, dict(zip(swap_letters, combo)))
    return best[1], escale, best[2]


def _extra_point(base: str):
    """Extra-wedge site and scale shared by a class and its twins."""
    site, scale, _ = _twin_geometry(base)
    return site, scale


def _swap_site(name: str) -> int:
    """Index (in the base layout) of a twin's swapped wedge site."""
    base, old, _ = _TWIN[name]
    return _twin_geometry(base)[2][old]


def _extra_site(name: str):
    """Site, glyph, and scale of a class's optional extra wedge.

    Twin classes reuse the base's site draw, so their extra instances
    occupy identical site sets and differ only in glyph placement.
    """
    base = _TWIN[name][0] if name in _TWIN else name
    site, scale = _extra_point(base)
    return site, _GLYPH_OF[_EXTRA_GLYPH[name]], scale


def _instance_frame(name: str, index: int, rng: np.random.Generator):
    """Wedge sites, glyphs, scales of one instance in the box frame."""
    sites, site_glyphs, scales, spec = _prototype(name)
    sites = sites.copy()
    scales = scales.copy()
    glyphs = [_GLYPH_OF[g] for g in site_glyphs]

    if name in _PARTNER and index in _BLEND_INSTANCES:
        beta = _BLEND_BETAS[index]
        psites, _, pscales, _ = _prototype(_PARTNER[name])
        sites = (1.0 - beta) * sites + beta * psites
        scales = (1.0 - beta) * scales + beta * pscales

    extras = _EXTRA_COUNT.get(name, 0)
    if extras and index >= spec.count - extras:
        esite, eglyph, escale = _extra_site(name)
        sites = np.vstack([sites, esite])
        scales = np.append(scales, escale)
        glyphs.append(eglyph)

    if name == "ki" and index == 0:
        sites[0] = sites[0] + _KI_SCRIBAL_SHIFT

    if name in _POSE_WIDE:
        a = float(rng.uniform(*_WIDE_STRETCH))
        sites = np.clip(0.5 + (sites - 0.5) * np.array([a, 1.0 / a]), 0.02, 0.98)

    jitter = _CLUSTER_JITTER if name in ("li", "tu") else _SITE_JITTER
    sites = sites + rng.normal(0.0, jitter, sites.shape)
    scales = scales * rng.uniform(*_WEDGE_SCALE_JITTER, scales.shape)
    return sites, glyphs, scales, spec


def make_instance(name: str, index: int):
    """Build one reference graph, reproducible from (class, index)."""
    spec = CLASS_TABLE[_INDEX[name]]
    if not 0 <= index < spec.count:
        raise ValueError(f"{name} has {spec.count} instances, not {index + 1}")
    rng = np.random.default_rng([REFERENCE_SEED, _INDEX[name], index])
    sites, glyphs, scales, spec = _instance_frame(name, index, rng)

    tilts = rng.uniform(-_WEDGE_TILT, _WEDGE_TILT, len(glyphs))
    cos, sin = np.cos(tilts), np.sin(tilts)
    spins = np.stack([cos, -sin, sin, cos], axis=1).reshape(-1, 2, 2)
    pts = np.array(
        [site + s * (_SHAPES[g] @ spin.T) for site, g, s, spin in zip(sites, glyphs, scales, spins)]
    )  # (w, 4, 2)
    flat = pts.reshape(-1, 2)
    wide = name in _POSE_WIDE
    bound = _WIDE_ROTATION if wide else _ROTATION
    theta = rng.uniform(-bound, bound)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    flat = (flat - flat.mean(axis=0)) @ rot.T

    if index == _FULL_SCALE_INSTANCE:
        s = 1.0
    else:
        s = float(rng.uniform(*(_WIDE_SCALE_RANGE if wide else _SCALE_RANGE)))
    lo = flat.min(axis=0)
    span = flat.max(axis=0) - lo
    target = np.array([s * spec.w_max, s * spec.h_max])
    flat = (flat - lo) / span * target
    if name == "li":
        flat = flat + _LI_ORIGINS[index] + rng.uniform(0.0, 0.15, 2)
    elif name == "tu":
        flat = flat + _TU_ORIGINS[index] + rng.uniform(0.0, 0.15, 2)
    else:
        flat = flat + rng.uniform(0.0, _ORIGIN_JITTER, 2)

    pts = flat.reshape(len(glyphs), 4, 2)
    specs = [
        (g, {pt: (pts[k, int(pt), 0], pts[k, int(pt), 1]) for pt in PointType})
        for k, g in enumerate(glyphs)
    ]
    base = sum(c.count for c in CLASS_TABLE[: _INDEX[name]])
    return build_from_wedges(specs, graph_id=base + index, class_label=name)


@lru_cache(maxsize=1)
def build_reference_dataset() -> Dataset:
    """The full 267-graph corpus, grouped by class in table order."""
    graphs = []
    for spec in CLASS_TABLE:
        for i in range(spec.count):
            graphs.append(make_instance(spec.name, i))
    return Dataset(graphs=tuple(graphs), class_names=CLASS_NAMES)


def reference_ids(d: Dataset) -> list[int]:
    """Graph index of each class's reference: its first instance."""
    seen = {}
    for k, g in enumerate(d.graphs):
        seen.setdefault(g.class_label, k)
    return [seen[name] for name in d.class_names]


def write_reference_corpus(directory, name: str = CORPUS_NAME) -> Path:
    """Materialize the corpus in the multi-file benchmark layout."""
    directory = Path(directory)
    write_tudataset(build_reference_dataset(), directory, name)
    return directory
