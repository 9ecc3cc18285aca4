"""Spatial relations between concept regions.

Five relation sets over pixel masks: centroid alignment, an eight-sector
compass with a center disk, topological predicates on pixel sets,
proximity, and betweenness for duplicated concepts. All predicates are
decidable pixel-set definitions; no continuous-geometry library sits
underneath, so every answer can be checked by brute force.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, InstanceMismatch
from .model import ConceptRegion

RELATION_SETS = (
    "SimpleAlignment",
    "CompassAlignment",
    "NineIntersectionModel",
    "Distance",
    "Surrounding",
)

# Sector order matches angle bins of width pi/4 starting at -pi/8, with
# angle 0 pointing +x and y growing downward.
COMPASS_SECTORS = (
    "middle_right",
    "bottom_right",
    "bottom_middle",
    "bottom_left",
    "middle_left",
    "top_left",
    "top_middle",
    "top_right",
)

DE9IM_NAMES = (
    "disjoint",
    "equals",
    "touches",
    "overlaps",
    "covers",
    "contains",
    "covered_by",
    "within",
)

ALIGNMENT_NAMES = ("above_of", "below_of", "left_of", "right_of")

UNARY_NAMES = ("has_a", "pos", "neg")

# Every relation identifier that can appear in a RelationFact.
VOCABULARY = frozenset(
    UNARY_NAMES
    + ALIGNMENT_NAMES
    + ("center",)
    + COMPASS_SECTORS
    + DE9IM_NAMES
    + ("close_to", "amid_x", "amid_y")
)


@dataclass(frozen=True)
class RelationConfig:
    """Thresholds in pixels plus the relation sets to evaluate."""

    close_range: float
    center_buffer: float
    enabled_sets: frozenset[str] = frozenset(RELATION_SETS)

    def __post_init__(self):
        if self.close_range <= 0:
            raise ValueError(f"close_range must be > 0, got {self.close_range}")
        if self.center_buffer <= 0:
            raise ValueError(f"center_buffer must be > 0, got {self.center_buffer}")
        unknown = frozenset(self.enabled_sets) - frozenset(RELATION_SETS)
        if unknown:
            raise ValueError(f"unknown relation sets: {sorted(unknown)}")
        object.__setattr__(self, "enabled_sets", frozenset(self.enabled_sets))


def default_relation_config(
    height: int,
    width: int,
    close_range_frac: float = 0.10,
    center_buffer_frac: float = 0.05,
    enabled_sets=frozenset(RELATION_SETS),
) -> RelationConfig:
    """Resolve fractional thresholds against the image diagonal."""
    diagonal = math.hypot(height, width)
    return RelationConfig(
        close_range=close_range_frac * diagonal,
        center_buffer=center_buffer_frac * diagonal,
        enabled_sets=frozenset(enabled_sets),
    )


@dataclass(frozen=True)
class RelationFact:
    """One relation instance inside a sample, at (concept, sign) granularity."""

    name: str
    subject: tuple[int, str]
    object: tuple[int, str] | None = None

    def __post_init__(self):
        if self.name not in VOCABULARY:
            raise ValueError(f"unknown relation name {self.name!r}")


def simple_alignment(a: ConceptRegion, b: ConceptRegion) -> frozenset[str]:
    """Strict centroid comparison; equal coordinates yield neither direction."""
    ax, ay = a.centroid
    bx, by = b.centroid
    names = set()
    if ay < by:
        names.add("above_of")
    elif ay > by:
        names.add("below_of")
    if ax < bx:
        names.add("left_of")
    elif ax > bx:
        names.add("right_of")
    return frozenset(names)


def compass_alignment(a: ConceptRegion, b: ConceptRegion, cfg: RelationConfig) -> frozenset[str]:
    """Center if b enters the buffer disk around a's centroid, else sectors.

    Sector membership is per pixel of b: eight half-open wedges of width
    pi/4 around a.centroid with boundaries at odd multiples of pi/8,
    angle 0 along +x and y downward (so bottom_middle sits under a).
    """
    ax, ay = a.centroid
    ys, xs = np.nonzero(b.mask)
    dx = xs.astype(np.float64) - ax
    dy = ys.astype(np.float64) - ay
    if np.any(dx * dx + dy * dy <= cfg.center_buffer**2):
        return frozenset(("center",))
    angles = np.arctan2(dy, dx)
    shifted = np.where(angles < -math.pi / 8, angles + 2 * math.pi, angles)
    bins = np.floor((shifted + math.pi / 8) / (math.pi / 4)).astype(int)
    bins = np.clip(bins, 0, 7)  # guard the half-open upper end 15pi/8
    return frozenset(COMPASS_SECTORS[i] for i in np.unique(bins))


def _boundary(mask: np.ndarray) -> np.ndarray:
    """Mask pixels 4-adjacent to a cleared pixel or to the image edge."""
    padded = np.pad(mask, 1, constant_values=False)
    core = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~core


def _interior(mask: np.ndarray) -> np.ndarray:
    return mask & ~_boundary(mask)


def _touch_set(mask: np.ndarray) -> np.ndarray:
    """The mask plus every pixel 4-adjacent to it."""
    padded = np.pad(mask, 1, constant_values=False)
    halo = (
        padded[:-2, 1:-1] | padded[2:, 1:-1] | padded[1:-1, :-2] | padded[1:-1, 2:]
    )
    return mask | halo


def de9im_masks(mask_a: np.ndarray, mask_b: np.ndarray) -> frozenset[str]:
    """Topological vocabulary between two pixel masks on the same grid.

    Interiors and boundaries use 4-adjacency, with the image edge counting
    as outside. touches demands that every shared pixel is a boundary
    pixel of both masks; contains additionally demands interior room in a
    beyond b and its 4-neighbourhood (strict containment), so equal masks
    are covers/covered_by but never contains/within.
    """
    if mask_a.shape != mask_b.shape:
        raise DimensionMismatch(f"mask shapes differ: {mask_a.shape} vs {mask_b.shape}")
    shared = mask_a & mask_b
    if not shared.any():
        return frozenset(("disjoint",))
    names = set()
    int_a = _interior(mask_a)
    int_b = _interior(mask_b)
    a_covers_b = not (mask_b & ~mask_a).any()
    b_covers_a = not (mask_a & ~mask_b).any()
    if a_covers_b and b_covers_a:
        names.add("equals")
    if not (int_a & mask_b).any() and not (mask_a & int_b).any():
        names.add("touches")
    if (int_a & int_b).any() and not a_covers_b and not b_covers_a:
        names.add("overlaps")
    if a_covers_b:
        names.add("covers")
        if (int_a & ~_touch_set(mask_b)).any():
            names.add("contains")
    if b_covers_a:
        names.add("covered_by")
        if (int_b & ~_touch_set(mask_a)).any():
            names.add("within")
    return frozenset(names)


def de9im(a: ConceptRegion, b: ConceptRegion) -> frozenset[str]:
    return de9im_masks(a.mask, b.mask)


def min_pixel_distance(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Smallest Euclidean distance between set pixels of the two masks."""
    if (mask_a & mask_b).any():
        return 0.0
    pa = np.argwhere(mask_a).astype(np.float64)
    pb = np.argwhere(mask_b).astype(np.float64)
    dists, _ = cKDTree(pa).query(pb, k=1)
    return float(dists.min())


def close_to(a: ConceptRegion, b: ConceptRegion, cfg: RelationConfig) -> bool:
    """True iff the minimal pixel-pair distance is strictly below close_range."""
    return min_pixel_distance(a.mask, b.mask) < cfg.close_range


def surrounding(a1: ConceptRegion, a2: ConceptRegion, b: ConceptRegion) -> frozenset[str]:
    """Strict betweenness of b's centroid between two instances of one concept."""
    if a1.concept_id != a2.concept_id:
        raise InstanceMismatch(
            f"surrounding needs two instances of one concept, got {a1.concept_id} and {a2.concept_id}"
        )
    names = set()
    bx, by = b.centroid
    lo_x, hi_x = sorted((a1.centroid[0], a2.centroid[0]))
    lo_y, hi_y = sorted((a1.centroid[1], a2.centroid[1]))
    if lo_x < bx < hi_x:
        names.add("amid_x")
    if lo_y < by < hi_y:
        names.add("amid_y")
    return frozenset(names)


def find_relations(regions: list[ConceptRegion], cfg: RelationConfig) -> frozenset[RelationFact]:
    """All enabled relation facts among one sample's regions.

    Unary presence facts (the region's sign, plus has_a) are always
    emitted. Binary facts are computed for every ordered pair of regions
    of distinct concepts; Surrounding applies when a concept has exactly
    two instances, against every region of other concepts.
    """
    facts: set[RelationFact] = set()
    for r in regions:
        key = (r.concept_id, r.sign)
        facts.add(RelationFact(r.sign, key))
        facts.add(RelationFact("has_a", key))

    for a in regions:
        for b in regions:
            if a is b or a.concept_id == b.concept_id:
                continue
            sub = (a.concept_id, a.sign)
            obj = (b.concept_id, b.sign)
            if "SimpleAlignment" in cfg.enabled_sets:
                for name in simple_alignment(a, b):
                    facts.add(RelationFact(name, sub, obj))
            if "CompassAlignment" in cfg.enabled_sets:
                for name in compass_alignment(a, b, cfg):
                    facts.add(RelationFact(name, sub, obj))
            if "NineIntersectionModel" in cfg.enabled_sets:
                for name in de9im(a, b):
                    facts.add(RelationFact(name, sub, obj))
            if "Distance" in cfg.enabled_sets and close_to(a, b, cfg):
                facts.add(RelationFact("close_to", sub, obj))

    if "Surrounding" in cfg.enabled_sets:
        by_concept: dict[int, list[ConceptRegion]] = {}
        for r in regions:
            by_concept.setdefault(r.concept_id, []).append(r)
        for cid, instances in by_concept.items():
            if len(instances) != 2:
                continue
            a1, a2 = instances
            for b in regions:
                if b.concept_id == cid:
                    continue
                for name in surrounding(a1, a2, b):
                    facts.add(
                        RelationFact(name, (cid, a1.sign), (b.concept_id, b.sign))
                    )
    return frozenset(facts)
