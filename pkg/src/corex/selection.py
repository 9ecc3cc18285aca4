"""Concept scoring and quantile-based filtering.

A concept's score in a sample is the plain sum of its relevance map. The
filter keeps concepts whose absolute score reaches a quantile of the
sample's score distribution; a small zero band around zero declares a
score sign-less so numerically dead concepts never enter the knowledge
base.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentTheory
from .model import ConceptScore, Dataset, SampleRecord

QUANTILE_SCOPES = ("per_sample", "global")


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for concept filtering.

    bk_quantile: keep concepts with |score| at or above this quantile.
    zero_band: fraction of the sample's max |score| below which a score
        counts as null-signed.
    quantile_scope: "per_sample" thresholds each sample on its own score
        distribution; "global" pools |score| over the whole dataset.
    """

    bk_quantile: float = 0.5
    zero_band: float = 1e-6
    quantile_scope: str = "per_sample"

    def __post_init__(self):
        if not 0.0 <= self.bk_quantile <= 1.0:
            raise ValueError(f"bk_quantile must be in [0, 1], got {self.bk_quantile}")
        if self.zero_band < 0.0:
            raise ValueError(f"zero_band must be >= 0, got {self.zero_band}")
        if self.quantile_scope not in QUANTILE_SCOPES:
            raise ValueError(f"quantile_scope must be one of {QUANTILE_SCOPES}")


@dataclass(frozen=True)
class ConceptPartition:
    """Three-way split of every concept observed in a dataset."""

    rule_concepts: frozenset[int]
    bk_concepts: frozenset[int]
    irrelevant_concepts: frozenset[int]

    def all_concepts(self) -> frozenset[int]:
        return self.rule_concepts | self.bk_concepts | self.irrelevant_concepts


def score_concepts(sample: SampleRecord, cfg: SelectionConfig) -> tuple[ConceptScore, ...]:
    """Score every concept of the sample, in grid order.

    The sign is "pos" when the total exceeds +eps, "neg" below -eps and
    "null" inside the band, with eps = zero_band * max |total| over the
    sample's concepts.
    """
    totals = [float(g.values.sum(dtype=np.float64)) for g in sample.grids]
    eps = cfg.zero_band * max((abs(t) for t in totals), default=0.0)
    scores = []
    for g, total in zip(sample.grids, totals):
        if total > eps:
            sign = "pos"
        elif total < -eps:
            sign = "neg"
        else:
            sign = "null"
        scores.append(ConceptScore(g.concept_id, total, sign))
    return tuple(scores)


def quantile_value(values: list[float], q: float) -> float:
    """Nearest-rank quantile: element at index ceil(q * (n - 1)) ascending."""
    if not values:
        raise ValueError("quantile of empty list")
    ordered = sorted(values)
    idx = math.ceil(q * (len(ordered) - 1))
    return ordered[idx]


def dataset_threshold(dataset: Dataset, cfg: SelectionConfig) -> float:
    """Quantile of |score| pooled over every (sample, concept) pair."""
    pool = []
    for s in dataset.samples:
        for score in score_concepts(s, cfg):
            pool.append(abs(score.total_relevance))
    if not pool:
        raise ValueError("dataset has no grids to threshold")
    return quantile_value(pool, cfg.bk_quantile)


def filter_concepts(
    sample: SampleRecord, cfg: SelectionConfig, threshold: float | None = None
) -> tuple[ConceptScore, ...]:
    """Retain the sample's scores with |total| >= threshold and a real sign.

    With threshold None the threshold is the bk_quantile of this sample's
    own |total| distribution; passing one in supports the dataset-global
    scope. Output keeps grid order.
    """
    scores = score_concepts(sample, cfg)
    if not scores:
        return ()
    if threshold is None:
        threshold = quantile_value([abs(s.total_relevance) for s in scores], cfg.bk_quantile)
    return tuple(
        s for s in scores if abs(s.total_relevance) >= threshold and s.sign != "null"
    )


def filtered_concept_ids(dataset: Dataset, cfg: SelectionConfig) -> frozenset[int]:
    """Ids of concepts that survive filtering in at least one sample."""
    threshold = dataset_threshold(dataset, cfg) if cfg.quantile_scope == "global" else None
    kept: set[int] = set()
    for s in dataset.samples:
        kept.update(sc.concept_id for sc in filter_concepts(s, cfg, threshold))
    return frozenset(kept)


def partition_concepts(
    dataset: Dataset, cfg: SelectionConfig, theory_concepts: frozenset[int] | set[int]
) -> ConceptPartition:
    """Split observed concepts into rule / background / irrelevant.

    rule_concepts echoes the theory's concepts; bk_concepts are the other
    concepts that pass the filter somewhere; irrelevant_concepts never
    pass it. Raises InconsistentTheory when the theory names a concept
    outside the filtered set.
    """
    theory_concepts = frozenset(theory_concepts)
    filtered = filtered_concept_ids(dataset, cfg)
    if not theory_concepts <= filtered:
        stray = sorted(theory_concepts - filtered)
        raise InconsistentTheory(f"theory concepts {stray} are not in the filtered set")
    observed = frozenset(dataset.concept_ids())
    return ConceptPartition(
        rule_concepts=theory_concepts,
        bk_concepts=filtered - theory_concepts,
        irrelevant_concepts=observed - filtered,
    )
