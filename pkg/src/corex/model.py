"""Core data model: relevance grids, samples, datasets, scores and regions.

All downstream stages consume these types. Values are immutable after
construction; numpy arrays are stored read-only so accidental mutation of a
shared grid fails loudly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateId, UnknownConcept

GROUND_TRUTH_LABELS = ("positive", "negative", "unknown")
MODEL_TRUTH_LABELS = ("positive", "negative")
SIGNS = ("pos", "neg")

_SAMPLE_ID_RE = re.compile(r"^[a-z][a-z0-9_]*$")


def _as_readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RelevanceGrid:
    """One concept's relevance map for one sample.

    values is a 2-D float32 array (height x width, row-major); positive
    entries support the class decision, negative entries oppose it.
    """

    concept_id: int
    layer_id: str
    values: np.ndarray

    def __post_init__(self):
        if self.concept_id < 0:
            raise ValueError(f"concept_id must be non-negative, got {self.concept_id}")
        arr = _as_readonly(self.values, np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"values must be a 2-D array with positive dims, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RelevanceGrid):
            return NotImplemented
        return (
            self.concept_id == other.concept_id
            and self.layer_id == other.layer_id
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class SampleRecord:
    """One classified sample: its labels plus one relevance grid per concept."""

    sample_id: str
    ground_truth: str
    model_truth: str
    grids: tuple[RelevanceGrid, ...]

    def __post_init__(self):
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        if self.ground_truth not in GROUND_TRUTH_LABELS:
            raise ValueError(f"ground_truth must be one of {GROUND_TRUTH_LABELS}, got {self.ground_truth!r}")
        if self.model_truth not in MODEL_TRUTH_LABELS:
            raise ValueError(f"model_truth must be one of {MODEL_TRUTH_LABELS}, got {self.model_truth!r}")
        grids = tuple(self.grids)
        object.__setattr__(self, "grids", grids)
        seen: set[int] = set()
        for g in grids:
            if g.concept_id in seen:
                raise DuplicateId(f"sample {self.sample_id!r} has two grids for concept {g.concept_id}")
            seen.add(g.concept_id)
        shapes = {g.values.shape for g in grids}
        if len(shapes) > 1:
            raise ValueError(f"sample {self.sample_id!r} mixes grid shapes: {sorted(shapes)}")

    def concept_ids(self) -> tuple[int, ...]:
        return tuple(g.concept_id for g in self.grids)

    def grid_for(self, concept_id: int) -> RelevanceGrid:
        for g in self.grids:
            if g.concept_id == concept_id:
                return g
        raise UnknownConcept(f"sample {self.sample_id!r} has no grid for concept {concept_id}")

    def has_concept(self, concept_id: int) -> bool:
        return any(g.concept_id == concept_id for g in self.grids)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of samples for one class-vs-contrast explanation."""

    samples: tuple[SampleRecord, ...]
    class_name: str
    contrast_class_name: str
    layer_id: str

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def sample(self, sample_id: str) -> SampleRecord:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        from .errors import UnknownSample

        raise UnknownSample(f"no sample {sample_id!r} in dataset")

    def concept_ids(self) -> tuple[int, ...]:
        ids: set[int] = set()
        for s in self.samples:
            ids.update(s.concept_ids())
        return tuple(sorted(ids))


@dataclass(frozen=True)
class ConceptScore:
    """Total relevance of one concept in one sample, with its dominant sign."""

    concept_id: int
    total_relevance: float
    sign: str  # "pos", "neg" or "null"

    def __post_init__(self):
        if self.sign not in ("pos", "neg", "null"):
            raise ValueError(f"bad sign {self.sign!r}")


@dataclass(frozen=True, eq=False)
class ConceptRegion:
    """A localized instance of a concept: mask, outline and centroid.

    The mask is the semantic ground truth for spatial predicates; the
    boundary polygon exists for display and serialization. centroid is the
    arithmetic mean (x, y) of the set pixels, y growing downward.
    """

    concept_id: int
    sign: str
    mask: np.ndarray
    boundary: tuple[tuple[int, int], ...]
    centroid: tuple[float, float]

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"bad region sign {self.sign!r}")
        mask = _as_readonly(self.mask, bool)
        if mask.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not mask.any():
            raise ValueError("region mask must be non-empty")
        object.__setattr__(self, "mask", mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConceptRegion):
            return NotImplemented
        return (
            self.concept_id == other.concept_id
            and self.sign == other.sign
            and np.array_equal(self.mask, other.mask)
            and self.boundary == other.boundary
            and self.centroid == other.centroid
        )


def canonical_order(dataset: Dataset) -> Dataset:
    """Return the dataset with samples sorted by id and grids by concept id.

    Raises DuplicateId when two samples share an id. Idempotent, and
    invariant under any permutation of the input.
    """
    ids = [s.sample_id for s in dataset.samples]
    if len(ids) != len(set(ids)):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateId(f"duplicate sample ids: {dup}")
    samples = []
    for s in sorted(dataset.samples, key=lambda s: s.sample_id):
        grids = tuple(sorted(s.grids, key=lambda g: g.concept_id))
        samples.append(SampleRecord(s.sample_id, s.ground_truth, s.model_truth, grids))
    return Dataset(tuple(samples), dataset.class_name, dataset.contrast_class_name, dataset.layer_id)


def is_valid_sample_id(sample_id: str) -> bool:
    """True when the id is a lowercase alphanumeric-underscore identifier."""
    return bool(_SAMPLE_ID_RE.match(sample_id))


def normalize_sample_id(raw: str) -> str:
    """Best-effort mapping of an arbitrary id to a valid lowercase identifier."""
    out = re.sub(r"[^a-z0-9_]", "_", raw.lower())
    if not out or not out[0].isalpha():
        out = "s_" + out
    return out
