"""Evaluation and exploration tools around an induced theory.

Fidelity and F1 metrics, concept-masking ablation against a model oracle,
rule-coverage clusters, relevance-rank histograms, contrastive reports
for uncovered samples, and template verbalization of clauses.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import InvalidClause, InvalidInput, OracleError
from .ilp import Clause, Literal, Theory, covers
from .kb import Atom, KnowledgeBase
from .model import Dataset, RelevanceGrid, SampleRecord

MASK_LABELS = ("rule_plus_nonbk", "nonbk_only", "custom")


@dataclass(frozen=True)
class EvaluationReport:
    """Agreement metrics: fidelity plus a confusion matrix vs ground truth."""

    fidelity: float
    confusion: tuple[int, int, int, int]  # tp, tn, fp, fn
    f1: float


@dataclass(frozen=True)
class CoverageSignature:
    sample_id: str
    clause_indices: frozenset[int]


@dataclass(frozen=True)
class MaskSpec:
    """Concepts to zero out before re-running a model oracle."""

    masked_concepts: frozenset[int]
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "masked_concepts", frozenset(self.masked_concepts))
        if self.label not in MASK_LABELS:
            raise ValueError(f"label must be one of {MASK_LABELS}, got {self.label!r}")
        if self.label != "custom" and not self.masked_concepts:
            raise ValueError(f"mask labelled {self.label!r} must name at least one concept")


@dataclass(frozen=True)
class ContrastiveReport:
    sample_id: str
    clause_index: int
    failing_literals: tuple[Literal, ...]
    verbalization: str


def fidelity(truth_a, truth_b) -> float:
    """Fraction of positions where the two label sequences agree."""
    a, b = list(truth_a), list(truth_b)
    if not a or len(a) != len(b):
        raise InvalidInput(f"need equal non-empty sequences, got lengths {len(a)} and {len(b)}")
    return sum(x == y for x, y in zip(a, b)) / len(a)


def f1_from_confusion(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def report_from_labels(predicted, reference, ground_truth) -> EvaluationReport:
    """Build a report: fidelity of predicted vs reference, confusion vs ground.

    Samples with unknown ground truth are left out of the confusion counts
    (they still participate in fidelity).
    """
    fid = fidelity(predicted, reference)
    tp = tn = fp = fn = 0
    for p, g in zip(predicted, ground_truth):
        if g == "unknown":
            continue
        if p == "positive" and g == "positive":
            tp += 1
        elif p == "negative" and g == "negative":
            tn += 1
        elif p == "positive" and g == "negative":
            fp += 1
        else:
            fn += 1
    return EvaluationReport(fid, (tp, tn, fp, fn), f1_from_confusion(tp, fp, fn))


def mask_dataset(dataset: Dataset, masked_concepts: frozenset[int]) -> Dataset:
    """Copy of the dataset with the named concepts' grids zeroed."""
    samples = []
    for s in dataset.samples:
        grids = []
        for g in s.grids:
            if g.concept_id in masked_concepts:
                grids.append(
                    RelevanceGrid(g.concept_id, g.layer_id, np.zeros_like(g.values))
                )
            else:
                grids.append(g)
        samples.append(SampleRecord(s.sample_id, s.ground_truth, s.model_truth, tuple(grids)))
    return Dataset(tuple(samples), dataset.class_name, dataset.contrast_class_name, dataset.layer_id)


def ablate(dataset: Dataset, spec: MaskSpec, oracle) -> EvaluationReport:
    """Zero the masked concepts, re-label with the oracle, score vs ground truth."""
    masked = mask_dataset(dataset, spec.masked_concepts)
    predicted = []
    for s in masked.samples:
        try:
            label = oracle(s)
        except Exception as exc:
            raise OracleError(f"oracle failed on sample {s.sample_id!r}: {exc}") from exc
        if label not in ("positive", "negative"):
            raise OracleError(f"oracle returned {label!r} for sample {s.sample_id!r}")
        predicted.append(label)
    ground = [s.ground_truth for s in dataset.samples]
    return report_from_labels(predicted, ground, ground)


def coverage_signature(theory: Theory, sample_id: str, facts: frozenset[Atom]) -> CoverageSignature:
    indices = frozenset(
        i for i, c in enumerate(theory.clauses) if covers(c, sample_id, facts)
    )
    return CoverageSignature(sample_id, indices)


def clusters(theory: Theory, kb: KnowledgeBase) -> dict[frozenset[int], tuple[str, ...]]:
    """Partition all samples by the exact set of clauses covering them.

    The empty-set key collects samples no clause covers.
    """
    groups: dict[frozenset[int], list[str]] = {}
    for sid in kb.all_samples():
        sig = coverage_signature(theory, sid, kb.sample_facts(sid))
        groups.setdefault(sig.clause_indices, []).append(sid)
    return {key: tuple(ids) for key, ids in groups.items()}


def _top_clause_indices(theory: Theory, top_rules: int) -> list[int]:
    order = sorted(range(len(theory.clauses)), key=lambda i: (-len(theory.clauses[i].covered_pos), i))
    return order[:top_rules]


def rank_analysis(
    dataset: Dataset, theory: Theory, top_rules: int = 3
) -> dict[int, tuple[tuple[int, int], ...]]:
    """Relevance-rank histograms for the concepts of the strongest rules.

    A concept's rank in a sample is its 1-based position when the sample's
    concepts are ordered by descending |total relevance| (ties broken by
    ascending concept id). For each rule concept the 10 most frequent
    ranks are returned as (rank, count) pairs, most frequent first.
    """
    if top_rules < 1:
        raise InvalidInput("top_rules must be >= 1")
    if not theory.clauses:
        raise InvalidInput("rank analysis needs a non-empty theory")
    wanted: set[int] = set()
    for idx in _top_clause_indices(theory, top_rules):
        wanted.update(theory.clauses[idx].concept_ids())
    counters: dict[int, Counter] = {cid: Counter() for cid in wanted}
    for s in dataset.samples:
        totals = sorted(
            ((abs(float(g.values.sum(dtype=np.float64))), g.concept_id) for g in s.grids),
            key=lambda t: (-t[0], t[1]),
        )
        for rank, (_, cid) in enumerate(totals, start=1):
            if cid in wanted:
                counters[cid][rank] += 1
    out = {}
    for cid in sorted(wanted):
        common = sorted(counters[cid].items(), key=lambda rc: (-rc[1], rc[0]))[:10]
        out[cid] = tuple(common)
    return out


def _best_clause_index(theory: Theory) -> int:
    return _top_clause_indices(theory, 1)[0]


def contrastive(
    theory: Theory,
    sample_id: str,
    facts: frozenset[Atom],
    clause_index: int | None = None,
    concept_labels: dict[int, str] | None = None,
) -> ContrastiveReport:
    """Which literals of a clause fail for this sample, and how to say it.

    Defaults to the clause with the highest positive coverage. The failing
    list preserves body order and is empty exactly when the clause covers
    the sample.
    """
    if not theory.clauses:
        raise InvalidInput("contrastive explanation needs a non-empty theory")
    if clause_index is None:
        clause_index = _best_clause_index(theory)
    if not 0 <= clause_index < len(theory.clauses):
        raise InvalidClause(f"clause index {clause_index} out of range")
    clause = theory.clauses[clause_index]
    if clause.ground_sample is not None:
        raise InvalidInput("contrastive explanation needs a clause with a literal body")
    failing = tuple(lit for lit in clause.body if lit.instantiate(sample_id) not in facts)
    parts = []
    for lit in failing:
        if len(lit.args) == 1:
            parts.append(f"missing: {_concept_phrase(*lit.args[0], concept_labels)}")
        else:
            parts.append(f"relation '{_literal_phrase(lit, concept_labels)}' does not hold")
    return ContrastiveReport(sample_id, clause_index, failing, "; ".join(parts))


# How each relation reads in a sentence. {s} is the subject region's
# phrase, {o} the object's; compass and surrounding sentences follow the
# object-first wording of their definitions.
_RELATION_TEMPLATES = {
    "above_of": "{s} is above of {o}",
    "below_of": "{s} is below of {o}",
    "left_of": "{s} is left of {o}",
    "right_of": "{s} is right of {o}",
    "center": "{o} is centered on {s}",
    "middle_right": "{o} is middle right to {s}",
    "bottom_right": "{o} is bottom right to {s}",
    "bottom_middle": "{o} is middle bottom to {s}",
    "bottom_left": "{o} is bottom left to {s}",
    "middle_left": "{o} is middle left to {s}",
    "top_left": "{o} is top left to {s}",
    "top_middle": "{o} is middle top to {s}",
    "top_right": "{o} is top right to {s}",
    "disjoint": "{s} is disjoint of {o}",
    "equals": "{s} equals {o}",
    "touches": "{s} touches {o}",
    "overlaps": "{s} overlaps {o}",
    "covers": "{s} covers {o}",
    "contains": "{s} contains {o}",
    "covered_by": "{s} is covered by {o}",
    "within": "{s} is within {o}",
    "close_to": "{s} is close to {o}",
    "amid_x": "{o} is horizontally surrounded by {s}",
    "amid_y": "{o} is vertically surrounded by {s}",
}


def _concept_phrase(cid: int, sign: str, labels: dict[int, str] | None) -> str:
    word = "positive" if sign == "pos" else "negative"
    label = (labels or {}).get(cid)
    suffix = f" ({label})" if label else ""
    return f"{word} concept c{cid}{suffix}"


def _literal_phrase(lit: Literal, labels: dict[int, str] | None) -> str:
    if len(lit.args) == 1:
        return f"{_concept_phrase(*lit.args[0], labels)} is contained"
    s = _concept_phrase(*lit.args[0], labels)
    o = _concept_phrase(*lit.args[1], labels)
    return _RELATION_TEMPLATES[lit.predicate].format(s=s, o=o)


def verbalize_clause(
    clause: Clause, class_name: str, concept_labels: dict[int, str] | None = None
) -> str:
    """Template rendering, e.g. "Face, if positive concept c1 is above of ..."."""
    head = class_name[:1].upper() + class_name[1:] if class_name else class_name
    if clause.ground_sample is not None:
        return f"{head}, if the sample is {clause.ground_sample}"
    if not clause.body:
        return head
    body = " and ".join(_literal_phrase(lit, concept_labels) for lit in clause.body)
    return f"{head}, if {body}"


def verbalize(obj, class_name: str = "", concept_labels: dict[int, str] | None = None) -> str:
    """Render a Clause or a ContrastiveReport as text."""
    if isinstance(obj, Clause):
        return verbalize_clause(obj, class_name, concept_labels)
    if isinstance(obj, ContrastiveReport):
        return obj.verbalization
    raise InvalidInput(f"cannot verbalize {type(obj).__name__}")


def report_to_dict(report: EvaluationReport) -> dict:
    tp, tn, fp, fn = report.confusion
    return {
        "fidelity": report.fidelity,
        "confusion": {"tp": tp, "tn": tn, "fp": fp, "fn": fn},
        "f1": report.f1,
    }


def report_to_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def clusters_to_csv(groups: dict[frozenset[int], tuple[str, ...]]) -> str:
    """One row per cluster: clause indices joined by '|', size, sample ids."""
    lines = ["clause_indices,count,samples"]
    for key in sorted(groups, key=lambda k: sorted(k)):
        indices = "|".join(str(i) for i in sorted(key))
        lines.append(f"{indices},{len(groups[key])},{';'.join(groups[key])}")
    return "\n".join(lines) + "\n"


def ranks_to_csv(histograms: dict[int, tuple[tuple[int, int], ...]]) -> str:
    lines = ["concept_id,rank,count"]
    for cid in sorted(histograms):
        for rank, count in histograms[cid]:
            lines.append(f"{cid},{rank},{count}")
    return "\n".join(lines) + "\n"
