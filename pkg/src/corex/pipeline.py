"""End-to-end run: relevance maps in, theory and reports out.

Stages: optional concept masking, concept filtering, localization,
relation extraction, knowledge-base assembly, rule induction, and
evaluation. A failing stage re-raises its error with the stage name
prefixed. Artifact files are written with sorted keys and LF endings
so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from .analysis import EvaluationReport, MaskSpec, mask_dataset, report_from_labels, report_to_json
from .errors import ConfigError, CorexError, InvalidInput
from .geometry import LocalizeConfig, localize
from .ilp import ConstraintSet, LearnConfig, Literal, Theory, explainer_truth, induce, theory_to_json, theory_to_text
from .kb import KnowledgeBase, build_kb, render_kb
from .model import ConceptRegion, ConceptScore, Dataset, canonical_order
from .relations import RELATION_SETS, RelationConfig, RelationFact, default_relation_config, find_relations
from .selection import ConceptPartition, SelectionConfig, dataset_threshold, filter_concepts, partition_concepts


@dataclass(frozen=True)
class RelationSettings:
    """Relation thresholds as fractions of the image diagonal."""

    close_range_frac: float = 0.10
    center_buffer_frac: float = 0.05
    enabled_sets: frozenset[str] = frozenset(RELATION_SETS)

    def __post_init__(self):
        if self.close_range_frac <= 0 or self.center_buffer_frac <= 0:
            raise ValueError("relation threshold fractions must be positive")
        unknown = frozenset(self.enabled_sets) - frozenset(RELATION_SETS)
        if unknown:
            raise ValueError(f"unknown relation sets: {sorted(unknown)}")
        object.__setattr__(self, "enabled_sets", frozenset(self.enabled_sets))

    def resolve(self, height: int, width: int) -> RelationConfig:
        return default_relation_config(
            height, width, self.close_range_frac, self.center_buffer_frac, self.enabled_sets
        )


@dataclass(frozen=True)
class PipelineConfig:
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    localize: LocalizeConfig = field(default_factory=LocalizeConfig)
    relations: RelationSettings = field(default_factory=RelationSettings)
    learn: LearnConfig = field(default_factory=LearnConfig)
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    mask: MaskSpec | None = None


@dataclass(frozen=True)
class PipelineResult:
    dataset: Dataset
    config: PipelineConfig
    relation_config: RelationConfig
    scores: dict[str, tuple[ConceptScore, ...]]
    regions: dict[str, tuple[ConceptRegion, ...]]
    facts: dict[str, frozenset[RelationFact]]
    kb: KnowledgeBase
    theory: Theory
    explainer: dict[str, str]
    report: EvaluationReport
    partition: ConceptPartition
    artifacts: tuple[str, ...] = ()


@contextmanager
def _stage(name: str):
    try:
        yield
    except CorexError as exc:
        message = exc.args[0] if exc.args else ""
        exc.args = (f"[{name}] {message}",) + exc.args[1:]
        raise


def run_pipeline(dataset: Dataset, cfg: PipelineConfig, out_dir=None) -> PipelineResult:
    dataset = canonical_order(dataset)
    if not dataset.samples:
        raise InvalidInput("pipeline needs at least one sample")
    shaped = next((s for s in dataset.samples if s.grids), None)
    if shaped is None:
        raise InvalidInput("pipeline needs at least one relevance grid")

    with _stage("mask"):
        working = (
            mask_dataset(dataset, cfg.mask.masked_concepts) if cfg.mask is not None else dataset
        )

    with _stage("filter"):
        threshold = (
            dataset_threshold(working, cfg.selection)
            if cfg.selection.quantile_scope == "global"
            else None
        )
        scores = {
            s.sample_id: filter_concepts(s, cfg.selection, threshold) for s in working.samples
        }

    with _stage("localize"):
        regions: dict[str, tuple[ConceptRegion, ...]] = {}
        for s in working.samples:
            found = []
            for score in scores[s.sample_id]:
                found.extend(localize(s.grid_for(score.concept_id), score.sign, cfg.localize))
            regions[s.sample_id] = tuple(found)

    with _stage("relations"):
        rel_cfg = cfg.relations.resolve(shaped.grids[0].height, shaped.grids[0].width)
        facts = {sid: find_relations(list(regs), rel_cfg) for sid, regs in regions.items()}

    with _stage("kb"):
        kb = build_kb(working, facts)

    with _stage("induce"):
        theory = induce(kb, cfg.learn, cfg.constraints)

    with _stage("evaluate"):
        explainer = {
            sid: explainer_truth(theory, sid, kb.sample_facts(sid)) for sid in kb.all_samples()
        }
        order = [s.sample_id for s in working.samples]
        report = report_from_labels(
            [explainer[sid] for sid in order],
            [s.model_truth for s in working.samples],
            [s.ground_truth for s in working.samples],
        )
        partition = partition_concepts(working, cfg.selection, theory.concept_ids())

    artifacts: tuple[str, ...] = ()
    if out_dir is not None:
        with _stage("write"):
            artifacts = write_artifacts(out_dir, cfg, kb, theory, report, partition)

    return PipelineResult(
        dataset=dataset,
        config=cfg,
        relation_config=rel_cfg,
        scores=scores,
        regions=regions,
        facts=facts,
        kb=kb,
        theory=theory,
        explainer=explainer,
        report=report,
        partition=partition,
        artifacts=artifacts,
    )


def write_artifacts(
    out_dir,
    cfg: PipelineConfig,
    kb: KnowledgeBase,
    theory: Theory,
    report: EvaluationReport,
    partition: ConceptPartition,
) -> tuple[str, ...]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bk, pos, neg = render_kb(kb)
    partition_doc = {
        "rule_concepts": sorted(partition.rule_concepts),
        "bk_concepts": sorted(partition.bk_concepts),
        "irrelevant_concepts": sorted(partition.irrelevant_concepts),
    }
    files = {
        "bk.pl": bk,
        "pos.pl": pos,
        "neg.pl": neg,
        "theory.pl": theory_to_text(theory),
        "theory.json": theory_to_json(theory),
        "report.json": report_to_json(report),
        "partition.json": json.dumps(partition_doc, indent=2, sort_keys=True) + "\n",
        "config.json": json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n",
    }
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(str(path))
    return tuple(written)


def mask_spec_from_partition(partition: ConceptPartition, label: str) -> MaskSpec:
    """Named masks over a concept partition.

    rule_plus_nonbk zeroes the rule concepts together with everything the
    filter discarded; nonbk_only zeroes only the discarded concepts.
    """
    if label == "rule_plus_nonbk":
        return MaskSpec(partition.rule_concepts | partition.irrelevant_concepts, label)
    if label == "nonbk_only":
        return MaskSpec(partition.irrelevant_concepts, label)
    raise InvalidInput(f"unknown mask label {label!r}")


def _sorted_sets(sets) -> list[str]:
    order = {name: i for i, name in enumerate(RELATION_SETS)}
    return sorted(sets, key=lambda s: order[s])


def config_to_dict(cfg: PipelineConfig) -> dict:
    doc = {
        "selection": {
            "bk_quantile": cfg.selection.bk_quantile,
            "zero_band": cfg.selection.zero_band,
            "quantile_scope": cfg.selection.quantile_scope,
        },
        "localize": {
            "pixel_threshold": cfg.localize.pixel_threshold,
            "min_component_px": cfg.localize.min_component_px,
            "max_instances": cfg.localize.max_instances,
        },
        "relations": {
            "close_range_frac": cfg.relations.close_range_frac,
            "center_buffer_frac": cfg.relations.center_buffer_frac,
            "enabled_sets": _sorted_sets(cfg.relations.enabled_sets),
        },
        "learn": {
            "max_body": cfg.learn.max_body,
            "min_pos": cfg.learn.min_pos,
            "noise": cfg.learn.noise,
            "beam_width": cfg.learn.beam_width,
            "aleph_compat_ground_clauses": cfg.learn.aleph_compat_ground_clauses,
        },
        "constraints": {
            "forbidden_concepts": sorted(cfg.constraints.forbidden_concepts),
            "forbidden_relations": sorted(cfg.constraints.forbidden_relations),
            "forbidden_literals": [
                {"predicate": lit.predicate, "args": [[cid, sign] for cid, sign in lit.args]}
                for lit in sorted(cfg.constraints.forbidden_literals)
            ],
        },
        "mask": None
        if cfg.mask is None
        else {"label": cfg.mask.label, "masked_concepts": sorted(cfg.mask.masked_concepts)},
    }
    return doc


def constraints_from_dict(doc: dict) -> ConstraintSet:
    try:
        literals = frozenset(
            Literal(e["predicate"], tuple((int(c), s) for c, s in e["args"]))
            for e in doc.get("forbidden_literals", [])
        )
        return ConstraintSet(
            frozenset(int(c) for c in doc.get("forbidden_concepts", [])),
            frozenset(str(r) for r in doc.get("forbidden_relations", [])),
            literals,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed constraints: {exc}") from exc


def config_from_dict(doc: dict) -> PipelineConfig:
    try:
        sel = SelectionConfig(**doc.get("selection", {}))
        loc = LocalizeConfig(**doc.get("localize", {}))
        rel_doc = dict(doc.get("relations", {}))
        if "enabled_sets" in rel_doc:
            rel_doc["enabled_sets"] = frozenset(rel_doc["enabled_sets"])
        rel = RelationSettings(**rel_doc)
        learn = LearnConfig(**doc.get("learn", {}))
        constraints = constraints_from_dict(doc.get("constraints", {}))
        mask_doc = doc.get("mask")
        mask = (
            None
            if mask_doc is None
            else MaskSpec(frozenset(int(c) for c in mask_doc["masked_concepts"]), mask_doc["label"])
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed pipeline config: {exc}") from exc
    return PipelineConfig(sel, loc, rel, learn, constraints, mask)


def config_from_json(text: str) -> PipelineConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(doc)


def with_constraints(cfg: PipelineConfig, extra: ConstraintSet) -> PipelineConfig:
    return replace(cfg, constraints=cfg.constraints.merged(extra))
