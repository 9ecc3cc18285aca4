"""Concept-and-relation explanations for relevance-map classifiers.

Turns per-concept relevance grids into localized concept instances,
extracts spatial relations between them, and induces a small logic
program that mimics the model's decisions, together with evaluation
and exploration tooling (fidelity, masking probes, clusters, rank
histograms, contrastive reports) and an HTTP API.
"""

from .analysis import (
    ContrastiveReport,
    EvaluationReport,
    MaskSpec,
    ablate,
    clusters,
    contrastive,
    fidelity,
    mask_dataset,
    rank_analysis,
    report_from_labels,
    verbalize,
    verbalize_clause,
)
from .errors import (
    ConfigError,
    CorexError,
    DimensionMismatch,
    Disconnected,
    DuplicateId,
    EmptyPositives,
    FormatError,
    InconsistentTheory,
    InstanceMismatch,
    InvalidClause,
    InvalidInput,
    IoError,
    OracleError,
    ParseError,
    RenderError,
    UnknownConcept,
    UnknownSample,
)
from .geometry import LocalizeConfig, localize, trace_boundary
from .ilp import (
    Clause,
    ConstraintSet,
    LearnConfig,
    Literal,
    Theory,
    covers,
    explainer_truth,
    induce,
    theory_from_json,
    theory_from_text,
    theory_to_json,
    theory_to_text,
)
from .ingest import load_dataset, read_tensor_file, reference_samples, save_dataset, write_tensor_file
from .kb import Atom, KnowledgeBase, build_kb, parse_kb, render_kb
from .model import (
    ConceptRegion,
    ConceptScore,
    Dataset,
    RelevanceGrid,
    SampleRecord,
    canonical_order,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    RelationSettings,
    config_from_json,
    config_to_dict,
    mask_spec_from_partition,
    run_pipeline,
)
from .relations import (
    RelationConfig,
    RelationFact,
    close_to,
    compass_alignment,
    de9im,
    default_relation_config,
    find_relations,
    simple_alignment,
    surrounding,
)
from .selection import (
    ConceptPartition,
    SelectionConfig,
    filter_concepts,
    partition_concepts,
    score_concepts,
)
from .synth import GeneratorConfig, GroundTruthRule, PlantedConcept, SplitMix64, generate, make_oracle

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
