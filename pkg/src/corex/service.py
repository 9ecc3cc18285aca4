"""HTTP front door for interactive exploration of a pipeline run.

A SessionManager owns one dataset and pipeline configuration. Reads hand
out an immutable snapshot; mutations (extra constraints, mask probes)
run under a single writer lock and swap the snapshot atomically, so
readers never observe a half-updated theory. Every accepted mutation
appends one history entry.
"""
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np

from .analysis import (
    EvaluationReport,
    MaskSpec,
    ablate,
    clusters,
    contrastive,
    rank_analysis,
    report_to_dict,
    verbalize_clause,
)
from .errors import CorexError, InvalidInput, UnknownSample
from .ilp import Clause, ConstraintSet, Literal, clause_to_text, theory_to_text
from .kb import render_atom
from .model import Dataset
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    mask_spec_from_partition,
    run_pipeline,
    with_constraints,
)
from .selection import score_concepts


class ServiceBusy(CorexError):
    """Another mutation holds the writer lock and queueing is disabled."""


@dataclass(frozen=True)
class HistoryEntry:
    seq: int
    action: str
    fidelity: float
    f1: float
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "action": self.action,
            "fidelity": self.fidelity,
            "f1": self.f1,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class ServiceState:
    result: PipelineResult
    config: PipelineConfig
    history: tuple[HistoryEntry, ...]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _entry(seq: int, action: str, report: EvaluationReport) -> HistoryEntry:
    return HistoryEntry(seq, action, report.fidelity, report.f1, _now())


class SessionManager:
    """Single-dataset session: one writer at a time, atomic snapshot swap."""

    def __init__(
        self,
        dataset: Dataset,
        config: PipelineConfig | None = None,
        oracle=None,
        queue_mutations: bool = True,
        concept_labels: dict[int, str] | None = None,
    ):
        self._oracle = oracle
        self._queue = queue_mutations
        self._lock = threading.Lock()
        self.concept_labels = dict(concept_labels or {})
        cfg = config or PipelineConfig()
        result = run_pipeline(dataset, cfg)
        self._state = ServiceState(result, cfg, (_entry(0, "init", result.report),))

    def snapshot(self) -> ServiceState:
        return self._state

    def _locked(self):
        if self._lock.acquire(blocking=self._queue):
            return
        raise ServiceBusy("another mutation is in progress")

    def induce_with(self, extra: ConstraintSet) -> ServiceState:
        """Re-run induction with additional constraints; swaps the snapshot."""
        self._locked()
        try:
            cfg = with_constraints(self._state.config, extra)
            result = run_pipeline(self._state.result.dataset, cfg)
            entry = _entry(len(self._state.history), "induce", result.report)
            self._state = ServiceState(result, cfg, self._state.history + (entry,))
            return self._state
        finally:
            self._lock.release()

    def apply_mask(self, label: str, concepts=None) -> tuple[MaskSpec, EvaluationReport]:
        """Ablation probe via the model oracle; leaves the theory untouched."""
        if self._oracle is None:
            raise InvalidInput("session has no model oracle; masking is unavailable")
        self._locked()
        try:
            state = self._state
            if label == "custom":
                if not concepts:
                    raise InvalidInput("custom mask needs a non-empty concept list")
                spec = MaskSpec(frozenset(int(c) for c in concepts), "custom")
            else:
                spec = mask_spec_from_partition(state.result.partition, label)
            report = ablate(state.result.dataset, spec, self._oracle)
            entry = _entry(len(state.history), f"mask:{spec.label}", report)
            self._state = replace(state, history=state.history + (entry,))
            return spec, report
        finally:
            self._lock.release()


def _literal_dict(lit: Literal) -> dict:
    return {"predicate": lit.predicate, "args": [[cid, sign] for cid, sign in lit.args]}


def _clause_dict(index: int, clause: Clause, class_name: str, labels) -> dict:
    return {
        "index": index,
        "text": clause_to_text(clause),
        "verbalized": verbalize_clause(clause, class_name, labels),
        "body": [_literal_dict(lit) for lit in clause.body],
        "ground_sample": clause.ground_sample,
        "covered_pos": sorted(clause.covered_pos),
        "covered_neg": sorted(clause.covered_neg),
    }


def theory_payload(state: ServiceState, labels) -> dict:
    result = state.result
    cons = state.config.constraints
    return {
        "class_name": result.dataset.class_name,
        "text": theory_to_text(result.theory),
        "clauses": [
            _clause_dict(i, c, result.dataset.class_name, labels)
            for i, c in enumerate(result.theory.clauses)
        ],
        "uncovered_pos": list(result.theory.uncovered_pos),
        "constraints": {
            "forbidden_concepts": sorted(cons.forbidden_concepts),
            "forbidden_relations": sorted(cons.forbidden_relations),
            "forbidden_literals": [_literal_dict(l) for l in sorted(cons.forbidden_literals)],
        },
    }


def sample_payload(state: ServiceState, sample_id: str, labels) -> dict:
    result = state.result
    sample = result.dataset.sample(sample_id)
    kept = {s.concept_id for s in result.scores[sample_id]}
    all_scores = score_concepts(sample, state.config.selection)
    return {
        "sample_id": sample_id,
        "ground_truth": sample.ground_truth,
        "model_truth": sample.model_truth,
        "explainer_truth": result.explainer[sample_id],
        "height": sample.grids[0].height if sample.grids else 0,
        "width": sample.grids[0].width if sample.grids else 0,
        "concepts": [
            {
                "concept_id": s.concept_id,
                "label": labels.get(s.concept_id),
                "total_relevance": s.total_relevance,
                "sign": s.sign,
                "kept": s.concept_id in kept,
                "grid": np.asarray(sample.grid_for(s.concept_id).values, dtype=float).tolist(),
            }
            for s in all_scores
        ],
        "regions": [
            {
                "concept_id": r.concept_id,
                "sign": r.sign,
                "size": r.size,
                "centroid": [r.centroid[0], r.centroid[1]],
                "boundary": [[x, y] for x, y in r.boundary],
            }
            for r in result.regions[sample_id]
        ],
        "facts": sorted(
            render_atom(a) for a in result.kb.sample_facts(sample_id)
        ),
    }


def metrics_payload(state: ServiceState) -> dict:
    doc = report_to_dict(state.result.report)
    doc.update(
        {
            "class_name": state.result.dataset.class_name,
            "n_samples": len(state.result.dataset.samples),
            "n_clauses": len(state.result.theory.clauses),
            "history": [e.to_dict() for e in state.history],
        }
    )
    return doc


def clusters_payload(state: ServiceState) -> dict:
    groups = clusters(state.result.theory, state.result.kb)
    return {
        "groups": [
            {
                "clause_indices": sorted(key),
                "count": len(samples),
                "samples": list(samples),
            }
            for key, samples in sorted(groups.items(), key=lambda kv: sorted(kv[0]))
        ]
    }


def ranks_payload(state: ServiceState, top_rules: int) -> dict:
    hist = rank_analysis(state.result.dataset, state.result.theory, top_rules)
    return {
        "top_rules": top_rules,
        "histograms": {
            str(cid): [[rank, count] for rank, count in pairs] for cid, pairs in hist.items()
        },
    }


def explanation_payload(state: ServiceState, sample_id: str, labels) -> dict:
    result = state.result
    if sample_id not in result.explainer:
        raise UnknownSample(f"unknown sample {sample_id!r}")
    report = contrastive(
        result.theory, sample_id, result.kb.sample_facts(sample_id), concept_labels=labels
    )
    clause = result.theory.clauses[report.clause_index]
    return {
        "sample_id": sample_id,
        "clause_index": report.clause_index,
        "clause_text": clause_to_text(clause),
        "clause_verbalized": verbalize_clause(clause, result.dataset.class_name, labels),
        "covered": not report.failing_literals,
        "failing_literals": [_literal_dict(l) for l in report.failing_literals],
        "verbalization": report.verbalization,
    }


def _parse_constraints(body) -> ConstraintSet:
    if not isinstance(body, dict):
        raise InvalidInput("request body must be a JSON object")
    allowed = {"forbidden_concepts", "forbidden_relations", "forbidden_literals"}
    unknown = set(body) - allowed
    if unknown:
        raise InvalidInput(f"unknown constraint fields: {sorted(unknown)}")
    try:
        concepts = frozenset(int(c) for c in body.get("forbidden_concepts", []))
        relations = frozenset(str(r) for r in body.get("forbidden_relations", []))
        literals = frozenset(
            Literal(e["predicate"], tuple((int(c), s) for c, s in e["args"]))
            for e in body.get("forbidden_literals", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed constraints: {exc}") from exc
    return ConstraintSet(concepts, relations, literals)


def create_app(session: SessionManager):
    """Build the FastAPI app over a session. Import deferred so the core
    pipeline stays importable without the HTTP extras."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    app = FastAPI(title="corex", docs_url=None, redoc_url=None)
    labels = session.concept_labels

    @app.exception_handler(RequestValidationError)
    async def _invalid(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ServiceBusy)
    async def _busy(request: Request, exc: ServiceBusy):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(UnknownSample)
    async def _unknown(request: Request, exc: UnknownSample):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(CorexError)
    async def _bad(request: Request, exc: CorexError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/samples")
    def list_samples():
        state = session.snapshot()
        return {
            "class_name": state.result.dataset.class_name,
            "samples": [
                {
                    "sample_id": s.sample_id,
                    "ground_truth": s.ground_truth,
                    "model_truth": s.model_truth,
                    "explainer_truth": state.result.explainer[s.sample_id],
                }
                for s in state.result.dataset.samples
            ],
        }

    @app.get("/samples/{sample_id}")
    def get_sample(sample_id: str):
        return sample_payload(session.snapshot(), sample_id, labels)

    @app.get("/theory")
    def get_theory():
        return theory_payload(session.snapshot(), labels)

    @app.get("/clusters")
    def get_clusters():
        return clusters_payload(session.snapshot())

    @app.get("/ranks")
    def get_ranks(top_rules: int = 3):
        return ranks_payload(session.snapshot(), top_rules)

    @app.get("/explanations/{sample_id}")
    def get_explanation(sample_id: str):
        return explanation_payload(session.snapshot(), sample_id, labels)

    @app.get("/metrics")
    def get_metrics():
        return metrics_payload(session.snapshot())

    @app.post("/induce")
    async def post_induce(request: Request):
        try:
            body = await request.json()
        except Exception as exc:
            raise InvalidInput(f"body is not valid JSON: {exc}") from exc
        extra = _parse_constraints(body)
        state = session.induce_with(extra)
        return theory_payload(state, labels)

    @app.post("/mask")
    async def post_mask(request: Request):
        try:
            body = await request.json()
        except Exception as exc:
            raise InvalidInput(f"body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict) or "label" not in body:
            raise InvalidInput("mask request needs a 'label' field")
        spec, report = session.apply_mask(str(body["label"]), body.get("concepts"))
        doc = report_to_dict(report)
        doc["mask"] = {"label": spec.label, "masked_concepts": sorted(spec.masked_concepts)}
        return doc

    return app


def serve(session: SessionManager, host: str = "127.0.0.1", port: int = 8000, ui_dir=None):
    import uvicorn

    app = create_app(session)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="warning")
