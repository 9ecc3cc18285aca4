"""Command-line entry points.

Subcommands: generate a synthetic benchmark, induce a theory and write
artifacts, evaluate fidelity, explain a sample, dump coverage clusters
or rank histograms, run a masking probe, or serve the HTTP API.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import synth
from .analysis import (
    MaskSpec,
    ablate,
    clusters,
    clusters_to_csv,
    contrastive,
    rank_analysis,
    ranks_to_csv,
    report_to_dict,
    report_to_json,
    verbalize_clause,
)
from .errors import ConfigError, CorexError
from .ilp import ConstraintSet, clause_to_text
from .ingest import load_dataset, save_dataset
from .model import Dataset
from .pipeline import (
    PipelineConfig,
    config_from_json,
    mask_spec_from_partition,
    run_pipeline,
)


def _add_pipeline_args(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("pipeline")
    g.add_argument("--config", type=Path, help="JSON pipeline config; flags override it")
    g.add_argument("--bk-quantile", type=float, dest="bk_quantile")
    g.add_argument("--zero-band", type=float, dest="zero_band")
    g.add_argument("--quantile-scope", choices=("per_sample", "global"), dest="quantile_scope")
    g.add_argument("--pixel-threshold", type=float, dest="pixel_threshold")
    g.add_argument("--min-component", type=int, dest="min_component")
    g.add_argument("--max-instances", type=int, dest="max_instances")
    g.add_argument("--close-range-frac", type=float, dest="close_range_frac")
    g.add_argument("--center-buffer-frac", type=float, dest="center_buffer_frac")
    g.add_argument("--relation-sets", dest="relation_sets", help="comma-separated set names")
    g.add_argument("--max-body", type=int, dest="max_body")
    g.add_argument("--min-pos", type=int, dest="min_pos")
    g.add_argument("--noise", type=int, dest="noise")
    g.add_argument("--beam-width", type=int, dest="beam_width")
    g.add_argument("--ground-clauses", action="store_true", dest="ground_clauses",
                   help="list uncovered positives as ground clauses")
    g.add_argument("--forbid-concept", type=int, action="append", default=[],
                   dest="forbid_concepts", metavar="ID")
    g.add_argument("--forbid-relation", action="append", default=[],
                   dest="forbid_relations", metavar="NAME")


def _maybe(cfg, **overrides):
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = config_from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = PipelineConfig()
    try:
        selection = _maybe(
            cfg.selection,
            bk_quantile=args.bk_quantile,
            zero_band=args.zero_band,
            quantile_scope=args.quantile_scope,
        )
        localize = _maybe(
            cfg.localize,
            pixel_threshold=args.pixel_threshold,
            min_component_px=args.min_component,
            max_instances=args.max_instances,
        )
        sets = None
        if args.relation_sets:
            sets = frozenset(s.strip() for s in args.relation_sets.split(",") if s.strip())
        relations = _maybe(
            cfg.relations,
            close_range_frac=args.close_range_frac,
            center_buffer_frac=args.center_buffer_frac,
            enabled_sets=sets,
        )
        learn = _maybe(
            cfg.learn,
            max_body=args.max_body,
            min_pos=args.min_pos,
            noise=args.noise,
            beam_width=args.beam_width,
            aleph_compat_ground_clauses=True if args.ground_clauses else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    constraints = cfg.constraints.merged(
        ConstraintSet(frozenset(args.forbid_concepts), frozenset(args.forbid_relations))
    )
    return PipelineConfig(selection, localize, relations, learn, constraints, cfg.mask)


def _data_path(arg: str) -> Path:
    path = Path(arg)
    return path / "manifest.json" if path.is_dir() else path


def _load(args) -> Dataset:
    return load_dataset(_data_path(args.data))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")


def _cmd_generate(args) -> int:
    cfg = synth.GeneratorConfig(
        seed=args.seed,
        n_pos=args.n_pos,
        n_neg=args.n_neg,
        height=args.grid_size,
        width=args.grid_size,
        distractor_concepts=args.distractors,
        blob_sigma=args.sigma,
        position_jitter=args.jitter,
        model_error_rate=args.error_rate,
        class_name=args.class_name,
    )
    dataset, rule, _ = synth.generate(cfg)
    out = Path(args.out)
    save_dataset(dataset, out)
    synth.write_rule_spec(rule, cfg, out / "expected_rule.json")
    print(f"wrote {len(dataset.samples)} samples to {out}")
    return 0


def _cmd_induce(args) -> int:
    dataset = _load(args)
    cfg = _config_from_args(args)
    result = run_pipeline(dataset, cfg, out_dir=args.out)
    for i, clause in enumerate(result.theory.clauses):
        print(clause_to_text(clause))
        print(f"  % {verbalize_clause(clause, dataset.class_name)}")
        print(f"  % covers {len(clause.covered_pos)} pos / {len(clause.covered_neg)} neg")
    if result.theory.uncovered_pos:
        print(f"% uncovered positives: {', '.join(result.theory.uncovered_pos)}")
    print(f"% fidelity {result.report.fidelity:.4f}  f1 {result.report.f1:.4f}")
    if args.out:
        print(f"% artifacts in {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    result = run_pipeline(_load(args), _config_from_args(args))
    _emit(report_to_json(result.report), args.out)
    return 0


def _cmd_explain(args) -> int:
    result = run_pipeline(_load(args), _config_from_args(args))
    report = contrastive(
        result.theory,
        args.sample,
        result.kb.sample_facts(args.sample),
        clause_index=args.clause,
    )
    clause = result.theory.clauses[report.clause_index]
    doc = {
        "sample_id": args.sample,
        "clause_index": report.clause_index,
        "clause": clause_to_text(clause),
        "clause_verbalized": verbalize_clause(clause, result.dataset.class_name),
        "covered": not report.failing_literals,
        "verbalization": report.verbalization,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_cluster(args) -> int:
    result = run_pipeline(_load(args), _config_from_args(args))
    _emit(clusters_to_csv(clusters(result.theory, result.kb)), args.out)
    return 0


def _cmd_ranks(args) -> int:
    result = run_pipeline(_load(args), _config_from_args(args))
    hist = rank_analysis(result.dataset, result.theory, args.top_rules)
    _emit(ranks_to_csv(hist), args.out)
    return 0


def _find_rule_spec(args) -> Path:
    if args.rule_spec:
        return Path(args.rule_spec)
    candidate = _data_path(args.data).parent / "expected_rule.json"
    if candidate.exists():
        return candidate
    raise ConfigError("no --rule-spec given and no expected_rule.json beside the data")


def _cmd_mask(args) -> int:
    dataset = _load(args)
    cfg = _config_from_args(args)
    _, oracle = synth.load_oracle(_find_rule_spec(args))
    if args.label == "custom":
        if not args.concepts:
            raise ConfigError("--label custom needs --concepts")
        spec = MaskSpec(frozenset(int(c) for c in args.concepts.split(",")), "custom")
    else:
        result = run_pipeline(dataset, cfg)
        spec = mask_spec_from_partition(result.partition, args.label)
    report = ablate(dataset, spec, oracle)
    doc = report_to_dict(report)
    doc["mask"] = {"label": spec.label, "masked_concepts": sorted(spec.masked_concepts)}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    from .service import SessionManager, serve

    dataset = _load(args)
    cfg = _config_from_args(args)
    oracle = None
    try:
        _, oracle = synth.load_oracle(_find_rule_spec(args))
    except (ConfigError, OSError):
        pass  # masking endpoint disabled without an oracle
    session = SessionManager(dataset, cfg, oracle=oracle)
    print(f"serving on http://{args.host}:{args.port}")
    serve(session, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic benchmark dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-pos", type=int, default=200)
    p.add_argument("--n-neg", type=int, default=200)
    p.add_argument("--grid-size", type=int, default=64)
    p.add_argument("--distractors", type=int, default=8)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--jitter", type=float, default=3.0)
    p.add_argument("--error-rate", type=float, default=0.0)
    p.add_argument("--class-name", default="face")
    p.set_defaults(func=_cmd_generate)

    for name, func, help_text in (
        ("induce", _cmd_induce, "learn a theory and print it"),
        ("evaluate", _cmd_evaluate, "print the fidelity report"),
        ("cluster", _cmd_cluster, "group samples by covering clauses (CSV)"),
        ("ranks", _cmd_ranks, "relevance-rank histograms of rule concepts (CSV)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--data", required=True, help="manifest.json or its directory")
        p.add_argument("--out", type=Path, default=None)
        if name == "ranks":
            p.add_argument("--top-rules", type=int, default=3)
        _add_pipeline_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("explain", help="contrastive explanation for one sample")
    p.add_argument("sample")
    p.add_argument("--data", required=True)
    p.add_argument("--clause", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("mask", help="zero concepts and re-score via the model oracle")
    p.add_argument("--data", required=True)
    p.add_argument("--label", required=True, choices=("rule_plus_nonbk", "nonbk_only", "custom"))
    p.add_argument("--concepts", help="comma-separated ids for --label custom")
    p.add_argument("--rule-spec", help="oracle spec JSON (default: expected_rule.json)")
    p.add_argument("--out", type=Path, default=None)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--rule-spec", help="oracle spec JSON enabling POST /mask")
    p.add_argument("--ui", type=Path, default=None, help="static UI directory to mount at /")
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
