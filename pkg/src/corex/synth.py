"""Synthetic relevance-map benchmark with a planted spatial rule.

Each sample gets one Gaussian-blob grid per concept: a few planted
concepts whose canonical layout encodes the rule, plus distractor
concepts at random positions with smaller amplitudes. Positives keep
the planted layout (with jitter); negatives permute the planted
positions until the rule breaks. A deterministic oracle re-labels
samples from the blob geometry, so masking experiments can re-query
"the model" after concepts are zeroed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, OracleError
from .ilp import Literal
from .model import Dataset, RelevanceGrid, SampleRecord, canonical_order

_MASK64 = (1 << 64) - 1

# The oracle treats a planted concept as present only above this total
# absolute relevance; full-amplitude blobs sit far above it, zeroed
# grids at exactly 0.
RELEVANCE_FLOOR = 1.0


class SplitMix64:
    """Tiny deterministic RNG with a portable integer state (splitmix64)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        # 53 random bits -> [0, 1)
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def randint(self, n: int) -> int:
        """Uniform int in [0, n). Modulo bias is negligible for small n."""
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class PlantedConcept:
    concept_id: int
    canonical_position: tuple[float, float]  # (x, y)
    sign: str = "pos"


@dataclass(frozen=True)
class GroundTruthRule:
    """The spatial literals a positive sample must satisfy."""

    literals: tuple[Literal, ...]

    def concept_ids(self) -> frozenset[int]:
        out: set[int] = set()
        for lit in self.literals:
            out.update(lit.concept_ids())
        return frozenset(out)


def default_planted() -> tuple[PlantedConcept, ...]:
    return (
        PlantedConcept(1, (32.0, 16.0)),
        PlantedConcept(2, (32.0, 32.0)),
        PlantedConcept(3, (32.0, 48.0)),
    )


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 42
    n_pos: int = 200
    n_neg: int = 200
    height: int = 64
    width: int = 64
    planted: tuple[PlantedConcept, ...] = field(default_factory=default_planted)
    distractor_concepts: int = 8
    blob_sigma: float = 3.0
    position_jitter: float = 3.0
    model_error_rate: float = 0.0
    class_name: str = "face"
    contrast_class_name: str = "no_face"

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise ConfigError("need at least one positive and one negative sample")
        if self.height < 1 or self.width < 1:
            raise ConfigError("grid dimensions must be positive")
        if len(self.planted) < 2:
            raise ConfigError("need at least two planted concepts to carry a rule")
        if self.distractor_concepts < 0:
            raise ConfigError("distractor_concepts must be >= 0")
        if self.blob_sigma <= 0:
            raise ConfigError("blob_sigma must be positive")
        if self.position_jitter < 0:
            raise ConfigError("position_jitter must be >= 0")
        if not 0.0 <= self.model_error_rate < 1.0:
            raise ConfigError("model_error_rate must be in [0, 1)")
        ids = [p.concept_id for p in self.planted]
        if len(set(ids)) != len(ids):
            raise ConfigError("planted concept ids must be unique")
        if set(ids) & set(self.distractor_ids()):
            raise ConfigError("distractor ids collide with planted ids")
        for p in self.planted:
            x, y = p.canonical_position
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigError(f"planted concept {p.concept_id} lies outside the grid")
            if p.sign not in ("pos", "neg"):
                raise ConfigError(f"planted concept {p.concept_id} has sign {p.sign!r}")

    def distractor_ids(self) -> tuple[int, ...]:
        return tuple(range(10, 10 + self.distractor_concepts))


def derive_rule(cfg: GeneratorConfig) -> GroundTruthRule:
    """Ground-truth rule: the top-most planted concept above the bottom-most."""
    by_y = sorted(cfg.planted, key=lambda p: p.canonical_position[1])
    top, bottom = by_y[0], by_y[-1]
    if top.canonical_position[1] == bottom.canonical_position[1]:
        raise ConfigError("planted concepts need distinct vertical positions")
    lit = Literal("above_of", ((top.concept_id, top.sign), (bottom.concept_id, bottom.sign)))
    return GroundTruthRule((lit,))


def _rule_holds(rule: GroundTruthRule, centers: dict[int, tuple[float, float]]) -> bool:
    for lit in rule.literals:
        (a, _), (b, _) = lit.args
        if lit.predicate == "above_of":
            ok = centers[a][1] < centers[b][1]
        elif lit.predicate == "below_of":
            ok = centers[a][1] > centers[b][1]
        elif lit.predicate == "left_of":
            ok = centers[a][0] < centers[b][0]
        elif lit.predicate == "right_of":
            ok = centers[a][0] > centers[b][0]
        else:
            raise ConfigError(f"unsupported rule predicate {lit.predicate!r}")
        if not ok:
            return False
    return True


def _blob(height: int, width: int, x0: float, y0: float, amp: float, sigma: float) -> np.ndarray:
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    d2 = (xs - x0) ** 2 + (ys - y0) ** 2
    values = amp * np.exp(-d2 / (2.0 * sigma * sigma))
    values[d2 > (3.0 * sigma) ** 2] = 0.0  # truncate the far tail
    return values.astype(np.float32)


def _planted_amplitude_scale(role_index: int) -> float:
    # Rule subject strongest, rule object next, remaining planted concepts
    # below both; keeps the relevance ranking of rule concepts stable.
    return max(1.0 - 0.05 * role_index, 0.85)


def _planted_roles(cfg: GeneratorConfig, rule: GroundTruthRule) -> list[PlantedConcept]:
    subject, obj = rule.literals[0].args[0][0], rule.literals[0].args[1][0]
    by_id = {p.concept_id: p for p in cfg.planted}
    rest = [p for p in cfg.planted if p.concept_id not in (subject, obj)]
    return [by_id[subject], by_id[obj]] + rest


def generate(cfg: GeneratorConfig):
    """Build the dataset; returns (dataset, rule, oracle)."""
    rule = derive_rule(cfg)
    roles = _planted_roles(cfg, rule)
    n_dis = cfg.distractor_concepts
    margin = 3.0 * cfg.blob_sigma
    lo_x, hi_x = margin, cfg.width - 1 - margin
    lo_y, hi_y = margin, cfg.height - 1 - margin
    if lo_x >= hi_x or lo_y >= hi_y:
        raise ConfigError("grid too small for the blob radius")

    samples = []
    total = cfg.n_pos + cfg.n_neg
    pad = max(4, len(str(total - 1)))
    for index in range(total):
        rng = SplitMix64(cfg.seed ^ index)
        want_positive = index < cfg.n_pos

        # Planted centers: jittered canonical layout; negatives then
        # permute the positions until the rule no longer holds.
        for _ in range(1000):
            centers = {}
            for p in roles:
                x0, y0 = p.canonical_position
                centers[p.concept_id] = (
                    x0 + rng.uniform(-cfg.position_jitter, cfg.position_jitter),
                    y0 + rng.uniform(-cfg.position_jitter, cfg.position_jitter),
                )
            if want_positive:
                if _rule_holds(rule, centers):
                    break
            else:
                positions = list(centers.values())
                ok = False
                for _ in range(100):
                    rng.shuffle(positions)
                    centers = dict(zip(centers.keys(), positions))
                    if not _rule_holds(rule, centers):
                        ok = True
                        break
                if ok:
                    break
        else:
            raise ConfigError("could not realize the requested label from the layout")

        grids = []
        for role_index, p in enumerate(roles):
            amp = _planted_amplitude_scale(role_index) * rng.uniform(0.99, 1.01)
            if p.sign == "neg":
                amp = -amp
            x0, y0 = centers[p.concept_id]
            grids.append(
                RelevanceGrid(p.concept_id, "synthetic", _blob(cfg.height, cfg.width, x0, y0, amp, cfg.blob_sigma))
            )

        for j, cid in enumerate(cfg.distractor_ids()):
            base = 0.15 + (0.55 * j / (n_dis - 1) if n_dis > 1 else 0.0)
            x0 = rng.uniform(lo_x, hi_x)
            y0 = rng.uniform(lo_y, hi_y)
            sign = 1.0 if rng.next_float() < 0.5 else -1.0
            amp = sign * base * rng.uniform(0.85, 1.15)
            grids.append(
                RelevanceGrid(cid, "synthetic", _blob(cfg.height, cfg.width, x0, y0, amp, cfg.blob_sigma))
            )

        ground = "positive" if want_positive else "negative"
        flip = rng.next_float() < cfg.model_error_rate
        model = ground if not flip else ("negative" if ground == "positive" else "positive")
        sample_id = f"s{index:0{pad}d}"
        samples.append(SampleRecord(sample_id, ground, model, tuple(grids)))

    dataset = canonical_order(
        Dataset(tuple(samples), cfg.class_name, cfg.contrast_class_name, "synthetic")
    )
    return dataset, rule, make_oracle(rule)


def make_oracle(rule: GroundTruthRule, floor: float = RELEVANCE_FLOOR):
    """Label a sample from blob geometry, independent of the pipeline.

    A sample is positive iff every rule concept carries total absolute
    relevance above the floor and the relevance-weighted centroids
    satisfy every rule literal.
    """
    needed = sorted(rule.concept_ids())

    def oracle(sample: SampleRecord) -> str:
        centers = {}
        for cid in needed:
            if not sample.has_concept(cid):
                return "negative"
            values = sample.grid_for(cid).values.astype(np.float64)
            weights = np.abs(values)
            mass = float(weights.sum())
            if mass <= floor:
                return "negative"
            ys, xs = np.indices(values.shape)
            centers[cid] = (
                float((xs * weights).sum() / mass),
                float((ys * weights).sum() / mass),
            )
        return "positive" if _rule_holds(rule, centers) else "negative"

    return oracle


def rule_to_dict(rule: GroundTruthRule, cfg: GeneratorConfig | None = None) -> dict:
    doc = {
        "relevance_floor": RELEVANCE_FLOOR,
        "rule_literals": [
            {"predicate": lit.predicate, "args": [[cid, sign] for cid, sign in lit.args]}
            for lit in rule.literals
        ],
    }
    if cfg is not None:
        doc["planted"] = [
            {
                "concept_id": p.concept_id,
                "canonical_position": list(p.canonical_position),
                "sign": p.sign,
            }
            for p in cfg.planted
        ]
    return doc


def rule_from_dict(doc: dict) -> GroundTruthRule:
    try:
        lits = tuple(
            Literal(e["predicate"], tuple((int(c), s) for c, s in e["args"]))
            for e in doc["rule_literals"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise OracleError(f"malformed rule document: {exc}") from exc
    return GroundTruthRule(lits)


def write_rule_spec(rule: GroundTruthRule, cfg: GeneratorConfig, path) -> None:
    Path(path).write_text(
        json.dumps(rule_to_dict(rule, cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_oracle(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    rule = rule_from_dict(doc)
    return rule, make_oracle(rule, float(doc.get("relevance_floor", RELEVANCE_FLOOR)))
