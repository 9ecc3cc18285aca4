import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from corex.geometry import trace_boundary
from corex.model import ConceptRegion
from corex.pipeline import PipelineConfig, run_pipeline
from corex.synth import GeneratorConfig, generate

settings.register_profile(
    "suite", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def make_region(mask: np.ndarray, concept_id: int = 1, sign: str = "pos") -> ConceptRegion:
    """Region straight from a connected boolean mask."""
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    centroid = (float(xs.mean()), float(ys.mean()))
    return ConceptRegion(concept_id, sign, mask, trace_boundary(mask), centroid)


def grid_from(rows, concept_id=1, layer="L"):
    from corex.model import RelevanceGrid

    return RelevanceGrid(concept_id, layer, np.asarray(rows, dtype=np.float32))


@pytest.fixture(scope="session")
def small_synth():
    cfg = GeneratorConfig(seed=7, n_pos=12, n_neg=12)
    dataset, rule, oracle = generate(cfg)
    return cfg, dataset, rule, oracle


@pytest.fixture(scope="session")
def small_result(small_synth):
    _, dataset, _, _ = small_synth
    return run_pipeline(dataset, PipelineConfig())
