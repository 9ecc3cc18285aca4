"""Dataset persistence: CRM1 tensor files, the JSON manifest, and loading.

On-disk layout: a manifest.json sits next to one binary tensor file per
sample. The tensor format (magic "CRM1") is little-endian:

    bytes 0..3    magic "CRM1"
    u32           version (1)
    u32           height
    u32           width
    u32           concept count C
    C x u32       concept id table
    C blocks      height*width float32, row-major, in id-table order

Round-trips are bit-exact: grids are float32 in memory and on disk.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, IoError, UnknownConcept
from .model import (
    GROUND_TRUTH_LABELS,
    MODEL_TRUTH_LABELS,
    Dataset,
    RelevanceGrid,
    SampleRecord,
    canonical_order,
)

MAGIC = b"CRM1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    ground_truth: str
    model_truth: str
    tensor_file: str


@dataclass(frozen=True)
class Manifest:
    """Index of a persisted dataset; tensor paths are relative to its location."""

    format_version: int
    class_name: str
    contrast_class_name: str
    layer_id: str
    samples: tuple[ManifestEntry, ...]


def write_tensor_file(path: Path, grids: tuple[RelevanceGrid, ...]) -> None:
    """Write one sample's grids as a CRM1 file."""
    if not grids:
        raise FormatError("cannot write a tensor file with zero grids")
    h, w = grids[0].values.shape
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<IIII", FORMAT_VERSION, h, w, len(grids))
    for g in grids:
        blob += struct.pack("<I", g.concept_id)
    for g in grids:
        blob += np.ascontiguousarray(g.values, dtype="<f4").tobytes()
    try:
        path.write_bytes(bytes(blob))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_tensor_file(path: Path, layer_id: str) -> tuple[RelevanceGrid, ...]:
    """Read a CRM1 file back into grids (id-table order)."""
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 20:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    version, h, w, count = struct.unpack_from("<IIII", raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if h < 1 or w < 1 or count < 1:
        raise FormatError(f"{path}: invalid dims h={h} w={w} count={count}")
    expected = 20 + 4 * count + 4 * h * w * count
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    ids = struct.unpack_from(f"<{count}I", raw, 20)
    if len(set(ids)) != count:
        raise FormatError(f"{path}: duplicate concept ids in table")
    grids = []
    offset = 20 + 4 * count
    block = 4 * h * w
    for cid in ids:
        values = np.frombuffer(raw, dtype="<f4", count=h * w, offset=offset).reshape(h, w)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}: non-finite values for concept {cid}")
        grids.append(RelevanceGrid(int(cid), layer_id, values))
        offset += block
    return tuple(grids)


def save_dataset(dataset: Dataset, out_dir: Path) -> Manifest:
    """Write manifest.json plus one CRM1 file per sample; returns the manifest."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc}") from exc
    entries = []
    for s in dataset.samples:
        fname = f"{s.sample_id}.crm1"
        write_tensor_file(out_dir / fname, s.grids)
        entries.append(ManifestEntry(s.sample_id, s.ground_truth, s.model_truth, fname))
    manifest = Manifest(
        FORMAT_VERSION,
        dataset.class_name,
        dataset.contrast_class_name,
        dataset.layer_id,
        tuple(entries),
    )
    doc = {
        "format_version": manifest.format_version,
        "class_name": manifest.class_name,
        "contrast_class_name": manifest.contrast_class_name,
        "layer_id": manifest.layer_id,
        "samples": [
            {
                "sample_id": e.sample_id,
                "ground_truth": e.ground_truth,
                "model_truth": e.model_truth,
                "tensor_file": e.tensor_file,
            }
            for e in manifest.samples
        ],
    }
    try:
        (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from exc
    return manifest


def read_manifest(path: Path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {doc.get('format_version')!r}")
    for key in ("class_name", "contrast_class_name", "layer_id", "samples"):
        if key not in doc:
            raise FormatError(f"{path}: missing key {key!r}")
    entries = []
    for i, item in enumerate(doc["samples"]):
        for key in ("sample_id", "ground_truth", "model_truth", "tensor_file"):
            if key not in item:
                raise FormatError(f"{path}: sample #{i} missing {key!r}")
        if item["ground_truth"] not in GROUND_TRUTH_LABELS:
            raise FormatError(f"{path}: sample #{i} bad ground_truth {item['ground_truth']!r}")
        if item["model_truth"] not in MODEL_TRUTH_LABELS:
            raise FormatError(f"{path}: sample #{i} bad model_truth {item['model_truth']!r}")
        entries.append(
            ManifestEntry(
                item["sample_id"], item["ground_truth"], item["model_truth"], item["tensor_file"]
            )
        )
    return Manifest(
        FORMAT_VERSION,
        doc["class_name"],
        doc["contrast_class_name"],
        doc["layer_id"],
        tuple(entries),
    )


def load_dataset(manifest_path: Path) -> Dataset:
    """Load a dataset from its manifest; samples come back in canonical order."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    samples = []
    for e in manifest.samples:
        grids = read_tensor_file(base / e.tensor_file, manifest.layer_id)
        samples.append(SampleRecord(e.sample_id, e.ground_truth, e.model_truth, grids))
    dataset = Dataset(
        tuple(samples), manifest.class_name, manifest.contrast_class_name, manifest.layer_id
    )
    return canonical_order(dataset)


def reference_samples(dataset: Dataset, concept_id: int, k: int = 8) -> tuple[str, ...]:
    """Ids of the k samples where the concept's summed relevance is largest.

    Ranking is by the signed sum, descending; ties break toward the
    ascending sample id. Only samples that carry a grid for the concept
    participate, so fewer than k ids come back when the concept is rare.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = []
    for s in dataset.samples:
        if s.has_concept(concept_id):
            total = float(s.grid_for(concept_id).values.sum(dtype=np.float64))
            scored.append((-total, s.sample_id))
    if not scored:
        raise UnknownConcept(f"concept {concept_id} appears in no sample")
    scored.sort()
    return tuple(sid for _, sid in scored[:k])
