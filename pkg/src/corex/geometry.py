"""Turning relevance maps into concept regions.

localize thresholds a signed relevance map at a fraction of its peak and
keeps the largest 8-connected components. Each component becomes a
ConceptRegion with a centroid and a rectilinear outline traced on the
pixel-corner lattice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import Disconnected
from .model import ConceptRegion, RelevanceGrid

# 8-connectivity structuring element shared by localize and the tracer.
_EIGHT = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class LocalizeConfig:
    pixel_threshold: float = 0.3  # fraction of the signed peak
    min_component_px: int = 4
    max_instances: int = 2

    def __post_init__(self):
        if not 0.0 < self.pixel_threshold <= 1.0:
            raise ValueError(f"pixel_threshold must be in (0, 1], got {self.pixel_threshold}")
        if self.min_component_px < 1:
            raise ValueError("min_component_px must be >= 1")
        if self.max_instances < 1:
            raise ValueError("max_instances must be >= 1")


def centroid(mask: np.ndarray) -> tuple[float, float]:
    """Arithmetic mean (x, y) of the set pixels; y grows downward."""
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise ValueError("centroid of empty mask")
    return (float(xs.mean()), float(ys.mean()))


def localize(grid: RelevanceGrid, sign: str, cfg: LocalizeConfig) -> tuple[ConceptRegion, ...]:
    """Extract up to max_instances regions of same-signed relevance.

    Pixels enter the mask when sign*value >= pixel_threshold * peak and
    sign*value > 0, where peak is the maximum of sign*value. Components
    smaller than min_component_px are dropped; survivors are ordered by
    size descending, ties by the smaller row-major index of their first
    pixel.
    """
    if sign not in ("pos", "neg"):
        raise ValueError(f"sign must be 'pos' or 'neg', got {sign!r}")
    signed = grid.values.astype(np.float64)
    if sign == "neg":
        signed = -signed
    peak = float(signed.max(initial=-np.inf))
    if peak <= 0.0:
        return ()
    mask = (signed >= cfg.pixel_threshold * peak) & (signed > 0.0)
    labels, count = ndimage.label(mask, structure=_EIGHT)
    components = []
    for lab in range(1, count + 1):
        comp = labels == lab
        size = int(comp.sum())
        if size < cfg.min_component_px:
            continue
        first = int(np.flatnonzero(comp.ravel())[0])
        components.append((-size, first, comp))
    components.sort(key=lambda t: (t[0], t[1]))
    regions = []
    for _, _, comp in components[: cfg.max_instances]:
        regions.append(
            ConceptRegion(
                concept_id=grid.concept_id,
                sign=sign,
                mask=comp,
                boundary=trace_boundary(comp),
                centroid=centroid(comp),
            )
        )
    return tuple(regions)


def _directed_edges(mask: np.ndarray) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Boundary edges on the corner lattice, region kept on the walk's right.

    Corner (x, y) is the top-left of pixel (row=y, col=x). Every side of a
    set pixel facing a cleared pixel (or the image edge) contributes one
    directed edge.
    """
    h, w = mask.shape
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a, b):
        out.setdefault(a, []).append(b)

    ys, xs = np.nonzero(mask)
    for r, c in zip(ys.tolist(), xs.tolist()):
        if r == 0 or not mask[r - 1, c]:
            add((c, r), (c + 1, r))
        if c == w - 1 or not mask[r, c + 1]:
            add((c + 1, r), (c + 1, r + 1))
        if r == h - 1 or not mask[r + 1, c]:
            add((c + 1, r + 1), (c, r + 1))
        if c == 0 or not mask[r, c - 1]:
            add((c, r + 1), (c, r))
    return out


def trace_boundary(mask: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Outer outline of a connected mask as a closed rectilinear loop.

    Vertices are pixel corners; traversal keeps the region on its right in
    image coordinates (y down), so the raw shoelace sum is positive and
    equals the enclosed cell count (mask plus any holes, which the outer
    loop ignores). At checkerboard corners the walk turns toward the
    diagonal neighbour so both pixels stay enclosed; such loops touch a
    vertex twice but never cross themselves. Collinear runs collapse, so a
    single pixel yields exactly four vertices.

    Raises Disconnected when the mask has more than one 8-connected
    component (or none).
    """
    mask = np.asarray(mask, dtype=bool)
    _, count = ndimage.label(mask, structure=_EIGHT)
    if count != 1:
        raise Disconnected(f"mask has {count} components, expected 1")
    edges = _directed_edges(mask)

    ys, xs = np.nonzero(mask)
    order = np.lexsort((xs, ys))
    r0, c0 = int(ys[order[0]]), int(xs[order[0]])
    start = (c0, r0)
    heading = (1, 0)  # along the top side of the topmost-leftmost pixel

    path = [start]
    pos = (start[0] + 1, start[1])
    while pos != start:
        path.append(pos)
        nexts = edges[pos]
        if len(nexts) == 1:
            nxt = nexts[0]
        else:
            # Checkerboard corner: prefer the left turn (in y-down image
            # coordinates) so the loop wraps around the diagonal pixel.
            dx, dy = heading
            prefer = [(dy, -dx), (dx, dy), (-dy, dx)]
            nxt = None
            for px, py in prefer:
                cand = (pos[0] + px, pos[1] + py)
                if cand in nexts:
                    nxt = cand
                    break
            if nxt is None:
                raise AssertionError("boundary trace lost its way")
        heading = (nxt[0] - pos[0], nxt[1] - pos[1])
        pos = nxt

    # Collapse collinear vertices. The loop is closed: path[i] -> path[i+1].
    n = len(path)
    keep = []
    for i in range(n):
        prev_v, cur, nxt_v = path[i - 1], path[i], path[(i + 1) % n]
        din = (cur[0] - prev_v[0], cur[1] - prev_v[1])
        dout = (nxt_v[0] - cur[0], nxt_v[1] - cur[1])
        if din != dout:
            keep.append(cur)
    # Rotate so the loop starts at the original start vertex.
    pivot = keep.index(start)
    keep = keep[pivot:] + keep[:pivot]
    return tuple(keep)


def shoelace_area(vertices: tuple[tuple[int, int], ...]) -> float:
    """Signed shoelace area of a closed vertex loop (positive for our traces)."""
    total = 0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0
