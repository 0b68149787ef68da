"""Primary-vessel extraction: radius filter, largest component, thick-first DFS.

The pipeline keeps nodes with ``r >= r_min_ratio * r_max``, drops every weakly
connected component except the largest, and walks what is left depth first
from a root, always descending into the thickest unvisited neighbour first.
Nothing here is learned; the only knobs are the fields of
:class:`SegmentorConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyAfterFilter, InvalidRatio, RootNotFound, ShapeMismatch
from .graph import Explicit, Proximity, VesselGraph, build_graph, connected_components
from .raster import RasterMask, rasterize

DEFAULT_R_MIN = 0.2


@dataclass(frozen=True)
class MaxRadius:
    """Root at the thickest retained node (smallest id on ties)."""


@dataclass(frozen=True)
class Coordinate:
    """Root snapped to the retained node nearest to ``(x, y, z)``."""

    x: float
    y: float
    z: float = 0.0


@dataclass(frozen=True)
class NodeId:
    id: int


RootPolicy = MaxRadius | Coordinate | NodeId


def parse_root(text: str) -> RootPolicy:
    """Parse ``max_radius``, ``id:N`` or ``x,y[,z]``."""
    text = text.strip()
    if text in ("max_radius", "max-radius", ""):
        return MaxRadius()
    if text.startswith("id:"):
        return NodeId(int(text[3:]))
    parts = [float(p) for p in text.split(",")]
    if len(parts) not in (2, 3):
        raise ValueError(f"cannot parse root {text!r}")
    return Coordinate(*parts)


@dataclass(frozen=True)
class SegmentorConfig:
    r_min_ratio: float = DEFAULT_R_MIN
    root_policy: RootPolicy = MaxRadius()
    emit_mask: bool = False
    dims: tuple[int, ...] | None = None
    snap_distance: float = 10.0

    def __post_init__(self):
        _check_ratio(self.r_min_ratio)
        if self.emit_mask and self.dims is None:
            raise ValueError("emit_mask requires dims")


@dataclass(frozen=True)
class SegmentationResult:
    """Output of the extraction.

    ``main_graph`` ids are renumbered; ``source_ids[k]`` is the id of main node
    ``k`` in the graph handed to :func:`segment` (or :func:`dfs_extract`).
    ``visited_order`` and ``root`` use main-graph ids.
    """

    main_graph: VesselGraph
    visited_order: np.ndarray
    pruned_components: int
    r_max_observed: float
    r_min_ratio: float
    root: int
    source_ids: np.ndarray
    mask: RasterMask | None = None

    @property
    def retained_nodes(self) -> int:
        return self.main_graph.n_nodes

    @property
    def threshold(self) -> float:
        return self.r_min_ratio * self.r_max_observed

    def summary(self) -> dict:
        return {
            "retained_nodes": self.retained_nodes,
            "retained_edges": self.main_graph.n_edges,
            "pruned_components": self.pruned_components,
            "r_min_ratio": self.r_min_ratio,
            "r_max": self.r_max_observed,
            "threshold": self.threshold,
            "root": int(self.source_ids[self.root]),
        }


def _check_ratio(ratio: float) -> None:
    if not (0.0 <= ratio <= 1.0):
        raise InvalidRatio(f"r_min_ratio must lie in [0, 1], got {ratio!r}")


def radius_keep(graph: VesselGraph, ratio: float, r_max: float | None = None) -> np.ndarray:
    _check_ratio(ratio)
    if r_max is None:
        r_max = graph.r_max
    return graph.radii >= ratio * r_max


def filter_by_radius(graph: VesselGraph, ratio: float) -> VesselGraph:
    """Induced subgraph on ``{i : r_i >= ratio * r_max}``, with ``r_max`` from ``graph``."""
    return graph.subgraph(radius_keep(graph, ratio))


def _resolve_root(graph: VesselGraph, policy: RootPolicy, snap_distance: float, source_ids: np.ndarray) -> int:
    if isinstance(policy, MaxRadius):
        return int(np.argmax(graph.radii))
    if isinstance(policy, NodeId):
        hits = np.flatnonzero(source_ids == policy.id)
        if not len(hits):
            raise RootNotFound(f"node {policy.id} is not part of the retained main component")
        return int(hits[0])
    if isinstance(policy, Coordinate):
        d2 = ((graph.coords - np.array([policy.x, policy.y, policy.z])) ** 2).sum(axis=1)
        best = int(np.argmin(d2))
        if np.sqrt(d2[best]) > snap_distance:
            raise RootNotFound(
                f"no retained node within {snap_distance} of ({policy.x}, {policy.y}, {policy.z})"
            )
        return best
    raise TypeError(f"unknown root policy {policy!r}")


def dfs_extract(graph: VesselGraph, config: SegmentorConfig = SegmentorConfig(), *, r_max: float | None = None) -> SegmentationResult:
    """Largest-component DFS over a radius-filtered graph.

    ``r_max`` is the maximum radius before filtering; it defaults to the
    graph's own maximum, which is the same value whenever ``ratio <= 1``.
    Nodes under the threshold are dropped here as well, so the traversal never
    enters a sub-threshold vessel even when handed an unfiltered graph.
    """
    r_max_observed = graph.r_max if r_max is None else float(r_max)
    ids = np.arange(graph.n_nodes)
    keep = graph.radii >= config.r_min_ratio * r_max_observed
    if not keep.all():
        graph, ids = graph.subgraph(keep), ids[keep]
    if graph.n_nodes == 0:
        raise EmptyAfterFilter(f"no node reaches {config.r_min_ratio} * r_max = {config.r_min_ratio * r_max_observed}")

    comps = connected_components(graph)
    pruned = comps.count - 1
    if pruned:
        keep = comps.label == comps.largest
        graph, ids = graph.subgraph(keep), ids[keep]

    root = _resolve_root(graph, config.root_policy, config.snap_distance, ids)
    indptr, indices = graph.traversal_csr
    order = _kernels.dfs_order(indptr, indices, root, graph.n_nodes)
    mask = rasterize(graph, config.dims) if config.emit_mask else None
    return SegmentationResult(
        main_graph=graph,
        visited_order=order,
        pruned_components=int(pruned),
        r_max_observed=r_max_observed,
        r_min_ratio=config.r_min_ratio,
        root=root,
        source_ids=ids,
        mask=mask,
    )


def segment(nodes, config: SegmentorConfig = SegmentorConfig(), policy: Explicit | Proximity | None = None) -> SegmentationResult:
    """Full extraction: build the graph (unless given one), filter, traverse, render."""
    graph = nodes if isinstance(nodes, VesselGraph) else build_graph(nodes, policy)
    keep = radius_keep(graph, config.r_min_ratio)
    filtered = graph.subgraph(keep)
    result = dfs_extract(filtered, config, r_max=graph.r_max)
    source = np.flatnonzero(keep)[result.source_ids]
    return SegmentationResult(
        main_graph=result.main_graph,
        visited_order=result.visited_order,
        pruned_components=result.pruned_components,
        r_max_observed=result.r_max_observed,
        r_min_ratio=result.r_min_ratio,
        root=result.root,
        source_ids=source,
        mask=result.mask,
    )


def structural_consistency(a, b) -> float:
    """Mean absolute per-cell difference of two masks, scaled to ``[0, 1]``."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"mask shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        return 0.0
    return float(np.abs(x - y).sum() / x.size / 255.0)
