"""Vessel centerline graphs: node/edge types, construction and component analysis.

A graph stores its nodes as parallel arrays (``coords`` of shape ``(N, 3)`` and
``radii`` of shape ``(N,)``) and its directed edges as an ``(E, 2)`` id array.
2D data keeps ``z = 0`` so every code path is shared between 2D and 3D.

Every edge ``i -> j`` carries the weight ``r_i`` of its source node. Traversal
treats edges as undirected: when standing on node ``u`` the neighbours are
expanded thickest first, i.e. by descending weight of the segment that leaves
the neighbour, ties going to the smaller id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import EmptyInput, InvalidEdge, InvalidRadius


@dataclass(frozen=True)
class VesselNode:
    """A centerline sample ``(x, y, z | r)``."""

    id: int
    x: float
    y: float
    z: float
    r: float


@dataclass(frozen=True)
class VesselEdge:
    source: int
    target: int
    weight: float


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class VesselGraph:
    """Immutable directed vessel graph backed by numpy arrays.

    Parameters
    ----------
    coords : array_like, shape (N, 2) or (N, 3)
        Centerline coordinates; a missing z column is filled with zeros.
    radii : array_like, shape (N,)
        Local vessel radius per node.
    edges : array_like, shape (E, 2), optional
        Directed ``(source, target)`` id pairs.
    weights : array_like, shape (E,), optional
        Explicit edge weights. Defaults to the source radius of each edge and
        should only be given to build deliberately inconsistent fixtures.
    meta : mapping, optional
        Free-form string metadata carried through persistence.
    check : bool
        Raise on invalid input (non-positive radius, bad endpoint, self loop,
        duplicate edge). ``check=False`` admits broken graphs for
        :func:`validate`.
    """

    def __init__(
        self,
        coords,
        radii,
        edges=None,
        *,
        weights=None,
        meta: Mapping[str, str] | None = None,
        check: bool = True,
    ):
        coords = np.array(coords, dtype=np.float64, ndmin=2)
        if coords.size == 0:
            coords = coords.reshape(0, 3)
        if coords.ndim != 2 or coords.shape[1] not in (2, 3):
            raise ValueError(f"coords must have shape (N, 2) or (N, 3), got {coords.shape}")
        if coords.shape[1] == 2:
            coords = np.column_stack([coords, np.zeros(len(coords))])
        radii = np.array(radii, dtype=np.float64).reshape(-1)
        if len(radii) != len(coords):
            raise ValueError("coords and radii must have the same length")
        n = len(coords)
        if edges is None or len(edges) == 0:
            edges = np.empty((0, 2), dtype=np.int64)
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)

        if check:
            bad = np.flatnonzero(~(radii > 0) | ~np.isfinite(radii))
            if len(bad):
                raise InvalidRadius(f"non-positive radius at node ids {bad[:10].tolist()}")
            if len(edges):
                out_of_range = (edges < 0) | (edges >= n)
                if out_of_range.any():
                    row = int(np.flatnonzero(out_of_range.any(axis=1))[0])
                    raise InvalidEdge(f"edge {edges[row].tolist()} references an unknown node id")
                loops = edges[:, 0] == edges[:, 1]
                if loops.any():
                    raise InvalidEdge(f"self loop at node {int(edges[loops][0, 0])}")
                if len(np.unique(edges, axis=0)) != len(edges):
                    raise InvalidEdge("duplicate directed edge")
            if weights is not None:
                raise ValueError("explicit weights are only accepted with check=False")

        if weights is None:
            valid = (edges >= 0).all(axis=1) & (edges < n).all(axis=1) if len(edges) else np.zeros(0, bool)
            weights = np.full(len(edges), np.nan)
            weights[valid] = radii[edges[valid, 0]]
        else:
            weights = np.array(weights, dtype=np.float64).reshape(-1)
            if len(weights) != len(edges):
                raise ValueError("weights must match edges")

        self._coords = _readonly(coords)
        self._radii = _readonly(radii)
        self._edges = _readonly(edges)
        self._weights = _readonly(weights)
        self.meta: dict[str, str] = dict(meta or {})
        self._build_adjacency()

    def _build_adjacency(self) -> None:
        n = self.n_nodes
        edges = self._edges
        valid = (edges >= 0).all(axis=1) & (edges < n).all(axis=1) if len(edges) else np.zeros(0, bool)
        good = edges[valid]
        out_order = np.flatnonzero(valid)[np.argsort(good[:, 0], kind="stable")]
        self._out_edges = _readonly(out_order)
        self._out_indptr = _readonly(
            np.concatenate([[0], np.cumsum(np.bincount(edges[out_order, 0], minlength=n))]).astype(np.int64)
        )

        # rank orders nodes by (descending radius, ascending id)
        order = np.lexsort((np.arange(n), -self._radii))
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        pairs = np.concatenate([good, good[:, ::-1]])
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        keys = np.unique(pairs[:, 0] * max(n, 1) + rank[pairs[:, 1]])
        src = keys // max(n, 1)
        self._nbr_indices = _readonly(order[keys % max(n, 1)].astype(np.int64))
        self._nbr_indptr = _readonly(
            np.concatenate([[0], np.cumsum(np.bincount(src, minlength=n))]).astype(np.int64)
        )

    # -- array views -------------------------------------------------------
    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def radii(self) -> np.ndarray:
        return self._radii

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def n_nodes(self) -> int:
        return len(self._radii)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def __len__(self) -> int:
        return self.n_nodes

    def __repr__(self) -> str:
        return f"VesselGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"

    @property
    def r_max(self) -> float:
        return float(self._radii.max()) if self.n_nodes else 0.0

    @property
    def is_planar(self) -> bool:
        """True when every node lies on ``z = 0``."""
        return bool(np.all(self._coords[:, 2] == 0.0))

    # -- object views ------------------------------------------------------
    def node(self, i: int) -> VesselNode:
        x, y, z = self._coords[i]
        return VesselNode(int(i), float(x), float(y), float(z), float(self._radii[i]))

    @property
    def nodes(self) -> list[VesselNode]:
        return [self.node(i) for i in range(self.n_nodes)]

    def iter_edges(self) -> Iterator[VesselEdge]:
        for (s, t), w in zip(self._edges.tolist(), self._weights.tolist()):
            yield VesselEdge(s, t, w)

    def out_edges(self, i: int) -> list[VesselEdge]:
        """Outgoing edges of node ``i`` in insertion order."""
        idx = self._out_edges[self._out_indptr[i] : self._out_indptr[i + 1]]
        return [VesselEdge(int(self._edges[k, 0]), int(self._edges[k, 1]), float(self._weights[k])) for k in idx]

    def neighbors(self, i: int) -> np.ndarray:
        """Undirected neighbours of ``i`` in traversal (thickest-first) order."""
        return self._nbr_indices[self._nbr_indptr[i] : self._nbr_indptr[i + 1]]

    @property
    def traversal_csr(self) -> tuple[np.ndarray, np.ndarray]:
        return self._nbr_indptr, self._nbr_indices

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self._edges.tolist()))

    def undirected_edges(self) -> np.ndarray:
        """Unique ``(min, max)`` id pairs, sorted."""
        if not len(self._edges):
            return np.empty((0, 2), dtype=np.int64)
        return np.unique(np.sort(self._edges, axis=1), axis=0)

    # -- derived graphs ----------------------------------------------------
    def subgraph(self, keep) -> "VesselGraph":
        """Induced subgraph on ``keep`` (boolean mask or id array), ids renumbered in order."""
        keep = np.asarray(keep)
        if keep.dtype != bool:
            mask = np.zeros(self.n_nodes, dtype=bool)
            mask[keep] = True
            keep = mask
        if keep.all():
            return self
        new_id = np.cumsum(keep) - 1
        m = int(keep.sum())
        sub = VesselGraph.__new__(VesselGraph)
        emask = keep[self._edges[:, 0]] & keep[self._edges[:, 1]] if len(self._edges) else np.zeros(0, bool)
        sub._coords = _readonly(self._coords[keep])
        sub._radii = _readonly(self._radii[keep])
        sub._edges = _readonly(new_id[self._edges[emask]].reshape(-1, 2))
        sub._weights = _readonly(self._weights[emask])
        sub.meta = dict(self.meta)

        # filtering an ordered adjacency with a monotone relabel keeps it ordered
        edge_new_index = np.cumsum(emask) - 1
        out_keep = emask[self._out_edges]
        out_edges = edge_new_index[self._out_edges[out_keep]]
        sub._out_edges = _readonly(out_edges)
        sub._out_indptr = _readonly(
            np.concatenate([[0], np.cumsum(np.bincount(sub._edges[out_edges, 0], minlength=m))]).astype(np.int64)
        )
        src = np.repeat(np.arange(self.n_nodes), np.diff(self._nbr_indptr))
        nbr_keep = keep[src] & keep[self._nbr_indices]
        sub._nbr_indices = _readonly(new_id[self._nbr_indices[nbr_keep]])
        sub._nbr_indptr = _readonly(
            np.concatenate([[0], np.cumsum(np.bincount(new_id[src[nbr_keep]], minlength=m))]).astype(np.int64)
        )
        return sub

    def with_radii(self, radii) -> "VesselGraph":
        """Same topology with new radii; edge weights follow the new source radii."""
        return VesselGraph(self._coords, radii, self._edges, meta=self.meta)

    def with_coords(self, coords) -> "VesselGraph":
        return VesselGraph(coords, self._radii, self._edges, meta=self.meta)

    def structurally_equal(self, other: "VesselGraph") -> bool:
        return (
            np.array_equal(self._coords, other._coords)
            and np.array_equal(self._radii, other._radii)
            and np.array_equal(self._edges, other._edges)
        )


# -- construction ----------------------------------------------------------

@dataclass(frozen=True)
class Explicit:
    """Connectivity given as a directed edge list (e.g. SCA parent links)."""

    edges: Sequence[Sequence[int]] | np.ndarray = field(default_factory=list)


@dataclass(frozen=True)
class Proximity:
    """Connect ``i <-> j`` when ``|p_i - p_j| <= r_i + r_j + delta``."""

    delta: float = 0.5


def _as_arrays(nodes) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(nodes, VesselGraph):
        return nodes.coords, nodes.radii
    if isinstance(nodes, np.ndarray):
        arr = np.asarray(nodes, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] not in (3, 4):
            raise ValueError("node array must have shape (N, 3) [x, y, r] or (N, 4) [x, y, z, r]")
        return arr[:, :-1], arr[:, -1]
    nodes = list(nodes)
    if nodes and isinstance(nodes[0], VesselNode):
        ordered = sorted(nodes, key=lambda n: n.id)
        if [n.id for n in ordered] != list(range(len(ordered))):
            raise ValueError("VesselNode ids must be contiguous from 0")
        return (
            np.array([[n.x, n.y, n.z] for n in ordered], dtype=np.float64),
            np.array([n.r for n in ordered], dtype=np.float64),
        )
    if nodes and isinstance(nodes[0], Mapping):
        return (
            np.array([[n["x"], n["y"], n.get("z", 0.0)] for n in nodes], dtype=np.float64),
            np.array([n["r"] for n in nodes], dtype=np.float64),
        )
    return _as_arrays(np.asarray(nodes, dtype=np.float64).reshape(len(nodes), -1))


def proximity_edges(coords: np.ndarray, radii: np.ndarray, delta: float) -> np.ndarray:
    """Directed edge array (both directions) for the touching-disc neighbour rule."""
    n = len(radii)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    tree = cKDTree(coords)
    pairs = tree.query_pairs(2.0 * float(radii.max()) + delta, output_type="ndarray")
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        dist = np.sqrt(((coords[i] - coords[j]) ** 2).sum(axis=1))
        pairs = pairs[dist <= radii[i] + radii[j] + delta]
    both = np.concatenate([pairs, pairs[:, ::-1]]).astype(np.int64)
    return both[np.lexsort((both[:, 1], both[:, 0]))]


def build_graph(nodes, policy: Explicit | Proximity | None = None, *, meta=None) -> VesselGraph:
    """Build a :class:`VesselGraph` from centerline nodes.

    ``nodes`` may be an ``(N, 4)`` array of ``x, y, z, r`` (or ``(N, 3)`` of
    ``x, y, r``), a sequence of :class:`VesselNode`, a sequence of mappings
    with ``x, y, [z,] r`` keys, or an existing graph whose points are reused.
    The default policy is ``Proximity(delta=0.5)``.
    """
    coords, radii = _as_arrays(nodes)
    if len(radii) == 0:
        raise EmptyInput("cannot build a graph from an empty node set")
    bad = np.flatnonzero(~(radii > 0) | ~np.isfinite(radii))
    if len(bad):
        raise InvalidRadius(f"non-positive radius at node ids {bad[:10].tolist()}")
    if policy is None:
        policy = Proximity()
    if isinstance(policy, Explicit):
        edges = np.array(policy.edges, dtype=np.int64).reshape(-1, 2)
    elif isinstance(policy, Proximity):
        if policy.delta < 0:
            raise ValueError("proximity delta must be non-negative")
        edges = proximity_edges(coords, radii, policy.delta)
    else:
        raise TypeError(f"unknown connectivity policy {policy!r}")
    return VesselGraph(coords, radii, edges, meta=meta)


# -- components ------------------------------------------------------------

@dataclass(frozen=True)
class ComponentLabeling:
    """Weakly connected components of a graph.

    ``label[i]`` is the component of node ``i``; labels are assigned in order of
    each component's smallest node id. ``largest`` maximises node count, then
    total radius, then prefers the smaller label.
    """

    label: np.ndarray
    sizes: np.ndarray
    radius_sums: np.ndarray
    largest: int

    @property
    def count(self) -> int:
        return len(self.sizes)

    def members(self, component: int) -> np.ndarray:
        return np.flatnonzero(self.label == component)


def connected_components(graph: VesselGraph) -> ComponentLabeling:
    n = graph.n_nodes
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return ComponentLabeling(empty, empty, np.zeros(0), -1)
    indptr, indices = graph.traversal_csr
    labels, count = _kernels.label_components(indptr, indices, n)
    sizes = np.bincount(labels, minlength=count)
    sums = np.bincount(labels, weights=graph.radii, minlength=count)
    best = np.lexsort((np.arange(count), -sums, -sizes))[0]
    labels.flags.writeable = False
    return ComponentLabeling(labels, sizes, sums, int(best))


def largest_component(graph: VesselGraph) -> tuple[VesselGraph, np.ndarray, int]:
    """Induced subgraph on the largest weak component.

    Returns ``(subgraph, kept_ids, pruned_component_count)``.
    """
    comps = connected_components(graph)
    if comps.count <= 1:
        return graph, np.arange(graph.n_nodes), 0
    keep = comps.label == comps.largest
    return graph.subgraph(keep), np.flatnonzero(keep), comps.count - 1


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class Issue:
    kind: str
    ids: tuple
    message: str


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.issues)

    def __len__(self) -> int:
        return len(self.issues)

    def __iter__(self) -> Iterator[Issue]:
        return iter(self.issues)

    @property
    def ok(self) -> bool:
        return not self.issues

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}


def validate(graph: VesselGraph) -> ValidationReport:
    """List every violated graph invariant; never raises."""
    report = ValidationReport()
    add = report.issues.append
    try:
        n = graph.n_nodes
        r = graph.radii
        for i in np.flatnonzero(~(r > 0) | ~np.isfinite(r)).tolist():
            add(Issue("InvalidRadius", (i,), f"node {i} has radius {r[i]!r}"))
        for i in np.flatnonzero(~np.isfinite(graph.coords).all(axis=1)).tolist():
            add(Issue("InvalidCoordinate", (i,), f"node {i} has a non-finite coordinate"))

        seen: set[tuple[int, int]] = set()
        for k, ((s, t), w) in enumerate(zip(graph.edges.tolist(), graph.weights.tolist())):
            if not (0 <= s < n and 0 <= t < n):
                add(Issue("InvalidEdge", (k, s, t), f"edge {k} ({s}->{t}) references an unknown node"))
                continue
            if s == t:
                add(Issue("SelfLoop", (k, s, t), f"edge {k} is a self loop on node {s}"))
            if (s, t) in seen:
                add(Issue("DuplicateEdge", (k, s, t), f"edge {k} duplicates {s}->{t}"))
            seen.add((s, t))
            if w != r[s]:
                add(Issue("WeightMismatch", (k, s, t), f"edge {k} weight {w!r} != source radius {r[s]!r}"))

        listed = sorted(
            (e.source, e.target) for i in range(n) for e in graph.out_edges(i)
        )
        valid_edges = sorted((s, t) for s, t in graph.edges.tolist() if 0 <= s < n and 0 <= t < n)
        if listed != valid_edges:
            add(Issue("AdjacencyMismatch", (), "adjacency lists disagree with the edge collection"))
    except Exception as exc:  # validation must not throw
        add(Issue("Unvalidatable", (), f"{type(exc).__name__}: {exc}"))
    return report


def graph_from_arrays(nodes: np.ndarray, edges: Iterable | None = None, **kw) -> VesselGraph:
    """Shorthand: ``(N, 4)`` node array plus optional explicit edges."""
    coords, radii = _as_arrays(np.asarray(nodes, dtype=np.float64))
    return VesselGraph(coords, radii, edges, **kw)
