"""Synthetic vessel trees via space colonization with Murray-law radius tapering.

Growth works on point sets in 2D or 3D. Every new node is placed exactly one
``step`` away from its parent, in the direction of the mean unit vector toward
the attractors that currently pick that parent as their nearest node. Attractors
within ``kill_radius`` of any node are consumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import GrowthStalled, InvalidDomain, InvalidParams, InvalidRatio, NotATree
from .graph import VesselGraph

DEFAULT_DOMAIN = ((0.0, 512.0), (0.0, 512.0))


@dataclass(frozen=True)
class ScaParams:
    attraction_radius: float = 24.0
    kill_radius: float = 6.0
    step: float = 2.0
    max_iterations: int = 1000
    domain: tuple = DEFAULT_DOMAIN
    attractor_count: int = 4000
    seed: int = 0
    max_nodes: int | None = None

    def __post_init__(self):
        if not (0 < self.kill_radius < self.attraction_radius):
            raise InvalidParams("need 0 < kill_radius < attraction_radius")
        if not self.step > 0:
            raise InvalidParams("step must be positive")
        if self.attractor_count <= 0:
            raise InvalidParams("attractor_count must be positive")
        if self.max_iterations < 0:
            raise InvalidParams("max_iterations must be non-negative")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise InvalidParams("max_nodes must be at least 1")
        if len(self.domain) not in (2, 3) or any(len(b) != 2 for b in self.domain):
            raise InvalidParams("domain must be 2 or 3 (lo, hi) pairs")

    @property
    def dim(self) -> int:
        return len(self.domain)


@dataclass(frozen=True)
class TaperParams:
    terminal_radius: float = 2.5
    murray_exponent: float = 3.0

    def __post_init__(self):
        if not self.terminal_radius > 0:
            raise InvalidParams("terminal_radius must be positive")
        if not self.murray_exponent > 0:
            raise InvalidParams("murray_exponent must be positive")


@dataclass(frozen=True)
class GroundTruth:
    main_ids: frozenset
    capillary_ids: frozenset

    def main_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[list(self.main_ids)] = True
        return mask


def _domain_bounds(domain) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([b[0] for b in domain], dtype=np.float64)
    hi = np.array([b[1] for b in domain], dtype=np.float64)
    if np.any(hi <= lo):
        raise InvalidDomain(f"degenerate domain {domain!r}")
    return lo, hi


def generate_attractors(params: ScaParams) -> np.ndarray:
    """``attractor_count`` points drawn uniformly from ``params.domain``."""
    lo, hi = _domain_bounds(params.domain)
    rng = np.random.default_rng(params.seed)
    return lo + rng.random((params.attractor_count, len(lo))) * (hi - lo)


def default_root(domain) -> np.ndarray:
    """Middle of the domain's low-x face, where the trunk enters."""
    lo, hi = _domain_bounds(domain)
    root = (lo + hi) / 2.0
    root[0] = lo[0]
    return root


def grow_sca(attractors, root, params: ScaParams) -> VesselGraph:
    """Grow a space-colonization tree (or forest, for several roots).

    ``root`` is a single point or an ``(k, dim)`` array of roots. The result has
    unit radii and directed parent -> child edges. ``graph.meta`` records the
    iteration count and whether growth stalled; a stall before any growth also
    emits a :class:`GrowthStalled` warning.
    """
    attractors = np.array(attractors, dtype=np.float64, ndmin=2)
    roots = np.array(root, dtype=np.float64, ndmin=2)
    dim = roots.shape[1]
    if attractors.size == 0:
        attractors = attractors.reshape(0, dim)
    if attractors.shape[1] != dim:
        raise InvalidParams("root and attractors must share a dimension")

    cap = params.max_nodes
    lo, hi = _domain_bounds(params.domain)
    capacity = max(1024, len(roots) * 2)
    pts = np.empty((capacity, dim))
    pts[: len(roots)] = roots
    n = len(roots)
    parents = np.full(capacity, -1, dtype=np.int64)
    step, attract_r, kill_r = params.step, params.attraction_radius, params.kill_radius

    def kill(tree: cKDTree, alive: np.ndarray) -> np.ndarray:
        if not len(alive):
            return alive
        d, _ = tree.query(alive, distance_upper_bound=kill_r)
        return alive[~(d <= kill_r)]

    tree = cKDTree(pts[:n])
    alive = kill(tree, attractors)
    iterations = 0
    stalled = False
    while iterations < params.max_iterations and len(alive) and (cap is None or n < cap):
        d, nearest = tree.query(alive, distance_upper_bound=attract_r)
        hit = np.isfinite(d) & (d > 0)
        if not hit.any():
            stalled = True
            break
        owners = nearest[hit]
        direction = (alive[hit] - pts[owners]) / d[hit][:, None]
        order = np.argsort(owners, kind="stable")
        owners, direction = owners[order], direction[order]
        uniq, start = np.unique(owners, return_index=True)
        sums = np.add.reduceat(direction, start, axis=0)
        norms = np.linalg.norm(sums, axis=1)
        ok = norms > 1e-12
        uniq, sums, norms = uniq[ok], sums[ok], norms[ok]
        candidates = pts[uniq] + step * sums / norms[:, None]
        inside = ((candidates >= lo) & (candidates < hi)).all(axis=1)
        uniq, candidates = uniq[inside], candidates[inside]
        # an owner that keeps the same attractors would respawn the same child
        dd, _ = tree.query(candidates)
        fresh = dd > 1e-9 * step
        uniq, candidates = uniq[fresh], candidates[fresh]
        if not len(uniq):
            stalled = True
            break
        if cap is not None:
            uniq, candidates = uniq[: cap - n], candidates[: cap - n]
        grow = len(uniq)
        if n + grow > capacity:
            capacity = max(2 * capacity, n + grow)
            pts = np.concatenate([pts, np.empty((capacity - len(pts), dim))])
            parents = np.concatenate([parents, np.full(capacity - len(parents), -1, dtype=np.int64)])
        pts[n : n + grow] = candidates
        parents[n : n + grow] = uniq
        n += grow
        tree = cKDTree(pts[:n])
        alive = kill(tree, alive)
        iterations += 1

    if stalled and n == len(roots):
        warnings.warn("no attractor reachable from the root; returning the bare root", GrowthStalled, stacklevel=2)
    parents = parents[:n]
    child = np.flatnonzero(parents >= 0)
    edges = np.column_stack([parents[child], child])
    coords = pts[:n].copy()
    meta = {
        "generator": "sca",
        "iterations": str(iterations),
        "stalled": str(bool(stalled and len(alive) > 0)).lower(),
        "roots": str(len(roots)),
    }
    return VesselGraph(coords, np.ones(len(coords)), edges, meta=meta)


def _parents(tree: VesselGraph) -> np.ndarray:
    n = tree.n_nodes
    parent = np.full(n, -1, dtype=np.int64)
    if tree.n_edges:
        src, dst = tree.edges[:, 0], tree.edges[:, 1]
        indeg = np.bincount(dst, minlength=n)
        if indeg.max() > 1:
            raise NotATree(f"node {int(np.argmax(indeg))} has several parents")
        parent[dst] = src
    return parent


def topological_order(tree: VesselGraph) -> np.ndarray:
    """Nodes ordered so that every parent precedes its children.

    Raises :class:`NotATree` unless the graph is a rooted forest with edges
    directed away from the roots.
    """
    parent = _parents(tree)
    n = tree.n_nodes
    children_ptr = np.concatenate([[0], np.cumsum(np.bincount(parent[parent >= 0], minlength=n))])
    child_order = np.argsort(parent, kind="stable")[np.count_nonzero(parent < 0):]
    order = np.empty(n, dtype=np.int64)
    roots = np.flatnonzero(parent < 0)
    order[: len(roots)] = roots
    head, tail = 0, len(roots)
    while head < tail:
        u = order[head]
        head += 1
        kids = child_order[children_ptr[u] : children_ptr[u + 1]]
        order[tail : tail + len(kids)] = kids
        tail += len(kids)
    if tail != n:
        raise NotATree("graph contains a cycle")
    return order


def assign_radii(tree: VesselGraph, params: TaperParams = TaperParams()) -> VesselGraph:
    """Murray-law radii: leaves get ``terminal_radius``, parents ``(sum r_c^k)^(1/k)``.

    The sum is taken relative to the thickest child, which keeps every parent
    at least as thick as each child under rounding and makes a single child
    pass its radius through unchanged.
    """
    order = topological_order(tree)
    parent = _parents(tree)
    k = params.murray_exponent
    n = tree.n_nodes
    kids_of: list[list[int]] = [[] for _ in range(n)]
    for child in np.flatnonzero(parent >= 0).tolist():
        kids_of[parent[child]].append(child)
    radii = [0.0] * n
    for u in order[::-1].tolist():
        kids = kids_of[u]
        if not kids:
            radii[u] = params.terminal_radius
            continue
        m = max(radii[c] for c in kids)
        radii[u] = m * sum((radii[c] / m) ** k for c in kids) ** (1.0 / k)
    return tree.with_radii(radii)


def _check_ratio(ratio: float) -> None:
    if not (0.0 <= ratio <= 1.0):
        raise InvalidRatio(f"ratio must lie in [0, 1], got {ratio!r}")


def label_ground_truth(tree: VesselGraph, r_min_ratio: float) -> GroundTruth:
    """Split nodes into main (``r >= ratio * r_max``) and capillary ids."""
    _check_ratio(r_min_ratio)
    main = tree.radii >= r_min_ratio * tree.r_max
    return GroundTruth(
        frozenset(np.flatnonzero(main).tolist()),
        frozenset(np.flatnonzero(~main).tolist()),
    )


def generate_tree(
    params: ScaParams = ScaParams(),
    taper: TaperParams = TaperParams(),
    roots=None,
) -> VesselGraph:
    """Attractors, growth and radius assignment in one call."""
    attractors = generate_attractors(params)
    if roots is None:
        roots = default_root(params.domain)
    tree = assign_radii(grow_sca(attractors, roots, params), taper)
    tree.meta.update(
        seed=str(params.seed),
        attractor_count=str(params.attractor_count),
        attraction_radius=repr(params.attraction_radius),
        kill_radius=repr(params.kill_radius),
        step=repr(params.step),
        terminal_radius=repr(taper.terminal_radius),
        murray_exponent=repr(taper.murray_exponent),
        dims="x".join(str(int(math.ceil(hi))) for _, hi in params.domain),
    )
    return tree


def random_tree(n: int, seed: int = 0, *, spacing: float = 1.0, taper: TaperParams = TaperParams()) -> VesselGraph:
    """Random recursive tree of exactly ``n`` nodes with Murray radii.

    Node ``i > 0`` attaches to a uniformly chosen earlier node and sits one
    ``spacing`` away from it in a random planar direction. Cheap fixture for
    traversal tests and benchmarks where geometry does not matter.
    """
    if n < 1:
        raise InvalidParams("n must be at least 1")
    rng = np.random.default_rng(seed)
    parent = np.concatenate([[-1], (rng.random(n - 1) * np.arange(1, n)).astype(np.int64)])
    angle = rng.random(n) * 2 * np.pi
    offsets = spacing * np.column_stack([np.cos(angle), np.sin(angle)])
    offsets[0] = 0.0
    coords = np.zeros((n, 2))
    for i in range(1, n):
        coords[i] = coords[parent[i]] + offsets[i]
    edges = np.column_stack([parent[1:], np.arange(1, n)])
    return assign_radii(VesselGraph(coords, np.ones(n), edges), taper)
