import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biovessel.errors import EmptyAfterFilter, InvalidRatio, RootNotFound, ShapeMismatch
from biovessel.graph import Explicit, VesselGraph, build_graph, largest_component
from biovessel.raster import rasterize_2d
from biovessel.segment import (
    Coordinate,
    MaxRadius,
    NodeId,
    SegmentorConfig,
    dfs_extract,
    filter_by_radius,
    parse_root,
    segment,
    structural_consistency,
)
from biovessel.synthesis import ScaParams, generate_tree, label_ground_truth, random_tree

from conftest import chain
from oracles import bfs_reachable


def _is_dfs_order(graph: VesselGraph, order) -> bool:
    """Every visited node after the root hangs off the deepest open node on the stack."""
    adj = [set(graph.neighbors(i).tolist()) for i in range(graph.n_nodes)]
    stack = [order[0]]
    seen = {order[0]}
    for v in order[1:]:
        while stack and v not in adj[stack[-1]]:
            # a node may only be closed once all its neighbours are seen
            if adj[stack[-1]] - seen:
                return False
            stack.pop()
        if not stack:
            return False
        stack.append(v)
        seen.add(v)
    return len(seen) == len(order)


# -- filter ----------------------------------------------------------------------------

def test_filter_ratio_zero_keeps_everything():
    g = random_tree(40, 1)
    assert filter_by_radius(g, 0.0).structurally_equal(g)


def test_filter_ratio_one_keeps_max_only():
    g = chain([3, 7, 7, 2])
    kept = filter_by_radius(g, 1.0)
    assert kept.radii.tolist() == [7.0, 7.0]


def test_filter_boundary_is_inclusive():
    g = chain([1, 2, 3, 10])
    kept = filter_by_radius(g, 0.2)
    assert kept.radii.tolist() == [2.0, 3.0, 10.0]
    assert kept.edges.tolist() == [[0, 1], [1, 2]]


def test_filter_rejects_bad_ratio():
    with pytest.raises(InvalidRatio):
        filter_by_radius(chain([1, 2]), -0.1)
    with pytest.raises(InvalidRatio):
        SegmentorConfig(r_min_ratio=1.2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 200), st.integers(0, 500), st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 100))
def test_filter_monotone_and_scale_invariant(n, seed, r1, r2, scale):
    g = random_tree(n, seed)
    lo, hi = sorted((r1, r2))
    keep_lo = g.radii >= lo * g.r_max
    keep_hi = g.radii >= hi * g.r_max
    assert np.all(keep_lo | ~keep_hi)
    assert filter_by_radius(g, hi).n_nodes <= filter_by_radius(g, lo).n_nodes
    scaled = g.with_radii(g.radii * scale)
    assert filter_by_radius(scaled, hi).n_nodes == filter_by_radius(g, hi).n_nodes


# -- DFS -------------------------------------------------------------------------------

def test_chain_order_is_forced():
    res = dfs_extract(chain([5.0, 4.0, 3.0]), SegmentorConfig(0.0))
    assert res.visited_order.tolist() == [0, 1, 2]


def test_thicker_branch_visited_first():
    # root 0 -> a(5) -> a1(4), root -> b(3) -> b1(2)
    nodes = np.array([[0, 0, 0, 9], [1, 1, 0, 3], [1, -1, 0, 5], [2, 1, 0, 2], [2, -1, 0, 4]], float)
    g = build_graph(nodes, Explicit([(0, 1), (0, 2), (1, 3), (2, 4)]))
    res = dfs_extract(g, SegmentorConfig(0.0))
    assert res.visited_order.tolist() == [0, 2, 4, 1, 3]


def test_equal_weights_break_ties_by_id():
    nodes = np.array([[0, 0, 0, 9], [1, 0, 0, 2], [0, 1, 0, 2], [-1, 0, 0, 2]], float)
    g = build_graph(nodes, Explicit([(0, 3), (0, 1), (0, 2)]))
    assert dfs_extract(g, SegmentorConfig(0.0)).visited_order.tolist() == [0, 1, 2, 3]


def test_visited_set_equals_bfs_reachability():
    g = generate_tree(ScaParams(seed=3, max_nodes=1000))
    assert g.n_nodes == 1000
    res = dfs_extract(g, SegmentorConfig(0.0))
    reach = bfs_reachable(g.n_nodes, g.edges.tolist(), int(np.argmax(g.radii)))
    assert set(res.source_ids[res.visited_order].tolist()) == reach
    assert _is_dfs_order(res.main_graph, res.visited_order.tolist())


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 150), st.integers(0, 10_000), st.integers(0, 40))
def test_dfs_properties_on_random_graphs(n, seed, extra):
    rng = np.random.default_rng(seed)
    edges = {(int(a), int(b)) for a, b in rng.integers(0, n, (n - 1 + extra, 2)) if a != b}
    g = VesselGraph(rng.random((n, 2)) * 50, rng.uniform(0.5, 5, n), sorted(edges))
    res = dfs_extract(g, SegmentorConfig(0.0))
    order = res.visited_order.tolist()
    main = res.main_graph
    assert sorted(order) == list(range(main.n_nodes))
    assert _is_dfs_order(main, order)
    again = dfs_extract(g, SegmentorConfig(0.0))
    assert np.array_equal(again.visited_order, res.visited_order)
    reach = bfs_reachable(n, sorted(edges), int(res.source_ids[res.root]))
    assert set(res.source_ids.tolist()) == reach


def test_largest_component_kept_and_pruned_counted():
    nodes = np.array([[0, 0, 0, 5], [1, 0, 0, 5], [2, 0, 0, 5], [9, 9, 0, 9], [20, 20, 0, 1]], float)
    g = build_graph(nodes, Explicit([(0, 1), (1, 2)]))
    res = dfs_extract(g, SegmentorConfig(0.0))
    assert res.source_ids.tolist() == [0, 1, 2]
    assert res.pruned_components == 2
    assert res.r_max_observed == 9.0


def test_unfiltered_input_is_filtered_anyway():
    g = chain([5, 4, 0.5, 4])
    res = dfs_extract(g, SegmentorConfig(0.2))
    assert np.all(res.main_graph.radii >= 0.2 * 5)
    assert res.source_ids.tolist() == [0, 1]


def test_root_policies():
    g = chain([2, 3, 6, 3, 2])
    assert dfs_extract(g, SegmentorConfig(0.0, MaxRadius())).visited_order.tolist() == [2, 1, 0, 3, 4]
    res = dfs_extract(g, SegmentorConfig(0.0, Coordinate(0.2, 0.3)))
    assert res.visited_order[0] == 0
    assert dfs_extract(g, SegmentorConfig(0.0, NodeId(4))).visited_order.tolist() == [4, 3, 2, 1, 0]
    with pytest.raises(RootNotFound):
        dfs_extract(g, SegmentorConfig(0.0, Coordinate(100, 100), snap_distance=5))
    with pytest.raises(RootNotFound):
        dfs_extract(g, SegmentorConfig(0.5, NodeId(0)))


def test_parse_root():
    assert parse_root("max_radius") == MaxRadius()
    assert parse_root("id:7") == NodeId(7)
    assert parse_root("3,4") == Coordinate(3.0, 4.0)
    assert parse_root("3,4,5") == Coordinate(3.0, 4.0, 5.0)


def test_empty_after_filter():
    with pytest.raises(EmptyAfterFilter):
        dfs_extract(VesselGraph(np.zeros((0, 3)), []), SegmentorConfig(0.0))


# -- segment ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sca_tree():
    return generate_tree(ScaParams(seed=0, max_nodes=3000))


def test_ratio_zero_spans_tree(sca_tree):
    res = segment(sca_tree, SegmentorConfig(0.0))
    assert res.retained_nodes == sca_tree.n_nodes and res.pruned_components == 0


def test_ratio_point_two_matches_ground_truth(sca_tree):
    res = segment(sca_tree, SegmentorConfig(0.2))
    gt = label_ground_truth(sca_tree, 0.2)
    largest_ids = set(largest_component(sca_tree.subgraph(gt.main_mask(sca_tree.n_nodes)))[1].tolist())
    main_sorted = np.array(sorted(gt.main_ids))
    assert set(res.source_ids.tolist()) == {int(main_sorted[i]) for i in largest_ids}
    # main vessels of a tapered tree are connected through the trunk
    assert set(res.source_ids.tolist()) == set(gt.main_ids)


def test_isolated_max_node_at_ratio_one():
    nodes = np.array([[0, 0, 0, 2], [1, 0, 0, 2], [30, 30, 0, 8]], float)
    res = segment(nodes, SegmentorConfig(1.0))
    assert res.source_ids.tolist() == [2]
    assert res.retained_nodes == 1 and res.pruned_components >= 0


def test_segment_equals_pipeline(rng):
    nodes = np.column_stack([rng.random((300, 2)) * 60, np.zeros(300), rng.gamma(2, 1, 300) + 0.1])
    cfg = SegmentorConfig(0.15, emit_mask=True, dims=(64, 64))
    res = segment(nodes, cfg)
    g = build_graph(nodes)
    filtered = filter_by_radius(g, 0.15)
    manual = dfs_extract(filtered, cfg, r_max=g.r_max)
    assert manual.main_graph.structurally_equal(res.main_graph)
    assert np.array_equal(manual.visited_order, res.visited_order)
    assert res.mask == rasterize_2d(res.main_graph, (64, 64))
    np.testing.assert_array_equal(g.radii[res.source_ids], res.main_graph.radii)


def test_result_invariants(sca_tree):
    res = segment(sca_tree, SegmentorConfig(0.3))
    assert np.all(res.main_graph.radii >= 0.3 * res.r_max_observed)
    assert largest_component(res.main_graph)[2] == 0
    assert res.summary()["retained_nodes"] == res.retained_nodes


def test_segmentor_is_stateless(sca_tree):
    other = random_tree(500, 4)
    first = segment(sca_tree, SegmentorConfig(0.2))
    segment(other, SegmentorConfig(0.7))
    second = segment(sca_tree, SegmentorConfig(0.2))
    assert np.array_equal(first.visited_order, second.visited_order)
    assert first.main_graph.structurally_equal(second.main_graph)


# -- structural consistency ------------------------------------------------------------

def test_structural_consistency_examples(rng):
    a = (rng.random((32, 32)) < 0.5).astype(np.uint8) * 255
    assert structural_consistency(a, a) == 0.0
    assert structural_consistency(np.full((8, 8), 255), np.zeros((8, 8))) == 1.0
    b = a.copy()
    flat = b.reshape(-1)
    idx = rng.choice(1024, 64, replace=False)
    flat[idx] = 255 - flat[idx]
    assert structural_consistency(a, b) == 64 / 1024 == 0.0625
    with pytest.raises(ShapeMismatch):
        structural_consistency(a, a[:5])
