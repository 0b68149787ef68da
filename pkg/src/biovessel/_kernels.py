"""Compiled traversal kernels over CSR adjacency.

Both kernels walk the undirected traversal adjacency built by
:class:`biovessel.graph.VesselGraph`, whose neighbour lists are already sorted
in expansion order.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def label_components(indptr, indices, n):
    labels = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    current = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        labels[start] = current
        top = 0
        stack[0] = start
        while top >= 0:
            u = stack[top]
            top -= 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if labels[v] == -1:
                    labels[v] = current
                    top += 1
                    stack[top] = v
        current += 1
    return labels, current


@njit(cache=True)
def dfs_order(indptr, indices, root, n):
    """Preorder of a recursive DFS that always descends into the first unvisited neighbour."""
    visited = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    node_stack = np.empty(n, dtype=np.int64)
    cursor = np.empty(n, dtype=np.int64)
    visited[root] = True
    order[0] = root
    count = 1
    top = 0
    node_stack[0] = root
    cursor[0] = indptr[root]
    while top >= 0:
        u = node_stack[top]
        k = cursor[top]
        end = indptr[u + 1]
        while k < end and visited[indices[k]]:
            k += 1
        if k == end:
            top -= 1
            continue
        cursor[top] = k + 1
        v = indices[k]
        visited[v] = True
        order[count] = v
        count += 1
        top += 1
        node_stack[top] = v
        cursor[top] = indptr[v]
    return order[:count]
