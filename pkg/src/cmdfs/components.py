"""Half-edge classification by the size of what hangs behind each half-edge.

A half-edge at ``w`` is *Ext* when removing it leaves ``w`` in a component with
fewer than ``N**delta`` vertices, and *Surv* otherwise.  Removing a non-bridge
edge (loops included) never splits a component, so only bridges need care;
they are found with one iterative low-link pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@numba.njit(cache=True)
def _bridge_pass(n, eu, ev):
    m = eu.size
    deg = np.zeros(n + 1, np.int64)
    for e in range(m):
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    start = np.cumsum(deg)
    fill = start[:-1].copy()
    adj_v = np.empty(2 * m, np.int64)
    adj_e = np.empty(2 * m, np.int64)
    for e in range(m):
        a, b = eu[e], ev[e]
        adj_v[fill[a]] = b
        adj_e[fill[a]] = e
        fill[a] += 1
        adj_v[fill[b]] = a
        adj_e[fill[b]] = e
        fill[b] += 1

    disc = np.full(n, -1, np.int64)
    low = np.zeros(n, np.int64)
    sub = np.ones(n, np.int64)
    comp = np.full(n, -1, np.int64)
    parent_edge = np.full(n, -1, np.int64)
    parent = np.full(n, -1, np.int64)
    it = np.zeros(n, np.int64)
    stack = np.empty(n, np.int64)
    comp_size = np.zeros(n, np.int64)
    bridge = np.zeros(m, np.bool_)
    clock = 0
    n_comp = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        top = 0
        stack[top] = root
        top += 1
        disc[root] = clock
        low[root] = clock
        clock += 1
        comp[root] = n_comp
        it[root] = start[root]
        while top > 0:
            v = stack[top - 1]
            if it[v] < start[v + 1]:
                k = it[v]
                it[v] += 1
                e = adj_e[k]
                if e == parent_edge[v]:
                    continue
                w = adj_v[k]
                if disc[w] < 0:
                    disc[w] = clock
                    low[w] = clock
                    clock += 1
                    comp[w] = n_comp
                    parent[w] = v
                    parent_edge[w] = e
                    it[w] = start[w]
                    stack[top] = w
                    top += 1
                elif disc[w] < low[v]:
                    low[v] = disc[w]
            else:
                top -= 1
                p = parent[v]
                if p >= 0:
                    sub[p] += sub[v]
                    if low[v] < low[p]:
                        low[p] = low[v]
                    if low[v] > disc[p]:
                        bridge[parent_edge[v]] = True
        comp_size[n_comp] = sub[root]
        n_comp += 1
    return bridge, comp, comp_size[:n_comp], sub, parent_edge


@dataclass(frozen=True)
class HalfEdgeClasses:
    """Ext/Surv counts indexed by the degree of the half-edge's endpoint."""

    threshold: float
    ext: np.ndarray
    surv: np.ndarray

    @property
    def total(self) -> int:
        return int(self.ext.sum() + self.surv.sum())

    @property
    def ext_total(self) -> int:
        return int(self.ext.sum())

    @property
    def surv_total(self) -> int:
        return int(self.surv.sum())

    def surv_fraction(self) -> float:
        return self.surv_total / self.total if self.total else 0.0

    def ext_fraction(self, i: int | None = None) -> float:
        if not self.total:
            return 0.0
        count = self.ext_total if i is None else (int(self.ext[i]) if i < self.ext.size else 0)
        return count / self.total


def side_sizes(n: int, edges) -> np.ndarray:
    """For every edge (u, v), the size of the component of u and of v once the edge is removed."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    eu, ev = edges[:, 0].copy(), edges[:, 1].copy()
    bridge, comp, comp_size, sub, parent_edge = _bridge_pass(n, eu, ev)
    whole = comp_size[comp[eu]]
    sizes = np.column_stack([whole, whole]).astype(np.int64)
    # a bridge is the tree edge into its child; the child keeps its subtree
    child = np.full(edges.shape[0], -1, np.int64)
    has_parent = parent_edge >= 0
    child[parent_edge[has_parent]] = np.flatnonzero(has_parent)
    for e in np.flatnonzero(bridge):
        c = child[e]
        s = sub[c]
        if eu[e] == c:
            sizes[e] = (s, whole[e] - s)
        else:
            sizes[e] = (whole[e] - s, s)
    return sizes


def classify_half_edges(edges, n: int, delta: float, degrees=None) -> HalfEdgeClasses:
    """Count Ext and Surv half-edges by endpoint degree, with threshold ``n**delta``."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if degrees is None:
        degrees = np.bincount(edges.ravel(), minlength=n)
    degrees = np.asarray(degrees, dtype=np.int64)
    threshold = float(n) ** delta
    width = int(degrees.max()) + 1 if degrees.size else 1
    ext = np.zeros(width, np.int64)
    surv = np.zeros(width, np.int64)
    if edges.shape[0]:
        sizes = side_sizes(n, edges)
        ends = edges.ravel()
        is_ext = sizes.ravel() < threshold
        end_deg = degrees[ends]
        ext += np.bincount(end_deg[is_ext], minlength=width)
        surv += np.bincount(end_deg[~is_ext], minlength=width)
    return HalfEdgeClasses(threshold, ext, surv)
