"""Depth-first exploration of a configuration model built while it is explored.

The graph is never sampled up front.  Each time the search wakes a vertex, the
half-edges it still owns are paired uniformly with the unmatched half-edges of
the sleeping vertices, and the partners (loops excluded) are stored in a
uniformly ordered list that the search later walks through.

Two implementations share one uniform stream: a numba kernel used for real
runs, and :class:`Exploration`, a readable step-by-step reference that exposes
the active/sleeping/retired state.  Both consume ``draw(n) = floor(U * n)`` in
the same order, so a given seed yields the same trace from either.

The contour starts at ``X_0 = 0`` and the first step wakes a vertex, so a run
on ``N`` vertices has exactly ``N`` up-steps and ``N`` down-steps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .degrees import DegreeSequence

SLEEPING, ACTIVE, RETIRED = 0, 1, 2
DEFAULT_TRACK = 8


def uniform_stream(seq: DegreeSequence, seed) -> np.ndarray:
    """All uniforms a run can consume: one per wake from scratch, pairings and shuffles."""
    size = seq.n + 2 * seq.total + 1
    return np.random.default_rng(seed).random(size)


def _as_degrees(seq) -> np.ndarray:
    if isinstance(seq, DegreeSequence):
        degrees = np.asarray(seq.degrees, dtype=np.int64)
    else:
        degrees = np.asarray(seq, dtype=np.int64)
    if degrees.ndim != 1 or degrees.size == 0:
        raise ValueError("degree sequence must be a non-empty 1-d list")
    if np.any(degrees < 0):
        raise ValueError("degrees must be non-negative")
    if degrees.sum() % 2:
        raise ValueError("degree sum is odd; fix parity before exploring")
    return degrees


@numba.njit(cache=True)
def _draw(uni, cursor, n):
    k = int(uni[cursor[0]] * n)
    cursor[0] += 1
    return k if k < n else n - 1


@numba.njit(cache=True)
def _pool_remove(pool, pos, size, h):
    i = pos[h]
    last = pool[size - 1]
    pool[i] = last
    pos[last] = i
    pool[size - 1] = h
    pos[h] = size - 1
    return size - 1


@numba.njit(cache=True)
def _kernel(deg, uni, thresholds, track):
    n = deg.size
    off = np.zeros(n + 1, np.int64)
    for v in range(n):
        off[v + 1] = off[v] + deg[v]
    m = off[n]
    max_deg = 0
    for v in range(n):
        if deg[v] > max_deg:
            max_deg = deg[v]

    owner = np.empty(m, np.int64)
    for v in range(n):
        for h in range(off[v], off[v + 1]):
            owner[h] = v
    pool = np.arange(m)
    pos = np.arange(m)
    psize = m
    matched = np.zeros(m, np.bool_)
    unmatched = deg.copy()

    sleep = np.arange(n)
    spos = np.arange(n)
    ssize = n
    state = np.zeros(n, np.int8)

    mbuf = np.empty(m, np.int64)
    mlen = np.zeros(n, np.int64)
    mptr = np.zeros(n, np.int64)
    stack = np.empty(n, np.int64)
    top = 0

    hist = np.zeros(max_deg + 1, np.int64)
    for v in range(n):
        hist[deg[v]] += 1

    steps = 2 * n
    contour = np.zeros(steps + 1, np.int32)
    sleeping = np.empty(steps + 1, np.int64)
    tracked = np.zeros((steps + 1, track + 1), np.int64)
    sleeping[0] = n
    for i in range(min(track, max_deg) + 1):
        tracked[0, i] = hist[i]
    order = np.empty(n, np.int64)
    edges = np.empty((m // 2, 2), np.int64)
    n_edges = 0
    n_snap = thresholds.size
    snaps = np.zeros((n_snap, max_deg + 1), np.int64)
    snap_step = np.full(n_snap, -1, np.int64)
    next_snap = 0
    cursor = np.zeros(1, np.int64)

    for step in range(1, steps + 1):
        if top == 0:
            v = sleep[_draw(uni, cursor, ssize)]
        else:
            u = stack[top - 1]
            base = off[u]
            while mptr[u] < mlen[u] and state[mbuf[base + mptr[u]]] != SLEEPING:
                mptr[u] += 1
            if mptr[u] == mlen[u]:
                top -= 1
                state[u] = RETIRED
                v = -1
            else:
                v = mbuf[base + mptr[u]]
                mptr[u] += 1
        if v >= 0:
            # wake v: leave the sleeping set, then pair its free half-edges
            i = spos[v]
            last = sleep[ssize - 1]
            sleep[i] = last
            spos[last] = i
            sleep[ssize - 1] = v
            spos[v] = ssize - 1
            ssize -= 1
            state[v] = ACTIVE
            hist[unmatched[v]] -= 1
            order[n - ssize - 1] = v
            base = off[v]
            for h in range(off[v], off[v + 1]):
                if matched[h]:
                    continue
                psize = _pool_remove(pool, pos, psize, h)
                h2 = pool[_draw(uni, cursor, psize)]
                psize = _pool_remove(pool, pos, psize, h2)
                matched[h] = True
                matched[h2] = True
                w = owner[h2]
                edges[n_edges, 0] = v
                edges[n_edges, 1] = w
                n_edges += 1
                if w == v:
                    unmatched[v] -= 2
                else:
                    unmatched[v] -= 1
                    hist[unmatched[w]] -= 1
                    unmatched[w] -= 1
                    hist[unmatched[w]] += 1
                    mbuf[base + mlen[v]] = w
                    mlen[v] += 1
            for i in range(mlen[v] - 1, 0, -1):
                j = _draw(uni, cursor, i + 1)
                tmp = mbuf[base + i]
                mbuf[base + i] = mbuf[base + j]
                mbuf[base + j] = tmp
            stack[top] = v
            top += 1
        contour[step] = top
        sleeping[step] = ssize
        for i in range(min(track, max_deg) + 1):
            tracked[step, i] = hist[i]
        while next_snap < n_snap and ssize <= thresholds[next_snap]:
            snaps[next_snap, :] = hist
            snap_step[next_snap] = step
            next_snap += 1
    return contour, sleeping, tracked, edges, order, snaps, snap_step, cursor[0]


@dataclass(frozen=True)
class InducedHistogram:
    """Degrees of the graph induced by the sleeping vertices at one step."""

    alpha: float
    step: int
    counts: np.ndarray

    @property
    def n_vertices(self) -> int:
        return int(self.counts.sum())

    def masses(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts / total if total else self.counts.astype(float)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "step": self.step,
            "counts": {str(k): int(c) for k, c in enumerate(self.counts) if c},
        }


@dataclass
class ContourTrace:
    """Everything a run produces.

    ``contour[n]`` is the length of the active list after ``n`` steps,
    ``sleeping[n]`` the number of sleeping vertices, and ``tracked[n, i]`` the
    number of sleeping vertices whose induced degree is ``i`` (for ``i`` up to
    the tracked width).
    """

    degrees: np.ndarray
    contour: np.ndarray
    sleeping: np.ndarray
    tracked: np.ndarray
    edges: np.ndarray
    order: np.ndarray
    seed: object = None
    component_boundaries: np.ndarray = field(init=False)

    def __post_init__(self):
        self.component_boundaries = np.flatnonzero(self.contour == 0)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    def excursions(self) -> np.ndarray:
        """(start, end) step pairs of each excursion away from zero, one per component."""
        b = self.component_boundaries
        return np.column_stack([b[:-1], b[1:]])

    def component_sizes(self) -> np.ndarray:
        exc = self.excursions()
        return (exc[:, 1] - exc[:, 0]) // 2

    def giant_fraction(self) -> float:
        return float(self.component_sizes().max()) / self.n

    def second_fraction(self) -> float:
        sizes = np.sort(self.component_sizes())
        return float(sizes[-2]) / self.n if sizes.size > 1 else 0.0

    def induced_counts(self, step: int) -> np.ndarray:
        return self.tracked[step]

    def write_contour_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["step", "X"])
            out.writerows(enumerate(self.contour.tolist()))

    def write_edges_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["u", "v"])
            out.writerows(self.edges.tolist())


def explore_and_build(
    seq,
    seed,
    snapshot_alphas=(),
    track: int = DEFAULT_TRACK,
    stream: np.ndarray | None = None,
):
    """Build a configuration model on ``seq`` and explore it depth first.

    Returns the trace and one :class:`InducedHistogram` per requested alpha,
    taken at the first step ``n >= 1`` with at most ``(1 - alpha) N`` sleeping
    vertices.  Alphas that are never reached give no histogram.
    """
    degrees = _as_degrees(seq)
    alphas = [float(a) for a in snapshot_alphas]
    if any(a < 0 or a > 1 for a in alphas):
        raise ValueError("snapshot alphas must lie in [0, 1]")
    if alphas != sorted(alphas):
        raise ValueError("snapshot alphas must be sorted")
    n = degrees.size
    uni = uniform_stream(DegreeSequence(degrees.tolist()), seed) if stream is None else stream
    thresholds = np.floor((1.0 - np.asarray(alphas, dtype=float)) * n + 1e-9).astype(np.int64)
    contour, sleeping, tracked, edges, order, snaps, snap_step, _ = _kernel(
        degrees, uni, thresholds, int(track)
    )
    trace = ContourTrace(degrees, contour, sleeping, tracked, edges, order, seed)
    hists = [
        InducedHistogram(a, int(s), counts)
        for a, s, counts in zip(alphas, snap_step, snaps)
        if s >= 0
    ]
    return trace, hists


def write_histograms_json(hists, path) -> None:
    Path(path).write_text(json.dumps([h.to_dict() for h in hists], indent=2) + "\n")


@numba.njit(cache=True)
def _window_min(x, w):
    # min of x[i .. i + w], clipped at the end of the array
    n = x.size
    out = np.empty(n, x.dtype)
    dq = np.empty(n, np.int64)
    head = 0
    tail = 0
    j = n - 1
    for i in range(n - 1, -1, -1):
        while tail > head and x[dq[tail - 1]] >= x[i]:
            tail -= 1
        dq[tail] = i
        tail += 1
        while dq[head] > i + w:
            head += 1
        out[i] = x[dq[head]]
    return out


@numba.njit(cache=True)
def _ladder_scan(x, wmin):
    times = [0]
    k = 0
    i = 1
    n = x.size
    while i < n:
        if x[i] == k + 1 and wmin[i] >= k + 1:
            times.append(i)
            k += 1
        i += 1
    return np.array(times, np.int64)


def ladder_times(trace, delta: float, n: int | None = None) -> np.ndarray:
    """Ladder times T_0 = 0 < T_1 < ... < T_K.

    T_{k+1} is the first step after T_k at level k+1 from which the contour
    stays at or above k+1 for the next floor(N**delta) steps.  Windows that run
    past the end of the trace are checked on what is available.  ``trace`` can
    be a :class:`ContourTrace` or a bare contour array, in which case ``n``
    defaults to half its number of steps.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if isinstance(trace, ContourTrace):
        x, n = trace.contour, trace.n if n is None else n
    else:
        x = np.asarray(trace)
        n = (x.size - 1) // 2 if n is None else n
    x = x.astype(np.int64)
    w = int(np.floor(max(n, 1) ** delta + 1e-12))
    return _ladder_scan(x, _window_min(x, w))


def ladder_counts(trace: ContourTrace, times) -> np.ndarray:
    """N_i(k): induced-degree counts of the sleeping graph just before each ladder time."""
    idx = np.maximum(np.asarray(times) - 1, 0)
    return trace.tracked[idx]


def longest_path_lower_bound(trace) -> int:
    """Height of the search tree, which is the length of a simple path in the graph."""
    x = trace.contour if isinstance(trace, ContourTrace) else np.asarray(trace)
    return max(int(x.max()) - 1, 0)


class HalfEdgePool:
    """Unmatched half-edges with O(1) uniform draw and swap-remove."""

    def __init__(self, degrees):
        self.offsets = np.concatenate([[0], np.cumsum(degrees)]).astype(np.int64)
        total = int(self.offsets[-1])
        self.owner = np.repeat(np.arange(len(degrees)), degrees)
        self.pool = list(range(total))
        self.pos = list(range(total))
        self.size = total
        self.matched = [False] * total

    def remove(self, h: int) -> None:
        i = self.pos[h]
        last = self.pool[self.size - 1]
        self.pool[i] = last
        self.pos[last] = i
        self.pool[self.size - 1] = h
        self.pos[h] = self.size - 1
        self.size -= 1

    def half_edges(self, v: int) -> range:
        return range(self.offsets[v], self.offsets[v + 1])

    def unmatched(self, v: int) -> int:
        return sum(not self.matched[h] for h in self.half_edges(v))


class _Stream:
    def __init__(self, uniforms):
        self.uniforms = uniforms
        self.cursor = 0

    def draw(self, n: int) -> int:
        k = int(self.uniforms[self.cursor] * n)
        self.cursor += 1
        return min(k, n - 1)


class Exploration:
    """Reference implementation, one step at a time, with the full state exposed.

    ``active`` is a list of ``[vertex, pending]`` pairs where ``pending`` holds
    the sleeping vertices still to be visited from ``vertex``; visiting a
    vertex withdraws every occurrence of it from all pending lists.
    """

    def __init__(self, seq, seed=None, stream: np.ndarray | None = None):
        self.degrees = _as_degrees(seq)
        n = self.degrees.size
        if stream is None:
            stream = uniform_stream(DegreeSequence(self.degrees.tolist()), seed)
        self.rng = _Stream(stream)
        self.pool = HalfEdgePool(self.degrees)
        self.sleep_list = list(range(n))
        self.sleep_pos = list(range(n))
        self.sleeping = set(range(n))
        self.retired: set[int] = set()
        self.active: list[list] = []
        self.edges: list[tuple[int, int]] = []
        self.step_count = 0
        self.contour = [0]

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def height(self) -> int:
        return len(self.active)

    @property
    def done(self) -> bool:
        return self.step_count == 2 * self.n

    def induced_degree(self, v: int) -> int:
        """Initial degree minus the occurrences of ``v`` in the pending lists."""
        return int(self.degrees[v]) - sum(pending.count(v) for _, pending in self.active)

    def induced_counts(self) -> np.ndarray:
        counts = np.zeros(int(self.degrees.max()) + 1, dtype=np.int64)
        for v in self.sleeping:
            counts[self.induced_degree(v)] += 1
        return counts

    def _remove_sleeping(self, v: int) -> None:
        i = self.sleep_pos[v]
        last = self.sleep_list[-1]
        self.sleep_list[i] = last
        self.sleep_pos[last] = i
        self.sleep_list.pop()
        self.sleeping.discard(v)

    def _wake(self, v: int) -> None:
        self._remove_sleeping(v)
        for _, pending in self.active:
            while v in pending:
                pending.remove(v)
        pool = self.pool
        partners = []
        for h in pool.half_edges(v):
            if pool.matched[h]:
                continue
            pool.remove(h)
            h2 = pool.pool[self.rng.draw(pool.size)]
            pool.remove(h2)
            pool.matched[h] = pool.matched[h2] = True
            w = int(pool.owner[h2])
            self.edges.append((v, w))
            if w != v:
                partners.append(w)
        for i in range(len(partners) - 1, 0, -1):
            j = self.rng.draw(i + 1)
            partners[i], partners[j] = partners[j], partners[i]
        self.active.append([v, partners])

    def step(self) -> int:
        """Advance one step and return which case applied (1 new component, 2 backtrack, 3 visit)."""
        if self.done:
            raise RuntimeError("exploration already finished")
        if not self.active:
            self._wake(self.sleep_list[self.rng.draw(len(self.sleep_list))])
            case = 1
        else:
            u, pending = self.active[-1]
            if not pending:
                self.active.pop()
                self.retired.add(u)
                case = 2
            else:
                self._wake(pending[0])
                case = 3
        self.step_count += 1
        self.contour.append(len(self.active))
        return case

    def run(self) -> "Exploration":
        while not self.done:
            self.step()
        return self
