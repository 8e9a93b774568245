"""Transition graph: minima joined through the 1-saddles between them."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..model import ModelParams, gradient, hessian, potential
from .stationary import StationaryPointSet

log = logging.getLogger(__name__)

DESCENT_EPS = 1e-4
ARRIVAL_TOL = 1e-6
MIN_STEP = 1e-5
MAX_STEP = 1e-2
MAX_DESCENT_STEPS = 400_000


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    source: int  # vertex (index into the stationary point set)
    target: int
    saddle: int
    barrier: float  # V(saddle) - V(source)
    resolved: bool = True


@dataclass
class TransitionGraph:
    points: StationaryPointSet
    vertices: list[int]
    edges: list[Edge] = field(default_factory=list)
    unresolved: list[int] = field(default_factory=list)  # saddles whose descent failed

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def value(self, i: int) -> float:
        return self.points.points[i].value

    def self_loops(self) -> list[Edge]:
        return [e for e in self.edges if e.source == e.target]

    def degree(self, v: int) -> int:
        return sum((e.source == v) + (e.target == v) for e in self.edges)

    def saddles_through(self, x, tol: float = 1e-6) -> list[Edge]:
        """Edges whose saddle is within ``tol`` of ``x``."""
        c = self.points.coords
        return [e for e in self.edges if np.max(np.abs(c[e.saddle] - x)) <= tol]


def descend(p: ModelParams, starts, targets, *, max_steps: int = MAX_DESCENT_STEPS):
    """Adaptive explicit gradient descent until each start is within ``ARRIVAL_TOL`` of a target.

    The step size stays in ``[MIN_STEP, MAX_STEP]``; a step is accepted only if
    it decreases V (steps at ``MIN_STEP`` are always taken). Returns the
    index of the target reached (``-1`` if the budget ran out) and the number
    of steps used by each start.
    """
    x = np.array(starts, dtype=float, ndmin=2)
    targets = np.asarray(targets, dtype=float)
    m = len(x)
    h = np.full(m, MAX_STEP)
    hit = -np.ones(m, dtype=int)
    steps = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    v = potential(p, x)
    for it in range(max_steps):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        d = np.max(np.abs(x[idx, None, :] - targets[None, :, :]), axis=2)
        near = np.min(d, axis=1) <= ARRIVAL_TOL
        if near.any():
            hit[idx[near]] = np.argmin(d[near], axis=1)
            active[idx[near]] = False
            idx = idx[~near]
            if not len(idx):
                break
        xa = x[idx]
        trial = xa - h[idx, None] * gradient(p, xa)
        vt = potential(p, trial)
        accept = (vt < v[idx]) | (h[idx] <= MIN_STEP)
        acc = idx[accept]
        x[acc] = trial[accept]
        v[acc] = vt[accept]
        steps[acc] += 1
        h[acc] = np.minimum(h[acc] * 1.5, MAX_STEP)
        rej = idx[~accept]
        h[rej] = np.maximum(h[rej] * 0.5, MIN_STEP)
    return hit, steps


def connect_saddles(p: ModelParams, s: StationaryPointSet) -> TransitionGraph:
    """Follow both branches of every 1-saddle's unstable manifold down to minima."""
    minima = s.minima()
    saddles = s.saddles(1)
    graph = TransitionGraph(points=s, vertices=minima)
    if not saddles or not minima:
        return graph
    coords = s.coords
    starts = []
    for i in saddles:
        lam, vec = np.linalg.eigh(hessian(p, coords[i]))
        u = vec[:, 0]  # the single negative direction
        starts.append(coords[i] + DESCENT_EPS * u)
        starts.append(coords[i] - DESCENT_EPS * u)
    hit, _ = descend(p, np.array(starts), coords[minima])
    for k, i in enumerate(saddles):
        a, b = hit[2 * k], hit[2 * k + 1]
        if a < 0 or b < 0:
            log.warning("descent from saddle %d did not reach a minimum", i)
            graph.unresolved.append(i)
            continue
        src, dst = minima[a], minima[b]
        if s.points[src].value > s.points[dst].value or (
            s.points[src].value == s.points[dst].value and src > dst
        ):
            src, dst = dst, src
        graph.edges.append(Edge(src, dst, i, s.points[i].value - s.points[src].value))
        if src == dst:
            log.info("saddle %d descends to the same minimum on both sides", i)
    return graph


def _connected(n_vertices: int, pairs: list[tuple[int, int]], a: int, b: int) -> bool:
    if a == b:
        return True
    if not pairs:
        return False
    rows, cols = zip(*pairs)
    adj = coo_matrix((np.ones(len(pairs)), (rows, cols)), shape=(n_vertices, n_vertices))
    _, labels = connected_components(adj, directed=False)
    return bool(labels[a] == labels[b])


def minimax_saddle(graph: TransitionGraph, start: int, end: int) -> tuple[float, list[Edge]]:
    """Lowest level L such that ``start`` and ``end`` connect through saddles with V <= L.

    Found by bisection over the sorted saddle values, each probe being a
    connectivity test. Returns L and the edges at that level.
    """
    pos = {v: k for k, v in enumerate(graph.vertices)}
    if start not in pos or end not in pos:
        raise DisconnectedGraphError("endpoints are not vertices of the graph")
    edges = [e for e in graph.edges if e.source != e.target]
    levels = np.unique([graph.value(e.saddle) for e in edges])

    def ok(level: float) -> bool:
        pairs = [(pos[e.source], pos[e.target]) for e in edges if graph.value(e.saddle) <= level]
        return _connected(len(pos), pairs, pos[start], pos[end])

    if not len(levels) or not ok(levels[-1]):
        raise DisconnectedGraphError("no path joins the two minima")
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    level = float(levels[lo])
    return level, [e for e in edges if abs(graph.value(e.saddle) - level) <= 1e-12 * max(1.0, abs(level))]


def synchronised_minima(s: StationaryPointSet) -> tuple[int, int]:
    n = s.params.n
    lo, hi = s.find(-np.ones(n)), s.find(np.ones(n))
    if lo is None or hi is None:
        raise DisconnectedGraphError("the synchronised minima are missing from the point set")
    return lo, hi


def barrier_height(p: ModelParams, graph: TransitionGraph, normalised: bool = True) -> float:
    """Minimax barrier from I- to I+; divided by N when ``normalised``."""
    lo, hi = synchronised_minima(graph.points)
    level, _ = minimax_saddle(graph, lo, hi)
    raw = level - graph.value(lo)
    return raw / p.n if normalised else raw
