"""Bifurcation scans: stationary-point counts along a coupling grid."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..model import ModelParams, coupling_matrix, gradient, hessian, laplacian
from .stationary import StationaryPointSet, build_set, find_stationary_points, newton_refine

log = logging.getLogger(__name__)

# Bisection splits intervals at this irrational fraction so that probes do not
# land exactly on rational bifurcation values, where points are degenerate.
_SPLIT = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Event:
    lo: float
    hi: float
    count_before: int
    count_after: int
    index_before: dict
    index_after: dict
    resolved: bool = True
    refined: float | None = None  # coupling of the singular point found in the bracket
    point: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def gamma(self) -> float:
        return self.refined if self.refined is not None else 0.5 * (self.lo + self.hi)


@dataclass
class BifurcationDiagram:
    n_particles: int
    gamma_grid: np.ndarray
    counts: list[int]
    index_counts: list[dict]
    degenerate: list[int]
    events: list[Event] = field(default_factory=list)
    # per grid point: (orbit representative, value, index or None)
    branches: list[list[tuple[np.ndarray, float, int | None]]] = field(default_factory=list)

    def event_locations(self) -> list[float]:
        return [e.gamma for e in self.events]


def _key(s: StationaryPointSet) -> tuple:
    return (s.count(), tuple(sorted(s.index_counts().items())))


def _enumerate(args) -> StationaryPointSet:
    n, gamma, random_factor = args
    return find_stationary_points(ModelParams(n, gamma), random_factor=random_factor)


def _probe(n: int, gamma: float, seeds: np.ndarray) -> StationaryPointSet:
    p = ModelParams(n, gamma)
    x, ok = newton_refine(p, seeds)
    return build_set(p, x[ok])


def _locate(n, a, b, sa, sb, resolution, depth=0) -> list[tuple[Event, StationaryPointSet, StationaryPointSet]]:
    ka, kb = _key(sa), _key(sb)
    if ka == kb:
        return []
    while b - a > resolution:
        mid = a + _SPLIT * (b - a)
        sm = _probe(n, mid, np.concatenate([sa.coords, sb.coords]))
        km = _key(sm)
        if km == ka:
            a, sa = mid, sm
        elif km == kb:
            b, sb = mid, sm
        else:
            if depth > 20:
                break
            return _locate(n, a, mid, sa, sm, resolution, depth + 1) + _locate(
                n, mid, b, sm, sb, resolution, depth + 1
            )
    e = Event(
        lo=a,
        hi=b,
        count_before=sa.count(),
        count_after=sb.count(),
        index_before=sa.index_counts(),
        index_after=sb.index_counts(),
        resolved=b - a <= resolution,
    )
    return [(e, sa, sb)]


SINGULAR_TOL = 1e-13
SINGULAR_MAX_ITER = 60
SINGULAR_SEEDS = 6
MERGE_TOL = 1e-8


def singular_point(n: int, x0, gamma0: float, v0) -> tuple[np.ndarray, float, np.ndarray] | None:
    """Newton on ``grad V = 0, H v = 0, v0 . v = 1`` for ``(x, v, gamma)``.

    This is the usual extended system for a fold or a symmetry-breaking
    bifurcation. Steps are least-squares solutions, so a multiple zero
    eigenvalue (one-parameter family of v) does not stall the iteration.
    Returns ``(x, gamma, v)`` or None when Newton does not converge.
    """
    x = np.asarray(x0, dtype=float).copy()
    v0 = np.asarray(v0, dtype=float) / np.linalg.norm(v0)
    v = v0.copy()
    g = float(gamma0)
    sig = coupling_matrix(n)
    for _ in range(SINGULAR_MAX_ITER):
        if g < 0:
            return None
        p = ModelParams(n, g)
        H = hessian(p, x)
        F = np.concatenate([gradient(p, x), H @ v, [v0 @ v - 1.0]])
        if np.max(np.abs(F)) < SINGULAR_TOL:
            return x, g, v / np.linalg.norm(v)
        J = np.zeros((2 * n + 1, 2 * n + 1))
        J[:n, :n] = H
        J[:n, 2 * n] = -0.5 * laplacian(x)
        J[n : 2 * n, :n] = np.diag(6.0 * x * v)
        J[n : 2 * n, n : 2 * n] = H
        J[n : 2 * n, 2 * n] = sig @ v
        J[2 * n, n : 2 * n] = v0
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x += step[:n]
        v += step[n : 2 * n]
        g += step[2 * n]
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 2:
            return None
    return None


def _critical_sign(n: int, x, gamma: float, v) -> float | None:
    """Sign of the Hessian eigenvalue along ``v`` on the branch through ``x`` at ``gamma``."""
    q, ok = newton_refine(ModelParams(n, gamma), np.atleast_2d(x))
    if not ok[0] or np.max(np.abs(q[0] - x)) > 1e-2:
        return None
    w, vec = np.linalg.eigh(hessian(ModelParams(n, gamma), q[0]))
    k = int(np.argmax(np.abs(vec.T @ v)))
    return float(np.sign(w[k]))


def is_bifurcation(n: int, x, gamma: float, v, delta: float = 1e-6) -> bool:
    """A singular point is a bifurcation when the branch ends (fold) or the
    critical eigenvalue changes sign across it. Points where an eigenvalue is
    merely tiny, without crossing zero, are rejected."""
    below = _critical_sign(n, x, gamma - delta, v)
    above = _critical_sign(n, x, gamma + delta, v)
    if below is None or above is None:
        return True
    return below != above


def _candidates(s: StationaryPointSet) -> list[tuple[float, np.ndarray, np.ndarray]]:
    out = []
    for orbit in s.orbits:
        q = s.points[orbit[0]]
        w, vec = np.linalg.eigh(hessian(s.params, q.coords))
        k = int(np.argmin(np.abs(w)))
        out.append((abs(w[k]), q.coords, vec[:, k]))
    out.sort(key=lambda t: t[0])
    return out[:SINGULAR_SEEDS]


def refine_event(n: int, e: Event, sa: StationaryPointSet, sb: StationaryPointSet, slack: float = 1e-3) -> Event:
    """Pin an event to the coupling of a singular stationary point inside its bracket."""
    best = None
    for side, s in ((e.lo, sa), (e.hi, sb)):
        for _, x, v in _candidates(s):
            sol = singular_point(n, x, side, v)
            if sol is None or not e.lo - slack <= sol[1] <= e.hi + slack:
                continue
            if not is_bifurcation(n, *sol):
                continue
            if best is None or abs(sol[1] - e.gamma) < abs(best[1] - e.gamma):
                best = sol
    if best is None:
        log.info("N=%d: no singular point found in [%.6f, %.6f]", n, e.lo, e.hi)
        return e
    return replace(e, refined=float(best[1]), point=best[0])


def _merge(events: list[Event]) -> list[Event]:
    """Join consecutive events that refined to the same coupling."""
    out: list[Event] = []
    for e in events:
        prev = out[-1] if out else None
        if prev is not None and prev.refined is not None and e.refined is not None and abs(prev.refined - e.refined) <= MERGE_TOL:
            out[-1] = replace(prev, hi=e.hi, count_after=e.count_after, index_after=e.index_after, resolved=prev.resolved and e.resolved)
        else:
            out.append(e)
    return out


def scan_bifurcations(
    gamma_min: float,
    gamma_max: float,
    n: int,
    step: float = 0.005,
    *,
    resolution: float = 1e-4,
    random_factor: int = 10,
    workers: int = 1,
    refine: bool = True,
) -> BifurcationDiagram:
    """Count stationary points along a coupling grid and localise every count change.

    Grid points sit at ``gamma_min + (k + 1/2) step`` (plus the endpoints), which
    keeps them off round bifurcation values. Each change is bisected, with Newton
    seeds from both sides, until the bracketing interval is at most
    ``resolution`` wide. Degenerate points are left out of the counts. With
    ``refine`` each event is then pinned to the coupling of a singular
    stationary point solved for inside its bracket; events pinned to the same
    coupling (a pitchfork seen twice because of the zero threshold) are merged.
    """
    if not 0 < step <= 0.005:
        raise ValueError("step must lie in (0, 0.005]")
    if gamma_max <= gamma_min or gamma_min < 0:
        raise ValueError("need 0 <= gamma_min < gamma_max")
    k = np.arange(math.ceil((gamma_max - gamma_min) / step))
    grid = np.unique(np.concatenate([[gamma_min], gamma_min + (k + 0.5) * step, [gamma_max]]))
    grid = grid[grid <= gamma_max]
    jobs = [(n, float(g), random_factor) for g in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            sets = list(ex.map(_enumerate, jobs))
    else:
        sets = [_enumerate(j) for j in jobs]
    events: list[Event] = []
    for i in range(len(grid) - 1):
        for e, sa, sb in _locate(n, float(grid[i]), float(grid[i + 1]), sets[i], sets[i + 1], resolution):
            events.append(refine_event(n, e, sa, sb) if refine else e)
    events = _merge(events)
    for e in events:
        log.info("N=%d: count %d -> %d near gamma=%.6f", n, e.count_before, e.count_after, e.gamma)
    branches = []
    for s in sets:
        reps = []
        for orbit in s.orbits:
            q = s.points[orbit[0]]
            reps.append((q.coords, q.value, q.index))
        branches.append(reps)
    return BifurcationDiagram(
        n_particles=n,
        gamma_grid=grid,
        counts=[s.count() for s in sets],
        index_counts=[s.index_counts() for s in sets],
        degenerate=[s.n_degenerate() for s in sets],
        events=events,
        branches=branches,
    )
