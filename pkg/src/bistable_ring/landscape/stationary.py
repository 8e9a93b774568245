"""Enumeration and classification of stationary points of the ring potential."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..model import (
    ModelParams,
    ZERO_EIG_RTOL,
    as_configuration,
    gradient,
    hessian,
    index_type,
    potential,
)
from ..symmetry import group_elements, apply_symmetry

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 200
DEDUP_TOL = 1e-8
# every stationary point lies in [-1, 1]^N; iterates wandering past this box are abandoned
ESCAPE_BOX = 2.0
CHUNK = 20000


class NotStationaryError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryPoint:
    coords: np.ndarray
    residual: float
    value: float
    spectrum: np.ndarray
    index_type: tuple[int, int, int]
    orbit_id: int = -1

    @property
    def index(self) -> int | None:
        """Morse index, or None when the Hessian is degenerate."""
        n_neg, n_zero, _ = self.index_type
        return None if n_zero else n_neg

    @property
    def degenerate(self) -> bool:
        return self.index_type[1] > 0


@dataclass
class StationaryPointSet:
    params: ModelParams
    points: list[StationaryPoint]
    orbits: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def coords(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, self.params.n_particles))
        return np.array([pt.coords for pt in self.points])

    def count(self, index: int | None = None, include_degenerate: bool = False) -> int:
        pts = self.points if include_degenerate else [q for q in self.points if not q.degenerate]
        if index is None:
            return len(pts)
        return sum(1 for q in pts if q.index_type[0] == index)

    def index_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for q in self.points:
            if not q.degenerate:
                out[q.index_type[0]] = out.get(q.index_type[0], 0) + 1
        return dict(sorted(out.items()))

    def n_degenerate(self) -> int:
        return sum(q.degenerate for q in self.points)

    def minima(self) -> list[int]:
        return [i for i, q in enumerate(self.points) if q.index_type == (0, 0, self.params.n)]

    def saddles(self, k: int = 1) -> list[int]:
        n = self.params.n
        return [i for i, q in enumerate(self.points) if q.index_type == (k, 0, n - k)]

    def find(self, x, tol: float = 1e-6) -> int | None:
        """Index of the member within ``tol`` (max norm) of ``x``, if any."""
        c = self.coords
        if not len(c):
            return None
        d = np.max(np.abs(c - np.asarray(x, dtype=float)), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def is_closed(self, tol: float = 1e-7) -> bool:
        c = self.coords
        if not len(c):
            return True
        tree = cKDTree(c)
        for g in group_elements(self.params.n):
            d, _ = tree.query(apply_symmetry(g, c), p=np.inf)
            if np.any(d > tol):
                return False
        return True


def newton_refine(
    p: ModelParams,
    seeds,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton on ``grad V = 0`` for a stack of seeds.

    Each step is the Newton direction (pseudo-inverse when the Hessian is
    singular) scaled back until ``|grad V|^2`` decreases. Returns the final
    iterates and a mask of those with ``|grad V|_inf <= tol``.
    """
    x = np.array(as_configuration(p, seeds), dtype=float, ndmin=2)
    if len(x) > CHUNK:
        parts = [newton_refine(p, x[i : i + CHUNK], tol, max_iter) for i in range(0, len(x), CHUNK)]
        return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])
    active = np.ones(len(x), dtype=bool)
    done = np.zeros(len(x), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        xa = x[idx]
        g = gradient(p, xa)
        res = np.max(np.abs(g), axis=1)
        conv = res <= tol
        done[idx[conv]] = True
        active[idx[conv]] = False
        keep = ~conv
        idx, xa, g = idx[keep], xa[keep], g[keep]
        if not len(idx):
            break
        step = _newton_direction(hessian(p, xa), g)
        merit = np.sum(g * g, axis=1)
        alpha = np.ones(len(idx))
        trial = xa - step
        todo = np.ones(len(idx), dtype=bool)
        for _ in range(30):
            gt = gradient(p, trial[todo])
            better = np.sum(gt * gt, axis=1) < merit[todo]
            sub = np.flatnonzero(todo)
            todo[sub[better]] = False
            if not todo.any():
                break
            alpha[todo] *= 0.5
            trial[todo] = xa[todo] - alpha[todo, None] * step[todo]
        # rows that never improved take the smallest step anyway; they stall and get dropped
        x[idx] = trial
        escaped = np.max(np.abs(trial), axis=1) > ESCAPE_BOX
        active[idx[escaped]] = False
    idx = np.flatnonzero(active)
    if len(idx):
        res = np.max(np.abs(gradient(p, x[idx])), axis=1)
        done[idx[res <= tol]] = True
    return x, done


def _newton_direction(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``H^+ g`` through the symmetric eigendecomposition.

    Eigenvalues below ``1e-12`` times the spectral radius are dropped, which is
    the pseudo-inverse fallback for singular Hessians.
    """
    lam, vec = np.linalg.eigh(h)
    cut = 1e-12 * np.max(np.abs(lam), axis=1, keepdims=True)
    inv = np.where(np.abs(lam) > cut, 1.0 / np.where(lam == 0, 1.0, lam), 0.0)
    coef = np.einsum("mji,mj->mi", vec, g) * inv
    return np.einsum("mij,mj->mi", vec, coef)


def deduplicate(points, tol: float = DEDUP_TOL) -> np.ndarray:
    """Merge points closer than ``tol`` in max norm; one representative per cluster.

    Output is sorted lexicographically, so it does not depend on input order
    beyond the choice of representative within a cluster.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 0)
    # Collapse near-identical rows first: many seeds land on the same point and
    # would otherwise generate a quadratic number of close pairs.
    pts = pts[np.lexsort(pts.T[::-1])]
    _, first = np.unique(np.round(pts / tol), axis=0, return_index=True)
    pts = pts[np.sort(first)]
    pairs = cKDTree(pts).query_pairs(tol, p=np.inf, output_type="ndarray")
    m = len(pts)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, labels = connected_components(adj, directed=False)
    # rows are in lexicographic order, so the first member of a cluster is its smallest
    _, first = np.unique(labels, return_index=True)
    return pts[np.sort(first)]


def orbit_completion(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return pts
    n = pts.shape[-1]
    return np.concatenate([apply_symmetry(g, pts) for g in group_elements(n)])


def classify(p: ModelParams, pt, tol: float = 1e-8, rtol: float = ZERO_EIG_RTOL) -> StationaryPoint:
    """Spectrum and type ``(n-, n0, n+)`` of a stationary point."""
    x = as_configuration(p, pt)
    res = float(np.max(np.abs(gradient(p, x))))
    if res > tol:
        raise NotStationaryError(f"|grad V| = {res:.3g} exceeds {tol:g}")
    spec = np.linalg.eigvalsh(hessian(p, x))
    return StationaryPoint(
        coords=np.array(x),
        residual=res,
        value=float(potential(p, x)),
        spectrum=spec,
        index_type=index_type(spec, rtol),
    )


def assign_orbits(p: ModelParams, coords: np.ndarray, tol: float = 1e-7) -> tuple[np.ndarray, list[list[int]]]:
    m = len(coords)
    ids = -np.ones(m, dtype=int)
    orbits: list[list[int]] = []
    if not m:
        return ids, orbits
    tree = cKDTree(coords)
    for i in range(m):
        if ids[i] >= 0:
            continue
        images = np.array([apply_symmetry(g, coords[i]) for g in group_elements(p.n)])
        d, j = tree.query(images, p=np.inf)
        members = sorted(set(int(k) for k in j[d <= tol]) | {i})
        ids[members] = len(orbits)
        orbits.append(members)
    return ids, orbits


def build_set(p: ModelParams, coords, newton_tol: float = 1e-8, dedup_tol: float = DEDUP_TOL) -> StationaryPointSet:
    """Deduplicate, close under the symmetry group, classify."""
    coords = deduplicate(coords, dedup_tol) if len(coords) else np.empty((0, p.n))
    if len(coords):
        images = orbit_completion(coords)
        # images of exact solutions are exact; polish to remove drift from rounding
        images, ok = newton_refine(p, images, max_iter=5)
        coords = deduplicate(images[ok], dedup_tol)
    pts = [classify(p, c, tol=newton_tol) for c in coords]
    ids, orbits = assign_orbits(p, coords)
    pts = [
        StationaryPoint(q.coords, q.residual, q.value, q.spectrum, q.index_type, int(i))
        for q, i in zip(pts, ids)
    ]
    return StationaryPointSet(p, pts, orbits)


def grid_seeds(n: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))


def find_stationary_points(
    p: ModelParams,
    strategy: str = "seed_grid",
    newton_tol: float = 1e-8,
    *,
    random_factor: int = 10,
    seed: int = 0,
    extra_seeds=None,
    gamma_step: float = 0.01,
) -> StationaryPointSet:
    """All stationary points of the potential found from a multistart strategy.

    ``seed_grid`` starts Newton from the 3^N points of ``{-1, 0, 1}^N``, from
    ``random_factor * 3^N`` uniform perturbations of them, and from the
    leading-order desynchronised saddles when the coupling is just below the
    synchronisation threshold. ``continuation`` follows the 3^N points of the
    uncoupled system along a coupling ladder instead.
    """
    if not 0 < newton_tol <= 1e-8:
        raise ValueError("newton_tol must lie in (0, 1e-8]")
    n = p.n
    if strategy == "seed_grid":
        if n > 12:
            raise ValueError("seed_grid enumeration is limited to N <= 12")
        base = grid_seeds(n)
        rng = np.random.default_rng(seed)
        reps = [base]
        if random_factor:
            jitter = rng.uniform(-0.5, 0.5, size=(random_factor * len(base), n))
            reps.append(np.tile(base, (random_factor, 1)) + jitter)
        seeds = np.concatenate(reps + _desync_seeds(p))
    elif strategy == "continuation":
        seeds = _continuation_seeds(p, gamma_step, newton_tol)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if extra_seeds is not None and len(extra_seeds):
        seeds = np.concatenate([seeds, np.asarray(extra_seeds, dtype=float).reshape(-1, n)])
    x, ok = newton_refine(p, seeds, tol=min(NEWTON_TOL, newton_tol))
    if (~ok).any():
        log.debug("N=%d gamma=%g: %d of %d seeds did not converge", n, p.gamma, int((~ok).sum()), len(ok))
    return build_set(p, x[ok], newton_tol)


def _desync_seeds(p: ModelParams) -> list[np.ndarray]:
    from .desync import desync_seed_points

    return desync_seed_points(p)


def _continuation_seeds(p: ModelParams, gamma_step: float, newton_tol: float) -> np.ndarray:
    if not 0 < gamma_step <= 0.01:
        raise ValueError("continuation step must lie in (0, 0.01]")
    n = p.n
    pts = grid_seeds(n)
    steps = max(1, int(np.ceil(p.gamma / gamma_step)))
    for g in np.linspace(0.0, p.gamma, steps + 1)[1:]:
        q = p.with_coupling(float(g))
        seeds = np.concatenate([pts] + _desync_seeds(q))
        x, ok = newton_refine(q, seeds, tol=min(NEWTON_TOL, newton_tol))
        pts = deduplicate(orbit_completion(deduplicate(x[ok])))
    return pts
