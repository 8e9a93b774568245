"""Stationary points as periodic orbits of a planar map.

The stationarity condition ``f(x_j) + gamma/2 (x_{j+1} - 2 x_j + x_{j-1}) = 0``
is the recurrence ``(x_{j+1}, x_j) = H(x_j, x_{j-1})`` with::

    H(x, y) = (2x - (2/gamma) f(x) - y, x)

so period-N points of H are the stationary configurations of an N-ring. For
weak coupling H carries a horseshoe over three vertical strips around
``x = -1, 0, 1``; every word over ``{-, 0, +}`` labels one periodic point.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .model import ModelParams, local_drift
from .landscape.stationary import newton_refine

log = logging.getLogger(__name__)

SYMBOLS = "-0+"
SYMBOL_VALUE = {"-": -1.0, "0": 0.0, "+": 1.0}
DISTINCT_TOL = 1e-6
MAX_PERIOD = 10


class BracketError(ValueError):
    """The inverse branch of g is not defined at the requested value."""


@dataclass(frozen=True)
class HenonLikeMap:
    coupling: float

    def __post_init__(self):
        if not self.coupling > 0:
            raise ValueError("the map needs gamma > 0")

    def __call__(self, pt) -> np.ndarray:
        return map_apply(self, pt)

    def inverse(self, pt) -> np.ndarray:
        return map_inverse(self, pt)


def map_apply(m: HenonLikeMap, pt) -> np.ndarray:
    pt = np.asarray(pt, dtype=float)
    x, y = pt[..., 0], pt[..., 1]
    return np.stack([2 * x - (2 / m.coupling) * local_drift(x) - y, x], axis=-1)


def _swap(pt) -> np.ndarray:
    return np.asarray(pt, dtype=float)[..., ::-1]


def map_inverse(m: HenonLikeMap, pt) -> np.ndarray:
    """``H^{-1} = S H S`` with ``S(x, y) = (y, x)``."""
    return _swap(map_apply(m, _swap(pt)))


def strip_g(x, gamma: float):
    return 2 * x - 2 / gamma * local_drift(x) + 1


def z0(gamma: float) -> float:
    return math.sqrt((1 - gamma) / 3)


def g_minus_inverse(value: float, gamma: float) -> float:
    """Inverse of g on its increasing branch ``[-1, -z0]``."""
    lo, hi = -1.0, -z0(gamma)
    glo, ghi = strip_g(lo, gamma), strip_g(hi, gamma)
    if not glo <= value <= ghi:
        raise BracketError(f"{value:.6g} outside g([-1, -z0]) = [{glo:.6g}, {ghi:.6g}]")
    if value == glo:
        return lo
    if value == ghi:
        return hi
    return brentq(lambda x: strip_g(x, gamma) - value, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def g_plus_inverse(value: float, gamma: float) -> float:
    """Inverse of g on its increasing branch ``[z0, 1]``.

    Since ``g(-x) = 2 - g(x)`` this equals ``-g_minus_inverse(2 - value)``.
    """
    return -g_minus_inverse(2 - value, gamma)


def strip_condition(gamma: float, variant: str = "basic") -> bool:
    """Sufficient condition for the three-strip horseshoe.

    ``basic``: ``g(-z0) >= 3``. ``improved``: the lower end ``g(-z0) - 2`` of
    the right edge of the widened strip around -1 lies above the point where
    the upper band ends on that edge, ``g^{-1}(2 - z0)`` taken on the
    increasing branch ``[z0, 1]``.
    """
    if not 0 < gamma < 1:
        raise ValueError("strip_condition needs 0 < gamma < 1")
    top = strip_g(-z0(gamma), gamma)
    if variant == "basic":
        return bool(top >= 3)
    if variant == "improved":
        return bool(top - 2 >= g_plus_inverse(2 - z0(gamma), gamma))
    raise ValueError(f"unknown variant {variant!r}")


def improved_threshold(lo: float = 0.25, hi: float = 0.27, tol: float = 1e-10) -> float:
    """Largest coupling satisfying the improved strip condition, by bisection."""
    if not strip_condition(lo, "improved"):
        raise ValueError("improved condition fails at the lower end")
    if strip_condition(hi, "improved"):
        raise ValueError("improved condition still holds at the upper end")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            ok = strip_condition(mid, "improved")
        except BracketError:
            ok = False
        if ok:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def words(n: int) -> list[str]:
    return ["".join(w) for w in itertools.product(SYMBOLS, repeat=n)]


def word_seed(word: str) -> np.ndarray:
    return np.array([SYMBOL_VALUE[s] for s in word])


@dataclass
class PeriodicPoints:
    gamma: float
    n: int
    words: list[str]
    points: np.ndarray  # (len(words), n); NaN rows for failures
    failed: list[str]
    collisions: list[tuple[str, str]]

    @property
    def n_distinct(self) -> int:
        ok = ~np.isnan(self.points).any(axis=1)
        return len(_distinct_rows(self.points[ok]))

    @property
    def complete(self) -> bool:
        return not self.failed and not self.collisions


def _distinct_rows(x: np.ndarray, tol: float = DISTINCT_TOL) -> list[int]:
    keep: list[int] = []
    for i in range(len(x)):
        if not any(np.max(np.abs(x[i] - x[j])) <= tol for j in keep):
            keep.append(i)
    return keep


def _collisions(ws: list[str], pts: np.ndarray, tol: float = DISTINCT_TOL) -> list[tuple[str, str]]:
    ok = np.flatnonzero(~np.isnan(pts).any(axis=1))
    if len(ok) < 2:
        return []
    pairs = cKDTree(pts[ok]).query_pairs(tol, p=np.inf)
    return sorted((ws[ok[a]], ws[ok[b]]) for a, b in pairs)


def _solve(gamma: float, n: int, seeds: np.ndarray) -> np.ndarray:
    p = ModelParams(n, gamma)
    x, ok = newton_refine(p, seeds, tol=1e-12)
    x[~ok] = np.nan
    return x


def periodic_points(gamma: float, n: int, *, check_strips: bool = True) -> PeriodicPoints:
    """One period-n point per symbol word, by Newton on the stationarity system.

    Each word seeds Newton at its strip centres ``{-1, 0, 1}``. Words whose
    Newton run fails or lands on another word's point are reported; they
    are the pruned words.
    """
    if n < 1 or n > MAX_PERIOD:
        raise ValueError(f"period must lie in [1, {MAX_PERIOD}]")
    if check_strips and not strip_condition(gamma, "improved"):
        raise ValueError(f"improved strip condition fails at gamma={gamma}")
    ws = words(n)
    if n == 1:
        # a single site has no neighbours to couple to
        pts = np.array([[SYMBOL_VALUE[w]] for w in ws])
        return PeriodicPoints(gamma, n, ws, pts, [], [])
    pts = _solve(gamma, n, np.array([word_seed(w) for w in ws]))
    failed = [w for w, row in zip(ws, pts) if np.isnan(row).any()]
    return PeriodicPoints(gamma, n, ws, pts, failed, _collisions(ws, pts))


@dataclass
class PruningReport:
    n: int
    first_loss: float | None  # coupling at which the first word is lost
    lost_words: list[str]
    bracket: tuple[float, float] | None


def pruning_probe(gamma_min: float, gamma_max: float, n: int, step: float = 2e-3, resolution: float = 1e-5) -> PruningReport:
    """Follow every word's point up the coupling axis and report the first loss.

    Points are continued from the previous coupling value; a word is lost when
    its Newton run fails or converges onto another word's point. The first
    loss is bracketed by bisection to ``resolution``.
    """
    if n < 2 or n > 8:
        raise ValueError("pruning_probe needs 2 <= n <= 8")
    ws = words(n)
    g0 = max(gamma_min, 1e-3)
    prev = _solve(g0, n, np.array([word_seed(w) for w in ws]))
    if np.isnan(prev).any() or _collisions(ws, prev):
        raise ValueError(f"words already pruned at gamma={g0}")

    def lost(g: float, start: np.ndarray) -> tuple[list[str], np.ndarray]:
        cur = _solve(g, n, start)
        bad = {w for w, row in zip(ws, cur) if np.isnan(row).any()}
        for a, b in _collisions(ws, cur):
            bad |= {a, b}
        return sorted(bad), cur

    g = g0
    while g < gamma_max:
        g_next = min(g + step, gamma_max)
        bad, cur = lost(g_next, prev)
        if bad:
            lo, hi, good = g, g_next, prev
            while hi - lo > resolution:
                mid = 0.5 * (lo + hi)
                bad_mid, cur_mid = lost(mid, good)
                if bad_mid:
                    hi, bad = mid, bad_mid
                else:
                    lo, good = mid, cur_mid
            return PruningReport(n, 0.5 * (lo + hi), bad, (lo, hi))
        prev, g = cur, g_next
    return PruningReport(n, None, [], None)
