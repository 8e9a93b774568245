"""Saddles born at the synchronisation threshold, and the weak-coupling regime."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import ModelParams, gamma_1, interaction_w, local_potential
from ..symmetry import SymmetryElement, orbit_of
from .graph import barrier_height, connect_saddles, minimax_saddle, synchronised_minima
from .stationary import find_stationary_points

#: Coupling window, as a fraction of the threshold, where the leading-order
#: predictions are trusted.
DESYNC_WINDOW = (0.9, 1.0)
# wider window used only to add Newton seeds
SEED_WINDOW = (0.6, 1.0)


class OutsideWindowError(ValueError):
    pass


@dataclass(frozen=True)
class DesyncPrediction:
    params: ModelParams
    detuning: float  # 1 - gamma / gamma_1
    amplitude: float
    a: np.ndarray  # predicted 1-saddle
    b: np.ndarray  # predicted 2-saddle (odd N: the second 1-saddle family)
    value_per_site: float  # predicted V(A) / N
    templates: dict[str, list[SymmetryElement]] = field(default_factory=dict)


def _profiles(n: int, detuning: float) -> tuple[float, np.ndarray, np.ndarray]:
    j = np.arange(1, n + 1)  # profiles are written for sites numbered from 1
    if n == 4:
        # gamma_1(4) = 1, so the detuning is 1 - gamma and the branch is exact
        amp = math.sqrt(detuning)
        a = amp * np.array([1.0, 1.0, -1.0, -1.0])
        b = amp * np.array([1.0, 0.0, -1.0, 0.0])
        return amp, a, b
    amp = 2.0 / math.sqrt(3.0) * math.sqrt(detuning)
    if n % 2 == 0:
        a = amp * np.sin(2 * np.pi * (j - 0.5) / n)
        b = amp * np.sin(2 * np.pi * j / n)
    else:
        a = amp * np.sin(2 * np.pi * j / n)
        b = amp * np.cos(2 * np.pi * j / n)
    return amp, a, b


def isotropy_templates(n: int) -> dict[str, list[SymmetryElement]]:
    """Generators of the isotropy groups of the two bifurcating families.

    Even N: A is fixed by ``CS`` and ``R^{N/2} S``; B by ``CRS`` and ``R^{N/2+1} S``.
    Odd N: A is fixed by ``CRS``, B by ``RS``.
    """
    S = SymmetryElement(n, reflected=True)
    C = SymmetryElement(n, negated=True)

    def r(k: int) -> SymmetryElement:
        return SymmetryElement(n, rotation=k)

    if n % 2 == 0:
        return {"A": [C * S, r(n // 2) * S], "B": [C * r(1) * S, r(n // 2 + 1) * S]}
    return {"A": [C * r(1) * S], "B": [r(1) * S]}


def desync_predictions(p: ModelParams, window: tuple[float, float] = DESYNC_WINDOW) -> DesyncPrediction:
    """Leading-order positions and potential of the saddles near the threshold."""
    n = p.n
    if n < 3:
        raise ValueError("desynchronised saddles need N >= 3")
    g1 = gamma_1(n)
    ratio = p.gamma / g1
    if not window[0] <= ratio < window[1]:
        raise OutsideWindowError(f"gamma/gamma_1 = {ratio:.4g} outside [{window[0]}, {window[1]})")
    detuning = 1.0 - ratio
    amp, a, b = _profiles(n, detuning)
    if n == 4:
        value = -0.25 * (1 - p.gamma) ** 2
    else:
        value = -detuning**2 / 6.0
    return DesyncPrediction(p, detuning, amp, a, b, value, isotropy_templates(n))


def desync_seed_points(p: ModelParams) -> list[np.ndarray]:
    """Predicted saddles near the threshold, as extra Newton seeds (possibly empty)."""
    if p.n < 3 or p.gamma <= 0:
        return []
    try:
        pred = desync_predictions(p, SEED_WINDOW)
    except OutsideWindowError:
        return []
    seeds = []
    for x in (pred.a, pred.b):
        seeds.append(orbit_of(x).points)
    return seeds


# --- weak coupling -----------------------------------------------------------


@dataclass
class WeakCouplingReport:
    params: ModelParams
    n_points: int
    expected_points: int
    max_value_error: float  # max |V - V_0 - gamma/4 sum (ds)^2| over all points
    ambiguous: int  # points whose nearest uncoupled configuration is unclear
    barrier: float  # minimax V(saddle) - V(I-)
    first_saddle_barrier: float  # V(one flipped site at 0) - V(I-)
    droplet_barrier: float  # highest saddle along the droplet path, minus V(I-)
    droplet_optimal: bool

    @property
    def count_ok(self) -> bool:
        return self.n_points == self.expected_points


def uncoupled_value(s, gamma: float) -> float:
    """First-order potential of the coupled point continuing the uncoupled state ``s``."""
    s = np.asarray(s, dtype=float)
    return float(local_potential(s).sum() + 0.5 * gamma * interaction_w(s))


def droplet_path(n: int) -> list[np.ndarray]:
    """Uncoupled states visited when a block of + grows one site at a time from I-.

    Alternates minima and the 1-saddles (one site at 0) between them.
    """
    path = [-np.ones(n)]
    for k in range(n):
        s = -np.ones(n)
        s[:k] = 1.0
        s[k] = 0.0
        path.append(s)
        s = s.copy()
        s[k] = 1.0
        path.append(s)
    return path


def weak_coupling_audit(p: ModelParams, match_tol: float = 0.25) -> WeakCouplingReport:
    if p.gamma > 0.2:
        raise ValueError("weak-coupling audit needs gamma <= 0.2")
    if p.n > 8:
        raise ValueError("weak-coupling audit is limited to N <= 8")
    s = find_stationary_points(p)
    coords = s.coords
    nearest = np.clip(np.rint(coords), -1, 1)
    ambiguous = int(np.sum(np.max(np.abs(coords - nearest), axis=1) > match_tol))
    predicted = np.array([uncoupled_value(q, p.gamma) for q in nearest])
    values = np.array([q.value for q in s.points])
    max_err = float(np.max(np.abs(values - predicted))) if len(values) else math.nan

    graph = connect_saddles(p, s)
    lo, hi = synchronised_minima(s)
    level, _ = minimax_saddle(graph, lo, hi)
    v_lo = s.points[lo].value

    path = droplet_path(p.n)
    saddle_levels = []
    for st in path[1::2]:
        i = s.find(st, tol=match_tol)
        saddle_levels.append(np.inf if i is None else s.points[i].value)
    droplet_level = max(saddle_levels)
    first = s.find(path[1], tol=match_tol)
    return WeakCouplingReport(
        params=p,
        n_points=len(s),
        expected_points=3**p.n,
        max_value_error=max_err,
        ambiguous=ambiguous,
        barrier=level - v_lo,
        first_saddle_barrier=(s.points[first].value - v_lo) if first is not None else math.nan,
        droplet_barrier=droplet_level - v_lo,
        droplet_optimal=bool(abs(droplet_level - level) <= 1e-10),
    )


def barrier_at_zero(n: int, gammas=(0.01, 0.02, 0.03)) -> float:
    """Normalised barrier extrapolated to zero coupling by a quadratic fit."""
    hs = []
    for g in gammas:
        q = ModelParams(n, g)
        hs.append(barrier_height(q, connect_saddles(q, find_stationary_points(q))))
    coef = np.polyfit(np.asarray(gammas), np.asarray(hs), len(gammas) - 1)
    return float(np.polyval(coef, 0.0))
