"""Closed-form stationary points for rings of two, three and four particles.

These are independent of the Newton enumeration and serve as its oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..model import ModelParams, hessian, index_type, potential

ROOT_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class OraclePoint:
    branch: str
    coords: np.ndarray
    value: float
    index: int | None


def _classified(p: ModelParams, branch: str, x) -> OraclePoint:
    x = np.asarray(x, dtype=float)
    n_neg, n_zero, _ = index_type(np.linalg.eigvalsh(hessian(p, x)))
    return OraclePoint(branch, x, float(potential(p, x)), None if n_zero else n_neg)


def _unique(points: list[OraclePoint], tol: float = 1e-9) -> list[OraclePoint]:
    out: list[OraclePoint] = []
    for q in points:
        if not any(np.max(np.abs(q.coords - r.coords)) <= tol for r in out):
            out.append(q)
    return out


def _rotations(x) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    return [np.roll(x, -r) for r in range(len(x))]


# --- two particles ---------------------------------------------------------


def n2_oracle(gamma: float) -> list[OraclePoint]:
    """Stationary points for N = 2 from the mode equations.

    With ``y0 = (x0 + x1)/2``, ``y1 = (x0 - x1)/2`` and ``lambda1 = 1 - 2 gamma``:
    O, the synchronised pair, ``A`` with ``y1 = +-sqrt(lambda1)`` when lambda1 > 0,
    and ``Aa`` with ``8 y0^2 = 3 lambda1 - 1``, ``8 y1^2 = 3 - lambda1`` when
    lambda1 > 1/3.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    p = ModelParams(2, gamma)
    lam = 1.0 - 2.0 * gamma
    pts = [_classified(p, "O", [0.0, 0.0])]
    pts += [_classified(p, "I", [s, s]) for s in (-1.0, 1.0)]
    if lam > 0:
        a = math.sqrt(lam)
        pts += [_classified(p, "A", [s * a, -s * a]) for s in (1.0, -1.0)]
    if lam > 1.0 / 3.0:
        y0, y1 = math.sqrt((3 * lam - 1) / 8), math.sqrt((3 - lam) / 8)
        for s0 in (1.0, -1.0):
            for s1 in (1.0, -1.0):
                pts.append(_classified(p, "Aa", [s0 * y0 + s1 * y1, s0 * y0 - s1 * y1]))
    return pts


def n2_values(gamma: float) -> dict[str, float]:
    lam = 1.0 - 2.0 * gamma
    return {"A": -0.5 * lam**2, "Aa": (lam**2 - 6 * lam + 1) / 16}


# --- three particles -------------------------------------------------------


def n3_lambda1(gamma: float) -> float:
    return 1.0 - 1.5 * gamma


def n3_cubic(gamma: float) -> tuple[float, float]:
    """Coefficients ``(lam, mu)`` of ``z^3 - lam z + mu = 0``."""
    l1 = n3_lambda1(gamma)
    return l1 / 48.0, (1 - 3 * l1 + 6 * l1**2 - 2 * l1**3) / 1728.0


def n3_critical_coupling() -> float:
    """Coupling where the symmetric saddle-node pairs collide.

    Root in [0, 1] of ``4 l^4 - 16 l^3 + 12 l^2 - 4 l + 1`` mapped from
    ``lambda1 = l`` to ``gamma = 2 (1 - l) / 3``.
    """
    g = np.polynomial.Polynomial([1.0, -4.0, 12.0, -16.0, 4.0])
    root = brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return 2.0 * (1.0 - root) / 3.0


@dataclass(frozen=True)
class N3Solution:
    gamma: float
    n_cubic_roots: int
    critical_coupling: float
    points: list[OraclePoint]
    value_a: float  # potential on the 1-saddle family, -lambda1^2 / 2


def n3_oracle(gamma: float) -> N3Solution:
    """Stationary points for N = 3.

    With ``y1 = r e^{i phi}``: the six points ``y0 = 0``, ``r = sqrt(lambda1/3)``,
    ``cos 3 phi = 0``; and the mirror-symmetric points with real ``y1``, where
    ``y0 = u + v``, ``y1 = u - v`` and ``z = v^2 - (1 + lambda1)/12`` solves
    the depressed cubic of ``n3_cubic``.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    p = ModelParams(3, gamma)
    l1 = n3_lambda1(gamma)
    pts = [_classified(p, "O", np.zeros(3))]
    pts += [_classified(p, "I", np.full(3, s)) for s in (-1.0, 1.0)]
    j = np.arange(3)
    if l1 > 0:
        r = math.sqrt(l1 / 3)
        for phi in np.pi / 6 + np.arange(6) * np.pi / 3:
            pts.append(_classified(p, "A", 2 * r * np.cos(2 * np.pi * j / 3 + phi)))
    lam, mu = n3_cubic(gamma)
    roots = np.roots([1.0, 0.0, -lam, mu])
    real = [float(z.real) for z in roots if abs(z.imag) <= ROOT_IMAG_TOL * max(1.0, abs(z))]
    for z in real:
        v2 = z + (1 + l1) / 12
        if v2 < 0:
            continue
        for v in (math.sqrt(v2), -math.sqrt(v2)):
            u2 = (l1 / 3 - v2) / 3
            if u2 < -1e-14 or abs(1 - l1) < 1e-14:
                continue
            u = -v * (8 * (l1 / 3 - v2) + 1 - 5 * l1 / 3) / (1 - l1)
            if abs(u * u - max(u2, 0.0)) > 1e-8:
                continue
            y0, y1 = u + v, u - v
            base = y0 + 2 * y1 * np.cos(2 * np.pi * j / 3)
            pts += [_classified(p, "mirror", x) for x in _rotations(base)]
    return N3Solution(
        gamma=gamma,
        n_cubic_roots=len(real),
        critical_coupling=n3_critical_coupling(),
        points=_unique(pts),
        value_a=-0.5 * l1**2,
    )


# --- four particles: the (x, y, x, z) fixed-point set ------------------------


@dataclass(frozen=True)
class N4Root:
    w: float
    feasible: bool
    points: list[np.ndarray]  # reconstructed stationary configurations (empty if infeasible)


def n4_quartic(gamma: float) -> np.ndarray:
    """Coefficients (highest first) of ``w^4 - 2(1-g) w^3 + 2 g^2 (1-g) w + 2 g^4``."""
    g = gamma
    return np.array([1.0, -2 * (1 - g), 0.0, 2 * g**2 * (1 - g), 2 * g**4])


def n4_reduced_roots(gamma: float) -> list[N4Root]:
    """Real roots of the reduced quartic with feasibility ``3 g^2 / w <= 1 - g``.

    Roots come from companion-matrix eigenvalues. Each feasible root gives
    ``x = +-sqrt(1 - g - w/2)``, ``u = -w x / (2 g)``, ``v = +-sqrt(1 - g - 3 u^2)``
    and the configuration ``(x, u + v, x, u - v)``.
    """
    if not 0 < gamma < 1:
        raise ValueError("n4_reduced_roots needs 0 < gamma < 1")
    g = gamma
    roots = np.roots(n4_quartic(g))
    real = sorted(float(w.real) for w in roots if abs(w.imag) <= ROOT_IMAG_TOL * max(1.0, abs(w)))
    out = []
    for w in real:
        feasible = w != 0 and 3 * g**2 / w <= 1 - g
        pts = []
        x2 = 1 - g - w / 2
        if feasible and x2 > 0:
            for sx in (1.0, -1.0):
                x = sx * math.sqrt(x2)
                u = -w * x / (2 * g)
                v2 = 1 - g - 3 * u * u
                if v2 < 0:
                    v2 = 0.0 if v2 > -1e-12 else v2
                if v2 < 0:
                    continue
                for sv in (1.0, -1.0):
                    v = sv * math.sqrt(v2)
                    pts.append(np.array([x, u + v, x, u - v]))
        out.append(N4Root(w, bool(feasible), pts))
    return out


def n4_hessian_det(gamma: float, w: float) -> float:
    if w == 0:
        raise ZeroDivisionError("w must be nonzero")
    g = gamma
    return (
        (3 * w - 4 * (1 - g))
        * ((1 - g) * w - 3 * g**2)
        * (3 * (1 - g) * w**2 + 4 * (1 - 2 * g) * w + 6 * g**2 * (1 - g))
        / (2 * w**2)
    )


def n4_hessian_det_exact(gamma: float, w: float) -> float:
    """Full 4x4 Hessian determinant at ``(x, u + v, x, u - v)`` as a function of ``w``.

    Obtained by eliminating ``u``, ``v^2`` and ``x^2`` symbolically. It equals
    ``(3 x^2 - 1 + g)`` (the eigenvalue along ``e_0 - e_2``, up to the factor
    -1/2) times the determinant on the invariant subspace ``x_0 = x_2``.
    Unlike ``n4_hessian_det`` its sign is the index parity on every branch.
    """
    g = gamma
    if g == 0:
        raise ZeroDivisionError("gamma must be nonzero")
    a = 3 * w - 4 * (1 - g)
    b = 3 * w**3 - 6 * (1 - g) * w**2 + 8 * g**2 * (1 - g)
    c = 9 * w**4 - 30 * (1 - g) * w**3 + 24 * (1 - g) ** 2 * w**2 + 6 * g**2 * (1 - g) * w - 2 * g**2 * (3 * g - 2) * (g - 2)
    return a * b * c / (16 * g**4)


def n4_real_root_count(gamma: float) -> int:
    return len(n4_reduced_roots(gamma))


def n4_feasibility_end() -> float:
    """Coupling where the positive root meets ``(1 - g) w = 3 g^2``.

    On that boundary ``w = 3 g^2 / (1 - g)``; substituting into the quartic and
    solving for g by bisection gives the end of the feasible branch.
    """

    def residual(g: float) -> float:
        w = 3 * g**2 / (1 - g)
        return float(np.polyval(n4_quartic(g), w)) / g**4

    return brentq(residual, 0.25, 0.35, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def n4_root_count_events(lo: float = 0.01, hi: float = 0.99, step: float = 1e-3, tol: float = 1e-10) -> list[tuple[float, int, int]]:
    """Couplings where the number of real quartic roots changes, located by bisection."""
    grid = np.arange(lo, hi, step)
    counts = [n4_real_root_count(g) for g in grid]
    events = []
    for a, b, ca, cb in zip(grid[:-1], grid[1:], counts[:-1], counts[1:]):
        if ca == cb:
            continue
        a, b = float(a), float(b)
        while b - a > tol:
            m = 0.5 * (a + b)
            if n4_real_root_count(m) == ca:
                a = m
            else:
                b = m
        events.append((0.5 * (a + b), ca, cb))
    return events
