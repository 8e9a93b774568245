"""The symmetry group G = D_N x Z_2 of the ring potential.

Generators, acting on 0-based coordinate arrays:

* ``R`` rotates, ``(R x)_i = x_{i+1}``;
* ``S`` reverses, ``(S x)_i = x_{N-1-i}``;
* ``C`` negates.

Elements are kept in the normal form ``C^c S^s R^r`` with ``0 <= r < N``.
Words are normalised with ``S R = R^{-1} S``. For N = 2 the reversal equals a
rotation, so reflected elements are folded into rotations and |G| = 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True, order=True)
class SymmetryElement:
    n_particles: int
    rotation: int = 0
    reflected: bool = False
    negated: bool = False

    def __post_init__(self):
        r = self.rotation % self.n_particles
        s = bool(self.reflected)
        if self.n_particles == 2 and s:
            r, s = (r + 1) % 2, False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "reflected", s)
        object.__setattr__(self, "negated", bool(self.negated))

    def __mul__(self, other: "SymmetryElement") -> "SymmetryElement":
        """Composition: ``(g * h) x = g(h(x))``."""
        if other.n_particles != self.n_particles:
            raise ValueError("cannot compose elements of different groups")
        # C^c1 S^s1 R^r1 C^c2 S^s2 R^r2 = C^(c1+c2) S^(s1+s2) R^(+-r1 + r2)
        r1 = -self.rotation if other.reflected else self.rotation
        return SymmetryElement(
            self.n_particles,
            r1 + other.rotation,
            self.reflected != other.reflected,
            self.negated != other.negated,
        )

    def inverse(self) -> "SymmetryElement":
        if self.reflected:
            return self
        return SymmetryElement(self.n_particles, -self.rotation, False, self.negated)

    def apply(self, x) -> np.ndarray:
        return apply_symmetry(self, x)

    def __call__(self, x) -> np.ndarray:
        return apply_symmetry(self, x)

    def label(self) -> str:
        parts = []
        if self.negated:
            parts.append("C")
        if self.reflected:
            parts.append("S")
        if self.rotation:
            parts.append("R" if self.rotation == 1 else f"R^{self.rotation}")
        return "".join(parts) or "id"


def identity(n: int) -> SymmetryElement:
    return SymmetryElement(n)


def rotation(n: int, k: int = 1) -> SymmetryElement:
    return SymmetryElement(n, rotation=k)


def reflection(n: int) -> SymmetryElement:
    return SymmetryElement(n, reflected=True)


def inversion(n: int) -> SymmetryElement:
    return SymmetryElement(n, negated=True)


def generators(n: int) -> list[SymmetryElement]:
    return [rotation(n), reflection(n), inversion(n)]


@lru_cache(maxsize=None)
def group_elements(n: int) -> tuple[SymmetryElement, ...]:
    flips = (False,) if n == 2 else (False, True)
    return tuple(
        SymmetryElement(n, r, s, c) for c in (False, True) for s in flips for r in range(n)
    )


def apply_symmetry(g: SymmetryElement, x) -> np.ndarray:
    """Apply ``C^c S^s R^r`` along the last axis of ``x``."""
    x = np.asarray(x)
    if x.shape[-1] != g.n_particles:
        raise ValueError(f"element of G_{g.n_particles} applied to shape {x.shape}")
    y = np.roll(x, -g.rotation, axis=-1) if g.rotation else x
    if g.reflected:
        y = y[..., ::-1]
    if g.negated:
        y = -y
    return np.array(y, copy=True)


class Orbit(NamedTuple):
    points: np.ndarray  # (|orbit|, N), distinct group images
    stabiliser: list[SymmetryElement]


def orbit_of(x, tol: float = 1e-8) -> Orbit:
    """Group orbit and stabiliser of ``x``; images closer than ``tol`` (max norm) coincide."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    points: list[np.ndarray] = []
    stab = []
    for g in group_elements(n):
        gx = apply_symmetry(g, x)
        if np.max(np.abs(gx - x)) <= tol:
            stab.append(g)
        if not any(np.max(np.abs(gx - q)) <= tol for q in points):
            points.append(gx)
    return Orbit(np.array(points), stab)


def orbit_images(x) -> np.ndarray:
    """All |G| images of ``x`` (with repetitions), shape ``(|G|, N)`` or ``(|G|, M, N)``."""
    x = np.asarray(x, dtype=float)
    return np.stack([apply_symmetry(g, x) for g in group_elements(x.shape[-1])])


def distance_to_orbit(x, centre) -> float:
    """Euclidean distance from ``x`` to the nearest group image of ``centre``."""
    images = orbit_images(centre)
    return float(np.min(np.linalg.norm(images - np.asarray(x, dtype=float), axis=-1)))
