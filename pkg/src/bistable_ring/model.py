"""Ring of N bistable particles with nearest-neighbour diffusive coupling.

Every particle sits in the quartic double well ``U(xi) = xi**4/4 - xi**2/2``
and is tied to its two ring neighbours by springs of strength ``gamma/2``::

    V(x) = sum_i U(x_i) + gamma/4 * sum_i (x_{i+1} - x_i)**2

Coordinates are stored 0-based and all neighbour lookups wrap modulo N.
Functions taking configurations accept either one configuration of shape
``(N,)`` or a stack of shape ``(M, N)``; the ring runs along the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

#: Relative threshold under which a Hessian eigenvalue counts as zero.
ZERO_EIG_RTOL = 1e-7

# cos(2*pi*q) for the rational angles where it is exactly representable
_EXACT_COS = {
    Fraction(0): 1.0,
    Fraction(1, 6): 0.5,
    Fraction(1, 4): 0.0,
    Fraction(1, 3): -0.5,
    Fraction(1, 2): -1.0,
    Fraction(2, 3): -0.5,
    Fraction(3, 4): 0.0,
    Fraction(5, 6): 0.5,
}


class StepSizeError(ValueError):
    """An explicit gradient step increased the potential."""


@dataclass(frozen=True)
class ModelParams:
    """Number of particles ``n_particles`` (N) and coupling strength ``coupling`` (gamma)."""

    n_particles: int
    coupling: float

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 2:
            raise ValueError(f"n_particles must be an integer >= 2, got {self.n_particles!r}")
        if not math.isfinite(self.coupling) or self.coupling < 0:
            raise ValueError(f"coupling must be finite and >= 0, got {self.coupling!r}")
        object.__setattr__(self, "n_particles", int(self.n_particles))
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def n(self) -> int:
        return self.n_particles

    @property
    def gamma(self) -> float:
        return self.coupling

    def with_coupling(self, gamma: float) -> "ModelParams":
        return ModelParams(self.n_particles, gamma)


@dataclass(frozen=True)
class OriginSpectrum:
    """Eigen-data of the Hessian at the origin.

    ``lambdas[k] = 1 - gamma/gamma_k``; the Hessian eigenvalues are ``-lambdas``.
    ``gammas[k]`` is the coupling at which mode ``k`` crosses zero (``inf`` for k=0)
    and ``gamma_m`` maps each winding number M = 1..N//2 to its bifurcation value.
    """

    lambdas: np.ndarray
    gammas: np.ndarray
    gamma_m: dict[int, float] = field(default_factory=dict)

    @property
    def gamma_1(self) -> float:
        return self.gamma_m[1]


def one_minus_cos(k: int, n: int) -> float:
    """``1 - cos(2 pi k / n)``, exact at angles with rational cosine."""
    q = Fraction(k % n, n)
    if q in _EXACT_COS:
        return 1.0 - _EXACT_COS[q]
    return 2.0 * math.sin(math.pi * q.numerator / q.denominator) ** 2


def gamma_k(n: int, k: int) -> float:
    """Coupling at which the origin's mode ``k`` changes stability (``inf`` for k = 0 mod n)."""
    s = one_minus_cos(k, n)
    return math.inf if s == 0.0 else 1.0 / s


def gamma_1(n: int) -> float:
    """Synchronisation threshold ``1 / (1 - cos(2 pi / N))``."""
    return gamma_k(n, 1)


def local_potential(xi):
    return 0.25 * xi**4 - 0.5 * xi**2


def local_drift(xi):
    """``f(xi) = xi - xi**3 = -U'(xi)``."""
    return xi - xi * xi * xi


def as_configuration(p: ModelParams, x) -> np.ndarray:
    """Validate and convert ``x`` to a float array whose last axis has length N."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != p.n_particles:
        raise ValueError(
            f"configuration must have last dimension {p.n_particles}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("configuration has non-finite entries")
    return arr


def laplacian(x: np.ndarray) -> np.ndarray:
    # neighbours summed first so that reversing the ring gives bitwise-equal results
    return (np.roll(x, -1, axis=-1) + np.roll(x, 1, axis=-1)) - 2.0 * x


def potential(p: ModelParams, x):
    x = as_configuration(p, x)
    bonds = np.roll(x, -1, axis=-1) - x
    return local_potential(x).sum(axis=-1) + 0.25 * p.coupling * (bonds**2).sum(axis=-1)


def gradient(p: ModelParams, x) -> np.ndarray:
    """Gradient of the potential; the deterministic drift is its negative."""
    x = as_configuration(p, x)
    return -local_drift(x) - 0.5 * p.coupling * laplacian(x)


def drift(p: ModelParams, x) -> np.ndarray:
    return -gradient(p, x)


def hessian(p: ModelParams, x) -> np.ndarray:
    """Hessian matrix (or stack of matrices) of the potential.

    For N = 2 both bonds join the same pair, so the off-diagonal entry is -gamma.
    """
    x = as_configuration(p, x)
    n = p.n_particles
    h = np.broadcast_to(p.coupling * coupling_matrix(n), x.shape + (n,)).copy()
    idx = np.arange(n)
    h[..., idx, idx] += 3.0 * x**2 - 1.0
    return h


def coupling_matrix(n: int) -> np.ndarray:
    """``Sigma = 1 - (R + R^T)/2``, so that the interaction energy is ``<x, Sigma x>``."""
    sigma = np.eye(n)
    idx = np.arange(n)
    np.add.at(sigma, (idx, (idx + 1) % n), -0.5)
    np.add.at(sigma, (idx, (idx - 1) % n), -0.5)
    return sigma


def origin_spectrum(p: ModelParams) -> OriginSpectrum:
    n = p.n_particles
    ks = range(n)
    lambdas = np.array([1.0 - p.coupling * one_minus_cos(k, n) for k in ks])
    gammas = np.array([gamma_k(n, k) for k in ks])
    gamma_m = {m: gamma_k(n, m) for m in range(1, n // 2 + 1)}
    return OriginSpectrum(lambdas=lambdas, gammas=gammas, gamma_m=gamma_m)


def interaction_w(x) -> float:
    """Interaction energy ``W(x) = 1/2 sum_i (x_i - x_{i+1})**2``."""
    x = np.asarray(x, dtype=float)
    return 0.5 * ((x - np.roll(x, -1, axis=-1)) ** 2).sum(axis=-1)


def index_type(eigenvalues, rtol: float = ZERO_EIG_RTOL) -> tuple[int, int, int]:
    """Count (negative, zero, positive) eigenvalues.

    An eigenvalue is zero when ``|eig| < rtol * max(1, spectral radius)``.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    thresh = rtol * max(1.0, float(np.max(np.abs(ev))) if ev.size else 1.0)
    n_zero = int(np.sum(np.abs(ev) < thresh))
    n_neg = int(np.sum(ev <= -thresh))
    return n_neg, n_zero, ev.size - n_neg - n_zero


def lyapunov_decay_check(p: ModelParams, x, dt: float) -> bool:
    """Check the differential inequality for W along one explicit gradient step.

    Verifies ``dW/dt <= 2 (1 - gamma/gamma_1) W - W**2 / N`` with the time
    derivative replaced by a forward difference. Since W is quadratic the
    forward difference exceeds the exact derivative by ``dt <v, Sigma v>``
    (v the velocity); the slack allows ten times that amount.
    """
    if p.coupling <= 0:
        raise ValueError("lyapunov_decay_check needs gamma > 0")
    if not 0 < dt <= 1e-3:
        raise ValueError(f"dt must lie in (0, 1e-3], got {dt}")
    x = as_configuration(p, x)
    v = drift(p, x)
    x_next = x + dt * v
    v0, v1 = potential(p, x), potential(p, x_next)
    if v1 > v0 + 1e-14 * max(1.0, abs(v0)):
        raise StepSizeError(f"potential increased along gradient step ({v0} -> {v1}); dt={dt} too large")
    w0, w1 = interaction_w(x), interaction_w(x_next)
    lhs = (w1 - w0) / dt
    n = p.n_particles
    rhs = 2.0 * (1.0 - p.coupling / gamma_1(n)) * w0 - w0**2 / n
    slack = 10.0 * dt * 2.0 * float(v @ v) + 1e-12 * max(1.0, w0)
    return bool(lhs <= rhs + slack)


def quadratic_growth_check(p: ModelParams, x_par, x_perp, *, atol: float = 1e-10) -> bool:
    """Check ``V(x_par + x_perp) >= V(x_par) + (gamma/gamma_1 - 1) |x_perp|**2 / 2``.

    ``x_par`` must lie on the diagonal and ``x_perp`` must have zero mean.
    """
    x_par = as_configuration(p, x_par)
    x_perp = as_configuration(p, x_perp)
    scale = max(1.0, float(np.max(np.abs(x_perp))) if x_perp.size else 1.0)
    if abs(float(np.sum(x_perp))) > atol * p.n_particles * scale:
        raise ValueError("x_perp is not orthogonal to the diagonal")
    if np.ptp(x_par) > atol * max(1.0, float(np.max(np.abs(x_par)))):
        raise ValueError("x_par is not on the diagonal")
    lower = potential(p, x_par) + 0.5 * (p.coupling / gamma_1(p.n_particles) - 1.0) * float(x_perp @ x_perp)
    value = potential(p, x_par + x_perp)
    return bool(value >= lower - 1e-12 * max(1.0, abs(lower)))
