"""Centre-manifold expansion of the ring at the synchronisation threshold.

At ``gamma = gamma_1`` the modes ``y_1, conj(y_1)`` are neutral. Every other
mode is slaved to them through a power series::

    y_k = sum h_nm y_1^n conj(y_1)^m          (n - m = k mod N)

with a single table ``h_nm`` (the mode is fixed by ``n - m``), ``h_10 = h_01 = 1``
and every other coefficient of mode +-1 equal to zero. Writing ``P`` for the
full series and ``C`` for the mode-1 part of ``P^3`` (coefficients ``c_nm``),
invariance of the manifold reads, degree by degree::

    lambda_k h_nm = [P^3]_nm - [dP/dy C]_nm - [dP/dybar Cbar]_nm

with ``lambda_k = 1 - (1 - cos 2 pi k/N) / (1 - cos 2 pi/N)``. The right-hand
side only involves coefficients of strictly lower degree, so the table is
filled by increasing odd degree. Homogeneous parts are stored as vectors
indexed by the power of ``y_1`` and multiplied by 1-d convolution.

Arithmetic is either IEEE double or mpmath floats with a chosen significand
length. Alongside every quantity the recursion is replayed on absolute
values; the rounding bound ``u * 4 d^2 * |.|`` built from it is a heuristic
(no rigorous error analysis backs it) and signs are only reported as
certified when they clear it by a factor 10^3.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

log = logging.getLogger(__name__)

CERTIFY_FACTOR = 1e3
PRECISION_LADDER = (53, 128, 256, 512, 1024)


class CutoffError(ValueError):
    pass


def _bits(precision) -> int:
    if precision in (None, "double"):
        return 53
    if precision == "extended":
        return 128
    bits = int(precision)
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    return bits


class _Arith:
    """Scalar factory for double or fixed-precision mpmath arithmetic."""

    def __init__(self, bits: int):
        self.bits = bits
        self.ctx = None if bits == 53 else mpmath.MPContext()
        if self.ctx is not None:
            self.ctx.prec = bits
        self.unit = 2.0**-bits  # unit roundoff

    def zeros(self, k: int) -> np.ndarray:
        if self.ctx is None:
            return np.zeros(k)
        return np.array([self.ctx.mpf(0)] * k, dtype=object)

    def one(self):
        return 1.0 if self.ctx is None else self.ctx.mpf(1)

    def lambdas(self, n: int) -> list:
        """Origin spectrum at the threshold, ``lambda_k`` for k = 0..N-1."""
        if self.ctx is None:
            s1 = 2.0 * math.sin(math.pi / n) ** 2
            return [1.0 - 2.0 * math.sin(math.pi * k / n) ** 2 / s1 for k in range(n)]
        c = self.ctx
        s1 = 2 * c.sin(c.pi / n) ** 2
        return [1 - 2 * c.sin(c.pi * k / n) ** 2 / s1 for k in range(n)]


@dataclass
class CmTable:
    n_particles: int
    cutoff: int
    precision_bits: int
    lambdas: list
    h_deg: dict[int, np.ndarray] = field(default_factory=dict)  # degree -> h_{n, d-n}
    t_deg: dict[int, np.ndarray] = field(default_factory=dict)  # degree -> [P^3]_{n, d-n}
    h_abs: dict[int, np.ndarray] = field(default_factory=dict)
    t_abs: dict[int, np.ndarray] = field(default_factory=dict)
    unit: float = 2.0**-53

    def mode(self, n: int, m: int) -> int:
        return (n - m) % self.n_particles

    def h(self, n: int, m: int):
        d = n + m
        if d >= self.cutoff:
            raise CutoffError(f"h_{n},{m} lies beyond the cutoff {self.cutoff}")
        if d % 2 == 0:
            return 0.0
        return self.h_deg[d][n]

    def h_bound(self, n: int, m: int) -> float:
        d = n + m
        if d % 2 == 0 or d >= self.cutoff:
            return 0.0
        return _rounding_bound(self.unit, d, self.h_abs[d][n])

    def c(self, n: int, m: int):
        return compute_c(self, n, m)

    def c_bound(self, n: int, m: int) -> float:
        d = n + m
        if d % 2 == 0:
            return 0.0
        return _rounding_bound(self.unit, d, self.t_abs[d][n])

    def entries(self):
        """Iterate over ``(n, m, h_nm)`` for every filled coefficient."""
        for d in sorted(self.h_deg):
            for n, v in enumerate(self.h_deg[d]):
                yield n, d - n, v


def _rounding_bound(unit: float, degree: int, magnitude) -> float:
    return float(unit * 4 * degree**2 * magnitude)


def _d_dy(v: np.ndarray) -> np.ndarray:
    # y^n ybar^(d-n) -> n y^(n-1) ybar^(d-n)
    return v[1:] * np.arange(1, len(v))


def _d_dybar(v: np.ndarray) -> np.ndarray:
    # y^n ybar^(d-n) -> (d-n) y^n ybar^(d-n-1)
    d = len(v) - 1
    return v[:-1] * np.arange(d, 0, -1)


def compute_h_table(n: int, cutoff: int | None = None, precision="double") -> CmTable:
    """Fill ``h_nm`` for all ``n + m < cutoff`` (default ``2N``) at the threshold."""
    if n < 3:
        raise ValueError("the centre-manifold expansion needs N >= 3")
    K = 2 * n if cutoff is None else int(cutoff)
    if not 2 <= K <= 2 * n:
        raise ValueError(f"cutoff must lie in [2, 2N], got {K}")
    ar = _Arith(_bits(precision))
    lam = ar.lambdas(n)
    tab = CmTable(n, K, ar.bits, lam, unit=ar.unit)

    one = ar.one()
    p1 = ar.zeros(2)
    p1[0] = p1[1] = one  # h_01 = h_10 = 1
    P = {1: p1}
    A = {1: np.abs(p1)}
    Q = {}  # degree -> [P^2]
    QA = {}
    C, CA = {}, {}  # mode-1 part of P^3 by degree
    tab.h_deg[1], tab.h_abs[1] = p1, A[1]

    def square(e):
        acc, acc_abs = ar.zeros(e + 1), ar.zeros(e + 1)
        for a in range(1, e):
            b = e - a
            if a in P and b in P:
                acc = acc + np.convolve(P[a], P[b])
                acc_abs = acc_abs + np.convolve(A[a], A[b])
        return acc, acc_abs

    for d in range(3, K, 2):
        Q[d - 1], QA[d - 1] = square(d - 1)
        T, TA = ar.zeros(d + 1), ar.zeros(d + 1)
        for a in range(1, d - 1, 2):
            e = d - a
            assert a < d and e < d
            T = T + np.convolve(P[a], Q[e])
            TA = TA + np.convolve(A[a], QA[e])
        idx = np.arange(d + 1)
        modes = (2 * idx - d) % n
        on_one = modes == 1 % n
        C[d] = np.where(on_one, T, ar.zeros(d + 1))
        CA[d] = np.where(on_one, TA, ar.zeros(d + 1))

        D, DA = ar.zeros(d + 1), ar.zeros(d + 1)
        # degree-1 part of P only feeds modes +-1, which are not solved for
        for j in range(3, d - 1, 2):
            k = d - j + 1
            assert j < d and k < d
            D = D + np.convolve(_d_dy(P[j]), C[k]) + np.convolve(_d_dybar(P[j]), C[k][::-1])
            DA = DA + np.convolve(_d_dy(A[j]), CA[k]) + np.convolve(_d_dybar(A[j]), CA[k][::-1])

        h, ha = ar.zeros(d + 1), ar.zeros(d + 1)
        for i in range(d + 1):
            k = int(modes[i])
            if k in (1 % n, (n - 1) % n):
                continue
            if lam[k] == 0:
                raise ZeroDivisionError(f"lambda_{k} vanishes at the threshold")
            h[i] = (T[i] - D[i]) / lam[k]
            ha[i] = (TA[i] + DA[i]) / abs(lam[k])
        P[d], A[d] = h, ha
        tab.h_deg[d], tab.h_abs[d] = h, ha
        tab.t_deg[d], tab.t_abs[d] = T, TA
    _check_table(tab)
    return tab


def _check_table(tab: CmTable) -> None:
    n = tab.n_particles
    for a, b, v in tab.entries():
        d = a + b
        if d % 2 == 0 and v != 0:
            raise AssertionError(f"h_{a},{b} nonzero at even degree")
        k = (a - b) % n
        if d > 1 and k in (1 % n, (n - 1) % n) and v != 0:
            raise AssertionError(f"h_{a},{b} nonzero on a neutral mode")
        w = tab.h_deg[d][b]
        tol = 2 * max(tab.h_bound(a, b), tab.h_bound(b, a)) + 1e-300
        if abs(v - w) > tol:
            raise AssertionError(f"h_{a},{b} != h_{b},{a}")


def compute_c(table: CmTable, n_idx: int, m_idx: int):
    """Coefficient ``c_nm`` of ``y^n ybar^m`` in the mode-1 part of ``P^3``."""
    d = n_idx + m_idx
    if (n_idx - m_idx) % table.n_particles != 1 % table.n_particles:
        raise ValueError(f"c_{n_idx},{m_idx} does not belong to mode 1")
    if d % 2 == 0:
        return 0.0
    if d >= table.cutoff:
        raise CutoffError(f"c_{n_idx},{m_idx} needs a cutoff above {d}")
    if d == 1:
        raise ValueError("c_nm starts at degree 3")
    return table.t_deg[d][n_idx]


@dataclass(frozen=True)
class AngularCoefficient:
    n_particles: int
    indices: tuple[int, int]
    value: float
    bound: float
    sign: str  # "+", "-" or "uncertified"
    precision_bits: int
    double_value: float

    @property
    def certified(self) -> bool:
        return self.sign != "uncertified"


def leading_indices(n: int) -> tuple[int, int]:
    return (0, n - 1) if n % 2 == 0 else (0, 2 * n - 1)


def _certify(value, bound) -> str:
    if abs(value) > CERTIFY_FACTOR * bound and value != 0:
        return "+" if value > 0 else "-"
    return "uncertified"


def leading_angular_coefficient(n: int, precision="double") -> AngularCoefficient:
    """``c_{0,N-1}`` (even N) or ``c_{0,2N-1}`` (odd N) with a certified sign.

    Starts at ``precision`` and climbs the precision ladder until the sign
    clears the rounding bound or the ladder ends.
    """
    idx = leading_indices(n)
    start = _bits(precision)
    ladder = [b for b in PRECISION_LADDER if b >= start] or [start]
    double_value = None
    for bits in ladder:
        tab = compute_h_table(n, precision=bits)
        value, bound = tab.c(*idx), tab.c_bound(*idx)
        if double_value is None:
            double_value = float(value)
        sign = _certify(value, bound)
        if sign != "uncertified":
            return AngularCoefficient(n, idx, float(value), bound, sign, bits, double_value)
        log.info("N=%d: sign of c%s not certified at %d bits, escalating", n, idx, bits)
    return AngularCoefficient(n, idx, float(value), bound, "uncertified", bits, double_value)


def expected_even_sign(n: int) -> str:
    return "+" if n % 4 == 0 else "-"


def axis_sign(tab: CmTable, m: int) -> str:
    return _certify(tab.h(0, m), tab.h_bound(0, m))


@dataclass
class OddReport:
    n_particles: int
    precision_bits: int
    lemma_signs: list[tuple[int, str, str]]  # (l, observed, expected (-1)^l)
    conjectured_signs: list[tuple[int, str, str]]  # (l, observed, conjectured (-1)^(l+1))
    coefficient: AngularCoefficient

    @property
    def lemma_ok(self) -> bool:
        return all(o == e for _, o, e in self.lemma_signs)

    @property
    def conjecture_ok(self) -> bool:
        return all(o == e for _, o, e in self.conjectured_signs) and self.coefficient.sign == "+"


def _pm(k: int) -> str:
    return "+" if k % 2 == 0 else "-"


def conjecture_check(n_max: int = 31, precision="double", n_min: int = 3) -> list[OddReport]:
    """Sign table of the axis coefficients and the leading angular coefficient for odd N."""
    if n_max > 101:
        raise ValueError("n_max is limited to 101")
    out = []
    for n in range(max(3, n_min) | 1, n_max + 1, 2):
        coef = leading_angular_coefficient(n, precision)
        tab = compute_h_table(n, precision=coef.precision_bits)
        half = (n - 1) // 2
        lemma = [(l, axis_sign(tab, 2 * l + 1), _pm(l)) for l in range(0, half)]
        conj = [(l, axis_sign(tab, 2 * l + 1), _pm(l + 1)) for l in range(half, n - 1)]
        out.append(OddReport(n, coef.precision_bits, lemma, conj, coef))
    return out


@dataclass
class OnsetPrediction:
    n_particles: int
    lambda1: float
    angles: np.ndarray
    radii: np.ndarray
    kinds: list[str]  # "A" (1-saddle, angularly stable) or "B"
    configurations: np.ndarray
    coefficient: AngularCoefficient

    def representative(self, kind: str) -> np.ndarray:
        return self.configurations[self.kinds.index(kind)]


def predict_onset(n: int, lambda1: float, precision="double") -> OnsetPrediction:
    """Leading-order stationary points on the centre manifold for small ``lambda1``.

    The radial equation gives ``r = sqrt(lambda1 / 3)`` (``sqrt(lambda1 / (3 +
    cos 4 phi))`` for N = 4). The angle obeys ``phi' = c r^(M-2) sin(M phi)``
    with ``M = N`` (even N) or ``2N`` (odd N), so the stationary angles are the
    multiples of ``pi / M``; those with ``c M cos(M phi) < 0`` are stable along
    the manifold and give the 1-saddles.
    """
    if not 0 < lambda1 <= 0.1:
        raise ValueError("lambda1 must lie in (0, 0.1]")
    coef = leading_angular_coefficient(n, precision)
    if not coef.certified:
        log.warning("N=%d: leading angular coefficient not certified; prediction flagged", n)
    M = n if n % 2 == 0 else 2 * n
    angles = np.pi * np.arange(2 * M) / M
    if n == 4:
        radii = np.sqrt(lambda1 / (3.0 + np.cos(4 * angles)))
    else:
        radii = np.full(len(angles), math.sqrt(lambda1 / 3.0))
    c = coef.value
    kinds = ["A" if c * M * math.cos(M * phi) < 0 else "B" for phi in angles]
    j = np.arange(n)
    configs = np.array([2 * r * np.cos(2 * np.pi * j / n + phi) for r, phi in zip(radii, angles)])
    return OnsetPrediction(n, lambda1, angles, radii, kinds, configs, coef)
