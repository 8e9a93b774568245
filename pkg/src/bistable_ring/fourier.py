"""Discrete Fourier variables of ring configurations.

With ``omega = exp(2 pi i / N)``::

    y_k = (1/N) sum_j conj(omega)**(j k) x_j        x_j = sum_k omega**(j k) y_k

Modes are stored as ``k = 0..N-1``; a real configuration satisfies
``y_{N-k} = conj(y_k)``. In these variables the drift becomes
``lambda_k y_k - (y * y * y)_k`` with ``*`` the cyclic convolution.
"""

from __future__ import annotations

import numpy as np

from .model import ModelParams, origin_spectrum
from .symmetry import SymmetryElement

REALITY_TOL = 1e-10

# Above this size the cyclic triple convolution goes through the FFT.
DIRECT_CONVOLUTION_MAX_N = 32


class NonRealStateError(ValueError):
    """Fourier modes violate ``y_{-k} = conj(y_k)``."""


def omega(n: int) -> complex:
    return np.exp(2j * np.pi / n)


def forward(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.fft.fft(x, axis=-1) / x.shape[-1]


def reality_defect(y) -> float:
    y = np.asarray(y, dtype=complex)
    mirrored = np.roll(y[..., ::-1], 1, axis=-1)  # y_{-k}
    return float(np.max(np.abs(y - np.conj(mirrored)))) if y.size else 0.0


def check_real(y, tol: float = REALITY_TOL) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(y)))) if y.size else 1.0
    defect = reality_defect(y)
    if defect > tol * scale:
        raise NonRealStateError(f"modes do not describe a real configuration (defect {defect:.3g})")
    return y


def inverse(y, tol: float = REALITY_TOL) -> np.ndarray:
    y = check_real(y, tol)
    n = y.shape[-1]
    return np.real(np.fft.ifft(y, axis=-1) * n)


def cubic_convolution(y, method: str = "auto") -> np.ndarray:
    """``sum_{k1+k2+k3 = k mod N} y_k1 y_k2 y_k3`` for every k.

    ``method`` is ``"direct"`` (explicit O(N^3) sum), ``"fft"`` (transform of the
    cube in real space) or ``"auto"``.
    """
    y = np.asarray(y, dtype=complex)
    n = y.shape[-1]
    if method == "auto":
        method = "direct" if n <= DIRECT_CONVOLUTION_MAX_N else "fft"
    if method == "fft":
        z = np.fft.ifft(y, axis=-1) * n
        return np.fft.fft(z**3, axis=-1) / n
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    k = np.arange(n)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    out = np.empty_like(y)
    for kk in range(n):
        k3 = (kk - k1 - k2) % n
        out[..., kk] = np.sum(y[..., k1] * y[..., k2] * y[..., k3], axis=(-2, -1))
    return out


def fourier_drift(p: ModelParams, y, method: str = "auto") -> np.ndarray:
    y = check_real(y)
    lam = origin_spectrum(p).lambdas
    return lam * y - cubic_convolution(y, method)


def fourier_potential(p: ModelParams, y, method: str = "auto") -> float:
    y = check_real(y)
    n = p.n_particles
    lam = origin_spectrum(p).lambdas
    quadratic = -0.5 * n * np.sum(lam * np.abs(y) ** 2, axis=-1)
    # sum_{k1+..+k4 = 0} y y y y = sum_k (y*y*y)_k y_{-k}
    y_minus = np.roll(y[..., ::-1], 1, axis=-1)
    quartic = 0.25 * n * np.sum(cubic_convolution(y, method) * y_minus, axis=-1)
    return np.real(quadratic + quartic)


def symmetry_on_modes(g: SymmetryElement, y) -> np.ndarray:
    """Action of ``C^c S^s R^r`` on Fourier modes.

    ``R: y_k -> omega^k y_k``; ``S: y_k -> omega^k conj(y_k)`` (so ``RS`` acts
    as plain conjugation); ``C: y_k -> -y_k``.
    """
    y = np.asarray(y, dtype=complex)
    n = y.shape[-1]
    phase = omega(n) ** np.arange(n)
    out = y * phase**g.rotation if g.rotation else y.copy()
    if g.reflected:
        out = phase * np.conj(out)
    if g.negated:
        out = -out
    return out


def reflection_phase(n: int, ell: int) -> np.ndarray:
    """Phases ``conj(omega)**(ell k / 2)`` with ``omega**(1/2) = exp(i pi / N)``.

    A configuration obeys ``x_{ell - j} = x_j`` for all j exactly when its modes
    are ``y_k = phase_k r_k`` with every ``r_k`` real (k = 0..N-1).
    """
    k = np.arange(n)
    return np.exp(-1j * np.pi * ell * k / n)


def mirror_coordinates(y, ell: int) -> np.ndarray:
    """``r_k = y_k / phase_k``; real exactly on the mirror-symmetric subspace."""
    y = np.asarray(y, dtype=complex)
    return y / reflection_phase(y.shape[-1], ell)
