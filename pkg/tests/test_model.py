import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bistable_ring.model import (
    ModelParams,
    StepSizeError,
    drift,
    gamma_1,
    gradient,
    hessian,
    index_type,
    interaction_w,
    local_drift,
    local_potential,
    lyapunov_decay_check,
    origin_spectrum,
    potential,
    quadratic_growth_check,
)
from bistable_ring.symmetry import generators

sizes = st.integers(2, 9)
couplings = st.floats(0.0, 3.0)


def configs(n):
    return st.lists(st.floats(-2, 2), min_size=n, max_size=n).map(np.array)


@st.composite
def model_and_x(draw):
    n = draw(sizes)
    return ModelParams(n, draw(couplings)), draw(configs(n))


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1, 0.2)
    with pytest.raises(ValueError):
        ModelParams(3, -0.1)
    with pytest.raises(ValueError):
        ModelParams(3, math.nan)


@pytest.mark.parametrize("xi, u", [(0.0, 0.0), (1.0, -0.25), (-1.0, -0.25), (2.0, 2.0)])
def test_local_potential(xi, u):
    assert local_potential(xi) == u


@pytest.mark.parametrize("xi, f", [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.5, 0.375)])
def test_local_drift(xi, f):
    assert local_drift(xi) == f


def test_potential_examples():
    assert potential(ModelParams(4, 0.7), -np.ones(4)) == -1.0
    assert potential(ModelParams(5, 0.3), np.zeros(5)) == 0.0
    a = math.sqrt(0.2)
    assert potential(ModelParams(2, 0.4), [a, -a]) == pytest.approx(-0.02, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        potential(ModelParams(3, 0.1), np.zeros(4))
    with pytest.raises(ValueError):
        gradient(ModelParams(3, 0.1), [1.0, np.inf, 0.0])


def test_gradient_vanishes_at_synchronised_points():
    p = ModelParams(5, 0.37)
    for x in (np.ones(5), -np.ones(5), np.zeros(5)):
        assert np.all(gradient(p, x) == 0)


def test_gradient_finite_difference_example():
    p = ModelParams(3, 0.3)
    x = np.array([0.5, 0.0, 0.0])
    h = 1e-5
    fd = np.array([(potential(p, x + h * e) - potential(p, x - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(gradient(p, x), fd, rtol=1e-6, atol=1e-10)


@given(model_and_x())
def test_gradient_matches_finite_differences(mx):
    p, x = mx
    h = 1e-5
    fd = np.array([(potential(p, x + h * e) - potential(p, x - h * e)) / (2 * h) for e in np.eye(p.n)])
    g = gradient(p, x)
    assert np.all(np.abs(g - fd) <= 1e-6 * np.maximum(1.0, np.abs(g)))


@given(model_and_x())
def test_hessian_symmetric_and_matches_gradient_differences(mx):
    p, x = mx
    H = hessian(p, x)
    assert np.array_equal(H, H.T)
    h = 1e-6
    fd = np.array([(gradient(p, x + h * e) - gradient(p, x - h * e)) / (2 * h) for e in np.eye(p.n)])
    assert np.allclose(H, fd, atol=1e-5)


@given(model_and_x())
def test_equivariance_under_generators(mx):
    p, x = mx
    for g in generators(p.n):
        assert abs(potential(p, g(x)) - potential(p, x)) <= 1e-12 * max(1.0, abs(potential(p, x)))
        assert np.allclose(gradient(p, g(x)), g(gradient(p, x)), rtol=0, atol=1e-12)


def test_hessian_examples():
    assert np.allclose(np.linalg.eigvalsh(hessian(ModelParams(2, 0.6), np.zeros(2))), [-1.0, 0.2])
    ev = np.linalg.eigvalsh(hessian(ModelParams(4, 1.0), np.zeros(4)))
    assert np.sum(np.abs(ev) < 1e-12) == 2


@pytest.mark.parametrize("n", range(2, 11))
@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.7])
def test_hessian_spectrum_at_synchronised_points(n, gamma):
    p = ModelParams(n, gamma)
    lam = origin_spectrum(p).lambdas
    ev0 = np.sort(np.linalg.eigvalsh(hessian(p, np.zeros(n))))
    assert np.allclose(ev0, np.sort(-lam), atol=1e-10)
    k = np.arange(n)
    ev1 = np.sort(np.linalg.eigvalsh(hessian(p, np.ones(n))))
    assert np.allclose(ev1, np.sort(2 + gamma * (1 - np.cos(2 * np.pi * k / n))), atol=1e-10)
    assert ev1.min() >= 2 - 1e-12


def test_origin_spectrum_examples():
    assert gamma_1(2) == 0.5
    assert gamma_1(3) == 2 / 3
    assert gamma_1(4) == 1.0
    gm = origin_spectrum(ModelParams(8, 0.1)).gamma_m
    expected = [2 + math.sqrt(2), 1, 2 - math.sqrt(2), 0.5]
    assert np.allclose([gm[m] for m in range(1, 5)], expected, rtol=1e-12)


@given(sizes, st.floats(0, 5), st.floats(0, 5))
def test_origin_spectrum_invariants(n, g1, g2):
    a, b = sorted((g1, g2))
    la = origin_spectrum(ModelParams(n, a)).lambdas
    lb = origin_spectrum(ModelParams(n, b)).lambdas
    assert la[0] == 1.0
    assert np.allclose(la, np.roll(la[::-1], 1), atol=1e-15)
    if b > a:
        assert np.all(lb[1:] < la[1:])


def test_interaction_w_examples():
    assert interaction_w(np.full(5, 0.3)) == 0
    assert interaction_w([1.0, -1.0]) == 4.0
    assert interaction_w([1.0, 0.0, 0.0, 0.0]) == 1.0


def test_index_type_threshold():
    assert index_type([-1.0, 0.0, 2.0]) == (1, 1, 1)
    assert index_type([-1.0, 1e-9, 2.0]) == (1, 1, 1)
    assert index_type([-1.0, 1e-6, 2.0]) == (1, 0, 2)


def test_lyapunov_examples(rng):
    assert lyapunov_decay_check(ModelParams(5, 0.8), np.full(5, 0.4), 1e-3)
    assert lyapunov_decay_check(ModelParams(4, 2.0), np.array([1.0, -1.0, 1.0, -1.0]), 1e-3)
    with pytest.raises(ValueError):
        lyapunov_decay_check(ModelParams(4, 2.0), np.zeros(4), 1e-2)
    with pytest.raises(StepSizeError):
        # a wildly unstable step diagnoses itself through the energy increase
        lyapunov_decay_check(ModelParams(2, 1.0), np.array([1e3, -1e3]), 1e-3)


def test_lyapunov_decay_along_flow(rng):
    p = ModelParams(3, 1.0)
    for _ in range(5):
        x = rng.normal(size=3)
        x *= min(1.0, 2.0 / np.linalg.norm(x))
        w_prev = interaction_w(x)
        for _ in range(10_000):
            assert lyapunov_decay_check(p, x, 1e-3)
            x = x + 1e-3 * drift(p, x)
            w = interaction_w(x)
            assert w <= w_prev
            w_prev = w


@settings(max_examples=25)
@given(st.integers(2, 8), st.floats(0.0, 4.0), st.lists(st.floats(-2, 2), min_size=8, max_size=8))
def test_w_decays_monotonically_above_threshold(n, excess, raw):
    p = ModelParams(n, gamma_1(n) * (1.05 + excess))
    x = np.array(raw[:n])
    w = interaction_w(x)
    for _ in range(30_000):
        if w < 1e-12:
            break
        x = x + 1e-3 * drift(p, x)
        w_next = interaction_w(x)
        assert w_next < w
        w = w_next


def test_quadratic_growth_examples():
    p = ModelParams(2, 1.0)
    for t in np.linspace(0.1, 1.0, 10):
        assert quadratic_growth_check(p, np.ones(2), np.array([t, -t]))
    assert quadratic_growth_check(p, np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        quadratic_growth_check(p, np.ones(2), np.array([0.1, 0.0]))


def test_quadratic_growth_random_samples(rng):
    for n, g in [(6, 3.0), (3, 0.4), (5, 0.05), (8, 12.0)]:
        p = ModelParams(n, g)
        for _ in range(1000):
            c = rng.uniform(-2, 2)
            perp = rng.normal(size=n)
            perp -= perp.mean()
            assert quadratic_growth_check(p, np.full(n, c), perp)


@given(model_and_x())
def test_potential_bounded_below_by_synchronised_minima(mx):
    p, x = mx
    v = potential(p, x)
    if np.max(np.abs(np.abs(x) - 1)) > 1e-6 or np.ptp(x) > 1e-6:
        assert v > -p.n / 4
    assert v >= -p.n / 4 - 1e-12
