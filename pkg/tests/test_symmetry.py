import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bistable_ring.symmetry import (
    SymmetryElement,
    apply_symmetry,
    distance_to_orbit,
    group_elements,
    identity,
    inversion,
    orbit_of,
    reflection,
    rotation,
)


def test_generator_examples():
    assert np.array_equal(rotation(3)(np.array([1.0, 2.0, 3.0])), [2.0, 3.0, 1.0])
    assert np.array_equal(reflection(4)(np.array([1.0, 2.0, 3.0, 4.0])), [4.0, 3.0, 2.0, 1.0])
    x = np.array([0.3, -1.2, 2.0])
    assert np.array_equal(inversion(3)(x), -x)


@pytest.mark.parametrize("n", range(2, 9))
def test_group_closed_associative_and_sized(n):
    els = group_elements(n)
    assert len(set(els)) == (4 if n == 2 else 4 * n)
    s = set(els)
    for a, b in itertools.product(els, els):
        assert a * b in s
    x = np.random.default_rng(n).normal(size=n)
    for a, b, c in itertools.product(els[:6], els[:6], els[:6]):
        assert (a * b) * c == a * (b * c)
        assert np.array_equal(((a * b) * c)(x), a(b(c(x))))
    for a in els:
        assert a * a.inverse() == identity(n)


@pytest.mark.parametrize("n", range(3, 8))
def test_reflection_rotation_relation(n):
    S, R = reflection(n), rotation(n)
    assert S * R == rotation(n, -1) * S


def test_orbit_examples():
    n = 4
    o = orbit_of(np.zeros(n))
    assert len(o.points) == 1 and len(o.stabiliser) == 4 * n
    o = orbit_of(np.ones(n))
    assert len(o.points) == 2
    o = orbit_of(np.array([1.0, 0.0]))
    assert len(o.points) == 4


@given(st.integers(2, 8), st.lists(st.sampled_from([-1.0, 0.0, 0.5, 1.0]), min_size=8, max_size=8))
def test_orbit_stabiliser(n, vals):
    x = np.array(vals[:n])
    o = orbit_of(x)
    order = 4 if n == 2 else 4 * n
    assert len(o.points) * len(o.stabiliser) == order


def test_distance_to_orbit():
    a = np.array([0.5, -0.5, 0.0])
    assert distance_to_orbit(apply_symmetry(SymmetryElement(3, 2, True, True), a), a) == pytest.approx(0.0)
