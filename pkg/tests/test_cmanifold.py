import math

import numpy as np
import pytest

from bistable_ring.cmanifold import (
    compute_h_table,
    conjecture_check,
    expected_even_sign,
    leading_angular_coefficient,
    leading_indices,
    predict_onset,
)
from bistable_ring.landscape import newton_refine
from bistable_ring.model import ModelParams, gamma_1, hessian, index_type


@pytest.mark.parametrize("n", [3, 5, 6, 7, 8])
def test_cubic_radial_coefficient(n):
    assert compute_h_table(n).c(2, 1) == pytest.approx(3.0, abs=1e-12)


def test_n4_axis_coefficient():
    assert compute_h_table(4).c(0, 3) == pytest.approx(1.0, abs=1e-12)


def test_unit_neutral_mode():
    tab = compute_h_table(6)
    assert tab.h(1, 0) == 1 and tab.h(0, 1) == 1


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12, 14])
def test_even_leading_sign(n):
    coef = leading_angular_coefficient(n)
    assert coef.indices == leading_indices(n) == (0, n - 1)
    assert coef.sign == expected_even_sign(n)


def test_extended_precision_agrees_with_double():
    a = compute_h_table(7)
    b = compute_h_table(7, precision=128)
    for (i, j, v), (_, _, w) in zip(a.entries(), b.entries()):
        assert float(w) == pytest.approx(float(v), rel=1e-9, abs=1e-12)


def test_odd_prefix_positive():
    rows = conjecture_check(15)
    assert [r.n_particles for r in rows] == [3, 5, 7, 9, 11, 13, 15]
    for r in rows:
        assert r.lemma_ok
        assert r.coefficient.sign == "+"


def test_conjecture_range_guard():
    with pytest.raises(ValueError):
        conjecture_check(103)


@pytest.mark.parametrize("n", [5, 6])
def test_onset_prediction_refines_to_one_saddles(n):
    lam = 0.02
    pred = predict_onset(n, lam)
    p = ModelParams(n, gamma_1(n) * (1 - lam))
    ys, ok = newton_refine(p, pred.configurations)
    assert ok.all()
    for x, y, kind in zip(pred.configurations, ys, pred.kinds):
        assert np.max(np.abs(y - x)) < 0.2 * math.sqrt(lam)
        n_neg, n_zero, _ = index_type(np.linalg.eigvalsh(hessian(p, y)))
        assert n_zero == 0
        assert n_neg == (1 if kind == "A" else 2)


def test_onset_guard():
    with pytest.raises(ValueError):
        predict_onset(6, 0.5)
