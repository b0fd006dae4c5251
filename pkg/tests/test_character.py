from fractions import Fraction

import numpy as np
import pytest

from polyzeros.character import (EXACT_SUM, bernoulli_plus, character_1d_exact,
                                 character_1d_todd, character_exact, support_function_limit,
                                 todd_coefficients)
from polyzeros.polytope import count_points, from_vertices, named_polytope

SQUARE = named_polytope("square")


def test_geometric_example():
    P = from_vertices([(0,), (1,)], 1)
    assert character_exact(P, 2, [np.log(2)]).value == pytest.approx(7.0, rel=1e-14)


def test_cancelling_example():
    ev = character_exact(SQUARE, 1, [1j * np.pi, 0])
    assert ev.value == 0j and ev.log_abs == -np.inf and ev.method == EXACT_SUM


@pytest.mark.parametrize("name", ["square", "trapezoid_ex3_2", "simplex_3_1"])
def test_zero_weight_counts_points(name):
    P = named_polytope(name)
    for N in (1, 4, 7):
        val = character_exact(P, N, np.zeros(P.m)).value
        assert val.real == count_points(P, N) and val.imag == 0


def test_box_factorization():
    P = from_vertices([(1, 0), (3, 0), (1, 2), (3, 2)], 6)
    rng = np.random.default_rng(0)
    for _ in range(10):
        w = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-3, 3, 2)
        for N in (1, 3, 6):
            ex = character_exact(P, N, w).value
            prod = character_1d_exact(1, 3, N, w[0]) * character_1d_exact(0, 2, N, w[1])
            assert abs(ex - prod) <= 1e-10 * abs(prod)


def test_conjugate_symmetry():
    P = named_polytope("trapezoid_ex3_3")
    w = np.array([0.3 + 1.1j, -0.2 + 0.4j])
    a = character_exact(P, 5, w).value
    b = character_exact(P, 5, np.conj(w)).value
    assert b == pytest.approx(np.conj(a), rel=1e-13)


def test_large_n_log_form_does_not_overflow():
    ev = character_exact(SQUARE, 400, [3.0, 3.0])
    assert np.isfinite(ev.log_abs) and ev.log_abs == pytest.approx(2400, rel=1e-3)


def test_bernoulli_numbers():
    assert [bernoulli_plus(k) for k in range(5)] == [1, Fraction(1, 2), Fraction(1, 6), 0,
                                                     Fraction(-1, 30)]
    assert bernoulli_plus(20) == Fraction(-174611, 330)
    # z / (1 - e^{-z}) at z = 0.3
    z = 0.3
    series = sum(float(c) * z**k for k, c in enumerate(todd_coefficients(20)))
    assert series == pytest.approx(z / (1 - np.exp(-z)), rel=1e-15)


def test_todd_example():
    exact = character_1d_exact(0, 1, 3, 0.1)
    assert abs(character_1d_todd(0, 1, 3, 0.1, order=12) - exact) <= 1e-10 * abs(exact)


def test_todd_grid_order_12():
    for a, b, N in [(0, 1, 3), (1, 3, 4), (-2, 1, 2), (0, 2, 5)]:
        for r in np.linspace(0.05, 1.0, 6):
            for ang in np.linspace(0, 2 * np.pi, 9)[:-1]:
                w = r * np.exp(1j * ang)
                exact = character_1d_exact(a, b, N, w)
                assert abs(character_1d_todd(a, b, N, w, 12) - exact) <= 1e-10 * abs(exact)


@pytest.mark.parametrize("order", [1, 2, 7, 20])
def test_todd_zero_weight(order):
    assert character_1d_todd(1, 3, 5, 0.0, order) == pytest.approx(11.0, abs=1e-12)


def test_todd_order_zero_is_plain_integral():
    w, A, B = 0.5, 0, 6
    integral = (np.exp(w * B) - np.exp(w * A)) / w
    assert character_1d_todd(0, 2, 3, w, 0) == pytest.approx(integral, rel=1e-14)
    exact = character_1d_exact(0, 2, 3, w)
    assert abs(integral - exact) / abs(exact) > 0.1


def test_todd_error_monotone_in_order():
    # from order 1 on; the bare integral can beat order 1 for imaginary w
    for w in [0.2, 0.7 + 0.3j, -1.0, 0.5j]:
        exact = character_1d_exact(0, 2, 3, w)
        errs = [abs(character_1d_todd(0, 2, 3, w, k) - exact) / abs(exact) for k in range(1, 21)]
        for e0, e1 in zip(errs, errs[1:]):
            assert e1 <= e0 or e1 <= 1e-13


@pytest.mark.parametrize("kwargs", [dict(order=21), dict(order=-1), dict(w=7j), dict(a=3)])
def test_todd_rejects(kwargs):
    args = dict(a=1, b=2, N=2, w=0.1, order=3)
    args.update(kwargs)
    with pytest.raises(ValueError):
        character_1d_todd(**args)


def test_support_function_limit():
    (N, r), = support_function_limit(SQUARE, [1, 1], [40])
    assert r <= 2 * np.log(40) / 40
    res = [r for _, r in support_function_limit(SQUARE, [1.0, -0.5], [5, 20, 80])]
    assert res[0] > res[1] > res[2]
    zero = support_function_limit(SQUARE, [0, 0], [10])[0][1]
    assert zero == pytest.approx(np.log(121) / 10)


def test_support_function_interval():
    P = from_vertices([(1,), (3,)], 4)
    (N, r), = support_function_limit(P, [2.0], [30])
    geometric = np.log((np.exp(2 * 91) - np.exp(2 * 30)) / (np.exp(2) - 1)) / 30
    assert r == pytest.approx(abs(geometric - 6), rel=1e-10)
