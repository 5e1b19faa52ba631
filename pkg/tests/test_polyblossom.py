import numpy as np
import pytest
from fractions import Fraction

from boxqi.polyblossom import (
    Polynomial, poly_eval, elementary_symmetric, blossom_vector, blossom,
    marsden_coeff, bernstein_generators,
)
from boxqi.bspline import TensorBSpline, bspline_eval
from boxqi.boxmesh import Box
from boxqi.spaces import build_tps
from conftest import open_uniform


def test_poly_eval_pins():
    one = Polynomial.from_dict(2, {(0, 0): 1.0})
    assert poly_eval(one, np.array([0.3, 0.7])) == pytest.approx(1.0)
    g = Polynomial.from_dict(2, {(2, 1): 1.0})
    assert poly_eval(g, np.array([2.0, 3.0])) == pytest.approx(12.0)


def test_poly_eval_batch(rng):
    g = Polynomial.from_dict(2, {(i, j): rng.standard_normal()
                                 for i in range(3) for j in range(2)})
    X = rng.uniform(-1, 2, (17, 2))
    vals = poly_eval(g, X)
    naive = np.zeros(17)
    for mono, c in g.coeffs:
        naive += c * X[:, 0] ** mono[0] * X[:, 1] ** mono[1]
    assert np.max(np.abs(vals - naive)) < 1e-12 * (1 + np.max(np.abs(naive)))


def test_elementary_symmetric_exact():
    e = elementary_symmetric([Fraction(1), Fraction(2), Fraction(3)])
    assert e == [1, 6, 11, 6]
    assert elementary_symmetric([]) == [1]


def test_blossom_vector_uniform():
    # interior knots {1, 2}: e_0=1, e_1/C(2,1)=3/2, e_2/C(2,2)=2
    w = blossom_vector((0.0, 1.0, 2.0, 3.0), 2)
    assert np.allclose(np.asarray(w, dtype=float), [1.0, 1.5, 2.0])


def test_blossom_against_naive_sum(rng):
    # naive oracle: c(g, phi) = sum_a g_a * prod_i e_{a_i}(interior_i)/C(d_i, a_i)
    import math
    kv = open_uniform(0, 3, 3, 2)
    sp = build_tps([kv, kv])
    g = Polynomial.from_dict(2, {(i, j): rng.standard_normal()
                                 for i in range(3) for j in range(3)})
    for gen in sp.generators[:8]:
        got = blossom(g, gen.shape)
        ws = [blossom_vector(gen.shape.knots[i], 2) for i in range(2)]
        naive = 0.0
        for mono, c in g.coeffs:
            naive += c * float(ws[0][mono[0]]) * float(ws[1][mono[1]])
        assert got == pytest.approx(naive, rel=1e-13, abs=1e-13)


def test_blossom_reconstruction(rng):
    # Sum of coefficient-weighted basis values reproduces the polynomial
    kv = open_uniform(0, 1, 4, 3)
    sp = build_tps([kv], degrees=(3,))
    g = Polynomial.from_dict(1, {(k,): rng.standard_normal() for k in range(4)})
    xs = rng.uniform(0, 1, 200)
    vals = np.zeros_like(xs)
    for gen in sp.generators:
        c = blossom(g, gen.shape)
        vals += c * np.array([bspline_eval(gen.shape.knots[0], 3, x) for x in xs])
    ref = poly_eval(g, xs[:, None])
    assert np.max(np.abs(vals - ref)) < 1e-10


def test_marsden_coeff():
    # (y-1)(y-2) at chosen y values
    for y, want in ((0.0, 2.0), (0.5, 0.75), (5.0, 12.0), (3.0, 2.0)):
        assert marsden_coeff(y, (0.0, 1.0, 2.0, 3.0), 2) == pytest.approx(want)


def test_marsden_double_knot_root():
    # double knot at 1: the coefficient polynomial has a double root there
    val = marsden_coeff(1.0, (0.0, 1.0, 1.0, 2.0), 2)
    assert val == pytest.approx(0.0)
    eps = 1e-6
    near = marsden_coeff(1.0 + eps, (0.0, 1.0, 1.0, 2.0), 2)
    assert abs(near) < 10 * eps ** 2


def test_marsden_identity(rng):
    # sum_phi marsden_coeff(y, phi) * phi(x) = (y - x)^d on the domain
    d = 3
    kv = open_uniform(0, 2, 4, d)
    sp = build_tps([kv], degrees=(d,))
    for y in (0.0, 0.7, 2.5):
        xs = rng.uniform(0, 2, 50)
        vals = np.zeros_like(xs)
        for gen in sp.generators:
            c = marsden_coeff(y, gen.shape.knots[0], d)
            vals += c * np.array([bspline_eval(gen.shape.knots[0], d, x) for x in xs])
        assert np.max(np.abs(vals - (y - xs) ** d)) < 1e-10 * (1 + abs(y) ** d)


def test_bernstein_generators():
    gens = bernstein_generators((1, 2), Box([0, 0], [1, 1]))
    assert len(gens) == 6
    # values at the origin: only the first function is nonzero there
    vals = [g.value(np.array([0.0, 0.0])) for g in gens]
    assert vals[0] == pytest.approx(1.0)
    assert np.allclose(vals[1:], 0.0)


def test_bernstein_univariate_d1():
    gens = bernstein_generators((1,), Box([0], [1]))
    assert len(gens) == 2
    v0 = [g.value(np.array([0.0])) for g in gens]
    assert v0 == [pytest.approx(1.0), pytest.approx(0.0)]
