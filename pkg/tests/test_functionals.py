import numpy as np
import pytest
from fractions import Fraction

from boxqi.functionals import (
    hilbert_matrix, hilbert_inverse, hilbert_inverse_inf_norm,
    gauss_legendre, build_G, apply_functional, lr_duals,
    functional_norm_bound,
)
from boxqi.bspline import TensorBSpline, bspline_eval
from boxqi.boxmesh import Box
from boxqi.polyblossom import Polynomial, poly_eval, blossom
from conftest import open_uniform


def test_hilbert_matrix_entries():
    H = hilbert_matrix(2)
    assert H[0][0] == Fraction(1)
    assert H[1][2] == Fraction(1, 4)
    assert H[2][2] == Fraction(1, 5)


def test_hilbert_inverse_pin():
    assert [list(r) for r in hilbert_inverse(1)] == [[4, -6], [-6, 12]]
    assert hilbert_inverse(0) == ((1,),)


def test_hilbert_product_exact():
    # exact rational identity check, the full supported range
    for d in range(0, 9):
        H = hilbert_matrix(d)
        Hi = hilbert_inverse(d)
        N = d + 1
        for r in range(N):
            for s in range(N):
                acc = sum(Fraction(H[r][k]) * Hi[k][s] for k in range(N))
                assert acc == (1 if r == s else 0)


def test_hilbert_inverse_range():
    with pytest.raises(ValueError):
        hilbert_inverse(11)
    assert hilbert_inverse_inf_norm(1) == 18


def test_gauss_rule_exactness():
    rule = gauss_legendre(3, Box([0, 0], [2, 1]))
    # degree-5 monomial integrates exactly
    got = float(np.dot(rule.weights, rule.nodes[:, 0] ** 5))
    assert got == pytest.approx(2.0 ** 6 / 6, rel=1e-13)
    assert float(np.sum(rule.weights)) == pytest.approx(2.0)
    # one past the exactness boundary shows real error
    got8 = float(np.dot(rule.weights, rule.nodes[:, 0] ** 6))
    assert abs(got8 - 2.0 ** 7 / 7) > 1e-6


def test_G_reproduces_monomial_coefficients(rng):
    # 50 random (window, eta inside support), residual against the blossom.
    # Unit-scale knots keep the monomials bounded; the averaging box spans
    # at least a quarter of the support so the weight stays integrable in
    # floating point (the amplification grows like (h_phi/h_eta)^d).
    for _ in range(50):
        d = int(rng.integers(1, 6))
        t = np.sort(rng.uniform(0, 1, d + 2))
        while t[-1] - t[0] < 0.1:
            t = np.sort(rng.uniform(0, 1, d + 2))
        phi = TensorBSpline(knots=(tuple(float(v) for v in t),), degrees=(d,))
        width = t[-1] - t[0]
        while True:
            lo = rng.uniform(t[0], t[-1])
            hi = rng.uniform(lo, t[-1])
            if hi - lo >= 0.25 * width:
                break
        lam = build_G(phi, Box([lo], [hi]))
        for i in range(d + 1):
            g = Polynomial.from_dict(1, {(i,): 1.0})
            want = blossom(g, phi)
            got = apply_functional(lam, lambda X: X[:, 0] ** i)
            assert abs(got - want) <= 1e-10


def test_G_biorthogonal_univariate():
    from boxqi.spaces import build_tps, assign_functionals

    sp = build_tps([open_uniform(0, 1, 5, 3)], degrees=(3,))
    Q = assign_functionals(sp)
    for i, lam in enumerate(Q.functionals):
        for j, gen in enumerate(sp.generators):
            kn = gen.shape.knots[0]
            val = apply_functional(
                lam, lambda X: np.array([bspline_eval(kn, 3, x) for x in X[:, 0]]),
                mesh=sp.mesh)
            assert abs(val - (1.0 if i == j else 0.0)) < 1e-10


def test_apply_functional_zero_and_constant():
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    lam = build_G(phi, Box([0.5], [2.5]))
    assert apply_functional(lam, lambda X: np.zeros(X.shape[0])) == 0.0
    # constants reproduce the constant's coefficient, which is 1
    assert apply_functional(lam, lambda X: np.ones(X.shape[0])) == pytest.approx(1.0, abs=1e-12)


def test_functional_norm_bound_pin():
    # eta equal to the support, p = inf, univariate: (d+1) * ||Hinv||_inf
    for d in (1, 2, 3):
        t = tuple(float(v) for v in range(d + 2))
        phi = TensorBSpline(knots=(t,), degrees=(d,))
        lam = build_G(phi, Box([t[0]], [t[-1]]))
        bound = functional_norm_bound(lam, np.inf)
        assert bound == pytest.approx((d + 1) * hilbert_inverse_inf_norm(d))


def test_functional_norm_bound_shrinking_eta():
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    wide = functional_norm_bound(build_G(phi, Box([0.0], [3.0])), np.inf)
    half = functional_norm_bound(build_G(phi, Box([0.0], [1.5])), np.inf)
    assert half == pytest.approx(wide * 2.0 ** 2)


def test_norm_bound_dominates_samples(rng):
    # |lambda(f)| <= bound/||phi||_p on ||f||_p = 1 samples (p = inf)
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    lam = build_G(phi, Box([0.5], [2.5]))
    from boxqi.bspline import norm_bounds
    bound = functional_norm_bound(lam, np.inf)
    for _ in range(20):
        c = rng.standard_normal(4)
        f = lambda X: np.cos(c[0] + c[1] * X[:, 0]) * np.tanh(c[2] + c[3] * X[:, 0])
        xs = np.linspace(0.5, 2.5, 301)
        sup = np.max(np.abs(f(xs[:, None])))
        val = abs(apply_functional(lam, f))
        lo_phi, _ = norm_bounds(phi, np.inf)
        assert val <= bound * sup / lo_phi * (1 + 1e-9)


def test_lr_duals_unfold():
    # two functions where the second one splits into the first:
    # lambda_0 = G_0 - c * lambda_1 unfolds to z-weights {0: 1, 1: -c}
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    psi = TensorBSpline(knots=((0.0, 1.5, 2.0, 3.0),), degrees=(2,))
    G0 = build_G(psi, Box([0.0], [3.0]))
    G1 = build_G(phi, Box([0.0], [3.0]))
    lams, z = lr_duals([G0, G1], [[(1, 0.75)], []])
    assert z[1] == {1: 1.0}
    assert z[0][0] == pytest.approx(1.0)
    assert z[0][1] == pytest.approx(-0.75)


def test_weight_values_match_exact(rng):
    # longdouble Horner agrees with exact rational evaluation of the weight
    from boxqi.functionals import GFunctional
    d = 4
    t = np.sort(rng.uniform(0, 2, d + 2))
    t = t + np.linspace(0, 0.5, d + 2)  # force distinct knots
    phi = TensorBSpline(knots=(tuple(float(v) for v in t),), degrees=(d,))
    lam = build_G(phi, Box([t[0]], [t[-1]]))
    xs = rng.uniform(t[0], t[-1], 30)
    fast = lam.weight_values(xs[:, None])
    exact = []
    for x in xs:
        acc = Fraction(0)
        xf = (Fraction(float(x)) - Fraction(float(t[0]))) / (
            Fraction(float(t[-1])) - Fraction(float(t[0])))
        for c in reversed(lam.exact_weights[0]):
            acc = acc * xf + c
        exact.append(float(acc))
    scale = np.max(np.abs(exact)) + 1.0
    assert np.max(np.abs(fast - np.array(exact))) < 1e-14 * scale
