import numpy as np
import pytest
from scipy.interpolate import BSpline

from boxqi.bspline import (
    bspline_eval, bspline_derivative, bspline_integral, knot_insert,
    knot_mult, knot_differences, knot_regularity, norm_bounds,
    derivative_sup_bound, nesting_relation, validate_open_knots,
    open_windows, basis_matrix, TensorBSpline, refine_expand,
)
from conftest import open_uniform


def random_window(rng, d, max_mult=1):
    """d+2 nondecreasing knots with positive total width."""
    while True:
        vals = np.sort(rng.uniform(0, 4, d + 2))
        if max_mult > 1 and rng.random() < 0.5:
            j = rng.integers(1, d + 1)
            vals[j] = vals[j - 1]
        if vals[-1] - vals[0] > 0.2:
            return vals


def scipy_value(knots, d, x):
    c = np.zeros(1)
    return BSpline.basis_element(np.asarray(knots, float), extrapolate=False)(x)


def test_eval_pins():
    assert bspline_eval([0, 1, 2, 3], 2, 1.5) == pytest.approx(0.75)
    assert bspline_eval([0, 1, 2, 3], 2, -1.0) == 0.0
    assert bspline_eval([0, 1, 2, 3], 2, 5.0) == 0.0


def test_eval_matches_scipy(rng):
    for d in range(1, 6):
        for _ in range(20):
            t = random_window(rng, d)
            xs = rng.uniform(t[0] + 1e-6, t[-1] - 1e-6, 25)
            ours = np.array([bspline_eval(t, d, x) for x in xs])
            ref = scipy_value(t, d, xs)
            ref = np.nan_to_num(ref)
            assert np.max(np.abs(ours - ref)) < 1e-12


def test_derivative_order_zero_and_symmetry():
    assert bspline_derivative([0, 1, 2, 3], 2, 1.3, 0) == pytest.approx(
        bspline_eval([0, 1, 2, 3], 2, 1.3))
    # uniform quadratic peaks at the middle: zero slope
    assert bspline_derivative([0, 1, 2, 3], 2, 1.5, 1) == pytest.approx(0.0)


def test_derivative_matches_scipy(rng):
    # simple knots only: one-sided conventions differ at repeated knots
    for d in range(2, 6):
        for _ in range(10):
            t = random_window(rng, d)
            b = BSpline.basis_element(t, extrapolate=False)
            xs = rng.uniform(t[0] + 1e-6, t[-1] - 1e-6, 15)
            for order in (1, 2):
                ours = np.array([bspline_derivative(t, d, x, order) for x in xs])
                ref = np.nan_to_num(b.derivative(order)(xs))
                scale = np.max(np.abs(ref)) + 1.0
                assert np.max(np.abs(ours - ref)) < 1e-9 * scale


def test_integral_pins():
    assert bspline_integral([0, 1, 2, 3], 2) == pytest.approx(1.0)
    assert bspline_integral([0, 0, 0, 1], 2) == pytest.approx(1 / 3)


def test_integral_matches_quadrature(rng):
    from boxqi.functionals import gauss_legendre
    from boxqi.boxmesh import Box
    for d in range(1, 6):
        t = random_window(rng, d)
        total = 0.0
        for a, b in zip(np.unique(t)[:-1], np.unique(t)[1:]):
            rule = gauss_legendre(d + 1, Box([a], [b]))
            total += float(np.dot(rule.weights,
                                  [bspline_eval(t, d, x[0]) for x in rule.nodes]))
        assert total == pytest.approx(bspline_integral(t, d), abs=1e-12)


def test_knot_insert_pin():
    a, phat, b, ptilde = knot_insert([0, 1, 2, 3], 2, 1.5)
    assert a == pytest.approx(0.75) and b == pytest.approx(0.75)
    assert phat == (0, 1, 1.5, 2) and ptilde == (1, 1.5, 2, 3)


def test_knot_insert_identity(rng):
    # residual check over randomized windows and insertion sites
    for _ in range(60):
        d = int(rng.integers(1, 6))
        t = random_window(rng, d, max_mult=2)
        inner = [v for v in np.unique(t) if t[0] < v < t[-1]]
        lo, hi = t[1], t[-2]
        if hi <= lo:
            continue
        tbar = float(rng.uniform(lo, hi))
        if rng.random() < 0.3 and inner:
            tbar = float(rng.choice(inner))  # raise an existing multiplicity
        if tbar <= t[0] or tbar >= t[-1]:
            continue
        a, phat, b, ptilde = knot_insert(t, d, tbar)
        assert 0 < a <= 1 and 0 < b <= 1
        xs = np.linspace(t[0], t[-1], 100)
        res = [bspline_eval(t, d, x)
               - a * bspline_eval(phat, d, x)
               - b * bspline_eval(ptilde, d, x) for x in xs]
        assert np.max(np.abs(res)) < 1e-12


def test_knot_mult():
    assert knot_mult([0, 0, 1, 2, 2, 2], 2.0) == 3
    assert knot_mult([0, 0, 1, 2], 0.5) == 0


def test_knot_differences():
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    assert knot_differences(phi, 0, 1) == pytest.approx(1.0)
    phi2 = TensorBSpline(knots=((0.0, 0.0, 1.0, 2.0),), degrees=(2,))
    assert knot_differences(phi2, 0, 1) == pytest.approx(0.0)


def test_knot_regularity():
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    assert knot_regularity(phi, (1,)) == pytest.approx(3.0 / 2.0)
    # enough repeats zero the d-s+1 step: flagged as inf
    phi2 = TensorBSpline(knots=((0.0, 1.0, 1.0, 1.0),), degrees=(2,))
    assert np.isinf(knot_regularity(phi2, (1,)))


def quad_norm(t, d, p):
    segs = np.unique(t)
    if np.isinf(p):
        xs = np.linspace(t[0], t[-1], 3001)
        return max(bspline_eval(t, d, x) for x in xs)
    total = 0.0
    from boxqi.functionals import gauss_legendre
    from boxqi.boxmesh import Box
    for a, b in zip(segs[:-1], segs[1:]):
        rule = gauss_legendre(3 * d + 4, Box([a], [b]))
        vals = np.array([bspline_eval(t, d, x[0]) for x in rule.nodes])
        total += float(np.dot(rule.weights, np.abs(vals) ** p))
    return total ** (1.0 / p)


def test_norm_sandwich_univariate(rng):
    for _ in range(25):
        d = int(rng.integers(1, 6))
        t = random_window(rng, d)
        phi = TensorBSpline(knots=(tuple(t),), degrees=(d,))
        for p in (1, 2, np.inf):
            lo, hi = norm_bounds(phi, p)
            q = quad_norm(t, d, p)
            assert lo - 1e-8 <= q <= hi + 1e-8
            h = t[-1] - t[0]
            ip = 0.0 if np.isinf(p) else 1.0 / p
            assert lo == pytest.approx(h ** ip / (d + 1))
            assert hi == pytest.approx(h ** ip / (d + 1) ** ip)


def test_norm_bounds_tensor_product():
    phi = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0), (0.0, 2.0, 4.0, 6.0)),
                        degrees=(2, 2))
    lo, hi = norm_bounds(phi, 1)
    assert lo == pytest.approx((3 / 3) * (6 / 3))
    assert hi == pytest.approx(lo)  # p=1 bounds coincide with the integral


def test_derivative_sup_bound(rng):
    # bound dominates a lattice sup of the actual derivative
    for _ in range(10):
        d = int(rng.integers(2, 5))
        t = random_window(rng, d)
        phi = TensorBSpline(knots=(tuple(t),), degrees=(d,))
        bound = derivative_sup_bound(phi, (1,))
        xs = np.linspace(t[0], t[-1], 801)
        sup = max(abs(bspline_derivative(t, d, x, 1)) for x in xs)
        assert sup <= bound * (1 + 1e-9)


def test_nesting_relation_cases():
    # single insertion child: coefficient equals the insertion weight
    a, phat, b, ptilde = knot_insert([0, 1, 2, 3], 2, 1.5)
    parent = TensorBSpline(knots=((0.0, 1.0, 2.0, 3.0),), degrees=(2,))
    child = TensorBSpline(knots=(tuple(float(v) for v in phat),), degrees=(2,))
    c = nesting_relation(child, parent)
    assert c == pytest.approx(a)
    # support inclusion without matching knots: not nested
    stranger = TensorBSpline(knots=((0.0, 1.1, 2.0, 3.0),), degrees=(2,))
    assert nesting_relation(stranger, parent) is None
    # a function is trivially nested in itself with coefficient 1
    assert nesting_relation(parent, parent) == pytest.approx(1.0)


def test_refine_expand_partition(rng):
    # expansion coefficients reproduce the parent pointwise
    t = (0.0, 1.0, 2.0, 3.0)
    d = 2
    coeffs = refine_expand(t, d, {0.5: 1, 1.5: 1, 2.5: 1})
    xs = np.linspace(0, 3, 97)
    vals = np.zeros_like(xs)
    for window, c in coeffs.items():
        vals += c * np.array([bspline_eval(window, d, x) for x in xs])
    ref = np.array([bspline_eval(t, d, x) for x in xs])
    assert np.max(np.abs(vals - ref)) < 1e-12


def test_validate_open_knots():
    t, s = validate_open_knots(open_uniform(0, 1, 4, 2), 2)
    assert s == 6
    with pytest.raises(ValueError):
        validate_open_knots([0, 0, 0, 1, 1], 2)  # boundary short by one
    with pytest.raises(ValueError):
        validate_open_knots([0, 0, 0, 0, 0, 0, 1, 1, 1], 2)  # dead window


def test_open_windows_count():
    kv = open_uniform(0, 1, 4, 2)
    ws = open_windows(kv, 2)
    assert len(ws) == 6
    assert all(len(w) == 4 for w in ws)


def test_basis_matrix_partition_of_unity(rng):
    kv = open_uniform(0, 2, 5, 3)
    xs = rng.uniform(0, 2, 40)
    B = basis_matrix(kv, 3, xs)
    assert np.allclose(B.sum(axis=1), 1.0, atol=1e-12)
    # derivative columns sum to zero
    B1 = basis_matrix(kv, 3, xs, nu=1)
    assert np.allclose(B1.sum(axis=1), 0.0, atol=1e-10)


def test_basis_matrix_matches_pointwise(rng):
    kv = open_uniform(0, 1, 3, 2)
    ws = open_windows(kv, 2)
    xs = rng.uniform(0, 1, 20)
    B = basis_matrix(kv, 2, xs)
    for j, w in enumerate(ws):
        col = np.array([bspline_eval(w, 2, x) for x in xs])
        assert np.max(np.abs(B[:, j] - col)) < 1e-12
