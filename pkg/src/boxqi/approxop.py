"""The quasi-interpolant, averaged Taylor operators, and error measurement.

The operator applies every coefficient functional to f and sums generator
shapes.  Error norms run composite Gauss quadrature (or dense interior
lattices for the sup norm) element by element in a fixed order, with fast
tensor evaluation paths for tensor-product and hierarchical spaces.

Averaged Taylor expansion comes in two flavors: averaging against the
characteristic function of a box (needs a derivative oracle) and against a
polynomial bump with enough boundary zeros to shift all derivatives onto
the weight, which needs point values only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxmesh import Box, box_measure, box_size
from .bspline import basis_matrix
from .functionals import _leggauss, apply_functional, gauss_legendre
from .multiindex import mi_binomial, mi_factorial, vec_pow
from .spaces import THBShape


@dataclass
class FunctionOracle:
    """Point evaluator plus optional partial-derivative evaluator.

    f maps (m, n) arrays of points to (m,) values; deriv(alpha, X) does the
    same for the alpha-th partial derivative, up to total order `order`.
    """

    f: object
    deriv: object = None
    order: int = 0

    def d(self, alpha, X):
        alpha = tuple(int(a) for a in alpha)
        if all(a == 0 for a in alpha):
            return np.asarray(self.f(X), dtype=float)
        if self.deriv is None:
            raise ValueError("derivative oracle required but not provided")
        return np.asarray(self.deriv(alpha, X), dtype=float)

    def fd_check(self, box, alphas, rng, rtol=1e-4):
        """Central finite differences vs the stated derivatives at random
        interior points; the comparison tolerance absorbs the h^2 error."""
        box = Box(box.lo, box.hi)
        h = 1e-4 * float(np.min(box.hi - box.lo))
        X = rng.uniform(box.lo + 3 * h, box.hi - 3 * h, (8, box.n))
        for alpha in alphas:
            got = self.d(alpha, X)
            fd = _central_fd(self, alpha, X, h)
            scale = np.max(np.abs(fd)) + 1.0
            if np.max(np.abs(got - fd)) > rtol * scale:
                raise AssertionError(f"derivative oracle off for {alpha}")
        return True


def _central_fd(oracle, alpha, X, h):
    # nested central differences, one axis at a time
    def rec(alpha_left, pts):
        for axis, k in enumerate(alpha_left):
            if k > 0:
                a2 = list(alpha_left)
                a2[axis] -= 1
                e = np.zeros(pts.shape[1])
                e[axis] = h
                return (rec(tuple(a2), pts + e) - rec(tuple(a2), pts - e)) / (2 * h)
        return np.asarray(oracle.f(pts), dtype=float)

    return rec(tuple(int(a) for a in alpha), X)


def as_oracle(f):
    return f if isinstance(f, FunctionOracle) else FunctionOracle(f=f)


# ---------------------------------------------------------------------------
# the operator


def apply_quasi_interp(Q, f):
    """Coefficients lambda_phi(f), in generator order."""
    fo = as_oracle(f)
    if Q.space.kind == "tps":
        out = _apply_tps_grid(Q, fo)
        if out is not None:
            return out
    return np.array(
        [apply_functional(lam, fo.f, mesh=Q.space.mesh) for lam in Q.functionals]
    )


def _apply_tps_grid(Q, fo):
    """All coefficients from one shared per-element Gauss grid.

    Works when every averaging box lines up with the element grid per axis;
    returns None otherwise so the caller can take the piecewise route.
    """
    from .functionals import GFunctional

    space = Q.space
    if any(not isinstance(lam, GFunctional) for lam in Q.functionals):
        return None
    order = max(space.degrees) + 2
    gx, gw = _leggauss(order)
    breaks = [np.unique(kv) for kv in space.knot_axes]
    tol = space.mesh.eps_geom

    nodes, weights = [], []
    for b in breaks:
        mid = 0.5 * (b[:-1] + b[1:])
        half = 0.5 * (b[1:] - b[:-1])
        nodes.append((mid[:, None] + half[:, None] * gx).ravel())
        weights.append((half[:, None] * gw).ravel())

    # oracles take (m, n) point lists, so flatten the lattice and reshape
    grids = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    F = np.asarray(fo.f(pts), dtype=float).reshape([nd.size for nd in nodes])

    coeffs = np.empty(len(Q.functionals))
    for g, lam in enumerate(Q.functionals):
        block = F
        vol = 1.0
        for i, b in enumerate(breaks):
            k0 = int(np.searchsorted(b, lam.eta.lo[i] - tol))
            k1 = int(np.searchsorted(b, lam.eta.hi[i] - tol))
            if abs(b[k0] - lam.eta.lo[i]) > tol or abs(b[k1] - lam.eta.hi[i]) > tol:
                return None
            sl = slice(k0 * order, k1 * order)
            wv = lam._axis_values(i, nodes[i][sl]) * weights[i][sl]
            # contracting axis 0 brings the next axis to the front
            block = np.tensordot(block[sl], wv, axes=([0], [0]))
            vol *= float(b[k1] - b[k0])
        coeffs[g] = float(block / vol)
    return coeffs


def eval_quasi_interp(Q, coeffs, x, sigma=None):
    """Pointwise value (or sigma-th derivative) of sum c_phi phi, using the
    per-window one-sided limit conventions."""
    space = Q.space
    if sigma is None:
        sigma = (0,) * space.n
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    out = np.zeros(X.shape[0])
    plain = all(s == 0 for s in sigma)
    for c, gen in zip(coeffs, space.generators):
        if c == 0.0:
            continue
        for i, pt in enumerate(X):
            out[i] += c * (gen.shape.value(pt) if plain else gen.shape.deriv(pt, sigma))
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# fast per-element spline evaluation


def _space_eval_data(Q, coeffs):
    """Precompute whatever makes per-element evaluation cheap."""
    space = Q.space
    if space.kind == "tps":
        knots = [np.asarray(kv, dtype=float) for kv in space.knot_axes]
        counts = [kv.size - d - 1 for kv, d in zip(knots, space.degrees)]
        grid = np.asarray(coeffs, dtype=float).reshape(counts)
        return ("tensor", knots, grid)
    if space.kind == "thb":
        fine = space.generators[0].shape.fine_windows
        # recover the finest-level global knot vectors from the windows
        knots = []
        for ws in fine:
            kv = list(ws[0])
            for w in ws[1:]:
                kv.append(w[-1])
            knots.append(np.asarray(kv))
        grid = np.zeros([len(ws) for ws in fine])
        for c, gen in zip(coeffs, space.generators):
            if c == 0.0:
                continue
            for widx, wc in gen.shape.coeffs:
                grid[widx] += c * wc
        return ("tensor", knots, grid)
    return ("generic", None, None)


def _eval_tensor(knots, degrees, grid, axis_nodes, sigma):
    """Values of the tensor spline on the tensor grid of axis_nodes."""
    mats = [
        basis_matrix(kv, d, xs, nu=s)
        for kv, d, xs, s in zip(knots, degrees, axis_nodes, sigma)
    ]
    vals = grid
    for B in mats:
        vals = np.tensordot(vals, B.T, axes=([0], [0]))
    return vals  # shape: tensor of node counts


def _eval_generic(Q, coeffs, elem_idx, axis_nodes, sigma, active):
    space = Q.space
    counts = [len(a) for a in axis_nodes]
    vals = np.zeros(counts)
    from .bspline import bspline_derivative, bspline_eval

    for g in active:
        c = coeffs[g]
        if c == 0.0:
            continue
        shape = space.generators[g].shape
        if isinstance(shape, THBShape):
            raise AssertionError("hierarchical spaces use the tensor path")
        factors = []
        for a in range(space.n):
            kv = shape.knots[a]
            d = shape.degrees[a]
            s = sigma[a]
            if s == 0:
                factors.append(np.array([bspline_eval(kv, d, x) for x in axis_nodes[a]]))
            else:
                factors.append(
                    np.array([bspline_derivative(kv, d, x, s) for x in axis_nodes[a]])
                )
        term = factors[0]
        for fac in factors[1:]:
            term = np.multiply.outer(term, fac)
        vals += c * term
    return vals


# ---------------------------------------------------------------------------
# norms


def _gauss_axis_nodes(lo, hi, order):
    x, w = _leggauss(order)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _lattice_axis_nodes(lo, hi, m):
    i = np.arange(1, m + 1, dtype=float)
    return lo + (hi - lo) * i / (m + 1.0)


def _tps_norm_fast(fo, space, knots, grid, sigma, p, order, m):
    """Whole-grid norm for tensor-product spaces.

    The mesh of a tps space is the tensor grid of knot spans, so the
    per-element quadrature nodes concatenate into one tensor lattice and the
    spline needs a single banded contraction per axis instead of one dense
    contraction per element.  Chunked along the first axis to bound memory.
    """
    breaks = [np.unique(kv) for kv in knots]
    axis_nodes = []
    axis_weights = []
    for b in breaks:
        lo, hi = b[:-1], b[1:]
        if math.isinf(p):
            i = np.arange(1, m + 1, dtype=float) / (m + 1.0)
            axis_nodes.append((lo[:, None] + (hi - lo)[:, None] * i).ravel())
            axis_weights.append(None)
        else:
            x, w = _leggauss(order)
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            axis_nodes.append((mid[:, None] + half[:, None] * x).ravel())
            axis_weights.append((half[:, None] * w).ravel())

    rest = 1
    for a in axis_nodes[1:]:
        rest *= a.size
    chunk = max(1, (1 << 22) // rest)
    n0 = axis_nodes[0].size
    worst = 0.0
    total = 0.0
    for start in range(0, n0, chunk):
        sub = [axis_nodes[0][start : start + chunk]] + axis_nodes[1:]
        pts = np.stack([g.ravel() for g in np.meshgrid(*sub, indexing="ij")], axis=1)
        fvals = fo.d(sigma, pts).reshape([s.size for s in sub])
        diff = fvals - _eval_tensor(knots, space.degrees, grid, sub, sigma)
        if math.isinf(p):
            worst = max(worst, float(np.max(np.abs(diff))))
        else:
            wgrid = axis_weights[0][start : start + chunk]
            for ws in axis_weights[1:]:
                wgrid = np.multiply.outer(wgrid, ws)
            total += float(np.sum(wgrid * np.abs(diff) ** p))
    return worst if math.isinf(p) else total ** (1.0 / p)


def error_norm(f, Q, coeffs, p, sigma=None, gauss_order=None, lattice=None):
    """||partial^sigma (f - aleph f)||_p over the space's mesh.

    p < inf: composite tensor Gauss of per-axis order max(d)+3 per element.
    p = inf: per-element interior lattice with 2*max(d)+5 points per axis.
    Elements are visited in mesh order, so results are reproducible.
    """
    space = Q.space
    fo = as_oracle(f)
    if sigma is None:
        sigma = (0,) * space.n
    sigma = tuple(int(s) for s in sigma)
    dmax = max(space.degrees)
    kind, knots, grid = _space_eval_data(Q, coeffs)
    p_ = float(p)
    if kind == "tensor" and space.kind == "tps":
        order = gauss_order if gauss_order is not None else dmax + 3
        m = lattice if lattice is not None else 2 * dmax + 5
        return _tps_norm_fast(fo, space, knots, grid, sigma, p_, order, m)
    if kind == "generic":
        from .boxmesh import active_sets

        A, _ = active_sets(space.mesh, space.supports(), space.esupps())

    p = float(p)
    if math.isinf(p):
        m = lattice if lattice is not None else 2 * dmax + 5
        worst = 0.0
        for i in range(len(space.mesh)):
            b = space.mesh.element(i)
            axis_nodes = [_lattice_axis_nodes(b.lo[a], b.hi[a], m) for a in range(space.n)]
            diff = _residual_on_grid(fo, Q, coeffs, kind, knots, grid, axis_nodes, sigma, i, A if kind == "generic" else None)
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    order = gauss_order if gauss_order is not None else dmax + 3
    total = 0.0
    for i in range(len(space.mesh)):
        b = space.mesh.element(i)
        axis_nodes = []
        axis_weights = []
        for a in range(space.n):
            xs, ws = _gauss_axis_nodes(b.lo[a], b.hi[a], order)
            axis_nodes.append(xs)
            axis_weights.append(ws)
        diff = _residual_on_grid(fo, Q, coeffs, kind, knots, grid, axis_nodes, sigma, i, A if kind == "generic" else None)
        wgrid = axis_weights[0]
        for ws in axis_weights[1:]:
            wgrid = np.multiply.outer(wgrid, ws)
        total += float(np.sum(wgrid * np.abs(diff) ** p))
    return total ** (1.0 / p)


def _residual_on_grid(fo, Q, coeffs, kind, knots, grid, axis_nodes, sigma, elem_idx, A):
    space = Q.space
    mesh_nodes = np.stack(
        [g.ravel() for g in np.meshgrid(*axis_nodes, indexing="ij")], axis=1
    )
    fvals = fo.d(sigma, mesh_nodes).reshape([len(a) for a in axis_nodes])
    if kind == "tensor":
        svals = _eval_tensor(knots, space.degrees, grid, axis_nodes, sigma)
    else:
        svals = _eval_generic(Q, coeffs, elem_idx, axis_nodes, sigma, A[elem_idx])
    return fvals - svals


def rhs_seminorm(f, mesh, h_field, K, sigma, p, q, gauss_order=None, lattice=None):
    """Sum over k in K of || rho_k * d^k f ||_q.

    h_field is either a list with, per element, the (count, n) array of
    extended-support sizes over E_omega (the weight is then the
    componentwise max of the powered sizes), or an (m, n) array of collapsed
    per-element sizes used directly.  The exponent is k - sigma + nu_- * 1
    with nu = 1/p - 1/q.
    """
    fo = as_oracle(f)
    sigma = np.asarray(sigma, dtype=int)
    ip = 0.0 if math.isinf(float(p)) else 1.0 / float(p)
    iq = 0.0 if math.isinf(float(q)) else 1.0 / float(q)
    nu_minus = min(ip - iq, 0.0)
    n = mesh.n
    collapsed = isinstance(h_field, np.ndarray) and h_field.ndim == 2

    def rho(k, i):
        e = np.asarray(k, dtype=float) - sigma + nu_minus
        if collapsed:
            return float(np.prod(vec_pow(h_field[i], e)))
        powered = [np.prod(vec_pow(hs, e)) for hs in h_field[i]]
        return float(np.max(powered))

    q = float(q)
    total = 0.0
    if math.isinf(q):
        m = lattice if lattice is not None else 9
        for k in K:
            worst = 0.0
            for i in range(len(mesh)):
                b = mesh.element(i)
                axis_nodes = [_lattice_axis_nodes(b.lo[a], b.hi[a], m) for a in range(n)]
                pts = np.stack(
                    [g.ravel() for g in np.meshgrid(*axis_nodes, indexing="ij")], axis=1
                )
                worst = max(worst, rho(k, i) * float(np.max(np.abs(fo.d(k, pts)))))
            total += worst
        return total

    order = gauss_order if gauss_order is not None else 6
    for k in K:
        acc = 0.0
        for i in range(len(mesh)):
            rule = gauss_legendre(order, mesh.element(i))
            vals = fo.d(k, rule.nodes)
            acc += rho(k, i) ** q * float(np.dot(np.abs(vals) ** q, rule.weights))
        total += acc ** (1.0 / q)
    return total


# ---------------------------------------------------------------------------
# averaged Taylor expansion


def taylor_weight_constant(eta):
    """Constant unit-mass weight on the box."""
    inv = 1.0 / box_measure(eta)

    def w(alpha, Y):
        if any(alpha):
            raise ValueError("constant weight has no derivatives to take")
        return np.full(Y.shape[0], inv)

    return w


def bump_coeff_c(mvec):
    """Normalizer of prod u^m (1-u)^m on the unit box."""
    c = 1.0
    for m in mvec:
        c *= math.factorial(2 * m + 1) / math.factorial(m) ** 2
    return c


def taylor_weight_bump(eta, mvec):
    """Polynomial bump with zeros of order m_i at the faces, unit mass."""
    size = box_size(eta)
    inv = 1.0 / box_measure(eta)
    c = bump_coeff_c(mvec)
    polys = []
    from numpy.polynomial import polynomial as npoly

    for m in mvec:
        base = npoly.polymul(
            npoly.polypow([0.0, 1.0], m), npoly.polypow([1.0, -1.0], m)
        )
        polys.append(base)

    def w(alpha, Y):
        out = np.full(Y.shape[0], c * inv)
        for a, (m, k) in enumerate(zip(mvec, alpha)):
            u = (Y[:, a] - eta.lo[a]) / size[a]
            pk = polys[a]
            for _ in range(int(k)):
                pk = npoly.polyder(pk)
            out *= npoly.polyval(u, pk) / size[a] ** k
        return out

    return w


def taylor_coeff(alpha, A):
    """(-1)^|alpha| sum over beta in A, beta >= alpha, of binom(beta, alpha)."""
    s = 0
    alpha = tuple(alpha)
    for beta in A:
        if all(b >= a for a, b in zip(alpha, beta)):
            s += mi_binomial(beta, alpha)
    return (-1) ** int(sum(alpha)) * s


def averaged_taylor(A, mode, eta, f, x, gauss_order=None, use_derivatives=None):
    """Taylor expansion over the index set A averaged on the box eta.

    mode picks the weight: "constant" is the normalized indicator of eta,
    "bump" a polynomial with enough boundary zeros.  The constant weight
    requires the derivative route (and hence a derivative oracle); the bump
    weight defaults to the derivative-free route that shifts all derivatives
    onto the weight, but can also run the derivative route, which gives the
    same operator and serves as a cross-check.
    """
    A = [tuple(int(a) for a in alpha) for alpha in A]
    fo = as_oracle(f)
    n = eta.n
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    maxv = [max(alpha[a] for alpha in A) for a in range(n)]

    if mode == "constant":
        if use_derivatives is False:
            raise ValueError(
                "the constant weight has no boundary zeros; the derivative-free "
                "route does not apply"
            )
        order = gauss_order if gauss_order is not None else max(maxv) + 6
        rule = gauss_legendre(order, eta)
        weight = taylor_weight_constant(eta)
    elif mode == "bump":
        mvec = [v + 1 for v in maxv]
        order = gauss_order if gauss_order is not None else 2 * (max(mvec) + 2)
        rule = gauss_legendre(order, eta)
        weight = taylor_weight_bump(eta, mvec)
    else:
        raise ValueError("mode must be 'constant' or 'bump'")

    derivative_route = True if mode == "constant" else bool(use_derivatives)
    out = np.zeros(X.shape[0])
    if derivative_route:
        wvals = weight((0,) * n, rule.nodes)
        for alpha in A:
            dvals = fo.d(alpha, rule.nodes)
            mono = _shifted_monomial(X, rule.nodes, alpha)
            out += (mono * (wvals * dvals * rule.weights)[:, None]).sum(
                axis=0
            ) / mi_factorial(alpha)
    else:
        fvals = fo.f(rule.nodes)
        for alpha in A:
            wd = weight(alpha, rule.nodes)
            mono = _shifted_monomial(X, rule.nodes, alpha)
            out += taylor_coeff(alpha, A) * (
                mono * (wd * fvals * rule.weights)[:, None]
            ).sum(axis=0) / mi_factorial(alpha)
    return float(out[0]) if single else out


def _shifted_monomial(X, Y, alpha):
    """(x - y)^alpha as a (num_y, num_x) array."""
    out = np.ones((Y.shape[0], X.shape[0]))
    for a, k in enumerate(alpha):
        if k:
            out *= (X[None, :, a] - Y[:, None, a]) ** int(k)
    return out


# ---------------------------------------------------------------------------
# Sobolev embedding region


def sobolev_region_contains(r, n, p, q):
    """Whether (1/q, 1/p) lies in the validity region for a derivative gap
    of total order r in dimension n."""
    r = int(r)
    if r >= n:
        return True
    ip = 0.0 if math.isinf(float(p)) else 1.0 / float(p)
    iq = 0.0 if math.isinf(float(q)) else 1.0 / float(q)
    tol = 1e-12
    if ip - iq + r / n < -tol:
        return False
    if abs(iq - r / n) <= tol and abs(ip - 0.0) <= tol:
        return False
    if abs(iq - 1.0) <= tol and abs(ip - (1.0 - r / n)) <= tol:
        return False
    return True
