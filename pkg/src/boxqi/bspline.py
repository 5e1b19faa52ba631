"""Univariate and tensor-product B-splines.

A single B-spline of degree d is determined by d+2 nondecreasing knots.
Evaluation follows the Cox-de Boor recursion with a one-sided convention:
values are right-continuous limits except at the B-spline's own right
support endpoint, where the left limit is taken; the same side is used
uniformly through the derivative recursion.  This makes partition of unity
hold pointwise on closed domains; the single exception is an interior knot
of multiplicity d+1, where no one-sided convention can fix both sides.

The module also provides knot insertion (phi = a*phat + b*ptilde), the
minimal-knot-difference regularity diagnostics, closed-form p-norm bounds,
the strict nesting order between same-degree B-splines with its expansion
coefficient, and dense basis/derivative matrices over open knot vectors for
the tensor-product evaluation paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .boxmesh import Box


def _resolve_side(knots, x, side):
    if side is not None:
        return side
    return "left" if x == knots[-1] else "right"


def bspline_eval(knots, d, x, side=None):
    """Value at x of the degree-d B-spline on d+2 knots."""
    knots = tuple(knots)
    if len(knots) != d + 2:
        raise ValueError("need d+2 knots for a single B-spline")
    if x < knots[0] or x > knots[-1]:
        return 0.0
    side = _resolve_side(knots, x, side)
    N = [0.0] * (d + 1)
    for i in range(d + 1):
        a, b = knots[i], knots[i + 1]
        if side == "right":
            N[i] = 1.0 if a <= x < b else 0.0
        else:
            N[i] = 1.0 if a < x <= b else 0.0
    for k in range(1, d + 1):
        for i in range(d + 1 - k):
            acc = 0.0
            den = knots[i + k] - knots[i]
            if den > 0.0:
                acc += (x - knots[i]) / den * N[i]
            den = knots[i + k + 1] - knots[i + 1]
            if den > 0.0:
                acc += (knots[i + k + 1] - x) / den * N[i + 1]
            N[i] = acc
    return N[0]


def bspline_derivative(knots, d, x, order, side=None):
    """order-th one-sided derivative at x (order 0 = value).

    The side is fixed once from the outermost knot vector so every term of
    the derivative recursion is taken as the same one-sided limit.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    knots = tuple(knots)
    if x < knots[0] or x > knots[-1]:
        return 0.0
    side = _resolve_side(knots, x, side)
    if order == 0:
        return bspline_eval(knots, d, x, side)
    if order > d:
        return 0.0
    out = 0.0
    den = knots[d] - knots[0]
    if den > 0.0:
        out += d / den * bspline_derivative(knots[:-1], d - 1, x, order - 1, side)
    den = knots[d + 1] - knots[1]
    if den > 0.0:
        out -= d / den * bspline_derivative(knots[1:], d - 1, x, order - 1, side)
    return out


def bspline_integral(knots, d):
    """Exact integral h/(d+1)."""
    return (knots[-1] - knots[0]) / (d + 1)


def knot_insert(knots, d, tbar):
    """Split one B-spline at tbar: phi = a*phat + b*ptilde.

    phat drops the last knot and inserts tbar, ptilde drops the first;
    a and b are clamped to 1 when tbar falls beyond the inner knot that
    normally scales them, so a, b in (0, 1] always.
    """
    knots = tuple(knots)
    if not (knots[0] < tbar < knots[-1]):
        raise ValueError("tbar must lie strictly inside the support")
    hat = tuple(sorted(knots[:-1] + (tbar,)))
    tilde = tuple(sorted(knots[1:] + (tbar,)))
    den = knots[d] - knots[0]
    a = 1.0 if den <= 0.0 else min(1.0, (tbar - knots[0]) / den)
    den = knots[-1] - knots[1]
    b = 1.0 if den <= 0.0 else min(1.0, (knots[-1] - tbar) / den)
    return a, hat, b, tilde


def knot_mult(knots, v):
    return sum(1 for t in knots if t == v)


def _expand_to_fixpoint(coeffs, d, target_mults):
    """Repeatedly split windows that are missing a target knot strictly
    inside their open support, accumulating insertion coefficients."""
    values = sorted(target_mults)
    while True:
        out = {}
        changed = False
        for w, c in coeffs.items():
            t = None
            for v in values:
                if w[0] < v < w[-1] and knot_mult(w, v) < target_mults[v]:
                    t = v
                    break
            if t is None:
                out[w] = out.get(w, 0.0) + c
            else:
                a, hat, b, tilde = knot_insert(w, d, t)
                out[hat] = out.get(hat, 0.0) + c * a
                out[tilde] = out.get(tilde, 0.0) + c * b
                changed = True
        coeffs = out
        if not changed:
            return coeffs


def refine_expand(window, d, target_mults):
    """Coefficients of the B-spline on `window` over the consecutive windows
    of the refined knot sequence whose multiplicities are target_mults."""
    return _expand_to_fixpoint({tuple(window): 1.0}, d, dict(target_mults))


def refine_expand_by_events(window, d, events):
    """Same expansion but driven by an ordered list of single insertions;
    the final dictionary does not depend on the order of `events`."""
    coeffs = {tuple(window): 1.0}
    running = {}
    for t in events:
        running[t] = running.get(t, 0) + 1
        coeffs = _expand_to_fixpoint(coeffs, d, running)
    return coeffs


@dataclass(frozen=True)
class TensorBSpline:
    """Tensor product of univariate B-splines, one knot window per axis."""

    knots: tuple  # tuple of per-axis knot tuples, each of length d_i + 2
    degrees: tuple

    def __post_init__(self):
        if len(self.knots) != len(self.degrees):
            raise ValueError("one knot vector per axis required")
        for kv, d in zip(self.knots, self.degrees):
            if len(kv) != d + 2:
                raise ValueError("need d+2 knots per axis")
            if any(kv[i] > kv[i + 1] for i in range(len(kv) - 1)):
                raise ValueError("knots must be nondecreasing")
            if not kv[-1] > kv[0]:
                raise ValueError("empty support")

    @property
    def n(self):
        return len(self.degrees)

    @cached_property
    def support(self):
        return Box([kv[0] for kv in self.knots], [kv[-1] for kv in self.knots])

    def h(self):
        return np.array([kv[-1] - kv[0] for kv in self.knots])

    def value(self, x):
        out = 1.0
        for kv, d, xi in zip(self.knots, self.degrees, x):
            out *= bspline_eval(kv, d, xi)
            if out == 0.0:
                return 0.0
        return out

    def deriv(self, x, sigma):
        out = 1.0
        for kv, d, xi, s in zip(self.knots, self.degrees, x, sigma):
            out *= bspline_derivative(kv, d, xi, s)
            if out == 0.0:
                return 0.0
        return out

    def values(self, X):
        X = np.asarray(X, dtype=float)
        return np.array([self.value(row) for row in np.atleast_2d(X)])

    def integral(self):
        out = 1.0
        for kv, d in zip(self.knots, self.degrees):
            out *= bspline_integral(kv, d)
        return out


def knot_differences(phi, i, k):
    """Minimal k-step knot difference along axis i."""
    kv = phi.knots[i]
    d = phi.degrees[i]
    if not (1 <= k <= d + 1):
        raise ValueError("k must lie in 1..d+1")
    return min(kv[l] - kv[l - k] for l in range(k, d + 2))


def knot_regularity(phi, sigma):
    """max over axes of Delta_{d+1} / Delta_{d-sigma+1}; inf on a zero
    denominator (a knot repeated often enough that the ratio degenerates)."""
    worst = 1.0
    for i, s in enumerate(sigma):
        d = phi.degrees[i]
        if s < 0 or s > d:
            raise ValueError("sigma must satisfy 0 <= sigma <= degree")
        if s == 0:
            continue
        num = knot_differences(phi, i, d + 1)
        den = knot_differences(phi, i, d - s + 1)
        worst = max(worst, math.inf if den == 0.0 else num / den)
    return worst


def norm_bounds(phi, p):
    """Closed-form sandwich h^{1/p}/(d+1) <= ||phi||_p <= h^{1/p}/(d+1)^{1/p},
    multiplied across axes."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError("p must lie in [1, inf]")
    ip = 0.0 if math.isinf(p) else 1.0 / p
    lower = upper = 1.0
    for kv, d in zip(phi.knots, phi.degrees):
        h = kv[-1] - kv[0]
        lower *= h**ip / (d + 1)
        upper *= h**ip / (d + 1) ** ip
    return lower, upper


def derivative_sup_bound(phi, sigma):
    """Upper bound for sup |partial^sigma phi| from the minimal knot
    differences: prod_i d_i! 2^{sigma_i}/(d_i-sigma_i)! prod_k Delta_{i,k}^{-1}."""
    out = 1.0
    for i, s in enumerate(sigma):
        d = phi.degrees[i]
        if s == 0:
            continue
        if s > d:
            return 0.0
        fac = math.factorial(d) * 2**s / math.factorial(d - s)
        for k in range(d + 1 - s, d + 1):
            delta = knot_differences(phi, i, k)
            if delta == 0.0:
                return math.inf
            fac /= delta
        out *= fac
    return out


def nesting_relation(phi, psi):
    """If phi is reachable from psi by repeated knot insertion, the total
    expansion coefficient of phi in psi's refinement (in (0,1]); else None.

    Computed per axis by merging both knot multisets and expanding psi over
    the merged sequence; phi must then appear as a consecutive window with a
    positive coefficient on every axis.
    """
    if phi.degrees != psi.degrees:
        raise ValueError("nesting requires equal degrees")
    c = 1.0
    for axis in range(phi.n):
        kphi = phi.knots[axis]
        kpsi = psi.knots[axis]
        d = phi.degrees[axis]
        if kphi[0] < kpsi[0] or kphi[-1] > kpsi[-1]:
            return None
        target = {}
        for v in set(kphi) | set(kpsi):
            target[v] = max(knot_mult(kphi, v), knot_mult(kpsi, v))
        coeffs = refine_expand(kpsi, d, target)
        beta = coeffs.get(tuple(kphi))
        if beta is None or beta <= 0.0:
            return None
        c *= beta
    return c


# ---------------------------------------------------------------------------
# open knot vectors


def validate_open_knots(knots, d):
    """(d+1)-open knot vector: boundary knots repeated d+1 times, every
    window nonempty."""
    t = np.asarray(knots, dtype=float)
    s = t.size - d - 1
    if s < d + 1:
        raise ValueError("too few knots for an open vector")
    if np.any(np.diff(t) < 0):
        raise ValueError("knots must be nondecreasing")
    if t[0] != t[d] or t[s] != t[-1]:
        raise ValueError("boundary knots must repeat d+1 times")
    if np.any(t[d + 1 :] <= t[:s]):
        raise ValueError("found a zero-width B-spline window")
    return t, s


def open_windows(knots, d):
    """The s = len(knots)-d-1 knot windows of an open vector."""
    t = tuple(float(v) for v in knots)
    s = len(t) - d - 1
    return [t[j : j + d + 2] for j in range(s)]


def _nonzero_basis(t, k, xs, spans):
    """Triangle of the k+1 B-splines of degree k that are nonzero at each x
    (vectorized form of the classic one-point algorithm)."""
    npts = xs.size
    N = np.zeros((npts, k + 1))
    N[:, 0] = 1.0
    left = np.empty((npts, k))
    right = np.empty((npts, k))
    for j in range(1, k + 1):
        left[:, j - 1] = xs - t[spans + 1 - j]
        right[:, j - 1] = t[spans + j] - xs
        saved = np.zeros(npts)
        for r in range(j):
            den = right[:, r] + left[:, j - 1 - r]
            temp = np.where(den > 0.0, N[:, r] / np.where(den > 0.0, den, 1.0), 0.0)
            N[:, r] = saved + right[:, r] * temp
            saved = left[:, j - 1 - r] * temp
        N[:, j] = saved
    return N


def basis_matrix(knots, d, xs, nu=0):
    """Dense matrix of the nu-th derivatives of all B-splines of an open
    knot vector at the points xs: shape (len(xs), s).

    Points are clamped into the domain span structure, which realises the
    right-continuous convention with a left limit at the right end.
    """
    t, s = validate_open_knots(knots, d)
    xs = np.asarray(xs, dtype=float).ravel()
    if nu > d:
        return np.zeros((xs.size, s))
    k = d - nu
    spans = np.clip(np.searchsorted(t, xs, side="right") - 1, d, s - 1)
    tri = _nonzero_basis(t, k, xs, spans)
    dense = np.zeros((xs.size, s + nu))
    rows = np.repeat(np.arange(xs.size), k + 1)
    cols = (spans[:, None] - k + np.arange(k + 1)).ravel()
    np.add.at(dense, (rows, cols.clip(0, s + nu - 1)), tri.ravel())
    outside = (xs < t[0]) | (xs > t[-1])
    if np.any(outside):
        dense[outside] = 0.0
    for j in range(nu):
        deg = d - nu + 1 + j  # map degree deg-1 coefficients down from deg
        m = s + nu - 1 - j
        W = np.zeros((m + 1, m))
        for i in range(m + 1):
            den = t[i + deg] - t[i]
            if den > 0.0:
                if i < m:
                    W[i, i] = deg / den
                if i > 0:
                    W[i, i - 1] = -deg / den
        dense = dense @ W
    return dense
