"""Multivariate polynomials in the monomial basis, B-spline expansion
coefficients (blossoms), and the Bernstein seed generators.

The expansion coefficient of a polynomial g in a B-spline basis depends only
on g and the interior knots of each basis function.  For the monomial x^k of
degree d it equals e_k(theta_2,...,theta_{d+1}) / C(d,k) with e_k the
elementary symmetric polynomial; tensor-product coefficients apply the rule
axis by axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bspline import TensorBSpline


@dataclass(frozen=True)
class Polynomial:
    """coeffs maps exponent tuples to reals; n is the ambient dimension."""

    n: int
    coeffs: tuple  # tuple of (exponent-tuple, coefficient) pairs

    @staticmethod
    def from_dict(n, d):
        items = tuple(sorted((tuple(k), float(v)) for k, v in d.items()))
        for k, _ in items:
            if len(k) != n or any(e < 0 for e in k):
                raise ValueError("bad exponent tuple")
        return Polynomial(n, items)

    def degree_per_axis(self):
        if not self.coeffs:
            return (0,) * self.n
        return tuple(
            max(k[i] for k, _ in self.coeffs) for i in range(self.n)
        )

    def dense(self):
        """Dense coefficient tensor of shape degree+1 per axis."""
        shape = tuple(d + 1 for d in self.degree_per_axis())
        C = np.zeros(shape)
        for k, v in self.coeffs:
            C[k] += v
        return C


def poly_eval(g, x):
    """Horner evaluation; x may be a single point or an (m, n) array."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != g.n:
        raise ValueError("point dimension mismatch")
    C = g.dense()
    vals = np.broadcast_to(C, (X.shape[0],) + C.shape)
    for axis in range(g.n - 1, -1, -1):
        xi = X[:, axis].reshape((-1,) + (1,) * axis)
        acc = vals[..., -1]
        for k in range(vals.shape[-1] - 2, -1, -1):
            acc = acc * xi + vals[..., k]
        vals = acc
    return np.asarray(vals).reshape(X.shape[0])


def elementary_symmetric(values):
    """All e_0..e_m of the given values, exact for Fraction inputs."""
    if len(values) == 0:
        return [1]
    e = [values[0] * 0 + 1]  # one of the same arithmetic type
    for v in values:
        e.append(e[-1] * 0)
        for j in range(len(e) - 1, 0, -1):
            e[j] = e[j] + e[j - 1] * v
    return e


def blossom_vector(knots, d):
    """Per-axis coefficient weights: entry k is e_k(interior knots)/C(d,k)."""
    interior = [float(t) for t in knots[1 : d + 1]]
    e = elementary_symmetric(interior) if interior else [1.0]
    return np.array([e[k] / math.comb(d, k) for k in range(d + 1)])


def blossom(g, phi):
    """Expansion coefficient of the polynomial g for the tensor B-spline phi."""
    degs = g.degree_per_axis()
    if any(dg > dp for dg, dp in zip(degs, phi.degrees)):
        raise ValueError("polynomial degree exceeds the B-spline degree")
    C = g.dense()
    pad = tuple((0, phi.degrees[i] + 1 - C.shape[i]) for i in range(g.n))
    C = np.pad(C, pad)
    for i, (kv, d) in enumerate(zip(phi.knots, phi.degrees)):
        v = blossom_vector(kv, d)
        C = np.tensordot(C, v, axes=([0], [0]))
    return float(C)


def marsden_coeff(y, knots, d):
    """prod_{i=2}^{d+1} (y - theta_i): the coefficient of (y-x)^d."""
    out = 1.0
    for t in knots[1 : d + 1]:
        out *= y - t
    return out


def bernstein_generators(dvec, omega):
    """The prod(d_i+1) tensor B-splines on [a,..,a,b,..,b] knot windows."""
    dvec = tuple(int(d) for d in dvec)
    if np.any(omega.hi <= omega.lo):
        raise ValueError("domain needs nonempty interior")
    axis_windows = []
    for i, d in enumerate(dvec):
        full = (float(omega.lo[i]),) * (d + 1) + (float(omega.hi[i]),) * (d + 1)
        axis_windows.append([full[j : j + d + 2] for j in range(d + 1)])
    gens = []
    idx = np.indices([d + 1 for d in dvec]).reshape(len(dvec), -1).T
    for multi in idx:
        gens.append(
            TensorBSpline(
                tuple(axis_windows[i][j] for i, j in enumerate(multi)), dvec
            )
        )
    return gens
