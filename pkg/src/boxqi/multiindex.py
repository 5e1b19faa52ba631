"""Multi-index arithmetic and finite downward-closed index sets.

Multi-indices are plain tuples of nonnegative ints; index sets are Python
sets of such tuples together with an ambient dimension ``n``.  The two
families of derivative index sets used by the error bounds (total-degree
and per-axis "reduced" sets) are built here, each paired with its symbolic
exponent vector ``gamma(q)``.
"""

from __future__ import annotations

import math
from itertools import product


def mi_binomial(alpha, beta):
    """Product of componentwise binomial coefficients C(alpha_i, beta_i)."""
    if len(alpha) != len(beta):
        raise ValueError("dimension mismatch")
    if any(b > a or b < 0 for a, b in zip(alpha, beta)):
        raise ValueError("beta must satisfy 0 <= beta <= alpha componentwise")
    out = 1
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


def mi_factorial(alpha):
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def vec_pow(a, b):
    """prod_i a_i ** b_i.

    Rejects 0 raised to a negative power and negative bases with
    non-integer exponents; 0**0 counts as 1.
    """
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        raise ValueError("dimension mismatch")
    out = 1.0
    for ai, bi in zip(a, b):
        ai = float(ai)
        bi = float(bi)
        if ai == 0.0 and bi < 0.0:
            raise ZeroDivisionError("0 raised to a negative power")
        if ai < 0.0 and bi != round(bi):
            raise ValueError("negative base with non-integer exponent")
        out *= ai**bi
    return out


def mi_leq(alpha, beta):
    """alpha <= beta componentwise."""
    return all(a <= b for a, b in zip(alpha, beta))


def is_downward_closed(A, n):
    """True iff beta in A and k <= beta imply k in A.

    Only immediate predecessors need checking.
    """
    A = set(A)
    for alpha in A:
        if len(alpha) != n:
            raise ValueError("member dimension mismatch")
        for i in range(n):
            if alpha[i] > 0:
                down = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1 :]
                if down not in A:
                    return False
    return True


def index_set_translate(A, sigma):
    """{alpha - sigma : alpha in A, alpha >= sigma}; may be empty."""
    sigma = tuple(sigma)
    return {
        tuple(a - s for a, s in zip(alpha, sigma))
        for alpha in A
        if mi_leq(sigma, alpha)
    }


def index_set_base(A, n):
    """Minimal elements of N^n \\ A for downward-closed A.

    The complement is upward closed, so beta is minimal iff every immediate
    predecessor beta - e_i lies in A.  Candidates are bounded by the
    componentwise max of A plus one.
    """
    A = set(A)
    if not is_downward_closed(A, n):
        raise ValueError("A is not downward closed")
    if not A:
        return {(0,) * n}
    caps = [max(alpha[i] for alpha in A) + 1 for i in range(n)]
    out = set()
    for beta in product(*(range(c + 1) for c in caps)):
        if beta in A:
            continue
        ok = True
        for i in range(n):
            if beta[i] > 0:
                down = beta[:i] + (beta[i] - 1,) + beta[i + 1 :]
                if down not in A:
                    ok = False
                    break
        if ok:
            out.add(beta)
    return out


def total_degree_set(m, n):
    """{alpha in N^n : |alpha| <= m}."""
    return {a for a in product(range(m + 1), repeat=n) if sum(a) <= m}


def rect_set(dvec):
    """{alpha : alpha <= dvec componentwise}."""
    return set(product(*(range(d + 1) for d in dvec)))


def _inv(q):
    q = float(q)
    if q < 1:
        raise ValueError("q must lie in [1, inf]")
    return 0.0 if math.isinf(q) else 1.0 / q


def sobolev_K(d, n, sigma):
    """Index sets K_0, K_sigma for the total-degree error bound.

    K_0 = {|k| = d+1}, K_sigma = {k >= sigma, |k| = d+1}; the exponent
    vector gamma = -(1/q, ..., 1/q) is returned as a function of q since
    q is only fixed at the point of use.
    """
    sigma = tuple(sigma)
    if sum(sigma) > d:
        raise ValueError("|sigma| must be <= d")
    K0 = {k for k in product(range(d + 2), repeat=n) if sum(k) == d + 1}
    Ks = {k for k in K0 if mi_leq(sigma, k)}

    def gamma(q):
        return (-_inv(q),) * n

    return K0, Ks, gamma


def reduced_K(dvec, sigma):
    """Per-axis index sets K_0, K_sigma for the reduced-seminorm bound.

    K_0 holds (d_i+1)·e_i; K_sigma replaces slot i of sigma by d_i+1.
    gamma(q) = -dvec - 1/q componentwise.
    """
    dvec = tuple(dvec)
    sigma = tuple(sigma)
    if not mi_leq(sigma, dvec):
        raise ValueError("sigma must be <= dvec componentwise")
    n = len(dvec)
    K0 = set()
    Ks = set()
    for i in range(n):
        e = tuple(dvec[i] + 1 if j == i else 0 for j in range(n))
        K0.add(e)
        Ks.add(tuple(dvec[i] + 1 if j == i else sigma[j] for j in range(n)))

    def gamma(q):
        iq = _inv(q)
        return tuple(-d - iq for d in dvec)

    return K0, Ks, gamma
