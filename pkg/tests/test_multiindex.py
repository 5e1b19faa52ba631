import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxqi.multiindex import (
    mi_binomial, mi_factorial, vec_pow, mi_leq, is_downward_closed,
    index_set_translate, index_set_base, total_degree_set, rect_set,
    sobolev_K, reduced_K,
)


def test_binomial_componentwise():
    assert mi_binomial((2, 3), (1, 1)) == 6
    assert mi_binomial((4,), (0,)) == 1
    with pytest.raises(ValueError):
        mi_binomial((1, 1), (2, 0))


def test_factorial_and_pow():
    assert mi_factorial((3, 2)) == 12
    assert vec_pow((4, 9), (0.5, 0.5)) == pytest.approx(6.0)
    assert vec_pow((2, 3), (2, 1)) == pytest.approx(12.0)


def test_total_degree_and_rect_counts():
    A = total_degree_set(2, 2)
    assert len(A) == 6
    assert (0, 0) in A and (2, 0) in A and (1, 2) not in A
    R = rect_set((1, 2))
    assert len(R) == 6
    assert (1, 2) in R and (2, 0) not in R


def test_downward_closed():
    assert is_downward_closed(total_degree_set(3, 2), 2)
    assert is_downward_closed(rect_set((2, 4)), 2)
    assert not is_downward_closed({(0, 0), (2, 0)}, 2)


def test_translate():
    A = total_degree_set(2, 2)
    T = index_set_translate(A, (1, 0))
    assert T == {(0, 0), (1, 0), (0, 1)}
    assert index_set_translate({(0, 0)}, (1, 1)) == set()


def test_base_total_degree():
    # minimal elements outside {|a| <= 6} are exactly the |a| = 7 layer
    A = total_degree_set(6, 2)
    assert index_set_base(A, 2) == {(k, 7 - k) for k in range(8)}


def test_base_rect():
    A = rect_set((4, 5))
    assert index_set_base(A, 2) == {(5, 0), (0, 6)}


def test_sobolev_K_pins():
    K0, _, _ = sobolev_K(1, 1, (0,))
    assert K0 == {(2,)}
    K0, _, _ = sobolev_K(2, 2, (0, 0))
    assert len(K0) == 4
    _, Ks, _ = sobolev_K(6, 2, (2, 3))
    assert Ks == {(2, 5), (3, 4), (4, 3)}


def test_reduced_K_pins():
    K0, _, _ = reduced_K((4, 5), (0, 0))
    assert K0 == {(5, 0), (0, 6)}
    _, Ks, _ = reduced_K((4, 5), (3, 4))
    assert Ks == {(5, 4), (3, 6)}
    K0, _, _ = reduced_K((2,), (0,))
    assert K0 == {(3,)}


@given(st.integers(1, 6), st.integers(1, 3))
def test_total_degree_cardinality(m, n):
    # |{|a| <= m}| = C(m+n, n)
    import math
    assert len(total_degree_set(m, n)) == math.comb(m + n, n)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=3))
def test_base_certifies_membership(dvec):
    # alpha in A iff no base element is <= alpha
    A = rect_set(tuple(dvec))
    n = len(dvec)
    B = index_set_base(A, n)
    for alpha in rect_set(tuple(d + 1 for d in dvec)):
        below = any(mi_leq(b, alpha) for b in B)
        assert (alpha in A) == (not below)
