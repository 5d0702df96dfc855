from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import arrangements, nonempty_arrangements
from freearr import catalog
from freearr.arrangement import (
    Arrangement,
    boolean,
    canonicalize,
    deletion,
    essentialize,
    flat_from_hyperplanes,
    localization,
    product,
    rank,
    restrict_to_hyperplane,
    restriction,
    transform,
    triple,
    whole_space,
)
from freearr.errors import InvalidHyperplane, NotAFlat, NotMember
from freearr.arrangement import Flat
from freearr.iso import matroid_isomorphic


@pytest.mark.parametrize("v, want", [
    ((2, -4, 6), (1, -2, 3)),
    ((0, 0, 5), (0, 0, 1)),
    ((-1, 1, 0), (1, -1, 0)),
    ((Fraction(1, 2), Fraction(-1, 3)), (3, -2)),
])
def test_canonicalize_examples(v, want):
    assert canonicalize(v) == want


def test_canonicalize_zero_vector():
    with pytest.raises(InvalidHyperplane):
        canonicalize((0, 0, 0))


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=5).filter(any), st.integers(-7, 7).filter(bool))
def test_canonicalize_scalar_invariant_and_idempotent(v, c):
    h = canonicalize(v)
    assert canonicalize([c * x for x in v]) == h
    assert canonicalize(h) == h


def test_deletion_of_A_and_B():
    A = catalog.arr_A()
    assert len(deletion(A, catalog.X1)) == 31
    assert deletion(A, catalog.X3_PLUS_X4).same_hyperplanes(catalog.arr_B())


def test_deletion_to_empty_and_not_member():
    A = Arrangement(3, ((1, 0, 0),))
    assert deletion(A, (1, 0, 0)) == Arrangement.empty(3)
    with pytest.raises(NotMember):
        deletion(A, (0, 1, 0))


def test_localization_conventions():
    A = boolean(3)
    assert len(localization(A, whole_space(A))) == 0
    X = flat_from_hyperplanes(A, [(1, 0, 0)])
    assert (1, 0, 0) in localization(A, X)
    B = catalog.arr_B()
    assert set(localization(B, catalog.flat_Y()).normals) == {catalog.X1, catalog.H_PRIME, catalog.X6}


def test_restriction_examples():
    A = boolean(3)
    R = restriction(A, flat_from_hyperplanes(A, [(1, 0, 0)]))
    assert R.dim == 2 and len(R) == 2
    assert restriction(A, whole_space(A)).same_hyperplanes(A)
    assert len(restriction(catalog.arr_A(), catalog.flat_Z())) == 22


def test_not_a_flat():
    A = Arrangement(3, ((1, 0, 0), (0, 1, 0)))
    with pytest.raises(NotAFlat):
        restriction(A, Flat(3, ((1, 1, 0),)))


def test_product_examples():
    assert product(Arrangement.empty(2), Arrangement.empty(3)) == Arrangement.empty(5)
    P = product(Arrangement(1, ((1,),)), Arrangement(1, ((1,),)))
    assert P.dim == 2 and len(P) == 2


def test_triples():
    A, A1, A2 = triple(boolean(2), (1, 0))
    assert len(A1) == 1 and A2.dim == 1 and len(A2) == 1
    C = catalog.arr_C()
    _, C1, _ = triple(C, catalog.C_X1_PLUS_X2)
    assert C1.same_hyperplanes(catalog.arr_D())
    A, A1, A2 = catalog.example_4_1()
    assert (len(A), len(A1)) == (11, 10)
    with pytest.raises(NotMember):
        triple(A, (1, 1, 1, 1))


def test_rank_examples():
    assert rank(Arrangement.empty(4)) == 0
    assert rank(boolean(5)) == 5
    assert rank(catalog.arr_A()) == 7


@given(arrangements(max_dim=3, max_size=5), arrangements(max_dim=3, max_size=5), st.data())
def test_product_restriction_law(A1, A2, data):
    P = product(A1, A2)
    assert len(P) == len(A1) + len(A2)
    if not len(A1):
        return
    h = data.draw(st.sampled_from(A1.normals))
    lhs = restrict_to_hyperplane(P, h + (0,) * A2.dim)
    rhs = product(restrict_to_hyperplane(A1, h), A2)
    assert lhs.same_hyperplanes(rhs)


@given(arrangements(max_size=6))
def test_essentialize_preserves_size_and_lattice(A):
    E, k = essentialize(A)
    assert len(E) == len(A)
    assert k == A.dim - rank(A)
    assert rank(E) == E.dim
    assert matroid_isomorphic(A, E) is not None


@given(nonempty_arrangements(max_size=6), st.data())
def test_restriction_rank_and_dim(A, data):
    h = data.draw(st.sampled_from(A.normals))
    R = restrict_to_hyperplane(A, h)
    assert R.dim == A.dim - 1
    assert rank(R) <= rank(A) - 1
    assert len(R) <= len(A) - 1


@given(arrangements(max_dim=3, max_size=5))
def test_transform_by_identity(A):
    I = [[int(i == j) for j in range(A.dim)] for i in range(A.dim)]
    if A.dim:
        assert transform(A, I).same_hyperplanes(A)
