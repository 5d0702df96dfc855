import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import arrangements, nonempty_arrangements
from freearr import catalog
from freearr.arrangement import Arrangement, boolean, deletion, product, rank, restrict_to_hyperplane
from freearr.errors import OracleTooLarge
from freearr.lattice import (
    NonSplitting,
    build_lattice,
    char_poly,
    char_poly_whitney,
    divides,
    format_factored,
    format_poly,
    from_roots,
    integer_root_multiset,
    poly_eval,
    poly_mul,
    poly_sub,
    rank2_flats,
)


def test_boolean_lattice():
    L = build_lattice(boolean(2))
    assert L.flat_counts() == [1, 2, 1]
    assert L.moebius == [[1], [-1, -1], [1]]


def test_empty_lattice():
    L = build_lattice(Arrangement.empty(3))
    assert L.num_flats() == 1
    assert char_poly(Arrangement.empty(3)) == (0, 0, 0, 1)


def test_example_4_1_flat_counts_match_brute_force():
    A = catalog.example_4_1()[0]
    assert build_lattice(A).flat_counts() == oracles.brute_force_flat_counts(A.normals, A.dim)


def test_example_4_1_chis():
    A, A1, A2 = catalog.example_4_1()
    assert char_poly(A) == from_roots((1, 3, 3, 4))
    assert char_poly(A1) == from_roots((1, 3, 3, 3))
    assert char_poly(A2) == from_roots((1, 3, 3))
    assert char_poly_whitney(A1) == from_roots((1, 3, 3, 3))


def test_whitney_small_examples():
    assert char_poly_whitney(boolean(2)) == from_roots((1, 1))
    three_lines = Arrangement(2, ((1, 0), (0, 1), (1, 1)))
    assert char_poly_whitney(three_lines) == from_roots((1, 2))
    assert oracles.whitney_chi(three_lines.normals, 2) == from_roots((1, 2))


def test_whitney_bound():
    with pytest.raises(OracleTooLarge):
        char_poly_whitney(catalog.arr_A())


def test_catalog_exponents_from_chi():
    assert integer_root_multiset(char_poly(catalog.arr_A())) == (1, 5, 5, 5, 5, 5, 6)
    assert integer_root_multiset(char_poly(catalog.arr_B())) == (1, 5, 5, 5, 5, 5, 5)
    assert integer_root_multiset(char_poly(catalog.arr_C())) == (1, 5, 5, 5, 6)
    assert integer_root_multiset(char_poly(catalog.arr_D())) == (1, 5, 5, 5, 5)
    assert integer_root_multiset(char_poly(catalog.arr_Dpp())) == (1, 5, 5, 5)


def test_integer_roots():
    assert integer_root_multiset(from_roots((1, 3, 3, 4))) == (1, 3, 3, 4)
    res = integer_root_multiset((1, 0, 1))
    assert isinstance(res, NonSplitting) and not res
    assert res.residual == (1, 0, 1)
    res = integer_root_multiset(poly_mul((1, 0, 1), (-2, 1)))
    assert res.roots == (2,) and res.residual == (1, 0, 1)
    with pytest.raises(ValueError):
        integer_root_multiset((1, 2))


@given(st.lists(st.integers(-6, 6), max_size=6))
def test_integer_roots_recover_products(roots):
    assert integer_root_multiset(from_roots(roots)) == tuple(sorted(roots))


def test_divides_examples():
    assert divides(from_roots((1, 3, 3)), from_roots((1, 3, 3, 3)))
    assert divides(from_roots((1, 3, 3)), from_roots((1, 3, 3, 4)))
    assert not divides((-2, 1), from_roots((1, 1, 1)))
    assert not divides((0, 2), (1, 1))


def test_formatting():
    assert format_poly(from_roots((1, 3))) == "t^2 - 4*t + 3"
    assert format_factored((0, 1, 3, 3)) == "t*(t - 1)*(t - 3)^2"


def test_rank2_flats_of_three_lines():
    A = Arrangement(3, ((1, 0, 0), (0, 1, 0), (1, 1, 0), (0, 0, 1)))
    sizes = sorted(bin(m).count("1") for m in rank2_flats(A))
    assert sizes == [2, 2, 2, 3]


# -- properties -------------------------------------------------------------------

@given(arrangements(max_size=7))
def test_chi_matches_whitney_oracle(A):
    assert char_poly(A) == oracles.whitney_chi(A.normals, A.dim)


@given(arrangements(max_dim=3, max_size=6))
def test_flat_counts_match_brute_force(A):
    assert build_lattice(A).flat_counts() == oracles.brute_force_flat_counts(A.normals, A.dim)


@given(nonempty_arrangements(max_size=8), st.data())
def test_deletion_restriction_recursion(A, data):
    h = data.draw(st.sampled_from(A.normals))
    lhs = char_poly(A)
    rhs = poly_sub(char_poly(deletion(A, h)), char_poly(restrict_to_hyperplane(A, h)))
    assert lhs == rhs


@given(arrangements(max_dim=3, max_size=5), arrangements(max_dim=3, max_size=5))
def test_product_formula(A1, A2):
    assert char_poly(product(A1, A2)) == poly_mul(char_poly(A1), char_poly(A2))


@given(arrangements(max_size=8))
def test_chi_invariants(A):
    chi = char_poly(A)
    ell = A.dim
    assert len(chi) == ell + 1 and chi[-1] == 1
    if ell:
        assert chi[ell - 1] == -len(A)
    assert all(c == 0 for c in chi[:ell - rank(A)])
    if len(A):
        assert poly_eval(chi, 1) == 0


@given(arrangements(max_dim=3, max_size=7))
def test_moebius_sums_vanish(A):
    L = build_lattice(A)
    flats = [(m, mu) for ms, mus in zip(L.masks, L.moebius) for m, mu in zip(ms, mus)]
    assert L.masks[0] == [0] and L.moebius[0] == [1]
    if L.rank >= 1:
        assert L.moebius[1] == [-1] * len(L.masks[1])
    for m, _ in flats:
        if m:
            assert sum(mu for y, mu in flats if y & ~m == 0) == 0
