import random
from collections import Counter

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from conftest import arrangements, nonempty_arrangements
from freearr import catalog
from freearr.arrangement import Arrangement, boolean, deletion, essentialize, restrict_to_hyperplane
from freearr.classes import addition_step
from freearr.derivations import (
    Derivation,
    Free,
    GradedDimMismatch,
    NonSplittingChi,
    NotFree,
    SaitoIdenticallyZero,
    derivation_space,
    euler,
    free_dim_prediction,
    free_from_json,
    is_free,
    is_member,
    poly_ring,
    saito_scan,
    verify_freeness_certificate,
)
from freearr.errors import OracleTooLarge, PreconditionViolated
from freearr.lattice import char_poly, integer_root_multiset


def essential_arrangements(**kw):
    return nonempty_arrangements(**kw).map(lambda A: essentialize(A)[0]).filter(lambda A: A.dim >= 1)


def test_free_dim_prediction_examples():
    assert free_dim_prediction((1, 1), 2, 1) == 2
    assert free_dim_prediction((1, 3, 3, 4), 4, 1) == 1
    assert free_dim_prediction((1, 3, 3, 4), 4, 3) == 12


def test_derivation_space_small_degrees():
    A = boolean(3)
    assert derivation_space(A, 0) == []
    assert len(derivation_space(A, 1)) == 3
    assert is_member(A, euler(3))
    with pytest.raises(PreconditionViolated):
        derivation_space(Arrangement(3, ((1, 0, 0),)), 1)


@given(essential_arrangements(max_dim=3, max_size=6), st.integers(1, 3))
def test_derivation_space_matches_brute_force(A, d):
    space = derivation_space(A, d)
    assert len(space) == oracles.derivation_dim(A.normals, A.dim, d)
    assert all(is_member(A, theta) and theta.degree == d for theta in space)


@given(nonempty_arrangements(max_dim=3, max_size=6), st.integers(1, 3), st.data())
def test_derivation_dims_monotone_under_deletion(A, d, data):
    h = data.draw(st.sampled_from(A.normals))
    assert oracles.derivation_dim(A.normals, A.dim, d) <= oracles.derivation_dim(
        deletion(A, h).normals, A.dim, d)


def test_saito_scan_boolean():
    A = boolean(2)
    res = saito_scan(A, (1, 1), {1: derivation_space(A, 1)})
    assert isinstance(res, Free)
    assert verify_freeness_certificate(A, res)


def test_saito_scan_example_4_1_finds_nothing():
    A = catalog.example_4_1()[0]
    exps = integer_root_multiset(char_poly(A))
    spaces = {b: derivation_space(A, b) for b in set(exps)}
    res = saito_scan(A, exps, spaces)
    assert isinstance(res, SaitoIdenticallyZero)
    # the exact pipeline stops earlier, at a graded dimension
    v = is_free(A)
    assert isinstance(v.witness, GradedDimMismatch)


def test_saito_scan_limit():
    A = boolean(2)
    with pytest.raises(OracleTooLarge):
        saito_scan(A, (1, 1), {1: derivation_space(A, 1)}, limit=0)


def test_empty_and_nonsplitting():
    v = is_free(Arrangement.empty(3))
    assert v and v.exponents == (0, 0, 0)
    # four generic planes in Q^3 have chi = (t-1)(t^2-3t+3)
    A = Arrangement(3, ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)))
    v = is_free(A)
    assert not v and isinstance(v.witness, NonSplittingChi)


@pytest.mark.parametrize("i", [0, 1, 2])
def test_example_4_1_triple_not_free(i):
    v = is_free(catalog.example_4_1()[i])
    assert isinstance(v, NotFree)


def test_boolean_certificate_and_tamper():
    A = boolean(2)
    v = is_free(A)
    assert v.exponents == (1, 1)
    data = v.to_json()
    assert verify_freeness_certificate(A, data)
    tampered = v.to_json()
    terms = tampered["basis"][0][0]
    terms[0][1] += 1
    assert not verify_freeness_certificate(A, tampered)
    x, y = poly_ring(2).gens()
    not_member = Free((1, 1), (Derivation(1, (y, 0 * x)), Derivation(1, (x, y))), v.scalar)
    assert "not in D(A)" in verify_freeness_certificate(A, not_member).reason


@pytest.mark.parametrize("name, exps", [("D", (1, 5, 5, 5, 5)), ("Dpp", (1, 5, 5, 5))])
def test_catalog_certificates(name, exps):
    A = catalog.get(name)
    v = is_free(A)
    assert v.exponents == exps
    data = v.to_json()
    assert verify_freeness_certificate(A, free_from_json(data))
    rng = random.Random(7)
    points = [[rng.randint(-50, 50) for _ in range(A.dim)] for _ in range(5)]
    assert oracles.saito_det_matches_at_points(A.normals, A.dim, data["basis"], data["scalar"], points)


@pytest.mark.slow
@pytest.mark.parametrize("name, exps", [("A", (1, 5, 5, 5, 5, 5, 6)), ("C", (1, 5, 5, 5, 6))])
def test_catalog_free_slow(name, exps):
    A = catalog.get(name)
    v = is_free(A)
    assert v.exponents == exps
    assert verify_freeness_certificate(A, v.to_json())


# -- properties -------------------------------------------------------------------

@given(arrangements(max_dim=4, max_size=7))
def test_is_free_against_oracles(A):
    v = is_free(A)
    roots = integer_root_multiset(char_poly(A))
    if v:
        assert v.exponents == tuple(roots) and sum(v.exponents) == len(A)
        data = v.to_json()
        assert verify_freeness_certificate(A, data)
        if A.dim:
            assert oracles.saito_det_is_cQ(A.normals, A.dim, data["basis"], data["scalar"])
        return
    w = v.witness
    if isinstance(w, NonSplittingChi):
        assert not roots
        return
    E, k = essentialize(A)
    if isinstance(w, GradedDimMismatch):
        assert oracles.derivation_dim(E.normals, E.dim, w.degree) == w.actual != w.predicted
        return
    # otherwise the literal scan over basis tuples must also come up empty
    ess = tuple(b for b in roots if b)
    spaces = {b: derivation_space(E, b) for b in set(ess)}
    try:
        assert not isinstance(saito_scan(E, ess, spaces), Free)
    except OracleTooLarge:
        pass


@given(nonempty_arrangements(max_dim=4, max_size=7), st.data())
def test_addition_deletion_coherence(A, data):
    h = data.draw(st.sampled_from(A.normals))
    A1, A2 = deletion(A, h), restrict_to_hyperplane(A, h)
    f, f1, f2 = is_free(A), is_free(A1), is_free(A2)
    if f and f1:
        # strong form of the restriction part
        assert f2
        assert addition_step(f1.exponents, f2.exponents) == f.exponents
    if f1 and f2 and addition_step(f1.exponents, f2.exponents) is not None:
        assert f and f.exponents == addition_step(f1.exponents, f2.exponents)
    if f and f2:
        rest = Counter(f.exponents)
        rest.subtract(Counter(f2.exponents))
        if all(c >= 0 for c in rest.values()):
            (b,) = [x for x, c in rest.items() if c]
            assume(b >= 1)
            assert f1 and sorted(f1.exponents) == sorted(list(f2.exponents) + [b - 1])


@given(essential_arrangements(max_dim=4, max_size=7))
def test_euler_derivation_always_present(A):
    assert is_member(A, euler(A.dim))
    assert len(derivation_space(A, 1)) >= 1
