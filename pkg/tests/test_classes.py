import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import arrangements
from freearr import catalog, classes
from freearr.arrangement import Arrangement, Flat, boolean, essentialize, localization, product
from freearr.catalog import InductionTable
from freearr.derivations import is_free
from freearr.errors import InvalidShapes
from freearr.lattice import build_lattice


def test_addition_step_examples():
    assert classes.addition_step((1, 4, 5, 5, 5, 5, 6), (1, 5, 5, 5, 5, 6)) == (1, 5, 5, 5, 5, 5, 6)
    assert classes.addition_step((0,) * 7, (0,) * 6) == (0, 0, 0, 0, 0, 0, 1)
    assert classes.addition_step((1, 2), (3,)) is None
    with pytest.raises(InvalidShapes):
        classes.addition_step((1, 2), (1, 2))


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_rank_two_is_inductively_free(k):
    A = Arrangement.from_vectors(2, [(1, i) for i in range(k - 1)] + [(0, 1)])
    assert len(A) == k
    v = classes.is_inductively_free(A)
    assert v.member
    if k >= 2:
        assert v.exponents == (1, k - 1)


@pytest.mark.parametrize("cls", classes.CLASSES)
def test_empty_arrangement_is_a_member(cls):
    v = classes.DECIDERS[cls](Arrangement.empty(3))
    assert v.member and v.exponents == (0, 0, 0)


def test_C_is_divisionally_free():
    C = catalog.arr_C()
    v = classes.is_divisionally_free(C)
    assert v.member and v.exponents == (1, 5, 5, 5, 6)
    assert classes.verify_certificate(C, v.certificate)


def test_D_verdicts_and_replays():
    D = catalog.arr_D()
    for cls, member in ((classes.IF, False), (classes.DF, False), (classes.AF, True), (classes.SF, True)):
        v = classes.DECIDERS[cls](D)
        assert v.member is member, cls
        assert v.exponents == (1, 5, 5, 5, 5)
        if member:
            assert classes.verify_certificate(D, v.certificate), cls
        else:
            assert classes.replay_refutation(D, v.trace), cls


def test_Dpp_not_additionally_free():
    Dpp = catalog.arr_Dpp()
    v = classes.is_additionally_free(Dpp)
    assert v.status == "non-member"
    assert classes.replay_refutation(Dpp, v.trace)
    assert json.loads(json.dumps(v.to_json())) == v.to_json()


def test_refute_with_freeness_shortcut():
    A = catalog.example_4_1()[0]
    v = classes.is_inductively_free(A, refute_with_freeness=True)
    assert v.status == "non-member" and v.trace["not_free"]["verdict"] == "not free"


def test_budget_gives_undecided():
    v = classes.is_inductively_free(catalog.arr_C(), budget=1)
    assert v.status == "undecided" and not v.decided and v.frontier


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("FREEARR_BUDGET", "1")
    assert classes.default_budget() == 1
    assert classes.is_divisionally_free(catalog.arr_C()).status == "undecided"


def test_table_3_replay():
    rep = classes.verify_induction_table(catalog.arr_C(), catalog.table_3())
    assert rep.ok and rep.final == (1, 5, 5, 5, 6)
    assert len(rep.steps) == 22 and all(s.ok for s in rep.steps)


def test_swapped_table_rows_rejected():
    t = catalog.table_1()
    rows = list(t.rows)
    rows[0], rows[1] = rows[1], rows[0]
    rep = classes.verify_induction_table(catalog.arr_A(), InductionTable(t.dim, tuple(rows), t.final))
    assert not rep.ok and rep.steps[-1].index == 1
    t3 = catalog.table_3()
    rows = list(t3.rows)
    rows[-1], rows[-2] = rows[-2], rows[-1]
    rep = classes.verify_induction_table(catalog.arr_C(), InductionTable(t3.dim, tuple(rows), t3.final))
    assert not rep.ok and rep.steps[-1].index == 21


def test_table_must_exhaust_the_arrangement():
    t = catalog.table_3()
    short = InductionTable(t.dim, t.rows[:-1], t.final)
    rep = classes.verify_induction_table(catalog.arr_C(), short)
    assert not rep.ok and "exactly once" in rep.reason


def test_free_chain_for_D():
    D = catalog.arr_D()
    rep = classes.verify_free_chain(D, catalog.table_4().hyperplanes)
    assert rep.ok and rep.steps[-1]["exponents"] == [1, 5, 5, 5, 5]
    bad = classes.verify_free_chain(D, catalog.table_4().hyperplanes[:-1])
    assert not bad.ok


def test_localizations_of_D_are_additionally_free():
    D = catalog.arr_D()
    count = 0
    for _, mask, basis, _ in build_lattice(D).iter_flats():
        X = Flat(D.dim, tuple(basis), frozenset(i for i in range(len(D)) if mask >> i & 1))
        assert classes.is_additionally_free(localization(D, X)).member
        count += 1
    assert count == 559


def test_tampered_certificate_rejected():
    D = catalog.arr_D()
    cert = classes.is_stair_free(D).certificate
    top = next(n for n in cert["nodes"] if n["id"] == cert["top"])
    broken = copy.deepcopy(cert)
    node = next(n for n in broken["nodes"] if n["id"] == cert["top"])
    other = [h for h in top["present"] if h != top["data"]["hyperplane"]][0]
    node["data"]["hyperplane"] = other
    assert not classes.verify_certificate(D, broken)
    broken = copy.deepcopy(cert)
    broken["root"]["normals"][0][0] += 1
    assert not classes.verify_certificate(D, broken)


def test_tampered_refutation_rejected():
    D = catalog.arr_D()
    trace = classes.is_inductively_free(D).trace
    broken = copy.deepcopy(trace)
    for n in broken["nodes"]:
        if n["data"] and n["data"].get("tried"):
            n["data"]["tried"] = n["data"]["tried"][1:]
            break
    else:
        pytest.skip("trace has no attempts to drop")
    assert not classes.replay_refutation(D, broken)


def test_decisions_are_deterministic():
    D = catalog.arr_D()
    a = classes.is_stair_free(D).to_json()
    b = classes.is_stair_free(D).to_json()
    assert a == b


# -- properties -------------------------------------------------------------------

small = arrangements(max_dim=4, max_size=7)


@given(small)
def test_class_containments(A):
    v = {cls: classes.DECIDERS[cls](A) for cls in classes.CLASSES}
    assert all(x.decided for x in v.values())
    free = is_free(A)
    for cls, x in v.items():
        if x.member:
            assert free, cls
            assert tuple(free.exponents) == x.exponents
    if v["IF"].member:
        assert v["AF"].member and v["SF"].member
    if v["AF"].member or v["DF"].member:
        assert v["SF"].member


@given(small)
def test_certificates_and_refutations_replay(A):
    for cls in classes.CLASSES:
        v = classes.DECIDERS[cls](A)
        if v.member:
            assert classes.verify_certificate(A, v.certificate), cls
        else:
            assert classes.replay_refutation(A, v.trace), cls


pieces = arrangements(min_dim=1, max_dim=2, max_size=4)


@given(pieces, pieces)
def test_product_closure(A1, A2):
    P = product(A1, A2)
    for cls in (classes.AF, classes.SF):
        whole = classes.DECIDERS[cls](P).member
        parts = classes.DECIDERS[cls](A1).member and classes.DECIDERS[cls](A2).member
        assert whole == parts, cls


@given(st.integers(3, 5))
def test_boolean_is_in_every_class(n):
    for cls in classes.CLASSES:
        v = classes.DECIDERS[cls](boolean(n))
        assert v.member and v.exponents == (1,) * n


def test_non_essential_inputs_report_center_zeros():
    A = Arrangement(4, ((1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0)))
    v = classes.is_inductively_free(A)
    assert v.member and v.exponents == (0, 0, 1, 2)
    assert essentialize(A)[1] == 2
