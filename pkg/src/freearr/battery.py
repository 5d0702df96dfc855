"""The reproducibility battery: every catalog claim as a named, checkable step.

Each claim is a function returning ``(verdict, detail, payload)`` where the
verdict is ``"pass"``, ``"fail"`` or ``"undecided"`` and ``payload`` is an
optional JSON certificate or trace that gets written next to the report.
Claims run in list order, which respects their data dependencies; a claim
never depends on another claim's verdict, only on catalog data.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import catalog, classes, iso
from .arrangement import Arrangement, deletion, essentialize, localization, restriction, restrict_to_hyperplane
from .derivations import is_free, verify_freeness_certificate
from .io import dump_json
from .lattice import char_poly, format_poly, from_roots, integer_root_multiset, poly_mul

PASS, FAIL, UNDECIDED = "pass", "fail", "undecided"


@dataclass
class ClaimReport:
    claim: str
    anchor: str
    verdict: str
    runtime: float
    detail: str = ""
    artifact: str | None = None

    def to_json(self) -> dict:
        return {"claim": self.claim, "anchor": self.anchor, "verdict": self.verdict,
                "runtime": round(self.runtime, 3), "detail": self.detail,
                "artifact": self.artifact}

    def line(self) -> str:
        return f"{self.verdict.upper():9s} {self.claim:22s} {self.runtime:8.1f}s  {self.anchor}" + (
            f"  [{self.detail}]" if self.detail else "")


@dataclass
class Claim:
    name: str
    group: str
    anchor: str
    run: Callable


@dataclass
class BatteryConfig:
    only: tuple = ()
    budget: int | None = None
    out_dir: str | None = None
    progress: Callable | None = None


def _ok(cond: bool, detail: str = "", payload=None):
    return (PASS if cond else FAIL), detail, payload


def _verdict_of(v: classes.ClassVerdict, want_member: bool):
    if not v.decided:
        return UNDECIDED
    return PASS if v.member == want_member else FAIL


def _exps(v) -> str:
    return ",".join(map(str, v)) if v is not None else "-"


# -- tables and chains ---------------------------------------------------------------

def _table_claim(arr, table, size, final):
    def run(cfg):
        A = arr()
        if len(A) != size:
            return FAIL, f"|A| = {len(A)}, expected {size}", None
        rep = classes.verify_induction_table(A, table(), budget=cfg.budget)
        ok = rep.ok and rep.final == final and len(rep.steps) == size
        return _ok(ok, rep.reason or f"{len(rep.steps)} steps, final {_exps(rep.final)}", rep.to_json())
    return run


def _free_claim(arr, exps):
    def run(cfg):
        A = arr()
        v = is_free(A)
        if not v:
            return FAIL, f"not free: {v.witness.kind}", v.to_json()
        check = verify_freeness_certificate(A, v.to_json())
        ok = bool(check) and v.exponents == exps
        return _ok(ok, check.reason or f"exponents {_exps(v.exponents)}", v.to_json())
    return run


def _chain_claim(arr, table):
    def run(cfg):
        A = arr()
        rep = classes.verify_free_chain(A, table().hyperplanes)
        if not rep.ok:
            return FAIL, rep.reason, rep.to_json()
        t = table()
        bad = _printed_rows_mismatch(A.dim, t, rep.steps)
        if bad:
            return FAIL, bad, rep.to_json()
        last = rep.steps[-1]["exponents"]
        ok = t.final is None or tuple(last) == tuple(sorted(t.final))
        return _ok(ok, f"{len(rep.steps)} free prefixes, final {_exps(last)}", rep.to_json())
    return run


def _printed_rows_mismatch(dim, table, steps) -> str:
    """Compare the printed exponent columns of a chain with computed values."""
    prefix = []
    for i, row in enumerate(table.rows):
        if row.before is not None:
            before = tuple(steps[i - 1]["exponents"]) if i else (0,) * dim
            if before != tuple(sorted(row.before)):
                return f"row {i + 1}: printed exponents {_exps(row.before)}, computed {_exps(before)}"
        prefix.append(row.normal)
        if row.restriction is not None:
            R = restrict_to_hyperplane(Arrangement(dim, tuple(prefix)), row.normal)
            E2 = integer_root_multiset(char_poly(R))
            E2 = tuple(sorted(tuple(E2) + (0,) * (dim - 1 - len(E2)))) if E2 else None
            if E2 != tuple(sorted(row.restriction)):
                return f"row {i + 1}: printed restriction exponents {_exps(row.restriction)}, computed {_exps(E2)}"
    return ""


# -- refutations ------------------------------------------------------------------

def _matching_restrictions(A: Arrangement):
    """Restrictions A^H whose chi roots equal exp(A) with one entry removed."""
    E = integer_root_multiset(char_poly(A))
    out = []
    for h in A.normals:
        R = restrict_to_hyperplane(A, h)
        E2 = integer_root_multiset(char_poly(R))
        if not E2:
            continue
        left = Counter(E)
        left.subtract(Counter(E2))
        if all(v >= 0 for v in left.values()) and sum(left.values()) == 1:
            out.append((h, R))
    return out


def _iso_classes(arrs):
    reps = []
    for a in arrs:
        for r in reps:
            if iso.linear_isomorphic(a, r[0]) is not None:
                r.append(a)
                break
        else:
            reps.append([a])
    return reps


def _claim_D_not_IF(cfg):
    D, Dpp = catalog.arr_D(), catalog.arr_Dpp()
    v = classes.is_inductively_free(D, budget=cfg.budget)
    verdict = _verdict_of(v, False)
    if verdict != PASS:
        return verdict, v.status, v.to_json()
    replay = classes.replay_refutation(D, v.trace)
    matches = _matching_restrictions(D)
    groups = _iso_classes([R for _, R in matches])
    unique = len(groups) == 1 and iso.linear_isomorphic(groups[0][0], Dpp) is not None
    ok = bool(replay) and unique
    detail = (f"replay {'ok' if replay else replay.reason}; {len(matches)} exponent-matching "
              f"restrictions in {len(groups)} linear class(es), D'' class: {unique}")
    return _ok(ok, detail, v.to_json())


def _claim_D_not_DF(cfg):
    D, Dpp = catalog.arr_D(), catalog.arr_Dpp()
    v = classes.is_divisionally_free(D, budget=cfg.budget)
    verdict = _verdict_of(v, False)
    if verdict != PASS:
        return verdict, v.status, v.to_json()
    replay = classes.replay_refutation(D, v.trace)
    hits = [h for h in Dpp.normals
            if integer_root_multiset(char_poly(restrict_to_hyperplane(Dpp, h))) == (1, 5, 5)]
    ok = bool(replay) and not hits
    detail = f"replay {'ok' if replay else replay.reason}; restrictions of D'' with exps 1,5,5: {len(hits)}"
    return _ok(ok, detail, v.to_json())


def _through_Dpp(A, v) -> int:
    Dpp = catalog.arr_Dpp()
    key = iso.invariant_key(Dpp)
    hits = 0
    for e in classes.class_trace_nodes(v):
        a = classes.node_arrangement(A, e)
        if len(a) == len(Dpp) and iso.invariant_key(a) == key and iso.linear_isomorphic(a, Dpp) is not None:
            hits += 1
    return hits


def _lattice_classes(arrs):
    reps = []
    for a in arrs:
        for r in reps:
            if iso.matroid_isomorphic(a, r[0]) is not None:
                r.append(a)
                break
        else:
            reps.append([a])
    return reps


def _claim_B_not(cls):
    def run(cfg):
        B = catalog.arr_B()
        v = classes.DECIDERS[cls](B, budget=cfg.budget)
        verdict = _verdict_of(v, False)
        if verdict != PASS:
            return verdict, v.status, v.to_json()
        replay = classes.replay_refutation(B, v.trace)
        hits = _through_Dpp(B, v)
        ok = bool(replay) and hits > 0
        detail = f"replay {'ok' if replay else replay.reason}; trace nodes isomorphic to D'': {hits}"
        if cls == classes.IF:
            matches = [R for _, R in _matching_restrictions(B)]
            detail += (f"; {len(matches)} exponent-matching restrictions, "
                       f"{len(_iso_classes(matches))} linear / {len(_lattice_classes(matches))} lattice classes")
        return _ok(ok, detail, v.to_json())
    return run


def _claim_Dpp_not_AF(cfg):
    Dpp = catalog.arr_Dpp()
    bad = []
    for h in Dpp.normals:
        fr = is_free(deletion(Dpp, h))
        if fr and tuple(fr.exponents) == (1, 4, 5, 5):
            bad.append(h)
    v = classes.is_additionally_free(Dpp, budget=cfg.budget)
    verdict = _verdict_of(v, False)
    if verdict != PASS:
        return verdict, v.status, v.to_json()
    replay = classes.replay_refutation(Dpp, v.trace)
    ok = not bad and bool(replay)
    detail = (f"{len(Dpp)} deletions checked, {len(bad)} free with exps 1,4,5,5; "
              f"replay {'ok' if replay else replay.reason}")
    return _ok(ok, detail, v.to_json())


def _member_claim(arr, cls):
    def run(cfg):
        A = arr()
        v = classes.DECIDERS[cls](A, budget=cfg.budget)
        verdict = _verdict_of(v, True)
        if verdict != PASS:
            return verdict, v.status, v.to_json()
        check = classes.verify_certificate(A, v.certificate)
        return _ok(bool(check), check.reason or f"certificate ok, exps {_exps(v.exponents)}", v.to_json())
    return run


# -- cross-construction identities -----------------------------------------------------

def _iso_claim(left, right):
    def run(cfg):
        M = iso.linear_isomorphic(left(), right())
        payload = None if M is None else {"matrix": [[[q.numerator, q.denominator] for q in row] for row in M]}
        return _ok(M is not None, "linear isomorphism found" if M is not None else "none", payload)
    return run


def _claim_B_loc_Y(cfg):
    B = catalog.arr_B()
    loc = localization(B, catalog.flat_Y())
    want = {catalog.X1, catalog.H_PRIME, catalog.X6}
    return _ok(set(loc.normals) == want, f"{len(loc)} hyperplanes contain Y")


# -- non-free triples ----------------------------------------------------------------

_TRIPLE = ("A", "A'", "A''")


def _ex41_chi(i, roots):
    def run(cfg):
        arr = catalog.example_4_1()[i]
        chi = char_poly(arr)
        return _ok(chi == from_roots(roots), format_poly(chi))
    return run


def _ex41_not_free(i):
    def run(cfg):
        v = is_free(catalog.example_4_1()[i])
        return _ok(not v, v.witness.kind if not v else "free", v.to_json())
    return run


def _ex42_claim(m):
    def run(cfg):
        base = catalog.example_4_1()[2]
        A, A1, A2 = catalog.example_4_2(base, m)
        chiB = char_poly(base)
        chis_ok = (char_poly(A) == poly_mul(chiB, (-m - 1, 1))
                   and char_poly(A1) == poly_mul(chiB, (-m, 1))
                   and char_poly(A2) == chiB)
        verdicts = [is_free(x) for x in (A, A1, A2)]
        none_free = not any(verdicts)
        loc = localization(A, catalog.example_4_2_center(base, A))
        ess, _ = essentialize(loc)
        loc_iso = iso.linear_isomorphic(ess, base) is not None
        detail = f"chi identities {chis_ok}, none free {none_free}, localization = base {loc_iso}"
        payload = {"m": m, "triple": {n: v.to_json() for n, v in zip(_TRIPLE, verdicts)}}
        return _ok(chis_ok and none_free and loc_iso, detail, payload)
    return run


# -- registry -------------------------------------------------------------------------

def claims() -> list[Claim]:
    A, B, C, D, Dpp = catalog.arr_A, catalog.arr_B, catalog.arr_C, catalog.arr_D, catalog.arr_Dpp
    out = [
        Claim("A-table1", "tables", "Table 1 replays as an induction table for A",
              _table_claim(A, catalog.table_1, 32, (1, 5, 5, 5, 5, 5, 6))),
        Claim("C-table3", "tables", "Table 3 replays as an induction table for C",
              _table_claim(C, catalog.table_3, 22, (1, 5, 5, 5, 6))),
        Claim("B-free", "B", "B is free with exponents 1,5,5,5,5,5,5",
              _free_claim(B, (1, 5, 5, 5, 5, 5, 5))),
        Claim("B-AF-chain", "B", "Table 2 is a chain of free subarrangements of B",
              _chain_claim(B, catalog.table_2)),
        Claim("D-free", "D", "D is free with exponents 1,5,5,5,5", _free_claim(D, (1, 5, 5, 5, 5))),
        Claim("D-AF-chain", "D", "Table 4 is a chain of free subarrangements of D",
              _chain_claim(D, catalog.table_4)),
        Claim("D-not-IF", "D", "D is not inductively free; its only exponent-matching restrictions are copies of D''",
              _claim_D_not_IF),
        Claim("D-not-DF", "D", "D is not divisionally free; no restriction of D'' has exponents 1,5,5",
              _claim_D_not_DF),
        Claim("D-SF", "D", "D is stair-free", _member_claim(D, classes.SF)),
        Claim("B-not-IF", "B", "B is not inductively free; the refutation passes through copies of D''",
              _claim_B_not(classes.IF)),
        Claim("B-not-DF", "B", "B is not divisionally free; the refutation passes through copies of D''",
              _claim_B_not(classes.DF)),
        Claim("B-SF", "B", "B is stair-free", _member_claim(B, classes.SF)),
        Claim("Dpp-free", "Dpp", "D'' is free with exponents 1,5,5,5", _free_claim(Dpp, (1, 5, 5, 5))),
        Claim("Dpp-not-AF", "Dpp", "D'' is not additionally free: no deletion is free with exponents 1,4,5,5",
              _claim_Dpp_not_AF),
        Claim("C-iso-AZ", "iso", "C is linearly isomorphic to the restriction of A to Z",
              _iso_claim(C, lambda: restriction(catalog.arr_A(), catalog.flat_Z()))),
        Claim("D-iso-BX", "iso", "D is linearly isomorphic to the restriction of B to X",
              _iso_claim(D, lambda: restriction(catalog.arr_B(), catalog.flat_X()))),
        Claim("BY-iso-Dpp", "iso", "the restriction of B to Y is linearly isomorphic to D''",
              _iso_claim(lambda: restriction(catalog.arr_B(), catalog.flat_Y()), Dpp)),
        Claim("B-loc-Y", "iso", "the localization of B at Y is {H1, H', H6}", _claim_B_loc_Y),
    ]
    ex41 = [(1, 3, 3, 4), (1, 3, 3, 3), (1, 3, 3)]
    for i, (name, roots) in enumerate(zip(_TRIPLE, ex41)):
        out.append(Claim(f"ex4.1-chi-{name}", "ex4.1", f"Example 4.1: chi({name}) splits with roots "
                         + ",".join(map(str, roots)), _ex41_chi(i, roots)))
    for i, name in enumerate(_TRIPLE):
        out.append(Claim(f"ex4.1-not-free-{name}", "ex4.1", f"Example 4.1: {name} is not free",
                         _ex41_not_free(i)))
    for m in range(4):
        out.append(Claim(f"ex4.2-m{m}", "ex4.2", f"Example 4.2 with m = {m}: chi identities, no member free, "
                         "localization at the base center is the base", _ex42_claim(m)))
    return out


def select(only) -> list[Claim]:
    all_claims = claims()
    if not only:
        return all_claims
    wanted = set(only)
    known = {c.name for c in all_claims} | {c.group for c in all_claims}
    unknown = wanted - known
    if unknown:
        raise KeyError(f"unknown claim or group: {', '.join(sorted(unknown))}")
    return [c for c in all_claims if c.name in wanted or c.group in wanted]


def verify_paper(config: BatteryConfig | None = None) -> list[ClaimReport]:
    """Run the selected claims in order; failures are reported, never raised."""
    cfg = config or BatteryConfig()
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for claim in select(cfg.only):
        start = time.perf_counter()
        try:
            verdict, detail, payload = claim.run(cfg)
        except Exception as exc:  # a crashing claim is a failing claim
            verdict, detail, payload = FAIL, f"{type(exc).__name__}: {exc}", None
        elapsed = time.perf_counter() - start
        artifact = None
        if out_dir is not None and payload is not None:
            artifact = str(out_dir / f"{claim.name}.json")
            dump_json(payload, artifact)
        rep = ClaimReport(claim.name, claim.anchor, verdict, elapsed, detail, artifact)
        reports.append(rep)
        if cfg.progress is not None:
            cfg.progress(rep)
    return reports


def exit_code(reports) -> int:
    verdicts = {r.verdict for r in reports}
    if FAIL in verdicts:
        return 2
    if UNDECIDED in verdicts:
        return 3
    return 0
