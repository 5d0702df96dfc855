"""Inductive, additional, divisional and stair freeness.

All four searches run inside a :class:`Context` attached to one root
arrangement (essentialized on entry). Every arrangement the searches meet
is a restriction of a subarrangement of the root, so it is recorded as a
node ``(xmask, smask)``: ``xmask`` is the set of root hyperplanes containing
the flat X, ``smask`` the root hyperplanes whose traces on X make up the
node. ``smask`` is always closed (it contains every root hyperplane whose
trace is one of the node's hyperplanes) and coordinates on X come from the
canonical kernel basis, so two search paths reaching the same arrangement
hit the same memo entry.

Verdicts come with certificates (members) or refutation traces
(non-members) over these nodes; both can be replayed independently with
:func:`verify_certificate` and :func:`replay_refutation`.
"""

from __future__ import annotations

import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg
from .arrangement import Arrangement, canonicalize, dot, essentialize, subspace_basis, transform
from .derivations import is_free as _is_free
from .errors import CertificateError, InvalidShapes, NotMember
from .iso import invariant_key, linear_isomorphic
from .lattice import NonSplitting, char_poly, divides, integer_root_multiset

DEFAULT_BUDGET = 2_000_000

IF, AF, DF, SF = "IF", "AF", "DF", "SF"
CLASSES = (IF, AF, DF, SF)


def default_budget() -> int:
    raw = os.environ.get("FREEARR_BUDGET")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return DEFAULT_BUDGET


class BudgetExceeded(Exception):
    def __init__(self, stack=()):
        super().__init__("node budget exhausted")
        self.stack = list(stack)


# -- exponent bookkeeping -----------------------------------------------------

def _multiset_minus(big, small):
    """big - small as a sorted tuple when small is a sub-multiset of big, else None."""
    c = Counter(big)
    c.subtract(Counter(small))
    if any(v < 0 for v in c.values()):
        return None
    return tuple(sorted(c.elements()))


def addition_step(exp_deletion, exp_restriction):
    """Exponents of A from exp A' (size l) and exp A'' (size l - 1), or None.

    Applies when exp A'' is a sub-multiset of exp A'; the leftover exponent
    e of A' becomes e + 1 in A.
    """
    if len(exp_restriction) != len(exp_deletion) - 1:
        raise InvalidShapes(
            f"restriction needs {len(exp_deletion) - 1} exponents, got {len(exp_restriction)}")
    rest = _multiset_minus(exp_deletion, exp_restriction)
    if rest is None:
        return None
    return tuple(sorted(tuple(exp_restriction) + (rest[0] + 1,)))


def _roots(chi):
    r = integer_root_multiset(chi)
    return None if isinstance(r, NonSplitting) else r


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# -- nodes --------------------------------------------------------------------

class Context:
    """Node bookkeeping for one root arrangement."""

    def __init__(self, A: Arrangement):
        self.original = A
        self.root, self.center = essentialize(A)
        self.n = len(self.root)
        self._flats = {0: self._make_flat(0)}
        self._meet = {}
        self._arr = {}
        self._chi = {}

    @property
    def top(self) -> tuple:
        return (0, (1 << self.n) - 1)

    def _make_flat(self, xmask):
        R = self.root
        basis = subspace_basis(R.dim, [R.normals[i] for i in _bits(xmask)])
        images = []
        for a in R.normals:
            v = tuple(dot(a, b) for b in basis)
            images.append(canonicalize(v) if any(v) else None)
        return basis, images

    def flat(self, xmask):
        f = self._flats.get(xmask)
        if f is None:
            f = self._flats[xmask] = self._make_flat(xmask)
        return f

    def arrangement(self, node):
        """(Arrangement on X, list of class masks in the arrangement's order)."""
        hit = self._arr.get(node)
        if hit is not None:
            return hit
        xmask, smask = node
        basis, images = self.flat(xmask)
        groups = {}
        order = []
        for i in _bits(smask):
            img = images[i]
            if img not in groups:
                groups[img] = 0
                order.append(img)
            groups[img] |= 1 << i
        arr = Arrangement(len(basis), tuple(order))
        out = (arr, [groups[img] for img in order])
        self._arr[node] = out
        return out

    def chi(self, node):
        c = self._chi.get(node)
        if c is None:
            c = self._chi[node] = char_poly(self.arrangement(node)[0])
        return c

    def delete(self, node, cls: int):
        return (node[0], node[1] & ~cls)

    def restrict(self, node, cls: int):
        xmask, smask = node
        h = (cls & -cls).bit_length() - 1
        key = (xmask, h)
        ymask = self._meet.get(key)
        if ymask is None:
            R = self.root
            basis = subspace_basis(R.dim, [R.normals[i] for i in _bits(xmask)] + [R.normals[h]])
            ymask = _mask(i for i, a in enumerate(R.normals) if all(dot(a, b) == 0 for b in basis))
            self._meet[key] = ymask
        _, images = self.flat(ymask)
        wanted = {images[i] for i in _bits(smask & ~ymask)}
        closed = _mask(i for i, img in enumerate(images) if img is not None and img in wanted)
        return (ymask, closed)

    def describe(self, node) -> dict:
        arr, _ = self.arrangement(node)
        return {"flat": _bits(node[0]), "present": _bits(node[1]), "dim": arr.dim,
                "size": len(arr)}


# -- verdicts -------------------------------------------------------------------

@dataclass
class _Res:
    member: bool
    exps: tuple | None = None
    step: dict | None = None
    reason: dict | None = None


@dataclass
class ClassVerdict:
    cls: str
    status: str  # "member" | "non-member" | "undecided"
    exponents: tuple | None = None
    certificate: dict | None = None
    trace: dict | None = None
    frontier: list = field(default_factory=list)
    nodes_visited: int = 0

    @property
    def member(self) -> bool:
        return self.status == "member"

    @property
    def decided(self) -> bool:
        return self.status != "undecided"

    def to_json(self) -> dict:
        out = {"class": self.cls, "status": self.status, "nodes_visited": self.nodes_visited}
        if self.exponents is not None:
            out["exponents"] = list(self.exponents)
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.trace is not None:
            out["trace"] = self.trace
        if self.frontier:
            out["frontier"] = self.frontier
        return out


def _lowered_by_one(E, E1) -> bool:
    """E1 is E with a single entry b replaced by b - 1."""
    diff = Counter(E)
    diff.subtract(Counter(E1))
    ups = [b for b, v in diff.items() if v == 1]
    downs = [b for b, v in diff.items() if v == -1]
    rest = [v for v in diff.values() if v not in (0, 1, -1)]
    return len(ups) == 1 and len(downs) == 1 and not rest and downs[0] == ups[0] - 1


@dataclass
class _Plan:
    """What a node needs: a base verdict, or candidate steps with child obligations.

    Each obligation is ``(hyperplane, kind, children)`` where ``children`` is
    a list of ``(role, node)``; the step succeeds when every child is a
    member, and it is refuted as soon as one child is a non-member.
    """

    exps: tuple | None
    base: dict | None = None
    fail: dict | None = None
    obligations: list = field(default_factory=list)
    rejected: list = field(default_factory=list)


class _Search:
    """Memoized deciders for the four classes over one :class:`Context`."""

    def __init__(self, ctx: Context, budget: int | None = None, group_isomorphic: bool = True):
        self.ctx = ctx
        self.budget = default_budget() if budget is None else budget
        self.count = 0
        self.memo = {c: {} for c in CLASSES}
        self.iso_index = {c: {} for c in CLASSES}
        self.group_isomorphic = group_isomorphic
        self.stack = []
        self._free = {}

    def tick(self):
        self.count += 1
        if self.count > self.budget:
            raise BudgetExceeded(self.stack[-3:])

    def exps(self, node):
        return _roots(self.ctx.chi(node))

    def free(self, node):
        arr = self.ctx.arrangement(node)[0]
        v = self._free.get(arr.key)
        if v is None:
            v = self._free[arr.key] = _is_free(arr)
        return v

    def rank(self, node) -> int:
        arr = self.ctx.arrangement(node)[0]
        return linalg.rank(arr.normals, arr.dim) if arr.normals else 0

    # candidate plans -------------------------------------------------------

    def plan(self, cls, node) -> _Plan:
        ctx = self.ctx
        arr, classes = ctx.arrangement(node)
        E = self.exps(node)
        if cls == AF:
            if not len(arr):
                return _Plan(tuple([0] * arr.dim), base={"kind": "empty"})
            fr = self.free(node)
            if not fr:
                return _Plan(E, fail={"kind": "not free", "witness": fr.witness.to_json()})
            E = tuple(fr.exponents)
        elif cls == DF:
            if self.rank(node) <= 2:
                return _Plan(E, base={"kind": "rank<=2"})
        else:
            if not len(arr):
                return _Plan(tuple([0] * arr.dim), base={"kind": "empty"})
            if self.rank(node) <= 2:
                return _Plan(E, base={"kind": "rank<=2"})
            if E is None:
                return _Plan(None, fail={"kind": "chi does not split", "chi": list(ctx.chi(node))})
        plan = _Plan(E)
        chi = ctx.chi(node)
        order = list(classes) if cls == DF else list(reversed(classes))
        division = []
        for c in order:
            h = _bits(c)[0]
            if cls == AF:
                dn = ctx.delete(node, c)
                E1 = self.exps(dn)
                if E1 is None or not _lowered_by_one(E, E1):
                    plan.rejected.append({"hyperplane": h, "reason": "deletion exponents are not "
                                          "exp(A) with one entry lowered by 1",
                                          "deletion_chi": list(ctx.chi(dn))})
                    continue
                plan.obligations.append((h, "deletion", [("deletion", dn)]))
                continue
            rn = ctx.restrict(node, c)
            chi2 = ctx.chi(rn)
            if cls == DF or cls == SF:
                if divides(chi2, chi):
                    division.append((h, "division", [("restriction", rn)]))
                elif cls == DF:
                    plan.rejected.append({"hyperplane": h, "reason": "chi(A'') does not divide chi(A)",
                                          "restriction_chi": list(chi2)})
                if cls == DF:
                    continue
            E2 = _roots(chi2)
            rest = _multiset_minus(E, E2) if E2 is not None else None
            if rest is None or len(rest) != 1:
                plan.rejected.append({"hyperplane": h, "reason": "exp(A'') is not exp(A) minus one "
                                      "element", "restriction_chi": list(chi2)})
                continue
            dn = ctx.delete(node, c)
            E1 = self.exps(dn)
            if E1 is None or tuple(sorted(E1)) != tuple(sorted(E2 + (rest[0] - 1,))):
                plan.rejected.append({"hyperplane": h, "reason": "exp(A') does not fit",
                                      "deletion_chi": list(ctx.chi(dn))})
                continue
            if cls == IF:
                plan.obligations.append((h, "addition", [("restriction", rn), ("deletion", dn)]))
            else:
                plan.obligations.append((h, "addition", [("free", rn), ("deletion", dn)]))
        plan.obligations.extend(division)
        return plan

    # generic decision ---------------------------------------------------

    def _via_isomorphism(self, cls, node):
        """Reuse a non-member verdict of a linearly isomorphic node."""
        if not self.group_isomorphic:
            return None
        arr = self.ctx.arrangement(node)[0]
        if arr.dim < 4:
            return None
        for other in self.iso_index[cls].get(invariant_key(arr), []):
            res = self.memo[cls][other]
            M = linear_isomorphic(arr, self.ctx.arrangement(other)[0])
            if M is not None:
                return _Res(False, res.exps, reason={"kind": "isomorphic", "isomorphic_to": other,
                                                     "matrix": [[_fr(x) for x in row] for row in M]})
        return None

    def decide(self, cls, node) -> _Res:
        res = self.memo[cls].get(node)
        if res is not None:
            return res
        res = self._via_isomorphism(cls, node)
        if res is not None:
            self.memo[cls][node] = res
            return res
        self.stack.append(node)
        try:
            res = self._decide(cls, node)
        finally:
            self.stack.pop()
        self.memo[cls][node] = res
        if not res.member and self.group_isomorphic:
            arr = self.ctx.arrangement(node)[0]
            if arr.dim >= 4:
                self.iso_index[cls].setdefault(invariant_key(arr), []).append(node)
        return res

    def _decide(self, cls, node) -> _Res:
        plan = self.plan(cls, node)
        if plan.base is not None:
            return _Res(True, plan.exps, step=plan.base)
        if plan.fail is not None:
            return _Res(False, plan.exps, reason=plan.fail)
        self.tick()
        tried = []
        for h, kind, children in plan.obligations:
            refuted = None
            for role, child in children:
                if role == "free":
                    fr = self.free(child)
                    if not fr:
                        refuted = (role, child, fr.witness.to_json())
                        break
                elif not self.decide(cls, child).member:
                    refuted = (role, child, None)
                    break
            if refuted is None:
                step = {"kind": kind, "hyperplane": h}
                step.update({"restriction" if role == "free" else role: child for role, child in children})
                return _Res(True, plan.exps, step=step)
            entry = {"hyperplane": h, "kind": kind, "role": refuted[0], "child": refuted[1]}
            if refuted[2] is not None:
                entry["witness"] = refuted[2]
            tried.append(entry)
        return _Res(False, plan.exps, reason={"kind": "exhausted", "rejected": plan.rejected,
                                              "tried": tried})

    # export -----------------------------------------------------------------

    def export(self, cls, top, member: bool) -> dict:
        """Certificate (member) or refutation trace (non-member) as a node DAG."""
        ids = {}
        entries = []
        todo = [top]
        while todo:
            node = todo.pop()
            if node in ids:
                continue
            ids[node] = len(ids)
            res = self.memo[cls].get(node)
            entry = {"flat": _bits(node[0]), "present": _bits(node[1])}
            if res is None:
                entry["data"] = None  # referenced for its arrangement only
                entries.append((node, entry))
                continue
            if res.exps is not None:
                entry["exponents"] = list(res.exps)
            payload = res.step if member else res.reason
            entry["data"] = payload
            entries.append((node, entry))
            children = []
            if member:
                children = [payload[k] for k in ("deletion", "restriction") if k in payload]
            elif payload.get("kind") == "isomorphic":
                children = [payload["isomorphic_to"]]
            else:
                children = [t["child"] for t in payload.get("tried", []) if t["role"] != "free"]
            todo.extend(reversed(children))
        out = []
        for node, entry in entries:
            entry["id"] = ids[node]
            entry["data"] = _relabel(entry["data"], ids)
            out.append(entry)
        out.sort(key=lambda e: e["id"])
        return {"class": cls, "kind": "certificate" if member else "refutation",
                "root": {"dim": self.ctx.root.dim, "normals": [list(a) for a in self.ctx.root.normals]},
                "top": ids[top], "nodes": out}


def _fr(x):
    x = Fraction(x)
    return [x.numerator, x.denominator]


def _relabel(payload, ids):
    if isinstance(payload, dict):
        return {k: _relabel(v, ids) for k, v in payload.items()}
    if isinstance(payload, list):
        return [_relabel(v, ids) for v in payload]
    if isinstance(payload, tuple) and len(payload) == 2 and all(isinstance(x, int) for x in payload):
        if payload in ids:
            return {"node": ids[payload]}
        return {"flat": _bits(payload[0]), "present": _bits(payload[1])}
    return payload


# -- public deciders ----------------------------------------------------------------

def _run(cls, A: Arrangement, budget=None, search: _Search | None = None, node=None) -> ClassVerdict:
    if search is None:
        search = _Search(Context(A), budget)
    node = search.ctx.top if node is None else node
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        res = search.decide(cls, node)
    except BudgetExceeded as exc:
        frontier = [search.ctx.describe(n) for n in exc.stack]
        search.stack.clear()
        return ClassVerdict(cls, "undecided", frontier=frontier, nodes_visited=search.count)
    finally:
        sys.setrecursionlimit(limit)
    exps = None
    if res.exps is not None:
        exps = tuple(sorted(tuple(res.exps) + (0,) * search.ctx.center)) if node == search.ctx.top else res.exps
    if res.member:
        return ClassVerdict(cls, "member", exps, certificate=search.export(cls, node, True),
                            nodes_visited=search.count)
    return ClassVerdict(cls, "non-member", exps, trace=search.export(cls, node, False),
                        nodes_visited=search.count)


def is_inductively_free(A: Arrangement, budget: int | None = None, refute_with_freeness: bool = False):
    """IF decider; with ``refute_with_freeness`` a failed exact freeness test refutes at once."""
    if refute_with_freeness:
        fr = _is_free(A)
        if not fr:
            trace = {"class": IF, "kind": "refutation", "not_free": fr.to_json()}
            return ClassVerdict(IF, "non-member", None, trace=trace)
    return _run(IF, A, budget)


def is_additionally_free(A: Arrangement, budget: int | None = None) -> ClassVerdict:
    return _run(AF, A, budget)


def is_divisionally_free(A: Arrangement, budget: int | None = None) -> ClassVerdict:
    return _run(DF, A, budget)


def is_stair_free(A: Arrangement, budget: int | None = None) -> ClassVerdict:
    return _run(SF, A, budget)


DECIDERS = {IF: is_inductively_free, AF: is_additionally_free, DF: is_divisionally_free,
            SF: is_stair_free}


# -- induction tables and free chains --------------------------------------------------

@dataclass
class StepReport:
    index: int
    hyperplane: tuple
    before: tuple | None
    restriction: tuple | None
    after: tuple | None
    ok: bool
    reason: str = ""

    def to_json(self) -> dict:
        return {"step": self.index, "hyperplane": list(self.hyperplane),
                "before": None if self.before is None else list(self.before),
                "restriction": None if self.restriction is None else list(self.restriction),
                "after": None if self.after is None else list(self.after),
                "ok": self.ok, "reason": self.reason}


@dataclass
class TableReport:
    ok: bool
    steps: list
    final: tuple | None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "final": None if self.final is None else list(self.final),
                "reason": self.reason, "steps": [s.to_json() for s in self.steps]}


def _order_indices(A: Arrangement, hyperplanes):
    idx = []
    for h in hyperplanes:
        idx.append(A.index(h))
    if sorted(idx) != list(range(len(A))):
        raise NotMember("the chain must list every hyperplane of the arrangement exactly once")
    return idx


def verify_induction_table(A: Arrangement, table, budget: int | None = None,
                           search: _Search | None = None) -> TableReport:
    """Replay an induction table: each step must be an addition with an IF restriction.

    For step i the restriction of the first i hyperplanes to the i-th is
    certified inductively free by the IF search, its exponents come from
    its characteristic polynomial, and :func:`addition_step` must produce
    the next exponents. Printed exponents, where present, must agree.
    """
    try:
        order = _order_indices(A, table.hyperplanes)
    except NotMember as exc:
        return TableReport(False, [], None, str(exc))
    if search is None:
        search = _Search(Context(A), budget)
    ctx = search.ctx
    running = tuple([0] * A.dim)
    steps = []
    prefix = 0
    for i, (row, j) in enumerate(zip(table.rows, order), start=1):
        h = A.normals[j]
        before = running
        if row.before is not None and tuple(sorted(row.before)) != before:
            steps.append(StepReport(i, h, before, None, None, False,
                                    f"table says exp A' = {row.before}, computed {before}"))
            return TableReport(False, steps, None, steps[-1].reason)
        node = (0, prefix | (1 << j))
        prefix |= 1 << j
        arr, classes = ctx.arrangement(node)
        cls = next(c for c in classes if c >> j & 1)
        rn = ctx.restrict(node, cls)
        E2 = _roots(ctx.chi(rn))
        if E2 is None:
            steps.append(StepReport(i, h, before, None, None, False, "chi(A'') does not split"))
            return TableReport(False, steps, None, steps[-1].reason)
        E2_full = tuple(sorted(E2 + (0,) * (A.dim - 1 - len(E2))))
        if row.restriction is not None and tuple(sorted(row.restriction)) != E2_full:
            steps.append(StepReport(i, h, before, E2_full, None, False,
                                    f"table says exp A'' = {row.restriction}, computed {E2_full}"))
            return TableReport(False, steps, None, steps[-1].reason)
        after = addition_step(before, E2_full)
        if after is None:
            steps.append(StepReport(i, h, before, E2_full, None, False,
                                    "exp A'' is not contained in exp A'"))
            return TableReport(False, steps, None, steps[-1].reason)
        try:
            res = search.decide(IF, rn)
        except BudgetExceeded:
            steps.append(StepReport(i, h, before, E2_full, after, False,
                                    "budget exhausted while certifying A''"))
            return TableReport(False, steps, None, steps[-1].reason)
        if not res.member:
            steps.append(StepReport(i, h, before, E2_full, after, False,
                                    "A'' is not inductively free"))
            return TableReport(False, steps, None, steps[-1].reason)
        steps.append(StepReport(i, h, before, E2_full, after, True))
        running = after
    chi_roots = _roots(char_poly(A))
    if chi_roots is None or tuple(sorted(chi_roots)) != running:
        return TableReport(False, steps, running, "final exponents disagree with chi(A)")
    if table.final is not None and tuple(sorted(table.final)) != running:
        return TableReport(False, steps, running, f"table says final {table.final}, computed {running}")
    return TableReport(True, steps, running)


@dataclass
class ChainReport:
    ok: bool
    steps: list
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "reason": self.reason, "steps": self.steps}


def verify_free_chain(A: Arrangement, chain, progress=None) -> ChainReport:
    """Check that every prefix of ``chain`` (an ordering of A) is free."""
    try:
        order = _order_indices(A, chain)
    except NotMember as exc:
        return ChainReport(False, [], str(exc))
    steps = []
    for i in range(1, len(order) + 1):
        prefix = Arrangement(A.dim, tuple(A.normals[j] for j in order[:i]))
        v = _is_free(prefix)
        entry = {"size": i, "hyperplane": list(A.normals[order[i - 1]]), "free": bool(v)}
        if v:
            entry["exponents"] = list(v.exponents)
        else:
            entry["witness"] = v.witness.to_json()
        steps.append(entry)
        if progress is not None:
            progress(entry)
        if not v:
            return ChainReport(False, steps, f"prefix of size {i} is not free")
    return ChainReport(True, steps)


# -- independent replay -----------------------------------------------------------------

def _node_arrangement(root: Arrangement, flat, present):
    basis = subspace_basis(root.dim, [root.normals[i] for i in flat])
    inside = [i for i, a in enumerate(root.normals) if all(dot(a, b) == 0 for b in basis)]
    if sorted(inside) != sorted(flat):
        raise CertificateError("flat indices are not closed")
    vecs = []
    for i in present:
        v = tuple(dot(root.normals[i], b) for b in basis)
        if not any(v):
            raise CertificateError("a present hyperplane contains the flat")
        vecs.append(v)
    return Arrangement.from_vectors(len(basis), vecs), basis


def _image_on(root, basis, i):
    v = tuple(dot(root.normals[i], b) for b in basis)
    return canonicalize(v) if any(v) else None


@dataclass(frozen=True)
class Check:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _parse_dag(A: Arrangement, data: dict):
    root = Arrangement(data["root"]["dim"], tuple(tuple(a) for a in data["root"]["normals"]))
    nodes = {e["id"]: e for e in data["nodes"]}
    ess, _ = essentialize(A)
    if ess.normals != root.normals or ess.dim != root.dim:
        raise CertificateError("root is not the essentialization of A")
    top = nodes.get(data["top"])
    if top is None or top["flat"] or sorted(top["present"]) != list(range(len(root))):
        raise CertificateError("top node is not the whole arrangement")
    return root, nodes


def _ref(x) -> int:
    if not isinstance(x, dict) or "node" not in x:
        raise CertificateError(f"expected a node reference, got {x!r}")
    return x["node"]


def verify_certificate(A: Arrangement, cert: dict) -> Check:
    """Replay a class certificate produced by one of the deciders.

    Node arrangements are rebuilt from the root and every step is checked
    again: addition steps need exp A'' inside exp A' with the right
    leftover, division steps need chi(A'') | chi(A), deletion steps (AF)
    need an exactly certified free arrangement, and the deletion or
    restriction nodes a step refers to must really be A minus H or the
    trace of A on H.
    """
    try:
        cls = cert["class"]
        root, nodes = _parse_dag(A, cert)
    except (KeyError, TypeError) as exc:
        return Check(False, f"malformed certificate: {exc}")
    except CertificateError as exc:
        return Check(False, str(exc))
    cache = {}

    def arr_of(nid):
        if nid not in nodes:
            raise CertificateError(f"unknown node {nid}")
        if nid not in cache:
            e = nodes[nid]
            cache[nid] = _node_arrangement(root, e["flat"], e["present"])
        return cache[nid]

    required = {cert["top"]}
    try:
        for nid, e in nodes.items():
            step = e["data"]
            if step is None:
                continue
            kind = step.get("kind")
            if kind == "addition":
                required.add(_ref(step["deletion"]))
                if cls == IF:
                    required.add(_ref(step["restriction"]))
            elif kind == "division":
                required.add(_ref(step["restriction"]))
            elif kind == "deletion":
                required.add(_ref(step["deletion"]))
        for nid in sorted(required):
            e = nodes.get(nid)
            if e is None or e["data"] is None:
                return Check(False, f"node {nid} needs a step but has none")
            reason = _check_step(cls, root, nodes, nid, arr_of)
            if reason:
                return Check(False, f"node {nid}: {reason}")
    except CertificateError as exc:
        return Check(False, str(exc))
    return Check(True)


def _check_step(cls, root, nodes, nid, arr_of) -> str:
    e = nodes[nid]
    arr, basis = arr_of(nid)
    step = e["data"]
    kind = step.get("kind")
    if kind == "empty":
        return "" if not len(arr) else "node is not empty"
    if kind == "rank<=2":
        if cls == AF:
            return "AF has no rank-2 base case"
        return "" if linalg.rank(arr.normals, arr.dim) <= 2 else "rank exceeds 2"
    h = step.get("hyperplane")
    if h not in e["present"]:
        return f"hyperplane {h} is not present"
    himg = _image_on(root, basis, h)
    chi = char_poly(arr)
    if kind in ("addition", "deletion"):
        did = _ref(step["deletion"])
        darr, _ = arr_of(did)
        if nodes[did]["flat"] != e["flat"] or set(darr.normals) != set(arr.normals) - {himg}:
            return "deletion node is not A minus H"
    if kind in ("addition", "division"):
        if cls not in (IF, SF) and not (cls == DF and kind == "division"):
            return f"{kind} steps are not allowed for {cls}"
        rid = _ref(step["restriction"])
        rarr, rbasis = arr_of(rid)
        expect = subspace_basis(root.dim, [root.normals[i] for i in e["flat"]] + [root.normals[h]])
        if len(expect) != len(rbasis) or linalg.rank(list(expect) + list(rbasis), root.dim) != len(rbasis):
            return "restriction node lives on the wrong flat"
        traces = {_image_on(root, rbasis, i) for i in e["present"]} - {None}
        if traces != set(rarr.normals):
            return "restriction node is not the trace of A on H"
        if kind == "division":
            return "" if divides(char_poly(rarr), chi) else "chi(A'') does not divide chi(A)"
        E, E1, E2 = _roots(chi), _roots(char_poly(darr)), _roots(char_poly(rarr))
        if E is None or E1 is None or E2 is None or addition_step(E1, E2) != tuple(sorted(E)):
            return "exponents do not fit an addition step"
        if cls == SF and not _is_free(rarr):
            return "restriction is not free"
        return ""
    if kind == "deletion":
        if cls != AF:
            return "deletion steps belong to AF certificates"
        return "" if _is_free(arr) else "arrangement is not free"
    return f"unknown step kind {kind!r}"


def replay_refutation(A: Arrangement, trace: dict, cls: str | None = None) -> Check:
    """Replay a refutation trace node by node.

    For each node the candidate hyperplanes are recomputed from scratch;
    every candidate must appear among the recorded attempts, pointing at a
    child that is itself a node of the trace (and so replayed too), or at a
    restriction that an exact freeness test rejects again. Isomorphism
    shortcuts are checked by applying the recorded matrix.
    """
    try:
        cls = cls or trace["class"]
        root, nodes = _parse_dag(A, trace)
    except (KeyError, TypeError) as exc:
        return Check(False, f"malformed trace: {exc}")
    except CertificateError as exc:
        return Check(False, str(exc))
    ctx = Context(A)
    search = _Search(ctx, budget=10 ** 12, group_isomorphic=False)
    node_of = {nid: (_mask(e["flat"]), _mask(e["present"])) for nid, e in nodes.items()}
    for nid, e in sorted(nodes.items()):
        node = node_of[nid]
        data = e["data"] or {}
        kind = data.get("kind")
        if kind == "isomorphic":
            other = _ref(data["isomorphic_to"])
            M = [[Fraction(p, q) for p, q in row] for row in data["matrix"]]
            ea, _ = essentialize(ctx.arrangement(node)[0])
            eo, _ = essentialize(ctx.arrangement(node_of[other])[0])
            if not transform(ea, M).same_hyperplanes(eo):
                return Check(False, f"node {nid}: recorded isomorphism is wrong")
            continue
        plan = search.plan(cls, node)
        if plan.base is not None:
            return Check(False, f"node {nid} is a base case, hence a member")
        if kind in ("chi does not split", "not free"):
            if plan.fail is None:
                return Check(False, f"node {nid}: claimed failure does not reproduce")
            continue
        if kind != "exhausted" or plan.fail is not None:
            return Check(False, f"node {nid}: unexpected record {kind!r}")
        attempts = {(t["hyperplane"], t["kind"]): t for t in data.get("tried", [])}
        for h, okind, children in plan.obligations:
            t = attempts.get((h, okind))
            if t is None:
                return Check(False, f"node {nid}: candidate {h} ({okind}) was never refuted")
            roles = dict(children)
            if t["role"] not in roles:
                return Check(False, f"node {nid}: candidate {h} refuted through a foreign role")
            child = roles[t["role"]]
            if t["role"] == "free":
                if search.free(child):
                    return Check(False, f"node {nid}: restriction at {h} is free after all")
                continue
            cid = t["child"].get("node") if isinstance(t["child"], dict) else None
            if cid is None or node_of.get(cid) != child:
                return Check(False, f"node {nid}: candidate {h} points at the wrong child")
    return Check(True)


def class_trace_nodes(verdict: ClassVerdict) -> list[dict]:
    data = verdict.trace or verdict.certificate or {}
    return data.get("nodes", [])


def node_arrangement(A: Arrangement, entry: dict) -> Arrangement:
    """The arrangement of one exported node, rebuilt from A."""
    root, _ = essentialize(A)
    return _node_arrangement(root, entry["flat"], entry["present"])[0]
