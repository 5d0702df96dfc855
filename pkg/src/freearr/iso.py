"""Linear and combinatorial isomorphism of arrangements.

Both searches backtrack over hyperplane correspondences. Candidates are
pruned by colours obtained from refining, in lockstep for the two inputs,
the incidence structure of hyperplanes and rank-2 flats.

The linear test only branches while it maps a basis of normals; after that
the images of the remaining normals pin down the diagonal scaling one
connected piece at a time, and the candidate matrix is checked directly.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from . import linalg
from .arrangement import Arrangement, canonicalize, essentialize
from .lattice import build_lattice, char_poly, rank2_flats


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class _Incidence:
    def __init__(self, A: Arrangement):
        self.A = A
        self.n = len(A)
        self.lines = rank2_flats(A) if A.dim >= 2 else []
        self.line_of = {}
        self.lines_through = [[] for _ in range(self.n)]
        for m in self.lines:
            members = _bits(m)
            for i in members:
                self.lines_through[i].append(m)
            for i, j in combinations(members, 2):
                self.line_of[i, j] = m
                self.line_of[j, i] = m

    def line(self, i, j) -> int:
        return self.line_of[i, j]


def _refine(SA: _Incidence, SB: _Incidence):
    """Colour refinement run jointly so colour ids are comparable.

    Returns (colours_A, colours_B) or None when the colour histograms differ.
    """
    cA = [0] * SA.n
    cB = [0] * SB.n
    nclasses = 1
    while True:
        table = {}

        def signature(S, colours, i):
            parts = []
            for m in S.lines_through[i]:
                others = sorted(colours[k] for k in _bits(m) if k != i)
                parts.append(tuple(others))
            return colours[i], tuple(sorted(parts))

        sA = [signature(SA, cA, i) for i in range(SA.n)]
        sB = [signature(SB, cB, i) for i in range(SB.n)]
        for s in sorted(set(sA) | set(sB)):
            table[s] = len(table)
        nA = [table[s] for s in sA]
        nB = [table[s] for s in sB]
        if sorted(nA) != sorted(nB):
            return None
        cA, cB = nA, nB
        if len(table) == nclasses:
            return cA, cB
        nclasses = len(table)


def _prepare(A: Arrangement, B: Arrangement):
    if len(A) != len(B) or A.dim != B.dim:
        return None
    if char_poly(A) != char_poly(B):
        return None
    SA, SB = _Incidence(A), _Incidence(B)
    colours = _refine(SA, SB)
    if colours is None:
        return None
    return SA, SB, colours[0], colours[1]


def invariant_key(A: Arrangement) -> tuple:
    """Cheap isomorphism invariant used to bucket arrangements before searching."""
    E, k = essentialize(A)
    S = _Incidence(E)
    sig = sorted(tuple(sorted(len(_bits(m)) for m in S.lines_through[i])) for i in range(S.n))
    return (E.dim, k, len(E), char_poly(E), tuple(sig))


# -- linear isomorphism ------------------------------------------------------

def _basis_order(A: Arrangement, colours) -> list[int]:
    """Indices of a basis of normals, rarest colours first."""
    freq = {}
    for c in colours:
        freq[c] = freq.get(c, 0) + 1
    order = sorted(range(len(A)), key=lambda i: (freq[colours[i]], i))
    chosen = []
    for i in order:
        if linalg.rank([A.normals[j] for j in chosen] + [A.normals[i]], A.dim) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == A.dim:
                break
    return chosen


def _projective_key(v) -> tuple:
    return canonicalize(linalg.primitive(v))


def linear_isomorphic(A: Arrangement, B: Arrangement):
    """A matrix M with {canonicalize(a M) : a in A} = B, or None.

    Inputs are essentialized first, so for non-essential arrangements M
    relates the essentializations (and the centers must have equal
    dimension).
    """
    A, kA = essentialize(A)
    B, kB = essentialize(B)
    if kA != kB:
        return None
    r = A.dim
    if len(A) == 0:
        return [[Fraction(int(i == j)) for j in range(r)] for i in range(r)] if len(B) == 0 else None
    prep = _prepare(A, B)
    if prep is None:
        return None
    SA, SB, cA, cB = prep
    I = _basis_order(A, cA)
    AI_inv = linalg.inverse([A.normals[i] for i in I])
    coords = [linalg.mat_vec(list(zip(*AI_inv)), a) for a in A.normals]  # a @ AI_inv
    rest = [i for i in range(len(A)) if i not in set(I)]
    target = set(B.normals)

    def extend(J):
        k = len(J)
        if k == r:
            return _finish(J)
        i = I[k]
        for j in range(len(B)):
            if j in J or cB[j] != cA[i]:
                continue
            ok = True
            for s in range(k):
                if len(_bits(SA.line(I[s], i))) != len(_bits(SB.line(J[s], j))):
                    ok = False
                    break
            if not ok:
                continue
            if linalg.rank([B.normals[t] for t in J] + [B.normals[j]], r) != k + 1:
                continue
            M = extend(J + [j])
            if M is not None:
                return M
        return None

    def _finish(J):
        BJ = [B.normals[j] for j in J]
        BJ_inv = linalg.inverse(BJ)
        BJ_inv_T = list(zip(*BJ_inv))
        dcoords = [linalg.mat_vec(BJ_inv_T, b) for b in B.normals]
        lookup = {}
        by_support = {}
        for m, d in enumerate(dcoords):
            lookup[_projective_key(d)] = m
            supp = tuple(k for k in range(r) if d[k] != 0)
            by_support.setdefault(supp, []).append(m)
        used = set(J)
        parent = list(range(r))
        scale = [Fraction(1)] * r
        lam = _solve_scaling(rest, coords, dcoords, lookup, by_support, used, parent, scale, cA, cB)
        if lam is None:
            return None
        # M = AI^{-1} diag(lam) BJ
        M = [[sum(AI_inv[a][k] * lam[k] * BJ[k][b] for k in range(r)) for b in range(r)]
             for a in range(r)]
        images = set()
        for a in A.normals:
            img = canonicalize(linalg.primitive([sum(a[x] * M[x][y] for x in range(r)) for y in range(r)]))
            if img not in target or img in images:
                return None
            images.add(img)
        return M

    return extend([])


def _root(parent, k):
    while parent[k] != k:
        k = parent[k]
    return k


def _solve_scaling(rest, coords, dcoords, lookup, by_support, used, parent, scale, cA, cB):
    """Find lambda with lambda * coords[i] proportional to some unused dcoords[m] for all i."""
    r = len(parent)

    def search(pending, used, parent, scale):
        if not pending:
            return [scale[k] for k in range(r)]
        # forced moves first: supports inside a single component
        for pos, i in enumerate(pending):
            c = coords[i]
            supp = [k for k in range(r) if c[k] != 0]
            roots = {_root(parent, k) for k in supp}
            if len(roots) == 1:
                img = [scale[k] * c[k] if c[k] != 0 else 0 for k in range(r)]
                m = lookup.get(_projective_key(img))
                if m is None or m in used or cB[m] != cA[i]:
                    return None
                return search(pending[:pos] + pending[pos + 1:], used | {m}, parent, scale)
        i = pending[0]
        c = coords[i]
        supp = tuple(k for k in range(r) if c[k] != 0)
        for m in by_support.get(supp, []):
            if m in used or cB[m] != cA[i]:
                continue
            d = dcoords[m]
            # lambda_k = mu * d_k / c_k; per component the root value rho follows
            rho = {}
            ok = True
            for k in supp:
                root = _root(parent, k)
                val = d[k] / (c[k] * scale[k])
                if root in rho and rho[root] != val:
                    ok = False
                    break
                rho[root] = val
            if not ok:
                continue
            roots = sorted(rho)
            base = roots[0]
            new_parent = list(parent)
            new_scale = list(scale)
            for root in roots[1:]:
                factor = rho[root] / rho[base]
                for k in range(r):
                    if _root(parent, k) == root:
                        new_scale[k] = scale[k] * factor
                new_parent[root] = base
            res = search(pending[1:], used | {m}, new_parent, new_scale)
            if res is not None:
                return res
        return None

    return search(list(rest), frozenset(used), parent, scale)


# -- matroid (lattice) isomorphism -------------------------------------------

def matroid_isomorphic(A: Arrangement, B: Arrangement):
    """A bijection of hyperplane indices inducing L(A) ≅ L(B), or None."""
    A, kA = essentialize(A)
    B, kB = essentialize(B)
    if len(A) == 0 or len(B) == 0:
        return {} if len(A) == len(B) and A.dim == B.dim else None
    prep = _prepare(A, B)
    if prep is None:
        return None
    SA, SB, cA, cB = prep
    n = len(A)
    LA = build_lattice(A)
    LB = build_lattice(B)
    if LA.flat_counts() != LB.flat_counts():
        return None
    flatsB = set(m for ms in LB.masks for m in ms)
    flatsA = [m for ms in LA.masks for m in ms]
    freq = {}
    for c in cA:
        freq[c] = freq.get(c, 0) + 1
    order = sorted(range(n), key=lambda i: (freq[cA[i]], i))
    sigma = {}
    used = set()

    def consistent(i, m):
        for j, mj in sigma.items():
            la = SA.line(i, j)
            lb = SB.line(m, mj)
            if len(_bits(la)) != len(_bits(lb)):
                return False
            for k, mk in sigma.items():
                if k == j:
                    continue
                if bool(la >> k & 1) != bool(lb >> mk & 1):
                    return False
        return True

    def verify():
        for fm in flatsA:
            img = 0
            for i in _bits(fm):
                img |= 1 << sigma[i]
            if img not in flatsB:
                return False
        return True

    def search(pos):
        if pos == n:
            return verify()
        i = order[pos]
        for m in range(n):
            if m in used or cB[m] != cA[i] or not consistent(i, m):
                continue
            sigma[i] = m
            used.add(m)
            if search(pos + 1):
                return True
            del sigma[i]
            used.discard(m)
        return False

    if search(0):
        return dict(sorted(sigma.items()))
    return None
