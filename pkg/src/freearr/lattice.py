"""Intersection lattice, Moebius function and characteristic polynomial.

Flats are identified by the bitmask of hyperplanes containing them (the
closure), which is what makes deduplication cheap. Each flat also carries an
integer basis of the subspace so that the next rank can be produced by
intersecting with one more hyperplane.

Polynomials in ``t`` are plain tuples of integer coefficients, lowest degree
first.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import gcd

import numpy as np

from . import linalg
from .arrangement import Arrangement, whole_space
from .errors import OracleTooLarge

IntPoly = tuple

WHITNEY_BOUND = 20
_INT64_SAFE = 1 << 40


@dataclass
class Lattice:
    """L(A) stratified by rank.

    ``masks[r]`` lists the closures of the rank-r flats, ``bases[r]`` their
    subspace bases, ``moebius[r]`` the Moebius values and ``covers[r]`` the
    pairs ``(i, j)`` with flat ``i`` of rank r covered by flat ``j`` of rank
    r + 1.
    """

    arrangement: Arrangement
    masks: list
    bases: list
    moebius: list
    covers: list

    @property
    def rank(self) -> int:
        return len(self.masks) - 1

    def num_flats(self) -> int:
        return sum(len(m) for m in self.masks)

    def flat_counts(self) -> list[int]:
        return [len(m) for m in self.masks]

    def iter_flats(self):
        for r, ms in enumerate(self.masks):
            for i, m in enumerate(ms):
                yield r, m, self.bases[r][i], self.moebius[r][i]


def _primitive_rows(rows):
    out = []
    for row in rows:
        g = 0
        for x in row:
            g = gcd(g, x)
        if g > 1:
            row = tuple(x // g for x in row)
        out.append(tuple(row))
    return out


def _meet_basis(basis, h):
    """Integer basis of (span basis) ∩ ker h, assuming h does not vanish on it."""
    c = [sum(a * b for a, b in zip(h, v)) for v in basis]
    p = min((i for i in range(len(c)) if c[i] != 0), key=lambda i: (abs(c[i]), i))
    cp = c[p]
    vp = basis[p]
    new = []
    for i, v in enumerate(basis):
        if i == p:
            continue
        ci = c[i]
        if ci == 0:
            new.append(v)
        else:
            new.append(tuple(cp * x - ci * y for x, y in zip(v, vp)))
    return _primitive_rows(new)


class _MaskComputer:
    """Finds the hyperplanes vanishing on a subspace, vectorised when safe."""

    def __init__(self, normals, dim):
        self.normals = normals
        self.dim = dim
        big = any(abs(x) >= _INT64_SAFE for n in normals for x in n)
        self.N = None if big or not normals else np.array(normals, dtype=np.int64)

    def __call__(self, basis) -> int:
        if not basis:
            return (1 << len(self.normals)) - 1
        if self.N is not None and all(abs(x) < _INT64_SAFE for v in basis for x in v):
            B = np.array(basis, dtype=np.int64).T
            zero = ~np.any(self.N @ B, axis=1)
            mask = 0
            for i in np.flatnonzero(zero):
                mask |= 1 << int(i)
            return mask
        mask = 0
        for i, n in enumerate(self.normals):
            if all(sum(a * b for a, b in zip(n, v)) == 0 for v in basis):
                mask |= 1 << i
        return mask


def build_lattice(A: Arrangement, max_rank: int | None = None) -> Lattice:
    """All flats of A, produced rank by rank by intersecting with one hyperplane.

    With ``max_rank`` only the flats of rank at most ``max_rank`` are built.
    """
    n = len(A)
    V = whole_space(A)
    masks = [[0]]
    bases = [[V.basis]]
    covers = []
    small = 0 < n <= 62 and all(abs(x) < 1 << 12 for h in A.normals for x in h)
    N = np.array(A.normals, dtype=np.int64) if small else None
    while True:
        r = len(masks) - 1
        if max_rank is not None and r >= max_rank:
            break
        step = None
        if small and r < A.dim:
            step = _next_rank_numpy(N, masks[r], bases[r])
        if step is None:
            step = _next_rank_python(A, masks[r], bases[r])
        next_masks, next_bases, cov = step
        if not next_masks:
            break
        masks.append(next_masks)
        bases.append(next_bases)
        covers.append(cov)
    moebius = _moebius(masks, n)
    return Lattice(A, masks, bases, moebius, covers)


def _next_rank_python(A, masks, bases):
    full = (1 << len(A)) - 1
    compute_mask = _MaskComputer(A.normals, A.dim)
    next_masks = []
    next_bases = []
    index = {}
    cov = []
    for i, (m, basis) in enumerate(zip(masks, bases)):
        remaining = full & ~m
        while remaining:
            low = remaining & -remaining
            h = low.bit_length() - 1
            nb = _meet_basis(basis, A.normals[h])
            nm = compute_mask(nb)
            remaining &= ~nm
            j = index.get(nm)
            if j is None:
                j = index[nm] = len(next_masks)
                next_masks.append(nm)
                next_bases.append(tuple(nb))
            cov.append((i, j))
    return next_masks, next_bases, cov


_CHUNK = 8192


def _next_rank_numpy(N, masks, bases):
    """Vectorised meet of every flat of one rank with every hyperplane above it.

    Returns None when intermediate integers could leave the safe int64 range,
    in which case the caller falls back to the exact Python path.
    """
    n, ell = N.shape
    k = len(bases[0])
    if k == 0:
        return [], [], []
    Bs = np.array(bases, dtype=np.int64).reshape(len(bases), k, ell)
    if np.abs(Bs).max() >= 1 << 20:
        return None
    mask_arr = np.array(masks, dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    inside = (mask_arr[:, None] & weights[None, :]) != 0
    fi, hi = np.nonzero(~inside)
    index = {}
    next_masks, next_bases = [], []
    pair_chunks = []
    for start in range(0, len(fi), _CHUNK):
        f = fi[start:start + _CHUNK]
        h = hi[start:start + _CHUNK]
        B = Bs[f]  # (P, k, ell)
        c = np.einsum("pkl,pl->pk", B, N[h])  # (P, k)
        nz = c != 0
        absc = np.where(nz, np.abs(c), np.iinfo(np.int64).max)
        piv = np.argmin(absc, axis=1)
        P = len(f)
        rows = np.arange(P)
        cp = c[rows, piv]
        vp = B[rows, piv]  # (P, ell)
        newB = cp[:, None, None] * B - c[:, :, None] * vp[:, None, :]
        keep = np.ones((P, k), dtype=bool)
        keep[rows, piv] = False
        newB = newB[keep].reshape(P, k - 1, ell)
        if k > 1:
            g = np.gcd.reduce(newB, axis=2)
            g[g == 0] = 1
            newB = newB // g[:, :, None]
            if np.abs(newB).max() >= 1 << 20:
                return None
            zero = ~np.any(np.einsum("pkl,nl->pkn", newB, N) != 0, axis=1)  # (P, n)
        else:
            zero = np.ones((P, n), dtype=bool)
        new_masks = zero.astype(np.int64) @ weights
        uniq, first, inverse = np.unique(new_masks, return_index=True, return_inverse=True)
        jmap = np.empty(len(uniq), dtype=np.int64)
        for u, (nm, t) in enumerate(zip(uniq.tolist(), first.tolist())):
            j = index.get(nm)
            if j is None:
                j = index[nm] = len(next_masks)
                next_masks.append(nm)
                next_bases.append(tuple(map(tuple, newB[t].tolist())))
            jmap[u] = j
        js = jmap[inverse.reshape(-1)]
        pair_chunks.append(f.astype(np.int64) * (1 << 31) + js)
    codes = np.unique(np.concatenate(pair_chunks)) if pair_chunks else []
    cov = [(int(c >> 31), int(c & ((1 << 31) - 1))) for c in codes]
    return next_masks, next_bases, cov


def _mask_matrix(masks, n):
    M = np.zeros((len(masks), n), dtype=np.float64)
    for i, m in enumerate(masks):
        while m:
            low = m & -m
            M[i, low.bit_length() - 1] = 1.0
            m ^= low
    return M


def _moebius(masks, n):
    """mu(X) = -sum of mu over flats strictly below X, rank by rank.

    Y lies below X iff mask(Y) is a subset of mask(X); subset counts come
    from a 0/1 matrix product, exact in float64.
    """
    mats = [_mask_matrix(ms, n) for ms in masks]
    mu = [np.array([1], dtype=np.int64)]
    for r in range(1, len(masks)):
        comp = 1.0 - mats[r]
        total = [0] * len(masks[r])
        for s in range(r):
            below = (mats[s] @ comp.T) == 0  # (F_s, F_r)
            bound = int(np.abs(mu[s]).max()) * len(mu[s])
            if bound < (1 << 62):
                part = below.T.astype(np.int64) @ mu[s]
                total = [a + int(b) for a, b in zip(total, part)]
            else:  # pragma: no cover - astronomically large lattices only
                vals = [int(v) for v in mu[s]]
                for j in range(len(total)):
                    total[j] += sum(vals[i] for i in np.flatnonzero(below[:, j]))
        if max(abs(v) for v in total) < (1 << 62):
            mu.append(np.array([-v for v in total], dtype=np.int64))
        else:  # pragma: no cover
            mu.append(np.array([-v for v in total], dtype=object))
    return [[int(v) for v in m] for m in mu]


def char_poly_from_lattice(L: Lattice) -> IntPoly:
    ell = L.arrangement.dim
    coeffs = [0] * (ell + 1)
    for r, mus in enumerate(L.moebius):
        coeffs[ell - r] += sum(mus)
    return tuple(coeffs)


_CACHE: dict = {}
_CACHE_LIMIT = 20000


def char_poly(A: Arrangement) -> IntPoly:
    """chi(A, t) = sum over flats X of mu(X) t^dim X; cached by hyperplane set."""
    key = A.key
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    if not A.normals:
        p = tuple([0] * A.dim + [1])
    else:
        p = char_poly_from_lattice(build_lattice(A))
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[key] = p
    return p


def char_poly_whitney(A: Arrangement, bound: int = WHITNEY_BOUND) -> IntPoly:
    """Independent oracle: sum over subsets B of (-1)^|B| t^(l - rank B)."""
    if len(A) > bound:
        raise OracleTooLarge(f"{len(A)} hyperplanes exceed the oracle bound {bound}")
    ell = A.dim
    coeffs = [0] * (ell + 1)
    normals = A.normals
    for k in range(len(normals) + 1):
        sign = -1 if k % 2 else 1
        for sub in combinations(normals, k):
            r = linalg.rank(sub, ell) if sub else 0
            coeffs[ell - r] += sign
    return tuple(coeffs)


# -- integer polynomials ---------------------------------------------------

def poly_trim(p) -> IntPoly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


def poly_mul(p, q) -> IntPoly:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly_trim(out)


def poly_sub(p, q) -> IntPoly:
    n = max(len(p), len(q))
    return poly_trim([(p[i] if i < len(p) else 0) - (q[i] if i < len(q) else 0) for i in range(n)])


def poly_add(p, q) -> IntPoly:
    n = max(len(p), len(q))
    return poly_trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_eval(p, t):
    acc = 0
    for c in reversed(p):
        acc = acc * t + c
    return acc


def from_roots(roots) -> IntPoly:
    p = (1,)
    for b in roots:
        p = poly_mul(p, (-b, 1))
    return p


def poly_divmod(p, q):
    """Division over Z[t]; returns (quotient, remainder) or None if a step is not integral."""
    p = list(poly_trim(p))
    q = poly_trim(q)
    if q == (0,):
        raise ZeroDivisionError("division by the zero polynomial")
    dq = len(q) - 1
    lead = q[-1]
    if len(p) - 1 < dq:
        return (0,), tuple(p)
    quot = [0] * (len(p) - dq)
    for k in range(len(p) - 1 - dq, -1, -1):
        c = p[k + dq]
        if c % lead:
            return None
        c //= lead
        quot[k] = c
        if c:
            for i, b in enumerate(q):
                p[k + i] -= c * b
    return poly_trim(quot), poly_trim(p[:dq] or [0])


def divides(p, q) -> bool:
    """Whether p divides q in Z[t] (p nonzero)."""
    p = poly_trim(p)
    if p == (0,):
        raise ZeroDivisionError("p must be nonzero")
    if poly_trim(q) == (0,):
        return True
    res = poly_divmod(q, p)
    return res is not None and all(c == 0 for c in res[1])


@dataclass(frozen=True)
class NonSplitting:
    """A monic polynomial that is not a product of integer linear factors.

    ``roots`` are the integer roots that were split off, ``residual`` the
    remaining factor without integer roots.
    """

    roots: tuple
    residual: IntPoly

    def __bool__(self) -> bool:
        return False


def _divisors(n: int, limit: int):
    n = abs(n)
    small = []
    large = []
    d = 1
    while d * d <= n and d <= limit:
        if n % d == 0:
            small.append(d)
            if n // d <= limit and n // d != d:
                large.append(n // d)
        d += 1
    return sorted(set(small + large))


def integer_root_multiset(p: IntPoly):
    """Roots of a monic integer polynomial if it splits over Z, else NonSplitting.

    Trial division by divisors of the constant term of the deflated
    polynomial, repeated to collect multiplicities.
    """
    p = poly_trim(p)
    if p[-1] != 1:
        raise ValueError("polynomial must be monic")
    roots = []
    while len(p) > 1 and p[0] == 0:
        roots.append(0)
        p = p[1:]
    while len(p) > 1:
        bound = 1 + max(abs(c) for c in p[:-1])
        found = None
        for d in _divisors(p[0], bound):
            for r in (d, -d):
                if poly_eval(p, r) == 0:
                    found = r
                    break
            if found is not None:
                break
        if found is None:
            return NonSplitting(tuple(sorted(roots)), p)
        roots.append(found)
        p = poly_divmod(p, (-found, 1))[0]
    return tuple(sorted(roots))


def format_poly(p: IntPoly, var: str = "t") -> str:
    p = poly_trim(p)
    terms = []
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if k == 0:
            body = str(a)
        else:
            mon = var if k == 1 else f"{var}^{k}"
            body = mon if a == 1 else f"{a}*{mon}"
        terms.append((sign, body))
    if not terms:
        return "0"
    s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        s += f" {sign} {body}"
    return s


def format_factored(roots, var: str = "t") -> str:
    from collections import Counter
    parts = []
    for b, m in sorted(Counter(roots).items()):
        f = var if b == 0 else (f"({var} - {b})" if b > 0 else f"({var} + {-b})")
        parts.append(f if m == 1 else f"{f}^{m}")
    return "*".join(parts) if parts else "1"


def exponents(A: Arrangement):
    """Integer roots of chi(A, t), or NonSplitting."""
    return integer_root_multiset(char_poly(A))


def rank2_flats(A: Arrangement) -> list[int]:
    """Masks of the rank-2 flats (the lines of the underlying matroid)."""
    L = build_lattice(A, max_rank=2)
    return L.masks[2] if L.rank >= 2 else []
