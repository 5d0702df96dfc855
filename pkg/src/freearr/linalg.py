"""Exact linear algebra over the rationals.

Small systems (flats, restrictions, isomorphism frames) go through the
pure-Python routines below. The large homogeneous systems that come up in
derivation modules are handed to FLINT, which works with exact integers.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import flint
import numpy as np

Vector = tuple


def _bitsize(q: Fraction) -> int:
    return q.numerator.bit_length() + q.denominator.bit_length()


def rref(rows: Iterable[Sequence], ncols: int | None = None):
    """Reduced row echelon form over Q.

    Returns ``(R, pivots)`` where ``R`` holds only the nonzero rows. Among the
    candidate pivots in a column the entry of smallest bit size is chosen.
    """
    m = [[Fraction(x) for x in row] for row in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        best = None
        for i in range(r, len(m)):
            if m[i][c] != 0 and (best is None or _bitsize(m[i][c]) < _bitsize(m[best][c])):
                best = i
        if best is None:
            continue
        m[r], m[best] = m[best], m[r]
        piv = m[r][c]
        if piv != 1:
            m[r] = [x / piv for x in m[r]]
        prow = m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], prow)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Iterable[Sequence], ncols: int | None = None) -> int:
    return len(rref(rows, ncols)[1])


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to a primitive integer vector (sign kept)."""
    den = 1
    for x in v:
        x = Fraction(x)
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def kernel(rows: Sequence[Sequence], ncols: int) -> list[tuple[int, ...]]:
    """Integer basis of the right kernel ``{v : row . v = 0 for all rows}``.

    The basis is canonical for the row space: one vector per non-pivot
    column, with a 1 (before scaling) in that column and 0 in the other
    free columns.
    """
    R, pivots = rref(rows, ncols) if rows else ([], [])
    pset = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pset:
            continue
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(primitive(v))
    return basis


def det(matrix: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction Gaussian elimination."""
    m = [[Fraction(x) for x in row] for row in matrix]
    n = len(m)
    sign = 1
    result = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        p = m[c][c]
        result *= p
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / p
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return sign * result


def inverse(matrix: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(matrix)
    aug = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(matrix)]
    R, pivots = rref(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(R) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R]


def solve_coordinates(basis: Sequence[Sequence], v: Sequence) -> list[Fraction] | None:
    """Coordinates of ``v`` in the span of ``basis`` (rows), or None."""
    k = len(basis)
    n = len(v)
    aug = [[basis[j][i] for j in range(k)] + [v[i]] for i in range(n)]
    R, pivots = rref(aug, k + 1)
    if k in pivots:
        return None
    coords = [Fraction(0)] * k
    for row, p in zip(R, pivots):
        coords[p] = row[k]
    return coords


def mat_vec(matrix: Sequence[Sequence], v: Sequence) -> list:
    return [sum(a * b for a, b in zip(row, v)) for row in matrix]


# -- large sparse homogeneous systems --------------------------------------

def _dense(rows: Sequence[dict], ncols: int) -> np.ndarray:
    R = np.zeros((len(rows), ncols), dtype=np.int64)
    for i, row in enumerate(rows):
        if row:
            cols = np.fromiter(row.keys(), dtype=np.int64, count=len(row))
            vals = np.fromiter(row.values(), dtype=np.int64, count=len(row))
            R[i, cols] = vals
    return R


def _compress(R: np.ndarray, extra: int, seed: int) -> np.ndarray:
    """Random {-1,0,1} combinations of the rows; the kernel can only grow."""
    nrows, ncols = R.shape
    m = ncols + extra
    if nrows <= m:
        return R
    bound = float(np.abs(R).max(initial=0)) * nrows
    if bound >= 2.0 ** 52:
        return R
    G = np.random.default_rng(seed).integers(-1, 2, size=(m, nrows)).astype(np.float64)
    return (G @ R.astype(np.float64)).astype(np.int64)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def _primes_below(n: int):
    p = n - 1
    while p > 2:
        if _is_prime(p):
            yield p
        p -= 1


def _vanishes(R: np.ndarray, vectors: list[list[int]]) -> bool:
    """Exact test that ``R v = 0`` for every integer vector v.

    Products are computed modulo enough primes (in float64, kept below 2^53)
    that their product exceeds twice the largest possible |(R v)_i|.
    """
    if not vectors:
        return True
    ncols = R.shape[1]
    row_l1 = int(np.abs(R).sum(axis=1).max(initial=0))
    vmax = max(abs(x) for v in vectors for x in v)
    bound = 2 * row_l1 * vmax + 1
    pmax = int((2.0 ** 53 / max(ncols, 1)) ** 0.5)
    Rf = R.astype(np.float64)
    modulus = 1
    for p in _primes_below(min(pmax, 2 ** 26)):
        Rp = np.mod(Rf, p)
        V = np.array([[x % p for x in v] for v in vectors], dtype=np.float64).T
        if np.any(np.mod(Rp @ V, p)):
            return False
        modulus *= p
        if modulus > bound:
            return True
    raise ArithmeticError("ran out of verification primes")


def _canonical_basis(vectors: list[list[int]], ncols: int) -> list[tuple[int, ...]]:
    """Primitive integer rows of the RREF of the span of ``vectors``."""
    if not vectors:
        return []
    M = flint.fmpq_mat(len(vectors), ncols, [x for v in vectors for x in v])
    R = M.rref()[0]
    out = []
    for i in range(len(vectors)):
        row = [Fraction(int(R[i, j].p), int(R[i, j].q)) for j in range(ncols)]
        if any(row):
            out.append(primitive(row))
    return out


def integer_nullspace(rows: Sequence[dict], ncols: int, seed: int = 0) -> list[tuple[int, ...]]:
    """Exact basis of ``{v : sum_j row[j] v[j] = 0}`` as primitive integer vectors.

    ``rows`` are sparse integer rows (column -> coefficient). Tall systems
    are first compressed by random row combinations; the kernel of the
    compressed system contains the true kernel, and equality is then checked
    exactly, so the answer never depends on the random choice. The basis is
    the RREF of the kernel, scaled to primitive integer rows.
    """
    if ncols == 0:
        return []
    if not rows:
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    R = _dense(rows, ncols)
    for attempt in range(3):
        C = _compress(R, 8 + 24 * attempt, seed + attempt)
        K, nullity = flint.fmpz_mat(C.tolist()).nullspace()
        vectors = [[int(K[i, j]) for i in range(ncols)] for j in range(nullity)]
        if C is R or _vanishes(R, vectors):
            return _canonical_basis(vectors, ncols)
    K, nullity = flint.fmpz_mat(R.tolist()).nullspace()
    return _canonical_basis([[int(K[i, j]) for i in range(ncols)] for j in range(nullity)], ncols)


def nullity_upper_bound(rows: Sequence[dict], ncols: int, prime: int = 2 ** 31 - 1) -> int:
    """An upper bound on the rational nullity, from a rank modulo ``prime``.

    Reduction mod p and row compression can only lower the rank, so when the
    bound is 0 the rational kernel is provably trivial.
    """
    if ncols == 0:
        return 0
    if not rows:
        return ncols
    C = _compress(_dense(rows, ncols), 8, 0)
    M = flint.nmod_mat(C.shape[0], ncols, [int(x) % prime for x in C.ravel().tolist()], prime)
    return ncols - M.rank()


def matrix_rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a dense rational matrix via FLINT."""
    if not rows:
        return 0
    M = flint.fmpq_mat(len(rows), len(rows[0]))
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if x:
                x = Fraction(x)
                M[i, j] = flint.fmpq(x.numerator, x.denominator)
    return M.rank()
