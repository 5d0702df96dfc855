"""Slow, independent reference computations used to cross-check the package.

Nothing here calls into the package's linear algebra, lattice or
derivation code: ranks use plain Fraction elimination, determinants use
sympy, and roots are generated by a Weyl-group orbit instead of string
closure.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, combinations_with_replacement

import sympy


def frac_rank(rows) -> int:
    M = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][c]
        for i in range(len(M)):
            if i != rank and M[i][c] != 0:
                f = M[i][c] / p
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def subspace_key(normals, dim):
    """RREF of the row space: a canonical name for the common kernel."""
    M = [[Fraction(x) for x in r] for r in normals]
    out = []
    r = 0
    for c in range(dim):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        p = M[r][c]
        M[r] = [a / p for a in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        r += 1
    return tuple(tuple(row) for row in M[:r])


def brute_force_flat_counts(normals, dim):
    """Number of flats per rank, from all subset intersections."""
    seen = {}
    for k in range(len(normals) + 1):
        for sub in combinations(normals, k):
            key = subspace_key(sub, dim) if sub else ()
            seen[key] = len(key)
    counts = [0] * (max(seen.values()) + 1)
    for r in seen.values():
        counts[r] += 1
    return counts


def whitney_chi(normals, dim):
    coeffs = [0] * (dim + 1)
    for k in range(len(normals) + 1):
        for sub in combinations(normals, k):
            r = frac_rank(sub) if sub else 0
            coeffs[dim - r] += (-1) ** k
    return tuple(coeffs)


# -- derivations ---------------------------------------------------------------

def _monomials(n, d):
    out = []
    for combo in combinations_with_replacement(range(n), d):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out


def _substitute(mono, a):
    """x^mono on ker(a): eliminate the first variable p with a_p != 0.

    Returns a dict over the remaining exponents (x_p's slot kept at 0).
    """
    n = len(a)
    p = next(i for i in range(n) if a[i] != 0)
    # x_p = -sum_{j != p} a_j x_j / a_p
    lin = {}
    for j in range(n):
        if j != p and a[j] != 0:
            e = [0] * n
            e[j] = 1
            lin[tuple(e)] = Fraction(-a[j], a[p])
    poly = {tuple(mono[j] if j != p else 0 for j in range(n)): Fraction(1)}
    for _ in range(mono[p]):
        nxt = {}
        for e1, c1 in poly.items():
            for e2, c2 in lin.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                nxt[e] = nxt.get(e, 0) + c1 * c2
        poly = nxt
    return {e: c for e, c in poly.items() if c != 0}


def derivation_dim(normals, dim, d) -> int:
    """dim D(A)_d by brute-force linear algebra over Fractions."""
    monos = _monomials(dim, d)
    cols = {(i, m): k for k, (i, m) in enumerate((i, m) for i in range(dim) for m in monos)}
    rows = []
    for a in normals:
        # theta(alpha) restricted to ker(alpha) must vanish identically
        eqs = {}
        for i in range(dim):
            if a[i] == 0:
                continue
            for m in monos:
                for e, c in _substitute(m, a).items():
                    eqs.setdefault(e, {})
                    eqs[e][cols[i, m]] = eqs[e].get(cols[i, m], 0) + a[i] * c
        for eq in eqs.values():
            row = [0] * len(cols)
            for k, v in eq.items():
                row[k] = v
            if any(row):
                rows.append(row)
    return len(cols) - (frac_rank(rows) if rows else 0)


def saito_det_is_cQ(normals, dim, basis_json, scalar) -> bool:
    """Symbolic check of det(theta_i(x_j)) = c * Q(A) with sympy."""
    xs = sympy.symbols(f"x1:{dim + 1}")
    rows = []
    for polys in basis_json:
        row = []
        for terms in polys:
            f = sympy.Integer(0)
            for exps, num, den in terms:
                mon = sympy.Integer(1)
                for x, e in zip(xs, exps):
                    mon *= x ** e
                f += sympy.Rational(num, den) * mon
            row.append(f)
        rows.append(row)
    det = sympy.Matrix(rows).det(method="berkowitz")
    Q = sympy.Integer(1)
    for a in normals:
        Q *= sum(int(c) * x for c, x in zip(a, xs))
    return sympy.expand(det - sympy.Rational(*scalar) * Q) == 0


# -- root systems -----------------------------------------------------------------

def weyl_orbit_positive_roots(cartan):
    """Positive roots as the Weyl orbit of the simple roots, keeping the positive ones."""
    n = len(cartan)
    simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    seen = set(simple)
    todo = list(simple)
    while todo:
        beta = todo.pop()
        for i in range(n):
            pairing = sum(beta[j] * cartan[j][i] for j in range(n))
            img = list(beta)
            img[i] -= pairing
            img = tuple(img)
            if img not in seen:
                seen.add(img)
                todo.append(img)
    return sorted(r for r in seen if all(x >= 0 for x in r))


def saito_det_matches_at_points(normals, dim, basis_json, scalar, points) -> bool:
    """det(theta_i(x_j)) = c * Q(A) checked by exact evaluation at the given points."""
    c = Fraction(*scalar)
    for pt in points:
        rows = []
        for polys in basis_json:
            row = []
            for terms in polys:
                v = Fraction(0)
                for exps, num, den in terms:
                    m = Fraction(num, den)
                    for x, e in zip(pt, exps):
                        m *= Fraction(x) ** e
                    v += m
                row.append(v)
            rows.append(row)
        det = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in r] for r in rows]).det()
        q = Fraction(1)
        for a in normals:
            q *= sum(Fraction(x) * y for x, y in zip(pt, a))
        if det != sympy.Rational((c * q).numerator, (c * q).denominator):
            return False
    return True
