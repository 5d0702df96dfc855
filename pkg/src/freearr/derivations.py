"""Logarithmic derivation modules D(A) and an exact freeness decision.

A derivation is stored by its coefficient polynomials (f_1, ..., f_l),
theta = sum f_i d/dx_i, as FLINT multivariate polynomials over Q.

The solver works in coordinates adapted to the arrangement. Choose
linearly independent normals a_1, ..., a_r of A (file order) and extend them
by unit vectors to an invertible matrix P; in the coordinates y = P x the
first r hyperplanes are coordinate hyperplanes y_k = 0. Fixing H_0 = ker y_1,

    D(A) = S * theta_E  (+)  D_0(A),   D_0(A) = {theta in D(A) : theta(y_1) = 0},

so only D_0 is solved for. Its members have theta(y_1) = 0 and
theta(y_k) = y_k h_k for the other basis hyperplanes, which leaves the
coefficients of h_2, ..., h_r as unknowns; every remaining hyperplane
contributes linear conditions, namely the vanishing of theta(alpha) after
eliminating one variable with alpha = 0. Nothing in the final verdict
depends on this choice: certificates are expressed in the input
coordinates and re-verified there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from math import comb, gcd, prod

import flint

from . import linalg
from .arrangement import Arrangement, canonicalize, dot
from .errors import CertificateError, OracleTooLarge, PreconditionViolated
from .lattice import NonSplitting, char_poly, integer_root_multiset


# -- polynomials ------------------------------------------------------------

@lru_cache(maxsize=None)
def poly_ring(n: int):
    return flint.fmpq_mpoly_ctx.get(tuple(f"x{i + 1}" for i in range(n)), "degrevlex")


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple:
    """Exponent vectors of the degree-d monomials in n variables."""
    if d < 0:
        return ()
    out = []
    for combo in combinations_with_replacement(range(n), d):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return tuple(out)


def linear_form(ring, a):
    return ring.from_dict({tuple(int(i == j) for j in range(len(a))): int(x) for i, x in enumerate(a) if x})


def defining_polynomial(A: Arrangement):
    ring = poly_ring(A.dim)
    Q = ring.from_dict({(0,) * A.dim: 1})
    for a in A.normals:
        Q = Q * linear_form(ring, a)
    return Q


def _is_homogeneous(p, d: int) -> bool:
    return all(sum(e) == d for e in p.to_dict())


def poly_to_json(p) -> list:
    terms = sorted(p.to_dict().items(), reverse=True)
    return [[[int(x) for x in e], int(c.p), int(c.q)] for e, c in terms]


def poly_from_json(ring, data):
    return ring.from_dict({tuple(int(x) for x in e): flint.fmpq(int(num), int(den)) for e, num, den in data})


# -- derivations ------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    degree: int
    coeffs: tuple

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def apply(self, a):
        """theta(alpha) for the linear form with coefficient vector a."""
        ring = poly_ring(self.dim)
        out = ring.from_dict({})
        for x, f in zip(a, self.coeffs):
            if x:
                out = out + int(x) * f
        return out

    def evaluate(self, point) -> list:
        vals = [flint.fmpq(x) for x in point]
        out = []
        for f in self.coeffs:
            v = f(*vals) if not f.is_zero() else flint.fmpq(0)
            out.append(Fraction(int(v.p), int(v.q)))
        return out

    def to_json(self) -> list:
        return [poly_to_json(f) for f in self.coeffs]

    @classmethod
    def from_json(cls, degree: int, data) -> "Derivation":
        ring = poly_ring(len(data))
        return cls(degree, tuple(poly_from_json(ring, p) for p in data))


def euler(dim: int) -> Derivation:
    ring = poly_ring(dim)
    return Derivation(1, tuple(ring.gens()))


def is_member(A: Arrangement, theta: Derivation) -> bool:
    """alpha_H divides theta(alpha_H) for every H in A."""
    ring = poly_ring(A.dim)
    for a in A.normals:
        value = theta.apply(a)
        if value.is_zero():
            continue
        _, rem = divmod(value, linear_form(ring, a))
        if not rem.is_zero():
            return False
    return True


def _primitive_derivation(degree: int, coeffs) -> Derivation:
    """Scale to coprime integer coefficients, first nonzero coefficient positive."""
    den = 1
    num_gcd = 0
    lead = None
    for f in coeffs:
        for _, c in sorted(f.to_dict().items(), reverse=True):
            den = den * int(c.q) // gcd(den, int(c.q))
            num_gcd = gcd(num_gcd, int(c.p))
            if lead is None:
                lead = c
    if lead is None:
        return Derivation(degree, tuple(coeffs))
    scale = flint.fmpq(den, num_gcd)
    if lead < 0:
        scale = -scale
    return Derivation(degree, tuple(f * scale for f in coeffs))


# -- verdicts ---------------------------------------------------------------

@dataclass(frozen=True)
class NonSplittingChi:
    chi: tuple
    kind: str = "NonSplittingChi"

    def to_json(self) -> dict:
        return {"kind": self.kind, "chi": list(self.chi)}


@dataclass(frozen=True)
class GradedDimMismatch:
    degree: int
    predicted: int
    actual: int
    kind: str = "GradedDimMismatch"

    def to_json(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "predicted": self.predicted,
                "actual": self.actual}


@dataclass(frozen=True)
class SaitoIdenticallyZero:
    degree: int | None = None
    detail: str = ""
    kind: str = "SaitoIdenticallyZero"

    def to_json(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "detail": self.detail}


@dataclass(frozen=True)
class GradedDimReport:
    """d -> (dim D(A)_d, dimension predicted by the candidate exponents)."""

    table: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {str(d): {"actual": a, "predicted": p} for d, (a, p) in sorted(self.table.items())}


@dataclass(frozen=True)
class Free:
    exponents: tuple
    basis: tuple
    scalar: Fraction
    report: GradedDimReport = field(default_factory=GradedDimReport)

    free = True

    def __bool__(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {
            "verdict": "free",
            "dim": len(self.basis),
            "exponents": list(self.exponents),
            "degrees": [t.degree for t in self.basis],
            "basis": [t.to_json() for t in self.basis],
            "scalar": [self.scalar.numerator, self.scalar.denominator],
            "graded_dims": self.report.to_json(),
        }


@dataclass(frozen=True)
class NotFree:
    witness: object
    exponents: tuple | None = None
    report: GradedDimReport = field(default_factory=GradedDimReport)

    free = False

    def __bool__(self) -> bool:
        return False

    def to_json(self) -> dict:
        out = {"verdict": "not free", "witness": self.witness.to_json(),
               "graded_dims": self.report.to_json()}
        if self.exponents is not None:
            out["candidate_exponents"] = list(self.exponents)
        return out


def free_from_json(data: dict) -> Free:
    try:
        basis = tuple(Derivation.from_json(d, polys) for d, polys in zip(data["degrees"], data["basis"]))
        num, den = data["scalar"]
        return Free(tuple(data["exponents"]), basis, Fraction(num, den))
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"malformed freeness certificate: {exc}") from None


# -- graded dimensions ------------------------------------------------------

def free_dim_prediction(exps, ell: int, d: int) -> int:
    """Dimension in degree d of a free S-module with generators in degrees exps."""
    if len(exps) != ell:
        raise ValueError("need one exponent per coordinate")
    return sum(comb(d - b + ell - 1, ell - 1) for b in exps if b <= d)


# -- the adapted frame ------------------------------------------------------

class _Frame:
    """Coordinates y = P x in which a basis of normals becomes y_1, ..., y_r."""

    def __init__(self, A: Arrangement):
        self.A = A
        ell = A.dim
        basis = []
        for i, a in enumerate(A.normals):
            if linalg.rank([A.normals[j] for j in basis] + [a], ell) == len(basis) + 1:
                basis.append(i)
                if len(basis) == ell:
                    break
        self.basis_idx = basis
        self.r = len(basis)
        rows = [list(A.normals[i]) for i in basis]
        for j in range(ell):
            if len(rows) == ell:
                break
            e = [int(i == j) for i in range(ell)]
            if linalg.rank(rows + [e], ell) == len(rows) + 1:
                rows.append(e)
        self.P = rows
        self.Pinv = linalg.inverse(rows) if ell else []
        bset = set(basis)
        others = []
        for i, a in enumerate(A.normals):
            if i in bset:
                continue
            y = [sum(a[j] * self.Pinv[j][k] for j in range(ell)) for k in range(ell)]
            assert all(x == 0 for x in y[self.r:])
            others.append(canonicalize(y[: self.r]))
        self.others = others

    def ncols(self, d: int) -> int:
        return max(self.r - 1, 0) * len(monomials(self.r, d - 1))

    def system(self, d: int) -> list[dict]:
        """Sparse integer rows whose kernel is D_0(A)_d in (k, mu) coordinates."""
        r = self.r
        gm = monomials(r, d - 1)
        col = {mu: j for j, mu in enumerate(gm)}
        width = len(gm)
        rows = []
        for a in self.others:
            p = next(i for i, x in enumerate(a) if x)
            L = {j: -a[j] for j in range(r) if j != p and a[j]}
            powers = _linear_powers(L, r, d)
            block = {}
            for k in range(1, r):
                if a[k] == 0:
                    continue
                base = (k - 1) * width
                for mu in gm:
                    m = list(mu)
                    m[k] += 1
                    e = m[p]
                    m[p] = 0
                    scale = a[k] * a[p] ** (d - e)
                    c = base + col[mu]
                    for mono, cf in powers[e].items():
                        nu = tuple(x + y for x, y in zip(m, mono))
                        row = block.setdefault(nu, {})
                        row[c] = row.get(c, 0) + scale * cf
            for nu in sorted(block):
                row = {c: v for c, v in block[nu].items() if v}
                if row:
                    rows.append(row)
        return rows

    def shift(self, vec, deg: int, nu) -> dict:
        """Coordinates of y^nu * theta at degree deg + |nu| (sparse)."""
        r = self.r
        src = monomials(r, deg - 1)
        dst_deg = deg + sum(nu)
        dst = _mono_index(r, dst_deg - 1)
        w_src, w_dst = len(src), len(monomials(r, dst_deg - 1))
        out = {}
        for k in range(r - 1):
            for j, mu in enumerate(src):
                v = vec[k * w_src + j]
                if v:
                    out[k * w_dst + dst[tuple(x + y for x, y in zip(mu, nu))]] = v
        return out

    def to_derivation(self, vec, deg: int) -> Derivation:
        """Turn a D_0 coordinate vector into a derivation in x-coordinates."""
        r = self.r
        ring = poly_ring(self.A.dim)
        gm = monomials(r, deg - 1)
        w = len(gm)
        pad = (0,) * (self.A.dim - r)
        g = [ring.from_dict({})]
        for k in range(1, r):
            terms = {}
            for j, mu in enumerate(gm):
                v = vec[k * w - w + j]
                if v:
                    e = list(mu) + list(pad)
                    e[k] += 1
                    terms[tuple(e)] = int(v)
            g.append(ring.from_dict(terms))
        g += [ring.from_dict({})] * (self.A.dim - r)
        return self._pull_back(deg, g)

    def _pull_back(self, deg: int, g) -> Derivation:
        """theta(y_k) = g_k(y)  ->  theta(x_j) = sum_k Pinv[j][k] g_k(P x)."""
        ell = self.A.dim
        ring = poly_ring(ell)
        subs = [linear_form(ring, row) for row in self.P]
        gx = [gk.compose(*subs) if not gk.is_zero() else gk for gk in g]
        coeffs = []
        for j in range(ell):
            f = ring.from_dict({})
            for k in range(ell):
                c = self.Pinv[j][k]
                if c and not gx[k].is_zero():
                    f = f + gx[k] * flint.fmpq(c.numerator, c.denominator)
            coeffs.append(f)
        return _primitive_derivation(deg, coeffs)

    def euler(self) -> Derivation:
        ring = poly_ring(self.A.dim)
        gens = ring.gens()
        g = [gens[k] if k < self.r else ring.from_dict({}) for k in range(self.A.dim)]
        return self._pull_back(1, g)

    def constant(self, k: int) -> Derivation:
        """d/dy_k for a center direction k >= r."""
        ring = poly_ring(self.A.dim)
        one = ring.from_dict({(0,) * self.A.dim: 1})
        g = [one if i == k else ring.from_dict({}) for i in range(self.A.dim)]
        return self._pull_back(0, g)


@lru_cache(maxsize=None)
def _mono_index(n: int, d: int) -> dict:
    return {mu: j for j, mu in enumerate(monomials(n, d))}


def _linear_powers(L: dict, n: int, d: int) -> list[dict]:
    """[L^0, L^1, ..., L^d] as monomial -> integer dictionaries."""
    out = [{(0,) * n: 1}]
    for _ in range(d):
        prev = out[-1]
        nxt = {}
        for m, c in prev.items():
            for v, a in L.items():
                mm = list(m)
                mm[v] += 1
                mm = tuple(mm)
                nxt[mm] = nxt.get(mm, 0) + c * a
        out.append(nxt)
    return out


# -- public solver entry points ---------------------------------------------

def derivation_space(A: Arrangement, d: int) -> list[Derivation]:
    """A basis of the degree-d part of D(A), for essential A."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    frame = _Frame(A)
    if frame.r != A.dim:
        raise PreconditionViolated("derivation_space expects an essential arrangement")
    if A.dim == 0:
        return []
    if d == 0:
        return []
    out = []
    theta_e = frame.euler()
    ring = poly_ring(A.dim)
    for mono in monomials(A.dim, d - 1):
        m = ring.from_dict({mono: 1})
        out.append(Derivation(d, tuple(m * f for f in theta_e.coeffs)))
    for vec in linalg.integer_nullspace(frame.system(d), frame.ncols(d)):
        out.append(frame.to_derivation(vec, d))
    return out


def evaluation_point(A: Arrangement) -> tuple:
    """A deterministic integer point off every hyperplane: (1, t, t^2, ...)."""
    t = 2
    while True:
        p = tuple(t ** i for i in range(A.dim))
        if all(dot(a, p) != 0 for a in A.normals):
            return p
        t += 1


def _det_at(basis, point) -> Fraction:
    return linalg.det([theta.evaluate(point) for theta in basis])


def _q_at(A: Arrangement, point) -> int:
    return prod(dot(a, point) for a in A.normals)


def saito_scan(A: Arrangement, exps, spaces: dict, limit: int = 100000):
    """Search basis tuples (subsets within repeated degrees) for det = c Q, c != 0.

    ``spaces`` maps each degree b in ``exps`` to a basis of D(A)_b. A tuple
    whose degrees sum to |A| has det = c Q, so its determinant vanishes
    identically exactly when it vanishes at one point off the arrangement.
    """
    counts = {}
    for b in exps:
        counts[b] = counts.get(b, 0) + 1
    choices = []
    total = 1
    for b in sorted(counts):
        space = spaces.get(b, [])
        if len(space) < counts[b]:
            return SaitoIdenticallyZero(b, f"D(A)_{b} has dimension {len(space)} < {counts[b]}")
        total *= comb(len(space), counts[b])
        choices.append(list(combinations(space, counts[b])))
    if total > limit:
        raise OracleTooLarge(f"{total} tuples exceed the scan limit {limit}")
    point = evaluation_point(A)
    q = _q_at(A, point)
    for parts in product(*choices):
        basis = tuple(t for part in parts for t in part)
        det = _det_at(basis, point)
        if det != 0:
            return Free(tuple(sorted(exps)), basis, det / q)
    return SaitoIdenticallyZero(None, "every basis tuple has vanishing determinant")


def _complement(frame: _Frame, b: int, space, lower) -> list:
    """Greedy choice of vectors of ``space`` independent modulo ``lower``."""
    ncols = frame.ncols(b)
    rows = [[v.get(j, 0) for j in range(ncols)] for v in lower]
    base_rank = linalg.matrix_rank(rows) if rows else 0
    chosen = []
    for vec in space:
        trial = rows + [list(vec)]
        if linalg.matrix_rank(trial) == base_rank + len(chosen) + 1:
            rows = trial
            chosen.append(vec)
    return chosen


def is_free(A: Arrangement):
    """Decide freeness exactly; returns :class:`Free` or :class:`NotFree`."""
    ell = A.dim
    chi = char_poly(A)
    roots = integer_root_multiset(chi)
    if isinstance(roots, NonSplitting):
        return NotFree(NonSplittingChi(tuple(chi)))
    exps = tuple(sorted(roots))
    frame = _Frame(A)
    r = frame.r
    center = ell - r
    if len(A) == 0:
        basis = tuple(frame.constant(k) for k in range(ell))
        return Free(exps, basis, Fraction(1))
    ess = exps[center:]
    assert all(b == 0 for b in exps[:center]) and all(b > 0 for b in ess)
    ess0 = list(ess)
    ess0.remove(1)
    table = {}
    spaces = {}
    for d in range(1, max(ess) + 1):
        predicted = free_dim_prediction(ess, r, d)
        euler_part = comb(d - 1 + r - 1, r - 1)
        predicted0 = predicted - euler_part
        rows = frame.system(d)
        ncols = frame.ncols(d)
        if predicted0 == 0 and linalg.nullity_upper_bound(rows, ncols) == 0:
            actual0 = 0
        else:
            spaces[d] = linalg.integer_nullspace(rows, ncols)
            actual0 = len(spaces[d])
        table[d] = (actual0 + euler_part, predicted)
        if actual0 != predicted0:
            report = GradedDimReport(table)
            return NotFree(GradedDimMismatch(d, predicted, actual0 + euler_part), exps, report)
    report = GradedDimReport(table)
    # minimal generators of D_0(A), degree by degree
    gens = []
    for b in sorted(set(ess0)):
        lower = []
        for deg, vec in gens:
            for nu in monomials(r, b - deg):
                lower.append(frame.shift(vec, deg, nu))
        new = _complement(frame, b, spaces.get(b, []), lower)
        if len(new) != ess0.count(b):
            return NotFree(SaitoIdenticallyZero(
                b, f"{len(new)} new generators in degree {b}, expected {ess0.count(b)}"), exps, report)
        gens.extend((b, v) for v in new)
    basis = [frame.constant(k) for k in range(r, ell)]
    basis.append(frame.euler())
    basis.extend(frame.to_derivation(v, deg) for deg, v in gens)
    point = evaluation_point(A)
    det = _det_at(basis, point)
    if det == 0:
        return NotFree(SaitoIdenticallyZero(None, "minimal generators have vanishing determinant"),
                       exps, report)
    return Free(exps, tuple(basis), det / _q_at(A, point), report)


@dataclass(frozen=True)
class CertificateCheck:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_freeness_certificate(A: Arrangement, cert) -> CertificateCheck:
    """Re-check a Free certificate from scratch.

    Checks: one derivation per coordinate, each homogeneous of its stated
    degree; degrees equal the exponents and sum to |A|; every derivation
    lies in D(A) (alpha_H divides theta(alpha_H), by exact division); and
    det = c Q(A). Given the membership and degree checks, det is divisible
    by Q(A) and has the same degree, so det = c' Q(A) for a constant c', and
    comparing values at one point off the arrangement pins c' down exactly.
    """
    if isinstance(cert, dict):
        try:
            cert = free_from_json(cert)
        except CertificateError as exc:
            return CertificateCheck(False, str(exc))
    ell = A.dim
    if len(cert.basis) != ell:
        return CertificateCheck(False, f"expected {ell} derivations, got {len(cert.basis)}")
    for i, theta in enumerate(cert.basis):
        if theta.dim != ell:
            return CertificateCheck(False, f"derivation {i} has {theta.dim} coefficients")
        if not all(_is_homogeneous(f, theta.degree) for f in theta.coeffs):
            return CertificateCheck(False, f"derivation {i} is not homogeneous of degree {theta.degree}")
    if sorted(t.degree for t in cert.basis) != sorted(cert.exponents):
        return CertificateCheck(False, "degrees do not match the exponents")
    if sum(cert.exponents) != len(A):
        return CertificateCheck(False, f"exponents sum to {sum(cert.exponents)}, not |A| = {len(A)}")
    for i, theta in enumerate(cert.basis):
        if not is_member(A, theta):
            return CertificateCheck(False, f"derivation {i} is not in D(A)")
    if cert.scalar == 0:
        return CertificateCheck(False, "scalar must be nonzero")
    point = evaluation_point(A)
    det = _det_at(cert.basis, point)
    if det != cert.scalar * _q_at(A, point):
        return CertificateCheck(False, f"det = {det} at {point}, expected c*Q = {cert.scalar * _q_at(A, point)}")
    return CertificateCheck(True)
