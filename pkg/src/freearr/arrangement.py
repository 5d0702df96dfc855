"""Central rational hyperplane arrangements and the constructions on them.

A hyperplane is stored as its primitive integer normal vector, normalised so
the first nonzero entry is positive. An :class:`Arrangement` is an ordered,
duplicate-free tuple of such normals in a fixed ambient dimension; the order
is the "file order" used for every deterministic tie-break downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from . import linalg
from .errors import DimensionMismatch, InvalidHyperplane, NotAFlat, NotMember

Hyperplane = tuple  # tuple[int, ...], canonical


def canonicalize(v: Sequence) -> Hyperplane:
    """Primitive, sign-normalised integer normal for the hyperplane ker(v).

    Rational entries are cleared of denominators first.

    >>> canonicalize((2, -4, 6))
    (1, -2, 3)
    """
    if any(isinstance(x, Fraction) or not isinstance(x, int) for x in v):
        v = linalg.primitive([Fraction(x) for x in v])
    g = 0
    for x in v:
        g = gcd(g, x)
    if g == 0:
        raise InvalidHyperplane("zero vector does not define a hyperplane")
    lead = next(x for x in v if x != 0)
    if lead < 0:
        g = -g
    return tuple(x // g for x in v)


def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class Arrangement:
    dim: int
    normals: tuple = ()

    def __post_init__(self):
        seen = set()
        for n in self.normals:
            if len(n) != self.dim:
                raise DimensionMismatch(f"normal {n} does not have {self.dim} entries")
            if n in seen:
                raise ValueError(f"duplicate hyperplane {n}")
            seen.add(n)

    @classmethod
    def from_vectors(cls, dim: int, vectors: Iterable[Sequence]) -> "Arrangement":
        """Canonicalise and deduplicate (keeping first occurrences)."""
        out = []
        seen = set()
        for v in vectors:
            h = canonicalize(v)
            if len(h) != dim:
                raise DimensionMismatch(f"vector {tuple(v)} does not have {dim} entries")
            if h not in seen:
                seen.add(h)
                out.append(h)
        return cls(dim, tuple(out))

    @classmethod
    def empty(cls, dim: int) -> "Arrangement":
        return cls(dim, ())

    def __len__(self) -> int:
        return len(self.normals)

    def __iter__(self):
        return iter(self.normals)

    def __contains__(self, h) -> bool:
        return canonicalize(h) in self._index

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {h: i for i, h in enumerate(self.normals)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def index(self, h) -> int:
        h = canonicalize(h)
        try:
            return self._index[h]
        except KeyError:
            raise NotMember(f"{h} is not a hyperplane of the arrangement") from None

    @property
    def key(self) -> tuple:
        """Order-independent identity: ambient dim plus the sorted normals."""
        k = self.__dict__.get("_key")
        if k is None:
            k = (self.dim, tuple(sorted(self.normals)))
            object.__setattr__(self, "_key", k)
        return k

    def same_hyperplanes(self, other: "Arrangement") -> bool:
        return self.key == other.key

    def subarrangement(self, indices: Iterable[int]) -> "Arrangement":
        return Arrangement(self.dim, tuple(self.normals[i] for i in sorted(indices)))

    def rank(self) -> int:
        return rank(self)

    def __str__(self) -> str:
        return f"Arrangement(dim={self.dim}, |A|={len(self)})"


@dataclass(frozen=True)
class Flat:
    """A member X of L(A): a basis of the subspace plus the hyperplanes over it.

    ``basis`` rows are integer vectors spanning X, in the canonical form
    produced by :func:`linalg.kernel`; ``containing`` holds indices into the
    arrangement the flat was built for.
    """

    dim: int
    basis: tuple
    containing: frozenset = field(default_factory=frozenset)

    @property
    def rank(self) -> int:
        return self.dim - len(self.basis)

    @property
    def mask(self) -> int:
        m = 0
        for i in self.containing:
            m |= 1 << i
        return m


def subspace_basis(dim: int, normals: Sequence[Sequence]) -> tuple:
    """Canonical integer basis of the common kernel of ``normals``."""
    return tuple(linalg.kernel(list(normals), dim))


def flat_from_hyperplanes(A: Arrangement, hyperplanes: Iterable) -> Flat:
    """The intersection of the given hyperplanes (normals or indices) as a flat of A."""
    normals = []
    for h in hyperplanes:
        normals.append(A.normals[h] if isinstance(h, int) else A.normals[A.index(h)])
    basis = subspace_basis(A.dim, normals)
    return Flat(A.dim, basis, _containing(A, basis))


def whole_space(A: Arrangement) -> Flat:
    basis = tuple(tuple(int(i == j) for j in range(A.dim)) for i in range(A.dim))
    return Flat(A.dim, basis, frozenset())


def _containing(A: Arrangement, basis) -> frozenset:
    return frozenset(i for i, n in enumerate(A.normals) if all(dot(n, b) == 0 for b in basis))


def _check_flat(A: Arrangement, X: Flat) -> frozenset:
    if X.dim != A.dim:
        raise NotAFlat("flat lives in a different ambient space")
    containing = _containing(A, X.basis)
    # X must equal the intersection of the hyperplanes containing it
    if len(X.basis) != A.dim - linalg.rank([A.normals[i] for i in containing], A.dim):
        raise NotAFlat("subspace is not an intersection of hyperplanes of A")
    return containing


def deletion(A: Arrangement, H) -> Arrangement:
    i = A.index(H)
    return Arrangement(A.dim, A.normals[:i] + A.normals[i + 1:])


def addition(A: Arrangement, H) -> Arrangement:
    h = canonicalize(H)
    if h in A._index:
        raise ValueError(f"{h} already belongs to the arrangement")
    return Arrangement(A.dim, A.normals + (h,))


def localization(A: Arrangement, X: Flat) -> Arrangement:
    """A_X: the hyperplanes of A containing X (in A's ambient space)."""
    containing = _check_flat(A, X)
    return A.subarrangement(containing)


def restriction(A: Arrangement, X: Flat) -> Arrangement:
    """A^X in the coordinates given by X's basis."""
    containing = _check_flat(A, X)
    return _restrict(A, X.basis, containing)


def _restrict(A: Arrangement, basis, containing) -> Arrangement:
    vecs = []
    for i, n in enumerate(A.normals):
        if i in containing:
            continue
        vecs.append(tuple(dot(n, b) for b in basis))
    return Arrangement.from_vectors(len(basis), vecs)


def hyperplane_basis(h: Sequence[int]) -> tuple:
    """Basis of ker(h): coordinates are the entries other than the first nonzero."""
    return subspace_basis(len(h), [h])


def restrict_to_hyperplane(A: Arrangement, H) -> Arrangement:
    i = A.index(H)
    h = A.normals[i]
    basis = hyperplane_basis(h)
    vecs = []
    for j, n in enumerate(A.normals):
        if j == i:
            continue
        vecs.append(tuple(dot(n, b) for b in basis))
    return Arrangement.from_vectors(A.dim - 1, vecs)


def product(A1: Arrangement, A2: Arrangement) -> Arrangement:
    z1 = (0,) * A1.dim
    z2 = (0,) * A2.dim
    normals = tuple(n + z2 for n in A1.normals) + tuple(z1 + n for n in A2.normals)
    return Arrangement(A1.dim + A2.dim, normals)


def rank(A: Arrangement) -> int:
    if not A.normals:
        return 0
    return linalg.rank(A.normals, A.dim)


def essentialize(A: Arrangement) -> tuple[Arrangement, int]:
    """Quotient out the center; returns the essential arrangement and dim of the center.

    Normals are projected onto the pivot coordinates of their row space,
    which is injective on that row space, so L(A) is preserved.
    """
    if not A.normals:
        return Arrangement.empty(0), A.dim
    _, pivots = linalg.rref(A.normals, A.dim)
    r = len(pivots)
    if r == A.dim:
        return A, 0
    vecs = [tuple(n[p] for p in pivots) for n in A.normals]
    return Arrangement(r, tuple(canonicalize(v) for v in vecs)), A.dim - r


def is_essential(A: Arrangement) -> bool:
    return rank(A) == A.dim


def triple(A: Arrangement, H) -> tuple[Arrangement, Arrangement, Arrangement]:
    return A, deletion(A, H), restrict_to_hyperplane(A, H)


def defining_polynomial_factors(A: Arrangement) -> tuple:
    """Q(A) as the multiset of its linear factors."""
    return A.normals


def transform(A: Arrangement, matrix: Sequence[Sequence]) -> Arrangement:
    """Image of the normals under ``n -> n @ matrix`` (change of coordinates)."""
    cols = len(matrix[0]) if matrix else 0
    vecs = []
    for n in A.normals:
        vecs.append(tuple(sum(n[i] * matrix[i][j] for i in range(A.dim)) for j in range(cols)))
    return Arrangement.from_vectors(cols, vecs)


def boolean(dim: int) -> Arrangement:
    return Arrangement(dim, tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)))
