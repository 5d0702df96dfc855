"""Arrangements, flats and tables transcribed from the E7 construction.

The normals of A and C are kept verbatim in ``data/*.arr`` (simple-root
coordinates for A, the five coordinates of Z for C) so they can be diffed
against the printed tables; everything else is derived here.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .arrangement import (
    Arrangement,
    Flat,
    addition,
    canonicalize,
    deletion,
    flat_from_hyperplanes,
    restrict_to_hyperplane,
)
from .errors import ParseError, PreconditionViolated
from .io import parse_arrangement

E7_CARTAN = (
    (2, 0, -1, 0, 0, 0, 0),
    (0, 2, 0, -1, 0, 0, 0),
    (-1, 0, 2, -1, 0, 0, 0),
    (0, -1, -1, 2, -1, 0, 0),
    (0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, -1, 2, -1),
    (0, 0, 0, 0, 0, -1, 2),
)
"""Cartan matrix of E7 in Bourbaki's labeling (node 2 hangs off node 4)."""

X1 = (1, 0, 0, 0, 0, 0, 0)
X6 = (0, 0, 0, 0, 0, 1, 0)
H_PRIME = (1, 1, 2, 2, 2, 1, 0)
X3_PLUS_X4 = (0, 0, 1, 1, 0, 0, 0)
C_X1_PLUS_X2 = (1, 1, 0, 0, 0)
C_X4 = (0, 0, 0, 1, 0)


def positive_roots(cartan) -> list[tuple[int, ...]]:
    """Positive roots in simple-root coordinates, by root-string closure.

    A positive root beta extends to beta + alpha_i exactly when the
    alpha_i-string through beta continues upward: q = p - <beta, alpha_i^vee> > 0,
    where p is how far the string goes down.
    """
    n = len(cartan)
    simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    roots = set(simple)
    layer = list(simple)
    while layer:
        nxt = []
        for beta in layer:
            for i in range(n):
                pairing = sum(beta[j] * cartan[j][i] for j in range(n))
                p = 0
                down = list(beta)
                while True:
                    down[i] -= 1
                    if tuple(down) in roots:
                        p += 1
                    else:
                        break
                if p - pairing > 0:
                    up = list(beta)
                    up[i] += 1
                    up = tuple(up)
                    if up not in roots:
                        roots.add(up)
                        nxt.append(up)
        layer = nxt
    return sorted(roots, key=lambda r: (sum(r), tuple(-x for x in r)))


def e7_positive_roots() -> Arrangement:
    """The Weyl arrangement A(E7): 63 hyperplanes in dimension 7."""
    return Arrangement.from_vectors(7, positive_roots(E7_CARTAN))


def _read(name: str) -> str:
    return resources.files("freearr").joinpath("data", name).read_text()


def data_files() -> list[str]:
    return sorted(p.name for p in resources.files("freearr").joinpath("data").iterdir()
                  if p.name.endswith((".arr", ".txt")))


def arr_A() -> Arrangement:
    return parse_arrangement(_read("A.arr"), strict=True)


def arr_B() -> Arrangement:
    return parse_arrangement(_read("B.arr"), strict=True)


def arr_C() -> Arrangement:
    return parse_arrangement(_read("C.arr"), strict=True)


def arr_D() -> Arrangement:
    return parse_arrangement(_read("D.arr"), strict=True)


def arr_Dpp() -> Arrangement:
    return parse_arrangement(_read("Dpp.arr"), strict=True)


def flat_Z() -> Flat:
    """ker(x1) ∩ ker(x1+x2+2x3+2x4+2x5+x6) in A."""
    return flat_from_hyperplanes(arr_A(), [X1, H_PRIME])


def flat_X() -> Flat:
    """ker(x1) ∩ ker(x6) in B."""
    return flat_from_hyperplanes(arr_B(), [X1, X6])


def flat_Y() -> Flat:
    """H1 ∩ H' ∩ H6 in B."""
    return flat_from_hyperplanes(arr_B(), [X1, H_PRIME, X6])


CATALOG = {
    "A": (arr_A, "Table 1: inductively free subarrangement of A(E7), 32 hyperplanes"),
    "B": (arr_B, "A minus ker(x3+x4), 31 hyperplanes"),
    "C": (arr_C, "Table 3: subarrangement of the restriction of A(E7) to Z, 22 hyperplanes"),
    "D": (arr_D, "C minus ker(x1+x2), 21 hyperplanes"),
    "Dpp": (arr_Dpp, "restriction of D to ker(x4), 16 hyperplanes"),
    "E7": (e7_positive_roots, "Weyl arrangement of E7, 63 hyperplanes"),
    "ex4.1": (lambda: example_4_1()[0], "11 hyperplanes in Q^4 with chi = (t-1)(t-3)^2(t-4)"),
}


def get(name: str) -> Arrangement:
    try:
        return CATALOG[name][0]()
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(CATALOG)}") from None


# -- induction tables and chains -----------------------------------------

@dataclass(frozen=True)
class TableRow:
    before: tuple | None
    normal: tuple
    restriction: tuple | None


@dataclass(frozen=True)
class InductionTable:
    """Rows of (exp A', added hyperplane, exp A''); ``final`` is the last exponent line.

    Exponent entries are ``None`` where a chain only prints some rows.
    """

    dim: int
    rows: tuple
    final: tuple | None

    @property
    def hyperplanes(self) -> tuple:
        return tuple(r.normal for r in self.rows)


def _ints(field: str, lineno: int):
    field = field.strip()
    if field in ("-", ""):
        return None
    try:
        return tuple(int(x) for x in field.replace(",", " ").split())
    except ValueError:
        raise ParseError(f"bad integer list {field!r}", lineno) from None


def parse_table(text: str) -> InductionTable:
    dim = None
    rows = []
    final = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dim is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "dim":
                raise ParseError("expected header 'dim <l>'", lineno)
            dim = int(parts[1])
            continue
        if final is not None:
            raise ParseError("rows after the final exponent line", lineno)
        fields = line.split("|")
        if len(fields) == 1:
            final = _ints(fields[0], lineno)
            continue
        if len(fields) != 3:
            raise ParseError("expected 'exp | normal | exp'", lineno)
        normal = _ints(fields[1], lineno)
        if normal is None or len(normal) != dim:
            raise ParseError("normal has the wrong length", lineno)
        rows.append(TableRow(_ints(fields[0], lineno), canonicalize(normal), _ints(fields[2], lineno)))
    if dim is None:
        raise ParseError("missing 'dim' header")
    return InductionTable(dim, tuple(rows), final)


def emit_table(table: InductionTable) -> str:
    def fmt(e):
        return "-" if e is None else " ".join(map(str, e))

    lines = [f"dim {table.dim}"]
    for r in table.rows:
        lines.append(f"{fmt(r.before)} | {fmt(r.normal)} | {fmt(r.restriction)}")
    if table.final is not None:
        lines.append(fmt(table.final))
    return "\n".join(lines) + "\n"


def table_1() -> InductionTable:
    return parse_table(_read("table1.txt"))


def table_2() -> InductionTable:
    return parse_table(_read("table2.txt"))


def table_3() -> InductionTable:
    return parse_table(_read("table3.txt"))


def table_4() -> InductionTable:
    return parse_table(_read("table4.txt"))


# -- non-free triples ------------------------------------------------------

EXAMPLE_4_1_FORMS = (
    # coordinates (w, x, y, z)
    (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
    (0, 1, 1, 0), (0, 1, 0, 1), (0, 1, 0, -1), (0, 0, 1, -1),
    (0, 0, 1, 1), (0, 1, 1, -1), (1, 1, -1, 0),
)
EXAMPLE_4_1_H = (0, 1, 1, -1)


def example_4_1():
    """(A, A', A'') for the 11-hyperplane arrangement in Q^4 at H = ker(x+y-z)."""
    A = Arrangement.from_vectors(4, EXAMPLE_4_1_FORMS)
    return A, deletion(A, EXAMPLE_4_1_H), restrict_to_hyperplane(A, EXAMPLE_4_1_H)


def example_4_2(base: Arrangement, m: int, x_coord: int | None = None):
    """Extend ``base`` by a coordinate z and add ker z, ker(x - z), ..., ker(mx - z).

    ``x_coord`` picks the coordinate x with ker x in base; by default the
    first coordinate hyperplane of base is used. Returns the triple at
    ker(mx - z).
    """
    if m < 0:
        raise PreconditionViolated("m must be nonnegative")
    ell = base.dim
    coords = [i for i in range(ell) if canonicalize(tuple(int(j == i) for j in range(ell))) in base]
    if x_coord is None:
        if not coords:
            raise PreconditionViolated("base must contain a coordinate hyperplane ker x")
        x_coord = coords[0]
    elif x_coord not in coords:
        raise PreconditionViolated(f"ker x{x_coord + 1} is not a hyperplane of base")
    A = Arrangement(ell + 1, tuple(n + (0,) for n in base.normals))
    for k in range(m + 1):
        v = [0] * (ell + 1)
        v[x_coord] = k
        v[ell] = -1
        A = addition(A, v)
    v = [0] * (ell + 1)
    v[x_coord] = m
    v[ell] = -1
    H = canonicalize(v)
    return A, deletion(A, H), restrict_to_hyperplane(A, H)


def example_4_2_center(base: Arrangement, ambient: Arrangement) -> Flat:
    """The center of the embedded base, as a flat of the extended arrangement."""
    return flat_from_hyperplanes(ambient, [n + (0,) for n in base.normals])
