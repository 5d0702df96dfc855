"""Plain-text arrangement format and JSON helpers.

::

    dim 3
    # comment
    1 0 0
    0 1 -1

Rows are canonicalised on load. A repeated hyperplane is dropped silently
unless ``strict`` is set, in which case it is an error.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .arrangement import Arrangement, canonicalize
from .errors import InvalidHyperplane, ParseError


def parse_arrangement(text: str, strict: bool = False) -> Arrangement:
    dim = None
    normals = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dim is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "dim":
                raise ParseError("expected header 'dim <l>'", lineno)
            try:
                dim = int(parts[1])
            except ValueError:
                raise ParseError(f"bad dimension {parts[1]!r}", lineno) from None
            if dim < 0:
                raise ParseError("dimension must be nonnegative", lineno)
            continue
        try:
            vec = [int(x) for x in line.split()]
        except ValueError:
            raise ParseError(f"non-integer entry in {line!r}", lineno) from None
        if len(vec) != dim:
            raise ParseError(f"row has {len(vec)} entries, expected {dim}", lineno)
        try:
            h = canonicalize(vec)
        except InvalidHyperplane:
            raise ParseError("zero row", lineno) from None
        if h in seen:
            if strict:
                raise ParseError(f"duplicate of the hyperplane on line {seen[h]}", lineno)
            continue
        seen[h] = lineno
        normals.append(h)
    if dim is None:
        raise ParseError("missing 'dim' header")
    return Arrangement(dim, tuple(normals))


def emit_arrangement(A: Arrangement) -> str:
    lines = [f"dim {A.dim}"]
    lines.extend(" ".join(str(x) for x in n) for n in A.normals)
    return "\n".join(lines) + "\n"


def load_arrangement(path, strict: bool = False) -> Arrangement:
    return parse_arrangement(Path(path).read_text(), strict=strict)


def save_arrangement(A: Arrangement, path) -> None:
    Path(path).write_text(emit_arrangement(A))


def fraction_pair(q) -> list:
    q = Fraction(q)
    return [q.numerator, q.denominator]


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
