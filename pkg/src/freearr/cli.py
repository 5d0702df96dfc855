"""Command-line interface: ``freearr <command> ...``.

Arrangement arguments are paths to files in the text format, or
``catalog:<name>`` for a catalog entry. ``--json`` switches any command to
machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import battery, catalog, classes, iso
from .arrangement import (
    Flat,
    deletion,
    flat_from_hyperplanes,
    localization,
    product,
    restriction,
)
from .derivations import free_from_json, is_free, verify_freeness_certificate
from .errors import ArrangementError
from .io import dump_json, emit_arrangement, load_arrangement
from .lattice import format_factored, format_poly, integer_root_multiset, char_poly

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_UNDECIDED = 0, 1, 2, 3


def load(spec: str):
    if spec.startswith("catalog:"):
        return catalog.get(spec.split(":", 1)[1])
    return load_arrangement(spec)


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


def parse_flat(A, text: str) -> Flat:
    """A flat given as ';'-separated hyperplanes: full normals or 0-based indices."""
    hyperplanes = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        v = _ints(part)
        hyperplanes.append(v[0] if len(v) == 1 and A.dim != 1 else v)
    return flat_from_hyperplanes(A, hyperplanes)


def _emit(args, payload: dict, text: str) -> None:
    print(dump_json(payload) if args.json else text)


# -- commands -------------------------------------------------------------------------------

def cmd_chi(args) -> int:
    A = load(args.arrangement)
    chi = char_poly(A)
    roots = integer_root_multiset(chi)
    payload = {"chi": list(chi), "splits": bool(roots)}
    text = f"chi(t) = {format_poly(chi)}"
    if roots:
        payload["roots"] = list(roots)
        text += f"\n       = {format_factored(roots)}"
    else:
        text += "\n(does not split over the integers)"
    _emit(args, payload, text)
    return EXIT_OK


def _arr_out(args, A) -> int:
    if args.json:
        print(dump_json({"dim": A.dim, "normals": [list(n) for n in A.normals]}))
    else:
        sys.stdout.write(emit_arrangement(A))
    return EXIT_OK


def cmd_restrict(args) -> int:
    A = load(args.arrangement)
    return _arr_out(args, restriction(A, parse_flat(A, args.flat)))


def cmd_localize(args) -> int:
    A = load(args.arrangement)
    return _arr_out(args, localization(A, parse_flat(A, args.flat)))


def cmd_delete(args) -> int:
    A = load(args.arrangement)
    return _arr_out(args, deletion(A, _ints(args.hyperplane)))


def cmd_product(args) -> int:
    return _arr_out(args, product(load(args.first), load(args.second)))


def cmd_is_free(args) -> int:
    A = load(args.arrangement)
    v = is_free(A)
    payload = v.to_json()
    if args.cert:
        dump_json(payload, args.cert)
    if v:
        text = f"free, exponents {', '.join(map(str, v.exponents))}"
    else:
        text = f"not free ({v.witness.kind})"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_classify(args) -> int:
    A = load(args.arrangement)
    cls = args.cls.upper()
    v = classes.DECIDERS[cls](A, budget=args.budget)
    payload = v.to_json()
    if args.out:
        dump_json(v.certificate or v.trace or payload, args.out)
    text = f"{cls}: {v.status}"
    if v.exponents is not None:
        text += f" (exponents {', '.join(map(str, v.exponents))})"
    text += f", {v.nodes_visited} nodes"
    if args.out and v.decided:
        text += f"; {'certificate' if v.member else 'trace'} written to {args.out}"
    _emit(args, payload, text)
    return EXIT_UNDECIDED if not v.decided else EXIT_OK


def cmd_iso(args) -> int:
    A, B = load(args.first), load(args.second)
    M = iso.linear_isomorphic(A, B)
    sigma = iso.matroid_isomorphic(A, B)
    payload = {
        "linear": M is not None,
        "matroid": sigma is not None,
        "matrix": None if M is None else [[[q.numerator, q.denominator] for q in row] for row in M],
        "bijection": None if sigma is None else [[i, j] for i, j in sigma.items()],
    }
    text = (f"linearly isomorphic: {'yes' if M is not None else 'no'}\n"
            f"lattice isomorphic:  {'yes' if sigma is not None else 'no'}")
    _emit(args, payload, text)
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.action == "list":
        if args.json:
            print(dump_json({name: desc for name, (_, desc) in catalog.CATALOG.items()}))
        else:
            for name, (_, desc) in catalog.CATALOG.items():
                print(f"{name:8s} {desc}")
        return EXIT_OK
    if not args.name:
        raise SystemExit("catalog get needs a name")
    return _arr_out(args, catalog.get(args.name))


def cmd_verify_cert(args) -> int:
    A = load(args.arrangement)
    data = json.loads(Path(args.certificate).read_text())
    if data.get("verdict") == "free":
        check = verify_freeness_certificate(A, free_from_json(data))
        what = "freeness certificate"
    elif data.get("kind") == "certificate":
        check = classes.verify_certificate(A, data)
        what = f"{data.get('class')} certificate"
    elif data.get("kind") == "refutation":
        check = classes.replay_refutation(A, data)
        what = f"{data.get('class')} refutation"
    else:
        print("unrecognised certificate format", file=sys.stderr)
        return EXIT_ERROR
    payload = {"what": what, "ok": check.ok, "reason": check.reason}
    _emit(args, payload, f"{what}: {'ok' if check else 'REJECTED: ' + check.reason}")
    return EXIT_OK if check else EXIT_FAIL


def cmd_verify_paper(args) -> int:
    def progress(rep):
        if not args.json:
            print(rep.line(), flush=True)

    cfg = battery.BatteryConfig(only=tuple(args.only or ()), budget=args.budget,
                                out_dir=args.out, progress=progress)
    try:
        reports = battery.verify_paper(cfg)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_ERROR
    code = battery.exit_code(reports)
    if args.json:
        print(dump_json({"claims": [r.to_json() for r in reports], "exit_code": code}))
    else:
        counts = {v: sum(r.verdict == v for r in reports) for v in (battery.PASS, battery.FAIL, battery.UNDECIDED)}
        print(f"{counts['pass']} passed, {counts['fail']} failed, {counts['undecided']} undecided")
    return code


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="freearr", description="Exact computations with central hyperplane arrangements.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chi", parents=[common], help="characteristic polynomial")
    s.add_argument("arrangement")
    s.set_defaults(func=cmd_chi)

    for name, func, helptext in (("restrict", cmd_restrict, "restriction to a flat"),
                                 ("localize", cmd_localize, "localization at a flat")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("arrangement")
        s.add_argument("--flat", required=True,
                       help="';'-separated hyperplanes cutting out the flat, as normals or 0-based indices")
        s.set_defaults(func=func)

    s = sub.add_parser("delete", parents=[common], help="delete one hyperplane")
    s.add_argument("arrangement")
    s.add_argument("--hyperplane", required=True, help="normal vector, e.g. '1 0 -1'")
    s.set_defaults(func=cmd_delete)

    s = sub.add_parser("product", parents=[common], help="product of two arrangements")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=cmd_product)

    s = sub.add_parser("is-free", parents=[common], help="exact freeness test")
    s.add_argument("arrangement")
    s.add_argument("--cert", help="write the certificate or witness as JSON")
    s.set_defaults(func=cmd_is_free)

    s = sub.add_parser("classify", parents=[common], help="decide IF, AF, DF or SF membership")
    s.add_argument("arrangement")
    s.add_argument("--class", dest="cls", required=True, choices=["if", "af", "df", "sf"])
    s.add_argument("--budget", type=int, default=None, help="search node budget (default: FREEARR_BUDGET)")
    s.add_argument("--out", help="write the certificate or refutation trace as JSON")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("iso", parents=[common], help="linear and lattice isomorphism")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=cmd_iso)

    s = sub.add_parser("catalog", parents=[common], help="built-in arrangements")
    s.add_argument("action", choices=["list", "get"])
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("verify-cert", parents=[common], help="re-check a certificate or refutation")
    s.add_argument("arrangement")
    s.add_argument("certificate")
    s.set_defaults(func=cmd_verify_cert)

    s = sub.add_parser("verify-paper", parents=[common], help="run the catalog claim battery")
    s.add_argument("--only", action="append", help="claim name or group (repeatable)")
    s.add_argument("--budget", type=int, default=None, help="search node budget for every claim")
    s.add_argument("--out", help="directory for certificates and traces")
    s.set_defaults(func=cmd_verify_paper)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ArrangementError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"freearr: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
