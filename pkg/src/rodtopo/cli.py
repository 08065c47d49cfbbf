"""Command-line front end.

Every subcommand reads one rod-diagram JSON file, runs the corresponding
analysis, and writes a deterministic report (JSON or text) to stdout or a
file.  Exit codes: 0 success, 1 validation or relation failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import roddiagram
from .errors import RodTopoError
from .intlin import IntMatrix, determinant_divisor, hermite_normal_form, smith_normal_form
from .modelmap import build_model_map, verify_tension
from .plumbing import doc_decomposition
from .roddiagram import parse
from .topology import classify, compactify, end_pi1, fundamental_group, is_simply_connected


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def _load(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e


class UsageError(Exception):
    pass


def _emit(args, payload, text_lines):
    if args.format == "json":
        out = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        out = "\n".join(text_lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _matrix_rows(M: IntMatrix):
    return [list(r) for r in M.to_lists()]


def _diagram_text(diagram):
    lines = [f"n = {diagram.n}, shape = {diagram.shape}"]
    for i, rod in enumerate(diagram.rods):
        z = ""
        if rod.z is not None:
            z = f"  z=[{rod.z[0]}, {rod.z[1]}]"
        if rod.is_axis:
            pot = f"  omega={list(rod.potential)}" if rod.potential else ""
            lines.append(f"  {i:2d}  axis     v={list(rod.structure.v)}{z}{pot}")
        else:
            lines.append(f"  {i:2d}  horizon  ~~~~~~~~{z}")
    return lines


# ----------------------------------------------------------------------
# subcommands


def _cmd_validate(args):
    diagram = parse(_load(args.input))
    payload = {"valid": True, "diagram": diagram.to_json_dict()}
    _emit(args, payload, ["valid"] + _diagram_text(diagram))
    return 0


def _cmd_hnf(args):
    diagram = parse(_load(args.input))
    res = hermite_normal_form(diagram.structure_matrix())
    payload = {
        "H": _matrix_rows(res.H),
        "Q": _matrix_rows(res.Q),
        "pivots": [list(p) for p in res.pivots],
    }
    lines = ["H (columns are the transformed structures):"]
    lines += ["  " + " ".join(f"{x:4d}" for x in row) for row in res.H.to_lists()]
    lines.append("Q (transformation matrix):")
    lines += ["  " + " ".join(f"{x:4d}" for x in row) for row in res.Q.to_lists()]
    _emit(args, payload, lines)
    return 0


def _cmd_snf(args):
    diagram = parse(_load(args.input))
    res = smith_normal_form(diagram.structure_matrix())
    payload = {
        "S": _matrix_rows(res.S),
        "U": _matrix_rows(res.U),
        "V": _matrix_rows(res.V),
        "divisors": list(res.divisors),
    }
    lines = [f"elementary divisors: {list(res.divisors)}"]
    _emit(args, payload, lines)
    return 0


def _cmd_detk(args):
    diagram = parse(_load(args.input))
    A = diagram.structure_matrix()
    value = determinant_divisor(A, args.k)
    payload = {"k": args.k, "value": value}
    _emit(args, payload, [f"Det_{args.k} = {value}"])
    return 0


def _cmd_analyze(args):
    diagram = parse(_load(args.input))
    corners = []
    for i, j in diagram.corners():
        d = roddiagram.det2(diagram.rods[i].structure, diagram.rods[j].structure)
        corners.append({"rods": [i, j], "det2": d, "admissible": d == 1})
    horizons = []
    for h, left, right in diagram.horizon_flankings():
        cs = roddiagram.cross_section_topology(
            diagram.rods[left].structure, diagram.rods[right].structure, diagram.n
        )
        horizons.append({"rod": h, "cross_section": cs.to_json_dict()})
    pi1 = fundamental_group(diagram)
    payload = {
        "n": diagram.n,
        "shape": diagram.shape,
        "corners": corners,
        "horizons": horizons,
        "pi1": pi1.to_json_dict(),
        "simply_connected": pi1.trivial,
    }
    lines = _diagram_text(diagram)
    for c in corners:
        state = "admissible" if c["admissible"] else f"INADMISSIBLE (Det_2 = {c['det2']})"
        lines.append(f"corner {tuple(c['rods'])}: {state}")
    for h in horizons:
        lines.append(f"horizon {h['rod']}: cross-section {h['cross_section']['display']}")
    if diagram.shape == roddiagram.HALF_PLANE:
        end = roddiagram.asymptotic_end(diagram)
        payload["end"] = end.to_json_dict()
        payload["end_pi1"] = end_pi1(diagram).to_json_dict()
        lines.append(f"asymptotic end: R+ x {end.display()}")
        lines.append(f"end pi_1 = {end_pi1(diagram).display()}")
    lines.append(f"pi_1 = {pi1.display()}")
    _emit(args, payload, lines)
    return 0


def _cmd_decompose(args):
    diagram = parse(_load(args.input))
    doc = doc_decomposition(diagram)
    payload = doc.to_json_dict()
    lines = [f"J = {doc.J}, N1 = {doc.N1}, N2 = {doc.N2}"]
    for p in doc.pieces:
        lines.append(f"  {p.display()}  (rods {list(p.source_rod_indices)})")
    _emit(args, payload, lines)
    return 0


def _cmd_pi1(args):
    diagram = parse(_load(args.input))
    g = fundamental_group(diagram)
    _emit(args, g.to_json_dict(), [f"pi_1 = {g.display()}"])
    return 0


def _cmd_fillin(args):
    diagram = parse(_load(args.input))
    plan = compactify(diagram)
    payload = {
        "horizon_fills": [f.to_json_dict() for f in plan.horizon_fills],
        "end_cap": plan.end_cap.to_json_dict(),
        "augmentation_waypoints": [list(w) for w in plan.waypoints],
    }
    lines = []
    for f in plan.horizon_fills:
        lines.append(f"horizon {f.rod_index}: {f.kind} {[list(u) for u in f.inserted]}")
    lines.append(f"end cap: {plan.end_cap.kind} {[list(u) for u in plan.end_cap.inserted]}")
    _emit(args, payload, lines)
    return 0


def _cmd_compactify(args):
    diagram = parse(_load(args.input))
    plan = compactify(diagram)
    payload = plan.to_json_dict()
    payload["simply_connected"] = is_simply_connected(plan.diagram)
    lines = _diagram_text(plan.diagram)
    lines.append(f"simply connected: {payload['simply_connected']}")
    _emit(args, payload, lines)
    return 0


def _cmd_classify(args):
    diagram = parse(_load(args.input))
    c = classify(diagram, spin=args.spin)
    payload = c.to_json_dict()
    payload["spin"] = args.spin
    _emit(args, payload, [f"homeomorphism type: {c.display}  (k = {c.k})"])
    return 0


def _cmd_model_verify(args):
    diagram = parse(_load(args.input))
    m = build_model_map(diagram, epsilon=args.epsilon)
    rep = verify_tension(
        m, h=args.grid_h, rays=args.rays, excision_factor=args.excision_factor
    )
    payload = rep.to_json_dict()
    if args.dump_csv:
        rep.dump_csv(args.dump_csv)
        payload["csv"] = args.dump_csv
    lines = [
        f"grid h = {rep.h}, excision = {rep.excision_radius}",
        f"sup bounded across refinement: {rep.sup_bounded_pass}",
        f"decay slope: {rep.decay['mean_slope']} (limit {rep.decay['slope_limit']}): "
        f"{'PASS' if rep.decay_pass else 'FAIL'}",
        f"overall: {'PASS' if rep.passed else 'FAIL'}",
    ]
    _emit(args, payload, lines)
    return 0 if rep.passed else 1


# ----------------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rodtopo",
        description="Exact-arithmetic analysis of rod diagrams of toric black holes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="rod diagram JSON file")
        p.add_argument("--format", choices=("json", "text"), default="text")
        p.add_argument("--out", help="write the report to this path")
        p.set_defaults(fn=fn)
        return p

    add("validate", _cmd_validate, "parse and validate a diagram")
    add("hnf", _cmd_hnf, "Hermite normal form of the structure matrix")
    add("snf", _cmd_snf, "Smith normal form of the structure matrix")
    p = add("detk", _cmd_detk, "k-th determinant divisor of the structure matrix")
    p.add_argument("--k", type=int, required=True)
    add("analyze", _cmd_analyze, "corners, horizons, end, fundamental groups")
    add("decompose", _cmd_decompose, "decomposition of the domain of outer communication")
    add("pi1", _cmd_pi1, "fundamental group of the total space")
    add("fillin", _cmd_fillin, "fill-in chains for horizons and the end")
    add("compactify", _cmd_compactify, "compactified diagram (simply connected disk)")
    p = add("classify", _cmd_classify, "homeomorphism type of a closed diagram")
    p.add_argument("--spin", action="store_true")
    p = add("model-verify", _cmd_model_verify, "build the model map and verify its tension")
    p.add_argument("--grid-h", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--rays", type=int, default=7)
    p.add_argument("--excision-factor", type=float, default=3.0,
                   help="excision radius around the axis set, in units of h")
    p.add_argument("--dump-csv", help="write the tau field as CSV to this path")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        return _fail(str(e), 2)
    except RodTopoError as e:
        return _fail(str(e), 1)
    except ValueError as e:
        return _fail(str(e), 1)


if __name__ == "__main__":
    sys.exit(main())
