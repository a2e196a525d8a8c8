"""Command line entry point.

Exit codes: 0 pass, 1 usage or I/O error, 2 negative mathematical verdict,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .complex_poly import map_from_json
from .dynamics import (
    DEFAULT_OPTIONS,
    Options,
    critical_points,
    is_newton_map,
    is_postcritically_fixed,
)
from .errors import NewtonGraphError, NumericalError
from .newton_graph import (
    LevelMismatchError,
    NonTerminationError,
    NotPostcriticallyFixedError,
    build_channel_diagram,
    newton_graph_level,
    poles_connect_level,
    validate_abstract_newton_graph,
)
from .planar_graph import find_equivalences, graph_from_json, graph_to_dot, graph_to_json
from .render import RenderSpec, render_basins, save_figure, write_ppm
from .serialize import canonical_json
from .thurston import (
    lift_data_from_json,
    obstruction_verdict,
    orbifold_data_from_graph,
    orbifold_data_from_json,
    orbifold_signature,
    thurston_matrix,
)

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NegativeVerdict(Exception):
    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"parse error in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _emit(obj, out_dir: Optional[Path], name: str) -> str:
    text = canonical_json(obj)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)
    return text


def _load_map(args):
    path = args.roots or args.coeffs
    if path is None:
        raise UsageError("one of --roots or --coeffs is required")
    data = load_json(path)
    key = "roots" if args.roots else "coeffs"
    if key not in data:
        raise UsageError(f"{path} has no '{key}' list")
    try:
        return map_from_json({key: data[key]})
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed {key} in {path}: {exc}") from exc


def _options(args) -> Options:
    eps = DEFAULT_OPTIONS.eps_fix if args.tol_fix is None else args.tol_fix
    if eps <= 0:
        raise UsageError("--tol-fix must be positive")
    return Options(eps_fix=eps)


def analysis_report(f, opts: Options) -> dict:
    rep = is_newton_map(f)
    fixed = [
        {
            "location": r.location,
            "multiplier": r.multiplier,
            "m": r.m,
            "classification": r.classification,
        }
        for r in rep.fixed_points
    ]
    crit = []
    pcf = None
    if rep.ok:
        for c in critical_points(f, opts=opts):
            crit.append(
                {
                    "location": c.location,
                    "local_degree": c.local_degree,
                    "fate": list(c.fate),
                    "orbit": list(c.orbit[:8]),
                }
            )
        pcf = is_postcritically_fixed(f, opts=opts).verdict
    return {
        "degree": f.degree,
        "newton_map": rep.ok,
        "reasons": list(rep.reasons) + list(f.flags),
        "fixed_points": fixed,
        "critical_points": crit,
        "postcritically_fixed": pcf,
    }


def cmd_analyze(args) -> int:
    f = _load_map(args)
    opts = _options(args)
    report = analysis_report(f, opts)
    sys.stdout.write(_emit(report, args.out, "analysis.json"))
    if f.flags:
        raise NegativeVerdict(f.flags[0].split(":")[0])
    if not report["newton_map"]:
        raise NegativeVerdict("not a Newton map: " + "; ".join(report["reasons"]))
    return EXIT_OK


def cmd_newton_graph(args) -> int:
    f = _load_map(args)
    if f.flags:
        raise NegativeVerdict(f.flags[0].split(":")[0])
    opts = _options(args)
    if args.out is None:
        raise UsageError("newton-graph needs --out DIR")
    try:
        result = newton_graph_level(f, args.max_level, opts)
    except NotPostcriticallyFixedError as exc:
        raise NegativeVerdict(str(exc), {"undecided_orbits": exc.undecided}) from exc
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    counts = []
    for lv in result.levels:
        name = f"delta_{lv.n}"
        (out / f"{name}.json").write_text(canonical_json(graph_to_json(lv.graph, lv.map_to_previous)))
        (out / f"{name}.dot").write_text(graph_to_dot(lv.graph, lv.map_to_previous, name))
        counts.append({"n": lv.n, "vertices": len(lv.graph.vertices), "edges": len(lv.graph.edges)})
    _emit(result.report.to_json(), out, "validation.json")
    summary = {
        "N": result.N,
        "poles_connect_level": poles_connect_level(f, args.max_level, opts, result.levels),
        "levels": counts,
        "valid": result.report.overall,
    }
    sys.stdout.write(_emit(summary, out, "summary.json"))
    if args.figure:
        spec = RenderSpec(args.width, args.height, args.viewport)
        save_figure(args.figure, f, spec, opts, result.graph, f"level {result.N}")
    if not result.report.overall:
        raise NegativeVerdict("pipeline graph fails the abstract Newton graph conditions")
    return EXIT_OK


def cmd_render(args) -> int:
    f = _load_map(args)
    opts = _options(args)
    overlay = ()
    if args.overlay:
        overlay = tuple(r.points for r in build_channel_diagram(f, opts).rays)
    spec = RenderSpec(args.width, args.height, args.viewport, args.max_iter, overlay=overlay)
    img = render_basins(f, spec, opts)
    if args.out is None:
        raise UsageError("render needs --out DIR")
    args.out.mkdir(parents=True, exist_ok=True)
    write_ppm(args.out / "basins.ppm", img)
    if args.figure:
        graph = build_channel_diagram(f, opts).graph if args.overlay else None
        save_figure(args.figure, f, spec, opts, graph)
    sys.stdout.write(canonical_json({"image": str(args.out / "basins.ppm"), "width": spec.width, "height": spec.height}))
    return EXIT_OK


def _load_graph(path):
    g, m = graph_from_json(load_json(path))
    if m is None:
        raise UsageError(f"{path} carries no graph map")
    return g, m


def cmd_validate(args) -> int:
    g, m = _load_graph(args.graph)
    rep = validate_abstract_newton_graph(g, m)
    sys.stdout.write(_emit(rep.to_json(), args.out, "validation.json"))
    if not rep.overall:
        raise NegativeVerdict("graph fails the abstract Newton graph conditions")
    return EXIT_OK


def cmd_equivalence(args) -> int:
    g1, m1 = _load_graph(args.graph)
    g2, m2 = _load_graph(args.other)
    wits = find_equivalences(g1, m1, g2, m2)
    payload = {
        "equivalent": bool(wits),
        "witnesses": [
            {
                "vertices": {str(k): v for k, v in w["vertices"].items()},
                "edges": {str(k): [v[0], -1 if v[1] else 1] for k, v in w["edges"].items()},
            }
            for w in wits
        ],
    }
    sys.stdout.write(_emit(payload, args.out, "equivalence.json"))
    if not wits:
        raise NegativeVerdict("graphs are not equivalent")
    return EXIT_OK


def cmd_thurston(args) -> int:
    if args.matrix is not None:
        try:
            matrix = json.loads(args.matrix)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--matrix parse error at column {exc.colno}: {exc.msg}") from exc
    elif args.input is not None:
        n, lifts = lift_data_from_json(load_json(args.input))
        matrix = thurston_matrix(lifts, n).tolist()
    else:
        raise UsageError("thurston needs --input FILE or --matrix JSON")
    rep = obstruction_verdict(matrix)
    payload = dict(rep.to_json(), matrix=matrix)
    sys.stdout.write(_emit(payload, args.out, "thurston.json"))
    if rep.obstruction_candidate:
        raise NegativeVerdict("obstruction candidate")
    return EXIT_OK


def cmd_orbifold(args) -> int:
    if args.graph is not None:
        data = orbifold_data_from_graph(*_load_graph(args.graph))
    elif args.input is not None:
        data = orbifold_data_from_json(load_json(args.input))
    else:
        raise UsageError("orbifold needs --input FILE or --graph FILE")
    sig = orbifold_signature(data)
    sys.stdout.write(_emit(sig.to_json(), args.out, "orbifold.json"))
    return EXIT_OK


def _viewport(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad viewport {text!r}") from exc
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("viewport is xmin,xmax,ymin,ymax")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="newton-graph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def map_args(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--roots", type=Path, help="JSON file with a 'roots' list")
        src.add_argument("--coeffs", type=Path, help="JSON file with a 'coeffs' list")
        sp.add_argument("--tol-fix", type=float, default=None, help="landing tolerance at fixed points")

    def image_args(sp):
        sp.add_argument("--width", type=int, default=512)
        sp.add_argument("--height", type=int, default=512)
        sp.add_argument("--viewport", type=_viewport, default=(-2.0, 2.0, -2.0, 2.0))
        sp.add_argument("--figure", type=Path, help="also write a matplotlib PNG here")

    sp = sub.add_parser("analyze", help="fixed points, critical orbits, PCF verdict")
    map_args(sp)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("newton-graph", help="channel diagram pullbacks up to the Newton graph")
    map_args(sp)
    image_args(sp)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--max-level", type=int, default=20)
    sp.set_defaults(func=cmd_newton_graph)

    sp = sub.add_parser("render", help="basin image as PPM")
    map_args(sp)
    image_args(sp)
    sp.add_argument("--out", type=Path)
    sp.add_argument("--max-iter", type=int, default=200)
    sp.add_argument("--overlay", action="store_true", help="draw the channel diagram")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("validate", help="check the abstract Newton graph conditions")
    sp.add_argument("--graph", type=Path, required=True)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("equivalence", help="equivalences between two graph maps")
    sp.add_argument("--graph", type=Path, required=True)
    sp.add_argument("--other", type=Path, required=True)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_equivalence)

    sp = sub.add_parser("thurston", help="leading eigenvalue and obstruction verdict")
    sp.add_argument("--input", type=Path, help="lift data JSON")
    sp.add_argument("--matrix", help="matrix as a JSON list of rows")
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_thurston)

    sp = sub.add_parser("orbifold", help="orbifold signature of a marked self-map")
    sp.add_argument("--input", type=Path, help="orbifold data JSON")
    sp.add_argument("--graph", type=Path, help="graph JSON with map")
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_orbifold)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NegativeVerdict as exc:
        if exc.payload:
            sys.stdout.write(canonical_json(exc.payload))
        print(f"verdict: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (NumericalError, NonTerminationError, LevelMismatchError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NewtonGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
