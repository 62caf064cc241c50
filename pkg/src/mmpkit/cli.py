"""Command-line interface: model file IO, engine dispatch, trace emission.

Exit codes: 0 success, 2 validation error (malformed input), 3 engine error.
All rational values are printed as exact "p/q" strings.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from .linalg import as_fraction, format_fraction
from .kappa import (
    big_check,
    kodaira_dimension,
    section_count,
    sections_table,
    truncation_probe,
)
from .mmp import (
    MMPError,
    Pair,
    STRATEGIES,
    pair_from_json,
    run_lmmp_scaling,
    run_plain,
)
from .polytope import RationalPolytope
from .singular import (
    SingularityError,
    classify,
    crepant_pullback,
    du_val_type,
    lc_polytope,
    lc_threshold,
    resolution_from_json,
)
from .surface import (
    SurfaceError,
    blown_up_plane,
    castelnuovo_contract,
    enumerate_minus_one_classes,
    find_minus_one_curves,
    model_from_json,
    model_to_json,
    blow_up,
)
from .toric import (
    Fan,
    FanError,
    check_regular,
    check_simplicial,
    check_terminal,
    divisor as toric_divisor,
    fan_from_json,
    fan_to_json,
    star_subdivision,
    toric_canonical,
    toric_contract,
    toric_mori_rays,
    wall_curves,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ENGINE = 3


class ValidationError(ValueError):
    pass


def _read_json(path: str) -> dict:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def load_pair(data: dict) -> Pair:
    """Sniff the model kind: a pair wrapper, a bare fan, or a bare surface."""
    try:
        if "backend" in data:
            return pair_from_json(data)
        if "rays" in data:
            fan = fan_from_json(data)
            boundary = data.get("boundary")
            if boundary is not None:
                boundary = toric_divisor(fan, boundary)
            return Pair(fan, boundary)
        if "basis" in data:
            return Pair(model_from_json(data))
    except KeyError as exc:
        raise ValidationError(f"missing field {exc}") from exc
    raise ValidationError(
        "unrecognized model: expected keys 'backend', 'rays' (fan) or 'basis' (surface)"
    )


def load_fan(data: dict) -> Fan:
    try:
        return fan_from_json(data)
    except KeyError as exc:
        raise ValidationError(f"missing fan field {exc}") from exc


def _parse_coeffs(text: str) -> list[Fraction]:
    return [as_fraction(part.strip()) for part in text.split(",") if part.strip()]


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _divisor_arg(fan: Fan, text: str):
    if text == "anticanonical":
        return tuple(-x for x in toric_canonical(fan))
    if text == "canonical":
        return toric_canonical(fan)
    return toric_divisor(fan, _parse_coeffs(text))


def _pair_divisor_arg(pair: Pair, text: str):
    if pair.is_toric:
        return _divisor_arg(pair.model, text)
    if text == "anticanonical":
        return tuple(-x for x in pair.model.canonical)
    if text == "canonical":
        return pair.model.canonical
    return tuple(_parse_coeffs(text))


def _seeded_strategy(name: str, seed: int | None):
    base = STRATEGIES[name]
    if seed is None:
        return name
    rng = random.Random(seed)

    def pick(candidates):
        order = list(range(len(candidates)))
        rng.shuffle(order)
        permuted = [candidates[i] for i in order]
        return order[base(permuted)]

    return pick


def _polytope_payload(poly: RationalPolytope) -> dict:
    return {
        "dim": poly.dim_ambient,
        "inequalities": [
            {
                "coeffs": [format_fraction(c) for c in h.coeffs],
                "rhs": format_fraction(h.rhs),
            }
            for h in poly.halfspaces
        ],
        "vertices": [[format_fraction(x) for x in v] for v in poly.vertices()],
    }


# Subcommand handlers.

def cmd_toric_check(args) -> int:
    fan = load_fan(_read_json(args.model))
    cones = []
    for i in range(len(fan.max_cones)):
        cone = fan.cone(i)
        simplicial = check_simplicial(cone)
        entry = {
            "rays": [list(fan.rays[j]) for j in fan.max_cones[i]],
            "regular": check_regular(cone),
            "simplicial": simplicial,
        }
        if simplicial and cone.dim() == fan.rank:
            report = check_terminal(cone)
            entry["terminal"] = report.is_terminal
            if report.certificate is not None:
                entry["certificate"] = list(report.certificate)
        cones.append(entry)
    _emit(
        {
            "complete": fan.complete,
            "regular": all(c["regular"] for c in cones),
            "simplicial": all(c["simplicial"] for c in cones),
            "terminal": all(c.get("terminal", True) for c in cones),
            "cones": cones,
        },
        args.out,
    )
    return EXIT_OK


def cmd_toric_resolve(args) -> int:
    fan = load_fan(_read_json(args.model))
    steps = []
    if args.at:
        point = tuple(int(x) for x in args.at.split(","))
        fan = star_subdivision(fan, point)
        steps.append(list(point))
    else:
        for _ in range(args.max_steps):
            bad = None
            for i in range(len(fan.max_cones)):
                cone = fan.cone(i)
                if not check_regular(cone):
                    report = check_terminal(cone)
                    bad = report.certificate
                    if bad is None:
                        # Terminal but singular: subdivide at the ray sum.
                        bad = tuple(sum(r[k] for r in cone.rays) for k in range(fan.rank))
                        from .linalg import primitivize

                        bad = primitivize(bad)
                    break
            if bad is None:
                break
            fan = star_subdivision(fan, bad)
            steps.append(list(bad))
        else:
            raise MMPError("resolution did not terminate within the step budget")
    _emit({"fan": fan_to_json(fan), "subdivisions": steps}, args.out)
    return EXIT_OK


def cmd_toric_mori(args) -> int:
    fan = load_fan(_read_json(args.model))
    k = toric_canonical(fan)
    rays = []
    for ray in toric_mori_rays(fan):
        rays.append(
            {
                "direction": [format_fraction(x) for x in ray.direction],
                "k_value": format_fraction(ray.pair(k)),
                "walls": [list(c.wall) for c in ray.walls],
            }
        )
    _emit({"rays": rays}, args.out)
    return EXIT_OK


def cmd_toric_contract(args) -> int:
    fan = load_fan(_read_json(args.model))
    rays = toric_mori_rays(fan)
    if args.ray < 0 or args.ray >= len(rays):
        raise ValidationError(f"ray index {args.ray} out of range (have {len(rays)})")
    result = toric_contract(fan, rays[args.ray])
    _emit(
        {
            "kind": result.kind,
            "fan": fan_to_json(result.fan),
            "dropped_rays": [list(r) for r in result.dropped_fan_rays],
        },
        args.out,
    )
    return EXIT_OK


def cmd_surface_lines(args) -> int:
    classes = enumerate_minus_one_classes(args.k, args.bound)
    _emit({"count": len(classes), "classes": [list(c) for c in classes]}, args.out)
    return EXIT_OK


def cmd_surface_blowup(args) -> int:
    model = model_from_json(_read_json(args.model))
    for _ in range(args.times):
        model = blow_up(model, [])
    _emit(model_to_json(model), args.out)
    return EXIT_OK


def cmd_surface_contract(args) -> int:
    model = model_from_json(_read_json(args.model))
    coords = tuple(_parse_coeffs(args.curve))
    curve = next((c for c in model.curves if c.coords == coords), None)
    if curve is None:
        curve = model.curve(coords)
    contracted = castelnuovo_contract(model, curve)
    _emit(model_to_json(contracted), args.out)
    return EXIT_OK


def cmd_surface_classify(args) -> int:
    data = resolution_from_json(_read_json(args.model))
    coeffs = _parse_coeffs(args.coeffs) if args.coeffs else ()
    report = crepant_pullback(data, coeffs)
    _emit(
        {
            "discrepancies": [format_fraction(d) for d in report.discrepancies],
            "class": classify(report).value,
            "du_val": du_val_type(data),
        },
        args.out,
    )
    return EXIT_OK


def cmd_surface_lct(args) -> int:
    data = resolution_from_json(_read_json(args.model))
    value = lc_threshold(data, args.slot)
    _emit({"lct": format_fraction(value)}, args.out)
    return EXIT_OK


def cmd_mmp_run(args) -> int:
    pair = load_pair(_read_json(args.model))
    choices = [int(x) for x in args.choices.split(",")] if args.choices else None
    if choices is not None:
        trace = run_plain(pair, choices=choices, budget=args.budget)
    else:
        trace = run_plain(pair, strategy=args.strategy, budget=args.budget)
    payload = trace.to_json()
    if args.trace:
        Path(args.trace).write_bytes(trace.to_json_bytes())
    _emit(payload, args.out)
    return EXIT_OK


def cmd_mmp_scale(args) -> int:
    pair = load_pair(_read_json(args.model))
    c = _pair_divisor_arg(pair, args.C)
    strategy = _seeded_strategy(args.strategy, args.seed)
    trace = run_lmmp_scaling(pair, c, strategy=strategy, budget=args.budget)
    if isinstance(strategy, str):
        trace.strategy = strategy
    else:
        trace.strategy = f"{args.strategy}(seed={args.seed})"
    payload = trace.to_json()
    if args.trace:
        Path(args.trace).write_bytes(trace.to_json_bytes())
    _emit(payload, args.out)
    return EXIT_OK


def cmd_kappa_count(args) -> int:
    fan = load_fan(_read_json(args.model))
    d = _divisor_arg(fan, args.D)
    table = sections_table(fan, d, args.m)
    if args.csv:
        lines = ["m,h0"] + [f"{m},{h}" for m, h in table]
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    _emit({"table": [[m, h] for m, h in table]}, args.out)
    return EXIT_OK


def cmd_kappa_dim(args) -> int:
    fan = load_fan(_read_json(args.model))
    d = _divisor_arg(fan, args.D)
    report = kodaira_dimension(fan, d)
    big = big_check(fan, d)
    _emit(
        {
            "kappa": "-inf" if report.value is None else report.value,
            "undetermined": report.undetermined,
            "route_b_skipped": report.route_b_skipped,
            "sample_stride": report.sample_stride,
            "samples": list(report.samples),
            "big": big.is_big,
        },
        args.out,
    )
    return EXIT_OK


def cmd_kappa_probe(args) -> int:
    fan = load_fan(_read_json(args.model))
    d = _divisor_arg(fan, args.D)
    report = truncation_probe(fan, d, args.I, level_bound=args.m)
    _emit(
        {
            "level_bound": report.level_bound,
            "truncation": report.truncation,
            "full_generators": {str(k): v for k, v in sorted(report.full_generator_profile.items())},
            "truncated_generators": {
                str(k): v for k, v in sorted(report.truncated_generator_profile.items())
            },
            "truncation_degrees_bounded": report.truncation_degrees_bounded,
        },
        args.out,
    )
    return EXIT_OK


def cmd_polytope_lc(args) -> int:
    data = resolution_from_json(_read_json(args.model))
    _emit(_polytope_payload(lc_polytope(data)), args.out)
    return EXIT_OK


def cmd_polytope_nef(args) -> int:
    fan = load_fan(_read_json(args.model))
    curves = wall_curves(fan)
    k = toric_canonical(fan)
    n = len(fan.rays)
    halves = []
    for j in range(n):
        unit = tuple(Fraction(int(i == j)) for i in range(n))
        halves.append((unit, Fraction(0)))
        halves.append((tuple(-x for x in unit), Fraction(-1)))
    for curve in curves:
        row = tuple(curve.numbers)
        rhs = -sum(
            (kk * x for kk, x in zip(k, curve.numbers)), Fraction(0)
        )
        halves.append((row, rhs))
    poly = RationalPolytope.from_inequalities(n, halves)
    _emit(_polytope_payload(poly), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(
        port=args.port,
        host="0.0.0.0" if args.allow_remote else "127.0.0.1",
        persist_dir=args.persist,
        ui_dir=args.ui_dir,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmpkit",
        description="Exact minimal model program engine on fans and surface lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", help="write the JSON result here instead of stdout")

    toric = sub.add_parser("toric").add_subparsers(dest="sub", required=True)
    p = toric.add_parser("check")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_toric_check)
    p = toric.add_parser("resolve")
    p.add_argument("model")
    p.add_argument("--at", help="subdivide once at this lattice point, e.g. 0,1")
    p.add_argument("--max-steps", type=int, default=16)
    add_common(p)
    p.set_defaults(func=cmd_toric_resolve)
    p = toric.add_parser("mori")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_toric_mori)
    p = toric.add_parser("contract")
    p.add_argument("model")
    p.add_argument("--ray", type=int, required=True)
    add_common(p)
    p.set_defaults(func=cmd_toric_contract)

    surface = sub.add_parser("surface").add_subparsers(dest="sub", required=True)
    p = surface.add_parser("lines")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--bound", type=int, default=7)
    add_common(p)
    p.set_defaults(func=cmd_surface_lines)
    p = surface.add_parser("blowup")
    p.add_argument("model")
    p.add_argument("--times", type=int, default=1)
    add_common(p)
    p.set_defaults(func=cmd_surface_blowup)
    p = surface.add_parser("contract")
    p.add_argument("model")
    p.add_argument("--curve", required=True, help="class coordinates, e.g. 0,0,1")
    add_common(p)
    p.set_defaults(func=cmd_surface_contract)
    p = surface.add_parser("classify")
    p.add_argument("model")
    p.add_argument("--coeffs", help="boundary coefficients, e.g. 1,1/2")
    add_common(p)
    p.set_defaults(func=cmd_surface_classify)
    p = surface.add_parser("lct")
    p.add_argument("model")
    p.add_argument("--slot", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_surface_lct)

    mmp = sub.add_parser("mmp").add_subparsers(dest="sub", required=True)
    p = mmp.add_parser("run")
    p.add_argument("model")
    p.add_argument("--choices", help="comma-separated ray indices")
    p.add_argument("--strategy", default="first", choices=sorted(STRATEGIES))
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--trace", help="write the canonical trace bytes here")
    add_common(p)
    p.set_defaults(func=cmd_mmp_run)
    p = mmp.add_parser("scale")
    p.add_argument("model")
    p.add_argument("--C", required=True, help="'anticanonical' or coefficients")
    p.add_argument("--strategy", default="first", choices=sorted(STRATEGIES))
    p.add_argument("--seed", type=int, help="fix tie-break ordering")
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--trace", help="write the canonical trace bytes here")
    add_common(p)
    p.set_defaults(func=cmd_mmp_scale)

    kappa = sub.add_parser("kappa").add_subparsers(dest="sub", required=True)
    p = kappa.add_parser("count")
    p.add_argument("model")
    p.add_argument("--D", required=True)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--csv", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_kappa_count)
    p = kappa.add_parser("dim")
    p.add_argument("model")
    p.add_argument("--D", required=True)
    add_common(p)
    p.set_defaults(func=cmd_kappa_dim)
    p = kappa.add_parser("probe")
    p.add_argument("model")
    p.add_argument("--D", required=True)
    p.add_argument("--I", type=int, required=True)
    p.add_argument("--m", type=int, default=8)
    add_common(p)
    p.set_defaults(func=cmd_kappa_probe)

    polytope = sub.add_parser("polytope").add_subparsers(dest="sub", required=True)
    p = polytope.add_parser("lc")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_polytope_lc)
    p = polytope.add_parser("nef")
    p.add_argument("model")
    add_common(p)
    p.set_defaults(func=cmd_polytope_nef)

    p = sub.add_parser("serve")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--allow-remote", action="store_true")
    p.add_argument("--persist", help="directory for session snapshots")
    p.add_argument("--ui-dir", help="static assets directory for /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FanError, SurfaceError, SingularityError, MMPError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (KeyError, TypeError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
