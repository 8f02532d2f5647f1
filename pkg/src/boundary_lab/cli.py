"""boundary-lab: construction, verification and experiments from the shell.

Exit codes: 0 success, 1 verification failure, 2 usage or precondition error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from collections import Counter
from pathlib import Path

from . import attractor as att
from . import cycles as cyc
from . import measures as meas
from .errors import BoundaryLabError
from .geometry import (
    build_geometry,
    polygon_angles,
    pairing_identity_failures,
    verify_contraction,
    verify_critical_points,
    verify_endpoint_mapping,
    verify_group_relations,
)
from .maps import DIAGONAL_TOL, F_apply, Partition
from .circle import circ_dist, normalize_angle
from .serialize import dumps, geometry_to_dict, load_geometry, load_partition
from .svg import domain_svg, torus_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_partition(geom, spec: str) -> Partition:
    if spec == "bowen-series":
        return Partition.bowen_series(geom)
    if spec == "dual":
        return Partition.dual(geom)
    if spec == "midpoint":
        return Partition.midpoint(geom)
    kind, _, arg = spec.partition(":")
    if kind == "file" and arg:
        return load_partition(geom, arg)
    if kind in ("random", "random-short"):
        try:
            seed = int(arg)
        except ValueError:
            raise UsageError(f"bad seed in partition spec {spec!r}") from None
        if kind == "random":
            return cyc.sample_general_partition(geom, seed)
        return cyc.sample_short_cycle_partition(geom, seed)
    raise UsageError(f"unknown partition spec {spec!r}")


def _geometry(args):
    if getattr(args, "geometry", None):
        return load_geometry(args.geometry)
    if args.genus < 2:
        raise UsageError("genus must be >= 2")
    return build_geometry(args.genus)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# subcommands ------------------------------------------------------------------

def cmd_geom(args) -> int:
    geom = _geometry(args)
    _emit(dumps(geometry_to_dict(geom)), args.out)
    return EXIT_OK


def _pairing_check(geom, tol):
    bad = pairing_identity_failures(geom.pairing)
    return {"name": "pairing_identities", "passed": not bad, "failures": bad}


def _angle_check(geom, tol):
    ang = polygon_angles(geom.g)
    beta_res = abs(ang.beta - (math.pi / 4 - ang.t))
    return {"name": "polygon_angles", "passed": ang.omega > math.pi / 4 and beta_res < tol,
            "omega": ang.omega, "beta_residual": beta_res}


def _key_identity_check(geom, tol):
    kr = cyc.key_identity_residual(geom)
    return {"name": "key_identity", "passed": kr < tol, "max_residual": kr}


CHECKS = (
    ("pairing_identities", _pairing_check),
    ("group_relations", lambda g, tol: verify_group_relations(g, tol).to_dict()),
    ("endpoint_mapping", lambda g, tol: verify_endpoint_mapping(g, tol).to_dict()),
    ("endpoint_periodicity", lambda g, tol: cyc.verify_endpoint_periodicity(g, tol).to_dict()),
    ("critical_points", lambda g, tol: verify_critical_points(g, tol).to_dict()),
    ("contraction", lambda g, tol: verify_contraction(g).to_dict()),
    ("polygon_angles", _angle_check),
    ("key_identity", _key_identity_check),
)


def verification_suite(geom, tol: float) -> list[dict]:
    """Every structural check; a check that cannot even run counts as failed."""
    out = []
    for name, fn in CHECKS:
        try:
            out.append(fn(geom, tol))
        except (BoundaryLabError, ValueError, ZeroDivisionError) as exc:
            out.append({"name": name, "passed": False, "error": str(exc)})
    return out


def cmd_verify(args) -> int:
    geom = _geometry(args)
    checks = verification_suite(geom, args.tol)
    ok = all(c["passed"] for c in checks)
    _emit(dumps({"g": geom.g, "tol": args.tol, "passed": ok, "checks": checks}), args.out)
    for c in checks:
        _say(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cycles(args) -> int:
    geom = _geometry(args)
    part = parse_partition(geom, args.partition)
    if part.mode == "bowen_series":
        rows = [cyc.periodic_structure(part, i) for i in range(1, geom.N + 1)]
        _emit(dumps({"partition": args.partition, "mode": part.mode, "periodic": rows}), args.out)
        _say(f"periodic endpoint orbits reported for {geom.N} indices")
        return EXIT_OK
    reps = cyc.cycle_detect_all(part, args.max_iter, args.tol)
    closed = all(r.closed for r in reps)
    summary = {
        "all_closed": closed,
        "all_short": all(r.is_short for r in reps),
        "mk_counts": {f"{m},{k}": n for (m, k), n in sorted(Counter((r.m, r.k) for r in reps if r.closed).items())},
        "unclosed": [r.i for r in reps if not r.closed],
    }
    _emit(dumps({"partition": args.partition, "mode": part.mode, "summary": summary,
                 "reports": [r.to_dict(full=args.full) for r in reps]}), args.out)
    _say(f"closed {sum(r.closed for r in reps)}/{len(reps)}; (m,k) counts {summary['mk_counts']}")
    return EXIT_FAIL if args.strict and not closed else EXIT_OK


def _require_domain(part: Partition):
    if part.mode == "dual":
        raise UsageError("no rectangular domain is built for the dual partition")
    if part.mode != "bowen_series":
        bad = cyc.short_cycle_failures(part)
        if bad:
            raise UsageError(f"partition fails the short cycle property at i = {bad}")


def cmd_attractor(args) -> int:
    geom = _geometry(args)
    part = parse_partition(geom, args.partition)
    _require_domain(part)
    dom = att.build_domain(part)
    bij = att.verify_bijectivity(part, args.tol)
    trap = att.trapping_experiment(part, args.samples, args.max_steps, args.seed, args.delta_min)
    attr = att.attraction_experiment(part, args.samples, args.max_steps, args.seed, args.delta_min)
    ok = (bij.passed and trap["entered"] == trap["samples"] and trap["violations"] == 0
          and attr["entered_fraction"] >= 0.999 and attr["max_exceptional_distance"] < 1e-6
          and attr.get("halving_bound_holds", True))
    out = {"partition": args.partition, "passed": ok, "domain": dom.to_dict(),
           "bijectivity": bij.to_dict(), "trapping": trap, "attraction": attr}
    if part.mode != "bowen_series":
        out["psi_nu"] = att.build_psi(part).nu()
    _emit(dumps(out), args.out)
    _say(f"bijectivity {'pass' if bij.passed else 'FAIL'}; trapping entered "
         f"{trap['entered']}/{trap['samples']}; attraction entered {attr['entered']}/{attr['samples']}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_measure(args) -> int:
    geom = _geometry(args)
    part = parse_partition(geom, args.partition)
    if part.mode in ("bowen_series", "dual"):
        raise UsageError("measure needs a short-cycle partition")
    _require_domain(part)
    ctx = meas.MeasureContext.build(part)
    k_rect = meas.nu_domain(ctx.domain)
    k_mc, se = meas.monte_carlo_nu(ctx.domain, args.mc_samples, args.seed)
    rep = {
        "K_closed": ctx.K,
        "K_rect_sum": k_rect,
        "K_monte_carlo": k_mc,
        "mu_total": meas.mu_interval(ctx, meas.CircleArc.full(0.0)),
        "invariance_max_error": meas.invariance_error(ctx, meas.random_arcs(args.arcs, args.seed)),
        "K_monte_carlo_stderr": se,
        "mc_samples": args.mc_samples,
    }
    ok = (abs(k_rect / ctx.K - 1) < 1e-10 and abs(rep["mu_total"] - 1) < 1e-10
          and rep["invariance_max_error"] < 1e-8 and abs(k_mc - ctx.K) < 5 * se)
    rep["passed"] = ok
    _emit(dumps(rep), args.out)
    _say(f"K = {ctx.K:.12g}; Monte Carlo {k_mc:.8g} +- {se:.2g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_orbit(args) -> int:
    geom = _geometry(args)
    part = parse_partition(geom, args.partition)
    x, y = normalize_angle(args.x), normalize_angle(args.y)
    if circ_dist(x, y) < DIAGONAL_TOL:
        raise UsageError("x and y coincide (diagonal)")
    om = psi = None
    if part.mode == "bowen_series":
        om = psi = att.build_omega_P(geom)
    elif part.mode != "dual" and not cyc.short_cycle_failures(part):
        om, psi = att.build_omega_A(part), att.build_psi(part)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "x_theta", "y_theta", "side_index", "in_omega", "in_psi"])
    for n in range(args.steps + 1):
        side = ""
        nxt = None
        if n < args.steps:
            nxt, side = F_apply(part, x, y)
        flags = ["" if om is None else str(om.contains(x, y)).lower(),
                 "" if psi is None else str(psi.contains(x, y)).lower()]
        w.writerow([n, format(x, ".17g"), format(y, ".17g"), side, *flags])
        if nxt is not None:
            x, y = nxt
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    geom = _geometry(args)
    if args.what == "domain":
        _emit(domain_svg(geom), args.out)
        return EXIT_OK
    part = parse_partition(geom, args.partition)
    _require_domain(part)
    if args.what == "attractor":
        rects = att.build_domain(part).rects
    elif part.mode == "bowen_series":
        raise UsageError("the trapping region is only built for short-cycle partitions")
    else:
        rects = att.build_psi(part).rects
    _emit(torus_svg(rects), args.out)
    return EXIT_OK


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boundary-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, helptext, partition=True):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--genus", type=int, default=2)
        p.add_argument("--geometry", help="load a geometry JSON instead of building one")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--out", help="output file (default: stdout)")
        if partition:
            p.add_argument("--partition", default="midpoint",
                           help="bowen-series | dual | midpoint | random-short:SEED | random:SEED | file:PATH")
        p.set_defaults(func=func)
        return p

    add("geom", cmd_geom, "write the geometry JSON", partition=False)
    add("verify", cmd_verify, "run every structural check", partition=False)
    p = add("cycles", cmd_cycles, "cycle closure of the jump points")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--strict", action="store_true", help="exit 1 if any cycle stays open")
    p.add_argument("--full", action="store_true", help="include full orbit words")
    p = add("attractor", cmd_attractor, "bijectivity, trapping and attraction")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-min", type=float, default=1e-3)
    p = add("measure", cmd_measure, "K and the invariant density")
    p.add_argument("--mc-samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--arcs", type=int, default=100)
    p = add("orbit", cmd_orbit, "CSV trace of an F orbit")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--steps", type=int, default=20)
    p = add("plot", cmd_plot, "SVG figures")
    p.add_argument("--what", choices=("domain", "attractor", "trapping"), default="domain")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "samples", 1) < 1 or args.tol <= 0:
        _say("error: samples must be >= 1 and tol > 0")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, BoundaryLabError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
