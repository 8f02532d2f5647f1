"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Every test prints a single PASS/FAIL line (visible even under output capture).
"""
import math
import os
import subprocess
import sys
import time

import pytest
from scipy import integrate

from boundary_lab import attractor as att
from boundary_lab import cycles as cyc
from boundary_lab import measures as meas
from boundary_lab.geometry import (
    polygon_angles,
    build_geometry,
    pairing_build,
    verify_contraction,
    verify_critical_points,
    verify_endpoint_mapping,
    verify_group_relations,
)
from boundary_lab.maps import Partition


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def test_criterion_1_group_relations(report):
    t0 = time.perf_counter()
    rel = absolute = endp = 0.0
    for g in (2, 3, 4, 5, 10, 50):
        geom = build_geometry(g)
        r = verify_group_relations(geom, 1e-9)
        e = verify_endpoint_mapping(geom, 1e-9)
        rel = max(rel, r.max_residual)
        absolute = max(absolute, max(r.absolute.values()))
        endp = max(endp, e.max_residual)
    dt = time.perf_counter() - t0
    # residuals of words are scale-relative (projective distance); the raw
    # matrix defect is printed alongside for reference
    ok = rel < 1e-9 and endp < 1e-9 and dt < 5
    report(1, ok, f"relation residual {rel:.2e} (raw {absolute:.2e}), endpoint images {endp:.2e}, {dt:.2f} s")


def test_criterion_2_combinatorics(report):
    bad = []
    for g in range(2, 65):
        p = pairing_build(g)
        N = p.N
        for i in range(1, N + 1):
            if p.sigma(p.sigma(i)) != i:
                bad.append((g, "sigma", i))
            if p.theta(p.wrap(p.theta(p.wrap(i - 1)) - 1)) != i:
                bad.append((g, "theta", i))
            if p.wrap(p.rho(p.wrap(p.rho(i) + 1)) + 1) != i:
                bad.append((g, "rho", i))
            if p.theta(p.rho(i)) != p.wrap(4 * g - 4 + i):
                bad.append((g, "theta_rho", i))
            # walk the (θ∘ρ)-orbit; n < N spans several periods
            x = i
            for n in range(N):
                if x != (i - 1 + n * (4 * g - 4)) % N + 1:
                    bad.append((g, "psi", n, i))
                x = p.theta(p.rho(x))
            if p.psi(3, i) != (i - 1 + 3 * (4 * g - 4)) % N + 1:
                bad.append((g, "psi", 3, i))
    report(2, not bad, f"g = 2..64, {len(bad)} integer identity failures")


def test_criterion_3_endpoint_periodicity(report):
    worst2 = worst1 = 0.0
    ok = True
    for g in (2, 3, 5):
        geom = build_geometry(g)
        rep = cyc.verify_endpoint_periodicity(geom, 1e-9)
        fp, fq = cyc.fixed_endpoint_classes(g)
        ok &= rep.passed
        worst2 = max(worst2, max(v for (k, _), v in rep.residuals.items() if k.startswith("f2")))
        for i in range(1, geom.N + 1):
            dp, dq = rep.absolute[("f_P", i)], rep.absolute[("f_Q", i)]
            # "exactly" = to a few ulps of 2π
            ok &= (dp < 1e-12) == (i in fp) and (dq < 1e-12) == (i in fq)
            if i in fp:
                worst1 = max(worst1, dp)
            if i in fq:
                worst1 = max(worst1, dq)
    report(3, ok and worst2 < 1e-9, f"f^2 residual {worst2:.2e}; fixed classes exact to {worst1:.1e}")


def test_criterion_4_angles_and_contraction(report):
    ok = True
    min_gap = math.inf
    beta_res = 0.0
    for g in range(2, 51):
        a = polygon_angles(g)
        min_gap = min(min_gap, a.omega - math.pi / 4)
        beta_res = max(beta_res, abs(a.beta - (math.pi / 4 - a.t)))
    worst_ratio = 0.0
    crit = 0.0
    for g in range(2, 11):
        geom = build_geometry(g)
        c = verify_contraction(geom)
        worst_ratio = max(worst_ratio, c.max_ratio)
        cp = verify_critical_points(geom, 1e-10)
        ok &= c.passed and cp.passed
        crit = max(crit, cp.max_residual)
    ok &= min_gap > 0 and beta_res < 1e-12 and worst_ratio < 0.5
    report(4, ok, f"min(omega - pi/4) = {min_gap:.4f}, beta residual {beta_res:.1e}, "
                  f"contraction max {worst_ratio:.4f}, critical points {crit:.1e}")


def test_criterion_5_cycle_property(report):
    t0 = time.perf_counter()
    unclosed = replay_fail = 0
    counts = {}
    for g in (2, 3):
        geom = build_geometry(g)
        for seed in range(100):
            part = cyc.sample_general_partition(geom, seed)
            for r in cyc.cycle_detect_all(part, 500, 1e-9):
                if not r.closed:
                    unclosed += 1
                    continue
                counts[(r.m, r.k)] = counts.get((r.m, r.k), 0) + 1
                replay_fail += not cyc.replay(r, part)["ok"]
    not_short = 0
    for g in (2, 3):
        geom = build_geometry(g)
        for seed in range(100):
            part = cyc.sample_short_cycle_partition(geom, seed)
            not_short += sum((r.m, r.k) != (1, 1) for r in cyc.cycle_detect_all(part, 500, 1e-9))
    ok = unclosed == 0 and replay_fail == 0 and not_short == 0
    report(5, ok, f"(m,k) counts {dict(sorted(counts.items()))}, unclosed {unclosed}, replay failures "
                  f"{replay_fail}, short seeds not (1,1): {not_short}, {time.perf_counter() - t0:.1f} s")


def test_criterion_6_bijectivity(report):
    t0 = time.perf_counter()
    worst = {"formula": 0.0, "seam": 0.0, "measure": 0.0, "overlap": 0.0}
    ok = True
    for g in (2, 3):
        geom = build_geometry(g)
        for seed in range(10):
            rep = att.verify_bijectivity(cyc.sample_short_cycle_partition(geom, seed), 1e-9)
            ok &= rep.passed
            worst["formula"] = max(worst["formula"], rep.formula_residual)
            worst["seam"] = max(worst["seam"], rep.seam_residual)
            worst["measure"] = max(worst["measure"], rep.measure_gap)
            worst["overlap"] = max(worst["overlap"], rep.max_overlap)
    dt = time.perf_counter() - t0
    ok &= dt < 30
    report(6, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {dt:.1f} s")


def test_criterion_7_trapping_attraction(report):
    t0 = time.perf_counter()
    part = Partition.midpoint(build_geometry(2))
    trap = att.trapping_experiment(part, 10**5, 10**4, 1, delta_min=1e-3, post_steps=100)
    attr = att.attraction_experiment(part, 10**5, 10**4, 1, delta_min=1e-3)
    ratios = att.halving_ratios(part, 10)
    dt = time.perf_counter() - t0
    ok = (trap["entered"] == trap["samples"] == 10**5 and trap["violations"] == 0
          and attr["entered_fraction"] >= 0.999 and attr["max_exceptional_distance"] < 1e-6
          and len(ratios) == 10 and ratios.max() < 0.5 and dt < 120)
    report(7, ok, f"Psi entry {trap['entered']}/{trap['samples']}, violations {trap['violations']}, "
                  f"Omega entry {attr['entered_fraction']:.5f} (non-entrant dist "
                  f"{attr['max_exceptional_distance']:.1e}), halving max {ratios.max():.3f}, {dt:.1f} s")


def test_criterion_8_measures(report):
    t0 = time.perf_counter()
    ctx = meas.MeasureContext.build(Partition.midpoint(build_geometry(2)))
    rect_gap = abs(meas.nu_domain(ctx.domain) / ctx.K - 1)
    k_mc, se = meas.monte_carlo_nu(ctx.domain, 10**7, 0)
    mc_gap = abs(k_mc / ctx.K - 1)
    total = meas.mu_interval(ctx, meas.CircleArc.full(0.0))
    inv = meas.invariance_error(ctx, meas.random_arcs(100, 0))
    spot = meas.nu_rect(0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
    quad = integrate.dblquad(lambda y, x: meas.nu_density(x, y), 0.0, math.pi / 2, math.pi, 3 * math.pi / 2,
                             epsabs=1e-12, epsrel=1e-12)[0]
    dt = time.perf_counter() - t0
    ok = (rect_gap < 1e-10 and mc_gap < 1e-3 and abs(total - 1) < 1e-10 and inv < 1e-8
          and abs(spot - math.log(2)) < 1e-8 and abs(quad - spot) < 1e-8 and dt < 60)
    report(8, ok, f"K = {ctx.K:.12f}, rect gap {rect_gap:.1e}, MC gap {mc_gap:.1e}, mass error "
                  f"{abs(total - 1):.1e}, invariance {inv:.1e}, ln2 vs quadrature {abs(quad - spot):.1e}, {dt:.1f} s")


def _cli(args, threads):
    env = dict(os.environ, BOUNDARY_LAB_THREADS=str(threads))
    res = subprocess.run([sys.executable, "-m", "boundary_lab.cli", *args], env=env,
                         capture_output=True, check=False)
    return res.returncode, res.stdout


def test_criterion_9_determinism(report):
    runs = [
        ["attractor", "--samples", "20000", "--seed", "3", "--max-steps", "2000"],
        ["attractor", "--partition", "random-short:4", "--samples", "10000", "--seed", "8"],
        ["measure", "--mc-samples", "200000", "--seed", "5", "--arcs", "20"],
        ["cycles", "--genus", "3", "--partition", "random:11", "--full"],
        ["orbit", "--x", "0.3", "--y", "2.9", "--steps", "200"],
        ["plot", "--what", "attractor"],
        ["plot", "--what", "trapping", "--partition", "random-short:2"],
        ["plot", "--what", "domain", "--genus", "3"],
    ]
    mismatched = []
    for args in runs:
        outs = [_cli(args, n) for n in (1, 3, 8)]
        if outs[0][0] != 0 or any(o != outs[0] for o in outs[1:]):
            mismatched.append(args[0])
    report(9, not mismatched, f"{len(runs)} runs x worker caps (1, 3, 8): "
                              f"{'byte-identical' if not mismatched else 'differ: ' + str(mismatched)}")
