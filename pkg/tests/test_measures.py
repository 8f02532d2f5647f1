import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from boundary_lab import attractor as att
from boundary_lab.circle import TWO_PI, CircleArc
from boundary_lab.cycles import sample_short_cycle_partition
from boundary_lab.errors import SingularDomainError
from boundary_lab.geometry import build_geometry
from boundary_lab.maps import Partition
from boundary_lab.measures import (
    K_A_closed_form,
    MeasureContext,
    invariance_error,
    measure_report,
    monte_carlo_nu,
    mu_density,
    mu_density_literal,
    mu_interval,
    nu_density,
    nu_domain,
    nu_rect,
    random_arcs,
)

G2 = build_geometry(2)
G3 = build_geometry(3)
CTX2 = MeasureContext.build(Partition.midpoint(G2))


def admissible_rect(rng):
    """Random rectangle whose y-arc avoids the x-arc."""
    a = rng.uniform(0, TWO_PI)
    lx = rng.uniform(0.01, 3.0)
    gap = TWO_PI - lx
    c = a + lx + rng.uniform(0.01, 0.4) * gap
    ly = rng.uniform(0.05, 0.5) * (a + TWO_PI - c)
    return a, a + lx, c, c + ly


def test_nu_rect_ln2_against_quadrature():
    val = nu_rect(0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
    assert val == pytest.approx(math.log(2), abs=1e-15)
    quad, err = integrate.dblquad(lambda y, x: nu_density(x, y), 0.0, math.pi / 2,
                                  math.pi, 3 * math.pi / 2, epsabs=1e-12, epsrel=1e-12)
    assert abs(quad - val) < 1e-8


def test_nu_rect_basic():
    assert nu_rect(1.0, 1.0, 2.0, 3.0) == 0.0
    assert nu_rect(0.2, 1.0, 2.0, 4.0) == pytest.approx(nu_rect(2.0, 4.0, 0.2, 1.0), abs=1e-15)
    # wrapped arcs
    assert nu_rect(6.0, 0.5, 2.0, 3.0) == pytest.approx(nu_rect(6.0 - TWO_PI, 0.5, 2.0, 3.0), abs=1e-15)
    with pytest.raises(SingularDomainError):
        nu_rect(0.0, 2.0, 1.0, 3.0)
    with pytest.raises(SingularDomainError):
        nu_rect(0.0, 1.0, 1.0, 2.0)


@settings(max_examples=200)
@given(st.integers(0, 10**6))
def test_nu_rect_nonnegative_and_additive(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = admissible_rect(rng)
    v = nu_rect(a, b, c, d)
    assert v >= 0
    s = a + rng.uniform(0.1, 0.9) * (b - a)
    assert nu_rect(a, s, c, d) + nu_rect(s, b, c, d) == pytest.approx(v, abs=1e-12)
    u = c + rng.uniform(0.1, 0.9) * (d - c)
    assert nu_rect(a, b, c, u) + nu_rect(a, b, u, d) == pytest.approx(v, abs=1e-12)
    assert nu_rect(a, s, c, u) <= v


@settings(max_examples=1000)
@given(st.integers(0, 10**6))
def test_nu_mobius_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = admissible_rect(rng)
    T = G2.gen(int(rng.integers(1, 13)))
    # T is an increasing homeomorphism, so corners map to corners
    img = nu_rect(T(a), T(a) + (T(b) - T(a)) % TWO_PI, T(c), T(c) + (T(d) - T(c)) % TWO_PI)
    assert img == pytest.approx(nu_rect(a, b, c, d), rel=1e-10, abs=1e-12)


def test_K_closed_form_matches_rect_sum():
    assert CTX2.K > 0
    assert abs(nu_domain(CTX2.domain) / CTX2.K - 1) < 1e-10
    for seed in range(10):
        ctx = MeasureContext.build(sample_short_cycle_partition(G3, seed))
        assert abs(nu_domain(ctx.domain) / ctx.K - 1) < 1e-10


def test_K_rotation_invariance():
    s = 0.731
    shifted = dataclasses.replace(CTX2, p=CTX2.p + s, q=CTX2.q + s, a=CTX2.a + s, b=CTX2.b + s, c=CTX2.c + s)
    assert K_A_closed_form(shifted) == pytest.approx(CTX2.K, abs=1e-12)


def test_K_agrees_with_bowen_series_domain():
    # ν(Ω) turns out not to depend on the short-cycle partition
    k_p = att.build_omega_P(G3).nu()
    for seed in range(3):
        assert MeasureContext.build(sample_short_cycle_partition(G3, seed)).K == pytest.approx(k_p, rel=1e-12)


def test_psi_minus_omega_additivity():
    part = Partition.midpoint(G2)
    psi = att.build_psi(part)
    diff = sum(nu_rect(r.x0, r.x0 + r.xl, r.y0, r.y0 + r.yl) for r in att.build_D(part).rects)
    assert nu_domain(psi) - nu_domain(CTX2.domain) == pytest.approx(diff, rel=1e-10)


def test_monte_carlo_oracle():
    est, se = monte_carlo_nu(CTX2.domain, 10**6, 3)
    assert abs(est - CTX2.K) < 5 * se
    assert abs(est / CTX2.K - 1) < 5e-3


def test_density_positive():
    phi = np.random.default_rng(0).uniform(0, TWO_PI, 1000)
    assert np.all(mu_density(CTX2, phi) > 0)
    assert isinstance(mu_density(CTX2, 1.0), float)


def test_density_matches_fibre_quadrature():
    for phi in np.random.default_rng(1).uniform(0, TWO_PI, 20):
        tot = 0.0
        for r in CTX2.domain.rects:
            if (phi - r.y0) % TWO_PI <= r.yl:
                # integrate over the x-fibre in unwrapped coordinates
                tot += integrate.quad(lambda x: float(nu_density(x, phi)), r.x0, r.x0 + r.xl,
                                      epsabs=1e-13, epsrel=1e-13)[0]
        assert mu_density(CTX2, phi) == pytest.approx(tot / CTX2.K, abs=1e-10)


def test_density_integrates_to_interval_mass():
    I = CircleArc(0.4, 1.9, "closed_open")
    # the density jumps at the strip levels, so split the quadrature there
    cuts = sorted(x for x in [*CTX2.a, *CTX2.b, *CTX2.c] if 0.4 < x < 1.9)
    knots = [0.4, *cuts, 1.9]
    val = sum(integrate.quad(lambda p: mu_density(CTX2, p), lo, hi, epsabs=1e-13)[0]
              for lo, hi in zip(knots, knots[1:]))
    assert val == pytest.approx(mu_interval(CTX2, I), abs=1e-10)


def test_literal_sum_is_not_a_density():
    # the unrestricted fibre sum takes negative values, so it cannot be the density of μ
    phi = np.linspace(0.01, 6.2, 50)
    assert mu_density_literal(CTX2, phi).min() < 0


def test_mu_normalisation_and_complement():
    assert mu_interval(CTX2, CircleArc.full()) == pytest.approx(1.0, abs=1e-10)
    for arc in random_arcs(20, 4):
        comp = CircleArc(arc.end, arc.start, "closed_open")
        assert mu_interval(CTX2, arc) + mu_interval(CTX2, comp) == pytest.approx(1.0, abs=1e-10)


def test_mu_invariance():
    assert invariance_error(CTX2, random_arcs(100, 7)) < 1e-8
    ctx = MeasureContext.build(sample_short_cycle_partition(G3, 2))
    assert invariance_error(ctx, random_arcs(50, 8)) < 1e-8


def test_measure_report_keys():
    rep = measure_report(Partition.midpoint(G2), n_mc=10**5, n_arcs=10)
    assert set(rep) == {"K_closed", "K_rect_sum", "K_monte_carlo", "mu_total", "invariance_max_error"}
