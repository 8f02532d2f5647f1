"""The measure dν = dθ dφ / |e^{iθ} − e^{iφ}|² on rectangles, K_Ā and μ_Ā.

ν is Möbius invariant, so F_Ā preserves ν restricted to Ω_Ā.  μ_Ā is its
projection to the y coordinate, normalised by K_Ā = ν(Ω_Ā).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circle import TWO_PI, CircleArc, ccw_offset, circ_dist
from .errors import DegenerateConfigurationError, PoleError, SingularDomainError

OVERLAP_TOL = 1e-12
POLE_TOL = 1e-12
SINE_FLOOR = 1e-15


def nu_density(x, y):
    return 1.0 / (2.0 - 2.0 * np.cos(np.asarray(x) - np.asarray(y)))


def nu_rect(a: float, b: float, c: float, d: float) -> float:
    """ν of [a, b] × [c, d] (both arcs counterclockwise) in closed form."""
    lx = b - a if 0.0 <= b - a <= TWO_PI else ccw_offset(a, b)
    ly = d - c if 0.0 <= d - c <= TWO_PI else ccw_offset(c, d)
    if lx == 0.0 or ly == 0.0:
        return 0.0
    # the y-arc must sit in the complement of the x-arc
    s = ccw_offset(a + lx, c)
    if s < OVERLAP_TOL or s + ly > TWO_PI - lx - OVERLAP_TOL:
        raise SingularDomainError(f"rectangle [{a}, {b}] x [{c}, {d}] meets the diagonal")
    b, d = a + lx, c + ly
    num = abs(math.sin((d - b) / 2.0)) * abs(math.sin((c - a) / 2.0))
    den = abs(math.sin((c - b) / 2.0)) * abs(math.sin((d - a) / 2.0))
    return max(math.log(num / den), 0.0)


def nu_domain(dom) -> float:
    return float(sum(nu_rect(r.x0, r.x0 + r.xl, r.y0, r.y0 + r.yl) for r in dom.rects))


@dataclass
class MeasureContext:
    geom: object = field(repr=False)
    part: object = field(repr=False)
    K: float
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    domain: object = field(repr=False)

    @classmethod
    def build(cls, part) -> "MeasureContext":
        from .attractor import build_omega_A, corner_levels

        dom = build_omega_A(part)
        B, C = corner_levels(part)
        g = part.geom
        ctx = cls(g, part, 0.0, np.asarray(g.P), np.asarray(g.Q), np.asarray(part.A), B, C, dom)
        ctx.K = K_A_closed_form(ctx)
        return ctx


def K_A_closed_form(ctx: MeasureContext) -> float:
    """ln of the product of sine ratios over the N strips."""
    p, q, b, c = ctx.p, ctx.q, ctx.b, ctx.c
    N = len(p)
    total = 0.0
    for i in range(N):
        num = (abs(math.sin((c[i] - q[(i + 2) % N]) / 2.0)), abs(math.sin((b[i] - p[(i - 1) % N]) / 2.0)))
        den = (abs(math.sin((b[i] - p[i]) / 2.0)), abs(math.sin((c[i] - q[(i + 1) % N]) / 2.0)))
        if min(num + den) < SINE_FLOOR:
            raise DegenerateConfigurationError(f"vanishing sine factor in strip {i + 1}")
        total += math.log(num[0]) + math.log(num[1]) - math.log(den[0]) - math.log(den[1])
    return total


def _cot_half(x):
    return 1.0 / np.tan(0.5 * x)


def mu_density(ctx: MeasureContext, phi) -> np.ndarray | float:
    """Density of μ_Ā: the ν-mass of the x-fibre of Ω_Ā over φ, divided by K.

    Each piece [x0, x1] × Y contributes ½(cot((x0 − φ)/2) − cot((x1 − φ)/2))
    when φ ∈ Y.
    """
    ph = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.zeros(ph.shape)
    for r in ctx.domain.rects:
        on = np.mod(ph - r.y0, TWO_PI) <= r.yl
        if not on.any():
            continue
        x0, x1 = r.x0, r.x0 + r.xl
        gap = np.minimum(circ_dist(ph[on], x0), circ_dist(ph[on], x1))
        if np.any(gap < POLE_TOL):
            raise PoleError("phi at a fibre endpoint")
        out[on] += 0.5 * (_cot_half(x0 - ph[on]) - _cot_half(x1 - ph[on]))
    out /= ctx.K
    return float(out[0]) if np.ndim(phi) == 0 else out


def mu_density_literal(ctx: MeasureContext, phi) -> np.ndarray | float:
    """Σ_i (cot((q_{i+1} − φ)/2) − cot((p_i − φ)/2)) / K, the unrestricted fibre sum.

    Kept for comparison only: it drops the factor ½ and ignores which
    strips contain φ, so it is not the density of μ_Ā.
    """
    ph = np.atleast_1d(np.asarray(phi, dtype=float))
    p, q = ctx.p, ctx.q
    if np.any(circ_dist(ph[:, None], np.concatenate([p, q])[None, :]) < POLE_TOL):
        raise PoleError("phi at a pole")
    qn = np.roll(q, -1)
    out = (_cot_half(qn[None, :] - ph[:, None]) - _cot_half(p[None, :] - ph[:, None])).sum(axis=1) / ctx.K
    return float(out[0]) if np.ndim(phi) == 0 else out


def mu_interval(ctx: MeasureContext, I: CircleArc) -> float:
    """μ_Ā(I) = ν(Ω_Ā ∩ (S × I)) / K, exactly."""
    tot = 0.0
    for r in ctx.domain.rects:
        for piece in r.y_arc.intersect(I):
            tot += nu_rect(r.x0, r.x0 + r.xl, piece.start, piece.start + piece.length)
    return tot / ctx.K


def mu_arcs(ctx: MeasureContext, arcs) -> float:
    return float(sum(mu_interval(ctx, I) for I in arcs))


def invariance_error(ctx: MeasureContext, arcs) -> float:
    """max |μ(f⁻¹ I) − μ(I)| over the given arcs."""
    from .maps import f_preimage_interval

    return max((abs(mu_arcs(ctx, f_preimage_interval(ctx.part, I)) - mu_interval(ctx, I)) for I in arcs),
               default=0.0)


def random_arcs(n: int, seed: int) -> list[CircleArc]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        s = rng.uniform(0.0, TWO_PI)
        out.append(CircleArc.from_length(s, rng.uniform(1e-3, TWO_PI - 1e-3), "closed_open"))
    return out


def monte_carlo_nu(dom, n_samples: int, seed: int) -> tuple[float, float]:
    """Stratified Monte-Carlo estimate of ν(dom) and its standard error.

    One stratum per piece with uniform samples inside it, allocated by area.
    Pieces stay a positive distance from the diagonal, so the integrand is
    bounded on every stratum.
    """
    rects = dom.rects
    areas = np.array([r.xl * r.yl for r in rects])
    alloc = np.maximum(2, np.floor(n_samples * areas / areas.sum())).astype(int)
    est = 0.0
    var = 0.0
    for k, (r, n) in enumerate(zip(rects, alloc)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        x = r.x0 + r.xl * rng.random(n)
        y = r.y0 + r.yl * rng.random(n)
        f = nu_density(x, y) * areas[k]
        est += f.mean()
        var += f.var(ddof=1) / n
    return float(est), float(math.sqrt(var))


def measure_report(part, n_mc: int = 10**6, seed: int = 0, n_arcs: int = 100) -> dict:
    ctx = MeasureContext.build(part)
    k_mc, _ = monte_carlo_nu(ctx.domain, n_mc, seed)
    return {
        "K_closed": ctx.K,
        "K_rect_sum": nu_domain(ctx.domain),
        "K_monte_carlo": k_mc,
        "mu_total": mu_interval(ctx, CircleArc.full(0.0)),
        "invariance_max_error": invariance_error(ctx, random_arcs(n_arcs, seed)),
    }
