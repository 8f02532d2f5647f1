"""Upper and lower orbits of the jump points and their closure.

For a jump A_i the upper orbit starts at T_i A_i and the lower orbit at
T_{i-1} A_i.  When an orbit lands on some A_j the next step uses T_j for an
upper orbit and T_{j-1} for a lower one; elsewhere it follows f_Ā.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .circle import TWO_PI, CircleArc, ccw_offset, circ_dist, normalize_angle
from .errors import DomainError
from .geometry import SurfaceGeometry, VerificationReport, critical_points, mp_matrix
from .maps import OrbitTrace, Partition, f_apply_side, interval_index

MATCH_TOL = 1e-9
HIT_TOL = 1e-10
SAMPLE_MARGIN = 1e-9
CONSISTENCY_STEPS = 3


def discontinuity_hit(part: Partition, x: float, tol: float = HIT_TOL) -> int | None:
    """Label j of a jump point A_j within ``tol`` of x, if any."""
    j = interval_index(part, x)
    if circ_dist(x, part.a(j)) < tol:
        return j
    nxt = part.geom.wrap(j + 1)
    if circ_dist(x, part.a(nxt)) < tol:
        return nxt
    return None


def step(part: Partition, x: float, side: str, tol: float = HIT_TOL) -> tuple[float, int, bool]:
    """One step of an upper or lower orbit: (image, generator label, hit flag)."""
    j = discontinuity_hit(part, x, tol)
    if j is None:
        i = interval_index(part, x)
        hit = False
    else:
        i = j if side == "upper" else part.geom.wrap(j - 1)
        hit = True
    return f_apply_side(part.geom, x, i), i, hit


def side_orbit(part: Partition, x: float, n: int, side: str) -> tuple[OrbitTrace, list[int]]:
    """Orbit of x under the upper/lower convention; also returns the steps that hit a jump."""
    if side not in ("upper", "lower"):
        raise DomainError("side must be 'upper' or 'lower'")
    x = normalize_angle(x)
    pts, sides, hits = [x], [], []
    for k in range(n):
        x, i, hit = step(part, x, side)
        if hit:
            hits.append(k)
        pts.append(x)
        sides.append(i)
    return OrbitTrace(pts, sides), hits


def seeds(part: Partition, i: int) -> tuple[float, float]:
    g = part.geom
    return g.gen(i)(part.a(i)), g.gen(i - 1)(part.a(i))


@dataclass
class CycleReport:
    i: int
    upper: OrbitTrace
    lower: OrbitTrace
    m: int | None
    k: int | None
    end: float | None
    is_short: bool
    closed: bool
    hits: dict = field(default_factory=dict)

    def to_dict(self, full: bool = True) -> dict:
        d = {
            "i": self.i,
            "m": self.m,
            "k": self.k,
            "end_theta": self.end,
            "is_short": self.is_short,
            "closed": self.closed,
        }
        if full:
            d["upper"] = self.upper.points
            d["lower"] = self.lower.points
        return d


def _bucket(x: float, h: float) -> int:
    return int(math.floor(x / h))


def _word(geom: SurfaceGeometry, first: int, sides) -> mpmath.matrix:
    with mpmath.workdps(30):
        W = mp_matrix(geom.gen(first))
        for s in sides:
            W = mp_matrix(geom.gen(s)) * W
        return W


def word_gap(geom: SurfaceGeometry, i: int, up_sides, lo_sides) -> float:
    """Relative coefficient distance between the upper and lower orbit words.

    Genuine closures come from word identities, so the two composed maps
    agree up to the rounding of the stored generators.
    """
    with mpmath.workdps(30):
        U = _word(geom, i, up_sides)
        L = _word(geom, geom.wrap(i - 1), lo_sides)
        n = max(abs(U[0, 0]), abs(U[0, 1]))
        d = min(max(abs(U[0, 0] - s * L[0, 0]), abs(U[0, 1] - s * L[0, 1])) for s in (1, -1))
        return float(d / n)


def _continuations_agree(part: Partition, u: float, l: float, tol: float) -> bool:
    # both points follow the branch picked for u, so the test is blind to
    # the upper/lower convention when the common point is itself a jump
    for _ in range(CONSISTENCY_STEPS):
        u, i, _ = step(part, u, "upper")
        l = f_apply_side(part.geom, l, i)
        if circ_dist(u, l) >= tol:
            return False
    return True


class _LazyOrbit:
    def __init__(self, part: Partition, x: float, side: str):
        self.part, self.side = part, side
        self.points, self.sides, self.hits = [normalize_angle(x)], [], []

    def extend(self, n: int):
        x = self.points[-1]
        while len(self.points) <= n:
            x, i, hit = step(self.part, x, self.side)
            if hit:
                self.hits.append(len(self.sides))
            self.sides.append(i)
            self.points.append(x)


def cycle_detect(part: Partition, i: int, max_iter: int = 500, tol: float = MATCH_TOL) -> CycleReport:
    """First (m, k) in (m+k, m) order with f^m(T_i A_i) = f^k(T_{i-1} A_i).

    Orbits are grown on doubling prefixes; a match with m + k <= L found in
    the length-L prefixes is minimal overall.  Candidate matches are
    confirmed by comparing the two orbit words, falling back to a short
    forward-consistency run.
    """
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    i = part.geom.wrap(i)
    u0, l0 = seeds(part, i)
    up, lo = _LazyOrbit(part, u0, "upper"), _LazyOrbit(part, l0, "lower")
    nb = int(round(TWO_PI / tol))
    table: dict[int, list[int]] = {}
    rejected = set()
    L = 0
    while True:
        L = min(max(2 * L, 8), max_iter)
        up.extend(L)
        lo.extend(L)
        table.clear()
        for k, y in enumerate(lo.points[:L + 1]):
            table.setdefault(_bucket(y, tol) % nb, []).append(k)
        pairs = []
        for m, x in enumerate(up.points[:L + 1]):
            b = _bucket(x, tol)
            for key in (b - 1, b, b + 1):
                for k in table.get(key % nb, ()):
                    if m + k <= L and (m, k) not in rejected and circ_dist(x, lo.points[k]) < tol:
                        pairs.append((m + k, m, k))
        for _, m, k in sorted(set(pairs)):
            confirmed = (word_gap(part.geom, i, up.sides[:m], lo.sides[:k]) < tol
                         or _continuations_agree(part, up.points[m], lo.points[k], tol))
            if not confirmed:
                rejected.add((m, k))
                continue
            hits = {"upper": [h for h in up.hits if h < m], "lower": [h for h in lo.hits if h < k]}
            return CycleReport(i, OrbitTrace(up.points[:m + 1], up.sides[:m]),
                               OrbitTrace(lo.points[:k + 1], lo.sides[:k]),
                               m, k, up.points[m], m == 1 and k == 1, True, hits)
        if L >= max_iter:
            break
    hits = {"upper": up.hits, "lower": lo.hits}
    return CycleReport(i, OrbitTrace(up.points[:max_iter + 1], up.sides[:max_iter]),
                       OrbitTrace(lo.points[:max_iter + 1], lo.sides[:max_iter]),
                       None, None, None, False, False, hits)


def cycle_detect_all(part: Partition, max_iter: int = 500, tol: float = MATCH_TOL) -> list[CycleReport]:
    return [cycle_detect(part, i, max_iter, tol) for i in range(1, part.N + 1)]


def _open_arc_contains(a: float, b: float, x: float) -> bool:
    d = ccw_offset(a, x)
    return 0.0 < d < ccw_offset(a, b)


def is_short_cycle(part: Partition, i: int) -> bool:
    """T_iA_i ∈ (Q_ρ(i), A_ρ(i)+1) and T_{i-1}A_i ∈ (A_θ(i-1), P_θ(i-1)+1)."""
    g = part.geom
    up, lo = seeds(part, i)
    r, th = g.rho(i), g.theta(i - 1)
    return (_open_arc_contains(g.q(r), part.a(r + 1), up)
            and _open_arc_contains(part.a(th), g.p(th + 1), lo))


def short_cycle_failures(part: Partition) -> list[int]:
    return [i for i in range(1, part.N + 1) if not is_short_cycle(part, i)]


def _sample_in_arcs(starts, lengths, seed: int) -> np.ndarray:
    out = np.empty(len(starts))
    for idx, (s, L) in enumerate(zip(starts, lengths)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx + 1]))
        u = rng.uniform(SAMPLE_MARGIN, L - SAMPLE_MARGIN)
        out[idx] = normalize_angle(s + u)
    return out


def sample_short_cycle_partition(geom: SurfaceGeometry, seed: int) -> Partition:
    """A_i uniform on (b_i, a_i), independently per index."""
    a, b = critical_points(geom)
    lengths = [ccw_offset(b[k], a[k]) for k in range(geom.N)]
    return Partition.general(geom, _sample_in_arcs(b, lengths, seed))


def sample_general_partition(geom: SurfaceGeometry, seed: int) -> Partition:
    """A_i uniform on (P_i, Q_i), independently per index."""
    lengths = [geom.window(i).length for i in range(1, geom.N + 1)]
    return Partition.general(geom, _sample_in_arcs(geom.P, lengths, seed))


# independent replay ---------------------------------------------------------

def _branch_by_scan(part: Partition, x: float) -> int:
    """Linear scan over the half-open branch arcs (no binary search)."""
    for i in range(1, part.N + 1):
        if part.branch_arc(i).contains(x):
            return i
    raise AssertionError("branch arcs do not cover the circle")


def replay(report: CycleReport, part: Partition, tol: float = MATCH_TOL) -> dict:
    """Re-derive a closure from scratch with composed words.

    Each recorded side label is re-checked against a linear branch scan
    (jump hits excepted), and the two words applied to A_i must agree with
    each other and with the reported end point.
    """
    if not report.closed:
        return {"applicable": False}
    g = part.geom
    i = report.i
    result = {"applicable": True, "branch_mismatches": 0}
    ends = []
    for trace, first, side in ((report.upper, i, "upper"), (report.lower, g.wrap(i - 1), "lower")):
        word = g.gen(first)
        x = f_apply_side(g, part.a(i), first)
        for s in trace.side_indices:
            if discontinuity_hit(part, x) is None and _branch_by_scan(part, x) != s:
                result["branch_mismatches"] += 1
            word = g.gen(s) @ word
            x = f_apply_side(g, x, s)
        ends.append((word(part.a(i)), x))
    (wu, xu), (wl, xl) = ends
    result["word_gap"] = circ_dist(wu, wl)
    result["step_gap"] = circ_dist(xu, xl)
    result["end_gap"] = max(circ_dist(xu, report.end), circ_dist(xl, report.end))
    result["ok"] = (result["branch_mismatches"] == 0 and result["step_gap"] < tol
                    and result["end_gap"] < tol and result["word_gap"] < 1e3 * tol)
    return result


# long-cycle structure ---------------------------------------------------------

def terminal_classes(g: int) -> set[int]:
    return {2, 2 * g + 1, 4 * g, 6 * g - 1}


def _halfopen(a: float, b: float, x: float, closed_start: bool) -> bool:
    arc = CircleArc(a, b, "closed_open" if closed_start else "open_closed")
    return arc.contains(x)


def validate_cycle_structure(report: CycleReport, part: Partition) -> dict:
    """Compare a long closure against the ψ_n = (θ∘ρ)^n orbit pattern.

    While the pattern's hypotheses hold the applied labels must be
      upper:  ρ(ψ_n)+1 at step 2n,  ψ_n − 1 at step 2n+1
      lower:  θ(ψ_n − 1) at step 2n,  ψ_{n+1} − 1 at step 2n+1
    with f^{2n}(T_iA_i) ∈ [A_{ρ(ψ_n)+1}, Q_{ρ(ψ_n)+1}) and
    f^{2n+1}(T_{i-1}A_i) ∈ (P_{ψ_{n+1}}, A_{ψ_{n+1}}].
    """
    if not report.closed:
        return {"applicable": False, "reason": "not closed"}
    g = part.geom
    pr = g.pairing
    i = report.i
    u, l = report.upper, report.lower
    if report.is_short:
        return {"applicable": True, "branch": "short", "valid": True, "steps_checked": 0}
    r = g.rho(i)
    if not _halfopen(part.a(r + 1), g.q(r + 1), u.points[0], True):
        th = g.theta(i - 1)
        if _halfopen(g.p(th), part.a(th), l.points[0], False):
            return {"applicable": True, "branch": "lower_long", "valid": None,
                    "note": "mirror case; pattern stated for the upper branch only"}
        return {"applicable": True, "branch": "other", "valid": None}

    mismatches = []
    checked = 0

    def check(trace, kk, lab, side):
        nonlocal checked
        if kk < len(trace.side_indices):
            checked += 1
            if trace.side_indices[kk] != g.wrap(lab):
                mismatches.append((side, kk, trace.side_indices[kk], g.wrap(lab)))

    terminal, how, n = None, None, 0
    while 2 * n < len(u.side_indices):
        psi, psi1 = pr.psi(n, i), pr.psi(n + 1, i)
        rp = g.rho(psi)
        if not _halfopen(part.a(rp + 1), g.q(rp + 1), u.points[2 * n], True):
            terminal, how = n, "endgame"
            break
        check(u, 2 * n, rp + 1, "upper")
        check(l, 2 * n, g.theta(psi - 1), "lower")
        check(u, 2 * n + 1, psi - 1, "upper")
        if 2 * n + 1 >= len(l.points):
            break
        if not _halfopen(g.p(psi1), part.a(psi1), l.points[2 * n + 1], False):
            terminal, how = n, "merge"
            break
        check(l, 2 * n + 1, psi1 - 1, "lower")
        n += 1
    out = {
        "applicable": True,
        "branch": "upper_long",
        "valid": not mismatches,
        "steps_checked": checked,
        "mismatches": mismatches,
        "terminal_n": terminal,
        "termination": how,
    }
    if how == "endgame":
        # f^{2n}(T_iA_i) left the long branch: the orbits meet one step later
        pt = pr.psi(terminal, i)
        out["terminal_psi"] = pt
        out["terminal_in_class"] = pt in terminal_classes(g.g)
        out["expected_mk"] = (2 * terminal + 1, 2 * terminal + 1)
    elif how == "merge":
        out["expected_mk"] = (2 * terminal + 2, 2 * terminal + 2)
    if "expected_mk" in out:
        out["closure_matches"] = (report.m, report.k) == out["expected_mk"]
        out["valid"] = out["valid"] and out["closure_matches"]
    return out


# Bowen-Series endpoint orbits ---------------------------------------------------

def periodic_structure(part: Partition, i: int, max_iter: int = 64, tol: float = MATCH_TOL) -> dict:
    """Preperiod and period of the upper and lower orbits of A_i."""
    out = {"i": i}
    for side, x in zip(("upper", "lower"), seeds(part, i)):
        trace, _ = side_orbit(part, x, max_iter, side)
        pts = trace.points
        found = None
        for b in range(len(pts)):
            for a in range(b):
                if circ_dist(pts[a], pts[b]) < tol:
                    found = (a, b - a)
                    break
            if found:
                break
        if found:
            pre, per = found
            out[side] = {"preperiod": pre, "period": per, "points": pts[pre:pre + per]}
        else:
            out[side] = {"preperiod": None, "period": None, "points": pts[:4]}
    return out


def key_identity_residual(geom: SurfaceGeometry) -> float:
    """max_i coefficient distance between T_σ(i)+1 T_i and T_σ(i-1)-1 T_{i-1}."""
    worst = 0.0
    for i in range(1, geom.N + 1):
        lhs = geom.gen(geom.sigma(i) + 1) @ geom.gen(i)
        rhs = geom.gen(geom.sigma(i - 1) - 1) @ geom.gen(i - 1)
        worst = max(worst, lhs.distance(rhs))
    return worst


def fixed_endpoint_classes(g: int) -> tuple[set[int], set[int]]:
    """Indices with f_P̄(P_i) = P_i, and with f_P̄(Q_i) = Q_i."""
    return {1, 2 * g, 4 * g - 1, 6 * g - 2}, {2, 2 * g + 1, 4 * g, 6 * g - 1}


def verify_endpoint_periodicity(geom: SurfaceGeometry, tol: float = 1e-9) -> VerificationReport:
    """f_P̄² fixes every P_i and Q_i; f_P̄ fixes the listed classes.

    P_i is a jump of f_P̄, so its orbit follows the left limit (lower
    convention).  Q_i sits inside a branch.  Fixed-point entries compare the
    membership of the one-step residual in the expected class.
    """
    part = Partition.bowen_series(geom)
    rep = VerificationReport("endpoint_periodicity", tol)
    fp, fq = fixed_endpoint_classes(geom.g)
    for i in range(1, geom.N + 1):
        for name, x0, side, cls in (("P", geom.p(i), "lower", fp), ("Q", geom.q(i), "upper", fq)):
            x1, _, _ = step(part, x0, side)
            x2, _, _ = step(part, x1, side)
            rep.residuals[(f"f2_{name}", i)] = circ_dist(x2, x0)
            one = circ_dist(x1, x0)
            rep.absolute[(f"f_{name}", i)] = one
            # inside the class the one-step residual must vanish, outside it must not
            rep.residuals[(f"fixed_{name}", i)] = (one if i in cls else (0.0 if one > tol else math.inf))
    return rep
