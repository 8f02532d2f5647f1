"""Rectangular domains on the torus S×S and the experiments run on them.

A rectangle is a pair of closed counterclockwise arcs (x-arc, y-arc) stored
as start + length.  Strip i collects the pieces whose y-arc lies in the i-th
branch arc of the partition.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circle import TWO_PI, CircleArc, MobiusMap, arc_contains_array, ccw_offset, circ_dist
from .cycles import short_cycle_failures
from .errors import ConstructionError, PreconditionError
from .geometry import SurfaceGeometry
from .maps import F_array, Partition
from .measures import nu_rect

SLACK = 1e-12
CHUNK = 4096
KINDS = ("omega_P", "omega_A", "psi_A", "D_only", "alt_A")


@dataclass(frozen=True)
class Rect:
    x0: float
    xl: float
    y0: float
    yl: float
    kind: str = ""
    strip: int = 0

    @classmethod
    def between(cls, xa, xb, ya, yb, kind="", strip=0) -> "Rect":
        return cls(float(xa), ccw_offset(xa, xb), float(ya), ccw_offset(ya, yb), kind, strip)

    @property
    def x_arc(self) -> CircleArc:
        return CircleArc.from_length(self.x0, self.xl)

    @property
    def y_arc(self) -> CircleArc:
        return CircleArc.from_length(self.y0, self.yl)

    @property
    def x1(self) -> float:
        return (self.x0 + self.xl) % TWO_PI

    @property
    def y1(self) -> float:
        return (self.y0 + self.yl) % TWO_PI

    def nu(self) -> float:
        return nu_rect(self.x0, self.x0 + self.xl, self.y0, self.y0 + self.yl)

    def contains(self, x: float, y: float, slack: float = SLACK) -> bool:
        return bool(arc_contains_array(self.x0, self.xl, x, slack)
                    and arc_contains_array(self.y0, self.yl, y, slack))

    def image(self, T: MobiusMap, kind: str | None = None, strip: int | None = None) -> "Rect":
        """Image under T×T by corner mapping (T is an increasing circle homeomorphism)."""
        return Rect.between(T(self.x0), T(self.x0 + self.xl), T(self.y0), T(self.y0 + self.yl),
                            self.kind if kind is None else kind,
                            self.strip if strip is None else strip)

    def corners(self) -> list[list[float]]:
        return [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]]


@dataclass
class StripSpec:
    i: int
    y_arc: CircleArc
    pieces: list[Rect]
    B: float | None = None
    C: float | None = None


@dataclass
class RectangularDomain:
    kind: str
    strips: list[StripSpec]
    y_starts: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.y_starts = np.array([s.y_arc.start for s in self.strips])
        K = max(len(s.pieces) for s in self.strips)
        n = len(self.strips)
        self._x0 = np.zeros((n, K))
        self._xl = np.full((n, K), -1.0)
        self._y0 = np.zeros((n, K))
        self._yl = np.full((n, K), -1.0)
        for j, s in enumerate(self.strips):
            for k, r in enumerate(s.pieces):
                self._x0[j, k], self._xl[j, k] = r.x0, r.xl
                self._y0[j, k], self._yl[j, k] = r.y0, r.yl
        self._off = np.mod(self.y_starts - self.y_starts[0], TWO_PI)

    @property
    def rects(self) -> list[Rect]:
        return [r for s in self.strips for r in s.pieces]

    def nu(self) -> float:
        return float(sum(r.nu() for r in self.rects))

    def contains(self, x: float, y: float, slack: float = SLACK) -> bool:
        return bool(self.contains_array(np.array([x]), np.array([y]), slack)[0])

    def contains_array(self, x, y, slack: float = SLACK) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(self.strips)
        j = np.searchsorted(self._off, np.mod(y - self.y_starts[0], TWO_PI), side="right") - 1
        inside = np.zeros(x.shape, dtype=bool)
        # a point on a strip boundary, or within slack of it, may sit in a neighbour
        for shift in (-1, 0, 1):
            jj = (j + shift) % n
            for k in range(self._x0.shape[1]):
                xl = self._xl[jj, k]
                ok = (xl >= 0.0) & arc_contains_array(self._x0[jj, k], xl, x, slack)
                ok &= arc_contains_array(self._y0[jj, k], self._yl[jj, k], y, slack)
                inside |= ok
        return inside

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "strips": [
                {
                    "i": s.i,
                    "y_arc": [s.y_arc.start, s.y_arc.end],
                    "B": s.B,
                    "C": s.C,
                    "pieces": [{"kind": r.kind, "corners": r.corners()} for r in s.pieces],
                }
                for s in self.strips
            ],
        }


# corner levels ----------------------------------------------------------------

def corner_levels(part: Partition) -> tuple[np.ndarray, np.ndarray]:
    """B_i = T_σ(i-1) A_σ(i-1) and C_i = T_σ(i+1) A_σ(i+1)+1."""
    g = part.geom
    B = np.empty(g.N)
    C = np.empty(g.N)
    for i in range(1, g.N + 1):
        s0, s1 = g.sigma(i - 1), g.sigma(i + 1)
        B[i - 1] = g.gen(s0)(part.a(s0))
        C[i - 1] = g.gen(s1)(part.a(s1 + 1))
    return B, C


def _in_halfopen(x: float, lo: float, hi: float, slack: float = 1e-12) -> bool:
    return ccw_offset(lo, x + slack) < ccw_offset(lo, hi) + slack


def _require_short(part: Partition):
    bad = short_cycle_failures(part)
    if bad:
        raise PreconditionError(f"short cycle property fails for i = {bad}")


# builders ---------------------------------------------------------------------

def build_omega_P(geom: SurfaceGeometry) -> RectangularDomain:
    p, q = geom.p, geom.q
    strips = []
    for i in range(1, geom.N + 1):
        pieces = [Rect.between(q(i + 2), p(i - 1), p(i), q(i), "lower", i),
                  Rect.between(q(i + 2), p(i), q(i), p(i + 1), "upper", i)]
        strips.append(StripSpec(i, CircleArc(p(i), p(i + 1), "closed_closed"), pieces))
    return RectangularDomain("omega_P", strips)


def build_omega_A(part: Partition) -> RectangularDomain:
    _require_short(part)
    g = part.geom
    p, q, a = g.p, g.q, part.a
    B, C = corner_levels(part)
    strips = []
    for i in range(1, g.N + 1):
        b, c = float(B[i - 1]), float(C[i - 1])
        if not (_in_halfopen(b, q(i), a(i + 1)) and _in_halfopen(c, a(i), p(i + 1))):
            raise ConstructionError(f"corner levels B_{i}, C_{i} out of place")
        pieces = [Rect.between(q(i + 2), p(i - 1), a(i), a(i + 1), "tilde", i),
                  Rect.between(q(i + 1), q(i + 2), a(i), c, "lower", i),
                  Rect.between(p(i - 1), p(i), b, a(i + 1), "upper", i)]
        strips.append(StripSpec(i, CircleArc(a(i), a(i + 1), "closed_closed"), pieces, b, c))
    return RectangularDomain("omega_A", strips)


def build_D(part: Partition) -> RectangularDomain:
    _require_short(part)
    g = part.geom
    B, _ = corner_levels(part)
    strips = [StripSpec(i, CircleArc(part.a(i), part.a(i + 1), "closed_closed"),
                        [Rect.between(g.p(i - 1), g.p(i), g.q(i), B[i - 1], "D", i)], float(B[i - 1]))
              for i in range(1, g.N + 1)]
    return RectangularDomain("D_only", strips)


def build_psi(part: Partition) -> RectangularDomain:
    om = build_omega_A(part)
    d = build_D(part)
    strips = [StripSpec(s.i, s.y_arc, s.pieces + t.pieces, s.B, s.C) for s, t in zip(om.strips, d.strips)]
    return RectangularDomain("psi_A", strips)


def build_alt_cover(part: Partition) -> list[Rect]:
    """The pieces [Q_{i+1}, Q_{i+2}] × [P_i, C_i] completing Ω_P̄ to Ψ_Ā."""
    _require_short(part)
    g = part.geom
    _, C = corner_levels(part)
    return [Rect.between(g.q(i + 1), g.q(i + 2), g.p(i), C[i - 1], "alt", i)
            for i in range(1, g.N + 1)]


def build_domain(part: Partition) -> RectangularDomain:
    """Ω_P̄ in Bowen-Series mode, Ω_Ā otherwise."""
    if part.mode == "bowen_series":
        return build_omega_P(part.geom)
    return build_omega_A(part)


# bijectivity ------------------------------------------------------------------

def _arc_union(arcs: list[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    """Union of (start, length) arcs as a sorted list of (start, length)."""
    if not arcs:
        return []
    if any(L >= TWO_PI - tol for _, L in arcs):
        return [(0.0, TWO_PI)]
    base = min(s for s, _ in arcs)
    items = sorted(((s - base) % TWO_PI, L) for s, L in arcs)
    merged = []
    for s, L in items:
        if merged and s <= merged[-1][0] + merged[-1][1] + tol:
            ms, ml = merged[-1]
            merged[-1] = (ms, max(ml, s + L - ms))
        else:
            merged.append((s, L))
    # join across the cut at base
    if len(merged) > 1 and merged[-1][0] + merged[-1][1] >= TWO_PI + merged[0][0] - tol:
        ls, ll = merged.pop()
        fs, fl = merged[0]
        merged[0] = (ls, max(ll, fs + fl + TWO_PI - ls))
    if len(merged) == 1 and merged[0][1] >= TWO_PI - tol:
        return [(0.0, TWO_PI)]
    return sorted(((s + base) % TWO_PI, L) for s, L in merged)


def _union_gap(u: list, v: list) -> float:
    """Max endpoint mismatch between two arc unions (inf if the counts differ)."""
    if len(u) != len(v):
        return float("inf")
    if u == [(0.0, TWO_PI)] or v == [(0.0, TWO_PI)]:
        return 0.0 if u == v else float("inf")
    us = sorted(u, key=lambda a: a[0])
    gaps = []
    for shift in range(len(v)):
        vs = sorted(v, key=lambda a: a[0])
        vs = vs[shift:] + vs[:shift]
        gaps.append(max(max(circ_dist(a[0], b[0]), circ_dist(a[0] + a[1], b[0] + b[1]))
                        for a, b in zip(us, vs)))
    return min(gaps)


@dataclass
class BijectivityReport:
    tol: float
    formula_residual: float = 0.0
    seam_residual: float = 0.0
    seam_location_failures: int = 0
    fiber_residual: float = 0.0
    nu_domain: float = 0.0
    nu_images: float = 0.0
    max_overlap: float = 0.0
    total_overlap: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def measure_gap(self) -> float:
        return abs(self.nu_images - self.nu_domain)

    @property
    def passed(self) -> bool:
        return (self.formula_residual < self.tol and self.seam_residual < self.tol
                and self.seam_location_failures == 0 and self.fiber_residual < self.tol
                and self.measure_gap < self.tol and self.max_overlap < self.tol)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "formula_residual": self.formula_residual,
            "seam_residual": self.seam_residual,
            "seam_location_failures": self.seam_location_failures,
            "fiber_residual": self.fiber_residual,
            "nu_domain": self.nu_domain,
            "nu_images": self.nu_images,
            "measure_gap": self.measure_gap,
            "max_overlap": self.max_overlap,
            "total_overlap": self.total_overlap,
        }


def domain_images(dom: RectangularDomain, geom: SurfaceGeometry) -> list[Rect]:
    return [r.image(geom.gen(s.i)) for s in dom.strips for r in s.pieces]


def _overlap_nu(r1: Rect, r2: Rect) -> float:
    xs = r1.x_arc.intersect(r2.x_arc)
    ys = r1.y_arc.intersect(r2.y_arc)
    tot = 0.0
    for xa in xs:
        for ya in ys:
            tot += nu_rect(xa.start, xa.start + xa.length, ya.start, ya.start + ya.length)
    return tot


def _check_formulas(part: Partition, rep: BijectivityReport):
    g = part.geom
    B, C = corner_levels(part)

    def b(i):
        return float(B[g.wrap(i) - 1])

    def c(i):
        return float(C[g.wrap(i) - 1])

    p, q, a = g.p, g.q, part.a
    res = 0.0
    seam = 0.0
    for i in range(1, g.N + 1):
        T = g.gen(i)
        s = g.sigma(i)
        got_expected = [
            # T_i(S̃_i) = [Q_σ, P_σ+1] × [B_σ+1, C_σ-1]
            (T(q(i + 2)), q(s)), (T(p(i - 1)), p(s + 1)), (T(a(i)), b(s + 1)), (T(a(i + 1)), c(s - 1)),
            # T_i(S^l_i) = [P_σ, Q_σ] × [B_σ+1, T_i C_i]
            (T(q(i + 1)), p(s)), (T(q(i + 2)), q(s)),
            # T_i(S^u_i) = [P_σ+1, Q_σ+1] × [T_i B_i, C_σ-1]
            (T(p(i - 1)), p(s + 1)), (T(p(i)), q(s + 1)),
        ]
        res = max(res, max(circ_dist(x, y) for x, y in got_expected))
        j = g.wrap(g.sigma(g.sigma(i - 1) - 1) - 1)
        k = g.sigma(g.sigma(i) - 1)
        tb, tc = T(b(i)), g.gen(j)(c(j))
        seam = max(seam, circ_dist(tb, tc), circ_dist(T(c(i)), g.gen(k)(b(k))))
        # T_i B_i ∈ [B_ρ(i)+1, C_θ(i)]
        lo, hi = b(g.rho(i) + 1), c(g.theta(i))
        if not CircleArc(lo, hi, "closed_closed").contains(tb) and min(circ_dist(tb, lo), circ_dist(tb, hi)) > rep.tol:
            rep.seam_location_failures += 1
    rep.formula_residual = res
    rep.seam_residual = seam


def verify_bijectivity(part: Partition, tol: float = 1e-9, dom: RectangularDomain | None = None) -> BijectivityReport:
    """Check that F maps the domain onto itself, piece by piece.

    Works for Ω_P̄ (Bowen-Series mode) and Ω_Ā; the closed image formulas
    and seam identities are only checked for Ω_Ā.  ``dom`` replaces the
    built domain (fault injection).
    """
    g = part.geom
    dom = build_domain(part) if dom is None else dom
    rects = dom.rects
    images = domain_images(dom, g)
    rep = BijectivityReport(tol)
    if dom.kind == "omega_A":
        _check_formulas(part, rep)

    # every image x-arc is bounded by P/Q points, so the fibre over the
    # midpoint of each elementary column decides the tiling
    cuts = np.sort(np.concatenate([g.P, g.Q]))
    mids = [(cuts[k] + ccw_offset(cuts[k], cuts[(k + 1) % len(cuts)]) / 2) % TWO_PI for k in range(len(cuts))]
    worst = 0.0
    for x in mids:
        u = _arc_union([(r.y0, r.yl) for r in rects if r.x_arc.contains(x)], tol)
        v = _arc_union([(r.y0, r.yl) for r in images if r.x_arc.contains(x)], tol)
        worst = max(worst, _union_gap(u, v))
    rep.fiber_residual = worst

    rep.nu_domain = float(sum(r.nu() for r in rects))
    rep.nu_images = float(sum(r.nu() for r in images))
    mx = tot = 0.0
    for a in range(len(images)):
        for b in range(a + 1, len(images)):
            ov = _overlap_nu(images[a], images[b])
            mx = max(mx, ov)
            tot += ov
    rep.max_overlap, rep.total_overlap = mx, tot
    return rep


# experiments ------------------------------------------------------------------

def worker_count() -> int:
    env = os.environ.get("BOUNDARY_LAB_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return min(cap, 8)


def sample_pairs(seed: int, chunk: int, n: int, delta_min: float) -> tuple[np.ndarray, np.ndarray]:
    """n uniform pairs with circular separation >= delta_min; deterministic per (seed, chunk)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, chunk]))
    xs, ys = [], []
    have = 0
    while have < n:
        x = rng.uniform(0.0, TWO_PI, n)
        y = rng.uniform(0.0, TWO_PI, n)
        keep = circ_dist(x, y) >= delta_min
        xs.append(x[keep])
        ys.append(y[keep])
        have += int(keep.sum())
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def exceptional_distance(geom: SurfaceGeometry, x, y) -> np.ndarray:
    """Distance (max-norm) to ∪ [P_{i-1}, P_i] × {Q_i}."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    best = np.full(x.shape, np.inf)
    for i in range(1, geom.N + 1):
        lo, L = geom.p(i - 1), ccw_offset(geom.p(i - 1), geom.p(i))
        off = np.mod(x - lo, TWO_PI)
        dx = np.where(off <= L, 0.0, np.minimum(off - L, TWO_PI - off))
        best = np.minimum(best, np.maximum(dx, circ_dist(y, geom.q(i))))
    return best


def _chunks(n_samples: int) -> list[tuple[int, int]]:
    return [(c, min(CHUNK, n_samples - c * CHUNK)) for c in range((n_samples + CHUNK - 1) // CHUNK)]


def _run_chunk(part, target, seed, chunk, n, max_steps, post_steps, delta_min, probe=None):
    x, y = sample_pairs(seed, chunk, n, delta_min)
    entry = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    for step in range(max_steps + 1):
        inside = target.contains_array(x[active], y[active])
        entry[active[inside]] = step
        active = active[~inside]
        if active.size == 0 or step == max_steps:
            break
        x[active], y[active], _ = F_array(part, x[active], y[active])
    out = {"entry": entry, "final_x": x[active], "final_y": y[active]}
    if post_steps:
        done = entry >= 0
        px, py = x[done], y[done]
        viol = np.zeros(px.shape, dtype=bool)
        for _ in range(post_steps):
            px, py, _ = F_array(part, px, py)
            viol |= ~target.contains_array(px, py)
        out["violations"] = int(viol.sum())
    return out


def _histogram(entry: np.ndarray) -> list[int]:
    e = entry[entry >= 0]
    return np.bincount(e).tolist() if e.size else []


def _run(part, target, n_samples, max_steps, seed, post_steps, delta_min):
    jobs = _chunks(n_samples)

    def go(job):
        c, n = job
        return _run_chunk(part, target, seed, c, n, max_steps, post_steps, delta_min)

    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(go, jobs))
    else:
        results = [go(j) for j in jobs]
    entry = np.concatenate([r["entry"] for r in results])
    fx = np.concatenate([r["final_x"] for r in results])
    fy = np.concatenate([r["final_y"] for r in results])
    viol = sum(r.get("violations", 0) for r in results)
    return entry, fx, fy, viol


def trapping_experiment(part: Partition, n_samples: int, max_steps: int, seed: int,
                        delta_min: float = 1e-3, post_steps: int = 100) -> dict:
    """Entry times into Ψ_Ā (Ω_P̄ in Bowen-Series mode) and forward invariance after entry."""
    target = build_domain(part) if part.mode == "bowen_series" else build_psi(part)
    entry, _, _, viol = _run(part, target, n_samples, max_steps, seed, post_steps, delta_min)
    entered = int((entry >= 0).sum())
    return {
        "target": target.kind,
        "samples": n_samples,
        "entered": entered,
        "entered_fraction": entered / n_samples,
        "max_entry_time": int(entry.max()) if entered else -1,
        "histogram": _histogram(entry),
        "violations": int(viol),
    }


def residual_widths(part: Partition, n_iter: int) -> np.ndarray:
    """Widths of the x-sides [P_{k-1}, S^(n)_{k-1}] of F^n(D) \\ Ω_Ā, n = 1..n_iter.

    Row n-1 holds strip k's width.  S^(1)_{k-1} = Q_{k-1}, and the right end
    is carried by S^(n+1)_{ρ(j)} = T_j S^(n)_{j-1}.
    """
    g = part.geom
    N = g.N
    S = np.array([g.q(k - 1) for k in range(1, N + 1)])  # indexed by k
    out = np.empty((n_iter, N))
    for n in range(n_iter):
        out[n] = [ccw_offset(g.p(k - 1), S[k - 1]) for k in range(1, N + 1)]
        nxt = np.empty(N)
        for j in range(1, N + 1):
            k = g.wrap(g.rho(j) + 1)
            nxt[k - 1] = g.gen(j)(S[j - 1])
        S = nxt
    return out


def halving_ratios(part: Partition, n_iter: int) -> np.ndarray:
    """w_{n+1}(ρ(j)+1) / w_n(j), n = 1..n_iter, following each strip's chain."""
    g = part.geom
    w = residual_widths(part, n_iter + 1)
    out = np.empty((n_iter, g.N))
    for n in range(n_iter):
        for j in range(1, g.N + 1):
            k = g.wrap(g.rho(j) + 1)
            out[n, j - 1] = w[n + 1, k - 1] / w[n, j - 1]
    return out


def attraction_experiment(part: Partition, n_samples: int, max_steps: int, seed: int,
                          delta_min: float = 1e-3, n_symbolic: int = 10, tol: float = 1e-9) -> dict:
    """Entry times into Ω plus the symbolic shrinking of F^n(D) \\ Ω."""
    target = build_domain(part)
    entry, fx, fy, _ = _run(part, target, n_samples, max_steps, seed, 0, delta_min)
    entered = int((entry >= 0).sum())
    dist = exceptional_distance(part.geom, fx, fy)
    out = {
        "target": target.kind,
        "samples": n_samples,
        "entered": entered,
        "entered_fraction": entered / n_samples,
        "max_entry_time": int(entry.max()) if entered else -1,
        "histogram": _histogram(entry),
        "non_entrants": int(n_samples - entered),
        "max_exceptional_distance": float(dist.max()) if dist.size else 0.0,
    }
    if target.kind == "omega_A":
        w = residual_widths(part, n_symbolic)
        ratios = halving_ratios(part, n_symbolic - 1)
        bound_ok = all(
            bool(np.all(w[n] <= w[0][_chain_start(part, n)] * 2.0 ** (-n) * (1 + tol)))
            for n in range(n_symbolic)
        )
        out["residual_widths_max"] = w.max(axis=1).tolist()
        out["halving_ratio_max"] = ratios.max(axis=1).tolist()
        out["halving_bound_holds"] = bound_ok
    return out


def _chain_start(part: Partition, n: int) -> np.ndarray:
    """For each strip k, the strip whose residual becomes k's after n steps."""
    g = part.geom
    pred = {g.wrap(g.rho(j) + 1): j for j in range(1, g.N + 1)}
    idx = []
    for k in range(1, g.N + 1):
        j = k
        for _ in range(n):
            j = pred[j]
        idx.append(j - 1)
    return np.array(idx)


def exceptional_orbit(part: Partition, n_iter: int, s: float = 0.5, k: int = 1) -> dict:
    """Follow a point of the horizontal segment [P_{k-1}, P_k] × {Q_k}.

    y is carried symbolically: Q_k lies in [A_k, A_{k+1}) and T_k Q_k = Q_{ρ(k)+1}.
    Floating-point iteration of y would drift off the Q-cycle, which repels
    in the y direction.  x is iterated numerically and checked against the
    residual rectangles [P_{k-1}, S^(n)_{k-1}] × [Q_k, B_k] and against Ω_Ā.
    """
    g = part.geom
    om = build_omega_A(part)
    B, _ = corner_levels(part)
    w = residual_widths(part, n_iter + 1)
    x = (g.p(k - 1) + s * ccw_offset(g.p(k - 1), g.p(k))) % TWO_PI
    k = g.wrap(k)
    in_res, in_om = [], []
    for n in range(n_iter + 1):
        y = g.q(k)
        # signed, since x converges to the corner P_{k-1} and may round below it
        off = (x - g.p(k - 1) + np.pi) % TWO_PI - np.pi
        # step n = 0 sits in D itself, whose x-side is the full [P_{k-1}, P_k]
        width = ccw_offset(g.p(k - 1), g.p(k)) if n == 0 else w[n - 1, k - 1]
        in_res.append(bool(-SLACK <= off <= width + SLACK and _in_halfopen(y, g.q(k), B[k - 1])))
        # the corner itself is on the boundary of Ω_Ā; only count clear entries
        in_om.append(bool(off > SLACK and om.contains(x, y, slack=0.0)))
        if n < n_iter:
            assert part.index_array(np.array([y]))[0] == k
            x = g.gen(k)(x)
            k = g.wrap(g.rho(k) + 1)
    return {"in_residual": all(in_res), "ever_in_omega": any(in_om[1:]), "final_x": x, "final_label": k}
