"""The regular right-angled (8g-4)-gon and its side-pairing generators.

Labels are 1-based and every index helper wraps modulo N, so expressions
such as ``sigma(i - 1)`` with ``i = 1`` mean ``sigma(N)``.

Coordinates: the isometric circle of side i is centred at d·e^{2ti·√-1},
t = π/N, meets the unit circle at P_i = 2ti − φ and Q_{i+1} = 2ti + φ, and
vertex V_{i+1} sits at radius v in direction (2i+1)t.  With cos ψ = 1/d for
the half-aperture ψ of an orthogonal circle and d = 1/cos φ one gets ψ = φ.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .circle import CircleArc, MobiusMap, ccw_offset, circ_dist, normalize_angle
from .errors import ConstructionError, DomainError

MAX_GENUS = 64


def wrap(i: int, n: int) -> int:
    """Representative of i modulo n in 1..n."""
    return (i - 1) % n + 1


@dataclass(frozen=True)
class SidePairing:
    g: int
    N: int
    _sigma: tuple = field(repr=False)

    def sigma(self, i: int) -> int:
        return self._sigma[wrap(i, self.N) - 1]

    def rho(self, i: int) -> int:
        return wrap(self.sigma(i) + 1, self.N)

    def theta(self, i: int) -> int:
        return wrap(self.sigma(i) - 1, self.N)

    def psi(self, n: int, i: int) -> int:
        """(θ∘ρ)^n applied to i, by iteration."""
        for _ in range(n):
            i = self.theta(self.rho(i))
        return wrap(i, self.N)

    def wrap(self, i: int) -> int:
        return wrap(i, self.N)

    def table(self, name: str) -> list[int]:
        fn = getattr(self, name)
        return [fn(i) for i in range(1, self.N + 1)]


def pairing_build(g: int) -> SidePairing:
    if int(g) != g or g < 2:
        raise DomainError(f"genus must be an integer >= 2, got {g!r}")
    g = int(g)
    N = 8 * g - 4
    sig = tuple(wrap(4 * g - i if i % 2 else 2 - i, N) for i in range(1, N + 1))
    return SidePairing(g, N, sig)


def pairing_identity_failures(p: SidePairing) -> list[str]:
    """Integer identities the pairing must satisfy; returns the violations."""
    N, g = p.N, p.g
    bad = []
    for i in range(1, N + 1):
        if p.sigma(p.sigma(i)) != i:
            bad.append(f"sigma involution fails at {i}")
        if p.theta(p.theta(i - 1) - 1) != i:
            bad.append(f"theta(theta(i-1)-1) != i at {i}")
        if wrap(p.rho(p.rho(i) + 1) + 1, N) != i:
            bad.append(f"rho(rho(i)+1)+1 != i at {i}")
        if p.theta(p.rho(i)) != wrap(4 * g - 4 + i, N):
            bad.append(f"theta(rho(i)) != 4g-4+i at {i}")
    return bad


@dataclass(frozen=True, eq=False)
class SurfaceGeometry:
    g: int
    N: int
    t: float
    phi: float
    d: float
    R_euc: float
    v: float
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    T: tuple = field(repr=False)
    pairing: SidePairing = field(repr=False)
    # (radius, angle) pairs as built or loaded; the export format
    V_polar: tuple = field(default=(), repr=False)

    def p(self, i: int) -> float:
        return float(self.P[wrap(i, self.N) - 1])

    def q(self, i: int) -> float:
        return float(self.Q[wrap(i, self.N) - 1])

    def vertex(self, i: int) -> complex:
        return complex(self.V[wrap(i, self.N) - 1])

    def gen(self, i: int) -> MobiusMap:
        return self.T[wrap(i, self.N) - 1]

    def sigma(self, i: int) -> int:
        return self.pairing.sigma(i)

    def rho(self, i: int) -> int:
        return self.pairing.rho(i)

    def theta(self, i: int) -> int:
        return self.pairing.theta(i)

    def wrap(self, i: int) -> int:
        return wrap(i, self.N)

    def window(self, i: int) -> CircleArc:
        """The arc [P_i, Q_i] where the jump A_i may sit."""
        return CircleArc(self.p(i), self.q(i), "closed_closed")

    def isometric_arc(self, i: int) -> CircleArc:
        """Boundary arc [P_i, Q_{i+1}] cut out by the isometric circle of T_i."""
        return CircleArc(self.p(i), self.q(i + 1), "closed_closed")

    def endpoint_images(self, i: int) -> list[tuple[float, float]]:
        """(source, expected image) pairs for T_i on six boundary points."""
        s = self.sigma(i)
        src = [self.p(i - 1), self.p(i), self.q(i), self.p(i + 1), self.q(i + 1), self.q(i + 2)]
        dst = [self.p(s + 1), self.q(s + 1), self.q(s + 2), self.p(s - 1), self.p(s), self.q(s)]
        return list(zip(src, dst))

    def with_generators(self, T) -> "SurfaceGeometry":
        """Copy with replaced generators (no validation); used to inject faults."""
        return SurfaceGeometry(self.g, self.N, self.t, self.phi, self.d, self.R_euc,
                               self.v, self.P, self.Q, self.V, tuple(T), self.pairing, self.V_polar)


def closed_form_constants(g: int) -> dict[str, float]:
    N = 8 * g - 4
    t = math.pi / N
    return {
        "t": t,
        "phi": math.asin(math.sqrt(2.0) * math.sin(t)),
        "d": 1.0 / math.sqrt(math.cos(2 * t)),
        "R_euc": math.sqrt(2.0) * math.sin(t) / math.sqrt(math.cos(2 * t)),
        "v": math.sqrt((math.cos(t) - math.sin(t)) / (math.cos(t) + math.sin(t))),
    }


def closed_form_generator(g: int, i: int) -> MobiusMap:
    """T_i from its isometric circle and that of its inverse.

    T_i has isometric circle centred at d·e^{2ti}, radius R = 1/|beta|, and
    T_i^{-1} = T_σ(i) has its own centred at d·e^{2tσ(i)}.  Writing
    alpha = (d/R)e^{ia}, beta = e^{ib}/R these give a + b = 2tσ(i) and
    b − a = 2ti − π.
    """
    c = closed_form_constants(g)
    t, d, R = c["t"], c["d"], c["R_euc"]
    s = pairing_build(g).sigma(i)
    b = t * (s + i) - 0.5 * math.pi
    a = 2 * t * s - b
    return MobiusMap(d / R * cmath.exp(1j * a), cmath.exp(1j * b) / R)


def three_point_generator(geom: "SurfaceGeometry", i: int) -> MobiusMap:
    """T_i from P_i ↦ Q_σ(i)+1, Q_{i+1} ↦ P_σ(i), Q_i ↦ Q_σ(i)+2."""
    s = geom.sigma(i)
    return MobiusMap.from_three_points(
        (geom.p(i), geom.q(i + 1), geom.q(i)), (geom.q(s + 1), geom.p(s), geom.q(s + 2)))


def build_geometry(g: int, tol: float = 1e-10) -> SurfaceGeometry:
    """Construct the fundamental polygon and generators, then self-check.

    Generators come from the closed form; the three-point correspondence is
    recomputed as an independent cross-check.  The cross-ratio solve loses
    accuracy like |alpha|^2 (all three anchors sit on one short arc), so the
    agreement is measured relative to |alpha|.
    """
    pairing = pairing_build(g)
    if g > MAX_GENUS:
        raise DomainError(f"genus above the supported cap {MAX_GENUS}")
    N = pairing.N
    c = closed_form_constants(g)
    t, phi = c["t"], c["phi"]
    idx = np.arange(1, N + 1)
    P = np.array([normalize_angle(2 * t * i - phi) for i in idx])
    Q = np.array([normalize_angle(2 * t * (i - 1) + phi) for i in idx])
    V_polar = tuple((c["v"], normalize_angle(t * (2 * i - 1))) for i in idx)
    V = np.array([r * cmath.exp(1j * a) for r, a in V_polar])
    T = tuple(closed_form_generator(g, int(i)) for i in idx)
    geom = SurfaceGeometry(g, N, t, phi, c["d"], c["R_euc"], c["v"], P, Q, V, T, pairing, V_polar)

    for i in idx:
        Ti = geom.gen(i)
        if three_point_generator(geom, int(i)).distance(Ti) > tol * abs(Ti.alpha):
            raise ConstructionError(f"three-point and closed-form T_{i} disagree")
    checks = [verify_group_relations(geom, tol), verify_endpoint_mapping(geom, tol)]
    failed = [r for r in checks if not r.passed]
    if failed:
        raise ConstructionError("; ".join(f"{r.name}: residual {r.max_residual:.3g}" for r in failed))
    return geom


@dataclass
class VerificationReport:
    name: str
    tol: float
    residuals: dict = field(default_factory=dict)
    absolute: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol

    def failures(self) -> dict:
        return {k: r for k, r in self.residuals.items() if not r < self.tol}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "max_absolute": max(self.absolute.values(), default=0.0),
            "failures": {str(k): v for k, v in self.failures().items()},
        }


def mp_matrix(M: MobiusMap) -> mpmath.matrix:
    a = mpmath.mpc(M.alpha.real, M.alpha.imag)
    b = mpmath.mpc(M.beta.real, M.beta.imag)
    return mpmath.matrix([[a, b], [mpmath.conj(b), mpmath.conj(a)]])


def _mp_identity_distance(m: mpmath.matrix) -> float:
    # determinant is 1 up to the stored rounding, so the sign is fixed by trace
    s = 1 if mpmath.re(m[0, 0]) >= 0 else -1
    return float(max(abs(m[0, 0] - s), abs(m[0, 1]), abs(m[1, 0]), abs(m[1, 1] - s)))


def verify_group_relations(geom: SurfaceGeometry, tol: float = 1e-9) -> VerificationReport:
    """Residuals of T_σ(i)T_i = Id, the four-term relation and T_i(V_i) = V_ρ(i).

    Words are multiplied in 30-digit arithmetic on the stored coefficients, so
    only the defect of the generators themselves is measured.  That defect has
    a floor of about eps·|alpha|^3 (rounding exact generators to binary64
    already leaves ~1e-9 at g = 50), so word residuals are taken relative to
    the largest coefficient modulus among the factors.  Absolute values are
    kept in ``absolute``.
    """
    rep = VerificationReport("group_relations", tol)
    with mpmath.workdps(30):
        mats = [mp_matrix(M) for M in geom.T]

        def m(i):
            return mats[geom.wrap(i) - 1]

        def scale(*idx):
            return max(1.0, *(abs(geom.gen(k).alpha) for k in idx))

        for i in range(1, geom.N + 1):
            s = geom.sigma(i)
            r = _mp_identity_distance(m(s) * m(i))
            rep.absolute[("inverse", i)] = r
            rep.residuals[("inverse", i)] = r / scale(s, i)
            r1 = geom.rho(i)
            r2 = geom.rho(r1)
            r3 = geom.rho(r2)
            r = _mp_identity_distance(m(r3) * m(r2) * m(r1) * m(i))
            rep.absolute[("four_term", i)] = r
            rep.residuals[("four_term", i)] = r / scale(r3, r2, r1, i)
            rep.residuals[("vertex", i)] = abs(geom.gen(i).apply_point(geom.vertex(i))
                                               - geom.vertex(geom.rho(i)))
    return rep


def verify_endpoint_mapping(geom: SurfaceGeometry, tol: float = 1e-9) -> VerificationReport:
    rep = VerificationReport("endpoint_mapping", tol)
    for i in range(1, geom.N + 1):
        Ti = geom.gen(i)
        for k, (src, dst) in enumerate(geom.endpoint_images(i)):
            rep.residuals[(i, k)] = circ_dist(Ti(src), dst)
    return rep


@dataclass(frozen=True)
class PolygonAngles:
    t: float
    phi: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    omega: float
    y: float
    v: float
    R: float

    @property
    def omega_alt(self) -> float:
        """Angle-sum form of omega, computed without the simplification."""
        return 2 * math.pi - self.gamma - self.delta - (math.pi / 2 - self.alpha)


def polygon_angles(g: int) -> PolygonAngles:
    """Triangle quantities behind the π/4 vertex-angle bound."""
    if g < 2:
        raise DomainError("genus must be >= 2")
    c = closed_form_constants(g)
    t, phi, v, R = c["t"], c["phi"], c["v"], c["R_euc"]
    apex = 3 * t - phi
    y = math.sqrt(1 + v * v - 2 * v * math.cos(apex))
    alpha = math.atan2(v * math.sin(apex) / y, (1 + y * y - v * v) / (2 * y))
    beta = math.asin(v * math.sin(t) / R)
    gamma = math.pi - apex - alpha
    delta = math.pi - t - beta
    omega = 3 * t - phi + 2 * alpha - math.pi / 4
    return PolygonAngles(t, phi, alpha, beta, gamma, delta, omega, y, v, R)


def _signed(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def _bisect_preimage(T: MobiusMap, arc: CircleArc, target: float, ref: float,
                     xtol: float = 1e-15) -> float:
    """Solve T(x) = target for x on ``arc`` where T is increasing; ``ref`` anchors the unwrap."""
    goal = _signed(target - ref)

    def h(s):
        return _signed(T(arc.point_at(s)) - ref) - goal

    lo, hi = 0.0, arc.length
    if not (h(lo) < 0.0 < h(hi)):
        raise ConstructionError("root not bracketed")
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return arc.point_at(0.5 * (lo + hi))


def critical_points(geom: SurfaceGeometry) -> tuple[np.ndarray, np.ndarray]:
    """a_j with T_j(a_j) = P_{ρ(j)+1} and b_j with T_{j-1}(b_j) = Q_{θ(j-1)}."""
    N = geom.N
    a = np.empty(N)
    b = np.empty(N)
    for j in range(1, N + 1):
        win = geom.window(j)
        # T_j maps [P_j, Q_j] onto [Q_ρ(j), Q_ρ(j)+1]
        a[j - 1] = _bisect_preimage(geom.gen(j), win, geom.p(geom.rho(j) + 1), geom.q(geom.rho(j)))
        # T_{j-1} maps [P_j, Q_j] onto [P_θ(j-1), P_θ(j-1)+1]
        b[j - 1] = _bisect_preimage(geom.gen(j - 1), win, geom.q(geom.theta(j - 1)),
                                    geom.p(geom.theta(j - 1)))
    return a, b


@dataclass
class ContractionReport:
    ratios_forward: np.ndarray
    ratios_backward: np.ndarray

    @property
    def max_ratio(self) -> float:
        return float(max(self.ratios_forward.max(), self.ratios_backward.max()))

    @property
    def passed(self) -> bool:
        return self.max_ratio < 0.5

    def to_dict(self) -> dict:
        return {"name": "contraction", "passed": self.passed, "max_ratio": self.max_ratio}


def verify_contraction(geom: SurfaceGeometry) -> ContractionReport:
    """Length ratios of T_k[P_{k+2},Q_{k+2}] and T_k[P_{k-1},Q_{k-1}] to their target windows."""
    fwd, bwd = [], []
    for k in range(1, geom.N + 1):
        Tk = geom.gen(k)
        s = geom.sigma(k)
        fwd.append(Tk.image_arc(geom.window(k + 2)).length / geom.window(s).length)
        bwd.append(Tk.image_arc(geom.window(k - 1)).length / geom.window(s + 1).length)
    return ContractionReport(np.array(fwd), np.array(bwd))


def verify_critical_points(geom: SurfaceGeometry, tol: float = 1e-10) -> VerificationReport:
    """Image equations for a_j, b_j plus a_j ∈ (M_j, Q_j), b_j ∈ (P_j, M_j).

    A violated position bound is recorded as residual inf.
    """
    rep = VerificationReport("critical_points", tol)
    a, b = critical_points(geom)
    for j in range(1, geom.N + 1):
        win = geom.window(j)
        half = 0.5 * win.length
        da = ccw_offset(geom.p(j), a[j - 1])
        db = ccw_offset(geom.p(j), b[j - 1])
        rep.residuals[("a_image", j)] = circ_dist(geom.gen(j)(a[j - 1]), geom.p(geom.rho(j) + 1))
        rep.residuals[("b_image", j)] = circ_dist(geom.gen(j - 1)(b[j - 1]), geom.q(geom.theta(j - 1)))
        rep.residuals[("a_position", j)] = 0.0 if half < da < win.length else math.inf
        rep.residuals[("b_position", j)] = 0.0 if 0.0 < db < half else math.inf
    return rep
