"""Angles, arcs and disk-preserving Möbius maps on the unit circle.

Points of the circle are plain floats (radians, canonical range [0, 2π)).
Arcs are always read counterclockwise from ``start`` to ``end``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    OrientationError,
    SingularityError,
)

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-9
_EPS = 2.220446049250313e-16

EDGE_POLICIES = ("closed_open", "closed_closed", "open_open", "open_closed")


def normalize_angle(theta: float) -> float:
    """Representative of ``theta`` in [0, 2π)."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"angle must be finite, got {theta!r}")
    r = theta % TWO_PI
    # x % 2π can round up to exactly 2π for tiny negative x
    return 0.0 if r >= TWO_PI else r


def normalize_array(theta) -> np.ndarray:
    r = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


def ccw_offset(a: float, b: float) -> float:
    """Counterclockwise angular distance travelled from ``a`` to ``b``, in [0, 2π)."""
    return normalize_angle(b - a)


def circ_dist(a, b):
    """Shortest angular distance; works elementwise on arrays."""
    d = np.mod(np.asarray(b, dtype=float) - a, TWO_PI)
    d = np.minimum(d, TWO_PI - d)
    return float(d) if np.ndim(d) == 0 else d


def angles_close(a: float, b: float, tol: float = DEFAULT_TOL) -> bool:
    return circ_dist(a, b) < tol


@dataclass(frozen=True)
class CircleArc:
    """Counterclockwise arc from ``start`` to ``end``.

    ``start == end`` is only legal with ``closed_closed`` and then means the
    whole circle.
    """

    start: float
    end: float
    edge: str = "closed_open"

    def __post_init__(self):
        if self.edge not in EDGE_POLICIES:
            raise DomainError(f"unknown edge policy {self.edge!r}")
        object.__setattr__(self, "start", normalize_angle(self.start))
        object.__setattr__(self, "end", normalize_angle(self.end))
        if self.start == self.end and self.edge != "closed_closed":
            raise DegenerateInputError("zero-length arc; use closed_closed for the full circle")

    @classmethod
    def from_length(cls, start: float, length: float, edge: str = "closed_closed") -> "CircleArc":
        if not 0.0 < length <= TWO_PI:
            raise DomainError(f"arc length must lie in (0, 2π], got {length}")
        if length >= TWO_PI:
            return cls.full(start)
        return cls(start, start + length, edge)

    @classmethod
    def full(cls, start: float = 0.0) -> "CircleArc":
        return cls(start, start, "closed_closed")

    @property
    def closed_start(self) -> bool:
        return self.edge in ("closed_open", "closed_closed")

    @property
    def closed_end(self) -> bool:
        return self.edge in ("open_closed", "closed_closed")

    @property
    def is_full(self) -> bool:
        return self.start == self.end

    @property
    def length(self) -> float:
        if self.is_full:
            return TWO_PI
        return ccw_offset(self.start, self.end)

    def contains(self, p: float) -> bool:
        if self.is_full:
            return True
        d = ccw_offset(self.start, p)
        if d == 0.0:
            return self.closed_start
        L = self.length
        if d == L:
            return self.closed_end
        return d < L

    def midpoint(self) -> float:
        return normalize_angle(self.start + 0.5 * self.length)

    def point_at(self, s: float) -> float:
        """Point at counterclockwise distance ``s`` from ``start``."""
        return normalize_angle(self.start + s)

    def with_edge(self, edge: str) -> "CircleArc":
        return CircleArc(self.start, self.end, edge)

    def intersect(self, other: "CircleArc") -> list["CircleArc"]:
        """Intersection as at most two arcs (zero-length pieces dropped)."""
        if self.is_full:
            return [other]
        if other.is_full:
            return [self]
        Lx, Ly = self.length, other.length
        d = ccw_offset(self.start, other.start)
        pieces = []
        for shift in (d, d - TWO_PI):
            lo_y, hi_y = shift, shift + Ly
            lo, hi = max(0.0, lo_y), min(Lx, hi_y)
            if hi <= lo:
                continue
            if lo_y > 0.0:
                c_lo = other.closed_start
            elif lo_y < 0.0:
                c_lo = self.closed_start
            else:
                c_lo = self.closed_start and other.closed_start
            if hi_y < Lx:
                c_hi = other.closed_end
            elif hi_y > Lx:
                c_hi = self.closed_end
            else:
                c_hi = self.closed_end and other.closed_end
            edge = {(True, False): "closed_open", (True, True): "closed_closed",
                    (False, False): "open_open", (False, True): "open_closed"}[(c_lo, c_hi)]
            start = self.start + lo
            end = self.start + hi
            if normalize_angle(start) == normalize_angle(end):
                continue
            pieces.append(CircleArc(start, end, edge))
        return pieces


def arc_contains_array(start, length, theta, slack: float = 0.0) -> np.ndarray:
    """Vectorised closed-arc membership with an absolute ``slack``."""
    d = np.mod(np.asarray(theta) - start + slack, TWO_PI)
    return d <= np.asarray(length) + 2.0 * slack


@dataclass(frozen=True)
class MobiusMap:
    """z ↦ (alpha z + beta) / (conj(beta) z + conj(alpha)), |alpha|² − |beta|² = 1."""

    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0j

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        aa, bb = abs(a) ** 2, abs(b) ** 2
        n = aa - bb
        if not n > 0.0:
            raise DegenerateInputError("|alpha|^2 - |beta|^2 must be positive")
        # For strongly hyperbolic maps n is computed with absolute error
        # ~ eps*|alpha|^2; rescaling by that rounded value would only inject
        # noise, so already-normalized input is kept as is.
        if abs(n - 1.0) > 64.0 * _EPS * (aa + bb):
            s = 1.0 / math.sqrt(n)
            a, b = a * s, b * s
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, psi: float) -> "MobiusMap":
        return cls(cmath.exp(0.5j * psi), 0.0)

    @classmethod
    def from_matrix(cls, m, tol: float = 1e-10) -> "MobiusMap":
        """Project a complex 2x2 matrix onto SU(1,1) normal form."""
        m = np.asarray(m, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) == 0.0:
            raise DegenerateInputError("singular matrix")
        m = m / cmath.sqrt(det)
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        scale = max(abs(a), abs(b), 1.0)
        residual = max(abs(a - d.conjugate()), abs(b - c.conjugate())) / scale
        if residual > tol:
            raise OrientationError(f"matrix is not disk-preserving (residual {residual:.3g})")
        return cls(0.5 * (a + d.conjugate()), 0.5 * (b + c.conjugate()))

    @classmethod
    def from_three_points(cls, xs: Sequence[float], ys: Sequence[float]) -> "MobiusMap":
        """The unique disk automorphism sending ``xs[k]`` to ``ys[k]``."""
        xs = [normalize_angle(x) for x in xs]
        ys = [normalize_angle(y) for y in ys]
        for pts in (xs, ys):
            if min(circ_dist(pts[0], pts[1]), circ_dist(pts[1], pts[2]), circ_dist(pts[0], pts[2])) < 1e-12:
                raise DegenerateInputError("three-point data must be pairwise distinct")
        if _is_ccw(*xs) != _is_ccw(*ys):
            raise OrientationError("point triples have opposite circular orientation")
        zx = [cmath.exp(1j * x) for x in xs]
        zy = [cmath.exp(1j * y) for y in ys]
        m = np.linalg.solve(_to_zero_one_inf(*zy), _to_zero_one_inf(*zx))
        return cls.from_matrix(m)

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.alpha, self.beta
        return np.array([[a, b], [b.conjugate(), a.conjugate()]])

    def _denominator(self, z):
        return self.beta.conjugate() * z + self.alpha.conjugate()

    def __call__(self, theta):
        """Image of a boundary angle (scalar or array), normalised."""
        if isinstance(theta, np.ndarray):
            z = np.exp(1j * theta)
            w = (self.alpha * z + self.beta) / self._denominator(z)
            return normalize_array(np.angle(w))
        z = cmath.exp(1j * theta)
        den = self._denominator(z)
        if abs(den) < 1e-300:
            raise SingularityError("vanishing denominator")
        return normalize_angle(cmath.phase((self.alpha * z + self.beta) / den))

    def image_modulus(self, theta: float) -> float:
        """|image| of e^{iθ} before re-projection onto the circle."""
        z = cmath.exp(1j * theta)
        return abs((self.alpha * z + self.beta) / self._denominator(z))

    def apply_point(self, z: complex) -> complex:
        """Action on a point of the closed disk."""
        return (self.alpha * z + self.beta) / self._denominator(z)

    def derivative(self, theta):
        """|d/dθ| of the induced circle map."""
        z = np.exp(1j * np.asarray(theta, dtype=float))
        d = 1.0 / np.abs(self._denominator(z)) ** 2
        return float(d) if np.ndim(d) == 0 else d

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self ∘ other."""
        a1, b1, a2, b2 = self.alpha, self.beta, other.alpha, other.beta
        return MobiusMap(a1 * a2 + b1 * b2.conjugate(), a1 * b2 + b1 * a2.conjugate())

    __matmul__ = compose

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.alpha.conjugate(), -self.beta)

    def distance(self, other: "MobiusMap") -> float:
        """Coefficient distance modulo the sign ambiguity of SU(1,1)."""
        return min(
            max(abs(self.alpha - s * other.alpha), abs(self.beta - s * other.beta))
            for s in (1.0, -1.0)
        )

    def is_close(self, other: "MobiusMap", tol: float = DEFAULT_TOL) -> bool:
        return self.distance(other) < tol

    def image_arc(self, arc: CircleArc) -> CircleArc:
        """Image of an arc; orientation preservation makes it the arc between the end images."""
        if arc.is_full:
            return arc
        return CircleArc(self(arc.start), self(arc.end), arc.edge)


def _is_ccw(a: float, b: float, c: float) -> bool:
    return ccw_offset(a, b) < ccw_offset(a, c)


def _to_zero_one_inf(z1: complex, z2: complex, z3: complex) -> np.ndarray:
    # cross-ratio map z1, z2, z3 -> 0, 1, inf
    return np.array([[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]], dtype=complex)
