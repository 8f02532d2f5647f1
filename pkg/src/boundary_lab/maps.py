"""The boundary map f_Ā, its natural extension F_Ā and interval preimages.

f_Ā applies T_i on the half-open arc [A_i, A_{i+1}).  F_Ā acts on pairs
(x, y) of distinct boundary points by the generator selected by y.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .circle import (
    TWO_PI,
    CircleArc,
    MobiusMap,
    ccw_offset,
    circ_dist,
    normalize_angle,
    normalize_array,
)
from .errors import DiagonalError, DomainError
from .geometry import SurfaceGeometry

MODES = ("general", "bowen_series", "dual", "midpoint", "explicit")
DIAGONAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    geom: SurfaceGeometry = field(repr=False)
    A: np.ndarray = field(repr=False)
    mode: str = "general"

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown partition mode {self.mode!r}")
        A = normalize_array(np.asarray(self.A, dtype=float).copy())
        if A.shape != (self.geom.N,):
            raise DomainError(f"expected {self.geom.N} partition points, got {A.shape}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if self.mode in ("general", "midpoint", "explicit"):
            bad = [i for i in range(1, self.geom.N + 1) if not self._strictly_inside(i)]
            if bad:
                raise DomainError(f"A_i outside the open window (P_i, Q_i) for i = {bad}")
        # offsets from A_1 are increasing; interval lookup is a binary search on them
        off = np.mod(A - A[0], TWO_PI)
        off[0] = 0.0
        if np.any(np.diff(off) <= 0.0):
            raise DomainError("partition points are not in counterclockwise order")
        object.__setattr__(self, "_offsets", off)
        object.__setattr__(self, "_alpha", np.array([M.alpha for M in self.geom.T]))
        object.__setattr__(self, "_beta", np.array([M.beta for M in self.geom.T]))

    def _strictly_inside(self, i: int) -> bool:
        d = ccw_offset(self.geom.p(i), self.A[i - 1])
        return 0.0 < d < self.geom.window(i).length

    # constructors
    @classmethod
    def bowen_series(cls, geom: SurfaceGeometry) -> "Partition":
        return cls(geom, geom.P, "bowen_series")

    @classmethod
    def dual(cls, geom: SurfaceGeometry) -> "Partition":
        return cls(geom, geom.Q, "dual")

    @classmethod
    def midpoint(cls, geom: SurfaceGeometry) -> "Partition":
        A = [geom.window(i).midpoint() for i in range(1, geom.N + 1)]
        return cls(geom, np.array(A), "midpoint")

    @classmethod
    def general(cls, geom: SurfaceGeometry, A) -> "Partition":
        return cls(geom, np.asarray(A, dtype=float), "general")

    @classmethod
    def explicit(cls, geom: SurfaceGeometry, A) -> "Partition":
        return cls(geom, np.asarray(A, dtype=float), "explicit")

    @property
    def N(self) -> int:
        return self.geom.N

    def a(self, i: int) -> float:
        return float(self.A[self.geom.wrap(i) - 1])

    def branch_arc(self, i: int) -> CircleArc:
        return CircleArc(self.a(i), self.a(i + 1), "closed_open")

    def index_array(self, x) -> np.ndarray:
        off = np.mod(np.asarray(x, dtype=float) - self.A[0], TWO_PI)
        return np.searchsorted(self._offsets, off, side="right")

    def apply_array(self, idx, x) -> np.ndarray:
        """T_idx(x) elementwise; ``idx`` holds 1-based generator labels."""
        a = self._alpha[idx - 1]
        b = self._beta[idx - 1]
        z = np.exp(1j * np.asarray(x, dtype=float))
        return normalize_array(np.angle((a * z + b) / (np.conj(b) * z + np.conj(a))))


def interval_index(part: Partition, x: float) -> int:
    """The i with x ∈ [A_i, A_{i+1})."""
    off = ccw_offset(part.A[0], x)
    return int(np.searchsorted(part._offsets, off, side="right"))


def f_apply(part: Partition, x: float) -> tuple[float, int]:
    i = interval_index(part, x)
    return part.geom.gen(i)(x), i


def f_apply_side(geom: SurfaceGeometry, x: float, i: int) -> float:
    """T_i(x) whatever interval x lies in."""
    return geom.gen(i)(x)


def F_apply(part: Partition, x: float, y: float) -> tuple[tuple[float, float], int]:
    if circ_dist(x, y) < DIAGONAL_TOL:
        raise DiagonalError(f"({x}, {y}) lies on the diagonal")
    i = interval_index(part, y)
    T = part.geom.gen(i)
    return (T(x), T(y)), i


def F_array(part: Partition, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised F_Ā; no diagonal check (callers sample away from it)."""
    idx = part.index_array(y)
    return part.apply_array(idx, x), part.apply_array(idx, y), idx


@dataclass
class OrbitTrace:
    points: list[float]
    side_indices: list[int]

    def __len__(self):
        return len(self.points)

    def max_step_residual(self, geom: SurfaceGeometry) -> float:
        r = 0.0
        for k, i in enumerate(self.side_indices):
            r = max(r, circ_dist(geom.gen(i)(self.points[k]), self.points[k + 1]))
        return r

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "theta", "side_index"])
        for k, p in enumerate(self.points):
            side = self.side_indices[k] if k < len(self.side_indices) else ""
            w.writerow([k, format(p, ".17g"), side])
        return buf.getvalue()


def orbit(part: Partition, x: float, n: int) -> OrbitTrace:
    if n < 0:
        raise DomainError("n must be >= 0")
    x = normalize_angle(x)
    pts, sides = [x], []
    for _ in range(n):
        x, i = f_apply(part, x)
        pts.append(x)
        sides.append(i)
    return OrbitTrace(pts, sides)


def branch_image(part: Partition, i: int) -> CircleArc:
    """T_i[A_i, A_{i+1})."""
    return part.geom.gen(i).image_arc(part.branch_arc(i))


def f_preimage_interval(part: Partition, I: CircleArc) -> list[CircleArc]:
    """f^{-1}(I) as disjoint arcs, one or two per branch that meets I."""
    if I.is_full:
        return [I]
    geom = part.geom
    out = []
    for i in range(1, part.N + 1):
        inv = geom.gen(geom.sigma(i))
        for piece in I.intersect(branch_image(part, i)):
            out.append(inv.image_arc(piece))
    out.sort(key=lambda arc: arc.start)
    return out


def branch_inverse(geom: SurfaceGeometry, i: int) -> MobiusMap:
    return geom.gen(geom.sigma(i))
