"""JSON and CSV writers with 17-significant-digit floats (exact round trip)."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import SurfaceGeometry, pairing_build
from .circle import MobiusMap
from .maps import Partition


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep floats recognisable as floats on reload
    return s if any(c in s for c in ".en") else s + ".0"


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k), ensure_ascii=False) + ": " + _encode(v, indent, level + 1)
                 for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[" + pad + ("," + pad).join(parts) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# geometry ---------------------------------------------------------------------

def geometry_to_dict(geom: SurfaceGeometry) -> dict:
    N = geom.N
    return {
        "g": geom.g,
        "N": N,
        "t": geom.t,
        "phi": geom.phi,
        "d": geom.d,
        "R_euc": geom.R_euc,
        "v": geom.v,
        "P": [float(x) for x in geom.P],
        "Q": [float(x) for x in geom.Q],
        "V": [[float(r), float(a)] for r, a in geom.V_polar] or [[abs(z), float(np.angle(z))] for z in geom.V],
        "generators": [[M.alpha.real, M.alpha.imag, M.beta.real, M.beta.imag] for M in geom.T],
        "sigma": geom.pairing.table("sigma"),
        "rho": geom.pairing.table("rho"),
        "theta": geom.pairing.table("theta"),
    }


def geometry_from_dict(d: dict) -> SurfaceGeometry:
    """Rebuild a geometry exactly as stored, without re-validation.

    Tables are checked against the genus so that a file cannot silently
    redefine the side pairing; numerical content is taken at face value so
    `verify` can detect corrupted data.
    """
    try:
        g = int(d["g"])
        pairing = pairing_build(g)
        for name in ("sigma", "rho", "theta"):
            if list(d[name]) != pairing.table(name):
                raise DomainError(f"{name} table does not match genus {g}")
        # MobiusMap would renormalise; keep stored coefficients verbatim
        T = []
        for ar, ai, br, bi in d["generators"]:
            M = object.__new__(MobiusMap)
            object.__setattr__(M, "alpha", complex(ar, ai))
            object.__setattr__(M, "beta", complex(br, bi))
            T.append(M)
        V_polar = tuple((float(r), float(a)) for r, a in d["V"])
        V = np.array([r * np.exp(1j * a) for r, a in V_polar])
        return SurfaceGeometry(g, int(d["N"]), float(d["t"]), float(d["phi"]), float(d["d"]),
                               float(d["R_euc"]), float(d["v"]), np.array(d["P"], dtype=float),
                               np.array(d["Q"], dtype=float), V, tuple(T), pairing, V_polar)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed geometry data: {exc}") from exc


def save_geometry(geom: SurfaceGeometry, path) -> None:
    write_json(geometry_to_dict(geom), path)


def load_geometry(path) -> SurfaceGeometry:
    return geometry_from_dict(read_json(path))


def load_partition(geom: SurfaceGeometry, path) -> Partition:
    """A JSON array of N angles; validated against the windows (P_i, Q_i)."""
    data = read_json(path)
    if not isinstance(data, list):
        raise DomainError("partition file must hold a JSON array of angles")
    return Partition.explicit(geom, np.array(data, dtype=float))
