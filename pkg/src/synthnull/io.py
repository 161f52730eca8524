"""JSON instance files, CSV exports and deterministic report files.

Floats are written with Python's shortest round-trip ``repr``, so reading a
written file reproduces every numeric field bit for bit.  Infinite values are
spelled ``"inf"``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import GaugeInterval, Ray, RayDensity, SyntheticNullHypersurface
from .errors import InputError
from .measures import HMeasure, RayMeasureSlice

__all__ = [
    "hypersurface_to_dict",
    "hypersurface_from_dict",
    "read_hypersurface",
    "write_hypersurface",
    "measure_to_dict",
    "measure_from_dict",
    "read_measure",
    "write_measure",
    "write_csv",
    "write_report",
    "jsonable",
]

HYPERSURFACE_FORMAT = "synthnull.hypersurface/1"
MEASURE_FORMAT = "synthnull.measure/1"


def _num(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _parse_num(v, where):
    if isinstance(v, str):
        if v in ("inf", "+inf", "Infinity"):
            return math.inf
        if v in ("-inf", "-Infinity"):
            return -math.inf
        raise InputError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _numlist(v, where):
    if not isinstance(v, list):
        raise InputError(f"{where}: expected a list")
    return [_parse_num(x, f"{where}[{i}]") for i, x in enumerate(v)]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


# --------------------------------------------------------------------------
# hypersurfaces
# --------------------------------------------------------------------------

def _check_format(doc, expected):
    # hand-written files may omit the tag
    fmt = doc.get("format", expected)
    if fmt != expected:
        raise InputError(f"unsupported format {fmt!r}, expected {expected!r}")


def hypersurface_to_dict(H):
    rays = []
    for r in H.rays:
        d = {
            "id": r.id,
            "weight": r.weight,
            "interval": {
                "a": r.interval.a,
                "b": _num(r.interval.b),
                "has_initial": r.interval.has_initial_point,
                "has_final": r.interval.has_final_point,
            },
            "knots": r.density.knots.tolist(),
            "values": r.density.values.tolist(),
        }
        if r.density.power != 1.0:
            d["power"] = r.density.power
        if r.embedding is not None:
            d["embedding"] = r.embedding.tolist()
        rays.append(d)
    out = {"format": HYPERSURFACE_FORMAT, "rays": rays}
    if H.tip_rays:
        out["shared_tip"] = [r.id for r in H.rays if r.id in H.tip_rays]
    if H.dimension_hint is not None:
        out["dimension_hint"] = H.dimension_hint
    return out


def hypersurface_from_dict(doc):
    if not isinstance(doc, dict) or "rays" not in doc:
        raise InputError("hypersurface document needs a 'rays' list")
    _check_format(doc, HYPERSURFACE_FORMAT)
    rays = []
    for i, rd in enumerate(doc["rays"]):
        where = f"rays[{i}]"
        try:
            iv = rd["interval"]
            interval = GaugeInterval(
                _parse_num(iv["a"], f"{where}.interval.a"),
                _parse_num(iv["b"], f"{where}.interval.b"),
                bool(iv.get("has_initial", True)),
                bool(iv.get("has_final", False)),
            )
            density = RayDensity(
                _numlist(rd["knots"], f"{where}.knots"),
                _numlist(rd["values"], f"{where}.values"),
                _parse_num(rd.get("power", 1.0), f"{where}.power"),
            )
            emb = rd.get("embedding")
            rays.append(Ray(str(rd["id"]), _parse_num(rd["weight"], f"{where}.weight"),
                            interval, density, None if emb is None else np.array(emb, float)))
        except KeyError as exc:
            raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
        except InputError as exc:
            raise InputError(f"{where}: {exc}") from None
    tip = doc.get("shared_tip")
    hint = doc.get("dimension_hint")
    return SyntheticNullHypersurface(
        tuple(rays), None if tip is None else frozenset(tip),
        None if hint is None else _parse_num(hint, "dimension_hint"),
    )


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _write_json(path, doc):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def read_hypersurface(path):
    return hypersurface_from_dict(_read_json(path))


def write_hypersurface(path, H):
    _write_json(path, hypersurface_to_dict(H))


# --------------------------------------------------------------------------
# measures
# --------------------------------------------------------------------------

def measure_to_dict(mu):
    return {
        "format": MEASURE_FORMAT,
        "tip_mass": mu.tip_mass,
        "slices": [
            {
                "ray": s.ray_id,
                "knots": s.knots.tolist(),
                "values": s.values.tolist(),
                "atoms": [list(a) for a in s.atoms],
            }
            for s in mu.slices
        ],
    }


def measure_from_dict(doc):
    if not isinstance(doc, dict) or "slices" not in doc:
        raise InputError("measure document needs a 'slices' list")
    _check_format(doc, MEASURE_FORMAT)
    slices = []
    for i, sd in enumerate(doc["slices"]):
        where = f"slices[{i}]"
        try:
            slices.append(RayMeasureSlice(
                str(sd["ray"]),
                _numlist(sd["knots"], f"{where}.knots"),
                _numlist(sd["values"], f"{where}.values"),
                tuple(tuple(_numlist(a, f"{where}.atoms")) for a in sd.get("atoms", [])),
            ))
        except KeyError as exc:
            raise InputError(f"{where}: missing field {exc.args[0]!r}") from None
    return HMeasure(tuple(slices), _parse_num(doc.get("tip_mass", 0.0), "tip_mass"))


def read_measure(path):
    return measure_from_dict(_read_json(path))


def write_measure(path, mu):
    _write_json(path, measure_to_dict(mu))


# --------------------------------------------------------------------------
# exports
# --------------------------------------------------------------------------

def write_csv(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def write_report(path, report, timestamp=True):
    """Write a report dict as sorted JSON; ``timestamp=False`` makes it reproducible."""
    doc = jsonable(report)
    if timestamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def default_output_dir():
    return Path(os.environ.get("SYNTHNULL_OUTPUT", "synthnull-out"))
