"""Causal couplings and displacement interpolation along rays.

Rays are causally unrelated to each other, so a causal coupling never moves
mass between rays except out of the shared tip.  On a single ray the causal
order is the order of the gauge, and the monotone coupling is the quantile
(co-monotone) coupling.  Every coupling here is stored as a list of segments
``[x0, x1] -> [y0, y1]`` carrying mass ``m`` uniformly along the affine graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, PreconditionError
from .measures import HMeasure, RayMeasureSlice, MASS_TOL

__all__ = [
    "Segments",
    "CausalCoupling",
    "DynamicalPlan",
    "Obstruction",
    "Feasibility",
    "feasibility",
    "monotone_coupling",
    "dynamical_plan",
    "interpolate",
]

ORDER_TOL = 1e-12
BREAK_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class Segments:
    """Arrays ``x0, x1, y0, y1, m`` sorted by source position."""

    x0: np.ndarray
    x1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(getattr(self, k), dtype=float) for k in ("x0", "x1", "y0", "y1", "m")]
        order = np.lexsort((arrs[2], arrs[0]))
        for k, a in zip(("x0", "x1", "y0", "y1", "m"), arrs):
            a = a[order]
            a.setflags(write=False)
            object.__setattr__(self, k, a)

    def __len__(self):
        return self.m.size

    def rows(self):
        return list(zip(self.x0.tolist(), self.x1.tolist(), self.y0.tolist(),
                        self.y1.tolist(), self.m.tolist()))

    def at(self, t):
        """Positions of the segment ends at time ``t``."""
        return _lerp(self.x0, self.y0, t), _lerp(self.x1, self.y1, t)

    def merged(self, rtol=1e-12):
        """Join consecutive segments that continue the same affine map."""
        out = []
        for row in self.rows():
            if out:
                a0, a1, b0, b1, mm = out[-1]
                x0, x1, y0, y1, m = row
                contiguous = abs(x0 - a1) <= rtol * max(1.0, abs(x0)) and \
                    abs(y0 - b1) <= rtol * max(1.0, abs(y0))
                if contiguous and (a1 - a0) > 0 and (x1 - x0) > 0:
                    d_prev = mm / (a1 - a0)
                    d_new = m / (x1 - x0)
                    s_prev = (b1 - b0) / (a1 - a0)
                    s_new = (y1 - y0) / (x1 - x0)
                    if abs(d_prev - d_new) <= rtol * max(d_prev, d_new) and \
                            abs(s_prev - s_new) <= rtol * max(1.0, abs(s_prev)):
                        out[-1] = (a0, x1, b0, y1, mm + m)
                        continue
            out.append(row)
        if not out:
            return self
        return Segments(*map(np.array, zip(*out)))

    def transport_map(self, g):
        """Evaluate the monotone map at gauge values inside the source support."""
        g = np.asarray(g, dtype=float)
        i = np.clip(np.searchsorted(self.x1, g, side="left"), 0, len(self) - 1)
        w = self.x1[i] - self.x0[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(w > 0, (g - self.x0[i]) / w, 0.0)
        return self.y0[i] + frac * (self.y1[i] - self.y0[i])


def _empty_segments():
    z = np.zeros(0)
    return Segments(z, z, z, z, z)


@dataclass(frozen=True, eq=False)
class CausalCoupling:
    """Causal coupling stored per ray, with optional rows leaving the tip.

    ``tip_rows[ray]`` are ``(y0, y1, m)`` target blocks fed from the tip and
    ``tip_to_tip`` is mass that stays at the tip.
    """

    rows: dict
    tip_rows: dict = field(default_factory=dict)
    tip_to_tip: float = 0.0

    def source_marginal(self):
        slices = [_segments_to_slice(rid, s.x0, s.x1, s.m) for rid, s in self.rows.items()]
        tip = self.tip_to_tip + sum(float(np.sum(m)) for _, _, m in self.tip_rows.values())
        return HMeasure(tuple(sl for sl in slices if sl is not None), tip)

    def target_marginal(self):
        slices = []
        for rid in sorted(set(self.rows) | set(self.tip_rows)):
            parts = []
            if rid in self.tip_rows:
                y0, y1, m = self.tip_rows[rid]
                parts.append((np.asarray(y0), np.asarray(y1), np.asarray(m)))
            if rid in self.rows:
                s = self.rows[rid]
                parts.append((s.y0, s.y1, s.m))
            y0 = np.concatenate([p[0] for p in parts])
            y1 = np.concatenate([p[1] for p in parts])
            m = np.concatenate([p[2] for p in parts])
            order = np.argsort(y0, kind="stable")
            sl = _segments_to_slice(rid, y0[order], y1[order], m[order])
            if sl is not None:
                slices.append(sl)
        return HMeasure(tuple(slices), self.tip_to_tip)

    def is_monotone(self, tol=ORDER_TOL):
        for s in self.rows.values():
            if len(s) > 1:
                if np.any(s.y0[1:] < s.y1[:-1] - tol * np.maximum(1.0, np.abs(s.y1[:-1]))):
                    return False
            if np.any(s.y1 < s.y0) or np.any(s.x1 < s.x0):
                return False
        return True

    def is_causal(self, tol=ORDER_TOL):
        for s in self.rows.values():
            if np.any(s.y0 < s.x0 - tol * np.maximum(1.0, np.abs(s.x0))):
                return False
            if np.any(s.y1 < s.x1 - tol * np.maximum(1.0, np.abs(s.x1))):
                return False
        return True

    def csv_rows(self):
        out = []
        for rid in sorted(self.rows):
            for x0, x1, y0, y1, m in self.rows[rid].rows():
                out.append((rid, x0, x1, y0, y1, m))
        for rid in sorted(self.tip_rows):
            y0, y1, m = self.tip_rows[rid]
            for a, b, mm in zip(np.asarray(y0), np.asarray(y1), np.asarray(m)):
                out.append((rid, "tip", "tip", float(a), float(b), float(mm)))
        return out


@dataclass(frozen=True, eq=False)
class DynamicalPlan:
    """Weighted family of gauge-affine curves ``t -> (1-t) g0 + t g1``.

    Each segment row stands for the curves starting uniformly in
    ``[x0, x1]`` and ending at the matching point of ``[y0, y1]``.
    """

    rows: dict

    def endpoints(self):
        """Push the plan forward by ``(e_0, e_1)``."""
        return CausalCoupling(dict(self.rows))

    def restrict(self, s, t):
        """The plan traversed between times ``s <= t``, rescaled to ``[0, 1]``."""
        out = {}
        for rid, seg in self.rows.items():
            a0, a1 = seg.at(s)
            b0, b1 = seg.at(t)
            out[rid] = Segments(a0, a1, b0, b1, seg.m)
        return DynamicalPlan(out)

    def csv_rows(self):
        return self.endpoints().csv_rows()


def _segments_to_slice(ray_id, lo, hi, m):
    """Piecewise-constant slice from ordered, non-overlapping blocks."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return None
    knots, values, atoms = [], [], []
    for a, b, mm in zip(lo.tolist(), hi.tolist(), m.tolist()):
        if mm <= 0:
            continue
        if knots and a < knots[-1]:
            a = knots[-1]
        if not b > a:
            atoms.append((a, mm))
            continue
        if not knots:
            knots.append(a)
        elif a > knots[-1]:
            values.append(0.0)
            knots.append(a)
        values.append(mm / (b - a))
        knots.append(b)
    if not knots and not atoms:
        return None
    if not knots:
        knots = [atoms[0][0]]
    merged = {}
    for g, mm in atoms:
        merged[g] = merged.get(g, 0.0) + mm
    return RayMeasureSlice(ray_id, knots, values, tuple(sorted(merged.items())))


# --------------------------------------------------------------------------
# quantile machinery
# --------------------------------------------------------------------------

class _Quantile:
    """Quantile function of a piecewise-constant slice offset by ``base``."""

    def __init__(self, sl, base=0.0):
        self.x = np.asarray(sl.knots, dtype=float)
        self.pm = np.asarray(sl.piece_masses, dtype=float)
        self.U = base + np.concatenate([[0.0], np.cumsum(self.pm)])
        self.base = base
        self.live = np.nonzero(self.pm > 0)[0]

    @property
    def total(self):
        return float(self.U[-1])

    def piece(self, u_mid):
        k = np.searchsorted(self.U, u_mid, side="right") - 1
        k = np.clip(k, 0, self.pm.size - 1)
        # ends of the u-range can land on zero-mass pieces through rounding
        live = self.live
        j = np.clip(np.searchsorted(live, k, side="left"), 0, live.size - 1)
        k = np.where(self.pm[k] > 0, k, live[j])
        return k

    def value(self, u, k):
        frac = (u - self.U[k]) / self.pm[k]
        frac = np.clip(frac, 0.0, 1.0)
        v = self.x[k] + frac * (self.x[k + 1] - self.x[k])
        # x[k] + 1 * (x[k+1] - x[k]) can round past x[k+1]
        return np.clip(v, self.x[k], self.x[k + 1])


def _breakpoints(*arrays, scale):
    u = np.unique(np.concatenate(arrays))
    keep = [u[0]]
    for v in u[1:]:
        if v - keep[-1] > BREAK_TOL * scale:
            keep.append(v)
    return np.array(keep)


def _ray_rows(s0, s1, excess=0.0):
    """Quantile coupling on one ray; the first ``excess`` mass comes from the tip."""
    q1 = _Quantile(s1)
    total = q1.total
    scale = max(total, 1.0)
    if s0 is not None and s0.mass > 0:
        q0 = _Quantile(s0, base=excess)
        u = _breakpoints(q0.U[np.r_[q0.live, q0.live + 1]],
                         q1.U[np.r_[q1.live, q1.live + 1]], [0.0, excess], scale=scale)
    else:
        q0 = None
        u = _breakpoints(q1.U[np.r_[q1.live, q1.live + 1]], [0.0], scale=scale)
    u = u[(u >= 0.0) & (u <= total + BREAK_TOL * scale)]
    u[-1] = total
    lo, hi = u[:-1], u[1:]
    mass = hi - lo
    ok = mass > 0
    lo, hi, mass = lo[ok], hi[ok], mass[ok]
    mid = 0.5 * (lo + hi)
    k1 = q1.piece(mid)
    y0, y1 = q1.value(lo, k1), q1.value(hi, k1)
    from_tip = mid < excess
    if q0 is not None:
        k0 = q0.piece(np.where(from_tip, excess, mid))
        x0, x1 = q0.value(lo, k0), q0.value(hi, k0)
    else:
        x0 = x1 = np.full(mid.shape, np.nan)
    body = ~from_tip
    seg = Segments(x0[body], x1[body], y0[body], y1[body], mass[body])
    tip = (y0[from_tip], y1[from_tip], mass[from_tip])
    return seg, tip


@dataclass
class Obstruction:
    reason: str
    ray_id: str | None = None
    u: float | None = None

    def to_dict(self):
        return {"reason": self.reason, "ray": self.ray_id, "u": self.u}


@dataclass
class Feasibility:
    feasible: bool
    witness: CausalCoupling | None = None
    obstruction: Obstruction | None = None

    def __bool__(self):
        return self.feasible


def _mass_tol(m):
    return MASS_TOL * max(1.0, abs(m))


def feasibility(mu0, mu1, H):
    """Decide whether some causal coupling of ``mu0`` and ``mu1`` exists.

    On each ray the masses must agree (mass out of the tip may split among
    tip-attached rays) and the target quantile must dominate the source
    quantile at every breakpoint.  Returns the monotone coupling as witness,
    or the first obstruction.
    """
    m0, m1 = mu0.masses(), mu1.masses()
    for rid in list(m0) + list(m1):
        H.ray(rid)
    tip_rays = H.tip_rays or frozenset()
    if mu1.tip_mass > mu0.tip_mass + MASS_TOL:
        return Feasibility(False, obstruction=Obstruction("tip mass cannot be reached"))
    excess = {}
    for rid in sorted(set(m0) | set(m1)):
        a, b = m0.get(rid, 0.0), m1.get(rid, 0.0)
        d = b - a
        if abs(d) <= _mass_tol(max(a, b)):
            continue
        if d > 0 and rid in tip_rays and mu0.tip_mass > 0:
            excess[rid] = d
            continue
        return Feasibility(False, obstruction=Obstruction("ray mass mismatch", rid))
    from_tip = mu0.tip_mass - mu1.tip_mass
    if abs(sum(excess.values()) - from_tip) > _mass_tol(mu0.tip_mass):
        return Feasibility(False, obstruction=Obstruction("ray mass mismatch", None))
    rows, tip_rows = {}, {}
    for rid in sorted(set(m0) | set(m1)):
        s1 = mu1.slice(rid)
        if s1 is None or s1.mass == 0:
            continue
        s0 = mu0.slice(rid)
        seg, tip = _ray_rows(s0, s1, excess.get(rid, 0.0))
        tol = ORDER_TOL * np.maximum(1.0, np.abs(seg.x0))
        bad0 = seg.y0 < seg.x0 - tol
        bad1 = seg.y1 < seg.x1 - ORDER_TOL * np.maximum(1.0, np.abs(seg.x1))
        if np.any(bad0 | bad1):
            cum = excess.get(rid, 0.0) + np.concatenate([[0.0], np.cumsum(seg.m)])
            i = int(np.argmax(bad0 | bad1))
            u = cum[i] if bad0[i] else cum[i + 1]
            return Feasibility(False, obstruction=Obstruction(
                "quantile order violated", rid, float(u / s1.mass)))
        if len(seg):
            rows[rid] = seg
        if tip[2].size:
            tip_rows[rid] = tip
    return Feasibility(True, witness=CausalCoupling(rows, tip_rows, mu1.tip_mass))


def monotone_coupling(mu0, mu1, H):
    """The unique monotone causal coupling of two measures concentrated off the tip."""
    if mu0.tip_mass > 0 or mu1.tip_mass > 0:
        raise PreconditionError("the monotone coupling needs marginals without tip mass")
    res = feasibility(mu0, mu1, H)
    if not res:
        raise InfeasibleError(f"no causal coupling: {res.obstruction.reason}", res.obstruction)
    return res.witness


def dynamical_plan(coupling, H=None):
    """Affine-in-gauge curves realizing a coupling off the tip."""
    if coupling.tip_rows or coupling.tip_to_tip > 0:
        raise PreconditionError("dynamical plans cannot start at the tip")
    return DynamicalPlan(dict(coupling.rows))


def _lerp(x, y, t):
    # a rounded convex combination can leave [x, y] by an ulp
    v = (1.0 - t) * x + t * y
    return np.clip(v, np.minimum(x, y), np.maximum(x, y))


def interpolate(plan, t, H=None):
    """Displacement interpolation ``mu_t = (e_t)_# plan``.

    The density of each segment at time ``t`` is its mass spread over the
    moved segment; a segment squeezed to a point becomes an atom, which
    makes the entropy infinite downstream.
    """
    if not 0.0 <= t <= 1.0:
        raise PreconditionError(f"t must lie in [0, 1], got {t}")
    slices = []
    for rid in sorted(plan.rows):
        seg = plan.rows[rid]
        lo, hi = seg.at(t)
        sl = _segments_to_slice(rid, lo, hi, seg.m)
        if sl is not None:
            slices.append(sl)
    return HMeasure(tuple(slices))
