"""Ray-decomposed synthetic null hypersurfaces.

A hypersurface is stored in the form produced by its ray decomposition: a
finite family of null generators, each carrying a quotient weight, a gauge
interval and the density of the conditional measure along the ray.  The causal
order, the gauge flow and the transverse gauge/measure transformations all act
ray by ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "TIP",
    "GaugeInterval",
    "RayDensity",
    "Ray",
    "SyntheticNullHypersurface",
    "PointOnH",
    "TransversePair",
    "causal_leq",
    "psi_flow",
    "gauge_measure_transform",
]

WEIGHT_TOL = 1e-12


class _Tip:
    """Token for the initial point shared by the tip-attached rays."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TIP"

    def __reduce__(self):
        return (_Tip, ())


TIP = _Tip()


def _readonly(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# numerics of one linear piece of the root profile
# --------------------------------------------------------------------------

def _mean_log_linear(u0, u1):
    """Mean of ``log u`` over a piece where ``u`` is linear from u0 to u1."""
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    big = np.maximum(u0, u1)
    small = np.minimum(u0, u1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(big > 0, small / big - 1.0, 0.0)
        safe_r = np.where(r == 0.0, -0.5, r)
        lp = np.log1p(safe_r)
        body = np.where(safe_r == -1.0, 0.0, (1.0 + safe_r) * lp) / safe_r - 1.0
        corr = np.where(r == 0.0, 0.0, body)
        out = np.where(big > 0, np.log(np.where(big > 0, big, 1.0)) + corr, -np.inf)
    return out


def _mean_pow_linear(u0, u1, p):
    """Mean of ``u**p`` over a piece where ``u`` is linear from u0 to u1."""
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    big = np.maximum(u0, u1)
    small = np.minimum(u0, u1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(big > 0, small / big - 1.0, 0.0)
        safe_r = np.where(r == 0.0, -0.5, r)
        ratio = np.expm1((p + 1.0) * np.log1p(safe_r)) / ((p + 1.0) * safe_r)
        ratio = np.where(r == 0.0, 1.0, ratio)
        out = np.where(big > 0, np.power(np.maximum(big, 0.0), p) * ratio, 0.0)
    return out


@dataclass(frozen=True)
class GaugeInterval:
    """Gauge range ``[a, b]`` of one ray; ``b`` may be ``inf``."""

    a: float
    b: float
    has_initial_point: bool = True
    has_final_point: bool = False

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not math.isfinite(a):
            raise InputError(f"left gauge value must be finite, got {a}")
        if math.isnan(b) or not a < b:
            raise InputError(f"gauge interval needs a < b, got [{a}, {b}]")
        if self.has_final_point and not math.isfinite(b):
            raise InputError("a final point requires a finite right end")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def complete(self):
        """True when the ray is future complete in its gauge."""
        return math.isinf(self.b)

    def contains(self, g):
        return self.a <= g <= self.b


@dataclass(frozen=True, eq=False)
class RayDensity:
    """Density of the conditional measure along one ray.

    The density is tabulated at ``knots``.  Between knots the root
    ``values ** (1 / power)`` is linear, so ``power=1`` is plain piecewise
    linear interpolation and ``power=N-2`` represents the profiles met in
    dimension ``N`` (e.g. ``t**2`` on a 4-d light cone) without error.
    Beyond the last knot the last linear piece of the root is extrapolated
    and clamped at zero.
    """

    knots: np.ndarray
    values: np.ndarray
    power: float = 1.0

    def __post_init__(self):
        knots = _readonly(self.knots)
        values = _readonly(self.values)
        if knots.ndim != 1 or knots.shape != values.shape:
            raise InputError("knots and values must be 1-d arrays of equal length")
        if knots.size < 2:
            raise InputError("a density needs at least two knots")
        if not np.all(np.isfinite(knots)):
            raise InputError("knots must be finite")
        if not np.all(np.diff(knots) > 0):
            raise InputError("knots must be strictly increasing")
        power = float(self.power)
        if not power > 0:
            raise InputError(f"interpolation power must be positive, got {power}")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "power", power)

    # -- tables ----------------------------------------------------------
    @cached_property
    def roots(self):
        v = self.values
        return np.sign(v) * np.abs(v) ** (1.0 / self.power)

    @cached_property
    def _slopes(self):
        return np.diff(self.roots) / np.diff(self.knots)

    @cached_property
    def _log_table(self):
        # per-piece integral of log h with zero pieces counted separately
        widths = np.diff(self.knots)
        piece = self.power * _mean_log_linear(self.roots[:-1], self.roots[1:]) * widths
        dead = ~np.isfinite(piece)
        cum = np.concatenate([[0.0], np.cumsum(np.where(dead, 0.0, piece))])
        cdead = np.concatenate([[0], np.cumsum(dead.astype(np.int64))])
        return cum, cdead

    @cached_property
    def _mass_table(self):
        widths = np.diff(self.knots)
        piece = _mean_pow_linear(self.roots[:-1], self.roots[1:], self.power) * widths
        return np.concatenate([[0.0], np.cumsum(piece)])

    @property
    def lo(self):
        return float(self.knots[0])

    @property
    def hi(self):
        return float(self.knots[-1])

    def extended(self, upto):
        """Return a density whose table reaches ``upto`` by extrapolation."""
        upto = float(upto)
        if upto <= self.hi:
            return self
        g, x = self.roots, self.knots
        slope = self._slopes[-1]
        g_end = g[-1] + slope * (upto - x[-1])
        if g_end >= 0 or g[-1] <= 0:
            new_knots = np.append(x, upto)
            new_vals = np.append(self.values, max(g_end, 0.0) ** self.power)
        else:
            z = x[-1] - g[-1] / slope
            if z <= x[-1] or z >= upto:
                new_knots = np.append(x, upto)
                new_vals = np.append(self.values, 0.0)
            else:
                new_knots = np.append(x, [z, upto])
                new_vals = np.append(self.values, [0.0, 0.0])
        return RayDensity(new_knots, new_vals, self.power)

    def _locate(self, x, side):
        idx = np.searchsorted(self.knots, x, side=side) - 1
        return np.clip(idx, 0, self.knots.size - 2)

    def root(self, x):
        """Evaluate ``h ** (1/power)`` at ``x``."""
        x = np.asarray(x, dtype=float)
        i = self._locate(x, "right")
        g = self.roots[i] + self._slopes[i] * (x - self.knots[i])
        return np.maximum(g, 0.0)

    def __call__(self, x):
        return self.root(x) ** self.power

    def right_derivative(self, x):
        """One-sided derivative ``h'(x+)`` taken on the piece right of ``x``."""
        x = np.asarray(x, dtype=float)
        i = self._locate(x, "right")
        g = self.root(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            gp = np.power(g, self.power - 1.0) if self.power != 1.0 else np.ones_like(g)
        return self.power * gp * self._slopes[i]

    def _interval(self, lo, hi, piece_mean, table, dead=None):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        x, g = self.knots, self.roots
        i = self._locate(lo, "right")
        j = self._locate(hi, "left")
        g_lo = self.root(lo)
        g_hi = self.root(hi)
        same = i >= j
        whole = piece_mean(g_lo, g_hi) * (hi - lo)
        with np.errstate(invalid="ignore"):
            first = piece_mean(g_lo, g[i + 1]) * (x[i + 1] - lo)
            last = piece_mean(g[j], g_hi) * (hi - x[j])
            mid = table[j] - table[np.minimum(i + 1, j)]
            split = first + mid + last
        out = np.where(same, whole, split)
        if dead is not None:
            ndead = dead[j] - dead[np.minimum(i + 1, j)]
            out = np.where(~same & (ndead > 0), -np.inf, out)
        return out

    def log_integral(self, lo, hi):
        """``∫_lo^hi log h``; ``-inf`` when ``h`` vanishes on a sub-interval."""
        top = float(np.max(hi))
        if top > self.hi:
            return self.extended(top).log_integral(lo, hi)
        cum, dead = self._log_table
        return self._interval(
            lo, hi, lambda u, v: self.power * _mean_log_linear(u, v), cum, dead
        )

    def mean_log(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return self.log_integral(lo, hi) / (hi - lo)

    def integral(self, lo, hi):
        """``∫_lo^hi h``."""
        top = float(np.max(hi))
        if top > self.hi:
            return self.extended(top).integral(lo, hi)
        return self._interval(
            lo, hi, lambda u, v: _mean_pow_linear(u, v, self.power), self._mass_table
        )

    def total_mass(self):
        return float(self._mass_table[-1])


@dataclass(frozen=True, eq=False)
class Ray:
    """One null generator with its quotient weight and conditional density.

    ``embedding`` (optional) holds ambient coordinates at the density knots,
    shape ``(len(knots), n)``.
    """

    id: str
    weight: float
    interval: GaugeInterval
    density: RayDensity
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise InputError(f"ray id must be a non-empty string, got {self.id!r}")
        w = float(self.weight)
        if not (w > 0 and math.isfinite(w)):
            raise InputError(f"ray {self.id}: weight must be positive, got {w}")
        object.__setattr__(self, "weight", w)
        iv, d = self.interval, self.density
        if d.knots[0] != iv.a:
            raise InputError(f"ray {self.id}: first knot {d.knots[0]} != a = {iv.a}")
        if iv.b < d.knots[-1]:
            raise InputError(f"ray {self.id}: knots extend past b = {iv.b}")
        if math.isfinite(iv.b) and d.knots[-1] != iv.b:
            raise InputError(f"ray {self.id}: last knot must equal the finite b = {iv.b}")
        if self.embedding is not None:
            emb = _readonly(self.embedding)
            if emb.ndim != 2 or emb.shape[0] != d.knots.size:
                raise InputError(f"ray {self.id}: embedding must have one row per knot")
            object.__setattr__(self, "embedding", emb)

    @property
    def top(self):
        """Right end of the tabulated window (b, or the truncation horizon)."""
        return float(self.density.knots[-1])

    def embed(self, g):
        """Ambient coordinates at gauge ``g`` (linear between knots)."""
        if self.embedding is None:
            return None
        g = np.atleast_1d(np.asarray(g, dtype=float))
        cols = [np.interp(g, self.density.knots, self.embedding[:, k])
                for k in range(self.embedding.shape[1])]
        return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class SyntheticNullHypersurface:
    """The triple (H, G, m) in ray-decomposed form.

    ``tip_rays`` lists the rays attached to the shared initial point (a cone
    vertex, say).  The quotient weights should sum to one; that and the sign of
    the densities are diagnosed by :func:`synthnull.measures.disintegration_check`
    rather than enforced here, so malformed instances can still be inspected.
    """

    rays: tuple
    tip_rays: frozenset | None = None
    dimension_hint: float | None = None

    def __post_init__(self):
        rays = tuple(self.rays)
        if not rays:
            raise InputError("a hypersurface needs at least one ray")
        ids = [r.id for r in rays]
        if len(set(ids)) != len(ids):
            raise InputError("ray ids must be unique")
        object.__setattr__(self, "rays", rays)
        if self.tip_rays is not None:
            tip = frozenset(self.tip_rays)
            unknown = tip - set(ids)
            if unknown:
                raise InputError(f"tip attached to unknown rays {sorted(unknown)}")
            object.__setattr__(self, "tip_rays", tip)
        if self.dimension_hint is not None:
            n = float(self.dimension_hint)
            if not n > 0:
                raise InputError("dimension_hint must be positive")
            object.__setattr__(self, "dimension_hint", n)

    @cached_property
    def _index(self):
        return {r.id: r for r in self.rays}

    @property
    def ids(self):
        return [r.id for r in self.rays]

    @property
    def weights(self):
        return np.array([r.weight for r in self.rays])

    def ray(self, ray_id):
        try:
            return self._index[ray_id]
        except KeyError:
            raise InputError(f"unknown ray id {ray_id!r}") from None

    def __contains__(self, ray_id):
        return ray_id in self._index

    def has_tip(self):
        return bool(self.tip_rays)

    def replace_rays(self, rays):
        return SyntheticNullHypersurface(tuple(rays), self.tip_rays, self.dimension_hint)


@dataclass(frozen=True)
class PointOnH:
    """A point of H: a ray id with a gauge value, or the shared tip."""

    ray_id: object
    gauge: float | None = None

    @classmethod
    def tip(cls):
        return cls(TIP, None)

    @property
    def is_tip(self):
        return self.ray_id is TIP


def _check_point(x, H):
    if x.is_tip:
        if not H.has_tip():
            raise InputError("hypersurface has no shared tip")
        return
    ray = H.ray(x.ray_id)
    if x.gauge is None or not ray.interval.contains(x.gauge):
        raise InputError(
            f"gauge {x.gauge} outside [{ray.interval.a}, {ray.interval.b}] on ray {x.ray_id}"
        )


def causal_leq(x, y, H):
    """Causal relation ``x <= y`` between two points of ``H``.

    Distinct rays are causally unrelated; the shared tip precedes every point
    of a tip-attached ray.
    """
    _check_point(x, H)
    _check_point(y, H)
    if x == y:
        return True
    if x.is_tip:
        return (not y.is_tip) and y.ray_id in H.tip_rays
    if y.is_tip:
        return False
    return x.ray_id == y.ray_id and x.gauge <= y.gauge


def psi_flow(x, t, H):
    """Move ``x`` along its ray so that the gauge increases by ``t``."""
    if x.is_tip:
        raise InputError("the gauge flow is not defined at the shared tip")
    _check_point(x, H)
    iv = H.ray(x.ray_id).interval
    g = x.gauge + t
    if not (iv.a <= g <= iv.b):
        raise DomainError(
            f"flow by {t} leaves [{iv.a}, {iv.b}] on ray {x.ray_id}",
            admissible=(iv.a - x.gauge, iv.b - x.gauge),
        )
    return PointOnH(x.ray_id, g)


@dataclass(frozen=True)
class TransversePair:
    """Functions constant along rays acting by ``G -> f + h G``."""

    f: Mapping
    h: Mapping

    def __post_init__(self):
        f = {k: float(v) for k, v in dict(self.f).items()}
        h = {k: float(v) for k, v in dict(self.h).items()}
        bad = [k for k, v in h.items() if not (v > 0 and math.isfinite(v))]
        if bad:
            raise InputError(f"transverse scale must be positive on rays {sorted(bad)}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h", h)

    @classmethod
    def constant(cls, ids: Iterable[str], f=0.0, h=1.0):
        ids = list(ids)
        return cls({k: f for k in ids}, {k: h for k in ids})

    def shift(self, ray_id):
        return self.f.get(ray_id, 0.0)

    def scale(self, ray_id):
        return self.h.get(ray_id, 1.0)

    def inverse(self):
        return TransversePair(
            {k: -self.shift(k) / self.scale(k) for k in set(self.f) | set(self.h)},
            {k: 1.0 / self.scale(k) for k in set(self.f) | set(self.h)},
        )

    def apply(self, ray_id, g):
        return self.shift(ray_id) + self.scale(ray_id) * np.asarray(g, dtype=float)


def gauge_measure_transform(H, tp, measure_exponent=-1.0):
    """Change gauge by ``G -> f + h G`` and measure by ``m -> h**k m``.

    The default ``k = -1`` pairs the gauge change with ``m' = m / h``; the
    density along each ray then becomes ``h_a(g) / h**2`` at the new gauge
    value ``f + h g`` and the ray mass scales by ``1/h``.  ``k = +1`` is the
    pairing that leaves densities in gauge coordinates unchanged.
    """
    rays = []
    for ray in H.rays:
        s = tp.scale(ray.id)
        f = tp.shift(ray.id)
        iv = ray.interval
        b = f + s * iv.b if math.isfinite(iv.b) else math.inf
        knots = f + s * ray.density.knots
        if math.isfinite(iv.b):
            knots[-1] = b
        values = ray.density.values * s ** (measure_exponent - 1.0)
        rays.append(
            Ray(
                ray.id,
                ray.weight,
                GaugeInterval(knots[0], b, iv.has_initial_point, iv.has_final_point),
                RayDensity(knots, values, ray.density.power),
                ray.embedding,
            )
        )
    return H.replace_rays(rays)
