"""Hypersurfaces generated from smooth model spacetimes.

Light cones and sphere congruences in Minkowski space give exactly
representable densities.  The warped product ``dt**2 - f(t)**2 dr**2`` over a
circle is used for the null-completeness experiment: its null geodesics are
integrated numerically up to the blow-up of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import GaugeInterval, Ray, RayDensity, SyntheticNullHypersurface
from .errors import InputError, ModelError, ParameterError

__all__ = [
    "WarpedProductSpec",
    "GeodesicTrace",
    "integrate_geodesic",
    "sqrt_warp",
    "cone_hypersurface",
    "sphere_boundary_hypersurface",
    "warped_null_hypersurface",
    "sphere_directions",
]

NULL_TOL = 1e-12


def sqrt_warp():
    """``f(t) = sqrt(-t)`` and its derivative."""
    return (lambda t: math.sqrt(-t)), (lambda t: -0.5 / math.sqrt(-t))


@dataclass(frozen=True)
class WarpedProductSpec:
    """Metric ``dt**2 - f(t)**2 dr**2`` on ``(-inf, 0) x S^1`` and initial data.

    ``initial`` is ``(t0, tdot0, rdot0)``.
    """

    warp: Callable
    dwarp: Callable
    initial: tuple
    causal_type: str = "null"

    def __post_init__(self):
        t0, td0, rd0 = (float(v) for v in self.initial)
        object.__setattr__(self, "initial", (t0, td0, rd0))
        if not t0 < 0:
            raise InputError(f"initial time must be negative, got {t0}")
        f0 = self.warp(t0)
        if not f0 > 0:
            raise ModelError(f"warp must be positive, f({t0}) = {f0}")
        norm = td0 * td0 - f0 * f0 * rd0 * rd0
        if self.causal_type == "null":
            if abs(norm) > NULL_TOL * max(1.0, td0 * td0):
                raise InputError(f"initial data is not null: |v|^2 = {norm}")
        elif self.causal_type == "timelike":
            if not norm > 0:
                raise InputError(f"initial data is not timelike: |v|^2 = {norm}")
        else:
            raise InputError(f"unknown causal type {self.causal_type!r}")
        if not td0 > 0:
            raise InputError("initial data must be future directed (tdot > 0)")

    @classmethod
    def null(cls, warp, dwarp, t0, tdot0):
        """Future-directed null data with positive winding speed."""
        return cls(warp, dwarp, (t0, tdot0, tdot0 / warp(t0)), "null")

    @property
    def C(self):
        """Conserved winding constant ``rdot * f**2``."""
        t0, _, rd0 = self.initial
        return rd0 * self.warp(t0) ** 2

    @property
    def norm0(self):
        t0, td0, rd0 = self.initial
        return td0 * td0 - self.warp(t0) ** 2 * rd0 * rd0


@dataclass
class GeodesicTrace:
    """Samples ``(s, t, tdot, r, rdot)`` of one integrated geodesic."""

    samples: np.ndarray
    b_estimate: float
    terminated: str
    step: float
    s_final: float
    drift: float
    winding: float
    extrapolation: dict = field(default_factory=dict)

    @property
    def turns(self):
        return self.winding / (2.0 * math.pi)

    def csv_rows(self):
        return [tuple(row[:4]) for row in self.samples]

    def to_dict(self):
        return {
            "b_estimate": self.b_estimate,
            "terminated": self.terminated,
            "step": self.step,
            "s_final": self.s_final,
            "conservation_drift": self.drift,
            "winding": self.winding,
            "turns": self.turns,
            "samples": int(self.samples.shape[0]),
            "extrapolation": self.extrapolation,
        }


def _run(spec, step, max_steps):
    f, df = spec.warp, spec.dwarp
    C = spec.C
    t, v = spec.initial[0], spec.initial[1]
    r, s = 0.0, 0.0

    def rhs(t, v):
        ft = f(t)
        if not ft > 0:
            raise ModelError(f"warp is not positive at t = {t}")
        return v, -C * C * df(t) / ft ** 3, C / (ft * ft)

    out = [(s, t, v, r, C / f(t) ** 2)]
    reason = "steps"
    for _ in range(int(max_steps)):
        if -t <= 10.0 * step:
            reason = "blow-up"
            break
        if v > 1.0 / step:
            reason = "horizon"
            break
        ds = step * min(1.0, (-t) / abs(v)) if v != 0 else step
        k1 = rhs(t, v)
        k2 = rhs(t + 0.5 * ds * k1[0], v + 0.5 * ds * k1[1])
        k3 = rhs(t + 0.5 * ds * k2[0], v + 0.5 * ds * k2[1])
        k4 = rhs(t + ds * k3[0], v + ds * k3[1])
        t += ds * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        v += ds * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        r += ds * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) / 6.0
        s += ds
        if not t < 0:
            raise ModelError("integration stepped past the end of the warp's domain")
        out.append((s, t, v, r, C / f(t) ** 2))
    return np.array(out), reason


def _drift(spec, samples):
    f = np.vectorize(spec.warp)(samples[:, 1])
    norm = samples[:, 2] ** 2 - (f * samples[:, 4]) ** 2
    return float(np.max(np.abs(norm - spec.norm0) / (1.0 + samples[:, 2] ** 2)))


def integrate_geodesic(spec, step, max_steps=10**6):
    """Integrate the reduced geodesic equations with adaptive RK4.

    The step in the affine parameter is ``step * min(1, (-t) / tdot)``.
    Integration stops at ``-t <= 10 * step`` (``"blow-up"``), at
    ``tdot > 1 / step`` (``"horizon"``) or when ``max_steps`` runs out.

    ``b_estimate`` extrapolates the final affine parameter over the step
    sizes ``step``, ``step/2`` and ``step/4``; the convergence order is
    estimated from the three runs rather than assumed.
    """
    step = float(step)
    if not step > 0:
        raise ParameterError("step must be positive")
    samples, reason = _run(spec, step, max_steps)
    s1 = float(samples[-1, 0])
    ext = {"s_final": [s1]}
    b_est = s1
    if reason != "steps":
        s2 = float(_run(spec, step / 2, 2 * max_steps)[0][-1, 0])
        s3 = float(_run(spec, step / 4, 4 * max_steps)[0][-1, 0])
        ext["s_final"] += [s2, s3]
        d1, d2 = s2 - s1, s3 - s2
        ratio = d2 / d1 if d1 != 0 else float("nan")
        ext["change_ratio"] = ratio
        if 0.0 < ratio < 1.0:
            b_est = s3 + d2 * ratio / (1.0 - ratio)
            ext["order"] = -math.log2(ratio)
        else:
            # no clean asymptotic regime: first-order Richardson
            b_est = s3 + d2
            ext["order"] = None
    return GeodesicTrace(
        samples, b_est, reason, step, s1, _drift(spec, samples),
        float(samples[-1, 3]), ext,
    )


# --------------------------------------------------------------------------
# Minkowski models
# --------------------------------------------------------------------------

def sphere_directions(K, dim, seed=0):
    """``K`` unit vectors in ``R^dim``; equally spaced on the circle, seeded otherwise."""
    if dim == 1:
        return np.array([[1.0 if k % 2 == 0 else -1.0] for k in range(K)])
    if dim == 2:
        ang = 2 * math.pi * (np.arange(K) + 0.5) / K
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    z = np.random.default_rng([int(seed), int(dim)]).standard_normal((K, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def cone_hypersurface(n, horizon, K=64, knots=9, seed=0):
    """Future light cone of the origin in ``n``-dimensional Minkowski space.

    Every ray carries ``h(t) = t**(n-2)`` (stored at power ``n-2``) with
    weight ``1/K`` and shares the vertex as tip.  Embeddings map gauge ``g``
    to ``(g, g * omega)``.
    """
    n = int(n)
    if n < 3:
        raise ParameterError(f"cone needs n >= 3, got {n}")
    horizon = float(horizon)
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    x = np.linspace(0.0, horizon, int(knots))
    vals = x ** (n - 2)
    rays = []
    for k, om in enumerate(sphere_directions(K, n - 1, seed)):
        emb = np.column_stack([x, x[:, None] * om[None, :]])
        rays.append(Ray(f"c{k}", 1.0 / K, GaugeInterval(0.0, math.inf, False, False),
                        RayDensity(x, vals, float(n - 2)), emb))
    return SyntheticNullHypersurface(tuple(rays), frozenset(r.id for r in rays), float(n))


def sphere_boundary_hypersurface(radius, horizon, ingoing=False, K=64, knots=9, seed=0):
    """Null congruence leaving a round 2-sphere in 4-d Minkowski space.

    The outgoing family has ``h(t) = ((radius + t) / radius)**2`` on
    ``[0, inf)``; the ingoing family has ``((radius - t) / radius)**2`` on
    ``[0, radius)``, which is future converging with ``theta = -2/radius``.
    Densities are normalized to 1 on the initial sphere.
    """
    R = float(radius)
    if not R > 0:
        raise ParameterError("radius must be positive")
    if ingoing:
        x = np.linspace(0.0, R, int(knots))
        g = (R - x) / R
        g[-1] = 0.0
        iv = GaugeInterval(0.0, R, True, False)
        areal = R - x
    else:
        x = np.linspace(0.0, float(horizon), int(knots))
        g = (R + x) / R
        iv = GaugeInterval(0.0, math.inf, True, False)
        areal = R + x
    rays = []
    for k, om in enumerate(sphere_directions(K, 3, seed)):
        emb = np.column_stack([x, areal[:, None] * om[None, :]])
        rays.append(Ray(f"s{k}", 1.0 / K, iv, RayDensity(x, g ** 2, 2.0), emb))
    return SyntheticNullHypersurface(tuple(rays), dimension_hint=4.0)


def warped_null_hypersurface(spec, step, K=8, knots=33):
    """Null rays of the warped product through one fiber circle of directions.

    Rays are the integrated null geodesic rotated around the fiber; the gauge
    is the affine parameter on ``[0, b)`` and the measure is uniform.  The
    embedding uses the chart ``(t, 1/(-t), cos r, sin r)``, which is proper on
    the spacetime, so sublevel sets of the gauge leave every compact set
    exactly when the rays end at finite ``b``.
    """
    trace = integrate_geodesic(spec, step)
    b = trace.b_estimate
    smp = trace.samples
    x = np.linspace(0.0, smp[-1, 0], int(knots))
    x = np.append(x, b) if b > x[-1] else x
    t = np.interp(x, smp[:, 0], smp[:, 1])
    r = np.interp(x, smp[:, 0], smp[:, 3])
    # past the last sample extrapolate toward the blow-up
    t = np.where(x > smp[-1, 0], -1e-300, t)
    rays = []
    for k in range(int(K)):
        phi = r + 2 * math.pi * k / K
        emb = np.column_stack([t, 1.0 / (-t), np.cos(phi), np.sin(phi)])
        rays.append(Ray(f"w{k}", 1.0 / K, GaugeInterval(0.0, float(x[-1]), True, False),
                        RayDensity(x, np.ones_like(x)), emb))
    return SyntheticNullHypersurface(tuple(rays)), trace
