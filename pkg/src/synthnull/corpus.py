"""Seeded random instances used by the test corpus and the fuzzers."""

from __future__ import annotations

import math

import numpy as np

from .core import GaugeInterval, Ray, RayDensity, SyntheticNullHypersurface

__all__ = [
    "concave_root_profile",
    "random_concave_instance",
    "random_bump_instance",
    "random_penrose_instance",
    "single_ray",
]


def single_ray(knots, values, power=1.0, b=None, ray_id="r", weight=1.0,
               has_final_point=False, dimension_hint=None):
    """One-ray hypersurface; ``b`` defaults to the last knot."""
    knots = np.asarray(knots, dtype=float)
    b = float(knots[-1]) if b is None else b
    iv = GaugeInterval(float(knots[0]), b, True, has_final_point)
    ray = Ray(ray_id, weight, iv, RayDensity(knots, values, power))
    return SyntheticNullHypersurface((ray,), dimension_hint=dimension_hint)


def concave_root_profile(rng, x, pieces=3, floor=0.05):
    """Positive concave piecewise-linear function on the knots ``x``.

    Built as the minimum of a few affine functions, shifted so its minimum
    over ``x`` equals ``floor`` times its maximum.
    """
    x = np.asarray(x, dtype=float)
    span = x[-1] - x[0]
    slopes = np.sort(rng.uniform(-2.0, 2.0, pieces))[::-1] / span
    anchors = np.sort(rng.uniform(x[0], x[-1], pieces))
    vals = np.min(
        [1.0 + s * (x - c) for s, c in zip(slopes, anchors)], axis=0
    )
    top = vals.max()
    vals = vals - vals.min() + floor * max(top - vals.min(), 1.0)
    return vals / vals.max()


def _knots(rng, lo, hi, k):
    inner = np.sort(rng.uniform(lo, hi, k - 2))
    x = np.concatenate([[lo], inner, [hi]])
    # keep knots apart so the concavity checks stay well conditioned
    min_gap = 1e-3 * (hi - lo)
    for i in range(1, x.size):
        x[i] = max(x[i], x[i - 1] + min_gap)
    x[-1] = max(x[-1], hi)
    if x[-1] > hi:
        x = lo + (x - lo) * (hi - lo) / (x[-1] - lo)
    x[-1] = hi
    return x


def random_concave_instance(rng, N, rays=None, complete=None):
    """Hypersurface whose rays all satisfy CD(0, N-1).

    Each ray carries a concave root profile ``g`` and density ``g**(N-2)``
    with matching interpolation power, so its tabulated density is CD(0, N-1)
    everywhere, not just at knots.  Complete rays (``b = inf``) get
    non-decreasing profiles, as concavity forces on a half-line.
    """
    R = int(rng.integers(2, 5)) if rays is None else rays
    w = rng.dirichlet(np.ones(R))
    out = []
    for i in range(R):
        is_complete = (rng.random() < 0.5) if complete is None else complete
        a = float(rng.uniform(-1.0, 1.0))
        top = a + float(rng.uniform(0.5, 4.0))
        x = _knots(rng, a, top, int(rng.integers(3, 10)))
        g = concave_root_profile(rng, x)
        if is_complete:
            g = np.maximum.accumulate(g)
            # running max of a concave function is concave only up to its peak
            g = np.minimum(g, g[np.argmax(g)])
        vals = g ** (N - 2.0)
        iv = GaugeInterval(a, math.inf if is_complete else top)
        out.append(Ray(f"r{i}", float(w[i]), iv, RayDensity(x, vals, N - 2.0)))
    return SyntheticNullHypersurface(tuple(out), dimension_hint=N)


def random_bump_instance(rng, N, rays=None, bump_weight=None):
    """Concave instance with one ray replaced by a strictly convex root profile."""
    H = random_concave_instance(rng, N, rays)
    R = len(H.rays)
    j = int(rng.integers(0, R))
    w = H.weights.copy()
    if bump_weight is not None:
        rest = np.delete(w, j)
        w = np.insert(rest / rest.sum() * (1.0 - bump_weight), j, bump_weight)
    rays = []
    for i, ray in enumerate(H.rays):
        if i == j:
            x = ray.density.knots
            span = x[-1] - x[0]
            c = x[0] + span * rng.uniform(0.3, 0.7)
            amp = rng.uniform(0.5, 2.0)
            fine = np.linspace(x[0], x[-1], 17)
            g = 1.0 + amp * ((fine - c) / span) ** 2
            ray = Ray(ray.id, float(w[i]), ray.interval,
                      RayDensity(fine, g ** (N - 2.0), N - 2.0))
        else:
            ray = Ray(ray.id, float(w[i]), ray.interval, ray.density)
        rays.append(ray)
    return H.replace_rays(rays)


def random_penrose_instance(rng, N=None):
    """Instance meeting the Penrose preconditions, or close to meeting them.

    Rays start at gauge 0 with a decreasing concave root profile that
    vanishes at the right end ``b``; the interpolation power is drawn
    independently of ``N`` so both matched and mismatched tables occur.
    """
    N = float(rng.uniform(2.2, 6.0)) if N is None else N
    R = int(rng.integers(1, 5))
    w = rng.dirichlet(np.ones(R))
    power = N - 2.0 if rng.random() < 0.5 else float(rng.uniform(0.5, 4.0))
    rays = []
    for i in range(R):
        b = float(rng.uniform(0.2, 5.0))
        x = _knots(rng, 0.0, b, int(rng.integers(3, 9)))
        # concave and decreasing with g(b) = 0: minimum of decreasing lines
        slopes = rng.uniform(0.05, 3.0, 3)
        offsets = np.concatenate([[0.0], rng.uniform(0.0, 2.0, 2)])
        g = np.min([c + s * (b - x) for s, c in zip(slopes, offsets)], axis=0)
        g[-1] = 0.0
        vals = g ** power if rng.random() < 0.8 else (g ** power) * rng.uniform(0.9, 1.1, g.size)
        vals[-1] = 0.0
        rays.append(Ray(f"r{i}", float(w[i]), GaugeInterval(0.0, b, True, False),
                        RayDensity(x, vals, power)))
    return SyntheticNullHypersurface(tuple(rays), dimension_hint=N), N
