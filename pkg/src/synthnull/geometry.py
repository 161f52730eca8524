"""Cross-sections: Minkowski content, area monotonicity, mean curvature and the ray-length bound.

A cross-section picks at most one gauge value on each ray.  Its Minkowski
content is ``sum_a q_a h_a(a_a)`` in closed form; the numeric estimate divides
the exact mass of the future ``eps``-collar by ``eps`` and is kept as a
cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import gauge_measure_transform
from .errors import InputError, ParameterError, PreconditionError
from .nec import cd_check

__all__ = [
    "CrossSection",
    "ContentEstimate",
    "minkowski_content",
    "hawking_check",
    "content_covariance",
    "theta_estimate",
    "penrose_check",
    "is_proper",
    "area_curve",
    "DEFAULT_EPS_GRID",
]

DEFAULT_EPS_GRID = (1e-2, 1e-3, 1e-4)
CONTENT_TOL = 1e-9
PENROSE_TOL = 1e-9


@dataclass(frozen=True)
class CrossSection:
    """Gauge value of the section on each ray it meets.

    Rays missing from ``points`` lie outside the section.
    """

    points: Mapping

    def __post_init__(self):
        pts = {str(k): float(v) for k, v in dict(self.points).items()}
        bad = [k for k, v in pts.items() if not math.isfinite(v)]
        if bad:
            raise InputError(f"section gauge values must be finite on rays {sorted(bad)}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def at(cls, H, gauge, ids=None):
        """Section at the same gauge value on every ray (or on ``ids``)."""
        ids = H.ids if ids is None else ids
        return cls({k: gauge for k in ids})

    @classmethod
    def initial(cls, H):
        """Section through the initial point of every ray."""
        return cls({r.id: r.interval.a for r in H.rays})

    def __len__(self):
        return len(self.points)

    def ids(self):
        return sorted(self.points)

    def validate(self, H):
        for k, g in self.points.items():
            ray = H.ray(k)
            iv = ray.interval
            ok = (iv.a <= g if iv.has_initial_point else iv.a < g) and g < iv.b
            if not ok:
                raise InputError(
                    f"section point {g} is outside the interval of ray {k}"
                )
        return self

    def transformed(self, tp):
        return CrossSection({k: float(tp.apply(k, g)) for k, g in self.points.items()})


def _members(S, H, A):
    ids = S.ids() if A is None else sorted(set(A) & set(S.points))
    return [H.ray(k) for k in ids]


def _eps_grid(eps_grid):
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size < 2:
        raise ParameterError("eps_grid needs at least two values")
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ParameterError("eps_grid must be positive and strictly decreasing")
    return eps


def _shrink(eps, rays, S):
    """Shrink ``eps`` so every collar stays inside its ray."""
    room = min((r.interval.b - S.points[r.id] for r in rays), default=math.inf)
    if eps <= room:
        return eps
    new = 0.5 * room
    warnings.warn(f"collar width {eps:g} leaves a ray; shrunk to {new:g}", stacklevel=3)
    return new


def _collar_masses(rays, S, eps):
    """Per-ray ``q_a * m_a([a_a, a_a + eps])``."""
    return np.array([
        r.weight * float(r.density.integral(S.points[r.id], S.points[r.id] + eps))
        for r in rays
    ])


@dataclass
class ContentEstimate:
    numeric: float
    closed_form: float
    eps_used: list
    per_eps: list

    @property
    def rel_gap(self):
        scale = max(abs(self.closed_form), 1e-300)
        if self.closed_form == 0.0:
            return abs(self.numeric)
        return abs(self.numeric - self.closed_form) / scale

    def to_dict(self):
        return {
            "numeric": self.numeric,
            "closed_form": self.closed_form,
            "rel_gap": self.rel_gap,
            "eps_used": self.eps_used,
            "per_eps": self.per_eps,
        }


def minkowski_content(S, H, eps_grid=DEFAULT_EPS_GRID, A=None):
    """Future Minkowski content of ``S`` restricted to the rays ``A``.

    The limsup is realized as the maximum of ``m(S_eps ∩ R(A)) / eps`` over
    the two smallest grid values; densities are integrated exactly.

    Returns
    -------
    ContentEstimate
        ``closed_form`` is ``sum q_a h_a(a_a)`` and is authoritative.
    """
    eps = _eps_grid(eps_grid)
    S.validate(H)
    rays = _members(S, H, A)
    if not rays:
        return ContentEstimate(0.0, 0.0, [], [])
    closed = float(sum(r.weight * float(r.density(S.points[r.id])) for r in rays))
    used, vals = [], []
    for e in eps[-2:]:
        e = _shrink(float(e), rays, S)
        used.append(e)
        vals.append(float(_collar_masses(rays, S, e).sum() / e))
    return ContentEstimate(max(vals), closed, used, vals)


def _positive_support(ray):
    """True when the density is positive on the open ray (full support).

    Zeros at the end points are allowed; between positive knots the root is
    linear, hence positive.
    """
    d = ray.density
    v = d.values
    inner = v[1:] if ray.interval.complete else v[1:-1]
    if np.any(inner <= 0):
        return False
    if ray.interval.complete and d.knots.size >= 2 and d._slopes[-1] < 0:
        # the extrapolated root reaches zero at a finite gauge
        return False
    return True


@dataclass
class HawkingReport:
    verdict: str
    content1: float | None = None
    content2: float | None = None
    reasons: list = field(default_factory=list)
    N: float | None = None
    tolerance: float = CONTENT_TOL

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "content1": self.content1,
            "content2": self.content2,
            "reasons": self.reasons,
            "N": self.N,
            "tolerance": self.tolerance,
        }


def _hawking_gate(H, N, rays):
    reasons = []
    for r in rays:
        if not r.interval.complete:
            reasons.append(f"ray {r.id} is not future complete")
        if not _positive_support(r):
            reasons.append(f"ray {r.id}: density not positive")
        cd = cd_check(r, N)
        if not cd.passed:
            reasons.append(f"ray {r.id} fails CD(0, N-1) at gauge {cd.gauge}")
    return reasons


def hawking_check(S1, S2, H, N):
    """Area monotonicity between two nested sections.

    Requires ``S1`` to lie ray-wise before ``S2`` on a subset of its rays.
    Instances outside the theorem's hypotheses get verdict ``"inapplicable"``.
    """
    N = float(N)
    if not N > 2:
        raise ParameterError(f"hawking_check needs N > 2, got {N}")
    S1.validate(H)
    S2.validate(H)
    extra = set(S1.points) - set(S2.points)
    if extra:
        raise PreconditionError(f"S1 meets rays outside S2: {sorted(extra)}")
    late = [k for k, g in S1.points.items() if g > S2.points[k]]
    if late:
        raise PreconditionError(f"S1 lies after S2 on rays {sorted(late)}")
    rays = _members(S2, H, None)
    reasons = _hawking_gate(H, N, rays)
    if reasons:
        return HawkingReport("inapplicable", reasons=reasons, N=N)
    c1 = minkowski_content(S1, H).closed_form
    c2 = minkowski_content(S2, H).closed_form
    verdict = "pass" if c1 <= c2 + CONTENT_TOL else "fail"
    return HawkingReport(verdict, c1, c2, N=N)


def content_covariance(S, H, tp, measure_exponent=-1.0):
    """Compare closed-form contents before and after a gauge/measure change.

    Under ``G -> f + h G`` with ``m -> h**k m`` the content changes by the
    factor ``h**(k-1)`` on each ray, so it is invariant only for ``k = +1``
    (or ``h ≡ 1``).  The report states the observed and the predicted ratio.
    """
    before = minkowski_content(S, H).closed_form
    H2 = gauge_measure_transform(H, tp, measure_exponent)
    after = minkowski_content(S.transformed(tp), H2).closed_form
    if not (math.isfinite(before) and math.isfinite(after)):
        return {"verdict": "inapplicable", "reason": "infinite content"}
    predicted = float(sum(
        r.weight * float(r.density(S.points[r.id])) * tp.scale(r.id) ** (measure_exponent - 1.0)
        for r in _members(S, H, None)
    ))
    equal = abs(after - before) <= CONTENT_TOL * max(1.0, abs(before))
    return {
        "verdict": "pass" if equal else "fail",
        "before": before,
        "after": after,
        "predicted_after": predicted,
        "measure_exponent": measure_exponent,
        "tolerance": CONTENT_TOL,
    }


def _log_derivatives(S, rays):
    h0 = np.array([float(r.density(S.points[r.id])) for r in rays])
    dead = [r.id for r, v in zip(rays, h0) if v <= 0]
    if dead:
        raise PreconditionError(f"degenerate section: h vanishes on rays {dead}")
    dh = np.array([float(r.density.right_derivative(S.points[r.id])) for r in rays])
    return h0, {r.id: float(d / v) for r, d, v in zip(rays, dh, h0)}


@dataclass
class ThetaEstimate:
    closed_form: float
    numeric: float
    per_ray: dict
    subsets: int

    def to_dict(self):
        return {
            "closed_form": self.closed_form,
            "numeric": self.numeric,
            "per_ray": self.per_ray,
            "subsets": self.subsets,
        }


def theta_estimate(S, H, eps_grid=DEFAULT_EPS_GRID, subsets=32, seed=0):
    """Mean-curvature bound of a section.

    The closed form is the largest ``h_a'(a_a+) / h_a(a_a)`` over the rays
    of the section.  The numeric value takes, over ray subsets ``A`` (every
    singleton plus ``subsets`` random unions), the largest

        [m(S_eps ∩ R(A)) - eps * content_A] / (eps**2 / 2 * content_A)

    at the two smallest grid values.
    """
    eps = _eps_grid(eps_grid)
    S.validate(H)
    rays = _members(S, H, None)
    if not rays:
        raise PreconditionError("empty section")
    h0, per_ray = _log_derivatives(S, rays)
    closed = max(per_ray.values())

    w = np.array([r.weight for r in rays])
    cols = []
    for e in eps[-2:]:
        e = _shrink(float(e), rays, S)
        cols.append((e, _collar_masses(rays, S, e)))
    rng = np.random.default_rng([int(seed), 7])
    masks = [np.eye(len(rays), dtype=bool)[i] for i in range(len(rays))]
    for _ in range(int(subsets)):
        m = rng.random(len(rays)) < 0.5
        if m.any():
            masks.append(m)
    best = -math.inf
    for m in masks:
        content = float(np.sum(w[m] * h0[m]))
        for e, collar in cols:
            val = (float(np.sum(collar[m])) - e * content) / (0.5 * e * e * content)
            best = max(best, val)
    return ThetaEstimate(closed, best, per_ray, len(masks))


@dataclass
class PenroseReport:
    verdict: str
    N: float
    theta: float | None = None
    bound: float | None = None
    max_b: float | None = None
    slack: float | None = None
    compact: bool = False
    rays: list = field(default_factory=list)
    reasons: list = field(default_factory=list)
    tolerance: float = PENROSE_TOL

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "N": self.N,
            "theta": self.theta,
            "bound": self.bound,
            "max_b": self.max_b,
            "slack": self.slack,
            "compact": self.compact,
            "rays": self.rays,
            "reasons": self.reasons,
            "tolerance": self.tolerance,
        }

    def table(self):
        return [(r["ray"], r["b"], r["bound"], r["slack"]) for r in self.rays]


def penrose_check(H, N, S=None, theta=None):
    """Ray-length bound ``b_a <= (N-2) / (-theta)`` for a future-converging section.

    ``S`` defaults to the initial section, which must sit at gauge 0.  When
    ``theta`` is given it must bound the section's log-derivatives from above.
    Instances failing a hypothesis are reported ``"inapplicable"``; a
    non-negative ``theta`` gives ``"not future converging"``.
    """
    N = float(N)
    if not N > 2:
        raise ParameterError(f"penrose_check needs N > 2, got {N}")
    S = CrossSection.initial(H) if S is None else S
    S.validate(H)
    reasons = []
    rays = _members(S, H, None)
    missing = sorted(set(H.ids) - set(S.points))
    if missing:
        reasons.append(f"section misses rays {missing}")
    for r in rays:
        if S.points[r.id] != 0.0 or r.interval.a != 0.0:
            reasons.append(f"ray {r.id}: section is not at the gauge infimum 0")
        if not _positive_support(r):
            reasons.append(f"ray {r.id}: density not positive")
        cd = cd_check(r, N)
        if not cd.passed:
            reasons.append(f"ray {r.id} fails CD(0, N-1) at gauge {cd.gauge}")
    if reasons:
        return PenroseReport("inapplicable", N, reasons=reasons)
    est = max(_log_derivatives(S, rays)[1].values())
    if theta is None:
        theta = est
    elif est > float(theta) + PENROSE_TOL:
        return PenroseReport(
            "inapplicable", N, theta=float(theta),
            reasons=[f"theta {theta} is below the section's mean curvature {est}"],
        )
    theta = float(theta)
    if not theta < 0:
        return PenroseReport("not future converging", N, theta=theta,
                             reasons=[f"theta = {theta} >= 0"])
    bound = (N - 2.0) / (-theta)
    table = []
    for r in rays:
        b = r.interval.b
        table.append({"ray": r.id, "b": b, "bound": bound, "slack": bound - b})
    max_b = max(t["b"] for t in table)
    ok = max_b <= bound + PENROSE_TOL
    return PenroseReport(
        "pass" if ok else "fail", N, theta, bound, max_b, bound - max_b,
        compact=bool(ok and math.isfinite(max_b)), rays=table,
    )


def is_proper(H, horizon):
    """Whether gauge sublevel sets up to ``horizon`` are precompact.

    A ray fails when its interval ends at a finite ``b <= horizon`` that does
    not belong to the ray (the sublevel set is not closed), or when its
    embedded knots below the horizon are not finite.
    """
    missing = [r.id for r in H.rays if r.embedding is None]
    if missing:
        raise PreconditionError(f"undecidable without embedding (rays {missing})")
    horizon = float(horizon)
    for r in H.rays:
        iv = r.interval
        if iv.a > horizon:
            continue
        if math.isfinite(iv.b) and iv.b <= horizon and not iv.has_final_point:
            return False
        below = r.density.knots <= horizon
        if not np.all(np.isfinite(r.embedding[below])):
            return False
    return True


def area_curve(H, gauges, ids=None):
    """Closed-form content of the constant-gauge sections ``G = c`` for each ``c``.

    Rays whose interval does not contain ``c`` are left out of that section.
    """
    rows = []
    for c in np.asarray(gauges, dtype=float):
        total = 0.0
        for r in (H.rays if ids is None else [H.ray(k) for k in ids]):
            iv = r.interval
            if iv.a <= c < iv.b:
                total += r.weight * float(r.density(c))
        rows.append((float(c), total))
    return rows
