"""Probability measures on a hypersurface in gauge coordinates.

A measure is a list of per-ray slices with piecewise-constant densities with
respect to the gauge, plus an optional atom at the shared tip.  Entropies are
taken relative to ``m = sum_a q_a h_a dg``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import SyntheticNullHypersurface, _readonly
from .errors import InputError, PreconditionError

__all__ = [
    "RayMeasureSlice",
    "HMeasure",
    "entropy",
    "entropy_power",
    "integrate_transverse",
    "DisintegrationReport",
    "disintegration_check",
    "entropy_table",
    "MASS_TOL",
]

MASS_TOL = 1e-12
ATOM_WIDTH = 1e-6


@dataclass(frozen=True, eq=False)
class RayMeasureSlice:
    """Restriction of a measure to one ray.

    ``values[k]`` is the density on ``[knots[k], knots[k+1]]``.  ``atoms`` is a
    tuple of ``(gauge, mass)`` pairs; they only arise from collisions in
    displacement interpolation.
    """

    ray_id: str
    knots: np.ndarray
    values: np.ndarray
    atoms: tuple = ()

    def __post_init__(self):
        knots = _readonly(self.knots)
        values = _readonly(self.values)
        if knots.ndim != 1 or values.ndim != 1 or knots.size != values.size + 1:
            raise InputError(f"slice {self.ray_id}: need len(knots) == len(values) + 1")
        if knots.size >= 2 and not np.all(np.diff(knots) > 0):
            raise InputError(f"slice {self.ray_id}: knots must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InputError(f"slice {self.ray_id}: densities must be finite and >= 0")
        atoms = tuple((float(g), float(m)) for g, m in self.atoms)
        if any(m < 0 for _, m in atoms):
            raise InputError(f"slice {self.ray_id}: negative atom mass")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "atoms", atoms)

    @property
    def piece_masses(self):
        return self.values * np.diff(self.knots)

    @property
    def mass(self):
        return float(np.sum(self.piece_masses)) + sum(m for _, m in self.atoms)

    @property
    def support(self):
        pos = np.nonzero(self.values > 0)[0]
        lo = [self.knots[pos[0]]] if pos.size else []
        hi = [self.knots[pos[-1] + 1]] if pos.size else []
        lo += [g for g, m in self.atoms if m > 0]
        hi += [g for g, m in self.atoms if m > 0]
        if not lo:
            return None
        return float(min(lo)), float(max(hi))

    def canonical(self, rtol=0.0):
        """Drop zero-mass edges and merge neighbours with equal density."""
        x, v = self.knots, self.values
        pos = np.nonzero(v > 0)[0]
        if pos.size == 0:
            return RayMeasureSlice(self.ray_id, x[:1], [], self.atoms)
        x = x[pos[0]: pos[-1] + 2]
        v = v[pos[0]: pos[-1] + 1]
        keep_x, keep_v = [x[0]], []
        for k in range(v.size):
            if keep_v and abs(v[k] - keep_v[-1]) <= rtol * max(v[k], keep_v[-1]):
                keep_x[-1] = x[k + 1]
            else:
                keep_v.append(v[k])
                keep_x.append(x[k + 1])
        return RayMeasureSlice(self.ray_id, keep_x, keep_v, self.atoms)


@dataclass(frozen=True, eq=False)
class HMeasure:
    """Probability measure on H: ray slices plus a tip atom."""

    slices: tuple
    tip_mass: float = 0.0

    def __post_init__(self):
        slices = tuple(self.slices)
        ids = [s.ray_id for s in slices]
        if len(set(ids)) != len(ids):
            raise InputError("one slice per ray")
        tip = float(self.tip_mass)
        if tip < 0:
            raise InputError("tip mass must be non-negative")
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "tip_mass", tip)

    # -- constructors -------------------------------------------------------
    @classmethod
    def uniform(cls, ray_id, lo, hi, mass=1.0):
        return cls((RayMeasureSlice(ray_id, [lo, hi], [mass / (hi - lo)]),))

    @classmethod
    def blocks(cls, spec, tip_mass=0.0):
        """Build from ``{ray_id: [(lo, hi, mass), ...]}`` uniform blocks."""
        slices = []
        for ray_id, blocks in spec.items():
            blocks = sorted((float(a), float(b), float(m)) for a, b, m in blocks)
            knots, values = [], []
            for a, b, m in blocks:
                if not b > a:
                    raise InputError(f"empty block [{a}, {b}] on ray {ray_id}")
                if knots and a < knots[-1]:
                    raise InputError(f"overlapping blocks on ray {ray_id}")
                if knots and a > knots[-1]:
                    values.append(0.0)
                    knots.append(a)
                elif not knots:
                    knots.append(a)
                values.append(m / (b - a))
                knots.append(b)
            slices.append(RayMeasureSlice(ray_id, knots, values))
        return cls(tuple(slices), tip_mass)

    @classmethod
    def from_atoms(cls, H, atoms, tip_mass=0.0, width=None):
        """Replace point masses ``[(ray_id, gauge, mass), ...]`` by narrow blocks.

        The block width defaults to ``1e-6`` times the ray's window length; the
        block sits to the right of the atom unless that leaves the interval.
        """
        spec = {}
        for ray_id, g, m in atoms:
            ray = H.ray(ray_id)
            eps = width if width is not None else ATOM_WIDTH * (ray.top - ray.interval.a)
            lo, hi = g, g + eps
            if hi > ray.interval.b:
                lo, hi = g - eps, g
            spec.setdefault(ray_id, []).append((lo, hi, m))
        return cls.blocks(spec, tip_mass)

    # -- accessors ----------------------------------------------------------
    def slice(self, ray_id):
        for s in self.slices:
            if s.ray_id == ray_id:
                return s
        return None

    def masses(self):
        return {s.ray_id: s.mass for s in self.slices}

    @property
    def total_mass(self):
        return sum(s.mass for s in self.slices) + self.tip_mass

    def has_atoms(self):
        return self.tip_mass > 0 or any(m > 0 for s in self.slices for _, m in s.atoms)

    def normalized(self):
        total = self.total_mass
        return HMeasure(
            tuple(
                RayMeasureSlice(s.ray_id, s.knots, s.values / total,
                                tuple((g, m / total) for g, m in s.atoms))
                for s in self.slices
            ),
            self.tip_mass / total,
        )

    def without_tip(self):
        return HMeasure(self.slices, 0.0)

    def validate(self, H=None, tol=MASS_TOL):
        if abs(self.total_mass - 1.0) > tol:
            raise InputError(f"total mass {self.total_mass!r} is not 1")
        if H is not None:
            _check_support(self, H)


def _check_support(mu, H):
    if mu.tip_mass > 0 and not H.has_tip():
        raise InputError("measure charges a tip that H does not have")
    for s in mu.slices:
        ray = H.ray(s.ray_id)
        sup = s.support
        if sup is None:
            continue
        if sup[0] < ray.interval.a or sup[1] > ray.interval.b:
            raise InputError(
                f"slice on ray {s.ray_id} supported on {sup}, outside "
                f"[{ray.interval.a}, {ray.interval.b}]"
            )


# --------------------------------------------------------------------------
# entropy
# --------------------------------------------------------------------------

def _slice_entropy(s, ray):
    """Closed-form contribution of one slice to Ent(mu | m)."""
    if any(m > 0 for _, m in s.atoms):
        return math.inf
    p = s.values
    widths = np.diff(s.knots)
    live = p > 0
    if not np.any(live):
        return 0.0
    lo, hi = s.knots[:-1][live], s.knots[1:][live]
    mean_log_h = ray.density.mean_log(lo, hi)
    if np.any(np.isneginf(mean_log_h)):
        return math.inf
    pl = p[live]
    terms = pl * widths[live] * (np.log(pl / ray.weight) - mean_log_h)
    return float(np.sum(terms))


def _slice_entropy_quad(s, ray, epsabs=1e-10):
    """Quadrature route for the same quantity, piece by piece."""
    if any(m > 0 for _, m in s.atoms):
        return math.inf
    total = 0.0
    dens = ray.density
    for k in range(s.values.size):
        p = s.values[k]
        if p == 0:
            continue
        a, b = s.knots[k], s.knots[k + 1]
        brk = [x for x in dens.knots if a < x < b]

        def integrand(x, p=p):
            h = float(dens(x))
            if h <= 0:
                return math.inf
            return p * math.log(p / (ray.weight * h))

        # A zero of h on a positive-length piece makes the integral diverge.
        probe = np.linspace(a, b, 9)
        if np.all(dens(probe) == 0):
            return math.inf
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(integrand, a, b, points=brk or None,
                                    epsabs=epsabs, epsrel=0.0, limit=200)
        total += val
    return total


def entropy(mu, H, method="exact"):
    """Relative entropy ``∫ rho log rho dm`` of ``mu`` against ``m``.

    Parameters
    ----------
    mu : HMeasure
    H : SyntheticNullHypersurface
    method : {"exact", "quad"}
        ``"exact"`` integrates the closed form piece by piece; ``"quad"``
        runs adaptive quadrature (absolute tolerance 1e-10 per piece) and
        serves as an independent check.

    Returns
    -------
    float
        ``math.inf`` if ``mu`` has an atom or charges a set where the
        reference density vanishes.
    """
    _check_support(mu, H)
    if mu.has_atoms():
        return math.inf
    fn = _slice_entropy if method == "exact" else _slice_entropy_quad
    total = 0.0
    for s in mu.slices:
        if s.mass == 0:
            continue
        ray = H.ray(s.ray_id)
        e = fn(s, ray)
        if math.isinf(e):
            return math.inf
        total += e
    return total


def entropy_power(mu, H, M):
    """``exp(-Ent(mu|m) / M)``, and exactly 0 when the entropy is infinite."""
    ent = entropy(mu, H)
    return _entropy_power_value(ent, M)


def _entropy_power_value(ent, M):
    if math.isinf(ent):
        return 0.0
    return math.exp(-ent / M)


def entropy_table(mu, H):
    """Rows ``(ray, mass, entropy contribution)`` for CSV export."""
    rows = []
    for s in mu.slices:
        ray = H.ray(s.ray_id)
        rows.append((s.ray_id, s.mass, _slice_entropy(s, ray) if s.mass else 0.0))
    return rows


def integrate_transverse(mu, phi):
    """``∫ phi dmu`` for a function constant along rays."""
    if mu.tip_mass > 0:
        raise PreconditionError("transverse integrals need a measure without tip mass")
    get = phi if callable(phi) else phi.__getitem__
    return float(sum(get(s.ray_id) * s.mass for s in mu.slices))


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

@dataclass
class DisintegrationReport:
    passed: bool
    reasons: list = field(default_factory=list)

    @property
    def offending_rays(self):
        return sorted({rid for _, ids in self.reasons for rid in ids})

    def to_dict(self):
        return {
            "passed": self.passed,
            "reasons": [{"reason": r, "rays": list(ids)} for r, ids in self.reasons],
        }


def disintegration_check(H):
    """Check that ``H`` is a valid disintegrated measure.

    Verifies the quotient weights form a probability, densities are finite
    and non-negative at every knot, and every ray carries finite mass on its
    tabulated window.  Endpoint atoms cannot be expressed in the data model.
    """
    reasons = []
    total = float(np.sum(H.weights))
    if abs(total - 1.0) > MASS_TOL:
        reasons.append(("quotient not probability", []))
    neg = [r.id for r in H.rays if np.any(r.density.values < 0)]
    if neg:
        reasons.append(("negative density", neg))
    bad = [r.id for r in H.rays
           if not np.all(np.isfinite(r.density.values))
           or not math.isfinite(r.density.total_mass())]
    if bad:
        reasons.append(("infinite mass on truncated window", bad))
    return DisintegrationReport(not reasons, reasons)
