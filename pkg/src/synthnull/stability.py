"""Sequences of hypersurfaces converging to a limit, and what passes to the limit.

Each step ``H_n`` comes with monotone gauge maps to and from the limit ``H_inf``
on every ray.  ``verify_hypotheses`` checks the quantitative hypotheses of the
stability theorems on a compact gauge window; ``limit_nce`` then checks that
the limit still satisfies the null energy condition, both by the randomized
search and by its one-dimensional shadow (concavity of the limit roots).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import GaugeInterval, Ray, RayDensity
from .errors import InputError, ParameterError
from .io import read_hypersurface, write_hypersurface
from .nec import DEFAULT_GRID, cd_check, localization_crosscheck, nce_search

__all__ = [
    "MonotoneMap",
    "ApproximationStep",
    "verify_hypotheses",
    "limit_nce",
    "kuratowski_limsup",
    "cdf_l1_distance",
    "wiggle_cone_sequence",
    "kink_sequence",
    "density_perturbation_sequence",
    "gauge_warp_sequence",
    "adversarial_sigma_sequence",
    "read_manifest",
    "write_manifest",
    "CURVE_SAMPLES",
]

CURVE_SAMPLES = 32
WINDOW_GRID = 257


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """Strictly increasing piecewise-linear map through ``(x[k], y[k])``.

    Outside the table the end pieces are extended linearly.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise InputError("a monotone map needs matching tables of length >= 2")
        if np.any(np.diff(x) <= 0):
            raise InputError("map abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def identity(cls, lo=0.0, hi=1.0):
        return cls(np.array([lo, hi]), np.array([lo, hi]))

    @classmethod
    def from_function(cls, fn, lo, hi, n=257):
        x = np.linspace(lo, hi, n)
        return cls(x, np.array([fn(v) for v in x], dtype=float))

    @property
    def monotone(self):
        return bool(np.all(np.diff(self.y) > 0))

    @property
    def slopes(self):
        return np.diff(self.y) / np.diff(self.x)

    def _piece(self, v):
        return np.clip(np.searchsorted(self.x, v, side="right") - 1, 0, self.x.size - 2)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        i = self._piece(v)
        return self.y[i] + self.slopes[i] * (v - self.x[i])

    def derivative(self, v, side="right"):
        """One-sided slope at ``v``."""
        v = np.asarray(v, dtype=float)
        i = np.searchsorted(self.x, v, side="right" if side == "right" else "left") - 1
        return self.slopes[np.clip(i, 0, self.x.size - 2)]

    def inverse(self):
        return MonotoneMap(self.y, self.x)

    def to_dict(self):
        return {"x": self.x.tolist(), "y": self.y.tolist()}


@dataclass
class ApproximationStep:
    """One element ``H_n`` of an approximating sequence."""

    index: int
    H: object
    to_limit: dict
    from_limit: dict
    eps: float

    def map_to(self, ray_id):
        return self.to_limit.get(ray_id) or _IDENTITY

    def map_from(self, ray_id):
        return self.from_limit.get(ray_id) or _IDENTITY


_IDENTITY = MonotoneMap(np.array([0.0, 1.0]), np.array([0.0, 1.0]))


def _window(limit, window):
    out = {}
    for r in limit.rays:
        if isinstance(window, dict) and r.id in window:
            out[r.id] = tuple(float(v) for v in window[r.id])
        elif window is not None and not isinstance(window, dict):
            out[r.id] = tuple(float(v) for v in window)
        else:
            out[r.id] = (r.interval.a, r.top)
    return out


def _sigma(step, limit, rid, lo, hi):
    """Largest density ratio ``d((g_n)# m_inf) / d m_n`` on the window image."""
    g = step.map_from(rid)
    r_inf = limit.ray(rid)
    r_n = step.H.ray(rid)
    xs = np.union1d(np.linspace(lo, hi, WINDOW_GRID),
                    r_inf.density.knots[(r_inf.density.knots >= lo) & (r_inf.density.knots <= hi)])
    inside = g.x[(g.x >= lo) & (g.x <= hi)]
    xs = np.union1d(xs, inside)
    inv = g.inverse()
    kn = r_n.density.knots
    ys = kn[(kn >= g(lo)) & (kn <= g(hi))]
    xs = np.union1d(xs, inv(ys))
    num = r_inf.weight * r_inf.density(xs)
    worst, at = -math.inf, None
    for side in ("left", "right"):
        dg = g.derivative(xs, side)
        den = r_n.weight * r_n.density(g(xs)) * dg
        with np.errstate(divide="ignore", invalid="ignore"):
            sig = np.where((num == 0) & (den == 0), 1.0, num / den)
        sig = np.nan_to_num(sig, nan=np.inf, posinf=np.inf)
        k = int(np.argmax(sig))
        if sig[k] > worst:
            worst, at = float(sig[k]), float(xs[k])
    return worst, at


def _segments(lo, hi, pieces):
    edges = np.linspace(lo, hi, pieces + 1)
    return list(zip(edges[:-1], edges[1:]))


def epsilon_causal_deviation(curve_values):
    """Largest ``|secant - total| / total`` over all sampled pairs of a curve.

    ``curve_values`` are gauge values at equally spaced parameters in [0, 1].
    """
    v = np.asarray(curve_values, dtype=float)
    tau = np.linspace(0.0, 1.0, v.size)
    total = v[-1] - v[0]
    if not total > 0:
        return math.inf
    dv = v[None, :] - v[:, None]
    dt = tau[None, :] - tau[:, None]
    iu = np.triu_indices(v.size, 1)
    sec = dv[iu] / dt[iu]
    return float(np.max(np.abs(sec - total)) / total)


@dataclass
class HypothesisReport:
    passed: bool
    hypotheses: dict
    steps: int

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def to_dict(self):
        return {"verdict": self.verdict, "steps": self.steps, "hypotheses": self.hypotheses}


def verify_hypotheses(limit, steps, window=None, pieces=4):
    """Check the stability hypotheses step by step.

    Parameters
    ----------
    limit : SyntheticNullHypersurface
    steps : list of ApproximationStep
    window : dict or (lo, hi), optional
        Compact gauge window on the limit; defaults to each ray's table.
    pieces : int
        Affine segments per ray window used for the curve condition.

    Returns
    -------
    HypothesisReport
        One entry per hypothesis with ``passed`` and the worst witness.
    """
    if not steps:
        raise InputError("the sequence is empty")
    win = _window(limit, window)
    ids = set(limit.ids)
    for st in steps:
        if set(st.H.ids) != ids:
            raise InputError(f"step {st.index}: rays are not in bijection with the limit")

    eps = [float(st.eps) for st in steps]
    hyp = {
        "eps_decreasing": {"passed": all(e > 0 for e in eps)
                           and all(b < a for a, b in zip(eps, eps[1:])), "eps": eps},
    }
    mono = {"passed": True, "witness": None}
    sigma = {"passed": True, "witness": None, "worst_excess": -math.inf}
    compat = {"passed": True, "witness": None, "worst_excess": -math.inf}
    curves = {"passed": True, "witness": None, "worst_excess": -math.inf,
              "samples": CURVE_SAMPLES}
    speeds = {"passed": True, "max_speed": 0.0}
    for st in steps:
        e = float(st.eps)
        for rid in limit.ids:
            lo, hi = win[rid]
            g, h = st.map_from(rid), st.map_to(rid)
            if not (g.monotone and h.monotone):
                mono["passed"] = False
                mono["witness"] = {"step": st.index, "ray": rid}
                continue
            s, at = _sigma(st, limit, rid, lo, hi)
            excess = s - (1.0 + e)
            if excess > sigma["worst_excess"]:
                sigma.update(worst_excess=excess,
                             witness={"step": st.index, "ray": rid, "gauge": at, "sigma": s})
            xs = np.linspace(lo, hi, WINDOW_GRID)
            dev = np.abs(h(g(xs)) - xs)
            k = int(np.argmax(dev))
            if dev[k] - e > compat["worst_excess"]:
                compat.update(worst_excess=float(dev[k] - e),
                              witness={"step": st.index, "ray": rid, "gauge": float(xs[k]),
                                       "deviation": float(dev[k])})
            for y0, y1 in _segments(float(g(lo)), float(g(hi)), pieces):
                tau = np.linspace(0.0, 1.0, CURVE_SAMPLES + 2)
                d = epsilon_causal_deviation(h(y0 + tau * (y1 - y0)))
                if d - e > curves["worst_excess"]:
                    curves.update(worst_excess=d - e,
                                  witness={"step": st.index, "ray": rid,
                                           "segment": [float(y0), float(y1)], "deviation": d})
            speeds["max_speed"] = max(speeds["max_speed"], float(np.max(h.slopes)),
                                      float(np.max(g.slopes)))
    sigma["passed"] = sigma["worst_excess"] <= 0
    compat["passed"] = compat["worst_excess"] <= 0
    curves["passed"] = curves["worst_excess"] <= 0
    speeds["passed"] = math.isfinite(speeds["max_speed"])
    hyp.update(monotone_maps=mono, sigma_bound=sigma, compatibility=compat,
               epsilon_causal=curves, bounded_speeds=speeds)
    return HypothesisReport(all(v["passed"] for v in hyp.values()), hyp, len(steps))


def limit_nce(limit, steps, N, trials=10_000, seed=0, window=None,
              step_trials=None, t_grid_size=DEFAULT_GRID):
    """NC^e(N) of the limit, gated on the stability hypotheses.

    The gate is ``verify_hypotheses`` plus a passing localization cross-check
    on every step.  When it fails the verdict is ``"inapplicable"`` and the
    limit is not judged.
    """
    N = float(N)
    if not N > 2:
        raise ParameterError(f"limit_nce needs N > 2, got {N}")
    hyp = verify_hypotheses(limit, steps, window)
    out = {"N": N, "trials": int(trials), "seed": int(seed), "hypotheses": hyp.to_dict()}
    if not hyp.passed:
        failed = sorted(k for k, v in hyp.hypotheses.items() if not v["passed"])
        out.update(verdict="inapplicable", reason=f"hypotheses failed: {failed}")
        return out
    step_trials = int(trials if step_trials is None else step_trials)
    gate = []
    for st in steps:
        loc = localization_crosscheck(st.H, N, step_trials, seed, t_grid_size)
        gate.append({"step": st.index, "cd": loc.cd_verdict, "nce": loc.nce_verdict})
        if loc.cd_verdict != "pass" or loc.nce_verdict == "fail":
            out.update(verdict="inapplicable", steps=gate,
                       reason=f"step {st.index} fails the null energy condition")
            return out
    search = nce_search(limit, N, trials, seed, t_grid_size)
    cds = [cd_check(r, N) for r in limit.rays]
    shadow = all(c.passed for c in cds)
    out.update(
        steps=gate,
        search=search.to_dict(),
        limit_roots_concave=shadow,
        cd=[c.to_dict() for c in cds],
        cdf_l1=[cdf_l1_distance(st, limit, window) for st in steps],
        verdict="pass" if (search.verdict != "fail" and shadow) else "fail",
    )
    return out


def cdf_l1_distance(step, limit, window=None, grid=2049):
    """Total over rays of the L1 distance between CDFs of ``(h_n)# m_n`` and ``m_inf``.

    Both CDFs are evaluated in limit gauge on a grid holding every knot and
    integrated with the trapezoid rule.
    """
    win = _window(limit, window)
    total = 0.0
    for rid in limit.ids:
        lo, hi = win[rid]
        r_inf, r_n = limit.ray(rid), step.H.ray(rid)
        h = step.map_to(rid)
        hinv = h.inverse()
        xs = np.linspace(lo, hi, grid)
        kn = r_inf.density.knots
        xs = np.union1d(xs, kn[(kn > lo) & (kn < hi)])
        F_inf = r_inf.weight * r_inf.density.integral(np.full_like(xs, lo), xs)
        y_lo = float(hinv(lo))
        F_n = r_n.weight * r_n.density.integral(np.full_like(xs, y_lo), hinv(xs))
        total += float(np.trapezoid(np.abs(F_n - F_inf), xs))
    return {"step": step.index, "eps": step.eps, "l1": total}


def kuratowski_limsup(sets, tol, tail=0.2, min_hits=2):
    """Finite surrogate of the Kuratowski upper limit of point sets.

    Parameters
    ----------
    sets : list of array_like
        Each entry is an array of points, shape ``(k, ...)``; curves are
        passed as sampled polylines and compared in the sup metric.
    tol : float
        Distance under which two points count as equal.
    tail : float
        Fraction of the sequence treated as its tail.
    min_hits : int
        A tail point is kept when it is within ``tol`` of at least this many
        tail sets (capped at the tail length), the finite stand-in for
        "infinitely many".

    Returns
    -------
    numpy.ndarray
        The kept points, without duplicates, in lexicographic order.
    """
    if len(sets) == 0:
        return np.empty((0,))
    arrs = [np.asarray(s, dtype=float) for s in sets]
    shape = next((a.shape[1:] for a in arrs if a.size), None)
    if shape is None:
        return np.empty((0,))
    flat = [a.reshape(a.shape[0], -1) if a.size else np.empty((0, int(np.prod(shape))))
            for a in arrs]
    n = len(flat)
    start = min(int(math.floor((1.0 - tail) * n)), n - 1)
    tail_sets = flat[start:]
    need = min(int(min_hits), len(tail_sets))
    cand = np.concatenate(tail_sets, axis=0)
    if cand.size == 0:
        return np.empty((0,) + tuple(shape))
    hits = np.zeros(cand.shape[0], dtype=int)
    for s in tail_sets:
        if s.shape[0] == 0:
            continue
        d = np.max(np.abs(cand[:, None, :] - s[None, :, :]), axis=2)
        hits += np.any(d <= tol, axis=1)
    kept = np.unique(cand[hits >= need], axis=0)
    return kept.reshape((-1,) + tuple(shape))


# --------------------------------------------------------------------------
# sequence builders
# --------------------------------------------------------------------------

def _replace_density(ray, knots, values, power, weight=None):
    return Ray(ray.id, ray.weight if weight is None else weight, ray.interval,
               RayDensity(knots, values, power), ray.embedding if
               ray.embedding is not None and len(knots) == ray.density.knots.size else None)


def _identity_maps(H):
    return {r.id: MonotoneMap.identity(r.interval.a, r.top) for r in H.rays}


def wiggle_cone_sequence(steps=6, N=4, horizon=2.0, K=16, knots=33):
    """Cone densities ``(t + 2**-n (2H/pi) sin(pi t / 2H))**(N-2)`` with identity maps.

    Every root is concave on ``[0, H]`` and lies above ``t``, so the density
    ratio to the limit cone is at most 1.
    """
    from .smooth import cone_hypersurface
    limit = cone_hypersurface(int(N), horizon, K=K, knots=knots)
    x = limit.rays[0].density.knots
    out = []
    for n in range(1, steps + 1):
        e = 2.0 ** -n
        g = x + e * (2 * horizon / math.pi) * np.sin(math.pi * x / (2 * horizon))
        rays = [_replace_density(r, x, g ** (N - 2), N - 2.0) for r in limit.rays]
        out.append(ApproximationStep(n, limit.replace_rays(rays), _identity_maps(limit),
                                     _identity_maps(limit), e))
    return limit, out


def kink_sequence(steps=6, N=4, knots=65):
    """Smooth concave roots converging to a root with a kink at gauge 1.

    ``g_n`` is the soft minimum of ``1 + t`` and ``2.5 - t/2`` at sharpness
    ``2**n``, shifted up by ``log 2 / 2**n`` so it stays above the limit.
    """
    from .corpus import single_ray
    x = np.linspace(0.0, 2.0, knots)
    x = np.union1d(x, [1.0])
    L1, L2 = 1.0 + x, 2.5 - 0.5 * x
    g_inf = np.minimum(L1, L2)
    limit = single_ray(x, g_inf ** (N - 2), N - 2.0, b=math.inf, dimension_hint=N)
    out = []
    for n in range(1, steps + 1):
        k = 2.0 ** n
        soft = -np.logaddexp(-k * L1, -k * L2) / k + math.log(2.0) / k
        H = single_ray(x, soft ** (N - 2), N - 2.0, b=math.inf, dimension_hint=N)
        out.append(ApproximationStep(n, H, _identity_maps(limit), _identity_maps(limit),
                                     2.0 ** -n))
    return limit, out


def density_perturbation_sequence(limit, psi, steps=6):
    """``h_n = h (1 + 2**-n psi)`` on the same knots with identity maps."""
    out = []
    for n in range(1, steps + 1):
        e = 2.0 ** -n
        rays = []
        for r in limit.rays:
            kn = r.density.knots
            vals = r.density.values * (1.0 + e * np.asarray(psi(r.id, kn), dtype=float))
            rays.append(_replace_density(r, kn, vals, r.density.power))
        out.append(ApproximationStep(n, limit.replace_rays(rays), _identity_maps(limit),
                                     _identity_maps(limit), e))
    return out


def gauge_warp_sequence(limit, steps=6, n_map=257):
    """Same hypersurface reached through the gauge map ``g -> g + 2**-n sin(g)``.

    ``H_n`` carries the pushed-forward density so that ``g_n`` is measure
    preserving; ``to_limit`` is the tabulated inverse.
    """
    out = []
    for n in range(1, steps + 1):
        e = 2.0 ** -n
        rays, fwd, back = [], {}, {}
        for r in limit.rays:
            lo, hi = r.interval.a, r.top
            g = MonotoneMap.from_function(lambda v: v + e * math.sin(v), lo, hi, n_map)
            kn = g.x
            dg = 1.0 + e * np.cos(kn)
            vals = np.asarray(r.density(kn)) / dg
            iv = r.interval
            b = float(g(iv.b)) if math.isfinite(iv.b) else math.inf
            new_iv = GaugeInterval(float(g.y[0]), b, iv.has_initial_point, iv.has_final_point)
            y = g.y.copy()
            if math.isfinite(b):
                y[-1] = b
            rays.append(Ray(r.id, r.weight, new_iv, RayDensity(y, vals)))
            fwd[r.id] = g
            back[r.id] = g.inverse()
        out.append(ApproximationStep(n, limit.replace_rays(rays), back, fwd, e))
    return out


def adversarial_sigma_sequence(limit, steps=6, sigma=1.5):
    """Steps whose densities are the limit's divided by ``sigma``, so ``sigma_n = sigma``."""
    return [
        ApproximationStep(n, limit.replace_rays([
            _replace_density(r, r.density.knots, r.density.values / sigma, r.density.power)
            for r in limit.rays]), _identity_maps(limit), _identity_maps(limit), 2.0 ** -n)
        for n in range(1, steps + 1)
    ]


# --------------------------------------------------------------------------
# manifest files
# --------------------------------------------------------------------------

def write_manifest(directory, limit, steps):
    """Write the limit, every step and their map tables under ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_hypersurface(d / "limit.snh", limit)
    entries = []
    for st in steps:
        name = f"step_{st.index:03d}.snh"
        write_hypersurface(d / name, st.H)
        entries.append({
            "index": st.index,
            "hypersurface": name,
            "eps": st.eps,
            "to_limit": {k: m.to_dict() for k, m in sorted(st.to_limit.items())},
            "from_limit": {k: m.to_dict() for k, m in sorted(st.from_limit.items())},
        })
    doc = {"format": "synthnull.sequence/1", "limit": "limit.snh", "steps": entries}
    with open(d / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return d / "manifest.json"


def read_manifest(path):
    """Read a sequence manifest; returns ``(limit, steps)``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    base = path.parent
    try:
        limit = read_hypersurface(base / doc["limit"])
        steps = []
        for i, e in enumerate(doc["steps"]):
            H = read_hypersurface(base / e["hypersurface"])
            maps = [{k: MonotoneMap(v["x"], v["y"]) for k, v in e.get(key, {}).items()}
                    for key in ("to_limit", "from_limit")]
            steps.append(ApproximationStep(int(e["index"]), H, maps[0], maps[1], float(e["eps"])))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed manifest ({exc})") from None
    return limit, steps
