"""Synthetic null energy condition: entropy-power concavity and its localization.

``nce_test`` evaluates ``t -> U_{N-1}(mu_t | m)`` along the monotone plan of a
single pair of marginals.  ``nce_search`` samples many block-shaped pairs and
evaluates them in closed form, in batches; any trial it flags is replayed
through ``nce_test`` so the reported witness comes from the general path.
``cd_check`` is the one-dimensional side: concavity of ``h**(1/(N-2))`` on each
ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import TransversePair, gauge_measure_transform
from .errors import InfeasibleError, ParameterError
from .measures import HMeasure, RayMeasureSlice, entropy, _entropy_power_value
from .transport import (
    DynamicalPlan, Segments, dynamical_plan, feasibility, interpolate,
)

__all__ = [
    "CONCAVITY_TOL",
    "CDResult",
    "ConcavityReport",
    "SearchResult",
    "cd_check",
    "concavity_violation",
    "nce_test",
    "nce_search",
    "sample_block_pairs",
    "localization_crosscheck",
    "invariance_check",
    "transform_measure",
    "transform_plan",
]

CONCAVITY_TOL = 1e-8
CD_TOL = 1e-12
DEFAULT_GRID = 64
BATCH = 1000


# --------------------------------------------------------------------------
# one-dimensional curvature-dimension check
# --------------------------------------------------------------------------

@dataclass
class CDResult:
    passed: bool
    ray_id: str
    N: float
    knot_index: int | None = None
    gauge: float | None = None
    defect: float = 0.0

    def to_dict(self):
        return {"ray": self.ray_id, "passed": self.passed, "N": self.N,
                "knot_index": self.knot_index, "gauge": self.gauge, "defect": self.defect}


def cd_check(ray, N):
    """Concavity of ``G = h**(1/(N-2))`` along a ray.

    The test is exact for the stored interpolant.  With the density stored at
    power ``N - 2`` the root ``G`` is piecewise linear and the three-point
    chord test at the knots decides concavity.  For any other power ``G`` is
    a power ``k`` of a piecewise-linear function: pieces with ``k > 1`` and
    nonzero slope are strictly convex, and at each interior knot the one-sided
    derivatives must not increase.
    """
    N = float(N)
    if not N > 2:
        raise ParameterError(f"cd_check needs N > 2, got {N}")
    d = ray.density
    x = d.knots
    k = d.power / (N - 2.0)
    if x.size < 2:
        return CDResult(True, ray.id, N)
    if k == 1.0:
        if x.size < 3:
            return CDResult(True, ray.id, N)
        g = d.roots
        lam = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
        defect = (1.0 - lam) * g[:-2] + lam * g[2:] - g[1:-1]
        j = int(np.argmax(defect))
        worst = float(defect[j])
        if worst > CD_TOL:
            return CDResult(False, ray.id, N, j + 1, float(x[j + 1]), worst)
        return CDResult(True, ray.id, N, defect=max(worst, 0.0))

    u, s, dx = d.roots, d._slopes, np.diff(x)
    G = u ** k
    # convexity inside pieces: midpoint gap of (u0 + s x)^k
    mid = (0.5 * (u[:-1] + u[1:])) ** k
    inner = np.where((k > 1.0) & (s != 0.0), 0.5 * (G[:-1] + G[1:]) - mid, 0.0)
    # one-sided derivatives of G at the ends of each piece
    with np.errstate(divide="ignore", invalid="ignore"):
        d_left = np.where(s == 0.0, 0.0, k * s * u[:-1] ** (k - 1.0))
        d_right = np.where(s == 0.0, 0.0, k * s * u[1:] ** (k - 1.0))
        jump = d_left[1:] - d_right[:-1]
        kink = np.where(jump > 0, 0.5 * np.minimum(dx[:-1], dx[1:]) * jump, 0.0)
    kink = np.nan_to_num(kink, nan=np.inf)
    defect = np.concatenate([inner, kink])
    j = int(np.argmax(defect))
    worst = float(defect[j])
    if worst > CD_TOL:
        if j < inner.size:
            idx, where = j, 0.5 * (x[j] + x[j + 1])
        else:
            idx = j - inner.size + 1
            where = x[idx]
        return CDResult(False, ray.id, N, idx, float(where), worst)
    return CDResult(True, ray.id, N, defect=max(worst, 0.0))


# --------------------------------------------------------------------------
# concavity of a sampled curve
# --------------------------------------------------------------------------

def concavity_violation(ts, values):
    """Largest amount by which a chord lies above the sampled curve.

    Returns ``(violation, (t_left, t_right, t_mid))``.  The maximum over all
    triples equals the gap to the least concave majorant, found with an
    upper hull.
    """
    ts = np.asarray(ts, dtype=float)
    v = np.asarray(values, dtype=float)
    hull = []
    for k in range(ts.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j when it lies on or below the chord from i to k
            cross = (ts[j] - ts[i]) * (v[k] - v[i]) - (v[j] - v[i]) * (ts[k] - ts[i])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    best, witness = 0.0, None
    for a, b in zip(hull[:-1], hull[1:]):
        if b - a < 2:
            continue
        lam = (ts[a + 1:b] - ts[a]) / (ts[b] - ts[a])
        chord = (1.0 - lam) * v[a] + lam * v[b]
        gap = chord - v[a + 1:b]
        k = int(np.argmax(gap))
        if gap[k] > best:
            best = float(gap[k])
            witness = (float(ts[a]), float(ts[b]), float(ts[a + 1 + k]))
    return best, witness


@dataclass
class ConcavityReport:
    t_grid: list
    values: list
    max_violation: float
    verdict: str
    witness: tuple | None = None
    vacuous: bool = False
    N: float | None = None
    tolerance: float = CONCAVITY_TOL
    entropies: list | None = None

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "vacuous": self.vacuous,
            "N": self.N,
            "tolerance": self.tolerance,
            "max_violation": self.max_violation,
            "witness": list(self.witness) if self.witness else None,
            "t_grid": list(self.t_grid),
            "values": list(self.values),
        }


def _report(ts, U, N, ents=None):
    viol, wit = concavity_violation(ts, U)
    verdict = "fail" if viol > CONCAVITY_TOL else "pass"
    return ConcavityReport(list(map(float, ts)), list(map(float, U)), viol, verdict,
                           wit if verdict == "fail" else None, N=N,
                           entropies=None if ents is None else list(map(float, ents)))


def _check_N(N):
    N = float(N)
    if not N > 1:
        raise ParameterError(f"entropy-power concavity needs N > 1, got {N}")
    return N


def nce_test(H, N, mu0, mu1, t_grid_size=DEFAULT_GRID):
    """Concavity of ``U_{N-1}`` along the monotone gauge-causal plan.

    Raises :class:`InfeasibleError` when no causal coupling exists.  When both
    marginals have infinite entropy the inequality holds trivially and the
    report is flagged ``vacuous``.
    """
    N = _check_N(N)
    res = feasibility(mu0, mu1, H)
    if not res:
        raise InfeasibleError(f"no causal coupling: {res.obstruction.reason}", res.obstruction)
    ts = np.linspace(0.0, 1.0, int(t_grid_size) + 1)
    e0, e1 = entropy(mu0, H), entropy(mu1, H)
    if math.isinf(e0) and math.isinf(e1):
        return ConcavityReport(list(map(float, ts)), [0.0] * ts.size, 0.0, "pass",
                               vacuous=True, N=N)
    plan = dynamical_plan(res.witness, H)
    ents = np.array([entropy(interpolate(plan, float(t)), H) for t in ts])
    ents[0], ents[-1] = e0, e1
    U = np.array([_entropy_power_value(e, N - 1.0) for e in ents])
    return _report(ts, U, N, ents)


# --------------------------------------------------------------------------
# randomized search over block pairs
# --------------------------------------------------------------------------

@dataclass
class BlockPairs:
    """Flat table of per-ray block pairs; ``trial`` indexes the owning trial."""

    trial: np.ndarray
    ray: np.ndarray
    mass: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    a1: np.ndarray
    b1: np.ndarray

    def measures(self, H, k):
        sel = np.nonzero(self.trial == k)[0]
        ids = H.ids
        pieces0 = {ids[self.ray[i]]: [(self.a0[i], self.b0[i], self.mass[i])] for i in sel}
        pieces1 = {ids[self.ray[i]]: [(self.a1[i], self.b1[i], self.mass[i])] for i in sel}
        return HMeasure.blocks(pieces0), HMeasure.blocks(pieces1)


N_DRAWS = 16


def sample_block_pairs(H, uniforms):
    """Map a ``(trials, 16)`` array of uniforms to causally ordered block pairs.

    Each trial puts its mass on one ray, or on two with probability 1/4.
    Half of the per-ray pairs contract (the target block is shorter); the
    rest rescale the length by a factor in [0.1, 10].  Target blocks start
    and end no earlier than source blocks, so the pairs are always feasible.
    """
    u = np.asarray(uniforms, dtype=float)
    n = u.shape[0]
    R = len(H.rays)
    lo_w = np.array([r.interval.a for r in H.rays])
    hi_w = np.array([r.top for r in H.rays])
    two = (u[:, 0] < 0.25) & (R > 1)
    r1 = np.minimum((u[:, 1] * R).astype(np.int64), R - 1)
    off = 1 + np.minimum((u[:, 2] * max(R - 1, 1)).astype(np.int64), max(R - 2, 0))
    r2 = (r1 + off) % R
    split = 0.1 + 0.8 * u[:, 3]
    rows = []
    for slot, (ray, cols) in enumerate(((r1, slice(4, 10)), (r2, slice(10, 16)))):
        v = u[:, cols]
        keep = np.ones(n, bool) if slot == 0 else two
        mass = np.where(two, split if slot == 0 else 1.0 - split, 1.0)
        lo, hi = lo_w[ray], hi_w[ray]
        W = hi - lo
        L0 = W * 10.0 ** (-3.0 * v[:, 0])
        a0 = lo + v[:, 1] * (W - L0)
        b0 = a0 + L0
        contract = v[:, 2] < 0.5
        ratio = np.where(contract, 10.0 ** (-3.0 * v[:, 3]), 10.0 ** (2.0 * v[:, 3] - 1.0))
        L1 = np.minimum(L0 * ratio, hi - a0)
        low = np.maximum(a0, b0 - L1)
        high = np.maximum(hi - L1, low)
        a1 = low + v[:, 4] * (high - low)
        b1 = np.minimum(a1 + L1, hi)
        b1 = np.maximum(b1, b0)
        rows.append((np.nonzero(keep)[0], ray[keep], mass[keep], a0[keep], b0[keep],
                     a1[keep], b1[keep]))
    cat = [np.concatenate(c) for c in zip(*rows)]
    order = np.lexsort((cat[1], cat[0]))
    return BlockPairs(*[c[order] for c in cat])


def _block_entropies(H, pairs, ts):
    """Entropy of the interpolated block measures, shape ``(trials, len(ts))``."""
    n_trials = int(pairs.trial.max()) + 1 if pairs.trial.size else 0
    lo = pairs.a0[:, None] + ts[None, :] * (pairs.a1 - pairs.a0)[:, None]
    hi = pairs.b0[:, None] + ts[None, :] * (pairs.b1 - pairs.b0)[:, None]
    L = hi - lo
    contrib = np.empty_like(lo)
    for r, ray in enumerate(H.rays):
        sel = pairs.ray == r
        if not np.any(sel):
            continue
        ml = ray.density.mean_log(lo[sel], hi[sel])
        m = pairs.mass[sel][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = m * (np.log(m / (ray.weight * L[sel])) - ml)
        contrib[sel] = np.where(np.isneginf(ml), np.inf, c)
    ent = np.zeros((n_trials, ts.size))
    np.add.at(ent, pairs.trial, contrib)
    return ent


def _screen(U, tol):
    """Cheap upper bound on the concavity violation of each row of ``U``."""
    d = U[:, 2:] - 2.0 * U[:, 1:-1] + U[:, :-2]
    n = U.shape[1] - 1
    return (n / 4.0) * np.sum(np.maximum(d, 0.0), axis=1)


@dataclass
class SearchResult:
    verdict: str
    trials: int
    seed: int
    N: float
    worst: ConcavityReport | None = None
    worst_trial: int | None = None
    failing_trial: int | None = None
    witness_pair: tuple | None = None
    vacuous_trials: int = 0
    max_violation: float = 0.0

    @property
    def passed(self):
        return self.verdict != "fail"

    def to_dict(self):
        out = {
            "verdict": self.verdict,
            "trials": self.trials,
            "seed": self.seed,
            "N": self.N,
            "tolerance": CONCAVITY_TOL,
            "worst_trial": self.worst_trial,
            "failing_trial": self.failing_trial,
            "vacuous_trials": self.vacuous_trials,
            "max_violation": self.max_violation,
            "worst": self.worst.to_dict() if self.worst else None,
        }
        if self.witness_pair is not None:
            from .io import measure_to_dict
            out["witness_pair"] = [measure_to_dict(m) for m in self.witness_pair]
        return out


def _batch_uniforms(seed, b):
    rng = np.random.default_rng([int(seed), int(b)])
    return rng.random((BATCH, N_DRAWS))


def nce_search(H, N, trials, seed, t_grid_size=DEFAULT_GRID, stop_on_fail=True):
    """Randomized search for a pair of marginals violating entropy-power concavity.

    Trials are drawn in fixed batches of 1000; batch ``b`` is generated from
    the seed sequence ``(seed, b)``, so trial ``i`` depends only on ``seed`` and
    ``i``.  With ``stop_on_fail`` the search ends after the batch holding the
    first failing trial.
    """
    N = _check_N(N)
    trials = int(trials)
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    ts = np.linspace(0.0, 1.0, int(t_grid_size) + 1)
    M = N - 1.0
    best = (-1.0, None)          # (exact violation, trial index)
    fallback = (-1.0, None)      # (screen bound, trial index)
    first_fail = None
    vacuous = 0
    done = 0
    n_batches = -(-trials // BATCH)
    for b in range(n_batches):
        count = min(BATCH, trials - b * BATCH)
        u = _batch_uniforms(seed, b)[:count]
        pairs = sample_block_pairs(H, u)
        ent = _block_entropies(H, pairs, ts)
        with np.errstate(over="ignore"):
            U = np.where(np.isinf(ent), 0.0, np.exp(-ent / M))
        vac = (U[:, 0] == 0.0) & (U[:, -1] == 0.0)
        vacuous += int(np.sum(vac))
        bound = np.where(vac, 0.0, _screen(U, CONCAVITY_TOL))
        k = int(np.argmax(bound))
        if bound[k] > fallback[0]:
            fallback = (float(bound[k]), b * BATCH + k)
        flagged = np.nonzero(bound > 0.5 * CONCAVITY_TOL)[0]
        for k in flagged:
            viol, _ = concavity_violation(ts, U[k])
            idx = b * BATCH + int(k)
            if viol > best[0]:
                best = (viol, idx)
            if viol > CONCAVITY_TOL and first_fail is None:
                first_fail = idx
        done += count
        if first_fail is not None and stop_on_fail:
            break

    if vacuous == done:
        return SearchResult("vacuous", done, seed, N, vacuous_trials=vacuous)
    worst_idx = best[1] if best[1] is not None else fallback[1]
    mu0, mu1 = _replay(H, seed, worst_idx)
    report = nce_test(H, N, mu0, mu1, t_grid_size)
    verdict = "fail" if first_fail is not None else "pass"
    return SearchResult(
        verdict, done, seed, N, worst=report, worst_trial=worst_idx,
        failing_trial=first_fail,
        witness_pair=(mu0, mu1) if verdict == "fail" else None,
        vacuous_trials=vacuous,
        max_violation=max(best[0], report.max_violation, 0.0),
    )


def _replay(H, seed, idx):
    b, k = divmod(int(idx), BATCH)
    u = _batch_uniforms(seed, b)[k:k + 1]
    pairs = sample_block_pairs(H, u)
    return pairs.measures(H, 0)


def trial_pair(H, seed, idx):
    """The marginals drawn by ``nce_search`` for trial ``idx``."""
    return _replay(H, seed, idx)


# --------------------------------------------------------------------------
# cross-checks
# --------------------------------------------------------------------------

@dataclass
class LocalizationReport:
    N: float
    cd: list
    search: SearchResult | None
    cd_verdict: str
    nce_verdict: str
    agree: bool
    note: str = ""

    def to_dict(self):
        return {
            "N": self.N,
            "cd_verdict": self.cd_verdict,
            "nce_verdict": self.nce_verdict,
            "agree": self.agree,
            "note": self.note,
            "rays": [c.to_dict() for c in self.cd],
            "search": self.search.to_dict() if self.search else None,
        }


def localization_crosscheck(H, N, trials, seed, t_grid_size=DEFAULT_GRID):
    """Compare the per-ray CD(0, N-1) verdict with the randomized NC^e(N) search."""
    N = float(N)
    if not N > 2:
        raise ParameterError(f"localization needs N > 2, got {N}")
    cds = [cd_check(r, N) for r in H.rays]
    cd_verdict = "pass" if all(c.passed for c in cds) else "fail"
    search = nce_search(H, N, trials, seed, t_grid_size)
    nce_verdict = search.verdict
    agree = (cd_verdict == "pass") == (nce_verdict != "fail")
    note = "" if nce_verdict != "vacuous" else "search was vacuous"
    return LocalizationReport(N, cds, search, cd_verdict, nce_verdict, agree, note)


def transform_measure(mu, tp):
    """Push a measure through the gauge change ``g -> f + h g`` on every ray."""
    slices = []
    for s in mu.slices:
        f, h = tp.shift(s.ray_id), tp.scale(s.ray_id)
        knots = f + h * s.knots
        # keep piece masses: the new widths carry rounding from the shift
        values = s.piece_masses / np.diff(knots)
        slices.append(RayMeasureSlice(
            s.ray_id, knots, values, tuple((f + h * g, m) for g, m in s.atoms)))
    return HMeasure(tuple(slices), mu.tip_mass)


def transform_plan(plan, tp):
    rows = {}
    for rid, seg in plan.rows.items():
        f, h = tp.shift(rid), tp.scale(rid)
        rows[rid] = Segments(f + h * seg.x0, f + h * seg.x1, f + h * seg.y0,
                             f + h * seg.y1, seg.m)
    return DynamicalPlan(rows)


@dataclass
class InvarianceReport:
    t_grid: list
    differences: list
    spread: float
    predicted: float
    constant: bool
    verdict_before: str
    verdict_after: str
    verdicts_equal: bool
    transverse_spread: float = 0.0

    @property
    def passed(self):
        return self.constant and self.verdicts_equal

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "t_grid", "differences", "spread", "predicted", "constant",
            "verdict_before", "verdict_after", "verdicts_equal", "transverse_spread")}


def invariance_check(H, tp, N, mu0, mu1, t_grid_size=DEFAULT_GRID, measure_exponent=-1.0):
    """Entropy shift and verdict equality under a transverse gauge/measure change.

    Along the monotone plan, ``Ent(mu_t | m') - Ent(mu_t | m)`` must not depend on
    ``t``; with ``m' = h**k m`` it equals ``-k ∫ log h dmu_0``.
    """
    res = feasibility(mu0, mu1, H)
    if not res:
        raise InfeasibleError(f"no causal coupling: {res.obstruction.reason}", res.obstruction)
    plan = dynamical_plan(res.witness, H)
    H2 = gauge_measure_transform(H, tp, measure_exponent)
    plan2 = transform_plan(plan, tp)
    ts = np.linspace(0.0, 1.0, int(t_grid_size) + 1)
    diffs, phis = [], []
    phi = {r.id: math.log(tp.scale(r.id)) for r in H.rays}
    for t in ts:
        m_t = interpolate(plan, float(t))
        m2_t = interpolate(plan2, float(t))
        diffs.append(entropy(m2_t, H2) - entropy(m_t, H))
        phis.append(sum(phi[s.ray_id] * s.mass for s in m_t.slices))
    diffs = np.array(diffs)
    predicted = -measure_exponent * phis[0]
    spread = float(np.max(diffs) - np.min(diffs)) if np.all(np.isfinite(diffs)) else math.inf
    before = nce_test(H, N, mu0, mu1, t_grid_size)
    after = nce_test(H2, N, transform_measure(mu0, tp), transform_measure(mu1, tp), t_grid_size)
    return InvarianceReport(
        list(map(float, ts)), list(map(float, diffs)), spread, predicted,
        spread <= 1e-9, before.verdict, after.verdict, before.verdict == after.verdict,
        float(max(phis) - min(phis)),
    )
