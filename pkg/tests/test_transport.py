import math

import numpy as np
import pytest

from synthnull import (
    GaugeInterval, HMeasure, Ray, RayDensity, RayMeasureSlice, SyntheticNullHypersurface,
    dynamical_plan, entropy, entropy_power, feasibility, interpolate, monotone_coupling,
)
from synthnull.corpus import single_ray
from synthnull.errors import InfeasibleError, PreconditionError

LINE = single_ray([0.0, 4.0], [1.0, 1.0])


def _cone2():
    iv = GaugeInterval(0.0, 4.0, False, False)
    d = RayDensity([0.0, 4.0], [1.0, 1.0])
    rays = (Ray("r-", 0.5, iv, d), Ray("r+", 0.5, iv, d))
    return SyntheticNullHypersurface(rays, frozenset({"r-", "r+"}))


def test_equal_marginals_are_coupled_by_identity():
    mu = HMeasure.blocks({"r": [(0.0, 1.0, 0.4), (2.0, 3.0, 0.6)]})
    res = feasibility(mu, mu, LINE)
    assert res.feasible
    for x0, x1, y0, y1, _ in res.witness.rows["r"].rows():
        assert (x0, x1) == (y0, y1)


def test_pointwise_dominance_is_feasible():
    assert feasibility(HMeasure.uniform("r", 0, 1), HMeasure.uniform("r", 2, 3), LINE)


def test_backward_transport_is_infeasible():
    res = feasibility(HMeasure.uniform("r", 2, 3), HMeasure.uniform("r", 0, 1), LINE)
    assert not res and res.obstruction.reason == "quantile order violated"


def test_cone_example_tip_and_ray_mass_mismatch():
    H = _cone2()
    s2, s8 = math.sqrt(2.0), 2.0 * math.sqrt(2.0)
    w = 1e-6
    mu0 = HMeasure.blocks({"r+": [(s2, s2 + w, 0.5)]}, tip_mass=0.5)
    mu1 = HMeasure.blocks({"r-": [(s8, s8 + w, 0.5)], "r+": [(s8, s8 + w, 0.5)]})
    res = feasibility(mu0, mu1, H)
    assert res.feasible
    assert set(res.witness.tip_rows) == {"r-"}
    res = feasibility(mu0.without_tip(), mu1, H)
    assert not res and res.obstruction.reason == "ray mass mismatch"


def test_sorted_matching_of_two_atoms():
    w = 1e-6
    mu0 = HMeasure.blocks({"r": [(0.0, w, 0.5), (1.0, 1.0 + w, 0.5)]})
    mu1 = HMeasure.blocks({"r": [(2.0, 2.0 + w, 0.5), (3.0, 3.0 + w, 0.5)]})
    rows = [r for r in monotone_coupling(mu0, mu1, LINE).rows["r"].merged().rows()
            if r[4] > 0]
    assert len(rows) == 2
    assert rows[0][0] == pytest.approx(0.0) and rows[0][2] == pytest.approx(2.0)
    assert rows[1][0] == pytest.approx(1.0) and rows[1][2] == pytest.approx(3.0)
    assert [r[4] for r in rows] == pytest.approx([0.5, 0.5])


def test_uniform_stretch_is_the_doubling_map():
    c = monotone_coupling(HMeasure.uniform("r", 0, 1), HMeasure.uniform("r", 0, 2), LINE)
    g = np.linspace(0.0, 1.0, 9)
    assert np.allclose(c.rows["r"].transport_map(g), 2 * g, atol=1e-15)
    assert c.is_monotone() and c.is_causal()


def test_monotone_coupling_rejects_tip_mass():
    H = _cone2()
    mu0 = HMeasure.blocks({"r+": [(1.0, 2.0, 0.5)]}, tip_mass=0.5)
    with pytest.raises(PreconditionError):
        monotone_coupling(mu0, mu0, H)
    with pytest.raises(InfeasibleError):
        monotone_coupling(HMeasure.uniform("r", 2, 3), HMeasure.uniform("r", 0, 1), LINE)


def test_marginals_of_the_coupling():
    rng = np.random.default_rng(3)
    e0 = np.sort(rng.uniform(0, 2, 4))
    e1 = e0 + np.sort(rng.uniform(0.5, 1.5, 4))
    e1 = np.maximum.accumulate(e1) + np.arange(4) * 1e-3
    m = rng.dirichlet(np.ones(3))
    mu0 = HMeasure((RayMeasureSlice("r", e0, m / np.diff(e0)),))
    mu1 = HMeasure((RayMeasureSlice("r", e1, m / np.diff(e1)),))
    c = monotone_coupling(mu0, mu1, LINE)
    for mu, got in [(mu0, c.source_marginal()), (mu1, c.target_marginal())]:
        xs = np.linspace(0, 4, 41)
        F = lambda s: np.array([np.sum(s.piece_masses * np.clip((x - s.knots[:-1])
                                / np.diff(s.knots), 0, 1)) for x in xs])
        assert np.allclose(F(mu.slice("r")), F(got.slice("r")), atol=1e-12)


def test_dynamical_plan_examples():
    mu = HMeasure.uniform("r", 0, 1)
    plan = dynamical_plan(monotone_coupling(mu, mu, LINE), LINE)
    for t in (0.0, 0.3, 1.0):
        s = interpolate(plan, t).slice("r")
        assert np.allclose(s.knots, [0.0, 1.0]) and np.allclose(s.values, [1.0])
    a = HMeasure.uniform("r", 0.0, 1e-3)
    b = HMeasure.uniform("r", 2.0, 2.0 + 1e-3)
    seg = dynamical_plan(monotone_coupling(a, b, LINE), LINE).rows["r"]
    assert (seg.y0 - seg.x0)[0] == pytest.approx(2.0)


def test_endpoints_recover_the_coupling():
    c = monotone_coupling(HMeasure.uniform("r", 0, 1), HMeasure.uniform("r", 1, 3), LINE)
    back = dynamical_plan(c, LINE).endpoints()
    assert back.rows["r"].rows() == c.rows["r"].rows()


def test_interpolation_examples():
    mu0, mu1 = HMeasure.uniform("r", 0, 1), HMeasure.uniform("r", 0, 2)
    plan = dynamical_plan(monotone_coupling(mu0, mu1, LINE), LINE)
    s0 = interpolate(plan, 0.0).slice("r").canonical()
    s1 = interpolate(plan, 1.0).slice("r").canonical()
    assert np.array_equal(s0.knots, [0.0, 1.0]) and np.array_equal(s0.values, [1.0])
    assert np.array_equal(s1.knots, [0.0, 2.0]) and np.array_equal(s1.values, [0.5])
    half = interpolate(plan, 0.5).slice("r").canonical()
    assert np.allclose(half.knots, [0.0, 1.5]) and np.allclose(half.values, [2 / 3])


def test_contraction_blows_up_entropy():
    # contraction toward the future end; a block at 1 cannot be reached causally
    mu0, mu1 = HMeasure.uniform("r", 0, 2), HMeasure.uniform("r", 2.0, 2.0 + 1e-12)
    plan = dynamical_plan(monotone_coupling(mu0, mu1, LINE), LINE)
    ents = [entropy(interpolate(plan, t), LINE) for t in (0.0, 0.9, 0.999, 0.999999)]
    assert all(a < b for a, b in zip(ents, ents[1:]))
    # a block of width w has U_3 = w**(1/3), which tends to 0 with w
    for w in (1e-3, 1e-6, 1e-9, 1e-12):
        plan = dynamical_plan(monotone_coupling(mu0, HMeasure.uniform("r", 2.0, 2.0 + w),
                                                LINE), LINE)
        U = entropy_power(interpolate(plan, 1.0), LINE, 3.0)
        assert U == pytest.approx(w ** (1 / 3), rel=1e-3)


def test_interpolation_stays_inside_the_interval():
    # quantile ends and convex combinations must not round past b
    b = 3.240858783650659
    H = single_ray([-0.148174127149848, b], [1.0, 1.0])
    mu0 = HMeasure.uniform("r", 1.093207573153675, b)
    mu1 = HMeasure.blocks({"r": [(1.7, 2.9, 0.3), (2.9, b, 0.7)]})
    plan = dynamical_plan(monotone_coupling(mu0, mu1, H), H)
    for t in np.linspace(0, 1, 65):
        assert interpolate(plan, float(t)).slice("r").support[1] <= b
