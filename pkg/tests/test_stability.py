import math

import numpy as np
import pytest

from synthnull import ApproximationStep, MonotoneMap, kuratowski_limsup, limit_nce, verify_hypotheses
from synthnull.errors import InputError
from synthnull.smooth import cone_hypersurface
from synthnull.stability import (
    adversarial_sigma_sequence, cdf_l1_distance, density_perturbation_sequence,
    epsilon_causal_deviation, gauge_warp_sequence, kink_sequence, read_manifest,
    wiggle_cone_sequence, write_manifest,
)


@pytest.fixture(scope="module")
def cone():
    return cone_hypersurface(4, 2.0, K=4, knots=17)


def _constant(limit, steps=5):
    ident = {r.id: MonotoneMap.identity(r.interval.a, r.top) for r in limit.rays}
    return [ApproximationStep(n, limit, ident, ident, 2.0 ** -n) for n in range(1, steps + 1)]


# -- maps --------------------------------------------------------------------

def test_monotone_map_basics():
    m = MonotoneMap([0.0, 1.0, 2.0], [0.0, 2.0, 3.0])
    assert m.monotone
    assert float(m(0.5)) == 1.0 and float(m(3.0)) == 4.0
    assert float(m.derivative(1.0, "left")) == 2.0
    assert float(m.derivative(1.0, "right")) == 1.0
    inv = m.inverse()
    xs = np.linspace(0, 2, 9)
    assert np.allclose(inv(m(xs)), xs)
    assert not MonotoneMap([0.0, 1.0], [1.0, 0.0]).monotone
    with pytest.raises(InputError):
        MonotoneMap([0.0, 0.0], [0.0, 1.0])


def test_epsilon_causal_deviation():
    assert epsilon_causal_deviation(np.linspace(1, 3, 11)) == pytest.approx(0.0, abs=1e-14)
    tau = np.linspace(0, 1, 11)
    # largest secant of tau**2 on this grid is 1.9, over [0.9, 1]
    assert epsilon_causal_deviation(tau ** 2) == pytest.approx(0.9)
    assert epsilon_causal_deviation(np.ones(5)) == math.inf


# -- hypotheses --------------------------------------------------------------

def test_constant_sequence_passes(cone):
    rep = verify_hypotheses(cone, _constant(cone))
    assert rep.passed, rep.hypotheses


def test_density_perturbation_sigma_bound(cone):
    # sigma_n = 1 / (1 + 2**-n psi) <= 1 + 2**-n needs psi >= -1/(1 + 2**-n)
    ok = density_perturbation_sequence(cone, lambda rid, x: np.cos(3 * x) * 0.5)
    assert verify_hypotheses(cone, ok).hypotheses["sigma_bound"]["passed"]
    bad = density_perturbation_sequence(cone, lambda rid, x: -np.ones_like(x))
    assert not verify_hypotheses(cone, bad).hypotheses["sigma_bound"]["passed"]


def test_gauge_warp_curves_are_eps_causal(cone):
    steps = gauge_warp_sequence(cone, steps=5)
    h = verify_hypotheses(cone, steps).hypotheses
    assert h["epsilon_causal"]["passed"] and h["compatibility"]["passed"]
    assert h["monotone_maps"]["passed"]


def test_hypotheses_reject_increasing_eps(cone):
    steps = _constant(cone, 3)[::-1]
    assert not verify_hypotheses(cone, steps).hypotheses["eps_decreasing"]["passed"]
    with pytest.raises(InputError):
        verify_hypotheses(cone, [])


# -- limits ------------------------------------------------------------------

def test_wiggle_cone_limit_passes():
    limit, steps = wiggle_cone_sequence(steps=4, K=4, knots=17)
    rep = limit_nce(limit, steps, 4, trials=1000, seed=0)
    assert rep["verdict"] == "pass"
    l1 = [row["l1"] for row in rep["cdf_l1"]]
    assert all(b < a for a, b in zip(l1, l1[1:]))


def test_kink_limit_passes():
    limit, steps = kink_sequence(steps=4)
    assert limit_nce(limit, steps, 4, trials=1000, seed=0)["verdict"] == "pass"


def test_adversarial_sigma_is_gated(cone):
    rep = limit_nce(cone, adversarial_sigma_sequence(cone, 4), 4, trials=100)
    assert rep["verdict"] == "inapplicable"
    assert "sigma_bound" in rep["reason"]


def test_cdf_distance_vanishes_for_identical_steps(cone):
    st = _constant(cone, 1)[0]
    assert cdf_l1_distance(st, cone)["l1"] == pytest.approx(0.0, abs=1e-15)


# -- Kuratowski upper limits -------------------------------------------------

def test_kuratowski_constant_sets():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    out = kuratowski_limsup([pts] * 10, 1e-9)
    assert np.array_equal(out, pts)


def test_kuratowski_convergent_points():
    sets = [np.array([[1.0 + 2.0 ** -n]]) for n in range(1, 40)]
    out = kuratowski_limsup(sets, 1e-3)
    assert out.shape[0] >= 1 and np.all(np.abs(out - 1.0) <= 1e-3)


def test_kuratowski_alternating_clusters():
    sets = [np.array([[0.0 if n % 2 else 5.0]]) + 1e-6 * n for n in range(20)]
    out = kuratowski_limsup(sets, 1e-3)
    assert np.any(np.abs(out) < 1e-3) and np.any(np.abs(out - 5.0) < 1e-3)


def test_kuratowski_drops_transients():
    sets = [np.array([[0.0], [9.0]])] + [np.array([[0.0]])] * 19
    out = kuratowski_limsup(sets, 1e-6)
    assert out.ravel().tolist() == [0.0]


def test_kuratowski_on_curves():
    curves = [np.stack([np.linspace(0, 1, 5) * (1 + 1e-4 / n)]) for n in range(1, 10)]
    out = kuratowski_limsup(curves, 1e-3)
    assert out.shape[1:] == (5,)


# -- manifests ---------------------------------------------------------------

def test_manifest_round_trip(tmp_path, cone):
    steps = gauge_warp_sequence(cone, steps=2, n_map=17)
    path = write_manifest(tmp_path, cone, steps)
    limit, back = read_manifest(path)
    assert limit.ids == cone.ids and len(back) == 2
    for a, b in zip(steps, back):
        assert a.eps == b.eps
        for rid in cone.ids:
            assert np.array_equal(a.map_to(rid).y, b.map_to(rid).y)
            assert np.array_equal(a.H.ray(rid).density.values, b.H.ray(rid).density.values)


def test_manifest_errors(tmp_path):
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(InputError):
        read_manifest(tmp_path / "manifest.json")
    (tmp_path / "manifest.json").write_text('{"steps": []}')
    with pytest.raises(InputError):
        read_manifest(tmp_path / "manifest.json")
