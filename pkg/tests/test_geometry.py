import math
import warnings

import numpy as np
import pytest

from synthnull import (
    CrossSection, GaugeInterval, Ray, RayDensity, SyntheticNullHypersurface, TransversePair,
    content_covariance, hawking_check, is_proper, minkowski_content, penrose_check,
    theta_estimate,
)
from synthnull.corpus import single_ray
from synthnull.errors import InputError, ParameterError, PreconditionError
from synthnull.geometry import area_curve
from synthnull.smooth import (
    WarpedProductSpec, cone_hypersurface, sphere_boundary_hypersurface, sqrt_warp,
    warped_null_hypersurface,
)


def flat(b=math.inf, K=2, top=4.0):
    x = [0.0, top if math.isinf(b) else b]
    iv = GaugeInterval(0.0, b)
    rays = tuple(Ray(f"r{k}", 1.0 / K, iv, RayDensity(x, [1.0, 1.0])) for k in range(K))
    return SyntheticNullHypersurface(rays)


def model(b, N=4.0, K=4, knots=9):
    """``h = ((b - t)/b)**(N-2)`` stored exactly at power ``N - 2``."""
    x = np.linspace(0.0, b, knots)
    g = (b - x) / b
    g[-1] = 0.0
    iv = GaugeInterval(0.0, b)
    rays = tuple(Ray(f"m{k}", 1.0 / K, iv, RayDensity(x, g ** (N - 2), N - 2)) for k in range(K))
    return SyntheticNullHypersurface(rays)


# -- Minkowski content -------------------------------------------------------

def test_flat_two_ray_content():
    H = flat()
    est = minkowski_content(CrossSection.initial(H), H)
    assert est.closed_form == 1.0
    assert abs(est.numeric - 1.0) <= 1e-9


def test_cone_contents_grow_like_t_squared():
    C = cone_hypersurface(4, 10.0, K=8)
    for t0, want in [(1.0, 1.0), (2.0, 4.0), (3.0, 9.0)]:
        est = minkowski_content(CrossSection.at(C, t0), C, eps_grid=(1e-6, 1e-7, 1e-8))
        assert est.closed_form == pytest.approx(want, abs=1e-9)
        assert est.numeric == pytest.approx(want, abs=1e-6)


def test_content_outside_A_is_zero():
    H = flat()
    assert minkowski_content(CrossSection.initial(H), H, A=["missing"]).numeric == 0.0


def test_content_restricted_to_subset():
    C = cone_hypersurface(4, 10.0, K=8)
    est = minkowski_content(CrossSection.at(C, 2.0), C, A=["c0", "c1"])
    assert est.closed_form == pytest.approx(1.0)


def test_eps_grid_validation_and_shrinking():
    H = flat(b=1.0)
    S = CrossSection.at(H, 0.99)
    with pytest.raises(ParameterError):
        minkowski_content(S, H, eps_grid=(1e-3, 1e-2))
    with pytest.warns(UserWarning):
        est = minkowski_content(S, H, eps_grid=(1.0, 0.5, 0.1))
    assert max(est.eps_used) < 0.01


def test_section_must_lie_on_the_rays():
    H = flat(b=1.0)
    with pytest.raises(InputError):
        minkowski_content(CrossSection.at(H, 1.0), H)
    C = cone_hypersurface(4, 10.0, K=2)
    with pytest.raises(InputError):
        CrossSection.initial(C).validate(C)


# -- Hawking -----------------------------------------------------------------

def test_hawking_on_the_cone():
    C = cone_hypersurface(4, 10.0, K=8)
    rep = hawking_check(CrossSection.at(C, 1.0), CrossSection.at(C, 2.0), C, 4)
    assert rep.verdict == "pass"
    assert (rep.content1, rep.content2) == pytest.approx((1.0, 4.0), abs=1e-12)


def test_hawking_flat_family_is_an_equality():
    H = flat(K=3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        s1, s2 = np.sort(rng.uniform(0, 3, 2))
        rep = hawking_check(CrossSection.at(H, s1), CrossSection.at(H, s2), H, 3.5)
        assert rep.verdict == "pass"
        assert abs(rep.content1 - rep.content2) <= 1e-12


def test_hawking_is_gated_on_incomplete_rays():
    H = single_ray([0.0, 2.0], [2.0, 1.0])
    rep = hawking_check(CrossSection.at(H, 0.0), CrossSection.at(H, 1.0), H, 4)
    assert rep.verdict == "inapplicable" and rep.reasons


def test_hawking_requires_nested_sections():
    C = cone_hypersurface(4, 10.0, K=2)
    with pytest.raises(PreconditionError):
        hawking_check(CrossSection.at(C, 2.0), CrossSection.at(C, 1.0), C, 4)


# -- covariance of contents --------------------------------------------------

def test_identity_pair_keeps_content():
    C = cone_hypersurface(4, 10.0, K=4)
    rep = content_covariance(CrossSection.at(C, 1.5), C, TransversePair.constant(C.ids))
    assert rep["verdict"] == "pass" and rep["after"] == rep["before"]


def test_content_scales_by_h_to_the_k_minus_one():
    # with m' = m/h the content picks up 1/h**2; only k = +1 leaves it unchanged
    C = cone_hypersurface(4, 10.0, K=4)
    S = CrossSection.at(C, 1.5)
    tp = TransversePair.constant(C.ids, 0.0, 2.0)
    rep = content_covariance(S, C, tp)
    assert rep["verdict"] == "fail"
    assert rep["after"] == pytest.approx(rep["before"] / 4.0, rel=1e-12)
    assert rep["after"] == pytest.approx(rep["predicted_after"], rel=1e-12)
    rep = content_covariance(S, C, tp, measure_exponent=1.0)
    assert rep["verdict"] == "pass"


@pytest.mark.parametrize("seed", range(5))
def test_random_pairs_follow_the_predicted_factor(seed):
    rng = np.random.default_rng(seed)
    C = cone_hypersurface(4, 10.0, K=6)
    tp = TransversePair({k: rng.uniform(-1, 1) for k in C.ids},
                        {k: rng.uniform(0.5, 2) for k in C.ids})
    S = CrossSection({k: rng.uniform(0.5, 3) for k in C.ids})
    for k in (-1.0, 1.0):
        rep = content_covariance(S, C, tp, measure_exponent=k)
        assert abs(rep["after"] - rep["predicted_after"]) <= 1e-9
    assert content_covariance(S, C, tp, measure_exponent=1.0)["verdict"] == "pass"


# -- mean curvature and Penrose --------------------------------------------------

def test_theta_examples():
    H = model(2.0)
    th = theta_estimate(CrossSection.initial(H), H)
    assert th.closed_form == pytest.approx(-1.0, abs=1e-12)
    assert th.numeric == pytest.approx(-1.0, rel=1e-2)
    F = flat()
    assert theta_estimate(CrossSection.initial(F), F).closed_form == 0.0
    C = cone_hypersurface(4, 10.0, K=4)
    assert theta_estimate(CrossSection.at(C, 1.0), C).closed_form == pytest.approx(2.0)


def test_theta_needs_positive_density():
    H = single_ray([0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
    with pytest.raises(PreconditionError):
        theta_estimate(CrossSection({"r": 1.0}), H)


def test_penrose_saturating_family():
    rep = penrose_check(model(2.0), 4)
    assert rep.verdict == "pass"
    assert rep.theta == pytest.approx(-1.0)
    assert rep.bound == pytest.approx(2.0) and abs(rep.slack) <= 1e-6
    assert rep.compact
    assert rep.table()[0][1:] == pytest.approx((2.0, 2.0, 0.0), abs=1e-12)


def test_penrose_with_a_weaker_theta_leaves_slack():
    rep = penrose_check(model(1.5), 4, theta=-1.0)
    assert rep.verdict == "pass" and rep.slack == pytest.approx(0.5)


def test_penrose_adversarial_instance_is_not_consistent():
    # b = 3 with theta = -1: the model's own mean curvature is -2/3 > -1
    rep = penrose_check(model(3.0), 4, theta=-1.0)
    assert rep.verdict == "inapplicable"


def test_penrose_gates():
    assert penrose_check(flat(b=3.0), 4).verdict == "not future converging"
    x = np.linspace(0, 1, 5)
    bump = single_ray(x, 1 + (x - 0.5) ** 2)
    assert penrose_check(bump, 3).verdict == "inapplicable"
    with pytest.raises(ParameterError):
        penrose_check(model(2.0), 2)


def test_area_curve_rows():
    C = cone_hypersurface(4, 10.0, K=4)
    rows = area_curve(C, [0.5, 1.0, 2.0])
    assert [r[1] for r in rows] == pytest.approx([0.25, 1.0, 4.0])


# -- properness --------------------------------------------------------------

def test_cone_is_proper():
    assert is_proper(cone_hypersurface(4, 10.0, K=8), 5.0)


def test_bounded_closed_ray_is_proper():
    x = np.array([0.0, 1.0])
    iv = GaugeInterval(0.0, 1.0, True, True)
    ray = Ray("r", 1.0, iv, RayDensity(x, [1.0, 1.0]), np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert is_proper(SyntheticNullHypersurface((ray,)), 5.0)


def test_warped_rays_are_not_proper_past_the_blow_up():
    f, df = sqrt_warp()
    H, trace = warped_null_hypersurface(WarpedProductSpec.null(f, df, -1.0, 1.0), 1e-3, K=4)
    assert is_proper(H, 0.5 * trace.b_estimate)
    assert not is_proper(H, trace.b_estimate + 1.0)


def test_properness_needs_an_embedding():
    with pytest.raises(PreconditionError):
        is_proper(flat(), 1.0)


# -- sphere families ---------------------------------------------------------

def test_ingoing_sphere_saturates_the_bound():
    H = sphere_boundary_hypersurface(2.0, 0.0, ingoing=True, K=8)
    th = theta_estimate(CrossSection.initial(H), H)
    assert th.closed_form == pytest.approx(-1.0, abs=1e-12)
    rep = penrose_check(H, 4)
    assert rep.bound == pytest.approx(2.0) and rep.max_b == 2.0 and rep.verdict == "pass"


def test_outgoing_sphere_areas():
    H = sphere_boundary_hypersurface(1.0, 3.0, K=8)
    rep = hawking_check(CrossSection.at(H, 0.0), CrossSection.at(H, 1.0), H, 4)
    assert rep.verdict == "pass"
    assert (rep.content1, rep.content2) == pytest.approx((1.0, 4.0))


def test_large_spheres_flatten():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ratios = []
        for R in (1.0, 10.0, 1000.0):
            H = sphere_boundary_hypersurface(R, 2.0, K=2)
            ratios.append(float(H.rays[0].density(2.0) / H.rays[0].density(0.0)))
    assert ratios[0] > ratios[1] > ratios[2] and ratios[2] == pytest.approx(1.0, abs=1e-2)
