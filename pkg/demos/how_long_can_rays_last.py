"""
How long can a converging ray last
==================================

If the mean curvature of the initial cross-section is at most ``theta < 0``,
every ray ends before gauge ``(N-2)/|theta|``.  The ingoing light sheet of a
round sphere of radius R in Minkowski space meets that bound exactly.
"""

from synthnull import CrossSection, penrose_check, sphere_boundary_hypersurface, theta_estimate

N = 4
for R in (0.5, 1.0, 2.0, 4.0):
    H = sphere_boundary_hypersurface(R, 0.0, ingoing=True, K=8)
    th = theta_estimate(CrossSection.initial(H), H)
    rep = penrose_check(H, N)
    print(f"R={R:4.1f}  theta={th.closed_form:+.4f}  longest ray {rep.max_b:.4f}"
          f"  bound {rep.bound:.4f}  -> {rep.verdict}")
