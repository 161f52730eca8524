"""
Limits of hypersurfaces
=======================

The energy condition survives limits.  A cone with wiggling densities
converges to the exact cone; the hypotheses of the stability theorem can be
checked step by step, and the limit then passes the entropy test.  A
sequence whose density distortion grows too fast is rejected before any
test runs.
"""

from synthnull import limit_nce
from synthnull.smooth import cone_hypersurface
from synthnull.stability import adversarial_sigma_sequence, wiggle_cone_sequence

limit, steps = wiggle_cone_sequence(steps=5, K=4, knots=17)
rep = limit_nce(limit, steps, 4, trials=1000, seed=0)
print("wiggle:", rep["verdict"])
for row in rep["cdf_l1"]:
    print("  step", row["step"], " L1 distance of CDFs", f"{row['l1']:.2e}")

cone = cone_hypersurface(4, 2.0, K=4, knots=17)
rep = limit_nce(cone, adversarial_sigma_sequence(cone, 4), 4, trials=100)
print("adversarial:", rep["verdict"], "-", rep["reason"])
