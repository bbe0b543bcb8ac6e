# Perturbation growth under h < 2D/v.
#
# The implicit scheme obeys a discrete maximum principle: a perturbation of
# the initial profile never grows in the max-norm, however large the steps.

import numpy as np

from tempered_tof import ProblemSpec, StabilityError, TemperedParams, march

rng = np.random.default_rng(0)
eps = rng.uniform(-1e-3, 1e-3, 31)
params = TemperedParams(0.4, 0.5)
base = ProblemSpec(params, v=1.0, D=0.05, g=lambda x: np.sin(np.pi * x))
pert = ProblemSpec(params, v=1.0, D=0.05, g=lambda x: np.sin(np.pi * x) + eps)

a = march(base, n=50, r=3, K=32)
b = march(pert, n=50, r=3, K=32)
growth = np.abs(b.tempered - a.tempered).max(axis=1)
print(f"|E^0| = {growth[0]:.3e}, max over l of |E^l| = {growth.max():.3e}")

# Refuse to run when the cell Peclet condition fails.
try:
    march(ProblemSpec(params, v=1.0, D=0.01, g=lambda x: np.sin(np.pi * x)), n=10, r=3, K=32)
except StabilityError as exc:
    print("refused:", exc)
