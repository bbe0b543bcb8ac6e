# Graded time meshes and the L1 weights they produce.
#
# The solution of a time-fractional problem behaves like t**alpha near t = 0,
# so a uniform mesh wastes most of its accuracy on the first step.  Grading
# with t_i = (i/n)**r T piles points up near the origin.

import math

import numpy as np

from tempered_tof import build_graded_mesh, build_l1_table, l1_caputo, optimal_grading

for r in (1, 2, 3):
    m = build_graded_mesh(5, r, 1.0)
    print(f"r={r}: points {np.round(m.points, 4)}  first step {m.lengths[0]:.4g}")

# The weights a[j,k] are positive, equal 1 on the last entry of every row, and
# tau_j**-alpha a[j,k] grows towards the current time level.
tab = build_l1_table(0.5, build_graded_mesh(9, 3, 1.0))
print("\nrow k=4 of a[j,k] (alpha=0.5, r=3):", np.round(tab.row(4), 6))
print("a[0,2] =", tab[0, 2], " vs sqrt(8)-sqrt(7) =", math.sqrt(8) - math.sqrt(7))

# Discrete Caputo derivative of t**alpha, whose exact value is Gamma(1+alpha)
# at every t.
alpha = 0.5
exact = math.gamma(1 + alpha)
print(f"\nL1 error for D^{alpha} t^{alpha} at t=1")
print(f"{'n':>5} {'uniform':>12} {'graded':>12}")
for n in (16, 32, 64, 128, 256):
    errs = []
    for r in (1.0, optimal_grading(alpha)):
        t = build_l1_table(alpha, build_graded_mesh(n, r, 1.0))
        errs.append(abs(l1_caputo(t.mesh.points**alpha, t, n) - exact))
    print(f"{n:>5} {errs[0]:12.3e} {errs[1]:12.3e}")

# Both columns fall like n**-1.5 here.  At the first level the error is the
# same on every mesh: linear interpolation of t**alpha over [0, t_1] gives
# 1/Gamma(2-alpha) whatever t_1 is.  Grading pays off in the PDE, where that
# early error feeds the whole history sum; see convergence.py.
k1 = build_l1_table(alpha, build_graded_mesh(64, 3, 1.0))
print(f"\nfirst level: {l1_caputo(k1.mesh.points**alpha, k1, 1):.6f}  1/Gamma(1.5) = {1 / math.gamma(1.5):.6f}")
