"""Mixed products on the grid torus, and what pole sets do to them.

Walks through the basic objects: a periodic grid, a closed background
form, product measures of potentials, and the truncated product that
refuses to charge pole neighborhoods.
"""

import numpy as np

import pluritorus as pt

# A one-dimensional torus with 64 nodes, and the closed form with
# constant part 3 plus the Hessian of a sine potential.  Its class is
# "A = 3": the sine part is invisible to every total mass below.
grid = pt.GridTorus(64)
x = np.arange(64) / 64
F = pt.make_closed_form(grid, [[3.0]], 0.01 * np.sin(2 * np.pi * x))

print("== closed-kind mass invariance (d = 1) ==")
for amp in (0.0, 0.3, 0.9):
    u = pt.QPshFunction(grid, amp * np.cos(4 * np.pi * x))
    mass = pt.total_mass(pt.ma(F, u))
    print(f"  potential amplitude {amp:.1f}: total mass = {mass:.15f}")
print("  (all equal to the constant part 3: second differences telescope)")

# Now push one node to -inf.  The truncated product zeroes the pole and
# its whole stencil neighborhood, so the mass drops by exactly the
# excluded cells and no truncation level can change that.
print("\n== a pole and its massless neighborhood ==")
vals = np.zeros(64)
vals[10] = -np.inf
singular = pt.QPshFunction(grid, vals)
mu = pt.ma(F, singular)
print(f"  support size: {mu.support_size} of {grid.node_count} nodes")
print(f"  weights near the pole (nodes 8..12): {np.round(mu.weights[8:13], 6)}")
print(f"  total mass: {pt.total_mass(mu):.15f}  (< 3: three cells excluded)")

level = pt.truncation_level([singular])
mu_high = pt.ma(F, singular, level=level + 40.0)
print(f"  truncation level {level:.1f} vs {level + 40:.1f}: bit-identical ="
      f" {np.array_equal(mu.weights, mu_high.weights)}")

# Mixed slots in d = 2: the density is the mixed discriminant of the
# shifted Hessians, symmetric and multilinear in the slots.
print("\n== mixed products (d = 2) ==")
g2 = pt.GridTorus((16, 16))
Fa = pt.make_closed_form(g2, np.diag([1.0, 0.0]))
Fb = pt.make_closed_form(g2, np.diag([0.0, 1.0]))
zero = pt.constant(g2, 0.0)
mixed = pt.bt_mixed([Fa, Fb], [zero, zero])
print(f"  slots diag(1,0), diag(0,1): weight = {mixed.weights[0, 0]} everywhere")
Fd = pt.make_closed_form(g2, np.diag([1.0, 2.0]))
print(f"  equal slots diag(1,2):      mass  = {pt.total_mass(pt.ma(Fd, zero)):.12f}"
      f"  (= det A)")
