"""Envelopes below an obstacle and where their product mass lives.

The envelope is the largest directionally admissible function under the
obstacle.  Off its contact set it rides the constraints with equality,
so its product measure concentrates on contact, and the rooftop of two
potentials obeys the same mechanism.
"""

import numpy as np

import pluritorus as pt

n = 96
grid = pt.GridTorus(n)
x = np.arange(n) / n
F = pt.make_closed_form(grid, [[40.0]])

# A two-well obstacle: 0 outside, dipping to -1 and -0.6.
f = np.zeros(n)
f[np.abs(x - 0.3) < 0.12] = -1.0
f[np.abs(x - 0.72) < 0.08] = -0.6

res = pt.envelope(F, f)
print(f"status: {res.status} after {res.sweeps} sweeps "
      f"(final update {res.final_update:.2e})")
print(f"min envelope value: {res.env.values.min():.6f}")
print(f"directional slack:  {pt.directional_slack(F, res.env):.2e} (>= -1e-8)")

contact = np.sum(np.abs(res.env.values - f) < 1e-9)
print(f"contact nodes: {contact} of {n}")

rep = pt.contact_concentration(F, f, res, delta=1e-6)
print(f"mass away from contact: {rep.offside_mass:.3e} "
      f"(allowed {rep.threshold:.3e}) -> concentrated on contact")

# Envelope of an envelope: nothing moves, bit for bit.
again = pt.envelope(F, res.env.values)
print(f"idempotent bit-exact: {np.array_equal(again.env.values, res.env.values)}")

# The rooftop: envelope of the pointwise minimum of two admissible
# potentials; on stencil-pure contact regions its weights are exactly
# the indicator split of the two inputs.
u = pt.envelope(F, np.where(np.abs(x - 0.25) < 0.15, -0.9, 0.0)).env
v = pt.envelope(F, np.where(np.abs(x - 0.65) < 0.15, -0.7, 0.1)).env
roof = pt.rooftop(F, u, v)
print(f"rooftop min principle: {roof.checks['min_principle']}")

# Feasibility trichotomy: a negative closed class admits no potential.
bad = pt.v_theta(pt.make_closed_form(grid, [[-1.0]]))
print(f"zero envelope of A = [-1]: {bad.status} (telescoping obstruction)")
