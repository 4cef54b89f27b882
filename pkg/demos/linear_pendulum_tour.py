"""
A spring pendulum driven by its anchor
======================================

The pendulum hangs from a spring whose far end is the control ``u``.
Every control has a closed-form stable angle, so this script compares the
numerical pipeline with the exact answers.
"""

import numpy as np

import quasistat as qs

system = qs.LinearSpringPendulum(L0=1.0, mg=10.0, k_c=1.0)
print("critical control:", system.u_crit)

# solve one fiber and compare with the closed form
u = np.array([0.7, 4.2])
points = qs.find_equilibria(system, u)
for p in points:
    print(f"alpha = {p.z_star[0]: .6f}  energy = {p.energy: .6f}  {p.stability.value}")
alpha, L_u = qs.analytic_equilibrium(system, u)
print("closed-form stable angle:", alpha, " control length:", L_u)

# the control Hessian is a Schur complement of the full Hessian
stable = points[0]
G = qs.control_hessian(stable)
print("G (numerical):\n", G)
print("G (closed form):\n", qs.analytic_control_hessian(system, u))
print("eigenvalues of G:", np.linalg.eigvalsh(G))

# move the control a little and predict the new angle from the tangent map
du = np.array([0.02, -0.01])
predicted = stable.z_star + qs.tangent_map(stable)(du)
exact = qs.solve_equilibrium(system, u + du, predicted).z_star
print("tangent prediction error:", abs(predicted - exact)[0])

# the cheapest way to swing the anchor half a turn around the critical control
curve = qs.optimal_lambda(-np.pi / 2, np.pi / 2, 1.0, 1.4)
print("optimal length profile action:", curve.action() * (system.k_c * system.L0) ** 2)
rows = qs.optimal_control_curve(system, -np.pi / 2, np.pi / 2, 1.0, 1.4, 9)
print("alpha      u_x       u_y")
for a, x, y in rows:
    print(f"{a: .4f}  {x: .4f}  {y: .4f}")
