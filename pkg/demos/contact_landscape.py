"""
Equilibrium landscape of a pendulum resting on a rounded box
=============================================================

Near the box the spring stiffens sharply, so one control can hold the
pendulum at several angles.  This script counts equilibria across a grid
and shows where the landscape folds.
"""

import numpy as np

import quasistat as qs

system = qs.ContactPendulum(L0=1.0, W0=0.1, mg=10.0)

# away from the box one stable angle remains; pressed against it several appear
for u in ([0.0, 1.2], [1.2, 0.5], [0.4, 0.2], [0.0, -0.4]):
    pts = qs.find_equilibria(system, u)
    desc = ", ".join(f"{p.z_star[0]:+.3f} ({p.stability.value})" for p in pts)
    print(f"u = {u}: {desc}")

# stable-branch counts over a coarse grid
bottom = qs.build_bottom_grid([(-1.5, 1.5), (-1.5, 1.5)], (13, 13))
fibers = qs.sample_fibers(system, bottom, qs.LiftConfig())
counts = np.array([sum(p.stability is qs.Stability.STABLE for p in f) for f in fibers]).reshape(bottom.shape)
print("stable equilibria per control (rows are u_x, columns u_y):")
print(counts)

# the control Hessian stiffens where the pendulum is pressed on the box
for u in ([1.2, 0.5], [0.4, 0.2]):
    p = next(p for p in qs.find_equilibria(system, u) if p.stability is qs.Stability.STABLE)
    print(f"u = {u}: eigenvalues of G = {np.linalg.eigvalsh(qs.control_hessian(p))}")
