"""
Planning a motion that changes equilibrium branch
=================================================

Lift a grid of controls to the stable equilibria above it, join
neighbouring equilibria that lie on the same branch, and search for the
cheapest route.  Edges that exist in only one direction mark places where
the pendulum snaps to another branch.
"""

import math

import numpy as np

import quasistat as qs

system = qs.ContactPendulum(L0=1.0, W0=0.1, mg=10.0)
bottom = qs.build_bottom_grid([(-1.5, 1.5), (-1.5, 1.5)], (31, 31), diagonals=True)
graph = qs.lift(system, bottom, qs.LiftConfig(n_seeds=16))
n_switch = sum(e.switch for e in graph.edges)
print(f"{len(graph.nodes)} stable nodes, {len(graph.edges)} edges, {n_switch} one-way edges")
print("branch match threshold:", graph.match_threshold)

# from hanging above the box to resting in the corner of the box
start = qs.nearest_node(graph, system, np.array([1.2, 0.5]), np.array([-math.pi / 2]))
goal_u = np.array([0.4, 0.2])
goal = qs.nearest_node(graph, system, goal_u, np.array([math.atan2(goal_u[1], goal_u[0])]))
path = qs.shortest_path(graph, start, goal)
print(f"path: {len(path)} nodes, cost {path.total_cost:.4g}, switches at steps {path.switch_markers}")
for k, nid in enumerate(path.nodes):
    nd = graph.nodes[nid]
    mark = " <- switch" if k in path.switch_markers else ""
    print(f"{k:3d}  u = ({nd.u[0]: .2f}, {nd.u[1]: .2f})  alpha = {nd.z[0]: .3f}{mark}")
