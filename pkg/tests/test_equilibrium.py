import math

import numpy as np
import pytest

from quasistat import (
    NonConvergence,
    PotentialOutput,
    PotentialSystem,
    SingularJacobian,
    Stability,
    analytic_equilibrium,
    classify_stability,
    find_equilibria,
    solve_equilibrium,
    tangent_map,
    tangent_step,
)
from quasistat.equilibrium import make_point
from quasistat.pendulum import control_length


class Quartic(PotentialSystem):
    """Two uncoupled double wells, tilted by the controls; up to nine equilibria."""

    n_states = 2
    n_controls = 2
    state_bounds = ((-2.0, 2.0), (-2.0, 2.0))

    def evaluate(self, z, u):
        z = np.asarray(z, dtype=float)
        u = np.asarray(u, dtype=float)
        value = float(np.sum(0.25 * z**4 - 0.5 * z**2 - u * z))
        return PotentialOutput(value, z**3 - z - u, -z.copy(), np.diag(3 * z**2 - 1), -np.eye(2), np.zeros((2, 2)))


def test_examples_from_closed_form(linear):
    p = solve_equilibrium(linear, [1.0, 5.0], [0.3])
    assert abs(p.z_star[0]) < 1e-12 and p.stability is Stability.STABLE
    q = solve_equilibrium(linear, [0.0, 6.0], [1.2])
    assert q.z_star[0] == pytest.approx(math.pi / 2, abs=1e-12)
    r = solve_equilibrium(linear, [1.0, 5.0], [math.pi - 0.3])
    assert abs(abs(r.z_star[0]) - math.pi) < 1e-12 and r.stability is Stability.UNSTABLE


def test_residual_within_tolerance(linear, contact, rng):
    for system in (linear, contact):
        for _ in range(30):
            u = rng.uniform(-1.5, 1.5, size=2) + (linear.u_crit if system is linear else 0.0)
            for p in find_equilibria(system, u):
                assert p.residual <= 1e-10


def test_nonconvergence_carries_last_iterate(linear):
    with pytest.raises(NonConvergence) as info:
        solve_equilibrium(linear, [0.3, 7.0], [2.5], max_iter=1)
    assert info.value.z_last is not None and info.value.residual > 0


def test_bad_arguments(linear):
    with pytest.raises(ValueError):
        solve_equilibrium(linear, [1.0, 5.0], [0.0], tol=0.0)
    with pytest.raises(ValueError):
        solve_equilibrium(linear, [1.0, 5.0], [0.0], max_iter=0)
    with pytest.raises(ValueError):
        find_equilibria(linear, [1.0, 5.0], seeds=[])


def test_stability_examples(linear):
    u = linear.u_crit + np.array([0.6, 0.8])
    alpha, L = analytic_equilibrium(linear, u)
    stable = make_point(linear, [alpha], u)
    assert stable.stability is Stability.STABLE
    assert stable.det_hess_zz == pytest.approx(linear.k_c * linear.L0 * L)
    anti = make_point(linear, [alpha + math.pi], u)
    assert anti.stability is Stability.UNSTABLE
    assert anti.output.hess_zz[0, 0] == pytest.approx(-linear.k_c * linear.L0 * L)
    crit = make_point(linear, [0.0], linear.u_crit)
    assert crit.stability is Stability.CRITICAL
    assert classify_stability(stable) is Stability.STABLE


def test_classification_matches_eigenvalues(contact, rng):
    for _ in range(40):
        for p in find_equilibria(contact, rng.uniform(-1.5, 1.5, size=2)):
            eig = np.linalg.eigvalsh(p.output.hess_zz)
            if p.stability is Stability.STABLE:
                assert np.all(eig > 0)
            elif p.stability is Stability.UNSTABLE:
                assert np.any(eig < 0)


def test_two_solutions_on_pendulum_fiber(linear, rng):
    seeds = [[a] for a in np.arange(-math.pi, math.pi, math.pi / 8)]
    for _ in range(20):
        u = linear.u_crit + rng.uniform(-2, 2, size=2)
        if control_length(linear, u) < 0.1:
            continue
        pts = find_equilibria(linear, u, seeds=seeds)
        assert sorted(p.stability.value for p in pts) == ["stable", "unstable"]
        assert pts[0].energy <= pts[1].energy


def test_duplicate_seeds_are_idempotent(contact):
    u = [0.3, 0.2]
    a = find_equilibria(contact, u, seeds=[[0.5]])
    b = find_equilibria(contact, u, seeds=[[0.5]] * 7)
    assert len(a) == len(b) == 1
    assert np.array_equal(a[0].z_star, b[0].z_star)


def test_multistate_system_finds_all_nine():
    pts = find_equilibria(Quartic(), [0.05, -0.05], n_seeds=9)
    assert len(pts) == 9
    assert sum(p.stability is Stability.STABLE for p in pts) == 4


def test_tangent_zero_step(linear):
    p = solve_equilibrium(linear, [0.4, 5.3], [0.5])
    assert np.array_equal(tangent_step(p, [0.0, 0.0]), [0.0])


def test_tangent_radial_step_is_zero(linear):
    u = linear.u_crit + np.array([1.7, 0.0])
    p = solve_equilibrium(linear, u, [0.1])
    assert abs(tangent_step(p, [0.3, 0.0])[0]) < 1e-15


def test_tangent_map_shape_and_columns(linear, contact):
    for system, u in ((linear, [0.4, 5.3]), (contact, [0.6, 0.2])):
        p = find_equilibria(system, u)[0]
        T = tangent_map(p)
        assert T.matrix.shape == (system.n_states, system.n_controls)
        for k, e in enumerate(np.eye(system.n_controls)):
            assert np.array_equal(tangent_step(p, e), T.matrix[:, k])


def test_tangent_matches_closed_form_derivative(linear, rng):
    h = 1e-6
    for _ in range(20):
        u = linear.u_crit + rng.uniform(-2, 2, size=2)
        alpha, _ = analytic_equilibrium(linear, u)
        p = make_point(linear, [alpha], u)
        fd = [
            math.remainder(analytic_equilibrium(linear, u + h * e)[0] - analytic_equilibrium(linear, u - h * e)[0], 2 * math.pi)
            / (2 * h)
            for e in np.eye(2)
        ]
        assert np.allclose(tangent_map(p).matrix[0], fd, atol=1e-7)


@pytest.mark.parametrize("system_name,u", [("linear", [0.7, 5.4]), ("contact", [0.9, 0.3]), ("contact", [0.5, 0.45])])
def test_tangent_second_order_consistency(system_name, u, request):
    system = request.getfixturevalue(system_name)
    p = find_equilibria(system, u)[0]
    d = np.array([0.6, -0.8])
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        q = solve_equilibrium(system, p.u + h * d, p.z_star)
        errs.append(system.fiber_distance(q.z_star, p.z_star + tangent_step(p, h * d)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.0), ratios  # ~4 for a quadratic remainder


def test_corrector_stays_on_branch(contact, rng):
    for _ in range(30):
        u = rng.uniform(-1.5, 1.5, size=2)
        for p in find_equilibria(contact, u):
            if p.is_critical:
                continue
            du = 1e-6 * rng.standard_normal(2)
            q = solve_equilibrium(contact, u + du, p.z_star)
            assert contact.fiber_distance(q.z_star, p.z_star + tangent_step(p, du)) < 1e-6


def test_tangent_undefined_at_critical_point(linear):
    crit = make_point(linear, [0.0], linear.u_crit)
    with pytest.raises(SingularJacobian):
        tangent_map(crit)
