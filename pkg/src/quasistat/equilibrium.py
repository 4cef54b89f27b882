"""Equilibrium solving, stability classification and first-order tangents."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import NonConvergence, SingularJacobian
from .potential import PotentialOutput, PotentialSystem, _as_vector

DEFAULT_TOL = 1e-10
DEFAULT_CRIT = 1e-8
DEFAULT_DEDUP = 1e-6
MIN_STEP = 1e-12


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    CRITICAL = "critical"


@dataclass(frozen=True)
class EquilibriumPoint:
    z_star: np.ndarray
    u: np.ndarray
    energy: float
    stability: Stability
    det_hess_zz: float
    output: PotentialOutput = field(repr=False)
    crit_threshold: float = field(default=DEFAULT_CRIT, repr=False)

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.output.grad_z)))

    @property
    def is_critical(self) -> bool:
        return self.stability is Stability.CRITICAL


@dataclass(frozen=True)
class TangentMap:
    matrix: np.ndarray

    def __call__(self, delta_u) -> np.ndarray:
        return self.matrix @ np.asarray(delta_u, dtype=float)


def _sym(H: np.ndarray) -> np.ndarray:
    return 0.5 * (H + H.T)


def _criticality_scale(out: PotentialOutput) -> float:
    # hess_zz alone cannot set a scale for N = 1, so use the whole Hessian
    scale = max(
        float(np.max(np.abs(out.hess_zz))),
        float(np.max(np.abs(out.hess_uz))),
        float(np.max(np.abs(out.hess_uu))),
    )
    return scale if scale > 0.0 else 1.0


def _classify(out: PotentialOutput, crit_threshold: float) -> Stability:
    H = out.hess_zz
    eig = H.ravel() if H.size == 1 else np.linalg.eigvalsh(_sym(H))
    tol = crit_threshold * _criticality_scale(out)
    if np.min(np.abs(eig)) <= tol:
        return Stability.CRITICAL
    if eig[0] > tol:
        return Stability.STABLE
    return Stability.UNSTABLE


def classify_stability(point: EquilibriumPoint, crit_threshold: float = DEFAULT_CRIT) -> Stability:
    """Stable when hess_zz is positive definite, Critical when it is (relatively) singular.

    The threshold is relative to the largest entry of the full Hessian
    over (z, u).
    """
    return _classify(point.output, crit_threshold)


def make_point(system: PotentialSystem, z, u, crit_threshold: float = DEFAULT_CRIT) -> EquilibriumPoint:
    """Wrap an already-solved state into an :class:`EquilibriumPoint`."""
    z = system.normalize(z)
    u = np.asarray(u, dtype=float)
    out = system.evaluate(z, u)
    return EquilibriumPoint(
        z_star=z,
        u=u.copy(),
        energy=out.value,
        stability=_classify(out, crit_threshold),
        det_hess_zz=float(np.linalg.det(out.hess_zz)),
        output=out,
        crit_threshold=crit_threshold,
    )


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    H = _sym(H)
    scale = float(np.max(np.abs(H)))
    if scale > 0.0:
        try:
            lu = scipy.linalg.lu_factor(H, check_finite=False)
            if np.min(np.abs(np.diag(lu[0]))) > 1e-14 * scale:
                return -scipy.linalg.lu_solve(lu, g, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            pass
    # damped fallback: Levenberg step on the merit |g|^2
    mu = max(scale, float(np.max(np.abs(g))), 1.0) * 1e-6
    A = H.T @ H + mu * np.eye(H.shape[0])
    try:
        step = -np.linalg.solve(A, H.T @ g)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian("hess_zz singular and damped step failed") from exc
    if not np.all(np.isfinite(step)) or np.max(np.abs(step)) == 0.0:
        raise SingularJacobian("hess_zz singular and damped step vanished")
    return step


def _newton_scalar(system: PotentialSystem, u: np.ndarray, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    # same iteration as the vector loop, kept in floats for single-state systems
    zs = np.empty(1)

    def derivs(x):
        zs[0] = x
        g, H = system.state_derivatives(zs, u)
        return float(g[0]), float(H[0, 0])

    x = float(z[0])
    g, h = derivs(x)
    it = 0
    while abs(g) > tol:
        if it >= max_iter:
            raise NonConvergence(f"no convergence in {max_iter} iterations", np.array([x]), abs(g))
        it += 1
        if abs(h) > 1e-14 * abs(g) and h != 0.0:
            p = -g / h
        elif h != 0.0 or g != 0.0:
            # damped step on the merit g^2
            mu = max(abs(h), abs(g), 1.0) * 1e-6
            p = -h * g / (h * h + mu)
            if p == 0.0:
                raise SingularJacobian("hess_zz singular and damped step vanished")
        phi = g * g
        t = 1.0
        while True:
            x_new = x + t * p
            g_new, h_new = derivs(x_new)
            phi_new = g_new * g_new
            if phi_new == phi_new and phi_new <= (1.0 - 1e-4 * t) * phi:
                break
            t *= 0.5
            if t < MIN_STEP:
                raise NonConvergence("line search stalled", np.array([x]), abs(g))
        x, g, h = x_new, g_new, h_new
    # one polishing step: converged Newton is quadratic, so this reaches rounding level
    if g != 0.0 and h != 0.0:
        x_new = x - g / h
        g_new, _ = derivs(x_new)
        if abs(g_new) < abs(g):
            x = x_new
    return np.array([x])


def _solve_state(system: PotentialSystem, u: np.ndarray, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    if z.size == 1:
        return _newton_scalar(system, u, z, tol, max_iter)
    g, H = system.state_derivatives(z, u)
    res = float(np.max(np.abs(g)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergence(f"no convergence in {max_iter} iterations", z, res)
        it += 1
        p = _newton_direction(H, g)
        phi = float(g @ g)
        t = 1.0
        while True:
            z_new = z + t * p
            g_new, H_new = system.state_derivatives(z_new, u)
            phi_new = float(g_new @ g_new)
            if np.isfinite(phi_new) and phi_new <= (1.0 - 1e-4 * t) * phi:
                break
            t *= 0.5
            if t < MIN_STEP:
                raise NonConvergence("line search stalled", z, res)
        z, g, H = z_new, g_new, H_new
        res = float(np.max(np.abs(g)))
    if res > 0.0:
        try:
            z_new = z + _newton_direction(H, g)
        except SingularJacobian:
            return z
        g_new, _ = system.state_derivatives(z_new, u)
        if float(np.max(np.abs(g_new))) < res:
            z = z_new
    return z


def solve_equilibrium(
    system: PotentialSystem,
    u,
    z_init,
    tol: float = DEFAULT_TOL,
    max_iter: int = 50,
    crit_threshold: float = DEFAULT_CRIT,
) -> EquilibriumPoint:
    """Newton iteration on grad_z(z, u) = 0 with backtracking on |grad_z|^2.

    Raises NonConvergence (carrying the last iterate) when the residual
    stays above ``tol`` after ``max_iter`` steps or the line search stalls,
    and SingularJacobian when neither the Newton nor the damped step exists.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    n, k = system.dims
    u = _as_vector(u, k, "u")
    z = _as_vector(z_init, n, "z_init").copy()
    z = _solve_state(system, u, z, tol, max_iter)
    return make_point(system, z, u, crit_threshold)


def find_equilibria(
    system: PotentialSystem,
    u,
    seeds: Iterable | None = None,
    tol: float = DEFAULT_TOL,
    dedup_radius: float = DEFAULT_DEDUP,
    max_iter: int = 50,
    n_seeds: int = 16,
    crit_threshold: float = DEFAULT_CRIT,
) -> list[EquilibriumPoint]:
    """All equilibria reachable from the seeds, deduplicated, sorted by energy."""
    seeds = list(system.seed_states(n_seeds) if seeds is None else seeds)
    if not seeds:
        raise ValueError("seed list must be nonempty")
    n, k = system.dims
    u = _as_vector(u, k, "u")
    states = []
    for seed in seeds:
        try:
            z = _solve_state(system, u, _as_vector(seed, n, "seed").copy(), tol, max_iter)
        except (NonConvergence, SingularJacobian):
            continue
        z = system.normalize(z)
        states.append((system.energy(z, u), tuple(z)))
    # deterministic order before deduplication: energy, then fiber coordinate
    states.sort()
    kept: list[np.ndarray] = []
    for _, z in states:
        z = np.array(z)
        if all(system.fiber_distance(z, q) > dedup_radius for q in kept):
            kept.append(z)
    points = [make_point(system, z, u, crit_threshold) for z in kept]
    points.sort(key=lambda p: (p.energy, tuple(p.z_star)))
    return points


def _require_noncritical(point: EquilibriumPoint):
    if point.is_critical:
        raise SingularJacobian("tangent undefined at a critical equilibrium")


def tangent_map(point: EquilibriumPoint) -> TangentMap:
    """Matrix ``dz/du = -(hess_zz)^-1 hess_uz^T`` at a non-critical equilibrium."""
    _require_noncritical(point)
    out = point.output
    try:
        M = -np.linalg.solve(_sym(out.hess_zz), out.hess_uz.T)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian(str(exc)) from exc
    return TangentMap(np.atleast_2d(M))


def tangent_step(point: EquilibriumPoint, delta_u) -> np.ndarray:
    delta_u = _as_vector(delta_u, point.u.size, "delta_u")
    return tangent_map(point)(delta_u)
