"""Numerical self-checks: derivative hygiene, Schur complements, covariance.

Each check samples configurations inside a control box with a fixed
seed, compares two independent computations and reports the worst
discrepancy against a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .equilibrium import EquilibriumPoint, Stability, find_equilibria, solve_equilibrium, tangent_map
from .errors import NonConvergence, QuasistatError, SingularJacobian
from .metric import control_hessian, path_cost, squared_hessian
from .pendulum import (
    ContactPendulum,
    LinearSpringPendulum,
    analytic_control_hessian,
    analytic_equilibrium,
    control_length,
)
from .potential import Configuration, PotentialSystem, RotatedControls, fd_check_derivatives, wrap_angle

# controls closer than this to the critical point are skipped
MIN_CONTROL_LENGTH = 0.05
# contact configurations need |Delta| at least this far from the stiffness transition
TRANSITION_MARGIN = 0.5
# and body-frame coordinates at least this far from the super-ellipse axes
AXIS_MARGIN = 1e-3


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance) and self.samples > 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} {self.value:10.3e}  (tol {self.tolerance:.0e}, n={self.samples})"


def format_report(results: Sequence[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# sampling


def _uniform_control(rng: np.random.Generator, bounds) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) if hi > lo else lo for lo, hi in bounds])


def admissible(system: PotentialSystem, z, u) -> bool:
    """Whether a configuration lies where the analytic derivatives are smooth."""
    if isinstance(system, LinearSpringPendulum):
        return control_length(system, u) > MIN_CONTROL_LENGTH
    if isinstance(system, ContactPendulum):
        alpha = float(np.atleast_1d(z)[0])
        x, y = system.body_coordinates(alpha, u)
        return (
            abs(system.penetration(alpha, u)) >= TRANSITION_MARGIN
            and abs(x) > AXIS_MARGIN
            and abs(y) > AXIS_MARGIN
        )
    return True


def random_configurations(system: PotentialSystem, bounds, count: int, rng: np.random.Generator, max_tries: int = 100):
    """``count`` admissible configurations with uniform states and controls in ``bounds``."""
    out = []
    tries = 0
    while len(out) < count and tries < max_tries * count:
        tries += 1
        z = np.array([rng.uniform(-np.pi, np.pi) if a else rng.uniform(-1.0, 1.0) for a in system.angular])
        u = _uniform_control(rng, bounds)
        if admissible(system, z, u):
            out.append(Configuration(z, u))
    return out


def stable_point(system: PotentialSystem, u, **kw) -> EquilibriumPoint | None:
    """Lowest-energy stable, non-critical equilibrium over ``u`` (if any)."""
    for p in find_equilibria(system, u, **kw):
        if p.stability is Stability.STABLE:
            return p
    return None


def random_stable_points(system: PotentialSystem, bounds, count: int, rng: np.random.Generator, max_tries: int = 20):
    out = []
    tries = 0
    while len(out) < count and tries < max_tries * count:
        tries += 1
        u = _uniform_control(rng, bounds)
        if isinstance(system, LinearSpringPendulum) and control_length(system, u) <= MIN_CONTROL_LENGTH:
            continue
        p = stable_point(system, u)
        if p is not None and admissible(system, p.z_star, u):
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# reduced potential by re-solving


def branch_energy(system: PotentialSystem, point: EquilibriumPoint, u, jump_tol: float = 1e-3) -> float:
    """Energy of the branch through ``point`` continued to the nearby control ``u``.

    The solve starts from the first-order prediction; landing farther than
    ``jump_tol`` from it means the continuation left the branch.
    """
    u = np.asarray(u, dtype=float)
    pred = point.z_star + tangent_map(point)(u - point.u)
    q = solve_equilibrium(system, u, pred)
    if system.fiber_distance(q.z_star, pred) > jump_tol:
        raise NonConvergence("continuation left the branch", q.z_star, float("nan"))
    return q.energy


_D1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}
_D2 = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}


def reduced_hessian_fd(system: PotentialSystem, point: EquilibriumPoint, h: float = 1e-4) -> np.ndarray:
    """Five-point finite-difference Hessian of the reduced potential at ``point``.

    Diagonal entries use the fourth-order second-derivative stencil; mixed
    entries apply the fourth-order first-derivative stencil along each axis.
    """
    k = point.u.size
    cache: dict[tuple, float] = {}

    def W(offset):
        key = tuple(offset)
        if key not in cache:
            cache[key] = branch_energy(system, point, point.u + h * np.asarray(offset, dtype=float))
        return cache[key]

    H = np.zeros((k, k))
    for i in range(k):
        for s, c in _D2.items():
            off = [0] * k
            off[i] = s
            H[i, i] += c * W(off)
        for j in range(i + 1, k):
            acc = 0.0
            for si, ci in _D1.items():
                for sj, cj in _D1.items():
                    off = [0] * k
                    off[i], off[j] = si, sj
                    acc += ci * cj * W(off)
            H[i, j] = H[j, i] = acc
    return H / (h * h)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale


def random_rotation(rng: np.random.Generator, k: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


# ---------------------------------------------------------------------------
# the checks


def check_derivatives(system, bounds, rng, count=50, tol=1e-5) -> CheckResult:
    cfgs = random_configurations(system, bounds, count, rng)
    worst = max((fd_check_derivatives(system, c).max_rel_error for c in cfgs), default=np.inf)
    return CheckResult("derivatives vs finite differences", worst, tol, len(cfgs))


def check_analytic_equilibrium(system: LinearSpringPendulum, bounds, rng, count=100, tol=1e-8) -> CheckResult:
    worst, n = 0.0, 0
    while n < count:
        u = _uniform_control(rng, bounds)
        if control_length(system, u) <= MIN_CONTROL_LENGTH:
            continue
        alpha, _ = analytic_equilibrium(system, u)
        guess = alpha + rng.uniform(-1.0, 1.0)
        p = solve_equilibrium(system, u, [guess])
        if p.stability is not Stability.STABLE:
            continue
        worst = max(worst, abs(float(wrap_angle(p.z_star[0] - alpha))))
        n += 1
    return CheckResult("equilibrium vs closed form", worst, tol, n)


def check_schur_closed_form(system: LinearSpringPendulum, bounds, rng, count=100, tol=1e-10) -> CheckResult:
    pts = random_stable_points(system, bounds, count, rng)
    worst = max((float(np.max(np.abs(control_hessian(p) - analytic_control_hessian(system, p.u)))) for p in pts), default=np.inf)
    return CheckResult("control Hessian vs closed form", worst, tol, len(pts))


def check_reduced_hessian(system, bounds, rng, count=10, tol=1e-4) -> CheckResult:
    worst, n = 0.0, 0
    for p in random_stable_points(system, bounds, count, rng):
        try:
            fd = reduced_hessian_fd(system, p)
        except QuasistatError:
            continue
        worst = max(worst, _rel(control_hessian(p), fd))
        n += 1
    return CheckResult("control Hessian vs reduced potential", worst, tol, n)


def rotated_point(base_point: EquilibriumPoint, rotated: RotatedControls) -> EquilibriumPoint:
    v = rotated.from_base(base_point.u)
    return solve_equilibrium(rotated, v, base_point.z_star, crit_threshold=base_point.crit_threshold)


def check_covariance(system, bounds, rng, count=20, tol=1e-8, path_steps=5, step=0.05) -> CheckResult:
    """G and G^2 transform as J^T (.) J; path cost is coordinate free."""
    worst, n = 0.0, 0
    pts = random_stable_points(system, bounds, count, rng)
    for p in pts:
        J = random_rotation(rng, p.u.size)
        rot = RotatedControls(system, J)
        q = rotated_point(p, rot)
        G, G2 = control_hessian(p), squared_hessian(p)
        worst = max(worst, _rel(control_hessian(q), J.T @ G @ J), _rel(squared_hessian(q), J.T @ G2 @ J))
        # a short same-branch path in both coordinate systems
        d = rng.standard_normal(p.u.size)
        d *= step / np.linalg.norm(d)
        path, path_rot = [p], [q]
        try:
            for _ in range(path_steps):
                prev = path[-1]
                u = prev.u + d
                nxt = solve_equilibrium(system, u, prev.z_star + tangent_map(prev)(d))
                path.append(nxt)
                path_rot.append(solve_equilibrium(rot, rot.from_base(u), nxt.z_star))
        except QuasistatError:
            continue
        if any(x.is_critical for x in path + path_rot):
            continue
        c1, c2 = path_cost(path), path_cost(path_rot)
        if c1 > 0:
            worst = max(worst, abs(c1 - c2) / c1)
        n += 1
    return CheckResult("covariance under control rotation", worst, tol, n)


def check_far_field(system: ContactPendulum, bounds, rng, count=50, tol=1e-8, margin=2.0) -> CheckResult:
    """Well outside the body the contact model reduces to the linear spring one."""
    lin = system.far_field()
    worst, n, tries = 0.0, 0, 0
    while n < count and tries < 100 * count:
        tries += 1
        alpha = rng.uniform(-np.pi, np.pi)
        u = _uniform_control(rng, bounds)
        if system.penetration(alpha, u) < margin:
            continue
        a, b = system.evaluate([alpha], u), lin.evaluate([alpha], u)
        worst = max(worst, _rel(a.full_hessian(), b.full_hessian()), _rel(a.grad_z, b.grad_z), _rel(a.grad_u, b.grad_u))
        n += 1
    return CheckResult("far field vs linear spring model", worst, tol, n)


CheckFn = Callable[..., CheckResult]


def default_checks(system: PotentialSystem) -> list[CheckFn]:
    checks: list[CheckFn] = [check_derivatives]
    if isinstance(system, LinearSpringPendulum):
        checks += [check_analytic_equilibrium, check_schur_closed_form]
    if isinstance(system, ContactPendulum):
        checks.append(check_far_field)
    checks += [check_reduced_hessian, check_covariance]
    return checks


def run_checks(system: PotentialSystem, bounds, seed: int = 0) -> list[CheckResult]:
    results = []
    for fn in default_checks(system):
        rng = np.random.default_rng(seed)
        try:
            results.append(fn(system, bounds, rng))
        except (QuasistatError, np.linalg.LinAlgError, SingularJacobian) as exc:
            results.append(CheckResult(f"{fn.__name__} raised {type(exc).__name__}", np.inf, 0.0, 0))
    return results
