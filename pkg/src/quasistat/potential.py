"""Potential systems W(z, u) and their derivative blocks.

A system splits its configuration into internal states ``z`` (length N)
and controls ``u`` (length K).  Concrete systems return all derivative
blocks up to second order from :meth:`PotentialSystem.evaluate`; the
finite-difference harness in this module is the validation oracle for
them.

Block orientation: ``hess_uz`` is K x N with entry ``[k, n] = d2W/du_k dz_n``,
i.e. the derivative of ``grad_z`` along the control directions.  The
transposed block ``hess_zu`` is never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, EvaluationError

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Map angles into [-pi, pi)."""
    return (np.asarray(x, dtype=float) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class Configuration:
    z: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.u))):
            raise DimensionError("configuration entries must be finite")


@dataclass(frozen=True)
class PotentialOutput:
    value: float
    grad_z: np.ndarray
    grad_u: np.ndarray
    hess_zz: np.ndarray
    hess_uz: np.ndarray
    hess_uu: np.ndarray

    @property
    def hess_zu(self) -> np.ndarray:
        return self.hess_uz.T

    def full_hessian(self) -> np.ndarray:
        """Joint Hessian over x = [z; u]."""
        return np.block([[self.hess_zz, self.hess_uz.T], [self.hess_uz, self.hess_uu]])

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.value)
            and all(
                np.all(np.isfinite(a))
                for a in (self.grad_z, self.grad_u, self.hess_zz, self.hess_uz, self.hess_uu)
            )
        )


def output_from_joint(value: float, grad: np.ndarray, hess: np.ndarray, n: int) -> PotentialOutput:
    """Split a joint gradient/Hessian over x = [z; u] into blocks."""
    hess = 0.5 * (hess + hess.T)
    return PotentialOutput(
        value=float(value),
        grad_z=grad[:n].copy(),
        grad_u=grad[n:].copy(),
        hess_zz=hess[:n, :n].copy(),
        hess_uz=hess[n:, :n].copy(),
        hess_uu=hess[n:, n:].copy(),
    )


class PotentialSystem:
    """Smooth potential over internal states and controls.

    Subclasses set ``n_states`` and ``n_controls`` and implement
    :meth:`evaluate`.  ``angular`` marks internal-state coordinates that
    live on the circle; fiber distances and normalization wrap those
    modulo 2*pi.  Instances must be immutable after construction.
    """

    n_states: int = 0
    n_controls: int = 0
    angular: tuple[bool, ...] = ()
    # natural seeding range for non-angular states
    state_bounds: tuple[tuple[float, float], ...] | None = None

    def __init__(self):
        self._check_dims()

    def _check_dims(self):
        if self.n_states < 1 or self.n_controls < 1:
            raise DimensionError(
                f"systems need at least one state and one control, got N={self.n_states}, K={self.n_controls}"
            )
        if not self.angular:
            self.angular = (False,) * self.n_states
        if len(self.angular) != self.n_states:
            raise DimensionError("angular mask length must equal the number of states")

    @property
    def dims(self) -> tuple[int, int]:
        return (self.n_states, self.n_controls)

    def evaluate(self, z: np.ndarray, u: np.ndarray) -> PotentialOutput:
        raise NotImplementedError

    def energy(self, z: np.ndarray, u: np.ndarray) -> float:
        """Potential value only; subclasses may override with a cheaper path."""
        return self.evaluate(z, u).value

    def state_derivatives(self, z: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(grad_z, hess_zz)`` only; the Newton loop calls this on every iterate."""
        out = self.evaluate(z, u)
        return out.grad_z, out.hess_zz

    def fiber_distance(self, z1, z2) -> float:
        d = np.atleast_1d(np.asarray(z1, dtype=float) - np.asarray(z2, dtype=float))
        if d.shape != (self.n_states,):
            raise DimensionError(f"expected states of length {self.n_states}, got {d.shape}")
        if d.size == 1:
            x = float(d[0])
            return abs((x + np.pi) % TWO_PI - np.pi) if self.angular[0] else abs(x)
        mask = np.asarray(self.angular, dtype=bool)
        d = np.where(mask, np.abs(wrap_angle(d)), d)
        return float(np.linalg.norm(d))

    def normalize(self, z) -> np.ndarray:
        """Canonical representative of a state (angles wrapped to [-pi, pi))."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        mask = np.asarray(self.angular, dtype=bool)
        return np.where(mask, wrap_angle(z), z)

    def seed_states(self, count: int = 16) -> list[np.ndarray]:
        """Uniform seeds over the natural range of the fiber."""
        axes = []
        for i, is_angle in enumerate(self.angular):
            if is_angle:
                axes.append(np.linspace(-np.pi, np.pi, count, endpoint=False))
            elif self.state_bounds is not None:
                lo, hi = self.state_bounds[i]
                axes.append(np.linspace(lo, hi, count))
            else:
                raise NotImplementedError("non-angular states need state_bounds for seeding")
        grids = np.meshgrid(*axes, indexing="ij")
        return [np.array(p) for p in zip(*(g.ravel() for g in grids))]


def _as_vector(x, length: int, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.shape != (length,):
        raise DimensionError(f"{name} must have length {length}, got shape {v.shape}")
    return v


def evaluate_full(system: PotentialSystem, cfg: Configuration) -> PotentialOutput:
    """Evaluate value and all derivative blocks at ``cfg`` with checks."""
    n, k = system.dims
    z = _as_vector(cfg.z, n, "z")
    u = _as_vector(cfg.u, k, "u")
    out = system.evaluate(z, u)
    if not out.is_finite():
        raise EvaluationError(f"non-finite potential output at z={z}, u={u}")
    return out


class RotatedControls(PotentialSystem):
    """The base system expressed in rotated control coordinates.

    With an orthonormal ``J`` (K x K), the new controls are ``v = J^T u``
    and ``W~(z, v) = W(z, J v)``.
    """

    def __init__(self, base: PotentialSystem, J):
        J = np.asarray(J, dtype=float)
        k = base.n_controls
        if J.shape != (k, k):
            raise DimensionError(f"J must be {k}x{k}")
        if not np.allclose(J.T @ J, np.eye(k), atol=1e-12):
            raise ValueError("J must be orthonormal")
        self.base = base
        self.J = J
        self.n_states = base.n_states
        self.n_controls = k
        self.angular = base.angular
        self.state_bounds = base.state_bounds
        super().__init__()

    def to_base(self, v) -> np.ndarray:
        return self.J @ np.asarray(v, dtype=float)

    def from_base(self, u) -> np.ndarray:
        return self.J.T @ np.asarray(u, dtype=float)

    def evaluate(self, z, v):
        out = self.base.evaluate(z, self.to_base(v))
        J = self.J
        return PotentialOutput(
            value=out.value,
            grad_z=out.grad_z,
            grad_u=J.T @ out.grad_u,
            hess_zz=out.hess_zz,
            hess_uz=J.T @ out.hess_uz,
            hess_uu=J.T @ out.hess_uu @ J,
        )

    def fiber_distance(self, z1, z2):
        return self.base.fiber_distance(z1, z2)


# ---------------------------------------------------------------------------
# finite-difference validation


@dataclass
class BlockCheck:
    name: str
    rel_error: float
    scale: float
    noise: float

    @property
    def reliable(self) -> bool:
        # the FD estimate cannot resolve the block to 1e-3 when noise dominates
        return self.scale > 1e3 * self.noise or self.scale == 0.0


@dataclass
class DerivativeReport:
    step: float
    blocks: list[BlockCheck] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        errs = [b.rel_error for b in self.blocks if b.reliable]
        return max(errs) if errs else 0.0

    @property
    def unreliable(self) -> list[str]:
        return [b.name for b in self.blocks if not b.reliable]

    def passed(self, tol: float = 1e-5) -> bool:
        return self.max_rel_error <= tol

    def __getitem__(self, name: str) -> BlockCheck:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


def _central(f, x: np.ndarray, step: float) -> np.ndarray:
    """Central differences of a (vector-valued) function, one column per coordinate."""
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * step))
    return np.stack([np.atleast_1d(c) for c in cols], axis=-1)


def _compare(name, analytic, estimate, noise) -> BlockCheck:
    analytic = np.atleast_1d(analytic)
    estimate = np.atleast_1d(estimate).reshape(analytic.shape)
    scale = float(max(np.max(np.abs(analytic)), np.max(np.abs(estimate))))
    diff = float(np.max(np.abs(analytic - estimate)))
    rel = 0.0 if diff == 0.0 else diff / max(scale, np.finfo(float).tiny)
    return BlockCheck(name, rel, scale, noise)


def fd_check_derivatives(system: PotentialSystem, cfg: Configuration, step: float = 1e-5) -> DerivativeReport:
    """Compare analytic blocks to central differences of the next-lower block.

    Gradients are checked against differences of the value, Hessian blocks
    against differences of the gradients.  ``hess_uz`` is checked twice:
    once by differencing ``grad_z`` along u and once by differencing
    ``grad_u`` along z (Schwarz symmetry).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    out = evaluate_full(system, cfg)
    z, u = cfg.z, cfg.u
    eps = np.finfo(float).eps

    def ev(zz, uu):
        return system.evaluate(zz, uu)

    fd_gz = _central(lambda x: ev(x, u).value, z, step)
    fd_gu = _central(lambda x: ev(z, x).value, u, step)
    # d(grad_z)/dz -> N x N ; d(grad_z)/du -> N x K ; d(grad_u)/du -> K x K ; d(grad_u)/dz -> K x N
    fd_hzz = _central(lambda x: ev(x, u).grad_z, z, step)
    fd_hzu = _central(lambda x: ev(z, x).grad_z, u, step)
    fd_huu = _central(lambda x: ev(z, x).grad_u, u, step)
    fd_huz = _central(lambda x: ev(x, u).grad_u, z, step)

    value_noise = eps * max(abs(out.value), 1.0) / step
    gz_noise = eps * max(np.max(np.abs(out.grad_z)), 1.0) / step
    gu_noise = eps * max(np.max(np.abs(out.grad_u)), 1.0) / step

    report = DerivativeReport(step)
    report.blocks.append(_compare("grad_z", out.grad_z, fd_gz.ravel(), value_noise))
    report.blocks.append(_compare("grad_u", out.grad_u, fd_gu.ravel(), value_noise))
    report.blocks.append(_compare("hess_zz", out.hess_zz, fd_hzz, gz_noise))
    report.blocks.append(_compare("hess_uz", out.hess_uz, fd_hzu.T, gz_noise))
    report.blocks.append(_compare("hess_uz_sym", out.hess_uz, fd_huz, gu_noise))
    report.blocks.append(_compare("hess_uu", out.hess_uu, fd_huu, gu_noise))
    return report


def fiber_distance(system: PotentialSystem, z1, z2) -> float:
    n = system.n_states
    return system.fiber_distance(_as_vector(z1, n, "z1"), _as_vector(z2, n, "z2"))


def make_configuration(system: PotentialSystem, z: Sequence[float] | float, u: Sequence[float]) -> Configuration:
    n, k = system.dims
    return Configuration(_as_vector(z, n, "z"), _as_vector(u, k, "u"))
