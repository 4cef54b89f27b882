"""Control forces, the control Hessian and the squared-Hessian path cost."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .equilibrium import EquilibriumPoint
from .errors import InvalidPath, SingularJacobian

PSD_CLAMP = 1e-10


@dataclass(frozen=True)
class ControlMetric:
    f_ctrl: np.ndarray
    G: np.ndarray
    G2: np.ndarray


def control_force(point: EquilibriumPoint) -> np.ndarray:
    return -point.output.grad_u


def _schur_solve(H: np.ndarray, B: np.ndarray) -> np.ndarray:
    # H^-1 B by Cholesky when H > 0, symmetric-indefinite solve otherwise
    try:
        c = scipy.linalg.cho_factor(H, check_finite=False)
        return scipy.linalg.cho_solve(c, B, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.solve(H, B, assume_a="sym", check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularJacobian(str(exc)) from exc


def control_hessian(point: EquilibriumPoint) -> np.ndarray:
    """Schur complement ``hess_uu - hess_uz hess_zz^-1 hess_uz^T``."""
    if point.is_critical:
        raise SingularJacobian("control Hessian undefined at a critical equilibrium")
    out = point.output
    Hzz = 0.5 * (out.hess_zz + out.hess_zz.T)
    X = _schur_solve(Hzz, out.hess_uz.T)
    G = out.hess_uu - out.hess_uz @ X
    return 0.5 * (G + G.T)


def square_psd(G: np.ndarray) -> np.ndarray:
    """``G @ G`` symmetrized, with rounding-level negative eigenvalues set to zero."""
    G2 = G @ G
    G2 = 0.5 * (G2 + G2.T)
    w, V = np.linalg.eigh(G2)
    if w[0] < 0.0:
        norm = float(np.max(np.abs(w)))
        if w[0] > -PSD_CLAMP * norm:
            w = np.where(w < 0.0, 0.0, w)
            G2 = (V * w) @ V.T
            G2 = 0.5 * (G2 + G2.T)
    return G2


def squared_hessian(point: EquilibriumPoint) -> np.ndarray:
    return square_psd(control_hessian(point))


def control_metric(point: EquilibriumPoint) -> ControlMetric:
    G = control_hessian(point)
    return ControlMetric(control_force(point), G, square_psd(G))


def quadratic_cost(G2: np.ndarray, delta_u) -> float:
    d = np.asarray(delta_u, dtype=float)
    return max(float(d @ G2 @ d), 0.0)


def path_cost(points: Sequence[EquilibriumPoint]) -> float:
    """Energy-form cost  sum_i du_i^T G^2(point_i) du_i  along a same-branch path."""
    if len(points) < 2:
        raise InvalidPath("a path needs at least two points")
    total = 0.0
    for p, q in zip(points[:-1], points[1:]):
        total += quadratic_cost(squared_hessian(p), q.u - p.u)
    return total


def path_length(points: Sequence[EquilibriumPoint]) -> float:
    """Square-root form  sum_i sqrt(du_i^T G^2 du_i); for reporting only."""
    if len(points) < 2:
        raise InvalidPath("a path needs at least two points")
    return float(
        sum(np.sqrt(quadratic_cost(squared_hessian(p), q.u - p.u)) for p, q in zip(points[:-1], points[1:]))
    )
