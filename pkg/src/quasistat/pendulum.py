"""Elastically driven inverted pendulum: linear and contact-regularized springs.

Kinematics: hinge at the origin of the space frame, pendulum angle
``alpha`` measured from the x axis, tip at ``L0 * n_alpha``, centre of
mass at ``(L0/2) * n_alpha``.  The body frame is centred at the com and
rotates with the pendulum; in it the tip sits at ``(L0/2, 0)``.

Both systems have one internal state (the angle) and two controls (the
agent position ``u = (u_x, u_y)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalControl, DegenerateBoundary, DimensionError
from .potential import PotentialOutput, PotentialSystem, evaluate_full, output_from_joint, wrap_angle


@dataclass(frozen=True)
class Frame2D:
    n_alpha: np.ndarray
    n_alpha_perp: np.ndarray
    R_alpha: np.ndarray


def frames(alpha: float) -> Frame2D:
    c, s = math.cos(alpha), math.sin(alpha)
    return Frame2D(
        n_alpha=np.array([c, s]),
        n_alpha_perp=np.array([-s, c]),
        R_alpha=np.array([[c, -s], [s, c]]),
    )


class LinearSpringPendulum(PotentialSystem):
    """Inverted pendulum driven through a constant-stiffness spring at its tip.

    W(alpha, u) = 1/2 mg L0 sin(alpha) + 1/2 k_c |u - L0 n_alpha|^2
    """

    n_states = 1
    n_controls = 2

    def __init__(self, L0: float = 1.0, mg: float = 10.0, k_c: float = 1.0):
        if not (L0 > 0 and mg >= 0 and k_c > 0):
            raise ValueError("LinearSpringPendulum needs L0 > 0, mg >= 0, k_c > 0")
        self.L0 = float(L0)
        self.mg = float(mg)
        self.k_c = float(k_c)
        self.angular = (True,)
        super().__init__()

    def __repr__(self):
        return f"LinearSpringPendulum(L0={self.L0}, mg={self.mg}, k_c={self.k_c})"

    @property
    def u_crit(self) -> np.ndarray:
        return np.array([0.0, self.mg / (2.0 * self.k_c)])

    def evaluate(self, z, u) -> PotentialOutput:
        a = float(z[0])
        ux, uy = float(u[0]), float(u[1])
        c, s = math.cos(a), math.sin(a)
        L0, k, mg = self.L0, self.k_c, self.mg
        dx, dy = ux - L0 * c, uy - L0 * s
        value = 0.5 * mg * L0 * s + 0.5 * k * (dx * dx + dy * dy)
        gz = 0.5 * mg * L0 * c + k * L0 * (ux * s - uy * c)
        hzz = -0.5 * mg * L0 * s + k * L0 * (ux * c + uy * s)
        return PotentialOutput(
            value=value,
            grad_z=np.array([gz]),
            grad_u=np.array([k * dx, k * dy]),
            hess_zz=np.array([[hzz]]),
            hess_uz=np.array([[k * L0 * s], [-k * L0 * c]]),
            hess_uu=np.array([[k, 0.0], [0.0, k]]),
        )

    def state_derivatives(self, z, u):
        a = float(z[0])
        c, s = math.cos(a), math.sin(a)
        L0, k, mg = self.L0, self.k_c, self.mg
        ux, uy = float(u[0]), float(u[1])
        gz = 0.5 * mg * L0 * c + k * L0 * (ux * s - uy * c)
        hzz = -0.5 * mg * L0 * s + k * L0 * (ux * c + uy * s)
        return np.array([gz]), np.array([[hzz]])

    def energy(self, z, u):
        a = float(np.atleast_1d(z)[0])
        c, s = math.cos(a), math.sin(a)
        dx, dy = u[0] - self.L0 * c, u[1] - self.L0 * s
        return 0.5 * self.mg * self.L0 * s + 0.5 * self.k_c * (dx * dx + dy * dy)


# ---------------------------------------------------------------------------
# analytic oracles for the linear spring


def control_length(sys: LinearSpringPendulum, u) -> float:
    d = np.asarray(u, dtype=float) - sys.u_crit
    return float(math.hypot(d[0], d[1]))


def analytic_equilibrium(sys: LinearSpringPendulum, u) -> tuple[float, float]:
    """Stable equilibrium angle and control length ``L_u = |u - u_crit|``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise DimensionError("u must have length 2")
    L_u = control_length(sys, u)
    if L_u == 0.0:
        raise CriticalControl("u coincides with the critical control")
    return math.atan2(u[1] - sys.mg / (2.0 * sys.k_c), u[0]), L_u


def reduced_potential(sys: LinearSpringPendulum, u) -> float:
    """Energy along the stable branch, additive constant fixed to zero."""
    _, L_u = analytic_equilibrium(sys, u)
    return 0.5 * sys.k_c * (L_u - sys.L0) ** 2 + 0.5 * sys.mg * float(u[1])


def analytic_control_hessian(sys: LinearSpringPendulum, u) -> np.ndarray:
    alpha, L_u = analytic_equilibrium(sys, u)
    R = frames(alpha).R_alpha
    D = np.diag([sys.k_c, sys.k_c * (1.0 - sys.L0 / L_u)])
    return R @ D @ R.T


class LambdaCurve:
    """Closed-form optimal normalized length ``a e^alpha + b e^-alpha + 1``."""

    def __init__(self, a: float, b: float, alpha1: float, alpha2: float):
        self.a = a
        self.b = b
        self.alpha1 = alpha1
        self.alpha2 = alpha2

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return self.a * np.exp(alpha) + self.b * np.exp(-alpha) + 1.0

    def derivative(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return self.a * np.exp(alpha) - self.b * np.exp(-alpha)

    def second_derivative(self, alpha):
        return self(alpha) - 1.0

    def action(self) -> float:
        """Exact value of the normalized action  int (lam'^2 + (lam - 1)^2) d alpha."""
        a, b, a1, a2 = self.a, self.b, self.alpha1, self.alpha2
        return a * a * (math.exp(2 * a2) - math.exp(2 * a1)) - b * b * (math.exp(-2 * a2) - math.exp(-2 * a1))


def optimal_lambda(alpha1: float, alpha2: float, lambda1: float, lambda2: float) -> LambdaCurve:
    if alpha1 == alpha2:
        raise DegenerateBoundary("alpha1 and alpha2 must differ")
    M = np.array([[math.exp(alpha1), math.exp(-alpha1)], [math.exp(alpha2), math.exp(-alpha2)]])
    rhs = np.array([lambda1 - 1.0, lambda2 - 1.0])
    a, b = np.linalg.solve(M, rhs)
    return LambdaCurve(float(a), float(b), float(alpha1), float(alpha2))


def optimal_control_curve(sys: LinearSpringPendulum, alpha1, alpha2, L1, L2, samples: int) -> np.ndarray:
    """Sample the optimal control path; rows are ``(alpha, u_x, u_y)``."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    lam = optimal_lambda(alpha1, alpha2, L1 / sys.L0, L2 / sys.L0)
    alpha = np.linspace(alpha1, alpha2, samples)
    L = sys.L0 * lam(alpha)
    ux = L * np.cos(alpha)
    uy = L * np.sin(alpha) + sys.mg / (2.0 * sys.k_c)
    return np.column_stack([alpha, ux, uy])


def normalized_action(alpha, lam) -> float:
    """Discrete normalized action of a sampled length profile.

    Trapezoid rule on ``lam'^2 + (lam - 1)^2`` with ``lam'`` taken from
    second-order finite differences.  Multiply by ``(k_c L0)^2`` for the
    physical action.
    """
    alpha = np.asarray(alpha, dtype=float)
    lam = np.asarray(lam, dtype=float)
    dlam = np.gradient(lam, alpha, edge_order=2)
    return float(np.trapezoid(dlam**2 + (lam - 1.0) ** 2, alpha))


def curve_action(sys: LinearSpringPendulum, alpha, L) -> float:
    """Physical action  int u'^T G^2 u' d alpha  for ``u = u_crit + L n_alpha``."""
    return (sys.k_c * sys.L0) ** 2 * normalized_action(alpha, np.asarray(L) / sys.L0)


# ---------------------------------------------------------------------------
# contact-regularized spring


def _sech2(t: float) -> float:
    e = math.exp(-2.0 * abs(t))
    return 4.0 * e / (1.0 + e) ** 2


# Delta terms are capped here; beyond the cap they carry zero derivative.
DELTA_CAP = 1e12


class ContactPendulum(PotentialSystem):
    """Pendulum whose spring stiffness depends on penetration of the agent.

    The stiffness is ``k_min + (1 - tanh(d/d0))/2 * k_max`` with the
    penetration ``d`` given by the super-ellipse inside-outside function of
    the agent position expressed in the body frame.
    """

    n_states = 1
    n_controls = 2

    def __init__(
        self,
        L0: float = 1.0,
        W0: float = 0.1,
        mg: float = 10.0,
        k_min: float = 1.0,
        k_max: float = 1e4,
        eps: float = 0.1,
        d0: float | None = None,
        a: float | None = None,
        b: float | None = None,
        anchor: tuple[float, float] | None = None,
    ):
        self.L0 = float(L0)
        self.W0 = float(W0)
        self.mg = float(mg)
        self.k_min = float(k_min)
        self.k_max = float(k_max)
        self.eps = float(eps)
        self.d0 = 0.05 * self.L0 if d0 is None else float(d0)
        self.a = self.L0 / 2.0 if a is None else float(a)
        self.b = self.W0 / 2.0 if b is None else float(b)
        ax, ay = (self.L0 / 2.0, 0.0) if anchor is None else anchor
        self.anchor = (float(ax), float(ay))
        if not (self.L0 > 0 and self.W0 > 0 and self.mg >= 0):
            raise ValueError("ContactPendulum needs L0 > 0, W0 > 0, mg >= 0")
        if not (0.0 < self.eps < 2.0):
            raise ValueError("super-ellipse exponent eps must lie in (0, 2)")
        if not (0.0 < self.k_min < self.k_max):
            raise ValueError("need 0 < k_min < k_max")
        if not (self.d0 > 0 and self.a > 0 and self.b > 0):
            raise ValueError("d0, a, b must be positive")
        self.power = 2.0 / self.eps
        self._r_cap = DELTA_CAP ** (1.0 / self.power)
        self.angular = (True,)
        super().__init__()

    def __repr__(self):
        return (
            f"ContactPendulum(L0={self.L0}, W0={self.W0}, mg={self.mg}, k_min={self.k_min}, "
            f"k_max={self.k_max}, eps={self.eps}, d0={self.d0})"
        )

    def body_coordinates(self, alpha: float, u) -> tuple[float, float]:
        """Agent position in the com-centred body frame."""
        c, s = math.cos(alpha), math.sin(alpha)
        ux, uy = float(u[0]), float(u[1])
        return c * ux + s * uy - 0.5 * self.L0, -s * ux + c * uy

    def _term(self, x: float, scale: float) -> tuple[float, float, float]:
        # (|x|/scale)^p with first and second derivatives in x
        r = abs(x) / scale
        if r >= self._r_cap:
            return DELTA_CAP, 0.0, 0.0
        p = self.power
        if r == 0.0:
            return 0.0, 0.0, (2.0 / scale**2 if p == 2.0 else 0.0)
        rp2 = r ** (p - 2.0)
        rp1 = rp2 * r
        sign = 1.0 if x > 0 else -1.0
        return rp1 * r, p * rp1 * sign / scale, p * (p - 1.0) * rp2 / scale**2

    def evaluate(self, z, u) -> PotentialOutput:
        alpha = float(wrap_angle(float(z[0])))
        c, s = math.cos(alpha), math.sin(alpha)
        ux, uy = float(u[0]), float(u[1])
        half = 0.5 * self.L0
        x = c * ux + s * uy - half
        y = -s * ux + c * uy

        # joint coordinates q = (alpha, u_x, u_y)
        gx = np.array([y, c, s])
        gy = np.array([-(x + half), -s, c])
        Hx = np.array([[-(x + half), -s, c], [-s, 0.0, 0.0], [c, 0.0, 0.0]])
        Hy = np.array([[-y, -c, -s], [-c, 0.0, 0.0], [-s, 0.0, 0.0]])

        tx, dtx, ddtx = self._term(x, self.a)
        ty, dty, ddty = self._term(y, self.b)
        delta = tx + ty - 1.0
        g_delta = dtx * gx + dty * gy
        H_delta = ddtx * np.outer(gx, gx) + ddty * np.outer(gy, gy) + dtx * Hx + dty * Hy

        cx, cy = self.anchor
        ex, ey = x - cx, y - cy
        S = 0.5 * (ex * ex + ey * ey)
        g_S = ex * gx + ey * gy
        H_S = np.outer(gx, gx) + np.outer(gy, gy) + ex * Hx + ey * Hy

        t = delta / self.d0
        th = math.tanh(t)
        sech2 = _sech2(t)
        k = self.k_min + 0.5 * (1.0 - th) * self.k_max
        dk = -0.5 * self.k_max * sech2 / self.d0
        ddk = self.k_max * sech2 * th / self.d0**2

        wg = 0.5 * self.mg * self.L0
        value = wg * s + k * S
        grad = k * g_S + dk * S * g_delta
        grad[0] += wg * c
        hess = (
            k * H_S
            + dk * (np.outer(g_delta, g_S) + np.outer(g_S, g_delta))
            + dk * S * H_delta
            + ddk * S * np.outer(g_delta, g_delta)
        )
        hess[0, 0] -= wg * s
        return output_from_joint(value, grad, hess, 1)

    def state_derivatives(self, z, u):
        alpha = float(wrap_angle(float(z[0])))
        c, s = math.cos(alpha), math.sin(alpha)
        ux, uy = float(u[0]), float(u[1])
        half = 0.5 * self.L0
        x = c * ux + s * uy - half
        y = -s * ux + c * uy
        xa, ya = y, -(x + half)
        xaa, yaa = -(x + half), -y
        tx, dtx, ddtx = self._term(x, self.a)
        ty, dty, ddty = self._term(y, self.b)
        delta = tx + ty - 1.0
        d_a = dtx * xa + dty * ya
        d_aa = ddtx * xa * xa + ddty * ya * ya + dtx * xaa + dty * yaa
        cx, cy = self.anchor
        ex, ey = x - cx, y - cy
        S = 0.5 * (ex * ex + ey * ey)
        S_a = ex * xa + ey * ya
        S_aa = xa * xa + ya * ya + ex * xaa + ey * yaa
        t = delta / self.d0
        th = math.tanh(t)
        sech2 = _sech2(t)
        k = self.k_min + 0.5 * (1.0 - th) * self.k_max
        dk = -0.5 * self.k_max * sech2 / self.d0
        ddk = self.k_max * sech2 * th / self.d0**2
        wg = 0.5 * self.mg * self.L0
        g = wg * c + k * S_a + dk * S * d_a
        h = -wg * s + k * S_aa + 2.0 * dk * d_a * S_a + dk * S * d_aa + ddk * S * d_a * d_a
        return np.array([g]), np.array([[h]])

    def energy(self, z, u):
        alpha = float(np.atleast_1d(z)[0])
        x, y = self.body_coordinates(alpha, u)
        cx, cy = self.anchor
        S = 0.5 * ((x - cx) ** 2 + (y - cy) ** 2)
        k = contact_stiffness(inside_outside(x, y, self), self)
        return 0.5 * self.mg * self.L0 * math.sin(alpha) + k * S

    def penetration(self, alpha: float, u) -> float:
        x, y = self.body_coordinates(alpha, u)
        return inside_outside(x, y, self)

    def far_field(self, k_c: float | None = None) -> LinearSpringPendulum:
        """Linear pendulum that the contact model reduces to away from the body."""
        return LinearSpringPendulum(self.L0, self.mg, self.k_min if k_c is None else k_c)


def contact_stiffness(d, sys: ContactPendulum):
    d = np.asarray(d, dtype=float)
    k = sys.k_min + 0.5 * (1.0 - np.tanh(d / sys.d0)) * sys.k_max
    return float(k) if k.ndim == 0 else k


def inside_outside(x, y, sys: ContactPendulum):
    """Super-ellipse inside-outside value; negative inside the body."""
    x = np.abs(np.asarray(x, dtype=float)) / sys.a
    y = np.abs(np.asarray(y, dtype=float)) / sys.b
    p = sys.power
    r_cap = DELTA_CAP ** (1.0 / p)
    tx = np.where(x >= r_cap, DELTA_CAP, np.minimum(x, r_cap) ** p)
    ty = np.where(y >= r_cap, DELTA_CAP, np.minimum(y, r_cap) ** p)
    out = tx + ty - 1.0
    return float(out) if out.ndim == 0 else out


def contact_potential_eval(sys: ContactPendulum, cfg) -> PotentialOutput:
    return evaluate_full(sys, cfg)
