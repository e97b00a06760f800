"""Two-link planar manipulator with point masses at the link tips.

Joint angles are measured from the horizontal, so gravity acts through
``cos(q1)`` and ``cos(q1 + q2)``. The state vector is ``[q1, q2, q1dot, q2dot]``
and is never wrapped.

    M(q) qddot + Vm(q, qdot) qdot + G(q) = tau
"""
from dataclasses import dataclass
import math

import numpy as np

from deepmso.errors import ConfigurationError

STATE_DIM = 4
CONTROL_DIM = 2


@dataclass(frozen=True)
class PlantParams:
    l1: float = 1.0
    l2: float = 1.0
    m1: float = 1.0
    m2: float = 2.3
    gravity: float = 9.81

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"plant {name} must be positive, got {value!r}")
        if not (math.isfinite(self.gravity) and self.gravity >= 0):
            raise ConfigurationError(f"plant gravity must be non-negative, got {self.gravity!r}")


@dataclass(frozen=True)
class ReferenceSignal:
    """Desired state and its time derivative (the desired dynamics)."""

    x_d: np.ndarray
    x_d_dot: np.ndarray


def _terms(p, q1, q2, d1, d2):
    # Scalar entries of M, Vm, G; shared by the array API and the hot path.
    c2 = math.cos(q2)
    s2 = math.sin(q2)
    a = p.m2 * p.l2 * p.l2
    b = p.m2 * p.l1 * p.l2
    m11 = p.m1 * p.l1 * p.l1 + p.m2 * p.l1 * p.l1 + 2.0 * b * c2 + a
    m12 = b * c2 + a
    m22 = a
    h = b * s2
    v11, v12 = -h * d2, -h * (d1 + d2)
    v21, v22 = h * d1, 0.0
    c12 = math.cos(q1 + q2)
    g2 = p.m2 * p.gravity * p.l2 * c12
    g1 = (p.m1 + p.m2) * p.gravity * p.l1 * math.cos(q1) + g2
    return m11, m12, m22, v11, v12, v21, v22, g1, g2


def manipulator_matrices(p, x):
    """Return ``(M, Vm, G)`` at state ``x``.

    ``Vm`` is built from the Christoffel symbols of ``M`` so that
    ``Mdot - 2 Vm`` is skew-symmetric.
    """
    q1, q2, d1, d2 = (float(v) for v in x)
    m11, m12, m22, v11, v12, v21, v22, g1, g2 = _terms(p, q1, q2, d1, d2)
    M = np.array([[m11, m12], [m12, m22]])
    Vm = np.array([[v11, v12], [v21, v22]])
    G = np.array([g1, g2])
    return M, Vm, G


def inertia_rate(p, x):
    """Time derivative of ``M(q)`` along ``qdot``."""
    q2, d2 = float(x[1]), float(x[3])
    b = p.m2 * p.l1 * p.l2 * math.sin(q2) * d2
    return np.array([[-2.0 * b, -b], [-b, 0.0]])


def plant_derivative(p, x, tau):
    """``[qdot; M^-1 (tau - Vm qdot - G)]``."""
    q1, q2, d1, d2 = (float(v) for v in x)
    m11, m12, m22, v11, v12, v21, v22, g1, g2 = _terms(p, q1, q2, d1, d2)
    r1 = float(tau[0]) - (v11 * d1 + v12 * d2) - g1
    r2 = float(tau[1]) - (v21 * d1 + v22 * d2) - g2
    det = m11 * m22 - m12 * m12
    return np.array([d1, d2, (m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det])


def true_dynamics(p, x):
    """Unforced drift ``f(X) + f_check(X)``; the quantity the network learns."""
    return plant_derivative(p, x, (0.0, 0.0))


def control_matrix(p, x):
    """``B(q) = [0; M^-1(q)]``, shape 4x2."""
    q1, q2 = float(x[0]), float(x[1])
    m11, m12, m22, *_ = _terms(p, q1, q2, 0.0, 0.0)
    det = m11 * m22 - m12 * m12
    B = np.zeros((STATE_DIM, CONTROL_DIM))
    B[2, 0] = m22 / det
    B[2, 1] = B[3, 0] = -m12 / det
    B[3, 1] = m11 / det
    return B


def energy(p, x):
    """Kinetic plus potential energy; potential is zero with both links horizontal."""
    q1, q2 = float(x[0]), float(x[1])
    qd = np.asarray(x[2:], dtype=float)
    M, _, _ = manipulator_matrices(p, x)
    kinetic = 0.5 * qd @ M @ qd
    potential = p.gravity * (
        p.m1 * p.l1 * math.sin(q1) + p.m2 * (p.l1 * math.sin(q1) + p.l2 * math.sin(q1 + q2))
    )
    return float(kinetic + potential)


def reference(t, omega=0.5):
    """Joint-space reference ``q_d = [sin(wt), cos(wt)]`` and its derivatives."""
    if t < 0:
        raise ValueError(f"reference time must be non-negative, got {t}")
    s = math.sin(omega * t)
    c = math.cos(omega * t)
    w2 = omega * omega
    x_d = np.array([s, c, omega * c, -omega * s])
    x_d_dot = np.array([omega * c, -omega * s, -w2 * s, -w2 * c])
    return ReferenceSignal(x_d, x_d_dot)


def passivity_residual(p, x0, torque, t_final=10.0, dt=1e-5):
    """Integrate the open-loop arm under ``torque(t)`` and return the energy balance error.

    The result is ``E(T) - E(0) - int_0^T qdot . tau dt``, which vanishes for
    exact dynamics. Integration uses the explicit midpoint rule and the
    supplied power is accumulated with the trapezoid rule, both second order.
    """
    x = np.asarray(x0, dtype=float).copy()
    e0 = energy(p, x)
    work = 0.0
    n = int(round(t_final / dt))
    tau0 = torque(0.0)
    for k in range(n):
        t = k * dt
        k1 = plant_derivative(p, x, tau0)
        k2 = plant_derivative(p, x + 0.5 * dt * k1, torque(t + 0.5 * dt))
        x_next = x + dt * k2
        tau1 = torque(t + dt)
        work += 0.5 * dt * (x[2] * tau0[0] + x[3] * tau0[1] + x_next[2] * tau1[0] + x_next[3] * tau1[1])
        x = x_next
        tau0 = tau1
    return energy(p, x) - e0 - work
