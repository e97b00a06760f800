"""Dynamic inversion with slack columns for a non-square control matrix.

The desired closed loop is ``Xdot - Xd_dot = -K (X - Xd)``. With the drift
replaced by its estimate this asks for ``B u = rhs``, which a 4x2 ``B`` cannot
satisfy. Appending slack columns gives a square ``[B  Bs]`` that is solved
for ``[u; us]``; only ``u`` is applied.

For the manipulator ``Bs = [I; -Ks]``. Solving the top (kinematic) rows
gives ``us``, and the bottom rows then yield

    u = M (rhs_acc + Ks rhs_vel)

so ``Ks`` injects position error into the torque. ``Ks = 0`` gives
``Bs = [I; 0]``, which throws the kinematic rows away entirely.
"""
from dataclasses import dataclass, field

import numpy as np

from deepmso.errors import ConfigurationError, InversionError

MAX_CONDITION = 1e12


def pd_slack_matrix(slack_gain, n_dof=2):
    g = np.broadcast_to(np.asarray(slack_gain, dtype=float), (n_dof,))
    return np.vstack([np.eye(n_dof), -np.diag(g)])


@dataclass
class ControllerConfig:
    k: np.ndarray
    b_slack: np.ndarray
    u_slack: np.ndarray = None
    control_limits: np.ndarray = None
    saturation_events: int = field(default=0, repr=False)

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float)
        if self.k.ndim == 1:
            self.k = np.diag(self.k)
        d = np.diag(self.k)
        if np.any(self.k != np.diag(d)) or np.any(d <= 0):
            raise ConfigurationError("k must be diagonal with positive entries")
        self.b_slack = np.asarray(self.b_slack, dtype=float)
        n = self.k.shape[0]
        if self.b_slack.shape[0] != n:
            raise ConfigurationError(f"b_slack needs {n} rows")
        if self.u_slack is None:
            self.u_slack = np.zeros(self.b_slack.shape[1])
        self.u_slack = np.asarray(self.u_slack, dtype=float)
        if self.control_limits is not None:
            self.control_limits = np.asarray(self.control_limits, dtype=float)
            if np.any(self.control_limits <= 0):
                raise ConfigurationError("control limits must be positive")

    @property
    def lambda_min(self):
        return float(np.min(np.diag(self.k)))


def augment_control_matrix(B, B_s):
    """``[B  Bs]`` and its 2-norm condition number; raises if it is numerically singular."""
    B_bar = np.hstack([np.asarray(B, float), np.asarray(B_s, float)])
    if B_bar.shape[0] != B_bar.shape[1]:
        raise InversionError(f"augmented control matrix is {B_bar.shape}, not square")
    cond = float(np.linalg.cond(B_bar))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise InversionError(f"augmented control matrix is singular (condition {cond:.3g})")
    return B_bar, cond


def control_rhs(cfg, f_hat, x, ref):
    return ref.x_d_dot - f_hat - cfg.k @ (np.asarray(x, float) - ref.x_d) + cfg.b_slack @ cfg.u_slack


def compute_control(cfg, f_hat, x, ref, B):
    """Return ``(u, u_bar)``; ``u_bar`` is the full solution including the slack part."""
    B_bar, _ = augment_control_matrix(B, cfg.b_slack)
    rhs = control_rhs(cfg, f_hat, x, ref)
    u_bar = np.linalg.solve(B_bar, rhs)
    u = u_bar[: np.shape(B)[1]].copy()
    if cfg.control_limits is not None:
        clipped = np.clip(u, -cfg.control_limits, cfg.control_limits)
        if np.any(clipped != u):
            cfg.saturation_events += 1
        u = clipped
    return u, u_bar
