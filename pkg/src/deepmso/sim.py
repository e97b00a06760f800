"""Closed-loop experiment: plant, observer, inversion controller and online training."""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from deepmso import plant as pl
from deepmso.controller import ControllerConfig, compute_control, pd_slack_matrix
from deepmso.errors import ConfigurationError, InversionError, ObserverError, OptimizerError
from deepmso.madam import EXP_FORM, LINEAR_FORM, MadamHyper, layer_angle, madam_init, max_stable_eta
from deepmso.net import init_network, layer_specs
from deepmso.observer import (
    ObserverState,
    estimate_dynamics,
    observer_step,
    observer_train,
    training_loss,
)

log = logging.getLogger(__name__)

DEFAULT_X0 = (0.5, 0.5, 0.0, 0.0)


def _floats(values, n, name):
    values = tuple(float(v) for v in values)
    if len(values) != n:
        raise ConfigurationError(f"{name} needs {n} values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise ConfigurationError(f"{name} must be finite")
    return values


@dataclass(frozen=True)
class ControllerSettings:
    k: tuple = (7.5, 7.5, 7.5, 7.5)
    slack_gain: float = 7.5
    u_slack: tuple = (0.0, 0.0)
    torque_limit: tuple = None
    control_matrix: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "k", _floats(self.k, 4, "controller k"))
        object.__setattr__(self, "u_slack", _floats(self.u_slack, 2, "controller u_slack"))
        if any(v <= 0 for v in self.k):
            raise ConfigurationError("controller k entries must be positive")
        if self.torque_limit is not None:
            object.__setattr__(self, "torque_limit", _floats(self.torque_limit, 2, "controller torque_limit"))
            if any(v <= 0 for v in self.torque_limit):
                raise ConfigurationError("controller torque_limit entries must be positive")
        if self.control_matrix not in ("exact", "nominal"):
            raise ConfigurationError("controller control_matrix must be 'exact' or 'nominal'")


@dataclass(frozen=True)
class ObserverSettings:
    k2: tuple = (30.0, 30.0, 30.0, 30.0)
    error_scale: tuple = (1.0, 1.0, 1.0, 1.0)
    feedback: str = "stable"
    net_input: str = "measured"
    input_shift: tuple = (0.0, 0.0, 0.0, 0.0)
    input_scale: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("k2", "error_scale", "input_shift", "input_scale"):
            object.__setattr__(self, name, _floats(getattr(self, name), 4, f"observer {name}"))
        if any(v <= 0 for v in self.k2):
            raise ConfigurationError("observer k2 entries must be positive")
        if self.feedback not in ("stable", "as_printed"):
            raise ConfigurationError("observer feedback must be 'stable' or 'as_printed'")
        if self.net_input not in ("measured", "estimate"):
            raise ConfigurationError("observer net_input must be 'measured' or 'estimate'")


@dataclass(frozen=True)
class NetworkSettings:
    hidden: tuple = (20, 20, 20)
    init: str = "fan_in"
    bias_std: float = 0.0

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden)
        if not hidden or any(h <= 0 for h in hidden):
            raise ConfigurationError("network hidden widths must be positive")
        object.__setattr__(self, "hidden", hidden)
        if self.init not in ("fan_in", "depth"):
            raise ConfigurationError("network init must be 'fan_in' or 'depth'")
        if not self.bias_std >= 0:
            raise ConfigurationError("network bias_std must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 10.0
    x0: tuple = DEFAULT_X0
    x_hat0: tuple = None
    nn: bool = True
    oracle: bool = False
    seed: int = 1
    settle: float = 2.0
    integrator: str = "euler"
    plant: pl.PlantParams = field(default_factory=pl.PlantParams)
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    network: NetworkSettings = field(default_factory=NetworkSettings)
    madam: MadamHyper = field(default_factory=MadamHyper)
    madam_form: str = EXP_FORM

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError("sim dt must be positive")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise ConfigurationError("sim t_final must be at least dt")
        object.__setattr__(self, "x0", _floats(self.x0, 4, "sim x0"))
        if self.x_hat0 is not None:
            object.__setattr__(self, "x_hat0", _floats(self.x_hat0, 4, "sim x_hat0"))
        if self.integrator not in ("euler", "rk2"):
            raise ConfigurationError("sim integrator must be 'euler' or 'rk2'")
        if self.madam_form not in (EXP_FORM, LINEAR_FORM):
            raise ConfigurationError("madam form must be 'exp' or 'linear'")
        if not 0 <= self.settle < self.t_final:
            raise ConfigurationError("sim settle must lie in [0, t_final)")

    @property
    def n_steps(self):
        return int(math.floor(self.t_final / self.dt + 1e-9))


@dataclass
class RunLog:
    t: np.ndarray
    x: np.ndarray
    x_d: np.ndarray
    x_hat: np.ndarray
    u: np.ndarray
    u_slack: np.ndarray
    e_a: np.ndarray
    f_hat: np.ndarray
    f_true: np.ndarray
    loss: np.ndarray
    dt: float
    k_min: float
    abort_reason: str = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def aborted(self):
        return self.abort_reason is not None

    @property
    def e_r(self):
        return self.x - self.x_d

    @property
    def e_hat_r(self):
        return self.x_hat - self.x_d

    @property
    def f_tilde(self):
        return self.f_true - self.f_hat

    @property
    def ftilde_norm(self):
        # a run that diverged may hold values whose squares overflow; inf is the honest answer
        with np.errstate(over="ignore"):
            return np.linalg.norm(self.f_tilde, axis=1)


def _build(cfg):
    net = init_network(
        layer_specs(4, cfg.network.hidden, 4), cfg.seed, cfg.network.init, cfg.network.bias_std
    )
    obs = ObserverState(
        x_hat=cfg.x_hat0 if cfg.x_hat0 is not None else cfg.x0,
        k2=cfg.observer.k2,
        net=net,
        opt=madam_init(cfg.madam, net, cfg.madam_form),
        train_error_scale=cfg.observer.error_scale,
        feedback=cfg.observer.feedback,
        net_input=cfg.observer.net_input,
        input_shift=cfg.observer.input_shift,
        input_scale=cfg.observer.input_scale,
    )
    c = cfg.controller
    ctrl = ControllerConfig(
        k=np.array(c.k), b_slack=pd_slack_matrix(c.slack_gain), u_slack=np.array(c.u_slack),
        control_limits=None if c.torque_limit is None else np.array(c.torque_limit),
    )
    return obs, ctrl


def _advance(cfg, x, u):
    p = cfg.plant
    if cfg.integrator == "rk2":
        k1 = pl.plant_derivative(p, x, u)
        return x + cfg.dt * pl.plant_derivative(p, x + 0.5 * cfg.dt * k1, u)
    return x + cfg.dt * pl.plant_derivative(p, x, u)


def _steps(rows):
    # overflow on the way to an abort is reported through abort_reason, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        yield from range(rows)


def run_episode(cfg):
    """Simulate one closed-loop episode and return its :class:`RunLog`.

    Per step: reference, network estimate, control, training, then the plant
    and the observer both advance from the pre-step measurement.
    """
    obs, ctrl = _build(cfg)
    p = cfg.plant
    n = cfg.n_steps
    rows = n + 1
    t = np.arange(rows) * cfg.dt
    cols = {name: np.zeros((rows, 4)) for name in ("x", "x_d", "x_hat", "e_a", "f_hat", "f_true")}
    u_log = np.zeros((rows, 2))
    us_log = np.zeros((rows, 2))
    loss = np.zeros(rows)
    x = np.array(cfg.x0, dtype=float)
    B_nominal = pl.control_matrix(p, x) if cfg.controller.control_matrix == "nominal" else None
    learning = cfg.nn and not cfg.oracle
    abort = None
    last = -1
    for k in _steps(rows):
        try:
            if not np.all(np.isfinite(x)):
                raise ObserverError("plant state is not finite")
            ref = pl.reference(t[k])
            B = B_nominal if B_nominal is not None else pl.control_matrix(p, x)
            f_true = pl.true_dynamics(p, x)
            if cfg.oracle:
                f_hat = f_true
            elif cfg.nn:
                f_hat = estimate_dynamics(obs, x)
            else:
                f_hat = np.zeros(4)
            e_a = x - obs.x_hat
            u, u_bar = compute_control(ctrl, f_hat, x, ref, B)
            cols["x"][k] = x
            cols["x_d"][k] = ref.x_d
            cols["x_hat"][k] = obs.x_hat
            cols["e_a"][k] = e_a
            cols["f_hat"][k] = f_hat
            cols["f_true"][k] = f_true
            u_log[k] = u
            us_log[k] = u_bar[2:]
            loss[k] = training_loss(obs, e_a)
            last = k
            if k == n:
                break
            if learning:
                observer_train(obs, x, e_a)
            x_next = _advance(cfg, x, u)
            observer_step(obs, x, u, B, cfg.dt, f_hat)
            x = x_next
        except (ObserverError, OptimizerError, InversionError, FloatingPointError) as exc:
            abort = f"t={t[k]:.6g}: {exc}"
            log.warning("run aborted at %s", abort)
            break
    keep = slice(0, last + 1)
    meta = {
        "saturation_events": ctrl.saturation_events,
        "max_abs_weight": obs.net.max_abs_weight(),
        "optimizer_steps": obs.opt.step_count,
        "depth": obs.net.depth,
    }
    grads = getattr(obs, "last_grads", None)
    if grads is not None:
        gammas = [layer_angle(g, l.weights) for g, l in zip(grads.weights, obs.net.layers)]
        meta["final_gamma"] = gammas
        meta["max_stable_eta"] = min(max_stable_eta(g, obs.net.depth) for g in gammas)
    return RunLog(
        t=t[keep], x=cols["x"][keep], x_d=cols["x_d"][keep], x_hat=cols["x_hat"][keep],
        u=u_log[keep], u_slack=us_log[keep], e_a=cols["e_a"][keep], f_hat=cols["f_hat"][keep],
        f_true=cols["f_true"][keep], loss=loss[keep], dt=cfg.dt, k_min=ctrl.lambda_min,
        abort_reason=abort, meta=meta,
    )


def tracking_metrics(log, settle=2.0):
    window = log.t >= settle - 1e-12
    if not np.any(window):
        raise ValueError(f"no samples at or after t={settle}")
    e = log.e_r[window]
    norms = np.linalg.norm(e, axis=1)
    per_joint = np.sqrt(np.mean(e[:, :2] ** 2, axis=0))
    return {
        "rms_e_r": float(np.sqrt(np.mean(norms ** 2))),
        "max_e_r": float(norms.max()),
        "rms_joint": [float(v) for v in per_joint],
        "final_e_r": float(norms[-1]),
    }


def lyapunov_diagnostic(log, settle=2.0, tol=None):
    """Discrete check of ``V = ||e_r||^2`` against the ultimate bound ``eps / lambda_min(K)``.

    A step is a violation when the error lies outside the bound yet ``V``
    grows by more than ``tol`` (default ``10 dt``) to the next sample.
    """
    tol = 10 * log.dt if tol is None else tol
    er = np.linalg.norm(log.e_r, axis=1)
    eps = log.ftilde_norm
    V = er ** 2
    dV = np.diff(V)
    outside = er[:-1] > eps[:-1] / log.k_min
    flagged = outside & (dV > tol)
    window = log.t[:-1] >= settle - 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(eps > 0, er * log.k_min / eps, np.inf)
    post = eps[log.t >= settle - 1e-12]
    eps_hat = float(post.max()) if post.size else float("nan")
    steps = int(window.sum())
    violations = int((flagged & window).sum())
    return {
        "violations": violations,
        "steps": steps,
        "fraction": violations / steps if steps else 0.0,
        "ratio_series": ratio,
        "epsilon_hat": eps_hat,
        "uub_radius": eps_hat / log.k_min,
    }
