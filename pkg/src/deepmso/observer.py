"""Deep-network modified state observer.

The observer keeps an estimate ``x_hat`` of the plant state and propagates it
with the network's estimate of the full plant drift::

    x_hat' = f_hat(X) + B u + s * K2 (X - x_hat)

``s = +1`` (``feedback="stable"``, the default) makes the estimation error
contract at rate ``K2``. ``feedback="as_printed"`` uses ``s = -1``, which
makes the unforced estimation error grow at rate ``K2`` instead.
The network is trained every control cycle on ``e_a = X - x_hat``.
"""
from dataclasses import dataclass, field

import numpy as np

from deepmso import net as nn
from deepmso.errors import ConfigurationError, InputError, ObserverError
from deepmso.madam import madam_step

FEEDBACK_SIGNS = {"stable": 1.0, "as_printed": -1.0}


@dataclass
class ObserverState:
    x_hat: np.ndarray
    k2: np.ndarray
    net: nn.Network
    opt: object
    train_error_scale: np.ndarray = None
    feedback: str = "stable"
    net_input: str = "measured"
    input_shift: np.ndarray = None
    input_scale: np.ndarray = None
    last_grads: object = field(default=None, repr=False)
    _cache: object = field(default=None, repr=False)

    def __post_init__(self):
        self.x_hat = np.array(self.x_hat, dtype=float)
        n = self.x_hat.shape[0]
        self.k2 = _diag(self.k2, n, "k2")
        if np.any(np.diag(self.k2) <= 0):
            raise ConfigurationError("k2 diagonal entries must be positive")
        if self.train_error_scale is None:
            self.train_error_scale = np.eye(n)
        self.train_error_scale = _diag(self.train_error_scale, n, "train_error_scale")
        if self.feedback not in FEEDBACK_SIGNS:
            raise ConfigurationError(f"feedback must be one of {sorted(FEEDBACK_SIGNS)}")
        if self.net_input not in ("measured", "estimate"):
            raise ConfigurationError("net_input must be 'measured' or 'estimate'")
        self.input_shift = np.zeros(n) if self.input_shift is None else np.asarray(self.input_shift, float)
        self.input_scale = np.ones(n) if self.input_scale is None else np.asarray(self.input_scale, float)
        if not np.all(np.isfinite(self.x_hat)):
            raise ObserverError("initial estimate is not finite")


def _diag(m, n, name):
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = np.diag(m)
    if m.shape != (n, n) or np.any(m != np.diag(np.diag(m))):
        raise ConfigurationError(f"{name} must be a diagonal {n}x{n} matrix")
    return m


def _network_input(obs, x_meas):
    x = x_meas if obs.net_input == "measured" else obs.x_hat
    return (x - obs.input_shift) * obs.input_scale


def estimate_dynamics(obs, x_meas):
    """Network estimate ``f_hat``; the forward cache is kept for the next training step."""
    try:
        y, obs._cache = nn.forward(obs.net, _network_input(obs, np.asarray(x_meas, float)))
    except InputError as exc:
        raise ObserverError(str(exc)) from exc
    return y


def observer_derivative(obs, x_meas, u, B, f_hat=None):
    x_meas = np.asarray(x_meas, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(x_meas)) and np.all(np.isfinite(u))):
        raise ObserverError("non-finite measurement or control")
    if f_hat is None:
        f_hat = estimate_dynamics(obs, x_meas)
    return f_hat + B @ u + FEEDBACK_SIGNS[obs.feedback] * (obs.k2 @ (x_meas - obs.x_hat))


def observer_step(obs, x_meas, u, B, dt, f_hat=None):
    """Explicit Euler step of the estimate; returns the pre-step ``(e_a, f_hat)``."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    x_meas = np.asarray(x_meas, dtype=float)
    if f_hat is None:
        f_hat = estimate_dynamics(obs, x_meas)
    e_a = x_meas - obs.x_hat
    x_next = obs.x_hat + dt * observer_derivative(obs, x_meas, u, B, f_hat)
    if not np.all(np.isfinite(x_next)):
        raise ObserverError("state estimate diverged")
    obs.x_hat = x_next
    return e_a, f_hat


def training_loss(obs, e_a):
    v = obs.train_error_scale @ np.asarray(e_a, dtype=float)
    return 0.5 * float(v @ v)


def observer_train(obs, x_meas, e_a):
    """One optimiser step on ``0.5 * ||Lambda e_a||^2`` treating ``e_a`` as the output error."""
    e_a = np.asarray(e_a, dtype=float)
    scaled = obs.train_error_scale @ e_a
    cache = obs._cache
    if cache is None or not np.array_equal(cache.acts[0], _network_input(obs, np.asarray(x_meas, float))):
        _, cache = nn.forward(obs.net, _network_input(obs, np.asarray(x_meas, float)))
    grads = nn.backward(obs.net, cache, -scaled)
    madam_step(obs.opt, obs.net, grads)
    obs.last_grads = grads
    obs._cache = None
    return 0.5 * float(scaled @ scaled)
