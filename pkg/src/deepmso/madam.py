"""Multiplicative adaptive-moments optimiser and its descent diagnostics.

Every parameter is updated by a positive factor, so signs never change and
zero entries stay at zero::

    gbar2 <- (1 - beta) g^2 + beta gbar2
    w     <- w * exp(-eta * sign(w) * clamp(g / gbar, eta_star / eta))
    w     <- clamp(w, sigma_star)
"""
from dataclasses import dataclass
import math

import numpy as np

from deepmso.errors import ConfigurationError, OptimizerError

EXP_FORM = "exp"
LINEAR_FORM = "linear"


@dataclass(frozen=True)
class MadamHyper:
    eta: float = 1e-3
    eta_star: float = 0.1
    sigma_star: float = 1250.0
    beta: float = 0.999

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigurationError(f"eta must be positive, got {self.eta!r}")
        if not (math.isfinite(self.eta_star) and self.eta_star >= self.eta):
            raise ConfigurationError(f"eta_star must be >= eta, got {self.eta_star!r}")
        if not (math.isfinite(self.sigma_star) and self.sigma_star > 0):
            raise ConfigurationError(f"sigma_star must be positive, got {self.sigma_star!r}")
        if not (0.0 <= self.beta < 1.0):
            raise ConfigurationError(f"beta must lie in [0, 1), got {self.beta!r}")


@dataclass
class MadamState:
    gbar_sq: list
    hyper: MadamHyper
    step_count: int = 0
    form: str = EXP_FORM


def madam_init(hyper, net, form=EXP_FORM):
    if not isinstance(hyper, MadamHyper):
        raise ConfigurationError("hyper must be a MadamHyper")
    if form not in (EXP_FORM, LINEAR_FORM):
        raise ConfigurationError(f"unknown update form {form!r}")
    return MadamState([np.zeros_like(p) for p in net.parameters()], hyper, 0, form)


def update_ratio(g, gbar_sq):
    """``g / sqrt(gbar_sq)`` with ``0/0 := 0``."""
    gbar = np.sqrt(gbar_sq)
    return np.divide(g, gbar, out=np.zeros_like(g, dtype=float), where=gbar > 0)


def madam_update(w, g, gbar_sq, hyper, form=EXP_FORM):
    """Array-level update; returns ``(new_w, new_gbar_sq)`` without touching the inputs."""
    gbar_sq = (1.0 - hyper.beta) * g * g + hyper.beta * gbar_sq
    limit = hyper.eta_star / hyper.eta
    r = np.clip(update_ratio(g, gbar_sq), -limit, limit)
    if form == LINEAR_FORM:
        factor = 1.0 - hyper.eta * np.sign(w) * r
    else:
        factor = np.exp(-hyper.eta * np.sign(w) * r)
    w = np.clip(w * factor, -hyper.sigma_star, hyper.sigma_star)
    return w, gbar_sq


def madam_step(state, net, grads):
    """Apply one update to every weight and bias of ``net`` in place."""
    params = net.parameters()
    gparams = grads.parameters()
    if len(params) != len(gparams) or len(params) != len(state.gbar_sq):
        raise OptimizerError("gradient set does not match the network")
    for g in gparams:
        if not np.all(np.isfinite(g)):
            raise OptimizerError(f"non-finite gradient at step {state.step_count}")
    for i, (p, g) in enumerate(zip(params, gparams)):
        if p.shape != g.shape:
            raise OptimizerError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        new_p, state.gbar_sq[i] = madam_update(p, g, state.gbar_sq[i], state.hyper, state.form)
        p[...] = new_p
    state.step_count += 1
    return net, state


def max_stable_eta(gamma, depth):
    """Largest learning rate for which the sign update provably descends: ``(1+cos g)^(1/L) - 1``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not (0.0 <= gamma <= math.pi / 2 + 1e-12):
        raise ValueError(f"gamma must lie in [0, pi/2], got {gamma}")
    return max((1.0 + math.cos(gamma)) ** (1.0 / depth) - 1.0, 0.0)


def layer_angle(g, w):
    """Angle between ``|g|`` and ``|w|``; both are non-negative so the result is in [0, pi/2]."""
    a = np.abs(np.ravel(g))
    b = np.abs(np.ravel(w))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return math.pi / 2
    return math.acos(min(1.0, float(a @ b) / (na * nb)))


def relative_trust_ratio(net_before, net_after):
    """Per-layer ``||dW||_F / ||W||_F`` and ``prod(1 + ratio) - 1`` over layers.

    Layers whose weights have zero norm get ``None`` and are left out of the product.
    """
    per_layer = []
    prod = 1.0
    for a, b in zip(net_before.layers, net_after.layers):
        norm = np.linalg.norm(a.weights)
        if norm == 0:
            per_layer.append(None)
            continue
        r = float(np.linalg.norm(b.weights - a.weights) / norm)
        per_layer.append(r)
        prod *= 1.0 + r
    return per_layer, prod - 1.0
