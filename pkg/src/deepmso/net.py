"""Fully connected sigmoid network with a linear output layer and hand-written backprop."""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from deepmso.errors import ConfigurationError, InputError, UsageError

INIT_GAIN = 3.6


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    LINEAR = "linear"


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: Activation = Activation.SIGMOID


@dataclass
class Layer:
    weights: np.ndarray
    biases: np.ndarray
    spec: LayerSpec


@dataclass
class Network:
    layers: list

    @property
    def depth(self):
        return len(self.layers)

    @property
    def input_dim(self):
        return self.layers[0].spec.input_dim

    @property
    def output_dim(self):
        return self.layers[-1].spec.output_dim

    def parameters(self):
        """Flat list of parameter arrays, ordered ``[W1, b1, W2, b2, ...]``."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def copy(self):
        return Network([Layer(l.weights.copy(), l.biases.copy(), l.spec) for l in self.layers])

    def max_abs_weight(self):
        return max(float(np.max(np.abs(p), initial=0.0)) for p in self.parameters())


@dataclass
class Cache:
    """Per-layer activations from one forward pass; ``acts[0]`` is the input."""

    acts: list
    net_id: int
    shapes: tuple = field(default=())


@dataclass
class GradientSet:
    weights: list
    biases: list

    def parameters(self):
        out = []
        for gw, gb in zip(self.weights, self.biases):
            out.extend((gw, gb))
        return out


def sigmoid(z):
    # sign-split form: exp() only ever sees non-positive arguments
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def layer_specs(input_dim, hidden, output_dim):
    """Sigmoid hidden layers of the given widths followed by a linear output layer."""
    dims = [input_dim, *hidden, output_dim]
    specs = [LayerSpec(i, o, Activation.SIGMOID) for i, o in zip(dims[:-2], dims[1:-1])]
    specs.append(LayerSpec(dims[-2], dims[-1], Activation.LINEAR))
    return specs


def _check_specs(specs):
    if not specs:
        raise ConfigurationError("network needs at least one layer")
    for i, s in enumerate(specs):
        if s.input_dim <= 0 or s.output_dim <= 0:
            raise ConfigurationError(f"layer {i} has non-positive dimension {s.input_dim}->{s.output_dim}")
    for i, (a, b) in enumerate(zip(specs[:-1], specs[1:])):
        if a.output_dim != b.input_dim:
            raise ConfigurationError(
                f"layer {i} outputs {a.output_dim} but layer {i + 1} expects {b.input_dim}"
            )


def init_network(specs, seed, init="fan_in", bias_std=0.0):
    """Gaussian initialisation with standard deviation ``3.6 / sqrt(n)``.

    ``n`` is the fan-in of each layer (``init="fan_in"``) or the number of
    weight layers (``init="depth"``). Biases start at zero unless
    ``bias_std`` is positive.
    """
    specs = list(specs)
    _check_specs(specs)
    if init not in ("fan_in", "depth"):
        raise ConfigurationError(f"unknown init scheme {init!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for s in specs:
        n = s.input_dim if init == "fan_in" else len(specs)
        w = rng.normal(0.0, INIT_GAIN / np.sqrt(n), size=(s.output_dim, s.input_dim))
        if bias_std > 0:
            b = rng.normal(0.0, bias_std, size=s.output_dim)
        else:
            b = np.zeros(s.output_dim)
        layers.append(Layer(w, b, s))
    return Network(layers)


def forward(net, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise InputError(f"expected input of shape ({net.input_dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("network input is not finite")
    acts = [x]
    a = x
    for layer in net.layers:
        z = layer.weights @ a + layer.biases
        a = sigmoid(z) if layer.spec.activation is Activation.SIGMOID else z
        acts.append(a)
    shapes = tuple(l.weights.shape for l in net.layers)
    return a, Cache(acts, id(net), shapes)


def backward(net, cache, output_error):
    """Gradient of a scalar loss whose derivative w.r.t. the network output is ``output_error``."""
    if cache.net_id != id(net) or cache.shapes != tuple(l.weights.shape for l in net.layers):
        raise UsageError("cache was produced by a different network")
    delta = np.asarray(output_error, dtype=float)
    if delta.shape != (net.output_dim,):
        raise InputError(f"expected output error of shape ({net.output_dim},), got {delta.shape}")
    gw = [None] * net.depth
    gb = [None] * net.depth
    for i in range(net.depth - 1, -1, -1):
        layer = net.layers[i]
        out = cache.acts[i + 1]
        if layer.spec.activation is Activation.SIGMOID:
            delta = delta * out * (1.0 - out)
        gw[i] = np.outer(delta, cache.acts[i])
        gb[i] = delta.copy()
        if i:
            delta = layer.weights.T @ delta
    return GradientSet(gw, gb)
