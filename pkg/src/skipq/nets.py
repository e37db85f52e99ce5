"""From-scratch differentiable-function toolkit.

Dense and valid-convolution layers with rectifier nonlinearities, manual
backpropagation, and deep parameter copies.  Everything is 64-bit float and
single-sample: ``forward`` maps one input tensor to one output vector, and
``backward`` returns the exact analytic gradient of ``output @ output_grad``
with respect to every parameter.  There is no hidden state; a
``NetworkParams`` value is owned by exactly one training loop at a time.

Conventions:
    * tensors are channels-last, e.g. (height, width, channels);
    * convolutions are "valid" (no padding), output extent
      ``(in - filter_size) // stride + 1``;
    * dense layers flatten their input in C order;
    * weights and biases are stored as flat float64 arrays, one pair per
      parameterized layer, with RMSProp squared-gradient accumulators kept
      alongside in the same layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError

CONV = "conv"
DENSE = "dense"
RECTIFIER = "rectifier"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a network: conv, dense, or rectifier."""

    kind: str
    filter_count: int = 0
    filter_size: int = 0
    stride: int = 1
    unit_count: int = 0

    def describe(self) -> str:
        if self.kind == CONV:
            return f"conv {self.filter_count}/{self.filter_size}x{self.filter_size}/s{self.stride}"
        if self.kind == DENSE:
            return f"dense {self.unit_count}"
        return self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "filter_count": self.filter_count,
            "filter_size": self.filter_size,
            "stride": self.stride,
            "unit_count": self.unit_count,
        }

    @staticmethod
    def from_dict(d: dict) -> "LayerSpec":
        return LayerSpec(
            kind=d["kind"],
            filter_count=d["filter_count"],
            filter_size=d["filter_size"],
            stride=d["stride"],
            unit_count=d["unit_count"],
        )


def conv(filter_count: int, filter_size: int, stride: int) -> LayerSpec:
    """Valid convolution with square filters."""
    return LayerSpec(kind=CONV, filter_count=filter_count, filter_size=filter_size, stride=stride)


def dense(unit_count: int) -> LayerSpec:
    """Fully connected layer; flattens non-vector inputs."""
    return LayerSpec(kind=DENSE, unit_count=unit_count)


def rectifier() -> LayerSpec:
    """Elementwise max(0, x)."""
    return LayerSpec(kind=RECTIFIER)


@dataclass
class Gradients:
    """Per-layer weight/bias gradients, same layout as NetworkParams."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)


@dataclass
class NetworkParams:
    """Parameters plus optimizer state for one network.

    ``shapes`` holds the activation shape after every layer (index 0 is the
    input shape), so architecture arithmetic is inspectable without running
    a forward pass.
    """

    layers: tuple
    input_shape: tuple
    output_count: int
    weights: list
    biases: list
    sq_avg_w: list
    sq_avg_b: list
    shapes: tuple


def plan_shapes(layers, input_shape, output_count) -> tuple:
    """Validate a layer chain and return the shape after every layer.

    Raises ConfigError naming the offending layer if the chain is
    inconsistent or does not end in a vector of length ``output_count``.
    """
    shape = tuple(int(d) for d in input_shape)
    if not shape or any(d < 1 for d in shape):
        raise ConfigError(f"input shape {input_shape!r} must have positive dims")
    shapes = [shape]
    for i, spec in enumerate(layers):
        where = f"layer {i} ({spec.describe()})"
        if spec.kind == CONV:
            if len(shape) != 3:
                raise ConfigError(f"{where}: conv needs a (height, width, channels) input, got {shape}")
            h, w, _ = shape
            if spec.filter_size < 1 or spec.filter_size > min(h, w):
                raise ConfigError(f"{where}: filter size {spec.filter_size} exceeds input extent {h}x{w}")
            if spec.stride < 1:
                raise ConfigError(f"{where}: stride must be >= 1")
            if spec.filter_count < 1:
                raise ConfigError(f"{where}: filter count must be >= 1")
            oh = (h - spec.filter_size) // spec.stride + 1
            ow = (w - spec.filter_size) // spec.stride + 1
            if oh < 1 or ow < 1:
                raise ConfigError(f"{where}: output extent {oh}x{ow} is empty")
            shape = (oh, ow, spec.filter_count)
        elif spec.kind == DENSE:
            if spec.unit_count < 1:
                raise ConfigError(f"{where}: unit count must be >= 1")
            shape = (spec.unit_count,)
        elif spec.kind == RECTIFIER:
            pass
        else:
            raise ConfigError(f"{where}: unknown layer kind {spec.kind!r}")
        shapes.append(shape)
    if shape != (int(output_count),):
        raise ConfigError(
            f"final layer produces shape {shape}, expected ({output_count},); "
            "the last layer must be a dense layer with unit_count == output_count"
        )
    return tuple(shapes)


def _fan_in(spec: LayerSpec, in_shape: tuple) -> int:
    if spec.kind == CONV:
        return spec.filter_size * spec.filter_size * in_shape[2]
    return int(np.prod(in_shape))


def _param_counts(spec: LayerSpec, in_shape: tuple) -> tuple:
    if spec.kind == CONV:
        return (spec.filter_count * spec.filter_size * spec.filter_size * in_shape[2], spec.filter_count)
    if spec.kind == DENSE:
        return (spec.unit_count * int(np.prod(in_shape)), spec.unit_count)
    return (0, 0)


def build_network(layers, input_shape, output_count: int, seed: int) -> NetworkParams:
    """Initialize a network for the given layer chain.

    Weights and biases are drawn uniformly from
    [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer; the draw order is fixed,
    so identical seeds give bit-identical parameters.
    """
    layers = tuple(layers)
    shapes = plan_shapes(layers, input_shape, output_count)
    rng = np.random.default_rng(seed)
    weights, biases, sq_w, sq_b = [], [], [], []
    for i, spec in enumerate(layers):
        if spec.kind == RECTIFIER:
            continue
        w_count, b_count = _param_counts(spec, shapes[i])
        limit = 1.0 / np.sqrt(_fan_in(spec, shapes[i]))
        weights.append(rng.uniform(-limit, limit, w_count))
        biases.append(rng.uniform(-limit, limit, b_count))
        sq_w.append(np.zeros(w_count))
        sq_b.append(np.zeros(b_count))
    return NetworkParams(
        layers=layers,
        input_shape=shapes[0],
        output_count=int(output_count),
        weights=weights,
        biases=biases,
        sq_avg_w=sq_w,
        sq_avg_b=sq_b,
        shapes=shapes,
    )


def activation_shapes(params: NetworkParams) -> tuple:
    """Shape after every layer, input first."""
    return params.shapes


def _conv_weight(params, layer_idx, param_idx):
    spec = params.layers[layer_idx]
    c_in = params.shapes[layer_idx][2]
    return params.weights[param_idx].reshape(spec.filter_count, spec.filter_size, spec.filter_size, c_in)


def _run_forward(params: NetworkParams, x: np.ndarray) -> list:
    """Return the activation after every layer; index 0 is the input."""
    acts = [x]
    p = 0
    for i, spec in enumerate(params.layers):
        a = acts[-1]
        if spec.kind == CONV:
            w = _conv_weight(params, i, p)
            windows = sliding_window_view(a, (spec.filter_size, spec.filter_size), axis=(0, 1))
            windows = windows[:: spec.stride, :: spec.stride]
            out = np.einsum("ijcuv,fuvc->ijf", windows, w) + params.biases[p]
            p += 1
        elif spec.kind == DENSE:
            w = params.weights[p].reshape(spec.unit_count, -1)
            out = w @ a.reshape(-1) + params.biases[p]
            p += 1
        else:
            out = np.maximum(a, 0.0)
        acts.append(out)
    return acts


def forward(params: NetworkParams, x) -> np.ndarray:
    """Evaluate the network on one input tensor.

    Pure function of (params, input); raises ValueError on a shape mismatch.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != params.input_shape:
        raise ValueError(f"input shape {x.shape} does not match network input {params.input_shape}")
    return _run_forward(params, x)[-1]


def backward(params: NetworkParams, x, output_grad) -> Gradients:
    """Exact gradients of ``output @ output_grad`` w.r.t. every parameter."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != params.input_shape:
        raise ValueError(f"input shape {x.shape} does not match network input {params.input_shape}")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != (params.output_count,):
        raise ValueError(f"output_grad length {g.shape} does not match output count {params.output_count}")

    acts = _run_forward(params, x)
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    p = len(params.weights)
    for i in range(len(params.layers) - 1, -1, -1):
        spec = params.layers[i]
        a_in = acts[i]
        if spec.kind == CONV:
            p -= 1
            w = _conv_weight(params, i, p)
            fs, s = spec.filter_size, spec.stride
            windows = sliding_window_view(a_in, (fs, fs), axis=(0, 1))[::s, ::s]
            grads_w[p] = np.einsum("ijf,ijcuv->fuvc", g, windows).reshape(-1)
            grads_b[p] = g.sum(axis=(0, 1))
            oh, ow = g.shape[0], g.shape[1]
            g_in = np.zeros_like(a_in)
            for u in range(fs):
                for v in range(fs):
                    g_in[u : u + oh * s : s, v : v + ow * s : s, :] += np.einsum("ijf,fc->ijc", g, w[:, u, v, :])
            g = g_in
        elif spec.kind == DENSE:
            p -= 1
            w = params.weights[p].reshape(spec.unit_count, -1)
            grads_w[p] = np.outer(g, a_in.reshape(-1)).reshape(-1)
            grads_b[p] = g.copy()
            g = (w.T @ g).reshape(a_in.shape)
        else:
            g = g * (a_in > 0.0)
    return Gradients(weights=grads_w, biases=grads_b)


def copy_params(src: NetworkParams) -> NetworkParams:
    """Deep copy; later updates to ``src`` do not touch the copy."""
    return NetworkParams(
        layers=src.layers,
        input_shape=src.input_shape,
        output_count=src.output_count,
        weights=[w.copy() for w in src.weights],
        biases=[b.copy() for b in src.biases],
        sq_avg_w=[a.copy() for a in src.sq_avg_w],
        sq_avg_b=[a.copy() for a in src.sq_avg_b],
        shapes=src.shapes,
    )


def params_digest(params: NetworkParams) -> bytes:
    """Concatenated little-endian bytes of all parameters (not accumulators)."""
    chunks = []
    for w, b in zip(params.weights, params.biases):
        chunks.append(w.astype("<f8").tobytes())
        chunks.append(b.astype("<f8").tobytes())
    return b"".join(chunks)
