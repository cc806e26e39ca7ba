"""The two CNN topologies, their parameters, and forward/backward passes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, ShapeError
from . import ops


@dataclass(frozen=True)
class Conv:
    maps: int
    kh: int
    kw: int
    dropout: float = 0.0


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "relu"  # "relu" or "softmax"
    dropout: float = 0.0


@dataclass(frozen=True)
class NetworkSpec:
    """Layer topology.  ``flatten_size`` is the declared size checked at run time."""

    name: str
    layers: tuple
    input_shape: tuple[int, int] = (128, 2)
    flatten_size: int | None = None

    @property
    def n_classes(self) -> int:
        return self.layers[-1].units

    def shape_chain(self) -> list[tuple[int, ...]]:
        """Activation shapes from the input matrix to the class vector."""
        h, w = self.input_shape
        shapes: list[tuple[int, ...]] = [(h, w)]
        c = 1
        flat = None
        for layer in self.layers:
            if isinstance(layer, Conv):
                h, w, c = h - layer.kh + 1, w - layer.kw + 1, layer.maps
                if h < 1 or w < 1:
                    raise ShapeError(f"{self.name}: kernel {layer.kh}x{layer.kw} does not fit")
                shapes.append((c, h, w))
            else:
                if flat is None:
                    flat = c * h * w
                    shapes.append((flat,))
                shapes.append((layer.units,))
        return shapes

    def layer_output_shapes(self) -> list[tuple[int, ...]]:
        """Per-example output shape of every layer (the flatten step is not a layer)."""
        chain = self.shape_chain()[1:]
        n_conv = sum(isinstance(l, Conv) for l in self.layers)
        return chain[:n_conv] + chain[n_conv + 1:] if n_conv else chain

    def to_text(self) -> str:
        parts = [self.name, f"in={self.input_shape[0]}x{self.input_shape[1]}",
                 f"flat={self.flatten_size or 0}"]
        for layer in self.layers:
            if isinstance(layer, Conv):
                parts.append(f"conv:{layer.maps}:{layer.kh}x{layer.kw}:{layer.dropout!r}")
            else:
                parts.append(f"dense:{layer.units}:{layer.activation}:{layer.dropout!r}")
        return ";".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "NetworkSpec":
        try:
            name, inp, flat, *rest = text.split(";")
            h, w = (int(v) for v in inp.removeprefix("in=").split("x"))
            flat_size = int(flat.removeprefix("flat=")) or None
            layers = []
            for item in rest:
                kind, *fields_ = item.split(":")
                if kind == "conv":
                    kh, kw = (int(v) for v in fields_[1].split("x"))
                    layers.append(Conv(int(fields_[0]), kh, kw, float(fields_[2])))
                elif kind == "dense":
                    layers.append(Dense(int(fields_[0]), fields_[1], float(fields_[2])))
                else:
                    raise ValueError(kind)
        except ValueError as exc:
            raise ShapeError(f"cannot parse network spec {text!r}: {exc}") from None
        return cls(name, tuple(layers), (h, w), flat_size)


def original_spec() -> NetworkSpec:
    """Full-size network: 64 and 1024 feature maps, 128 hidden units."""
    return NetworkSpec("original", (
        Conv(64, 3, 1),
        Conv(1024, 3, 2, dropout=0.6),
        Dense(128, "relu", dropout=0.6),
        Dense(15, "softmax"),
    ), flatten_size=126_976)


def reduced_spec() -> NetworkSpec:
    """Reduced network with roughly as many weights as training snapshots."""
    return NetworkSpec("reduced", (
        Conv(8, 3, 1),
        Conv(16, 3, 2, dropout=0.6),
        Dense(64, "relu", dropout=0.6),
        Dense(15, "softmax"),
    ), flatten_size=1_984)


def toy_spec(rows: int = 16, n_classes: int = 4) -> NetworkSpec:
    """Reduced topology truncated to a ``rows x 2`` input and ``n_classes`` outputs."""
    base = reduced_spec()
    layers = base.layers[:-1] + (Dense(n_classes, "softmax"),)
    return NetworkSpec(f"toy{rows}x{n_classes}", layers, (rows, 2), 16 * (rows - 4))


SPECS = {"original": original_spec, "reduced": reduced_spec}


def spec_by_name(name: str) -> NetworkSpec:
    try:
        return SPECS[name]()
    except KeyError:
        raise ValueError(f"unknown network {name!r}; choose from {sorted(SPECS)}") from None


# --- parameters ------------------------------------------------------------

def _param_shapes(spec: NetworkSpec) -> list[tuple[str, tuple[int, ...]]]:
    shapes = []
    c_in = 1
    fan_in = None
    chain = spec.shape_chain()
    flat = None
    for k, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            shapes.append((f"{k}.weight", (layer.maps, c_in, layer.kh, layer.kw)))
            shapes.append((f"{k}.bias", (layer.maps,)))
            c_in = layer.maps
        else:
            if fan_in is None:
                flat = next(s[0] for s in chain if len(s) == 1)
                fan_in = flat
            shapes.append((f"{k}.weight", (layer.units, fan_in)))
            shapes.append((f"{k}.bias", (layer.units,)))
            fan_in = layer.units
    return shapes


@dataclass(eq=False)
class NetworkParams:
    tensors: dict[str, np.ndarray]
    init_scheme: str = "glorot-uniform"
    seed: int = 0

    def __getitem__(self, key):
        return self.tensors[key]

    def copy(self) -> "NetworkParams":
        return NetworkParams({k: v.copy() for k, v in self.tensors.items()}, self.init_scheme, self.seed)

    def count(self) -> int:
        return int(sum(v.size for v in self.tensors.values()))

    def equals(self, other: "NetworkParams") -> bool:
        return (self.tensors.keys() == other.tensors.keys()
                and all(np.array_equal(v, other.tensors[k]) for k, v in self.tensors.items()))


def param_count(spec: NetworkSpec) -> int:
    return int(sum(np.prod(s) for _, s in _param_shapes(spec)))


def init_params(spec: NetworkSpec, seed: int = 0) -> NetworkParams:
    """Glorot-uniform weights, zero biases, drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in _param_shapes(spec):
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape)
            continue
        if len(shape) == 4:
            receptive = shape[2] * shape[3]
            fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
        else:
            fan_out, fan_in = shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        tensors[name] = rng.uniform(-limit, limit, size=shape)
    return NetworkParams(tensors, "glorot-uniform", seed)


# --- forward / backward ----------------------------------------------------

@dataclass
class ForwardCache:
    inputs: list = field(default_factory=list)  # per layer input
    pre: list = field(default_factory=list)  # per layer pre-activation
    masks: list = field(default_factory=list)  # per layer dropout multiplier or None
    flat_from: tuple | None = None
    probs: np.ndarray | None = None


def _check_finite(t: np.ndarray, layer: int, what: str):
    if not np.all(np.isfinite(t)):
        raise NumericError(f"non-finite {what} in layer {layer}", layer=layer)


def forward(spec: NetworkSpec, params: NetworkParams, x: np.ndarray, train: bool = False,
            rng: np.random.Generator | None = None, cache: ForwardCache | None = None,
            masks: list | None = None) -> np.ndarray:
    """Class probabilities for one ``H x W`` input matrix or a batch ``[N, H, W]``.

    ``train=True`` applies dropout with masks drawn from ``rng`` unless fixed
    ``masks`` are given.  Pass a :class:`ForwardCache` to keep what
    :func:`backward` needs.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    a = x[None] if single else x
    if a.shape[1:] != tuple(spec.input_shape):
        raise ShapeError(f"{spec.name} expects input {spec.input_shape}, got {a.shape[1:]}")
    a = a[:, None, :, :]
    for k, layer in enumerate(spec.layers):
        w, b = params[f"{k}.weight"], params[f"{k}.bias"]
        if isinstance(layer, Dense) and a.ndim == 4:
            flat = a.shape[1] * a.shape[2] * a.shape[3]
            if spec.flatten_size is not None and flat != spec.flatten_size:
                raise ShapeError(f"{spec.name}: flatten size {flat} != declared {spec.flatten_size}")
            if cache is not None:
                cache.flat_from = a.shape
            a = a.reshape(a.shape[0], -1)
        if cache is not None:
            cache.inputs.append(a)
        z = ops.conv2d_valid(a, w, b) if isinstance(layer, Conv) else ops.dense(a, w, b)
        _check_finite(z, k, "activation")
        if cache is not None:
            cache.pre.append(z)
        if isinstance(layer, Dense) and layer.activation == "softmax":
            a = ops.softmax(z)
            mask = None
        else:
            a = ops.relu(z)
            mask = None
            if train and layer.dropout > 0:
                mask = masks[k] if masks is not None else ops.dropout_mask(a.shape, layer.dropout, rng)
                a = a * mask
        if cache is not None:
            cache.masks.append(mask)
    if cache is not None:
        cache.probs = a
    return a[0] if single else a


def backward(spec: NetworkSpec, params: NetworkParams, cache: ForwardCache, labels) -> tuple[float, dict]:
    """Summed cross-entropy over the cached batch and the gradients of that sum."""
    labels = np.atleast_1d(labels)
    loss, grad = ops.cross_entropy(cache.probs, labels)
    grads: dict[str, np.ndarray] = {}
    g = grad  # w.r.t. logits of the softmax layer
    for k in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[k]
        w = params[f"{k}.weight"]
        if not (isinstance(layer, Dense) and layer.activation == "softmax"):
            if cache.masks[k] is not None:
                g = g * cache.masks[k]
            g = ops.relu_backward(cache.pre[k], g)
        x_in = cache.inputs[k]
        if isinstance(layer, Conv):
            g, dw, db = ops.conv2d_valid_backward(x_in, w, g, need_input_grad=k > 0)
        else:
            g, dw, db = ops.dense_backward(x_in, w, g)
            if k > 0 and isinstance(spec.layers[k - 1], Conv):
                g = g.reshape(cache.flat_from)
        _check_finite(dw, k, "weight gradient")
        _check_finite(db, k, "bias gradient")
        grads[f"{k}.weight"] = dw
        grads[f"{k}.bias"] = db
    return float(np.sum(loss)), grads


def predict(spec: NetworkSpec, params: NetworkParams, inputs: np.ndarray, batch: int = 1024) -> np.ndarray:
    """Inference-mode class probabilities for ``[N, H, W]`` inputs, batched."""
    inputs = np.asarray(inputs)
    out = np.empty((len(inputs), spec.n_classes))
    for i in range(0, len(inputs), batch):
        out[i:i + batch] = forward(spec, params, inputs[i:i + batch])
    return out
