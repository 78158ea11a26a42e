"""Network specifications, parameter initialization, and checkpoints.

A NetworkSpec is a declarative layer list with an input shape and a loss
kind; Network materializes it with seeded fan-in-scaled uniform weights.
Checkpoints are npz-compatible containers holding the spec as JSON plus
the raw parameter arrays; they round-trip bit-exactly and are written
with fixed zip timestamps so identical contents give identical bytes.
"""
from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format

from .layers import (
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    MaxPool2D,
    ReLU,
    ShapeMismatchError,
    SoftmaxOutput,
    loss_crossentropy,
)


class SpecError(ValueError):
    """Raised when layer shapes do not compose."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    args: dict = field(default_factory=dict)


def dense(units: int) -> LayerSpec:
    return LayerSpec("dense", {"units": units})


def conv1d(filters: int, kernel: int, padding: str = "valid") -> LayerSpec:
    return LayerSpec("conv1d", {"filters": filters, "kernel": kernel, "padding": padding})


def conv2d(filters: int, kernel_h: int, kernel_w: int, padding: str = "valid") -> LayerSpec:
    return LayerSpec(
        "conv2d",
        {"filters": filters, "kernel_h": kernel_h, "kernel_w": kernel_w, "padding": padding},
    )


def maxpool(window: int) -> LayerSpec:
    return LayerSpec("maxpool", {"window": window})


def dropout(rate: float) -> LayerSpec:
    return LayerSpec("dropout", {"rate": rate})


def activation(kind: str = "relu") -> LayerSpec:
    return LayerSpec("activation", {"kind": kind})


def flatten() -> LayerSpec:
    return LayerSpec("flatten", {})


def softmax_output(classes: int) -> LayerSpec:
    return LayerSpec("softmax_output", {"classes": classes})


@dataclass(frozen=True)
class NetworkSpec:
    """Input shape (without batch), ordered layers, and loss kind."""

    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]
    loss: str = "cross_entropy"

    def __post_init__(self):
        if self.loss not in ("cross_entropy", "mse"):
            raise SpecError(f"unknown loss {self.loss!r}")
        self.layer_shapes()
        if self.loss == "cross_entropy" and (
            not self.layers or self.layers[-1].kind != "softmax_output"
        ):
            raise SpecError("cross-entropy networks must end in softmax_output")

    def layer_shapes(self) -> list[tuple[int, ...]]:
        """Output shape after each layer; raises SpecError on mismatch."""
        shape = self.input_shape
        out = []
        for i, layer in enumerate(self.layers):
            shape = _propagate(shape, layer, i)
            out.append(shape)
        return out

    def output_shape(self) -> tuple[int, ...]:
        shapes = self.layer_shapes()
        return shapes[-1] if shapes else self.input_shape

    def parameter_count(self) -> int:
        total = 0
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            total += _param_count(shape, layer)
            shape = _propagate(shape, layer, i)
        return total

    def to_json(self) -> str:
        return json.dumps(
            {
                "input_shape": list(self.input_shape),
                "layers": [{"kind": l.kind, "args": l.args} for l in self.layers],
                "loss": self.loss,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> NetworkSpec:
        raw = json.loads(text)
        return cls(
            input_shape=tuple(raw["input_shape"]),
            layers=tuple(LayerSpec(l["kind"], dict(l["args"])) for l in raw["layers"]),
            loss=raw["loss"],
        )


def _conv_len(length: int, kernel: int, padding: str) -> int:
    if padding == "same":
        return length
    out = length - kernel + 1
    if out < 1:
        raise SpecError(f"kernel {kernel} does not fit input of length {length}")
    return out


def _propagate(shape: tuple[int, ...], layer: LayerSpec, index: int) -> tuple[int, ...]:
    kind, args = layer.kind, layer.args
    try:
        if kind == "dense":
            (d,) = shape
            return (args["units"],)
        if kind == "softmax_output":
            (d,) = shape
            return (args["classes"],)
        if kind == "conv1d":
            c, length = shape
            return (args["filters"], _conv_len(length, args["kernel"], args["padding"]))
        if kind == "conv2d":
            c, h, w = shape
            return (
                args["filters"],
                _conv_len(h, args["kernel_h"], args["padding"]),
                _conv_len(w, args["kernel_w"], args["padding"]),
            )
        if kind == "maxpool":
            w = args["window"]
            if len(shape) == 2:
                c, length = shape
                out = length // w
                if out < 1:
                    raise SpecError(f"pool window {w} empties length {length}")
                return (c, out)
            c, h, wid = shape
            oh, ow = h // w, wid // w
            if oh < 1 or ow < 1:
                raise SpecError(f"pool window {w} empties {h}x{wid}")
            return (c, oh, ow)
        if kind == "flatten":
            return (int(np.prod(shape)),)
        if kind in ("dropout", "activation"):
            return shape
    except ValueError as exc:
        raise SpecError(f"layer {index} ({kind}): incompatible input shape {shape}") from exc
    raise SpecError(f"layer {index}: unknown kind {kind!r}")


def _param_count(shape: tuple[int, ...], layer: LayerSpec) -> int:
    kind, args = layer.kind, layer.args
    if kind == "dense":
        return shape[0] * args["units"] + args["units"]
    if kind == "softmax_output":
        return shape[0] * args["classes"] + args["classes"]
    if kind == "conv1d":
        return args["filters"] * shape[0] * args["kernel"] + args["filters"]
    if kind == "conv2d":
        return args["filters"] * shape[0] * args["kernel_h"] * args["kernel_w"] + args["filters"]
    return 0


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _materialize(shape: tuple[int, ...], layer: LayerSpec, rng: np.random.Generator) -> Layer:
    kind, args = layer.kind, layer.args
    if kind == "dense":
        w = _uniform(rng, shape[0], (shape[0], args["units"]))
        return Dense(w, np.zeros(args["units"]))
    if kind == "softmax_output":
        w = _uniform(rng, shape[0], (shape[0], args["classes"]))
        return SoftmaxOutput(w, np.zeros(args["classes"]))
    if kind == "conv1d":
        c = shape[0]
        fan_in = c * args["kernel"]
        w = _uniform(rng, fan_in, (args["filters"], c, args["kernel"]))
        return Conv1D(w, np.zeros(args["filters"]), args["padding"])
    if kind == "conv2d":
        c = shape[0]
        fan_in = c * args["kernel_h"] * args["kernel_w"]
        w = _uniform(rng, fan_in, (args["filters"], c, args["kernel_h"], args["kernel_w"]))
        return Conv2D(w, np.zeros(args["filters"]), args["padding"])
    if kind == "maxpool":
        return MaxPool1D(args["window"]) if len(shape) == 2 else MaxPool2D(args["window"])
    if kind == "dropout":
        return Dropout(args["rate"])
    if kind == "activation":
        if args["kind"] != "relu":
            raise SpecError(f"unsupported activation {args['kind']!r}")
        return ReLU()
    if kind == "flatten":
        return Flatten()
    raise SpecError(f"unknown layer kind {kind!r}")


class Network:
    """A materialized NetworkSpec: layers with live parameters."""

    def __init__(self, spec: NetworkSpec, seed: int):
        self.spec = spec
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.layers: list[Layer] = []
        shape = spec.input_shape
        for i, layer_spec in enumerate(spec.layers):
            self.layers.append(_materialize(shape, layer_spec, rng))
            shape = _propagate(shape, layer_spec, i)
        if self.layers:
            self.layers[0].needs_input_grad = False
        self.history: list[float] = []

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        if x.shape[1:] != self.spec.input_shape:
            raise ShapeMismatchError(
                f"network expects input {self.spec.input_shape}, got {x.shape[1:]}"
            )
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Inference-mode forward pass (class probabilities for classifiers)."""
        return self.forward(x, train=False)

    def predict_classes(self, x: np.ndarray) -> np.ndarray:
        return self.predict(x).argmax(axis=1)

    def loss_and_grad(self, x: np.ndarray, target: np.ndarray, train: bool = True,
                      rng: np.random.Generator | None = None) -> float:
        """Forward plus backward; leaves gradients on the layers."""
        out = self.forward(x, train=train, rng=rng)
        if self.spec.loss == "cross_entropy":
            loss = loss_crossentropy(out, target)
            grad = self.layers[-1].backward_from_labels(np.asarray(target, dtype=int))
            rest = self.layers[:-1]
        else:
            diff = out - target
            loss = float((diff**2).mean())
            grad = 2.0 * diff / diff.size
            rest = self.layers
        for layer in reversed(rest):
            grad = layer.backward(grad)
        return loss

    def loss_only(self, x: np.ndarray, target: np.ndarray) -> float:
        out = self.forward(x, train=False)
        if self.spec.loss == "cross_entropy":
            return loss_crossentropy(out, target)
        return float(((out - target) ** 2).mean())

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    """Write an npz-compatible archive with deterministic bytes."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            npy_format.write_array(buf, np.asanyarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def save_network(net: Network, path: str | Path) -> None:
    """Checkpoint: spec JSON, seed, training history, parameter arrays."""
    payload = {
        "spec_json": np.array(net.spec.to_json()),
        "seed": np.array(net.seed, dtype=np.int64),
        "history": np.array(net.history, dtype=float),
    }
    for i, p in enumerate(net.parameters()):
        payload[f"param_{i:04d}"] = p
    save_arrays(path, payload)


def load_network(path: str | Path) -> Network:
    with np.load(path, allow_pickle=False) as data:
        spec = NetworkSpec.from_json(str(data["spec_json"]))
        net = Network(spec, seed=int(data["seed"]))
        net.history = [float(x) for x in data["history"]]
        params = net.parameters()
        for i, p in enumerate(params):
            stored = data[f"param_{i:04d}"]
            if stored.shape != p.shape:
                raise SpecError(f"checkpoint parameter {i} shape {stored.shape} != {p.shape}")
            p[...] = stored
    return net
