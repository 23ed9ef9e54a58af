"""Multi-directional network: 2^n hidden layers on reflected axes feeding one
shared per-point output layer with softmax.

Each hidden layer owns an independent weight set and processes the input grid
through its direction's reflection (bit i of the direction mirrors axis i).
Per-point pre-activations of the K output units sum contributions from all
directions' hidden outputs at the same (unreflected) point, plus a bias.

The per-sequence objective is the summed cross-entropy over all points;
reported error rates are normalized elsewhere.
"""

import io
import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from . import lstm_layer, tanh_layer
from .errors import ConfigError, FormatError
from .grid import SequenceND, reflect_array

CHECKPOINT_MAGIC = b"MDRN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    num_dims: int
    layer_kind: str  # "tanh" | "lstm"
    input_width: int
    hidden_width: int  # units for tanh, memory blocks for lstm
    output_width: int
    cells_per_block: int = 1  # lstm only
    multidirectional: bool = True

    def __post_init__(self):
        if self.layer_kind not in ("tanh", "lstm"):
            raise ConfigError(f"unknown layer kind {self.layer_kind!r}")
        if min(self.num_dims, self.input_width, self.hidden_width,
               self.output_width, self.cells_per_block) < 1:
            raise ConfigError(f"network config fields must be positive: {self}")

    @property
    def num_directions(self):
        return 2 ** self.num_dims if self.multidirectional else 1

    def layer_config(self):
        if self.layer_kind == "tanh":
            return tanh_layer.TanhLayerConfig(
                self.num_dims, self.input_width, self.hidden_width)
        return lstm_layer.LstmLayerConfig(
            self.num_dims, self.input_width, self.hidden_width, self.cells_per_block)

    @property
    def layer_output_width(self):
        return self.layer_config().output_width

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _layer_module(config):
    return tanh_layer if config.layer_kind == "tanh" else lstm_layer


class Network:
    """Per-direction hidden layer weights plus the shared output layer.

    Also serves as a gradient or velocity buffer via `zeros`. `fields()`
    yields every parameter array as (name, array) in the canonical order:
    directions ascending with each layer's own field order, then output
    weights, then output biases.
    """

    def __init__(self, config, layers, w_out, b_out):
        self.config = config
        self.layers = layers
        self.w_out = w_out
        self.b_out = b_out

    @classmethod
    def initialized(cls, config, rng):
        mod = _layer_module(config)
        layer_cls = mod.TanhWeights if config.layer_kind == "tanh" else mod.LstmWeights
        lcfg = config.layer_config()
        layers = [layer_cls.initialized(lcfg, rng) for _ in range(config.num_directions)]
        K = config.output_width
        width = config.num_directions * config.layer_output_width
        init = tanh_layer.INIT_RANGE
        w_out = rng.uniform(-init, init, (K, width))
        b_out = rng.uniform(-init, init, K)
        return cls(config, layers, w_out, b_out)

    @classmethod
    def zeros(cls, config):
        mod = _layer_module(config)
        layer_cls = mod.TanhWeights if config.layer_kind == "tanh" else mod.LstmWeights
        lcfg = config.layer_config()
        layers = [layer_cls.zeros(lcfg) for _ in range(config.num_directions)]
        K = config.output_width
        width = config.num_directions * config.layer_output_width
        return cls(config, layers, np.zeros((K, width)), np.zeros(K))

    def fields(self):
        out = []
        for d, layer in enumerate(self.layers):
            out += [(f"dir{d}/{name}", arr) for name, arr in layer.fields()]
        out.append(("out/weights", self.w_out))
        out.append(("out/bias", self.b_out))
        return out

    def copy(self):
        clone = Network.zeros(self.config)
        for (_, dst), (_, src) in zip(clone.fields(), self.fields()):
            dst[...] = src
        return clone


class ForwardResult:
    """Everything the backward pass and the metrics need from one forward run."""

    def __init__(self, probs, tapes, hidden):
        self.probs = probs      # SequenceND of per-point class distributions
        self.tapes = tapes      # per-direction tapes, in reflected coordinates
        self.hidden = hidden    # (P, num_directions * layer_output_width)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def network_forward(net, seq):
    """Run every direction's hidden layer and the shared output layer.

    Returns a ForwardResult whose `probs` rows each sum to 1.
    """
    cfg = net.config
    if seq.width != cfg.input_width:
        raise ConfigError(f"network expects input width {cfg.input_width}, got {seq.width}")
    if seq.num_dims != cfg.num_dims:
        raise ConfigError(f"network expects {cfg.num_dims} grid axes, got {seq.num_dims}")
    mod = _layer_module(cfg)
    lcfg = cfg.layer_config()
    P = seq.point_count
    width = cfg.layer_output_width
    hidden = np.empty((P, cfg.num_directions * width))
    tapes = []
    for d in range(cfg.num_directions):
        tape = mod.forward(lcfg, net.layers[d], seq.reflected(d))
        tapes.append(tape)
        # bring the layer's outputs back into unreflected point order
        h_grid = tape.h.reshape(seq.dims + (width,))
        hidden[:, d * width:(d + 1) * width] = reflect_array(
            h_grid, cfg.num_dims, d).reshape(P, width)
    logits = hidden @ net.w_out.T + net.b_out
    probs = softmax(logits)
    return ForwardResult(SequenceND(probs.reshape(seq.dims + (cfg.output_width,))),
                         tapes, hidden)


def backward_from_output(net, seq, fwd, output_delta):
    """Propagate derivatives injected at the pre-softmax outputs.

    `output_delta` is (P, K). Returns (gradient Network, input-gradient
    SequenceND). Useful directly for sensitivity analysis; loss-based
    training goes through `network_backward`.
    """
    cfg = net.config
    mod = _layer_module(cfg)
    lcfg = cfg.layer_config()
    output_delta = np.asarray(output_delta, dtype=np.float64)
    P = seq.point_count
    if output_delta.shape != (P, cfg.output_width):
        raise ValueError(
            f"output deltas shaped {output_delta.shape}, "
            f"expected {(P, cfg.output_width)}"
        )
    grads = Network.zeros(cfg)
    grads.w_out += output_delta.T @ fwd.hidden
    grads.b_out += output_delta.sum(axis=0)
    width = cfg.layer_output_width
    gx_total = np.zeros_like(seq.values)
    for d in range(cfg.num_directions):
        block = net.w_out[:, d * width:(d + 1) * width]
        inject = output_delta @ block  # (P, width), unreflected point order
        inject = reflect_array(inject.reshape(seq.dims + (width,)), cfg.num_dims, d)
        _, layer_grads, gx = mod.backward(
            lcfg, net.layers[d], seq.reflected(d), fwd.tapes[d],
            inject.reshape(P, width))
        for (_, dst), (_, src) in zip(grads.layers[d].fields(), layer_grads.fields()):
            dst += src
        gx_total += reflect_array(gx.values, cfg.num_dims, d)
    return grads, SequenceND(gx_total)


def network_backward(net, seq, fwd, targets):
    """Summed cross-entropy loss and exact gradients for every parameter.

    `targets` is a LabelGrid aligned to `seq`. The derivative of the loss at
    the pre-softmax outputs is softmax minus the one-hot target.
    """
    cfg = net.config
    if targets.dims != seq.dims:
        raise ConfigError(f"targets dims {targets.dims} do not match input dims {seq.dims}")
    if targets.num_classes != cfg.output_width:
        raise ConfigError(
            f"targets have {targets.num_classes} classes, network outputs {cfg.output_width}")
    probs = fwd.probs.flat
    labels = targets.flat
    P = seq.point_count
    loss = -np.log(probs[np.arange(P), labels]).sum()
    output_delta = probs.copy()
    output_delta[np.arange(P), labels] -= 1.0
    grads, _ = backward_from_output(net, seq, fwd, output_delta)
    return grads, float(loss)


def field_group(name):
    """Parameter group of a `fields()` entry: input, recurrent, peephole,
    bias, or output."""
    if name.startswith("out/"):
        return "output"
    field = name.split("/", 1)[1]
    if field.startswith("u_") or field.startswith("w_rec"):
        return "recurrent"
    if field.startswith("p_"):
        return "peephole"
    if field.startswith("w_"):
        return "input"
    if field.startswith("b"):
        return "bias"
    raise AssertionError(f"unclassified parameter field {name}")


def count_parameters(net):
    """Total trainable scalar count plus a breakdown by parameter group."""
    groups = {"input": 0, "recurrent": 0, "peephole": 0, "bias": 0, "output": 0}
    for name, arr in net.fields():
        groups[field_group(name)] += arr.size
    return sum(groups.values()), groups


def parameter_report(net, reference_total=None):
    """Human-readable breakdown, optionally against a documented reference."""
    total, groups = count_parameters(net)
    lines = [f"{k:>10}: {v}" for k, v in groups.items()]
    lines.append(f"{'total':>10}: {total}")
    if reference_total is not None:
        lines.append(f"{'reference':>10}: {reference_total}")
        lines.append(f"{'delta':>10}: {total - reference_total:+d}")
    return "\n".join(lines)


def save_checkpoint(path_or_file, net, rng_info=None):
    """Serialize config, RNG descriptor, and all weights.

    Layout: magic, u32 version, u32 JSON header length, JSON header
    (config + rng descriptor), then every `fields()` array in order as raw
    little-endian float64. Round-trips bit-exactly.
    """
    header = json.dumps(
        {"config": net.config.to_dict(), "rng": rng_info or {}},
        sort_keys=True).encode("utf-8")
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "wb") if own else path_or_file
    try:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for _, arr in net.fields():
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    finally:
        if own:
            f.close()


def load_checkpoint(path_or_file):
    """Inverse of `save_checkpoint`. Returns (Network, rng descriptor dict)."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "rb") if own else path_or_file
    try:
        blob = f.read()
    finally:
        if own:
            f.close()
    if len(blob) < 12:
        raise FormatError("checkpoint truncated before header", offset=len(blob))
    if blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"bad checkpoint magic {blob[:4]!r}", offset=0)
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    if len(blob) < 12 + header_len:
        raise FormatError("checkpoint truncated inside header", offset=len(blob))
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
        config = NetworkConfig.from_dict(header["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable checkpoint header: {exc}", offset=12) from exc
    net = Network.zeros(config)
    offset = 12 + header_len
    for name, arr in net.fields():
        nbytes = arr.size * 8
        if len(blob) < offset + nbytes:
            raise FormatError(f"checkpoint truncated inside field {name}", offset=len(blob))
        arr[...] = np.frombuffer(blob, dtype="<f8", count=arr.size,
                                 offset=offset).reshape(arr.shape)
        offset += nbytes
    if offset != len(blob):
        raise FormatError("trailing bytes after final weight field", offset=offset)
    return net, header.get("rng", {})


def checkpoint_bytes(net, rng_info=None):
    buf = io.BytesIO()
    save_checkpoint(buf, net, rng_info)
    return buf.getvalue()
