"""Introspection tools: input-sensitivity (Jacobian) maps and hidden
activation dumps.

The sensitivity map for output class k at a focus point is the derivative of
that pre-softmax output unit with respect to every input value, obtained by
one backward pass seeded with a single unit delta. Absolute values are
summed over input channels for display.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError
from .grid import flat_index, reflect_array
from .network import backward_from_output, network_forward


@dataclass
class JacobianMap:
    dims: tuple
    values: np.ndarray        # per-point channel-summed absolute derivatives
    focus_point: tuple
    focus_class: int


def jacobian(net, seq, point, class_index):
    """Sensitivity of pre-softmax output `class_index` at `point` to all inputs."""
    cfg = net.config
    point = tuple(int(c) for c in point)
    if len(point) != seq.num_dims or any(
            not 0 <= c < d for c, d in zip(point, seq.dims)):
        raise ConfigError(f"focus point {point} outside grid {seq.dims}")
    if not 0 <= class_index < cfg.output_width:
        raise ConfigError(
            f"class {class_index} out of range for {cfg.output_width} outputs")
    fwd = network_forward(net, seq)
    output_delta = np.zeros((seq.point_count, cfg.output_width))
    output_delta[flat_index(point, seq.dims), class_index] = 1.0
    _, gx = backward_from_output(net, seq, fwd, output_delta)
    values = np.abs(gx.values).sum(axis=-1)
    return JacobianMap(seq.dims, values, point, int(class_index))


def dump_activations(net, seq, units):
    """Per-point activation rasters for selected hidden units.

    `units` is a list of (direction, unit_index) pairs. Rasters come back in
    unreflected point order. Also returns the per-point argmax class raster
    under the key "classes".
    """
    cfg = net.config
    width = cfg.layer_output_width
    for d, u in units:
        if not 0 <= d < cfg.num_directions:
            raise ConfigError(f"direction {d} out of range")
        if not 0 <= u < width:
            raise ConfigError(f"unit {u} out of range for layer width {width}")
    fwd = network_forward(net, seq)
    rasters = {}
    for d, u in units:
        grid = fwd.tapes[d].h[:, u].reshape(seq.dims)
        rasters[f"dir{d}_unit{u}"] = reflect_array(grid, seq.num_dims, d)
    rasters["classes"] = np.argmax(fwd.probs.flat, axis=1).reshape(seq.dims)
    return rasters


def to_gray8(values):
    """Min-max normalize into 8-bit gray; a constant raster maps to all zeros."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return np.zeros(arr.shape, dtype=np.uint8), lo, hi
    scaled = np.rint((arr - lo) / (hi - lo) * 255.0)
    return scaled.astype(np.uint8), lo, hi


def save_gray_png(values, path):
    """Write a 2D array as an 8-bit grayscale PNG; returns (min, max) used."""
    gray, lo, hi = to_gray8(values)
    if gray.ndim != 2:
        raise ConfigError(f"raster output needs a 2D grid, got shape {gray.shape}")
    Image.fromarray(gray, mode="L").save(path)
    return lo, hi


def save_jacobian(jmap, png_path, sidecar_path):
    """Raster plus a sidecar recording focus and normalization constants."""
    lo, hi = save_gray_png(jmap.values, png_path)
    with open(sidecar_path, "w") as f:
        f.write(f"focus_point: {','.join(str(c) for c in jmap.focus_point)}\n")
        f.write(f"focus_class: {jmap.focus_class}\n")
        f.write(f"min: {lo:.17g}\n")
        f.write(f"max: {hi:.17g}\n")
