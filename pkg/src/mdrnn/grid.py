"""n-dimensional grid bookkeeping.

A "sequence" here is a rectangular n-dimensional grid of fixed-width value
vectors (an image is a 2D sequence, a video a 3D one). Points are stored
densely in row-major order, so the flat index of a coordinate equals its rank
in the lexicographic scan order. That order guarantees that every
axis-predecessor of a point is visited before the point itself, which is the
property the recurrent layers rely on.

Reflections (one per bitmask over the axes) give the 2^n coordinate systems
used by multi-directional networks: bit i set means axis i runs backwards.
"""

from functools import lru_cache
from itertools import product

import numpy as np

from .errors import ConfigError


def check_dims(dims):
    """Validate and normalize a grid shape to a tuple of positive ints."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 1:
        raise ConfigError("grid must have at least one dimension")
    if any(d < 1 for d in dims):
        raise ConfigError(f"grid dimensions must be positive, got {dims}")
    return dims


def point_count(dims):
    n = 1
    for d in dims:
        n *= int(d)
    return n


def strides(dims):
    """Row-major strides in points (not bytes)."""
    out = [1] * len(dims)
    for i in range(len(dims) - 2, -1, -1):
        out[i] = out[i + 1] * dims[i + 1]
    return tuple(out)


def flat_index(coord, dims):
    """Rank of `coord` in the scan order (= row-major flat index)."""
    idx = 0
    for c, d, s in zip(coord, dims, strides(dims)):
        if not 0 <= c < d:
            raise ConfigError(f"coordinate {tuple(coord)} out of range for shape {dims}")
        idx += c * s
    return idx


def scan_order(dims):
    """Yield every coordinate of the grid exactly once, lexicographically.

    For every emitted coordinate, all its axis-predecessors (same coordinate
    with one component decremented) have already been emitted.
    """
    dims = check_dims(dims)
    return product(*(range(d) for d in dims))


def predecessor(coord, axis):
    """Coordinate one step back along `axis`, or None at the grid boundary."""
    if coord[axis] == 0:
        return None
    c = list(coord)
    c[axis] -= 1
    return tuple(c)


def reflect(coord, dims, direction):
    """Map a coordinate into the axis system of `direction`.

    Bit i of `direction` set means axis i is mirrored: component i becomes
    dims[i]-1-coord[i]. Applying the same reflection twice is the identity.
    """
    n = len(dims)
    if not 0 <= direction < (1 << n):
        raise ConfigError(f"direction {direction} out of range for {n} axes")
    out = []
    for i, (c, d) in enumerate(zip(coord, dims)):
        if not 0 <= c < d:
            raise ConfigError(f"coordinate {tuple(coord)} out of range for shape {dims}")
        out.append(d - 1 - c if (direction >> i) & 1 else c)
    return tuple(out)


def reflect_array(arr, num_grid_axes, direction):
    """Reflect the leading `num_grid_axes` axes of an array per `direction`.

    Trailing axes (channels) are untouched. Returns a C-contiguous copy so
    the result can be handed to the scan kernels.
    """
    index = tuple(
        slice(None, None, -1) if (direction >> i) & 1 else slice(None)
        for i in range(num_grid_axes)
    )
    return np.ascontiguousarray(arr[index])


@lru_cache(maxsize=None)
def predecessor_table(dims):
    """(P, n) int64 table: flat index of each point's predecessor per axis, -1 at boundaries.

    Cached per shape; treat the result as read-only.
    """
    dims = check_dims(dims)
    n = len(dims)
    coords = np.indices(dims).reshape(n, -1)  # (n, P)
    flat = np.arange(point_count(dims), dtype=np.int64)
    table = np.empty((point_count(dims), n), dtype=np.int64)
    for axis, axis_stride in enumerate(strides(dims)):
        pred = flat - axis_stride
        pred[coords[axis] == 0] = -1
        table[:, axis] = pred
    table.flags.writeable = False
    return table


def as_float_grid(values):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("grid values must all be finite")
    return arr


class SequenceND:
    """Dense n-dimensional grid of fixed-width float vectors.

    `values` has shape dims + (width,). Immutable by convention: construct a
    new instance instead of mutating `values` in place.
    """

    __slots__ = ("dims", "width", "values")

    def __init__(self, values):
        arr = as_float_grid(values)
        if arr.ndim < 2:
            raise ConfigError("SequenceND needs at least one grid axis plus a channel axis")
        self.dims = check_dims(arr.shape[:-1])
        self.width = int(arr.shape[-1])
        if self.width < 1:
            raise ConfigError("SequenceND channel width must be positive")
        self.values = arr

    @property
    def num_dims(self):
        return len(self.dims)

    @property
    def point_count(self):
        return point_count(self.dims)

    @property
    def flat(self):
        """(P, width) view in scan order."""
        return self.values.reshape(self.point_count, self.width)

    def reflected(self, direction):
        return SequenceND(reflect_array(self.values, self.num_dims, direction))

    def __repr__(self):
        return f"SequenceND(dims={self.dims}, width={self.width})"


class LabelGrid:
    """Per-point integer class targets aligned to a SequenceND."""

    __slots__ = ("dims", "num_classes", "labels")

    def __init__(self, labels, num_classes):
        arr = np.ascontiguousarray(labels, dtype=np.int64)
        self.dims = check_dims(arr.shape)
        self.num_classes = int(num_classes)
        if self.num_classes < 1:
            raise ConfigError("num_classes must be positive")
        if arr.min() < 0 or arr.max() >= self.num_classes:
            raise ConfigError(
                f"labels must lie in [0, {self.num_classes}), "
                f"got range [{arr.min()}, {arr.max()}]"
            )
        self.labels = arr

    @property
    def flat(self):
        return self.labels.reshape(-1)

    def __repr__(self):
        return f"LabelGrid(dims={self.dims}, num_classes={self.num_classes})"
