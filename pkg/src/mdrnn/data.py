"""Dataset ingestion and construction.

Covers the IDX binary container (big-endian header, raw unsigned-byte
payload), per-pixel classification targets for digit images, elastic
deformation for warping robustness tests, seeded dataset splits, and a
generic image+labelmap loader for texture-segmentation style tasks.
"""

import os
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.ndimage import convolve1d, map_coordinates

from .errors import ConfigError, DataError, FormatError
from .grid import LabelGrid, SequenceND

IDX_TYPE_UBYTE = 0x08
NUM_PIXEL_CLASSES = 11
BACKGROUND_CLASS = 10


def read_idx(path):
    """Parse an IDX file into a uint8 array of the advertised shape."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 4:
        raise FormatError(f"{path}: header incomplete", offset=len(blob))
    zero0, zero1, type_code, rank = struct.unpack(">BBBB", blob[:4])
    if zero0 != 0 or zero1 != 0:
        raise FormatError(f"{path}: bad magic prefix {blob[:2]!r}", offset=0)
    if type_code != IDX_TYPE_UBYTE:
        raise FormatError(
            f"{path}: unsupported element type 0x{type_code:02x} "
            f"(only unsigned byte 0x08)", offset=2)
    if rank < 1:
        raise FormatError(f"{path}: rank must be at least 1", offset=3)
    header_end = 4 + 4 * rank
    if len(blob) < header_end:
        raise FormatError(f"{path}: truncated dimension list", offset=len(blob))
    dims = struct.unpack(f">{rank}I", blob[4:header_end])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = blob[header_end:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, "
            f"dimensions {dims} require {expected}",
            offset=header_end + min(len(payload), expected))
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).copy()


def write_idx(path, array):
    """Write a uint8 array as an IDX file (inverse of read_idx, bit-exact)."""
    arr = np.ascontiguousarray(array)
    if arr.dtype != np.uint8:
        raise DataError(f"IDX writer only emits unsigned bytes, got {arr.dtype}")
    with open(path, "wb") as f:
        f.write(struct.pack(">BBBB", 0, 0, IDX_TYPE_UBYTE, arr.ndim))
        f.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes())


def load_images(path):
    """IDX image stack as float64 scaled into [0, 1]."""
    return read_idx(path).astype(np.float64) / 255.0


def load_labels(path):
    return read_idx(path).astype(np.int64)


@dataclass
class PixelTask:
    """One training/evaluation item: per-point inputs and integer targets.

    `digit` is set for digit images (enables whole-image classification) and
    None for generic segmentation pairs.
    """
    input: SequenceND
    labels: LabelGrid
    digit: int | None = None


def build_pixel_targets(image, digit, threshold=0.0, num_classes=NUM_PIXEL_CLASSES):
    """Label every pixel with the image's digit, or background when at or
    below `threshold`. Background is the last class index."""
    if not 0 <= digit < num_classes - 1:
        raise DataError(f"digit {digit} out of range for {num_classes - 1} digit classes")
    if not 0.0 <= threshold < 1.0:
        raise DataError(f"threshold {threshold} must lie in [0, 1)")
    img = np.asarray(image, dtype=np.float64)
    labels = np.where(img > threshold, digit, num_classes - 1)
    return PixelTask(
        input=SequenceND(img[..., np.newaxis]),
        labels=LabelGrid(labels, num_classes),
        digit=int(digit),
    )


@dataclass(frozen=True)
class DeformParams:
    sigma: float  # Gaussian smoothing width, pixels
    alpha: float  # displacement scale, pixels
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")


def _gaussian_kernel(sigma):
    # truncated at 3 sigma and renormalized to sum 1
    radius = int(np.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def displacement_fields(shape, sigma, alpha, rng):
    """Smoothed random displacement fields (dy, dx) for a 2D image.

    Each field starts as independent uniform noise in [-1, 1] per pixel,
    is smoothed with the truncated Gaussian along both axes (zero padding
    outside the image), then scaled by alpha. dx is drawn first.
    """
    kernel = _gaussian_kernel(sigma)

    def field():
        noise = rng.uniform(-1.0, 1.0, shape)
        sm = convolve1d(noise, kernel, axis=0, mode="constant", cval=0.0)
        sm = convolve1d(sm, kernel, axis=1, mode="constant", cval=0.0)
        return sm * alpha

    dx = field()
    dy = field()
    return dy, dx


def elastic_deform(image, params):
    """Warp a 2D image by a seeded smoothed random displacement field.

    Output pixel (i, j) bilinearly samples the input at (i+dy, j+dx);
    samples outside the image are 0. alpha=0 returns the input unchanged.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DataError(f"elastic deformation expects a 2D image, got shape {img.shape}")
    rng = np.random.default_rng(params.seed)
    dy, dx = displacement_fields(img.shape, params.sigma, params.alpha, rng)
    rows, cols = np.meshgrid(
        np.arange(img.shape[0], dtype=np.float64),
        np.arange(img.shape[1], dtype=np.float64),
        indexing="ij")
    return map_coordinates(img, [rows + dy, cols + dx], order=1,
                           mode="constant", cval=0.0)


def deform_image_stack(images, sigma, alpha, seed):
    """Deform every image with a fresh random field derived from one seed.

    `images` is a uint8 (N, H, W) stack; returns the same. Per-image streams
    come from spawning the seed sequence, so results are reproducible and
    independent of processing order.
    """
    if images.dtype != np.uint8 or images.ndim != 3:
        raise DataError("expected a uint8 (N, H, W) image stack")
    children = np.random.SeedSequence(seed).spawn(images.shape[0])
    out = np.empty_like(images)
    for i in range(images.shape[0]):
        rng = np.random.default_rng(children[i])
        dy, dx = displacement_fields(images.shape[1:], sigma, alpha, rng)
        rows, cols = np.meshgrid(
            np.arange(images.shape[1], dtype=np.float64),
            np.arange(images.shape[2], dtype=np.float64),
            indexing="ij")
        warped = map_coordinates(images[i].astype(np.float64) / 255.0,
                                 [rows + dy, cols + dx], order=1,
                                 mode="constant", cval=0.0)
        out[i] = np.rint(np.clip(warped, 0.0, 1.0) * 255.0).astype(np.uint8)
    return out


def split(items, sizes, seed):
    """Seeded shuffle then contiguous partition into disjoint subsets."""
    if sum(sizes) > len(items):
        raise DataError(
            f"split sizes {tuple(sizes)} exceed dataset size {len(items)}")
    perm = np.random.default_rng(seed).permutation(len(items))
    parts = []
    start = 0
    for size in sizes:
        parts.append([items[int(i)] for i in perm[start:start + size]])
        start += size
    return parts


def load_palette(path):
    """Palette file: one `class_index R G B` line per class."""
    palette = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 'class R G B', got {line!r}")
            idx, r, g, b = (int(p) for p in parts)
            palette[(r, g, b)] = idx
    if not palette:
        raise DataError(f"{path}: palette is empty")
    return palette


def load_labelmap_pair(image_path, labelmap_path, palette):
    """RGB image plus color-coded label map -> (inputs in [0,1], class grid)."""
    img = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float64) / 255.0
    lab = np.asarray(Image.open(labelmap_path).convert("RGB"), dtype=np.int64)
    if img.shape[:2] != lab.shape[:2]:
        raise DataError(
            f"image {img.shape[:2]} and labelmap {lab.shape[:2]} differ in size")
    num_classes = max(palette.values()) + 1
    codes = (lab[..., 0] << 16) | (lab[..., 1] << 8) | lab[..., 2]
    labels = np.full(lab.shape[:2], -1, dtype=np.int64)
    for (r, g, b), idx in palette.items():
        labels[codes == ((r << 16) | (g << 8) | b)] = idx
    unknown = np.argwhere(labels < 0)
    if len(unknown):
        i, j = (int(v) for v in unknown[0])
        raise DataError(
            f"{labelmap_path}: color {tuple(int(v) for v in lab[i, j])} "
            f"at pixel ({i}, {j}) is not in the palette")
    return PixelTask(input=SequenceND(img), labels=LabelGrid(labels, num_classes))


def digit_dataset(images, digits, threshold=0.0):
    """PixelTask list from an image stack in [0,1] and per-image digits."""
    return [build_pixel_targets(images[i], int(digits[i]), threshold)
            for i in range(len(images))]


def require_file(path, role):
    if not path:
        raise DataError(f"missing {role} path")
    if not os.path.exists(path):
        raise DataError(f"missing {role} file: {path}")
    return path
